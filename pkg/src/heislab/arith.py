"""Elementary multiplicative arithmetic: factorisation, omega, Euler products.

omega(M) counts distinct prime divisors.  euler_product(M) is the exact
rational prod_{p | M} (1 - 1/p), i.e. phi(M)/M; in particular
M * euler_product(M) = phi(M) is always a positive integer.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, Tuple

import numpy as np


def factorize(m: int) -> Dict[int, int]:
    """Prime factorisation by trial division (fine for desk-scale m)."""
    if m < 1:
        raise ValueError(f"positive integer required, got {m}")
    factors: Dict[int, int] = {}
    d = 2
    while d * d <= m:
        while m % d == 0:
            factors[d] = factors.get(d, 0) + 1
            m //= d
        d += 1 if d == 2 else 2
    if m > 1:
        factors[m] = factors.get(m, 0) + 1
    return factors


def omega(m: int) -> int:
    """Number of distinct prime divisors; rejects m < 1."""
    return len(factorize(m))


def euler_product(m: int) -> Fraction:
    """Exact prod_{p | m} (1 - 1/p); the empty product for m = 1 is 1."""
    out = Fraction(1)
    for p in factorize(m):
        out *= Fraction(p - 1, p)
    return out


def euler_phi(m: int) -> int:
    phi = m * euler_product(m)
    assert phi.denominator == 1
    return int(phi)


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    return factorize(p) == {p: 1}


def padic_valuation(x: Fraction, p: int) -> int:
    """v_p of a nonzero rational; raises on 0 (valuation is infinite)."""
    if x == 0:
        raise ValueError("v_p(0) is infinite")
    v = 0
    num, den = x.numerator, x.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


def sieve_omega_phi(limit: int) -> Tuple[np.ndarray, np.ndarray]:
    """Arrays omega[n], phi[n] for 0 <= n <= limit (index 0 unused)."""
    phi = np.arange(limit + 1, dtype=np.int64)
    om = np.zeros(limit + 1, dtype=np.int64)
    for p in range(2, limit + 1):
        if phi[p] == p:  # p is prime
            phi[p::p] -= phi[p::p] // p
            om[p::p] += 1
    return om, phi
