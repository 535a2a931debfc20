"""Order of a rational point, local index counts and elementary bound sweeps.

A rational Heisenberg element w of order n = ord(w) (the least k with
k*w integral) determines, prime by prime, the index of its stabilizer
inside the local unit group acting by scalars: a unit t fixes the class
of w modulo integrality iff (1 - t)w is integral at p, which pins t to
1 mod p^(n_p).  Exhaustive enumeration of units modulo p^(n_p + m_p +
guard) therefore recovers the local count p^(n_p - 1)(p - 1), and the
closed-form product over p | ord(w) is ord(w) * prod (1 - 1/p).

The sweep helpers evaluate l(N) = B^omega(N) * N * prod_{p|N}(1 - 1/p)
and its ratio against N^(1-eps) over a range of N, recording empirical
minima of the two elementary lower-bound quantities.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .arith import euler_product, factorize, is_prime, omega, padic_valuation, sieve_omega_phi
from .groups import HeisenbergElement, integral_order
from .rational import RatVec


class GuardError(RuntimeError):
    """Enumeration modulus guard did not stabilize the local index."""

    def __init__(self, p: int, n: int, m: int):
        super().__init__(f"local index did not stabilize for (p={p}, n={n}, m={m})")
        self.case = (p, n, m)


@dataclass(frozen=True)
class SpecialPointData:
    """Conjugating element w and the level M > 3 (even)."""

    w: HeisenbergElement
    level: int

    def __post_init__(self):
        if self.level <= 3 or self.level % 2 != 0:
            raise ValueError("level must be an even integer > 3")


@dataclass(frozen=True)
class LocalIndexCase:
    """One prime with n = v_p(ord(w)) >= 1 and m = v_p(level) >= 0."""

    p: int
    n: int
    m: int

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")
        if self.n < 1 or self.m < 0:
            raise ValueError("need n >= 1 and m >= 0")


def order_of_special_point(s: SpecialPointData) -> int:
    """The order N(s) = ord(w): least k >= 1 with k*w integral."""
    return integral_order(s.w)


def _local_requirement(case: LocalIndexCase, u: RatVec, v: RatVec,
                       psi_vv: RatVec) -> int:
    """Smallest e such that t = 1 mod p^e makes (1-t)w integral at p.

    The pairing correction Psi(v, v - t v) = (1 - t) Psi(v, v) is
    evaluated exactly and folded into the U-coordinates.
    """
    p = case.p
    need = 0
    for coord, corr in list(zip(u.entries, psi_vv.entries)):
        total = coord + corr
        if total != 0:
            need = max(need, -padic_valuation(total, p))
    for coord in v.entries:
        if coord != 0:
            need = max(need, -padic_valuation(coord, p))
    return max(need, 0)


def _enumerate_index(p: int, modulus_exp: int, requirement: int) -> int:
    """Index of the stabilizer among all units modulo p^modulus_exp."""
    modulus = p ** modulus_exp
    t = np.arange(modulus, dtype=np.int64)
    units = (t % p) != 0
    stab = units & ((t - 1) % (p ** requirement) == 0)
    n_units = int(np.count_nonzero(units))
    n_stab = int(np.count_nonzero(stab))
    if n_stab == 0:
        raise ArithmeticError("stabilizer enumeration came up empty")
    if n_units % n_stab != 0:
        raise ArithmeticError("stabilizer does not divide the unit group")
    return n_units // n_stab


def local_index_bruteforce(case: LocalIndexCase, u: RatVec, v: RatVec,
                           psi_vv: RatVec = None, guard: int = 2) -> int:
    """Local unit-orbit index of w = (u, v) at p, by exhaustive enumeration.

    Enumerates units modulo p^(n + m + guard) and counts the subgroup
    whose scalar action fixes w modulo integral vectors; the returned
    index is the cardinality of the orbit.  The guard is doubled once
    if the index has not stabilized, after which GuardError is raised.
    """
    u = u if isinstance(u, RatVec) else RatVec(u)
    v = v if isinstance(v, RatVec) else RatVec(v)
    if psi_vv is None:
        psi_vv = RatVec.zero(len(u))
    max_den_val = 0
    for coord in list(u.entries) + list(v.entries):
        if coord != 0:
            max_den_val = max(max_den_val, -padic_valuation(coord, case.p))
    if max_den_val != case.n:
        raise ValueError(
            f"w has exact p-adic valuation -{max_den_val}, case says -{case.n}")
    requirement = _local_requirement(case, u, v, psi_vv)
    idx = _enumerate_index(case.p, case.n + case.m + guard, requirement)
    check = _enumerate_index(case.p, case.n + case.m + guard + 1, requirement)
    if idx != check:
        guard *= 2
        idx = _enumerate_index(case.p, case.n + case.m + guard, requirement)
        check = _enumerate_index(case.p, case.n + case.m + guard + 1, requirement)
        if idx != check:
            raise GuardError(case.p, case.n, case.m)
    return idx


def index_lower_bound(s: SpecialPointData) -> Fraction:
    """Exact ord(w) * prod_{p | ord(w)} (1 - 1/p)."""
    n = order_of_special_point(s)
    return n * euler_product(n)


def local_cases(s: SpecialPointData) -> List[LocalIndexCase]:
    n = order_of_special_point(s)
    return [
        LocalIndexCase(p, e, _valuation_or_zero(s.level, p))
        for p, e in sorted(factorize(n).items())
    ]


def _valuation_or_zero(m: int, p: int) -> int:
    v = 0
    while m % p == 0:
        m //= p
        v += 1
    return v


def cross_check_index(s: SpecialPointData, guard: int = 2) -> Tuple[Fraction, int]:
    """(closed form, product of local brute-force counts); they must agree."""
    closed = index_lower_bound(s)
    datum = s.w.datum
    psi_vv = datum.pairing(s.w.v, s.w.v)
    product = 1
    for case in local_cases(s):
        product *= local_index_bruteforce(case, s.w.u, s.w.v, psi_vv, guard=guard)
    return closed, product


def orbit_bound_factor(n: int, b: float, eps: float) -> Tuple[float, float]:
    """(l(N), l(N) / N^(1-eps)) with l(N) = B^omega(N) * N * prod(1 - 1/p)."""
    if n < 1:
        raise ValueError("N must be >= 1")
    if not (0.0 < b < 1.0):
        raise ValueError("B must lie in (0, 1)")
    if not (0.0 < eps < 1.0):
        raise ValueError("eps must lie in (0, 1)")
    ell = (b ** omega(n)) * float(n * euler_product(n))
    return ell, ell / (n ** (1.0 - eps))


@dataclass(frozen=True)
class SweepSummary:
    """Empirical minima of the sweep quantities over 1 <= N <= n_max."""

    n_max: int
    b: float
    eps: float
    min_ratio: float
    argmin_ratio: int
    min_b_pow_n_eps: float
    argmin_b_pow_n_eps: int
    min_eps_euler: float
    argmin_eps_euler: int

    def to_json(self) -> dict:
        return {
            "n_max": self.n_max,
            "B": self.b,
            "eps": self.eps,
            "empirical_C_eps": self.min_ratio,
            "argmin_C_eps": self.argmin_ratio,
            "min_B^omega*N^eps": self.min_b_pow_n_eps,
            "argmin_B^omega*N^eps": self.argmin_b_pow_n_eps,
            "min_N^eps*eulerprod": self.min_eps_euler,
            "argmin_N^eps*eulerprod": self.argmin_eps_euler,
        }


def sweep_orbit_bound(n_max: int, b: float, eps: float):
    """Vectorized sweep of l(N), the ratio and the two elementary minima.

    Returns (ns, omegas, euler_floats, ells, ratios, SweepSummary); the
    minima are attained at the smallest N on ties (argmin convention).
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if not (0.0 < b < 1.0) or not (0.0 < eps < 1.0):
        raise ValueError("B and eps must lie in (0, 1)")
    om, phi = sieve_omega_phi(n_max)
    ns = np.arange(1, n_max + 1, dtype=np.int64)
    om = om[1:]
    phi = phi[1:]
    euler = phi.astype(np.float64) / ns.astype(np.float64)
    ells = (b ** om) * phi.astype(np.float64)
    ratios = ells / ns.astype(np.float64) ** (1.0 - eps)
    b_pow_n_eps = (b ** om) * ns.astype(np.float64) ** eps
    eps_euler = ns.astype(np.float64) ** eps * euler
    summary = SweepSummary(
        n_max=n_max,
        b=b,
        eps=eps,
        min_ratio=float(ratios.min()),
        argmin_ratio=int(ns[int(np.argmin(ratios))]),
        min_b_pow_n_eps=float(b_pow_n_eps.min()),
        argmin_b_pow_n_eps=int(ns[int(np.argmin(b_pow_n_eps))]),
        min_eps_euler=float(eps_euler.min()),
        argmin_eps_euler=int(ns[int(np.argmin(eps_euler))]),
    )
    return ns, om, euler, ells, ratios, summary
