"""Realized homogeneous space U(C) x V(R) x H and fundamental-set reduction.

Points carry a complex U-part, a real V-part and (for g = 1) an
upper-half-plane coordinate tau.  Rational group elements act by

    (u, v, m) . (u', v', x) = (u + m.u' + Psi(v, m v')/2,  v + m v',  m.x),

where m acts on the pure part by Moebius transformation (g = 1) and on
the U-part through the similitude multiplier or trivially, matching the
ambient datum.  The fundamental set is the product of the open strip
{-1 < Re s < 1} per U-coordinate, the half-open box [0, N)^(2g) and the
closed standard modular domain {|Re tau| <= 1/2, |tau| >= 1}.

Reduction into the fundamental set performs a level-1 modular reduction
on tau, then translates the V-part by multiples of N and the U-part by
integers; the returned group element is exact and the reduced point is
recomputed as act(gamma, x) in one shot.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .groups import GroupElement, SymplecticDatum, U_ACTION_NU, p_mul
from .rational import RatMat, RatVec

SL2_MAX_STEPS = 10_000
IM_UNDERFLOW = 1e-200


class ReductionError(RuntimeError):
    """Modular reduction failed to converge (numeric degeneracy)."""


class InvalidDomainElement(ValueError):
    """Group element does not preserve the realized space."""


class DomainPoint:
    """Point of the realized space: complex u, real v, tau in H (g = 1)."""

    __slots__ = ("datum", "u", "v", "tau")

    def __init__(self, datum: SymplecticDatum, u: Sequence[complex],
                 v: Sequence[float], tau: Optional[complex] = None):
        if datum.g > 1:
            raise ValueError("pure part is only realized for g <= 1")
        u = tuple(complex(z) for z in u)
        v = tuple(float(x) for x in v)
        if len(u) != datum.r or len(v) != datum.dim_v:
            raise ValueError("coordinate shapes do not match the datum")
        if datum.g == 1:
            if tau is None:
                raise ValueError("tau required for g = 1")
            tau = complex(tau)
            if not (math.isfinite(tau.real) and math.isfinite(tau.imag)):
                raise ValueError("tau must be finite")
            if tau.imag <= 0:
                raise ValueError("tau must lie in the upper half plane")
        else:
            tau = None
        if not all(math.isfinite(z.real) and math.isfinite(z.imag) for z in u):
            raise ValueError("u must be finite")
        if not all(math.isfinite(x) for x in v):
            raise ValueError("v must be finite")
        object.__setattr__(self, "datum", datum)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "tau", tau)

    def __setattr__(self, name, value):
        raise AttributeError("DomainPoint is immutable")

    def __repr__(self) -> str:
        return f"DomainPoint(u={self.u}, v={self.v}, tau={self.tau})"

    def to_json(self) -> dict:
        out = {
            "u": [[z.real, z.imag] for z in self.u],
            "v": list(self.v),
        }
        if self.tau is not None:
            out["tau"] = [self.tau.real, self.tau.imag]
        return out

    @classmethod
    def from_json(cls, datum: SymplecticDatum, data: dict) -> "DomainPoint":
        u = [complex(re, im) for re, im in data.get("u", [])]
        v = data.get("v", [])
        tau = data.get("tau")
        if tau is not None:
            tau = complex(tau[0], tau[1])
        return cls(datum, u, v, tau)


def _psi_float(datum: SymplecticDatum, v: Sequence[float], w: Sequence[complex]) -> List[complex]:
    out = []
    for m in datum.psi:
        rows = m.to_floats()
        acc = 0j
        for i, vi in enumerate(v):
            if vi:
                acc += vi * sum(rows[i][j] * w[j] for j in range(len(w)))
        out.append(acc)
    return out


def act(gamma: GroupElement, x: DomainPoint) -> DomainPoint:
    """Apply a rational group element to a point of the realized space.

    Requires nu(gamma) > 0 so the pure part stays in the upper half
    plane; raises InvalidDomainElement if the transformed tau leaves it.
    """
    datum = x.datum
    if gamma.datum != datum:
        raise ValueError("datum mismatch")
    if gamma.nu <= 0:
        raise InvalidDomainElement("similitude multiplier must be positive")
    mf = gamma.m.to_floats()
    n = datum.dim_v
    mv = tuple(sum(mf[i][j] * x.v[j] for j in range(n)) for i in range(n))
    gv = tuple(float(a) + b for a, b in zip(gamma.v.to_floats(), mv))
    if datum.u_action == U_ACTION_NU:
        mu = [float(gamma.nu) * z for z in x.u]
    else:
        mu = list(x.u)
    half_psi = _psi_float(datum, gamma.v.to_floats(), mv)
    gu = tuple(float(a) + b + 0.5 * c for a, b, c in zip(gamma.u.to_floats(), mu, half_psi))
    tau = x.tau
    if datum.g == 1:
        a, b = float(gamma.m[0, 0]), float(gamma.m[0, 1])
        c, d = float(gamma.m[1, 0]), float(gamma.m[1, 1])
        denom = c * tau + d
        if denom == 0:
            raise InvalidDomainElement("Moebius transform undefined at tau")
        tau = (a * tau + b) / denom
        if tau.imag <= 0:
            raise InvalidDomainElement("transformed tau left the upper half plane")
    return DomainPoint(datum, gu, gv, tau)


@dataclass(frozen=True)
class FundamentalSet:
    """Strip^r x [0, N)^(2g) x standard modular domain, with boundary conventions."""

    datum: SymplecticDatum
    level: int = None

    def __post_init__(self):
        n = self.datum.level if self.level is None else self.level
        if n <= 3 or n % 2 != 0:
            raise ValueError("level must be an even integer > 3")
        object.__setattr__(self, "level", n)

    def contains(self, x: DomainPoint) -> bool:
        return in_fundamental_set(x, self.level)


def in_fundamental_set(x: DomainPoint, level: int = None) -> bool:
    """Membership test: U-part open, V-part half-open, G-part closed."""
    n = x.datum.level if level is None else level
    for z in x.u:
        if not (-1.0 < z.real < 1.0):
            return False
    for c in x.v:
        if not (0.0 <= c < n):
            return False
    if x.datum.g == 1:
        tau = x.tau
        if abs(tau.real) > 0.5 or abs(tau) < 1.0:
            return False
    return True


def sl2_reduce(tau: complex, max_steps: int = SL2_MAX_STEPS) -> List[List[int]]:
    """Level-1 reduction of tau into the closed standard modular domain.

    Returns an integral matrix [[a, b], [c, d]] of determinant 1 whose
    Moebius action maps tau into {|Re| <= 1/2, |tau| >= 1}.  Points
    already inside come back with the identity.
    """
    a, b, c, d = 1, 0, 0, 1
    z = complex(tau)
    if z.imag <= 0:
        raise ReductionError("tau is not in the upper half plane")
    for _ in range(max_steps):
        if z.imag < IM_UNDERFLOW:
            raise ReductionError("imaginary part underflow during reduction")
        shift = round(z.real)
        if shift != 0:
            z -= shift
            a, b = a - shift * c, b - shift * d
        if abs(z) < 1.0 - 1e-15:
            z = -1.0 / z
            a, b, c, d = -c, -d, a, b
        else:
            return [[a, b], [c, d]]
    raise ReductionError(f"modular reduction did not converge in {max_steps} steps")


def reduce_point(x: DomainPoint, level: int = None) -> Tuple[GroupElement, DomainPoint]:
    """Reduce a point into the fundamental set.

    Returns (gamma, y) with y = act(gamma, x) inside the fundamental
    set.  The V-translation lies in N*Z^(2g); the pure part is reduced
    at level 1 and the U-strip is reached by integer translations (the
    strip has width 2, so level-N translations cannot cover it).
    """
    datum = x.datum
    n = datum.level if level is None else level
    if n <= 3 or n % 2 != 0:
        raise ValueError("level must be an even integer > 3")
    dim_v = datum.dim_v

    if datum.g == 1:
        m_rows = sl2_reduce(x.tau)
    else:
        m_rows = [[1 if i == j else 0 for j in range(dim_v)] for i in range(dim_v)]
    m_elt = GroupElement(datum, RatVec.zero(datum.r), RatVec.zero(dim_v), RatMat(m_rows, ncols=dim_v))
    y1 = act(m_elt, x)

    k = [math.floor(c / n) for c in y1.v]
    gamma_v = RatVec([-n * ki for ki in k])
    v_elt = GroupElement(datum, RatVec.zero(datum.r), gamma_v, RatMat.identity(dim_v))
    y2 = act(v_elt, y1)

    gamma_u = []
    for z in y2.u:
        if -1.0 < z.real < 1.0:
            gamma_u.append(0)
        else:
            gamma_u.append(-round(z.real))
    u_elt = GroupElement(datum, RatVec(gamma_u), RatVec.zero(dim_v), RatMat.identity(dim_v))
    y = act(u_elt, y2)

    gamma = p_mul(u_elt, p_mul(v_elt, m_elt))
    return gamma, y


def reduction_residual(gamma: GroupElement, x: DomainPoint, y: DomainPoint) -> float:
    """Sup-norm distance between act(gamma, x) and the reduced point y."""
    z = act(gamma, x)
    out = 0.0
    for a, b in zip(z.u, y.u):
        out = max(out, abs(a - b))
    for a, b in zip(z.v, y.v):
        out = max(out, abs(a - b))
    if z.tau is not None:
        out = max(out, abs(z.tau - y.tau))
    return out


def reduction_translation_height(gamma: GroupElement, level: int = None) -> int:
    """Height of the V-translation in the basis of the level-N lattice.

    The reducing V-part is a vector in N*Z^(2g); its height as a lattice
    element is the largest coefficient in the basis N*e_i.
    """
    n = gamma.datum.level if level is None else level
    out = 0
    for a in gamma.v:
        q = a / n
        if q.denominator != 1:
            raise ValueError("V-part is not in the level-N lattice")
        out = max(out, abs(int(q)))
    return out
