"""Heisenberg-type central extensions and symplectic similitude groups.

The ambient data is a tuple (g, r, Psi, N): V = Q^(2g), U = Q^r, and Psi
a list of r alternating 2g x 2g integer matrices defining the pairing
Psi: V x V -> U.  W = U x V carries the central-extension law

    (u, v) (u', v') = (u + u' + Psi(v, v')/2,  v + v'),

and the full group is the semidirect product P = W x| GSp_2g, where a
similitude m acts on V as a matrix and on U either trivially or through
its multiplier nu(m) (the Siegel-type default).  All arithmetic is exact
over Q.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Optional, Sequence, Tuple

from .rational import RatMat, RatVec, as_rat, mat_from_json, mat_to_json, vec_from_json, vec_to_json

U_ACTION_NU = "nu"
U_ACTION_TRIVIAL = "trivial"


class NotASimilitude(ValueError):
    """Raised when a matrix does not rescale the symplectic form."""


class DatumMismatch(ValueError):
    """Raised when elements of different ambient data are combined."""


def standard_symplectic_form(g: int) -> RatMat:
    """The block form J with Psi(e_i, e_{g+i}) = 1: J = [[0, I], [-I, 0]]."""
    n = 2 * g
    rows = [[0] * n for _ in range(n)]
    for i in range(g):
        rows[i][g + i] = 1
        rows[g + i][i] = -1
    return RatMat(rows, ncols=n)


@dataclass(frozen=True)
class SymplecticDatum:
    """Static arena (g, r, Psi, N) every group element lives in.

    For r = 1 the default pairing is the standard nondegenerate form;
    u_action selects how similitudes act on U ("nu" rescales by the
    multiplier, "trivial" fixes U pointwise and is the right choice for
    commutative data with Psi = 0).
    """

    g: int
    r: int = 1
    psi: Tuple[RatMat, ...] = None
    level: int = 4
    u_action: str = U_ACTION_NU

    def __post_init__(self):
        if self.g < 0 or self.r < 0:
            raise ValueError("g and r must be nonnegative")
        if self.level <= 3 or self.level % 2 != 0:
            raise ValueError("level must be an even integer > 3")
        if self.u_action not in (U_ACTION_NU, U_ACTION_TRIVIAL):
            raise ValueError(f"unknown u_action {self.u_action!r}")
        psi = self.psi
        if psi is None:
            if self.r == 1:
                psi = (standard_symplectic_form(self.g),)
            elif self.r == 0:
                psi = ()
            else:
                raise ValueError("explicit Psi matrices required for r > 1")
        psi = tuple(m if isinstance(m, RatMat) else RatMat(m) for m in psi)
        if len(psi) != self.r:
            raise ValueError(f"need {self.r} Psi matrices, got {len(psi)}")
        n = 2 * self.g
        for m in psi:
            if m.shape != (n, n):
                raise ValueError(f"Psi matrix shape {m.shape}, expected {(n, n)}")
            if m.transpose() != -m:
                raise ValueError("Psi matrices must be alternating")
        if self.r == 1 and self.g >= 1 and psi[0].det() == 0:
            raise ValueError("the single Psi form must be nondegenerate for g >= 1")
        object.__setattr__(self, "psi", psi)

    @property
    def dim_v(self) -> int:
        return 2 * self.g

    def pairing(self, v: RatVec, w: RatVec) -> RatVec:
        """Psi(v, w) in U = Q^r."""
        return RatVec(v.dot(m.apply(w)) for m in self.psi)

    def is_commutative(self) -> bool:
        """W is commutative exactly when every Psi matrix vanishes."""
        return all(all(a == 0 for row in m.entries for a in row) for m in self.psi)


def is_commutative(datum: SymplecticDatum) -> bool:
    return datum.is_commutative()


def similitude(m: RatMat, form: RatMat = None) -> Fraction:
    """The multiplier nu with m^T J m = nu J; raises NotASimilitude otherwise.

    For g = 0 (empty matrix) the multiplier is 1 by convention.
    """
    if not m.is_square():
        raise NotASimilitude("similitudes are square matrices")
    n = m.nrows
    if n == 0:
        return Fraction(1)
    if n % 2 != 0:
        raise NotASimilitude("similitudes have even size")
    if form is None:
        form = standard_symplectic_form(n // 2)
    lhs = m.transpose() @ form @ m
    nu: Optional[Fraction] = None
    for i in range(n):
        for j in range(n):
            f = form[i, j]
            if f != 0:
                cand = lhs[i, j] / f
                if nu is None:
                    nu = cand
                elif cand != nu:
                    raise NotASimilitude("m^T J m is not a scalar multiple of J")
            elif lhs[i, j] != 0:
                raise NotASimilitude("m^T J m is not a scalar multiple of J")
    if nu is None or nu == 0:
        raise NotASimilitude("zero multiplier")
    return nu


class HeisenbergElement:
    """Exact rational point (u, v) of W = U x V."""

    __slots__ = ("datum", "u", "v")

    def __init__(self, datum: SymplecticDatum, u, v):
        u = u if isinstance(u, RatVec) else RatVec(u)
        v = v if isinstance(v, RatVec) else RatVec(v)
        if len(u) != datum.r or len(v) != datum.dim_v:
            raise ValueError(
                f"shape mismatch: u has {len(u)} (want {datum.r}), "
                f"v has {len(v)} (want {datum.dim_v})"
            )
        object.__setattr__(self, "datum", datum)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    def __setattr__(self, name, value):
        raise AttributeError("HeisenbergElement is immutable")

    @classmethod
    def zero(cls, datum: SymplecticDatum) -> "HeisenbergElement":
        return cls(datum, RatVec.zero(datum.r), RatVec.zero(datum.dim_v))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, HeisenbergElement)
            and self.datum == other.datum
            and self.u == other.u
            and self.v == other.v
        )

    def __hash__(self) -> int:
        return hash((self.u, self.v))

    def __repr__(self) -> str:
        return f"HeisenbergElement(u={list(map(str, self.u))}, v={list(map(str, self.v))})"

    def is_zero(self) -> bool:
        return self.u.is_zero() and self.v.is_zero()


def _check_datum(a, b) -> None:
    if a.datum != b.datum:
        raise DatumMismatch("elements live in different ambient data")


def w_mul(a: HeisenbergElement, b: HeisenbergElement) -> HeisenbergElement:
    """(u,v)(u',v') = (u + u' + Psi(v,v')/2, v + v')."""
    _check_datum(a, b)
    half_psi = a.datum.pairing(a.v, b.v).scale(Fraction(1, 2))
    return HeisenbergElement(a.datum, a.u + b.u + half_psi, a.v + b.v)


def w_inv(a: HeisenbergElement) -> HeisenbergElement:
    """(u,v)^-1 = (-u,-v): Psi(v,-v) = 0, so no correction term."""
    return HeisenbergElement(a.datum, -a.u, -a.v)


def w_commutator(a: HeisenbergElement, b: HeisenbergElement) -> HeisenbergElement:
    """[a, b] = a b a^-1 b^-1 = (Psi(v_a, v_b), 0)."""
    return w_mul(w_mul(a, b), w_inv(w_mul(b, a)))


def integral_order(w: HeisenbergElement) -> int:
    """Smallest k >= 1 with k*w integral: lcm of all coordinate denominators."""
    return lcm(w.u.denominator_lcm(), w.v.denominator_lcm())


class GroupElement:
    """Exact rational point (u, v, m) of P = W x| GSp_2g.

    The matrix part must be a symplectic similitude; its multiplier is
    computed and cached at construction.
    """

    __slots__ = ("datum", "u", "v", "m", "nu")

    def __init__(self, datum: SymplecticDatum, u, v, m):
        u = u if isinstance(u, RatVec) else RatVec(u)
        v = v if isinstance(v, RatVec) else RatVec(v)
        m = m if isinstance(m, RatMat) else RatMat(m, ncols=datum.dim_v)
        if len(u) != datum.r or len(v) != datum.dim_v:
            raise ValueError("shape mismatch for (u, v)")
        if m.shape != (datum.dim_v, datum.dim_v):
            raise ValueError(f"matrix shape {m.shape}, expected square of size {datum.dim_v}")
        form = datum.psi[0] if datum.r >= 1 and datum.g >= 1 else None
        nu = similitude(m, form)
        object.__setattr__(self, "datum", datum)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "nu", nu)

    def __setattr__(self, name, value):
        raise AttributeError("GroupElement is immutable")

    @classmethod
    def identity(cls, datum: SymplecticDatum) -> "GroupElement":
        return cls(datum, RatVec.zero(datum.r), RatVec.zero(datum.dim_v),
                   RatMat.identity(datum.dim_v))

    @classmethod
    def from_w(cls, w: HeisenbergElement) -> "GroupElement":
        return cls(w.datum, w.u, w.v, RatMat.identity(w.datum.dim_v))

    def w_part(self) -> HeisenbergElement:
        return HeisenbergElement(self.datum, self.u, self.v)

    def act_on_u(self, u: RatVec) -> RatVec:
        """Action of the matrix part on U: by nu, or trivial."""
        if self.datum.u_action == U_ACTION_NU:
            return u.scale(self.nu)
        return u

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, GroupElement)
            and self.datum == other.datum
            and self.u == other.u
            and self.v == other.v
            and self.m == other.m
        )

    def __hash__(self) -> int:
        return hash((self.u, self.v, self.m))

    def __repr__(self) -> str:
        return (
            f"GroupElement(u={list(map(str, self.u))}, v={list(map(str, self.v))}, "
            f"m={[[str(a) for a in row] for row in self.m.entries]})"
        )

    def is_identity(self) -> bool:
        return (
            self.u.is_zero() and self.v.is_zero()
            and self.m == RatMat.identity(self.datum.dim_v)
        )


def p_mul(a: GroupElement, b: GroupElement) -> GroupElement:
    """Semidirect law: (w_a, m_a)(w_b, m_b) = (w_a * m_a(w_b), m_a m_b)."""
    _check_datum(a, b)
    datum = a.datum
    gu = a.act_on_u(b.u)
    gv = a.m.apply(b.v)
    half_psi = datum.pairing(a.v, gv).scale(Fraction(1, 2))
    return GroupElement(datum, a.u + gu + half_psi, a.v + gv, a.m @ b.m)


def p_inv(a: GroupElement) -> GroupElement:
    """(w, m)^-1 = (m^-1(w^-1), m^-1)."""
    m_inv = a.m.inverse()
    if a.datum.u_action == U_ACTION_NU:
        u_inv = (-a.u).scale(1 / a.nu)
    else:
        u_inv = -a.u
    return GroupElement(a.datum, u_inv, m_inv.apply(-a.v), m_inv)


def p_pow(a: GroupElement, k: int) -> GroupElement:
    out = GroupElement.identity(a.datum)
    base = a if k >= 0 else p_inv(a)
    for _ in range(abs(k)):
        out = p_mul(out, base)
    return out


def in_congruence_subgroup(x: GroupElement, level: int = None) -> bool:
    """Membership in Gamma_W(N) x| Gamma_GSp(N).

    Requires m integral and congruent to 1 mod N with multiplier 1,
    u in N*Z^r and v in N*Z^(2g).  N must be an even integer > 3.
    """
    n = x.datum.level if level is None else level
    if n <= 3 or n % 2 != 0:
        raise ValueError("level must be an even integer > 3")
    if not (x.u.scale(Fraction(1, n)).is_integral() and x.v.scale(Fraction(1, n)).is_integral()):
        return False
    if not x.m.is_integral():
        return False
    if x.nu != 1:
        return False
    ident = RatMat.identity(x.datum.dim_v)
    diff = x.m - ident
    return diff.scale(Fraction(1, n)).is_integral()


def element_to_json(x) -> dict:
    """Exact JSON form with "num/den" strings; round-trips bit-for-bit."""
    if isinstance(x, HeisenbergElement):
        return {"u": vec_to_json(x.u), "v": vec_to_json(x.v)}
    if isinstance(x, GroupElement):
        return {"u": vec_to_json(x.u), "v": vec_to_json(x.v), "m": mat_to_json(x.m)}
    raise TypeError(f"cannot serialise {type(x).__name__}")


def element_from_json(datum: SymplecticDatum, data: dict):
    u = vec_from_json(data["u"], datum.r)
    v = vec_from_json(data["v"], datum.dim_v)
    if "m" in data:
        m = mat_from_json(data["m"], (datum.dim_v, datum.dim_v))
        return GroupElement(datum, u, v, m)
    return HeisenbergElement(datum, u, v)
