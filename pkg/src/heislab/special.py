"""Weakly special classification in fibers: stabilizers, subtori, Psi tests.

Exact machinery over Q:
  * translation stabilizers of graph curves (a, b) with p(t+a) = p(t)+b,
  * smallest subtorus through monodromy generators (lattice saturation),
  * smallest complex-structure-stable subspace (J-closure, then saturate),
  * the weakly special criterion for a candidate orbit in a fiber: the
    V-part must be J-stable and Psi(V_0, z_V) must land in the span cut
    out by the U-part (zero when the U-part is trivial),
  * half-Psi integrality of a base point against a U-lattice.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .curves import ParamCurve, Qi, poly_shift, translation_to_complex
from .groups import SymplecticDatum
from .lattices import Lattice, lattice_from_rational_rows
from .rational import RatMat, RatVec, as_rat


def _rref(rows: List[List[Fraction]]) -> List[List[Fraction]]:
    """Reduced row echelon form over Q; zero rows dropped."""
    rows = [list(r) for r in rows if any(x != 0 for x in r)]
    if not rows:
        return []
    ncols = len(rows[0])
    rank = 0
    for j in range(ncols):
        pivot = next((i for i in range(rank, len(rows)) if rows[i][j] != 0), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        inv = 1 / rows[rank][j]
        rows[rank] = [x * inv for x in rows[rank]]
        for i in range(len(rows)):
            if i != rank and rows[i][j] != 0:
                f = rows[i][j]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[rank])]
        rank += 1
        if rank == len(rows):
            break
    return [r for r in rows[:rank] if any(x != 0 for x in r)]


def _in_span(rows: List[List[Fraction]], vec: List[Fraction]) -> bool:
    if all(x == 0 for x in vec):
        return True
    before = _rref(rows)
    after = _rref(before + [list(vec)])
    return len(after) == len(before)


class NotGraphCurve(ValueError):
    """Exact stabilizers require graph form (t, p_2(t), ..., p_k(t))."""


@dataclass(frozen=True)
class TranslationStabilizer:
    """The group {(a, b) : p_i(t + a) = p_i(t) + b_i for all i}.

    For curves whose trailing components are all affine this is the line
    a |-> (a, c_2 a, ..., c_k a) spanned by `direction`; any component of
    degree >= 2 forces the trivial group.  `contains` is the exact
    polynomial-identity membership test for a concrete ambient vector.
    When the curve is not in graph form the test falls back to a sampled
    Hausdorff comparison and `approximate` is set.
    """

    curve: ParamCurve
    direction: Optional[Tuple[Qi, ...]]
    approximate: bool = False

    def is_trivial(self) -> bool:
        return self.direction is None

    def family_description(self) -> str:
        if self.approximate:
            return "numeric fallback (non-graph curve)"
        if self.direction is None:
            return "trivial"
        return "line spanned by (" + ", ".join(repr(c) for c in self.direction) + ")"

    def contains_translation(self, delta: Sequence[Qi]) -> bool:
        """Exact test that the ambient translation delta maps the curve to itself."""
        delta = [Qi.coerce(d) for d in delta]
        if len(delta) != self.curve.k:
            raise ValueError("translation length mismatch")
        if self.approximate:
            return self._numeric_contains(delta)
        a = delta[0]
        for comp, b in zip(self.curve.components, delta):
            shifted = poly_shift(comp, a)
            target = list(comp)
            if target:
                target[0] = target[0] + b
            else:
                target = [b]
            shifted = list(shifted)
            n = max(len(shifted), len(target))
            shifted += [Qi(0, 0)] * (n - len(shifted))
            target += [Qi(0, 0)] * (n - len(target))
            if any(s != t for s, t in zip(shifted, target)):
                return False
        return True

    def contains_lattice_vector(self, delta: Sequence[int]) -> bool:
        return self.contains_translation(translation_to_complex(self.curve, delta))

    def _numeric_contains(self, delta: Sequence[Qi], samples: int = 64, tol: float = 1e-6) -> bool:
        # One-sided Hausdorff distance of (curve + delta) samples against
        # a denser curve sampling; approximate by construction.
        if self.curve.param == "real":
            ts = np.linspace(-3.0, 3.0, samples).astype(np.complex128)
            dense = np.linspace(-4.0, 4.0, samples * 16).astype(np.complex128)
        else:
            grid = np.linspace(-2.0, 2.0, int(samples ** 0.5) + 1)
            xs, ys = np.meshgrid(grid, grid)
            ts = (xs + 1j * ys).ravel()
            grid2 = np.linspace(-3.0, 3.0, 4 * len(grid))
            xs2, ys2 = np.meshgrid(grid2, grid2)
            dense = (xs2 + 1j * ys2).ravel()
        pts = np.stack(self.curve.eval_many(ts), axis=-1)
        ref = np.stack(self.curve.eval_many(dense), axis=-1)
        dvec = np.array([d.to_complex() for d in delta])
        shifted = pts + dvec
        for row in shifted:
            if np.min(np.abs(ref - row).max(axis=-1)) > tol:
                return False
        return True


def translation_stabilizer(curve: ParamCurve, allow_numeric: bool = True) -> TranslationStabilizer:
    """Translation stabilizer of a graph curve, exactly.

    Affine components give the one-parameter family (a, c_2 a, ...);
    any component of degree >= 2 collapses it to the trivial group.
    """
    if not curve.is_graph():
        if not allow_numeric:
            raise NotGraphCurve("curve is not in graph form")
        return TranslationStabilizer(curve, None, approximate=True)
    if curve.degree >= 2:
        return TranslationStabilizer(curve, None)
    direction = []
    for comp in curve.components:
        direction.append(comp[1] if len(comp) > 1 else Qi(0, 0))
    return TranslationStabilizer(curve, tuple(direction))


@dataclass(frozen=True)
class MonodromyData:
    """Integer images of loop classes in Z^n."""

    ambient_dim: int
    generators: Tuple[Tuple[int, ...], ...] = ()

    def __post_init__(self):
        gens = tuple(tuple(int(x) for x in g) for g in self.generators)
        for g in gens:
            if len(g) != self.ambient_dim:
                raise ValueError("generator length mismatch")
        object.__setattr__(self, "generators", gens)


@dataclass(frozen=True)
class ComplexStructure:
    """Rational matrix J with J^2 = -1 on R^(2n)."""

    matrix: RatMat

    def __post_init__(self):
        m = self.matrix if isinstance(self.matrix, RatMat) else RatMat(self.matrix)
        if not m.is_square() or m.nrows % 2 != 0:
            raise ValueError("complex structure must be square of even size")
        n = m.nrows
        if m @ m != RatMat.identity(n).scale(-1):
            raise ValueError("J^2 = -1 fails")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def standard(cls, n_pairs: int) -> "ComplexStructure":
        """J sending (x_i, y_i) to (-y_i, x_i) on interleaved coordinates."""
        size = 2 * n_pairs
        rows = [[0] * size for _ in range(size)]
        for i in range(n_pairs):
            rows[2 * i][2 * i + 1] = -1
            rows[2 * i + 1][2 * i] = 1
        return cls(RatMat(rows, ncols=size))


def smallest_subtorus(data: MonodromyData) -> Lattice:
    """Co-character lattice of the smallest subtorus containing the generators."""
    if not data.generators:
        return Lattice.zero(data.ambient_dim)
    return Lattice(data.ambient_dim, list(data.generators)).saturate()


def smallest_subabelian(data: MonodromyData, j: ComplexStructure) -> Lattice:
    """Smallest J-stable saturated lattice whose span contains the generators.

    Iterates span <- span + J*span to a fixed point, then saturates.
    """
    if j.matrix.nrows != data.ambient_dim:
        raise ValueError("complex structure size must match the ambient dimension")
    if not data.generators:
        return Lattice.zero(data.ambient_dim)
    rows = [[as_rat(x) for x in g] for g in data.generators]
    span = _rref(rows)
    while True:
        j_rows = [list(j.matrix.apply(RatVec(r)).entries) for r in span]
        closed = _rref(span + j_rows)
        if len(closed) == len(span):
            break
        span = closed
    return lattice_from_rational_rows([RatVec(r) for r in span]).saturate()


@dataclass(frozen=True)
class WeaklySpecialCandidate:
    """Orbit data in a fiber: span generators inside U + V and a base point.

    Generators are rational vectors of length r + 2g with U-coordinates
    first.  The complex structure on V defaults to the standard one.
    """

    datum: SymplecticDatum
    w0_generators: Tuple[RatVec, ...]
    base_u: RatVec
    base_v: RatVec
    complex_structure: Optional[ComplexStructure] = None

    def __post_init__(self):
        gens = tuple(g if isinstance(g, RatVec) else RatVec(g) for g in self.w0_generators)
        dim = self.datum.r + self.datum.dim_v
        for g in gens:
            if len(g) != dim:
                raise ValueError(f"W0 generators must have length {dim}")
        base_u = self.base_u if isinstance(self.base_u, RatVec) else RatVec(self.base_u)
        base_v = self.base_v if isinstance(self.base_v, RatVec) else RatVec(self.base_v)
        if len(base_u) != self.datum.r or len(base_v) != self.datum.dim_v:
            raise ValueError("base point shape mismatch")
        j = self.complex_structure
        if j is None:
            j = ComplexStructure.standard(self.datum.g)
        if j.matrix.nrows != self.datum.dim_v:
            raise ValueError("complex structure must act on V")
        object.__setattr__(self, "w0_generators", gens)
        object.__setattr__(self, "base_u", base_u)
        object.__setattr__(self, "base_v", base_v)
        object.__setattr__(self, "complex_structure", j)

    def u_part_basis(self) -> List[List[Fraction]]:
        """Basis of U_0 = W_0 intersect U (the span vectors with zero V-part).

        Reducing with the V-columns ordered first separates the span into
        rows with V-pivots and rows supported purely on U.
        """
        r = self.datum.r
        nv = self.datum.dim_v
        reordered = [list(g.entries[r:]) + list(g.entries[:r]) for g in self.w0_generators]
        rows = _rref(reordered)
        out = [row[nv:] for row in rows if all(x == 0 for x in row[:nv])]
        return _rref(out)

    def v_part_basis(self) -> List[List[Fraction]]:
        """Basis of V_0 = image of W_0 in V."""
        r = self.datum.r
        return _rref([list(g.entries[r:]) for g in self.w0_generators])


@dataclass(frozen=True)
class ClassificationVerdict:
    weakly_special: bool
    reason: str

    def to_json(self) -> dict:
        return {"weakly_special": self.weakly_special, "reason": self.reason}


def is_weakly_special_fiber(cand: WeaklySpecialCandidate) -> ClassificationVerdict:
    """Weakly special test for unif(W_0(R) U_0(C) z) inside a fixed fiber.

    Clause (a): V_0 must be stable under the fiber complex structure.
    Clause (b): Psi(v, z_V) must lie in the U_0-span for every generator
    v of V_0; with trivial U_0 this is exactly Psi(V_0, z_V) = 0.
    """
    datum = cand.datum
    v0 = cand.v_part_basis()
    u0 = cand.u_part_basis()
    j = cand.complex_structure.matrix
    for row in v0:
        jv = list(j.apply(RatVec(row)).entries)
        if not _in_span(v0, jv):
            return ClassificationVerdict(False, "V0 is not stable under the complex structure")
    z_v = cand.base_v
    for row in v0:
        pairing = list(datum.pairing(RatVec(row), z_v).entries)
        if not _in_span(u0, pairing):
            if not u0:
                return ClassificationVerdict(
                    False, "Psi(V0, base point) is nonzero with trivial U0")
            return ClassificationVerdict(
                False, "Psi(V0, base point) escapes the U0 span")
    return ClassificationVerdict(True, "ok")


def half_psi_integrality(datum: SymplecticDatum, v0_generators: Sequence[RatVec],
                         z_v: RatVec, gamma_u: Lattice) -> bool:
    """Exact test that Psi(gamma, z_V)/2 lands in the U-lattice for each generator."""
    if gamma_u.ambient_dim != datum.r:
        raise ValueError("U-lattice dimension mismatch")
    z_v = z_v if isinstance(z_v, RatVec) else RatVec(z_v)
    for gen in v0_generators:
        gen = gen if isinstance(gen, RatVec) else RatVec(gen)
        half = datum.pairing(gen, z_v).scale(Fraction(1, 2))
        if not half.is_integral():
            return False
        if not gamma_u.contains([int(x) for x in half.entries]):
            return False
    return True
