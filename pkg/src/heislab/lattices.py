"""Integer lattices: Hermite and Smith normal forms, saturation.

Lattices are subgroups of Z^n given by integer generator rows and are
canonicalised on construction to a row-style Hermite normal form with
positive pivots, so equality of lattices is equality of basis matrices.
Saturation replaces a lattice by the largest sublattice of Z^n with the
same rational span; the index of a lattice inside its saturation is the
product of the nontrivial Smith invariants of its generator matrix.
"""

from __future__ import annotations

from math import gcd, prod
from typing import List, Sequence, Tuple

from .rational import RatMat


def _as_int_rows(rows) -> List[List[int]]:
    if isinstance(rows, RatMat):
        if not rows.is_integral():
            raise ValueError("integer matrix required")
        return [[int(a) for a in row] for row in rows.entries]
    out = []
    for row in rows:
        out.append([int(a) for a in row])
    return out


def hnf(rows: Sequence[Sequence[int]], ncols: int = None) -> List[List[int]]:
    """Row-style Hermite normal form with positive pivots.

    Zero rows are dropped; entries above each pivot are reduced into
    [0, pivot).  The result is the canonical basis of the row lattice.
    """
    a = _as_int_rows(rows)
    if ncols is None:
        ncols = len(a[0]) if a else 0
    a = [row[:] for row in a if any(row)]
    m = len(a)
    basis: List[List[int]] = []
    for row in a:
        basis.append(row)
    # Column-by-column elimination with exact gcd steps.
    rank = 0
    n = ncols
    for j in range(n):
        pivot = None
        for i in range(rank, len(basis)):
            if basis[i][j] != 0:
                pivot = i
                break
        if pivot is None:
            continue
        basis[rank], basis[pivot] = basis[pivot], basis[rank]
        for i in range(rank + 1, len(basis)):
            while basis[i][j] != 0:
                q = basis[rank][j] // basis[i][j]
                basis[rank] = [x - q * y for x, y in zip(basis[rank], basis[i])]
                basis[rank], basis[i] = basis[i], basis[rank]
        if basis[rank][j] < 0:
            basis[rank] = [-x for x in basis[rank]]
        rank += 1
    basis = basis[:rank]
    # Reduce entries above each pivot.
    pivots = []
    for i, row in enumerate(basis):
        j = next(k for k, x in enumerate(row) if x != 0)
        pivots.append(j)
    for i in range(rank - 1, -1, -1):
        j = pivots[i]
        p = basis[i][j]
        for k in range(i):
            q = basis[k][j] // p
            if q:
                basis[k] = [x - q * y for x, y in zip(basis[k], basis[i])]
    return basis


def snf(mat) -> Tuple[List[List[int]], List[List[int]], List[List[int]]]:
    """Smith normal form decomposition.

    Returns unimodular U, diagonal D and unimodular V with
    U * mat * V = D, positive diagonal entries and d1 | d2 | ... .
    """
    a = _as_int_rows(mat)
    m = len(a)
    n = len(a[0]) if a else 0
    a = [row[:] for row in a]
    U = [[int(i == j) for j in range(m)] for i in range(m)]
    V = [[int(i == j) for j in range(n)] for i in range(n)]

    def swap_rows(i, j):
        a[i], a[j] = a[j], a[i]
        U[i], U[j] = U[j], U[i]

    def add_row(i, j, c):
        # row i += c * row j
        a[i] = [x + c * y for x, y in zip(a[i], a[j])]
        U[i] = [x + c * y for x, y in zip(U[i], U[j])]

    def swap_cols(i, j):
        for row in a:
            row[i], row[j] = row[j], row[i]
        for row in V:
            row[i], row[j] = row[j], row[i]

    def add_col(i, j, c):
        # col i += c * col j
        for row in a:
            row[i] += c * row[j]
        for row in V:
            row[i] += c * row[j]

    def negate_row(i):
        a[i] = [-x for x in a[i]]
        U[i] = [-x for x in U[i]]

    t = 0
    while t < min(m, n):
        # Pick the nonzero entry of smallest magnitude in the trailing block.
        best = None
        for i in range(t, m):
            for j in range(t, n):
                if a[i][j] != 0 and (best is None or abs(a[i][j]) < abs(a[best[0]][best[1]])):
                    best = (i, j)
        if best is None:
            break
        i0, j0 = best
        if i0 != t:
            swap_rows(t, i0)
        if j0 != t:
            swap_cols(t, j0)
        dirty = False
        for i in range(t + 1, m):
            if a[i][t] != 0:
                q = a[i][t] // a[t][t]
                add_row(i, t, -q)
                if a[i][t] != 0:
                    dirty = True
        for j in range(t + 1, n):
            if a[t][j] != 0:
                q = a[t][j] // a[t][t]
                add_col(j, t, -q)
                if a[t][j] != 0:
                    dirty = True
        if dirty:
            continue
        # Enforce the divisibility chain: fold any bad entry into column t.
        bad = None
        for i in range(t + 1, m):
            for j in range(t + 1, n):
                if a[i][j] % a[t][t] != 0:
                    bad = i
                    break
            if bad is not None:
                break
        if bad is not None:
            add_row(t, bad, 1)
            continue
        if a[t][t] < 0:
            negate_row(t)
        t += 1
    D = [[a[i][j] if i == j else 0 for j in range(n)] for i in range(m)]
    return U, D, V


def smith_diagonal(mat) -> List[int]:
    _, d, _ = snf(mat)
    return [d[i][i] for i in range(min(len(d), len(d[0]) if d else 0)) if d[i][i] != 0]


class Lattice:
    """A subgroup of Z^n, stored by its canonical Hermite basis."""

    __slots__ = ("ambient_dim", "basis")

    def __init__(self, ambient_dim: int, generators: Sequence[Sequence[int]] = ()):
        rows = _as_int_rows(generators)
        for row in rows:
            if len(row) != ambient_dim:
                raise ValueError(
                    f"generator length {len(row)} does not match ambient {ambient_dim}"
                )
        object.__setattr__(self, "ambient_dim", ambient_dim)
        object.__setattr__(self, "basis", tuple(tuple(r) for r in hnf(rows, ambient_dim)))

    def __setattr__(self, name, value):
        raise AttributeError("Lattice is immutable")

    @classmethod
    def zero(cls, n: int) -> "Lattice":
        return cls(n, [])

    @classmethod
    def full(cls, n: int) -> "Lattice":
        return cls(n, [[int(i == j) for j in range(n)] for i in range(n)])

    @property
    def rank(self) -> int:
        return len(self.basis)

    def is_zero(self) -> bool:
        return not self.basis

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Lattice)
            and self.ambient_dim == other.ambient_dim
            and self.basis == other.basis
        )

    def __hash__(self) -> int:
        return hash((self.ambient_dim, self.basis))

    def __repr__(self) -> str:
        return f"Lattice(dim={self.ambient_dim}, basis={[list(r) for r in self.basis]})"

    def contains(self, vec: Sequence[int]) -> bool:
        """Exact membership via back-substitution against the Hermite basis."""
        v = [int(x) for x in vec]
        if len(v) != self.ambient_dim:
            raise ValueError("dimension mismatch")
        for row in self.basis:
            j = next(k for k, x in enumerate(row) if x != 0)
            if v[j] % row[j] != 0:
                return False
            q = v[j] // row[j]
            if q:
                v = [x - q * y for x, y in zip(v, row)]
        return all(x == 0 for x in v)

    def saturate(self) -> "Lattice":
        """Largest sublattice of Z^n with the same rational span."""
        if not self.basis:
            return self
        _, d, v = snf([list(r) for r in self.basis])
        rank = sum(1 for i in range(min(len(d), len(d[0]))) if d[i][i] != 0)
        v_inv = RatMat(v).inverse()
        rows = [[int(a) for a in v_inv.entries[i]] for i in range(rank)]
        return Lattice(self.ambient_dim, rows)

    def saturation_index(self) -> int:
        """Index of this lattice inside its saturation (finite, >= 1)."""
        if not self.basis:
            return 1
        return prod(smith_diagonal([list(r) for r in self.basis]))

    def to_json(self) -> dict:
        return {"ambient_dim": self.ambient_dim, "basis": [list(r) for r in self.basis]}

    @classmethod
    def from_json(cls, data: dict) -> "Lattice":
        return cls(int(data["ambient_dim"]), data.get("basis", []))


def lattice_from_rational_rows(rows) -> Lattice:
    """Integer lattice spanned by rational rows after clearing denominators.

    Each row is scaled by the lcm of its denominators and divided by the
    gcd of the resulting integers, so the row lattice has the same
    rational span as the input rows.
    """
    int_rows = []
    ncols = None
    for row in rows:
        entries = list(row)
        ncols = len(entries) if ncols is None else ncols
        from math import lcm

        denom = 1
        for e in entries:
            denom = lcm(denom, e.denominator)
        scaled = [int(e * denom) for e in entries]
        g = 0
        for x in scaled:
            g = gcd(g, x)
        if g > 1:
            scaled = [x // g for x in scaled]
        int_rows.append(scaled)
    if ncols is None:
        raise ValueError("no rows given")
    return Lattice(ncols, int_rows)
