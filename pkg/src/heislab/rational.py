"""Exact rational scalars, vectors and matrices.

Scalars are ``fractions.Fraction`` (always in lowest terms, positive
denominator), vectors and matrices are thin immutable wrappers around
tuples of Fractions with a fixed shape.  The height of a reduced
fraction a/b is max(|a|, |b|) with H(0) = 0, extended to vectors and
matrices coordinatewise by taking the maximum.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence, Union

Rat = Fraction

RatLike = Union[Rat, int, str]


def as_rat(x: RatLike) -> Rat:
    """Coerce an int, "num/den" string or Fraction to an exact Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, str)):
        return Fraction(x)
    raise TypeError(f"cannot interpret {x!r} as an exact rational")


def rat_str(x: Rat) -> str:
    """Canonical "num/den" (or plain integer) string, inverse of as_rat."""
    return str(as_rat(x))


def height(x) -> int:
    """Height of a rational, vector or matrix.

    For a reduced fraction a/b this is max(|a|, |b|); H(0) = 0.  For
    compound objects it is the maximum over all entries (0 for the
    empty or zero vector).
    """
    if isinstance(x, (RatVec, RatMat)):
        return height(x.entries)
    if isinstance(x, (tuple, list)):
        return max((height(e) for e in x), default=0)
    q = as_rat(x)
    if q == 0:
        return 0
    return max(abs(q.numerator), q.denominator)


class RatVec:
    """Immutable exact rational vector of fixed length."""

    __slots__ = ("entries",)

    def __init__(self, entries: Iterable[RatLike]):
        object.__setattr__(self, "entries", tuple(as_rat(e) for e in entries))

    def __setattr__(self, name, value):
        raise AttributeError("RatVec is immutable")

    @classmethod
    def zero(cls, n: int) -> "RatVec":
        return cls([0] * n)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def __eq__(self, other) -> bool:
        return isinstance(other, RatVec) and self.entries == other.entries

    def __hash__(self) -> int:
        return hash(self.entries)

    def __repr__(self) -> str:
        return "RatVec(%s)" % (", ".join(map(str, self.entries)),)

    def __add__(self, other: "RatVec") -> "RatVec":
        self._check_len(other)
        return RatVec(a + b for a, b in zip(self.entries, other.entries))

    def __sub__(self, other: "RatVec") -> "RatVec":
        self._check_len(other)
        return RatVec(a - b for a, b in zip(self.entries, other.entries))

    def __neg__(self) -> "RatVec":
        return RatVec(-a for a in self.entries)

    def scale(self, c: RatLike) -> "RatVec":
        c = as_rat(c)
        return RatVec(c * a for a in self.entries)

    def dot(self, other: "RatVec") -> Rat:
        self._check_len(other)
        return sum((a * b for a, b in zip(self.entries, other.entries)), Fraction(0))

    def is_zero(self) -> bool:
        return all(a == 0 for a in self.entries)

    def is_integral(self) -> bool:
        return all(a.denominator == 1 for a in self.entries)

    def denominator_lcm(self) -> int:
        from math import lcm

        return lcm(*(a.denominator for a in self.entries)) if self.entries else 1

    def to_floats(self) -> tuple:
        return tuple(float(a) for a in self.entries)

    def _check_len(self, other: "RatVec") -> None:
        if len(self) != len(other):
            raise ValueError(f"length mismatch: {len(self)} vs {len(other)}")


class RatMat:
    """Immutable exact rational matrix with fixed (rows x cols) shape."""

    __slots__ = ("entries", "nrows", "ncols")

    def __init__(self, rows: Sequence[Sequence[RatLike]], ncols: int = None):
        rows = tuple(tuple(as_rat(e) for e in row) for row in rows)
        if rows:
            ncols = len(rows[0]) if ncols is None else ncols
            if any(len(r) != ncols for r in rows):
                raise ValueError("ragged rows")
        elif ncols is None:
            ncols = 0
        object.__setattr__(self, "entries", rows)
        object.__setattr__(self, "nrows", len(rows))
        object.__setattr__(self, "ncols", ncols)

    def __setattr__(self, name, value):
        raise AttributeError("RatMat is immutable")

    @classmethod
    def identity(cls, n: int) -> "RatMat":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def zero(cls, m: int, n: int) -> "RatMat":
        return cls([[0] * n for _ in range(m)], ncols=n)

    @property
    def shape(self) -> tuple:
        return (self.nrows, self.ncols)

    def row(self, i: int) -> RatVec:
        return RatVec(self.entries[i])

    def col(self, j: int) -> RatVec:
        return RatVec(r[j] for r in self.entries)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def __eq__(self, other) -> bool:
        return isinstance(other, RatMat) and self.shape == other.shape \
            and self.entries == other.entries

    def __hash__(self) -> int:
        return hash((self.shape, self.entries))

    def __repr__(self) -> str:
        return "RatMat(%r)" % (
            [[str(e) for e in row] for row in self.entries],
        )

    def __add__(self, other: "RatMat") -> "RatMat":
        self._check_shape(other)
        return RatMat(
            [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.entries, other.entries)],
            ncols=self.ncols,
        )

    def __sub__(self, other: "RatMat") -> "RatMat":
        self._check_shape(other)
        return RatMat(
            [[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(self.entries, other.entries)],
            ncols=self.ncols,
        )

    def __neg__(self) -> "RatMat":
        return RatMat([[-a for a in row] for row in self.entries], ncols=self.ncols)

    def scale(self, c: RatLike) -> "RatMat":
        c = as_rat(c)
        return RatMat([[c * a for a in row] for row in self.entries], ncols=self.ncols)

    def __matmul__(self, other: "RatMat") -> "RatMat":
        if self.ncols != other.nrows:
            raise ValueError(f"shape mismatch: {self.shape} @ {other.shape}")
        cols = list(zip(*other.entries)) if other.entries else []
        return RatMat(
            [[sum((a * b for a, b in zip(row, col)), Fraction(0)) for col in cols]
             for row in self.entries],
            ncols=other.ncols,
        )

    def apply(self, v: RatVec) -> RatVec:
        if self.ncols != len(v):
            raise ValueError(f"shape mismatch: {self.shape} applied to length {len(v)}")
        return RatVec(
            sum((a * b for a, b in zip(row, v.entries)), Fraction(0))
            for row in self.entries
        )

    def transpose(self) -> "RatMat":
        return RatMat(list(zip(*self.entries)) if self.entries else [], ncols=self.nrows)

    def is_integral(self) -> bool:
        return all(a.denominator == 1 for row in self.entries for a in row)

    def is_square(self) -> bool:
        return self.nrows == self.ncols

    def det(self) -> Rat:
        if not self.is_square():
            raise ValueError("determinant of a non-square matrix")
        n = self.nrows
        a = [list(row) for row in self.entries]
        det = Fraction(1)
        for j in range(n):
            pivot = next((i for i in range(j, n) if a[i][j] != 0), None)
            if pivot is None:
                return Fraction(0)
            if pivot != j:
                a[j], a[pivot] = a[pivot], a[j]
                det = -det
            det *= a[j][j]
            inv = 1 / a[j][j]
            for i in range(j + 1, n):
                if a[i][j] != 0:
                    f = a[i][j] * inv
                    a[i] = [x - f * y for x, y in zip(a[i], a[j])]
        return det

    def inverse(self) -> "RatMat":
        """Exact inverse by Gauss-Jordan elimination."""
        if not self.is_square():
            raise ValueError("inverse of a non-square matrix")
        n = self.nrows
        a = [list(row) + [Fraction(int(i == j)) for j in range(n)]
             for i, row in enumerate(self.entries)]
        for j in range(n):
            pivot = next((i for i in range(j, n) if a[i][j] != 0), None)
            if pivot is None:
                raise ZeroDivisionError("matrix is singular")
            a[j], a[pivot] = a[pivot], a[j]
            inv = 1 / a[j][j]
            a[j] = [x * inv for x in a[j]]
            for i in range(n):
                if i != j and a[i][j] != 0:
                    f = a[i][j]
                    a[i] = [x - f * y for x, y in zip(a[i], a[j])]
        return RatMat([row[n:] for row in a], ncols=n)

    def to_floats(self) -> list:
        return [[float(a) for a in row] for row in self.entries]

    def _check_shape(self, other: "RatMat") -> None:
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch: {self.shape} vs {other.shape}")


def vec_to_json(v: RatVec) -> list:
    return [rat_str(a) for a in v.entries]


def vec_from_json(data: Sequence[str], n: int = None) -> RatVec:
    v = RatVec(data)
    if n is not None and len(v) != n:
        raise ValueError(f"expected length {n}, got {len(v)}")
    return v


def mat_to_json(m: RatMat) -> list:
    return [[rat_str(a) for a in row] for row in m.entries]


def mat_from_json(data: Sequence[Sequence[str]], shape: tuple = None) -> RatMat:
    m = RatMat(data)
    if shape is not None and m.shape != tuple(shape):
        raise ValueError(f"expected shape {shape}, got {m.shape}")
    return m
