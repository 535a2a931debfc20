"""Parametrized algebraic curves with exact Gaussian-rational coefficients.

A ParamCurve is a tuple of component polynomials p_1, ..., p_k in one
parameter t with coefficients in Q(i), living in one of three ambient
kinds: "torus" (C^k, integer translations act on real parts), "abelian"
(C^k read as R^(2k) with interleaved real/imaginary coordinates and
integer translations in all of them) or "fiber" (U(C) x V(R) data, used
only for classification).  Exact coefficient arithmetic supports the
translation-stabilizer tests; numpy evaluation backs the counting and
quadrature code.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .rational import Rat, as_rat

AMBIENT_KINDS = ("torus", "abelian", "fiber")
PARAM_KINDS = ("complex", "real")


class Qi:
    """Exact Gaussian rational a + b*i with Fraction parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", as_rat(re))
        object.__setattr__(self, "im", as_rat(im))

    def __setattr__(self, name, value):
        raise AttributeError("Qi is immutable")

    @classmethod
    def coerce(cls, x) -> "Qi":
        if isinstance(x, Qi):
            return x
        if isinstance(x, (int, str, Fraction)):
            return cls(as_rat(x), 0)
        if isinstance(x, (tuple, list)) and len(x) == 2:
            return cls(as_rat(x[0]), as_rat(x[1]))
        raise TypeError(f"cannot interpret {x!r} as a Gaussian rational")

    def __add__(self, other: "Qi") -> "Qi":
        return Qi(self.re + other.re, self.im + other.im)

    def __sub__(self, other: "Qi") -> "Qi":
        return Qi(self.re - other.re, self.im - other.im)

    def __neg__(self) -> "Qi":
        return Qi(-self.re, -self.im)

    def __mul__(self, other: "Qi") -> "Qi":
        return Qi(self.re * other.re - self.im * other.im,
                  self.re * other.im + self.im * other.re)

    def __eq__(self, other) -> bool:
        other = Qi.coerce(other)
        return self.re == other.re and self.im == other.im

    def __hash__(self) -> int:
        return hash((self.re, self.im))

    def __repr__(self) -> str:
        return f"Qi({self.re}, {self.im})"

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def is_real(self) -> bool:
        return self.im == 0

    def to_complex(self) -> complex:
        return complex(float(self.re), float(self.im))

    def to_json(self):
        if self.im == 0:
            return str(self.re)
        return [str(self.re), str(self.im)]


def _poly_trim(coeffs: List[Qi]) -> Tuple[Qi, ...]:
    while coeffs and coeffs[-1].is_zero():
        coeffs.pop()
    return tuple(coeffs)


def poly_degree(coeffs: Sequence[Qi]) -> int:
    return len(coeffs) - 1 if coeffs else 0


def poly_shift(coeffs: Sequence[Qi], a: Qi) -> Tuple[Qi, ...]:
    """Exact coefficients of p(t + a)."""
    d = len(coeffs) - 1
    out = [Qi(0, 0) for _ in range(len(coeffs))]
    a_pow = [Qi(1, 0)]
    for _ in range(d):
        a_pow.append(a_pow[-1] * a)
    for k, c in enumerate(coeffs):
        if c.is_zero():
            continue
        for j in range(k + 1):
            out[j] = out[j] + c * Qi(comb(k, j), 0) * a_pow[k - j]
    return tuple(out)


class ParamCurve:
    """Graph-style algebraic curve (p_1(t), ..., p_k(t)) over Q(i)."""

    __slots__ = ("ambient", "param", "components", "degree")

    def __init__(self, ambient: str, components: Sequence[Sequence], param: str = "complex"):
        if ambient not in AMBIENT_KINDS:
            raise ValueError(f"unknown ambient kind {ambient!r}")
        if param not in PARAM_KINDS:
            raise ValueError(f"unknown parameter kind {param!r}")
        comps = tuple(
            _poly_trim([Qi.coerce(c) for c in comp]) for comp in components
        )
        if not comps:
            raise ValueError("curve needs at least one component")
        if all(poly_degree(c) == 0 or not c for c in comps):
            raise ValueError("degenerate curve: all components constant")
        object.__setattr__(self, "ambient", ambient)
        object.__setattr__(self, "param", param)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "degree", max(poly_degree(c) for c in comps))

    def __setattr__(self, name, value):
        raise AttributeError("ParamCurve is immutable")

    @classmethod
    def graph(cls, ambient: str, tail: Sequence[Sequence], param: str = "complex") -> "ParamCurve":
        """Curve (t, p_2(t), ..., p_k(t)) from the trailing components."""
        return cls(ambient, [[0, 1]] + [list(c) for c in tail], param=param)

    @property
    def k(self) -> int:
        return len(self.components)

    @property
    def real_dim_coords(self) -> int:
        """Number of real coordinates integer translations act on."""
        if self.ambient == "torus":
            return self.k
        if self.ambient == "abelian":
            return 2 * self.k
        raise ValueError("fiber curves have no translation lattice here")

    def is_graph(self) -> bool:
        first = self.components[0]
        return len(first) == 2 and first[0].is_zero() and first[1] == Qi(1, 0)

    def coeff_arrays(self) -> List[np.ndarray]:
        """Low-to-high complex128 coefficient arrays per component."""
        return [
            np.array([c.to_complex() for c in comp], dtype=np.complex128)
            if comp else np.zeros(1, dtype=np.complex128)
            for comp in self.components
        ]

    def derivative_coeff_arrays(self) -> List[np.ndarray]:
        out = []
        for comp in self.components:
            if len(comp) <= 1:
                out.append(np.zeros(1, dtype=np.complex128))
            else:
                out.append(np.array(
                    [k * c.to_complex() for k, c in enumerate(comp)][1:],
                    dtype=np.complex128,
                ))
        return out

    def eval_many(self, t: np.ndarray) -> List[np.ndarray]:
        """Vectorized component values (complex128)."""
        out = []
        for coeffs in self.coeff_arrays():
            acc = np.full(t.shape, coeffs[-1], dtype=np.complex128)
            for c in coeffs[-2::-1]:
                acc = acc * t + c
            out.append(acc)
        return out

    def eval_exact(self, t: Qi) -> List[Qi]:
        out = []
        for comp in self.components:
            acc = Qi(0, 0)
            for c in reversed(comp):
                acc = acc * t + c
            out.append(acc)
        return out

    def derivative_components(self) -> List[Tuple[Qi, ...]]:
        """Exact coefficients of each p_i'."""
        out = []
        for comp in self.components:
            out.append(tuple(Qi(k, 0) * c for k, c in enumerate(comp))[1:] or (Qi(0, 0),))
        return out

    def eval_derivative_exact(self, t: Qi) -> List[Qi]:
        out = []
        for comp in self.derivative_components():
            acc = Qi(0, 0)
            for c in reversed(comp):
                acc = acc * t + c
            out.append(acc)
        return out

    def shifted(self, a: Qi) -> "ParamCurve":
        """The reparametrized curve t -> p(t + a), exactly."""
        return ParamCurve(
            self.ambient,
            [list(poly_shift(c, a)) or [0] for c in self.components],
            param=self.param,
        )

    def enclosure_radii(self, centers: np.ndarray, radius: float) -> List[np.ndarray]:
        """Per-component bound on |p(t) - p(t0)| for |t - t0| <= radius.

        Taylor remainder with exact binomial weights:
        sum_{k>=1} |p^(k)(t0)| / k! * radius^k.
        """
        out = []
        for comp in self.components:
            coeffs = np.array([c.to_complex() for c in comp], dtype=np.complex128) \
                if comp else np.zeros(1, dtype=np.complex128)
            d = len(coeffs) - 1
            total = np.zeros(centers.shape, dtype=np.float64)
            fact = 1.0
            deriv = coeffs
            for k in range(1, d + 1):
                deriv = deriv[1:] * np.arange(1, len(deriv))
                fact *= k
                acc = np.full(centers.shape, deriv[-1], dtype=np.complex128)
                for c in deriv[-2::-1]:
                    acc = acc * centers + c
                total += np.abs(acc) * (radius ** k) / fact
            out.append(total)
        return out

    def to_json(self) -> dict:
        return {
            "ambient": self.ambient,
            "param": self.param,
            "components": [[c.to_json() for c in comp] for comp in self.components],
        }

    @classmethod
    def from_json(cls, data: dict) -> "ParamCurve":
        return cls(
            data["ambient"],
            data["components"],
            param=data.get("param", "complex"),
        )


def translation_to_complex(curve: ParamCurve, delta: Sequence[int]) -> List[Qi]:
    """Ambient translation attached to an integer lattice vector.

    Torus lattices translate real parts, abelian lattices translate the
    interleaved real coordinates (x_1, y_1, ..., x_k, y_k).
    """
    delta = [int(x) for x in delta]
    if curve.ambient == "torus":
        if len(delta) != curve.k:
            raise ValueError("lattice vector length mismatch")
        return [Qi(d, 0) for d in delta]
    if curve.ambient == "abelian":
        if len(delta) != 2 * curve.k:
            raise ValueError("lattice vector length mismatch")
        return [Qi(delta[2 * i], delta[2 * i + 1]) for i in range(curve.k)]
    raise ValueError("fiber curves have no translation lattice here")
