"""Dataclass experiment configs with strict JSON validation.

Every subcommand consumes one JSON object.  Validation is schema-like:
unknown keys are rejected and errors carry the offending field path, so
a bad config fails before any computation starts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .counting import ResolutionConfig, default_resolution
from .curves import ParamCurve
from .groups import SymplecticDatum
from .rational import RatMat, RatVec
from .special import ComplexStructure, WeaklySpecialCandidate


class ConfigError(ValueError):
    """Config validation failure with a JSON field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _expect_keys(data: dict, path: str, required: Sequence[str], optional: Sequence[str]):
    if not isinstance(data, dict):
        raise ConfigError(path, f"expected an object, got {type(data).__name__}")
    known = set(required) | set(optional)
    for key in data:
        if key not in known:
            raise ConfigError(f"{path}.{key}", "unknown key")
    for key in required:
        if key not in data:
            raise ConfigError(f"{path}.{key}", "missing required key")


def _get_int(data: dict, path: str, key: str, default=None, minimum=None):
    if key not in data:
        if default is None:
            raise ConfigError(f"{path}.{key}", "missing required key")
        return default
    val = data[key]
    if not isinstance(val, int) or isinstance(val, bool):
        raise ConfigError(f"{path}.{key}", f"expected an integer, got {val!r}")
    if minimum is not None and val < minimum:
        raise ConfigError(f"{path}.{key}", f"must be >= {minimum}")
    return val


def _get_number(data: dict, path: str, key: str, default=None):
    if key not in data:
        if default is None:
            raise ConfigError(f"{path}.{key}", "missing required key")
        return default
    val = data[key]
    if not isinstance(val, (int, float)) or isinstance(val, bool):
        raise ConfigError(f"{path}.{key}", f"expected a number, got {val!r}")
    return float(val)


def _get_bool(data: dict, path: str, key: str, default: bool) -> bool:
    val = data.get(key, default)
    if not isinstance(val, bool):
        raise ConfigError(f"{path}.{key}", f"expected a boolean, got {val!r}")
    return val


def _get_str(data: dict, path: str, key: str, default=None, choices=None):
    val = data.get(key, default)
    if val is None:
        raise ConfigError(f"{path}.{key}", "missing required key")
    if not isinstance(val, str):
        raise ConfigError(f"{path}.{key}", f"expected a string, got {val!r}")
    if choices is not None and val not in choices:
        raise ConfigError(f"{path}.{key}", f"must be one of {sorted(choices)}")
    return val


@dataclass(frozen=True)
class DatumConfig:
    g: int = 1
    r: int = 1
    level: int = 4
    u_action: str = "nu"
    psi: Optional[Tuple[Tuple[Tuple[str, ...], ...], ...]] = None

    @classmethod
    def from_dict(cls, data: dict, path: str = "datum") -> "DatumConfig":
        _expect_keys(data, path, [], ["g", "r", "level", "u_action", "psi"])
        psi = data.get("psi")
        if psi is not None:
            if not isinstance(psi, list):
                raise ConfigError(f"{path}.psi", "expected a list of matrices")
            psi = tuple(tuple(tuple(str(e) for e in row) for row in m) for m in psi)
        return cls(
            g=_get_int(data, path, "g", default=1, minimum=0),
            r=_get_int(data, path, "r", default=1, minimum=0),
            level=_get_int(data, path, "level", default=4),
            u_action=_get_str(data, path, "u_action", default="nu",
                              choices={"nu", "trivial"}),
            psi=psi,
        )

    def build(self) -> SymplecticDatum:
        psi = None
        if self.psi is not None:
            psi = tuple(RatMat(m) for m in self.psi)
        try:
            return SymplecticDatum(g=self.g, r=self.r, psi=psi, level=self.level,
                                   u_action=self.u_action)
        except ValueError as exc:
            raise ConfigError("datum", str(exc)) from exc


@dataclass(frozen=True)
class CurveConfig:
    ambient: str
    components: Tuple[Tuple[object, ...], ...]
    param: str = "complex"

    @classmethod
    def from_dict(cls, data: dict, path: str = "curve") -> "CurveConfig":
        _expect_keys(data, path, ["ambient", "components"], ["param"])
        ambient = _get_str(data, path, "ambient", choices={"torus", "abelian", "fiber"})
        param = _get_str(data, path, "param", default="complex",
                         choices={"complex", "real"})
        comps = data["components"]
        if not isinstance(comps, list) or not comps:
            raise ConfigError(f"{path}.components", "expected a nonempty list")
        for i, comp in enumerate(comps):
            if not isinstance(comp, list):
                raise ConfigError(f"{path}.components[{i}]", "expected a coefficient list")
        return cls(ambient=ambient,
                   components=tuple(tuple(c) for c in comps),
                   param=param)

    def build(self) -> ParamCurve:
        try:
            return ParamCurve(self.ambient, [list(c) for c in self.components],
                              param=self.param)
        except (ValueError, TypeError) as exc:
            raise ConfigError("curve", str(exc)) from exc


@dataclass(frozen=True)
class ResolutionSpec:
    initial_step: Optional[float] = None
    refine_depth: int = 6
    margin: float = 1e-9
    low_confidence_ratio: float = 0.10

    @classmethod
    def from_dict(cls, data: dict, path: str = "resolution") -> "ResolutionSpec":
        _expect_keys(data, path, [],
                     ["initial_step", "refine_depth", "margin", "low_confidence_ratio"])
        step = data.get("initial_step")
        if step is not None:
            step = _get_number(data, path, "initial_step")
        return cls(
            initial_step=step,
            refine_depth=_get_int(data, path, "refine_depth", default=6, minimum=0),
            margin=_get_number(data, path, "margin", default=1e-9),
            low_confidence_ratio=_get_number(data, path, "low_confidence_ratio", default=0.10),
        )

    def build(self, curve: ParamCurve, m_max: int) -> ResolutionConfig:
        if self.initial_step is None:
            base = default_resolution(curve, m_max, refine_depth=self.refine_depth)
            step = base.initial_step
        else:
            step = self.initial_step
        return ResolutionConfig(
            initial_step=step,
            refine_depth=self.refine_depth,
            margin=self.margin,
            low_confidence_ratio=self.low_confidence_ratio,
        )


def _schedule_from(data: dict, path: str, key: str = "schedule",
                   minimum_len: int = 1) -> Tuple[int, ...]:
    sched = data.get(key)
    if not isinstance(sched, list) or len(sched) < minimum_len:
        raise ConfigError(f"{path}.{key}",
                          f"expected a list of at least {minimum_len} bounds")
    out = []
    for i, m in enumerate(sched):
        if not isinstance(m, int) or isinstance(m, bool) or m < 1:
            raise ConfigError(f"{path}.{key}[{i}]", "expected a positive integer")
        out.append(m)
    if any(b <= a for a, b in zip(out, out[1:])):
        raise ConfigError(f"{path}.{key}", "schedule must be strictly increasing")
    return tuple(out)


@dataclass(frozen=True)
class CountConfig:
    curve: CurveConfig
    schedule: Tuple[int, ...]
    resolution: ResolutionSpec = field(default_factory=ResolutionSpec)
    with_volume: bool = True
    fit: bool = True

    @classmethod
    def from_dict(cls, data: dict, path: str = "count") -> "CountConfig":
        _expect_keys(data, path, ["curve", "schedule"],
                     ["resolution", "with_volume", "fit"])
        return cls(
            curve=CurveConfig.from_dict(data["curve"], f"{path}.curve"),
            schedule=_schedule_from(data, path),
            resolution=ResolutionSpec.from_dict(data.get("resolution", {}),
                                                f"{path}.resolution"),
            with_volume=_get_bool(data, path, "with_volume", True),
            fit=_get_bool(data, path, "fit", True),
        )


@dataclass(frozen=True)
class VolumeConfig:
    curve: CurveConfig
    schedule: Tuple[int, ...]
    truncate_to_fundamental: bool = False
    tolerance: float = 1e-2
    fit: bool = True

    @classmethod
    def from_dict(cls, data: dict, path: str = "volume") -> "VolumeConfig":
        _expect_keys(data, path, ["curve", "schedule"],
                     ["truncate_to_fundamental", "tolerance", "fit"])
        return cls(
            curve=CurveConfig.from_dict(data["curve"], f"{path}.curve"),
            schedule=_schedule_from(data, path),
            truncate_to_fundamental=_get_bool(data, path, "truncate_to_fundamental", False),
            tolerance=_get_number(data, path, "tolerance", default=1e-2),
            fit=_get_bool(data, path, "fit", True),
        )


@dataclass(frozen=True)
class ReduceConfig:
    datum: DatumConfig
    points: Tuple[dict, ...]

    @classmethod
    def from_dict(cls, data: dict, path: str = "reduce") -> "ReduceConfig":
        _expect_keys(data, path, ["points"], ["datum"])
        pts = data["points"]
        if not isinstance(pts, list) or not pts:
            raise ConfigError(f"{path}.points", "expected a nonempty list")
        for i, p in enumerate(pts):
            _expect_keys(p, f"{path}.points[{i}]", ["u", "v"], ["tau"])
        return cls(
            datum=DatumConfig.from_dict(data.get("datum", {}), f"{path}.datum"),
            points=tuple(pts),
        )


@dataclass(frozen=True)
class ClassifyConfig:
    datum: DatumConfig
    w0_generators: Tuple[Tuple[str, ...], ...]
    base_u: Tuple[str, ...]
    base_v: Tuple[str, ...]
    complex_structure: Optional[Tuple[Tuple[str, ...], ...]] = None

    @classmethod
    def from_dict(cls, data: dict, path: str = "classify") -> "ClassifyConfig":
        _expect_keys(data, path, ["candidate"], ["datum"])
        cand = data["candidate"]
        _expect_keys(cand, f"{path}.candidate", ["w0_generators", "base_u", "base_v"],
                     ["complex_structure"])
        gens = cand["w0_generators"]
        if not isinstance(gens, list):
            raise ConfigError(f"{path}.candidate.w0_generators", "expected a list")
        cs = cand.get("complex_structure")
        return cls(
            datum=DatumConfig.from_dict(data.get("datum", {}), f"{path}.datum"),
            w0_generators=tuple(tuple(str(x) for x in g) for g in gens),
            base_u=tuple(str(x) for x in cand["base_u"]),
            base_v=tuple(str(x) for x in cand["base_v"]),
            complex_structure=tuple(tuple(str(x) for x in row) for row in cs)
            if cs is not None else None,
        )

    def build(self) -> WeaklySpecialCandidate:
        datum = self.datum.build()
        cs = None
        if self.complex_structure is not None:
            cs = ComplexStructure(RatMat(self.complex_structure))
        try:
            return WeaklySpecialCandidate(
                datum=datum,
                w0_generators=tuple(RatVec(g) for g in self.w0_generators),
                base_u=RatVec(self.base_u),
                base_v=RatVec(self.base_v),
                complex_structure=cs,
            )
        except ValueError as exc:
            raise ConfigError("classify.candidate", str(exc)) from exc


@dataclass(frozen=True)
class SubtorusConfig:
    ambient_dim: int
    generators: Tuple[Tuple[int, ...], ...]
    complex_structure: Optional[Tuple[Tuple[str, ...], ...]] = None

    @classmethod
    def from_dict(cls, data: dict, path: str = "subtorus") -> "SubtorusConfig":
        _expect_keys(data, path, ["ambient_dim", "generators"], ["complex_structure"])
        gens = data["generators"]
        if not isinstance(gens, list):
            raise ConfigError(f"{path}.generators", "expected a list")
        for i, g in enumerate(gens):
            if not isinstance(g, list):
                raise ConfigError(f"{path}.generators[{i}]", "expected an integer vector")
        cs = data.get("complex_structure")
        return cls(
            ambient_dim=_get_int(data, path, "ambient_dim", minimum=1),
            generators=tuple(tuple(int(x) for x in g) for g in gens),
            complex_structure=tuple(tuple(str(x) for x in row) for row in cs)
            if cs is not None else None,
        )


@dataclass(frozen=True)
class OrbitConfig:
    n_max: int
    b: float
    eps: float
    grid_b: Tuple[float, ...] = ()
    grid_eps: Tuple[float, ...] = ()
    cross_check_orders: Tuple[int, ...] = ()
    guard: int = 2
    level: int = 4

    @classmethod
    def from_dict(cls, data: dict, path: str = "orbit") -> "OrbitConfig":
        _expect_keys(data, path, ["n_max", "B", "eps"],
                     ["grid_B", "grid_eps", "cross_check_orders", "guard", "level"])
        b = _get_number(data, path, "B")
        eps = _get_number(data, path, "eps")
        if not (0.0 < b < 1.0):
            raise ConfigError(f"{path}.B", "must lie strictly inside (0, 1)")
        if not (0.0 < eps < 1.0):
            raise ConfigError(f"{path}.eps", "must lie strictly inside (0, 1)")
        grid_b = data.get("grid_B", [])
        grid_eps = data.get("grid_eps", [])
        orders = data.get("cross_check_orders", [])
        if not isinstance(grid_b, list) or not isinstance(grid_eps, list) \
                or not isinstance(orders, list):
            raise ConfigError(path, "grid_B, grid_eps, cross_check_orders must be lists")
        for name, grid in (("grid_B", grid_b), ("grid_eps", grid_eps)):
            for i, x in enumerate(grid):
                if not isinstance(x, (int, float)) or not (0.0 < float(x) < 1.0):
                    raise ConfigError(f"{path}.{name}[{i}]", "must lie in (0, 1)")
        for i, n in enumerate(orders):
            if not isinstance(n, int) or n < 1:
                raise ConfigError(f"{path}.cross_check_orders[{i}]",
                                  "expected a positive integer")
        return cls(
            n_max=_get_int(data, path, "n_max", minimum=1),
            b=b,
            eps=eps,
            grid_b=tuple(float(x) for x in grid_b),
            grid_eps=tuple(float(x) for x in grid_eps),
            cross_check_orders=tuple(orders),
            guard=_get_int(data, path, "guard", default=2, minimum=1),
            level=_get_int(data, path, "level", default=4),
        )


@dataclass(frozen=True)
class IndexCheckConfig:
    primes: Tuple[int, ...] = (2, 3, 5)
    n_values: Tuple[int, ...] = (1, 2, 3)
    m_values: Tuple[int, ...] = (0, 1, 2, 3)
    random_count: int = 50
    max_order: int = 1000
    guard: int = 2
    level: int = 4

    @classmethod
    def from_dict(cls, data: dict, path: str = "index-check") -> "IndexCheckConfig":
        _expect_keys(data, path, [],
                     ["primes", "n_values", "m_values", "random_count",
                      "max_order", "guard", "level"])

        def int_list(key, default):
            val = data.get(key, default)
            if not isinstance(val, list) or not all(
                    isinstance(x, int) and not isinstance(x, bool) for x in val):
                raise ConfigError(f"{path}.{key}", "expected a list of integers")
            return tuple(val)

        return cls(
            primes=int_list("primes", [2, 3, 5]),
            n_values=int_list("n_values", [1, 2, 3]),
            m_values=int_list("m_values", [0, 1, 2, 3]),
            random_count=_get_int(data, path, "random_count", default=50, minimum=0),
            max_order=_get_int(data, path, "max_order", default=1000, minimum=2),
            guard=_get_int(data, path, "guard", default=2, minimum=1),
            level=_get_int(data, path, "level", default=4),
        )


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(path, "config file not found") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(path, f"invalid JSON: {exc}") from exc
