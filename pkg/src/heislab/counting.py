"""Counting lattice translates meeting a curve, and curve volumes.

theta_count realizes the set

    { gamma in Z^dims : H(gamma) <= M and (F - gamma) meets C_M }

where C_M is the curve truncated to ambient sup-norm <= M and F is the
open unit box (-1, 1)^dims acting coordinatewise: for a torus ambient
the dims = k coordinates are the real parts of the components, for an
abelian ambient the dims = 2k interleaved real coordinates.  Boxes are
certified "hit" from a sample point, certified "miss" when an interval
enclosure of the curve over a parameter cell provably avoids the closed
box, and reported "uncertain" otherwise; uncertain boxes are never
counted.

Certification is a three-phase procedure: an adaptive quadtree descent
subdivides the parameter domain until every surviving cell has
coordinate enclosures tighter than a fixed cap (so cells are certified
hit or miss coordinatewise except near box boundaries), flagged cells
then refine dyadically for the configured number of rounds, and the
survivors run an exact corner-contact resolver: the curve is evaluated
exactly at dyadic cell corners, and a binding contact whose first-order
feasible cone is trivial certifies the miss out to a curvature-bounded
radius (boxes touched only on their boundary are decided this way).

curve_volume integrates sum_i |p_i'(t)|^2 (the pullback of the standard
(1,1)-form, normalization constant fixed to 1) over the truncated
parameter region by adaptive cell subdivision with exact Gauss-Legendre
quadrature on interior cells.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .curves import ParamCurve, Qi, translation_to_complex
from .lattices import Lattice
from .special import translation_stabilizer

RADIUS_CAP = 0.45  # enumerate candidate boxes only once enclosures are this tight
MAX_DESCENT = 48


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, achieved: float, requested: float):
        super().__init__(
            f"quadrature reached relative tolerance {achieved:.3e} "
            f"(requested {requested:.3e})"
        )
        self.achieved = achieved
        self.requested = requested


@dataclass(frozen=True)
class ResolutionConfig:
    """Root parameter step, refinement depth and certification margins.

    The root step should be a power of two: root grids at different
    height bounds are then nested, which makes counts monotone along a
    schedule run with a single config.
    """

    initial_step: float = 0.5
    refine_depth: int = 6
    margin: float = 1e-9
    low_confidence_ratio: float = 0.10
    tile_size: int = 1 << 18

    def __post_init__(self):
        if self.initial_step <= 0:
            raise ValueError("initial_step must be positive")
        if self.refine_depth < 0:
            raise ValueError("refine_depth must be nonnegative")


@dataclass(frozen=True)
class ThetaRecord:
    """One counting datum at height bound M."""

    m: int
    count: int
    uncertain: int
    volume: Optional[float] = None
    runtime_ms: float = 0.0
    low_confidence: bool = False
    gammas: Tuple[Tuple[int, ...], ...] = field(default=(), repr=False)


@dataclass(frozen=True)
class GrowthFit:
    """Least-squares fit of log(count) against log(M)."""

    slope: float
    intercept: float
    r_squared: float
    schedule: Tuple[int, ...]

    def to_json(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "schedule": list(self.schedule),
        }


def _domain_halfwidth(curve: ParamCurve, m: float) -> float:
    """Halfwidth T with { ||p(t)|| <= M } contained in |t| <= T.

    Uses a coefficient lower bound on the best-behaved nonconstant
    component; for abelian ambients the sup over real coordinates is
    within sqrt(2) of the component modulus.
    """
    target = m * (math.sqrt(2.0) if curve.ambient == "abelian" else 1.0)
    best = None
    for comp in curve.components:
        if len(comp) <= 1:
            continue
        mags = [abs(c.to_complex()) for c in comp]
        d = len(mags) - 1
        r = 1.0
        for _ in range(200):
            lower = mags[d] * r ** d - sum(mags[k] * r ** k for k in range(d))
            if lower > target:
                break
            r *= 1.25
        if best is None or r < best:
            best = r
    if best is None:
        raise ValueError("degenerate curve: all components constant")
    return best + 1.0


def default_resolution(curve: ParamCurve, m_max: float = None, *,
                       refine_depth: int = 6) -> ResolutionConfig:
    """Default config; the descent phase adapts cell sizes on its own."""
    return ResolutionConfig(initial_step=0.5, refine_depth=refine_depth)


def _pack_keys(cols: List[np.ndarray], m: int) -> np.ndarray:
    base = 2 * m + 3
    if base ** len(cols) >= 2 ** 62:
        raise ValueError("height bound too large for key packing")
    key = np.zeros(cols[0].shape, dtype=np.int64)
    for c in cols:
        key = key * base + (c.astype(np.int64) + m + 1)
    return key


def _unpack_keys(keys: np.ndarray, dims: int, m: int) -> List[Tuple[int, ...]]:
    base = 2 * m + 3
    out = []
    for key in keys.tolist():
        coords = []
        for _ in range(dims):
            coords.append(int(key % base) - (m + 1))
            key //= base
        out.append(tuple(reversed(coords)))
    return out


def _key_of(gamma: Sequence[int], m: int) -> int:
    base = 2 * m + 3
    key = 0
    for g in gamma:
        key = key * base + (int(g) + m + 1)
    return key


class _CellBatch:
    """Evaluated curve data over a batch of equal-size parameter cells."""

    def __init__(self, curve: ParamCurve, centers: np.ndarray, halfwidth: float):
        self.centers = centers
        self.halfwidth = halfwidth
        radius = halfwidth * (math.sqrt(2.0) if curve.param == "complex" else 1.0)
        self.values = curve.eval_many(centers)
        self.radii = curve.enclosure_radii(centers, radius)
        if curve.ambient == "torus":
            self.coords = [z.real for z in self.values]
            self.coord_radii = list(self.radii)
        else:
            self.coords = []
            self.coord_radii = []
            for z, r in zip(self.values, self.radii):
                self.coords.extend([z.real, z.imag])
                self.coord_radii.extend([r, r])
        self.moduli = [np.abs(z) for z in self.values]

    def sample_in_region(self, curve: ParamCurve, m: float) -> np.ndarray:
        mask = np.ones(self.centers.shape, dtype=bool)
        if curve.ambient == "torus":
            for q in self.moduli:
                mask &= q <= m
        else:
            for x in self.coords:
                mask &= np.abs(x) <= m
        return mask

    def surely_outside(self, curve: ParamCurve, m: float) -> np.ndarray:
        mask = np.zeros(self.centers.shape, dtype=bool)
        if curve.ambient == "torus":
            for q, r in zip(self.moduli, self.radii):
                mask |= (q - r) > m
        else:
            for x, r in zip(self.coords, self.coord_radii):
                mask |= (np.abs(x) - r) > m
        return mask

    def near_box_boundary(self, margin: float) -> np.ndarray:
        mask = np.zeros(self.centers.shape, dtype=bool)
        for x, r in zip(self.coords, self.coord_radii):
            frac = np.abs(x - np.round(x))
            mask |= frac <= (r + margin)
        return mask

    def near_region_rim(self, curve: ParamCurve, m: float, margin: float) -> np.ndarray:
        mask = np.zeros(self.centers.shape, dtype=bool)
        if curve.ambient == "torus":
            for q, r in zip(self.moduli, self.radii):
                mask |= np.abs(q - m) <= (r + margin)
        else:
            for x, r in zip(self.coords, self.coord_radii):
                mask |= np.abs(np.abs(x) - m) <= (r + margin)
        return mask

    def radius_too_coarse(self) -> np.ndarray:
        mask = np.zeros(self.centers.shape, dtype=bool)
        for r in self.coord_radii:
            mask |= r > RADIUS_CAP
        return mask


def _certified_hits(batch: _CellBatch, region_mask: np.ndarray, m: int,
                    margin: float) -> np.ndarray:
    """Packed keys of boxes certified by the in-region sample points."""
    if not region_mask.any():
        return np.empty(0, dtype=np.int64)
    coords = [x[region_mask] for x in batch.coords]
    dims = len(coords)
    base_int = [np.floor(-x).astype(np.int64) for x in coords]
    keys = []
    for combo in range(1 << dims):
        cols = []
        ok = np.ones(coords[0].shape, dtype=bool)
        for c in range(dims):
            g = base_int[c] + ((combo >> c) & 1)
            val = coords[c] + g
            ok &= (val > -1.0 + margin) & (val < 1.0 - margin)
            ok &= np.abs(g) <= m
            cols.append(g)
        if ok.any():
            keys.append(_pack_keys([col[ok] for col in cols], m))
    if not keys:
        return np.empty(0, dtype=np.int64)
    return np.unique(np.concatenate(keys))


def _candidate_pairs(batch: _CellBatch, flagged: np.ndarray, m: int,
                     margin: float) -> Tuple[np.ndarray, np.ndarray]:
    """(keys, owner cell indices) of boxes a flagged cell cannot decide."""
    idx = np.nonzero(flagged)[0]
    if idx.size == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    coords = [x[idx] for x in batch.coords]
    radii = [np.broadcast_to(r, batch.centers.shape)[idx] for r in batch.coord_radii]
    dims = len(coords)
    lows, spans = [], []
    for x, r in zip(coords, radii):
        lo = np.ceil(-x - 1.0 - r - margin).astype(np.int64)
        hi = np.floor(-x + 1.0 + r + margin).astype(np.int64)
        np.clip(lo, -m, m, out=lo)
        np.clip(hi, -m, m, out=hi)
        lows.append(lo)
        spans.append(np.maximum(hi - lo + 1, 0))
    n_off = max(int(s.max()) for s in spans)
    if n_off == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    offsets = np.arange(n_off, dtype=np.int64)
    grids = np.meshgrid(*([offsets] * dims), indexing="ij")
    flat = [g.ravel() for g in grids]
    n_combo = flat[0].size
    cols = []
    valid = np.ones((idx.size, n_combo), dtype=bool)
    for c in range(dims):
        g = lows[c][:, None] + flat[c][None, :]
        valid &= flat[c][None, :] < spans[c][:, None]
        cols.append(g)
    if not valid.any():
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    sel = np.nonzero(valid)
    keys = _pack_keys([g[sel] for g in cols], m)
    owners = sel[0].astype(np.int64)
    order = np.lexsort((owners, keys))
    return keys[order], idx[owners[order]]


def _base_centers(curve: ParamCurve, t_half: float, step: float) -> np.ndarray:
    lo = math.floor(-t_half / step) - 1
    hi = math.ceil(t_half / step) + 1
    line = (np.arange(lo, hi + 1, dtype=np.float64) + 0.5) * step
    if curve.param == "real":
        return line.astype(np.complex128)
    xs, ys = np.meshgrid(line, line, indexing="ij")
    return (xs + 1j * ys).ravel()


def _subdivide(curve: ParamCurve, centers: np.ndarray, halfwidth: float) -> np.ndarray:
    h = halfwidth / 2.0
    if curve.param == "real":
        return np.concatenate([centers - h, centers + h])
    shifts = np.array([-h - 1j * h, -h + 1j * h, h - 1j * h, h + 1j * h])
    return (centers[:, None] + shifts[None, :]).ravel()


def _flag_mask(batch: _CellBatch, curve: ParamCurve, m: int, margin: float) -> np.ndarray:
    return batch.near_box_boundary(margin) | batch.near_region_rim(curve, m, margin)


def _resolver_pass(resolver: "_ContactResolver", dims: int, m: int,
                   keys_all: np.ndarray, owner_centers: np.ndarray,
                   owner_halves: np.ndarray):
    """Run exact corner certificates over the open (key, cell) pairs.

    Returns (new hit keys, surviving pairs..., uncertain key list); boxes
    certified missed are dropped, undecided ones keep their cells.
    """
    order = np.argsort(keys_all, kind="stable")
    keys_all = keys_all[order]
    owner_centers = owner_centers[order]
    owner_halves = owner_halves[order]
    boundaries = np.flatnonzero(np.diff(keys_all)) + 1
    groups = np.split(np.arange(keys_all.size), boundaries)
    hit_keys: List[int] = []
    open_idx: List[np.ndarray] = []
    uncertain: List[int] = []
    for grp in groups:
        key = int(keys_all[grp[0]])
        gamma = _unpack_keys(np.array([key]), dims, m)[0]
        verdict = resolver.resolve(gamma, owner_centers[grp], owner_halves[grp])
        if verdict == "hit":
            hit_keys.append(key)
        elif verdict == "uncertain":
            uncertain.append(key)
            open_idx.append(grp)
    hit_add = np.array(sorted(hit_keys), dtype=np.int64)
    if open_idx:
        sel = np.concatenate(open_idx)
        return hit_add, keys_all[sel], owner_centers[sel], owner_halves[sel], uncertain
    empty = np.empty(0)
    return (hit_add, empty.astype(np.int64), empty.astype(np.complex128),
            empty.astype(np.float64), uncertain)


class _PairPool:
    """Accumulates (key, owner-cell) pairs across batches of mixed sizes."""

    def __init__(self):
        self.keys: List[np.ndarray] = []
        self.centers: List[np.ndarray] = []
        self.halves: List[np.ndarray] = []

    def add(self, keys: np.ndarray, centers: np.ndarray, halfwidth: float):
        if keys.size:
            self.keys.append(keys)
            self.centers.append(centers)
            self.halves.append(np.full(keys.shape, halfwidth))

    def merged(self):
        if not self.keys:
            empty = np.empty(0)
            return empty.astype(np.int64), empty.astype(np.complex128), empty
        return (np.concatenate(self.keys), np.concatenate(self.centers),
                np.concatenate(self.halves))


def theta_count(curve: ParamCurve, m: int, cfg: ResolutionConfig = None) -> ThetaRecord:
    """Count lattice boxes of height <= M whose translate meets C_M.

    Returns the certified count, the number of undecided boxes at the
    configured refinement depth, and the sorted hit vectors.
    """
    if curve.ambient not in ("torus", "abelian"):
        raise ValueError("counting requires a torus or abelian ambient")
    if m < 1:
        raise ValueError("height bound must be >= 1")
    if cfg is None:
        cfg = default_resolution(curve, m)
    start = time.perf_counter()
    dims = curve.real_dim_coords
    t_half = _domain_halfwidth(curve, m)

    hit_arrays: List[np.ndarray] = []
    pool = _PairPool()

    # Phase 1: adaptive descent to the radius cap.
    level = _base_centers(curve, t_half, cfg.initial_step)
    half = cfg.initial_step / 2.0
    for _ in range(MAX_DESCENT):
        if level.size == 0:
            break
        coarse_parts: List[np.ndarray] = []
        for lo in range(0, level.size, cfg.tile_size):
            tile = level[lo:lo + cfg.tile_size]
            batch = _CellBatch(curve, tile, half)
            keep = ~batch.surely_outside(curve, m)
            region = batch.sample_in_region(curve, m)
            hits_t = _certified_hits(batch, region, m, cfg.margin)
            if hits_t.size:
                hit_arrays.append(hits_t)
            coarse = keep & batch.radius_too_coarse()
            fine = keep & ~coarse
            flag = fine & _flag_mask(batch, curve, m, cfg.margin)
            keys_t, owner_idx = _candidate_pairs(batch, flag, m, cfg.margin)
            pool.add(keys_t, tile[owner_idx], half)
            if coarse.any():
                coarse_parts.append(tile[coarse])
        if not coarse_parts:
            break
        level = _subdivide(curve, np.concatenate(coarse_parts), half)
        half /= 2.0

    hits = np.unique(np.concatenate(hit_arrays)) if hit_arrays else np.empty(0, dtype=np.int64)
    resolver = _ContactResolver(curve, m)

    # Phase 2: exact corner pass, then dyadic refinement of the leftovers,
    # then a final exact pass on whatever survives.  A box that stays
    # undecided over several exact passes is frozen as uncertain instead
    # of having its (ever-growing) cell cluster refined further.
    keys_all, owner_centers, owner_halves = pool.merged()
    uncertain_keys: List[int] = []
    strikes: Dict[int, int] = {}
    frozen: set = set()
    for depth in range(cfg.refine_depth + 1):
        if keys_all.size == 0:
            uncertain_keys = []
            break
        open_mask = ~np.isin(keys_all, hits)
        keys_all = keys_all[open_mask]
        owner_centers = owner_centers[open_mask]
        owner_halves = owner_halves[open_mask]
        if keys_all.size:
            hit_add, keys_all, owner_centers, owner_halves, uncertain_keys = \
                _resolver_pass(resolver, dims, m, keys_all, owner_centers, owner_halves)
            if hit_add.size:
                hits = np.union1d(hits, hit_add)
            for k in uncertain_keys:
                strikes[k] = strikes.get(k, 0) + 1
            newly_frozen = {k for k in uncertain_keys if strikes[k] >= 3}
            if newly_frozen:
                frozen |= newly_frozen
                keep = ~np.isin(keys_all, np.array(sorted(newly_frozen), dtype=np.int64))
                keys_all = keys_all[keep]
                owner_centers = owner_centers[keep]
                owner_halves = owner_halves[keep]
        if keys_all.size == 0 or depth == cfg.refine_depth:
            break
        pool = _PairPool()
        for hw in np.unique(owner_halves):
            sel = owner_halves == hw
            cells = np.unique(owner_centers[sel])
            children = _subdivide(curve, cells, hw)
            child_half = hw / 2.0
            for lo in range(0, children.size, cfg.tile_size):
                tile = children[lo:lo + cfg.tile_size]
                batch = _CellBatch(curve, tile, child_half)
                keep = ~batch.surely_outside(curve, m)
                region = batch.sample_in_region(curve, m)
                hits_t = _certified_hits(batch, region, m, cfg.margin)
                if hits_t.size:
                    hit_arrays.append(hits_t)
                flag = keep & _flag_mask(batch, curve, m, cfg.margin)
                keys_t, owner_idx = _candidate_pairs(batch, flag, m, cfg.margin)
                pool.add(keys_t, tile[owner_idx], child_half)
        hits = np.unique(np.concatenate(hit_arrays)) if hit_arrays else hits
        keys_all, owner_centers, owner_halves = pool.merged()

    uncertain_keys = sorted((set(uncertain_keys) | frozen) - set(hits.tolist()))
    count = int(hits.size)
    uncertain = len(uncertain_keys)
    runtime_ms = (time.perf_counter() - start) * 1000.0
    gammas = tuple(_unpack_keys(hits, dims, m))
    return ThetaRecord(
        m=m,
        count=count,
        uncertain=uncertain,
        runtime_ms=runtime_ms,
        low_confidence=uncertain > cfg.low_confidence_ratio * max(count, 1),
        gammas=gammas,
    )


@dataclass
class _BindingRow:
    """One binding constraint at an exact corner: inward normal and bounds."""

    ax: Fraction
    ay: Fraction
    curvature: float
    grad_var: float
    kind: tuple


class _ContactResolver:
    """Exact certificates for boxes the interval tests leave undecided.

    The curve is evaluated exactly at the dyadic corners of a surviving
    cell.  A corner strictly inside the open box and the sup-norm region
    is an exact hit.  A corner sitting on binding constraint boundaries
    certifies a miss when the first-order feasible cone of the binding
    constraints is trivial: every direction then violates some binding
    constraint at linear rate, which dominates the curvature bound out
    to an explicit radius.  Constraints violated outright at the corner
    contribute their own violation radius.  Floating-point corner values
    preselect which corners can carry exact certificates.
    """

    def __init__(self, curve: ParamCurve, m: int):
        self.curve = curve
        self.m = m
        self.dims = curve.real_dim_coords
        self._cache: Dict[Tuple[Fraction, Fraction], tuple] = {}
        self._dcomp = curve.derivative_components()
        self._cert_reach = 1.0  # ball radius the curvature bounds are computed on
        self._bind_tol = 1e-7

    def resolve(self, gamma: Tuple[int, ...], centers: np.ndarray,
                halves: np.ndarray) -> str:
        cells = sorted(
            {(complex(c), float(h)) for c, h in zip(centers.tolist(), halves.tolist())},
            key=lambda ch: (ch[1], ch[0].real, ch[0].imag),
        )
        diag = math.sqrt(2.0) if self.curve.param == "complex" else 1.0
        corner_arr = self._corner_array(cells)
        coords = self._float_coords(corner_arr)

        # float preselection: strictly feasible corners (exact-hit check)
        # and near-binding corners (cone certificate candidates)
        feas = np.ones(corner_arr.shape, dtype=bool)
        near = np.zeros(corner_arr.shape, dtype=bool)
        for j, g in enumerate(gamma):
            f = coords[j] + g
            feas &= np.abs(f) < 1.0 + self._bind_tol
            near |= np.abs(np.abs(f) - 1.0) <= self._bind_tol
        if self.curve.ambient == "abelian":
            for j in range(self.dims):
                feas &= np.abs(coords[j]) <= self.m + self._bind_tol
                near |= np.abs(np.abs(coords[j]) - self.m) <= self._bind_tol
        else:
            vals_f = self.curve.eval_many(corner_arr)
            for z in vals_f:
                feas &= np.abs(z) <= self.m + self._bind_tol
                near |= np.abs(np.abs(z) - self.m) <= self._bind_tol

        for i in np.nonzero(feas)[0]:
            c = self._as_qi(corner_arr[i])
            vals, _ = self._corner_data(c)
            if self._exact_hit(self._coord_values(vals), vals, gamma):
                return "hit"

        certificates: List[Tuple[complex, float]] = []
        for i in np.nonzero(near)[0]:
            c = self._as_qi(corner_arr[i])
            radius = self._miss_radius(gamma, c, self._cert_reach)
            if radius is not None and radius > 0.0:
                certificates.append((corner_arr[i], radius))

        uncovered = []
        for center, h in cells:
            if not any(abs(center - c0) + h * diag <= r0 for c0, r0 in certificates):
                uncovered.append((center, h))
        if not uncovered:
            return "miss"
        # last resort: violation certificates from the uncovered cells' corners
        for center, h in uncovered:
            done = False
            for c in self._cell_corners_exact(center, h):
                radius = self._miss_radius(gamma, c, self._cert_reach)
                if radius is not None and abs(center - c.to_complex()) + h * diag <= radius:
                    done = True
                    break
            if not done:
                return "uncertain"
        return "miss"

    # -- corner bookkeeping --------------------------------------------------

    def _corner_array(self, cells) -> np.ndarray:
        pts = []
        for center, h in cells:
            if self.curve.param == "real":
                pts.extend([center - h, center + h, center])
            else:
                pts.extend([
                    center + complex(-h, -h), center + complex(-h, h),
                    center + complex(h, -h), center + complex(h, h),
                    center,
                ])
        return np.unique(np.array(pts, dtype=np.complex128))

    def _float_coords(self, corners: np.ndarray) -> List[np.ndarray]:
        vals = self.curve.eval_many(corners)
        if self.curve.ambient == "torus":
            return [z.real for z in vals]
        out = []
        for z in vals:
            out.extend([z.real, z.imag])
        return out

    def _as_qi(self, z: complex) -> Qi:
        return Qi(Fraction(float(z.real)), Fraction(float(z.imag)))

    def _cell_corners_exact(self, center: complex, h: float) -> List[Qi]:
        re, im = Fraction(center.real), Fraction(center.imag)
        hh = Fraction(h)
        if self.curve.param == "real":
            return [Qi(re - hh, 0), Qi(re + hh, 0), Qi(re, 0)]
        return [
            Qi(re - hh, im - hh), Qi(re - hh, im + hh),
            Qi(re + hh, im - hh), Qi(re + hh, im + hh),
            Qi(re, im),
        ]

    def _corner_data(self, c: Qi):
        key = (c.re, c.im)
        if key not in self._cache:
            vals = self.curve.eval_exact(c)
            derivs = self.curve.eval_derivative_exact(c)
            self._cache[key] = (vals, derivs)
        return self._cache[key]

    def _coord_values(self, vals: List[Qi]) -> List[Fraction]:
        if self.curve.ambient == "torus":
            return [v.re for v in vals]
        out = []
        for v in vals:
            out.extend([v.re, v.im])
        return out

    def _coord_gradient(self, derivs: List[Qi], j: int) -> Tuple[Fraction, Fraction]:
        """Gradient of coordinate j with respect to (Re t, Im t)."""
        if self.curve.ambient == "torus":
            d = derivs[j]
            return (d.re, -d.im)
        d = derivs[j // 2]
        if j % 2 == 0:
            return (d.re, -d.im)
        return (d.im, d.re)

    def _component_of_coord(self, j: int) -> int:
        return j if self.curve.ambient == "torus" else j // 2

    def _curvature_bound(self, comp_idx: int, c: Qi, r_max: float) -> float:
        """Upper bound on the quadratic Taylor remainder coefficient."""
        coeffs = self.curve.components[comp_idx]
        d = len(coeffs) - 1
        if d < 2:
            return 0.0
        z = c.to_complex()
        total = 0.0
        deriv = [co.to_complex() for co in coeffs]
        fact = 1.0
        for k in range(1, d + 1):
            deriv = [i * co for i, co in enumerate(deriv)][1:]
            fact *= k
            if k >= 2:
                val = 0j
                for co in reversed(deriv):
                    val = val * z + co
                total += abs(val) * (r_max ** (k - 2)) / fact
        return total * 1.05

    def _lipschitz_bound(self, comp_idx: int, c: Qi, r_max: float) -> float:
        z = c.to_complex()
        val = 0j
        for co in reversed(self._dcomp[comp_idx]):
            val = val * z + co.to_complex()
        curv = self._curvature_bound(comp_idx, c, r_max)
        return abs(val) * 1.05 + curv * r_max * max(2, self.curve.degree)

    def _is_constant_coord(self, j: int) -> bool:
        comp = self.curve.components[self._component_of_coord(j)]
        if self.curve.param == "complex":
            return len(comp) <= 1
        # real parameter: the Re/Im part is a real polynomial of its own
        take_im = self.curve.ambient == "abelian" and j % 2 == 1
        for coeff in comp[1:]:
            part = coeff.im if take_im else coeff.re
            if part != 0:
                return False
        return True

    # -- certificates --------------------------------------------------------

    def _exact_hit(self, coords, vals, gamma) -> bool:
        for x, g in zip(coords, gamma):
            if not (-1 < x + g < 1):
                return False
        if self.curve.ambient == "torus":
            m2 = self.m * self.m
            for v in vals:
                if v.re * v.re + v.im * v.im > m2:
                    return False
        else:
            for x in coords:
                if abs(x) > self.m:
                    return False
        return True

    def _miss_radius(self, gamma, c: Qi, r_max: float) -> Optional[float]:
        vals, derivs = self._corner_data(c)
        coords = self._coord_values(vals)
        rows: List[_BindingRow] = []
        violation_radius = 0.0
        has_violation = False
        has_strict_binding = False

        for j, (x, g) in enumerate(zip(coords, gamma)):
            f = x + g
            comp_idx = self._component_of_coord(j)
            if f <= -1 or f >= 1:
                if f == -1 or f == 1:
                    if self._is_constant_coord(j):
                        return math.inf
                    grad = self._coord_gradient(derivs, j)
                    sign = -1 if f == 1 else 1
                    rows.append(_BindingRow(
                        ax=sign * grad[0], ay=sign * grad[1],
                        curvature=self._curvature_bound(comp_idx, c, r_max),
                        grad_var=self._gradient_variation(comp_idx, c, r_max),
                        kind=("coord", j),
                    ))
                    has_strict_binding = True
                else:
                    eta = float(abs(f) - 1)
                    lip = self._lipschitz_bound(comp_idx, c, r_max)
                    has_violation = True
                    violation_radius = max(
                        violation_radius, math.inf if lip == 0 else 0.9 * eta / lip)

        # sup-norm region constraints
        if self.curve.ambient == "abelian":
            for j, x in enumerate(coords):
                comp_idx = self._component_of_coord(j)
                if abs(x) > self.m:
                    eta = float(abs(x) - self.m)
                    lip = self._lipschitz_bound(comp_idx, c, r_max)
                    has_violation = True
                    violation_radius = max(
                        violation_radius, math.inf if lip == 0 else 0.9 * eta / lip)
                elif abs(x) == self.m:
                    if self._is_constant_coord(j):
                        continue  # constant coordinate on the rim stays admissible
                    grad = self._coord_gradient(derivs, j)
                    sign = -1 if x > 0 else 1
                    rows.append(_BindingRow(
                        ax=sign * grad[0], ay=sign * grad[1],
                        curvature=self._curvature_bound(comp_idx, c, r_max),
                        grad_var=self._gradient_variation(comp_idx, c, r_max),
                        kind=("coord", j),
                    ))
        else:
            m2 = Fraction(self.m * self.m)
            for i, v in enumerate(vals):
                q = v.re * v.re + v.im * v.im
                if q > m2:
                    fv = float(q - m2)
                    lip = self._modulus_lipschitz(i, c, v, derivs[i], r_max)
                    has_violation = True
                    violation_radius = max(
                        violation_radius, math.inf if lip == 0 else 0.9 * fv / lip)
                elif q == m2 and q != 0:
                    d = derivs[i]
                    gx = 2 * (v.re * d.re + v.im * d.im)
                    gy = 2 * (-v.re * d.im + v.im * d.re)
                    curv = self._modulus_curvature(i, c, v, derivs[i], r_max)
                    rows.append(_BindingRow(
                        ax=-gx, ay=-gy,
                        curvature=curv,
                        grad_var=2.0 * curv,
                        kind=("modulus", i),
                    ))

        if not rows and not has_violation:
            return None  # corner is strictly feasible: not a miss witness
        radius = violation_radius if has_violation else 0.0
        if rows and (has_strict_binding or has_violation):
            cone_radius = self._cone_radius(rows)
            if cone_radius is None and has_strict_binding:
                cone_radius = self._locus_radius(rows, c, gamma)
            if cone_radius is not None:
                radius = max(radius, cone_radius)
        if radius <= 0.0 and not has_violation:
            return None
        # the curvature and Lipschitz bounds were taken on the ball of
        # radius r_max, so the certificate cannot extend past it
        return min(radius, r_max)

    def _gradient_variation(self, comp_idx: int, c: Qi, r_max: float) -> float:
        """Bound G with |grad x_j(c+u) - grad x_j(c)| <= G |u| on the ball."""
        coeffs = self.curve.components[comp_idx]
        d = len(coeffs) - 1
        if d < 2:
            return 0.0
        z = c.to_complex()
        total = 0.0
        deriv = [co.to_complex() for co in coeffs]
        fact = 1.0
        for k in range(1, d + 1):
            deriv = [i * co for i, co in enumerate(deriv)][1:]
            fact *= k
            if k >= 2:
                val = 0j
                for co in reversed(deriv):
                    val = val * z + co
                total += abs(val) * (r_max ** (k - 2)) * k / fact
        return total * 1.05

    def _modulus_lipschitz(self, comp_idx: int, c: Qi, v: Qi, dv: Qi, r_max: float) -> float:
        """Lipschitz bound for |p_i|^2 over the corner's certificate ball."""
        cp = self._curvature_bound(comp_idx, c, r_max)
        lip_p = abs(dv.to_complex()) * 1.05 + cp * r_max * max(2, self.curve.degree)
        sup_p = abs(v.to_complex()) + lip_p * r_max
        return 2.0 * sup_p * lip_p + 1e-12

    def _modulus_curvature(self, comp_idx: int, c: Qi, v: Qi, dv: Qi, r_max: float) -> float:
        """Quadratic remainder coefficient for |p_i|^2."""
        cp = self._curvature_bound(comp_idx, c, r_max)
        return 2.0 * abs(v.to_complex()) * cp + (abs(dv.to_complex()) * 1.05 + cp * r_max) ** 2


    def _cone_radius(self, rows: List["_BindingRow"]) -> Optional[float]:
        """Radius out to which the point-cone certificate holds, or None.

        Requires the cone {d : a_j . d >= 0} to be trivial; then
        delta0 = min over unit d of max_j(-a_j . d) is positive and the
        certificate radius is delta0 / max curvature.
        """
        fl = [(float(r.ax), float(r.ay)) for r in rows]
        if any(abs(ax) < 1e-300 and abs(ay) < 1e-300 for ax, ay in fl):
            return None
        if self.curve.param == "real":
            # one-dimensional cone: trivial iff rows pull both ways
            pos = any(ax > 0 for ax, _ in fl)
            neg = any(ax < 0 for ax, _ in fl)
            if not (pos and neg):
                return None
            delta0 = min(max(-ax * d for ax, _ in fl) for d in (1.0, -1.0))
        else:
            candidates = []
            for ax, ay in fl:
                norm = math.hypot(ax, ay)
                candidates.extend([(ax / norm, ay / norm), (-ax / norm, -ay / norm),
                                   (-ay / norm, ax / norm), (ay / norm, -ax / norm)])
            for (ax, ay) in fl:
                for (bx, by) in fl:
                    dx, dy = ax - bx, ay - by
                    norm = math.hypot(dx, dy)
                    if norm > 1e-12:
                        candidates.extend([(-dy / norm, dx / norm), (dy / norm, -dx / norm)])
            delta0 = min(
                max(-(ax * ux + ay * uy) for ax, ay in fl)
                for ux, uy in candidates
            )
        if delta0 <= 1e-9:
            return None
        delta0 *= 0.9
        cmax = max(r.curvature for r in rows)
        return math.inf if cmax == 0.0 else delta0 / cmax

    def _locus_radius(self, rows: List["_BindingRow"], c: Qi, gamma) -> Optional[float]:
        """Certificate along a one-dimensional contact locus.

        Applies when all binding rows are parallel, at least one is a
        strict box constraint, the quotient cone transverse to the
        common line is trivial, and every binding function is exactly
        constant along the line (verified by polynomial identity).  No
        feasible point can then exist within the returned radius: on
        the line the strict constraints stay binding, and transverse
        displacements violate some constraint at linear rate.
        """
        if self.curve.param == "real" or len(rows) < 2:
            return None
        a0 = rows[0]
        if a0.ax == 0 and a0.ay == 0:
            return None
        for r in rows[1:]:
            if a0.ax * r.ay - a0.ay * r.ax != 0:
                return None  # not a common line
        mus = [float(r.ax * a0.ax + r.ay * a0.ay) for r in rows]
        pos = max(mus)
        neg = max(-mu for mu in mus)
        if pos <= 0 or neg <= 0:
            return None  # the quotient cone is a half line, not trivial
        ell = Qi(-a0.ay, a0.ax)
        for r in rows:
            if not self._constant_along(r.kind, c, ell):
                return None
        norm0 = math.hypot(float(a0.ax), float(a0.ay))
        delta0 = min(pos, neg) / norm0
        g_max = max(r.grad_var for r in rows)
        c_max = max(r.curvature for r in rows)
        bound = max(g_max, c_max)
        if bound == 0.0:
            return math.inf
        return 0.9 * delta0 / (2.0 * bound)

    def _compose_along(self, comp_idx: int, c: Qi, ell: Qi) -> List[Qi]:
        """Exact coefficients in s of p_i(c + s * ell)."""
        from math import comb

        coeffs = self.curve.components[comp_idx]
        d = len(coeffs) - 1
        out = [Qi(0, 0) for _ in range(d + 1)]
        c_pow = [Qi(1, 0)]
        ell_pow = [Qi(1, 0)]
        for _ in range(d):
            c_pow.append(c_pow[-1] * c)
            ell_pow.append(ell_pow[-1] * ell)
        for k, ck in enumerate(coeffs):
            if ck.is_zero():
                continue
            for j in range(k + 1):
                out[j] = out[j] + ck * Qi(comb(k, j), 0) * c_pow[k - j] * ell_pow[j]
        return out

    def _constant_along(self, kind, c: Qi, ell: Qi) -> bool:
        """Exactly verify the binding function is constant on c + s*ell.

        A float composition rejects the generic non-constant case before
        any exact arithmetic runs.
        """
        comp_idx = kind[1] if kind[0] == "modulus" else self._component_of_coord(kind[1])
        if not self._float_constant_along(kind, comp_idx, c, ell):
            return False
        if kind[0] == "coord":
            j = kind[1]
            comp = self._compose_along(comp_idx, c, ell)
            take_im = self.curve.ambient == "abelian" and j % 2 == 1
            for coeff in comp[1:]:
                part = coeff.im if take_im else coeff.re
                if part != 0:
                    return False
            return True
        # modulus constraint: |q(s)|^2 must be constant for real s
        q = self._compose_along(comp_idx, c, ell)
        d = len(q) - 1
        for k in range(1, 2 * d + 1):
            acc = Fraction(0)
            for i in range(max(0, k - d), min(k, d) + 1):
                a, b = q[i], q[k - i]
                acc += a.re * b.re + a.im * b.im
            if acc != 0:
                return False
        return True

    def _float_constant_along(self, kind, comp_idx: int, c: Qi, ell: Qi) -> bool:
        zc = c.to_complex()
        zl = ell.to_complex()
        samples = (0.37, -0.61)
        coeffs = self.curve.components[comp_idx]
        base = None
        for s in samples:
            z = zc + s * zl
            val = 0j
            for co in reversed(coeffs):
                val = val * z + co.to_complex()
            if kind[0] == "modulus":
                x = abs(val) ** 2
            else:
                j = kind[1]
                take_im = self.curve.ambient == "abelian" and j % 2 == 1
                x = val.imag if take_im else val.real
            if base is None:
                base = x
            elif abs(x - base) > 1e-9 * max(1.0, abs(base)):
                return False
        return True


def fit_growth(records: Sequence[ThetaRecord]) -> GrowthFit:
    """Ordinary least squares of log(count) against log(M)."""
    if len(records) < 4:
        raise ValueError("growth fits need at least 4 records")
    schedule = [r.m for r in records]
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("schedule must be strictly increasing")
    if any(r.count <= 0 for r in records):
        raise ValueError("growth fits need strictly positive counts")
    xs = np.log([float(r.m) for r in records])
    ys = np.log([float(r.count) for r in records])
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    ss_res = float(np.sum(resid ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return GrowthFit(float(slope), float(intercept), r2, tuple(schedule))


def harvest_stabilizer(curve: ParamCurve, gammas: Iterable[Sequence[int]],
                       max_anchors: int = 512) -> Lattice:
    """Saturated lattice generated by gamma-differences that translate C to C.

    Differences are taken against a deterministic spread of anchor
    gammas, prefiltered numerically, then tested by the exact
    translation-stabilizer membership of the curve.
    """
    dims = curve.real_dim_coords
    rows = sorted(tuple(int(x) for x in g) for g in gammas)
    if len(rows) < 2:
        return Lattice.zero(dims)
    arr = np.array(rows, dtype=np.int64)
    stride = max(1, -(-len(rows) // max_anchors))
    anchors = arr[::stride]
    diffs = (arr[None, :, :] - anchors[:, None, :]).reshape(-1, dims)
    diffs = np.unique(diffs, axis=0)
    diffs = diffs[np.any(diffs != 0, axis=1)]

    stab = translation_stabilizer(curve)
    # cheap float prefilter at a couple of parameter samples
    t_samples = np.array([0.37 + 0.11j, -0.52 + 0.23j], dtype=np.complex128)
    base_vals = np.stack(curve.eval_many(t_samples), axis=-1)
    accepted = []
    for delta in diffs:
        trans = translation_to_complex(curve, delta)
        tvec = np.array([q.to_complex() for q in trans])
        a = tvec[0]
        shifted_vals = np.stack(curve.eval_many(t_samples + a), axis=-1)
        if np.max(np.abs(shifted_vals - base_vals - tvec)) > 1e-6:
            continue
        if stab.contains_translation(trans):
            accepted.append([int(x) for x in delta])
    if not accepted:
        return Lattice.zero(dims)
    return Lattice(dims, accepted).saturate()


def _gauss_cache(n: int, _cache={}):
    if n not in _cache:
        _cache[n] = np.polynomial.legendre.leggauss(n)
    return _cache[n]


def _polyval_many(coeffs: np.ndarray, t: np.ndarray) -> np.ndarray:
    acc = np.full(t.shape, coeffs[-1], dtype=np.complex128)
    for c in coeffs[-2::-1]:
        acc = acc * t + c
    return acc


def _taylor_radii(coeffs: np.ndarray, centers: np.ndarray, radius: float) -> np.ndarray:
    """Bound on |q(t) - q(t0)| for |t - t0| <= radius, q with these coefficients."""
    d = len(coeffs) - 1
    total = np.zeros(centers.shape, dtype=np.float64)
    deriv = coeffs
    fact = 1.0
    for k in range(1, d + 1):
        deriv = deriv[1:] * np.arange(1, len(deriv))
        fact *= k
        total += np.abs(_polyval_many(deriv, centers)) * (radius ** k) / fact
    return total


def _classify_cells(curve: ParamCurve, centers: np.ndarray, half: float, m: float,
                    truncate: bool) -> np.ndarray:
    """+1 inside the (truncated) region, -1 certifiably outside, 0 boundary."""
    batch = _CellBatch(curve, centers, half)
    out = np.zeros(centers.shape, dtype=bool)
    bnd = np.zeros(centers.shape, dtype=bool)
    if curve.ambient == "torus":
        for q, r in zip(batch.moduli, batch.radii):
            out |= (q - r) > m
            bnd |= (q + r) > m
    else:
        for x, r in zip(batch.coords, batch.coord_radii):
            out |= (np.abs(x) - r) > m
            bnd |= (np.abs(x) + r) > m
    if truncate:
        strip = batch.coords if curve.ambient == "abelian" else [z.real for z in batch.values]
        strip_r = batch.coord_radii if curve.ambient == "abelian" else batch.radii
        for x, r in zip(strip, strip_r):
            out |= ((x - r) >= 1.0) | ((x + r) <= -1.0)
            bnd |= ((x + r) >= 1.0) | ((x - r) <= -1.0)
    state = np.ones(centers.shape, dtype=np.int8)
    state[bnd] = 0
    state[out] = -1
    return state


def _interior_integrals(curve: ParamCurve, centers: np.ndarray, half: float,
                        nodes: int) -> float:
    """Exact tensor Gauss-Legendre integral of sum |p_i'|^2 over the cells."""
    xs, ws = _gauss_cache(nodes)
    tx = centers.real[:, None, None] + half * xs[None, :, None]
    ty = centers.imag[:, None, None] + half * xs[None, None, :]
    t = tx + 1j * ty
    vals = np.zeros(t.shape, dtype=np.float64)
    for coeffs in curve.derivative_coeff_arrays():
        vals += np.abs(_polyval_many(coeffs, t)) ** 2
    w2 = ws[:, None] * ws[None, :]
    return float(np.sum(vals * w2[None, :, :]) * half * half)


def _integrand_sup_bound(curve: ParamCurve, centers: np.ndarray, half: float) -> np.ndarray:
    """Upper bound on sum |p_i'|^2 over each cell."""
    radius = half * math.sqrt(2.0)
    bound = np.zeros(centers.shape, dtype=np.float64)
    for coeffs in curve.derivative_coeff_arrays():
        vals = np.abs(_polyval_many(coeffs, centers))
        bound += (vals + _taylor_radii(coeffs, centers, radius)) ** 2
    return bound


def curve_volume(curve: ParamCurve, m: float, truncate_to_fundamental: bool = False,
                 tolerance: float = 1e-2, max_depth: int = 18) -> float:
    """Integral of sum |p_i'|^2 over {t : ||p(t)|| <= M} (optionally inside F).

    Breadth-first adaptive subdivision: interior cells are integrated
    exactly by tensor Gauss-Legendre, boundary cells are refined until
    the remaining bracket is below the relative tolerance.  Raises
    QuadratureError with the achieved tolerance when the depth budget
    is exhausted first.
    """
    if curve.ambient not in ("torus", "abelian"):
        raise ValueError("curve volume requires a torus or abelian ambient")
    if curve.param == "real":
        raise ValueError("curve volume requires a holomorphic (complex-parameter) curve")
    nodes = max(2, curve.degree)
    t_half = _domain_halfwidth(curve, m)
    interior = 0.0
    err_hi = 0.0
    level = np.array([complex(0.0, 0.0)], dtype=np.complex128)
    half = t_half
    for depth in range(max_depth + 1):
        if level.size == 0:
            err_hi = 0.0
            break
        state = _classify_cells(curve, level, half, m, truncate_to_fundamental)
        inside = level[state == 1]
        if inside.size:
            interior += _interior_integrals(curve, inside, half, nodes)
        boundary = level[state == 0]
        if boundary.size == 0:
            err_hi = 0.0
            break
        err_hi = float(np.sum(_integrand_sup_bound(curve, boundary, half))) * (2 * half) ** 2
        value_mid = interior + err_hi / 2.0
        converged = value_mid > 0 and (err_hi / 2.0) / value_mid <= tolerance * 0.5
        if converged or depth == max_depth:
            break
        h = half / 2.0
        shifts = np.array([-h - 1j * h, -h + 1j * h, h - 1j * h, h + 1j * h])
        level = (boundary[:, None] + shifts[None, :]).ravel()
        half = h
    value = interior + err_hi / 2.0
    if err_hi == 0.0:
        achieved = 0.0
    elif value <= 0:
        achieved = math.inf
    else:
        achieved = (err_hi / 2.0) / value
    if achieved > tolerance:
        raise QuadratureError(achieved, tolerance)
    return value
