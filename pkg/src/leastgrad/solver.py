"""Level sweep, nested superlevel families, and solution reconstruction.

The solver samples levels uniformly in the datum range, solves one minimal
chord matching per regular level, enforces nesting of the resulting regions,
and rebuilds the solution as u(x) = max{t : x in region(t)} on a raster.
Total variation is accounted twice: through the co-area sum of per-level
chord costs, and as the discrete anisotropic variation of the raster.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .boundary import BoundaryDatum, SLOPE_TOL
from .errors import InvariantViolation, NonRegularLevel, SolverError, ValidationError
from .geometry import Anisotropy, ConvexDomain, polyline_cost
from .matching import (
    LevelMatching,
    TIE_REL_TOL,
    chord_has_nonunique_realization,
    enumerate_optimal,
    min_matching,
    staircase_witness,
)
from .regions import level_mask, region_bbox

NESTING_GRID = 64
DEFAULT_LEVELS = 200


def _matching_key(m: LevelMatching):
    """Cache key identifying the region a matching bounds (None if it carries
    bespoke chord realizations)."""
    if m.paths:
        return None
    return (m.crossings.signature(), m.pairs)


@dataclass
class SuperlevelFamily:
    """Nested family of superlevel regions over sampled regular levels."""

    domain: ConvexDomain
    aniso: Anisotropy
    levels: np.ndarray
    matchings: list
    delta_t: float
    vmin: float
    vmax: float
    skipped: list = field(default_factory=list)
    nesting_violations: list = field(default_factory=list)
    repaired: list = field(default_factory=list)

    @property
    def coarea_tv(self) -> float:
        """Co-area total variation: sum of per-level perimeters times dt."""
        return math.fsum(m.cost for m in self.matchings) * self.delta_t

    def chords(self, k: int) -> list:
        """Chord endpoint pairs of level k, as coordinate arrays."""
        m = self.matchings[k]
        pts = self.domain.point(m.crossings.thetas)
        return [(pts[i], pts[j]) for i, j in m.pairs]

    def integral(self) -> float:
        """Layer-cake integral of u over the domain."""
        areas = math.fsum(m.enclosed_area for m in self.matchings)
        return self.vmin * self.domain.area + areas * self.delta_t


def _nesting_points(domain: ConvexDomain, n: int):
    x0, y0, x1, y1 = domain.bbox
    hx, hy = (x1 - x0) / n, (y1 - y0) / n
    xs = x0 + (np.arange(n) + 0.5) * hx
    ys = y0 + (np.arange(n) + 0.5) * hy
    X, Y = np.meshgrid(xs, ys)
    inside = domain.contains_xy(X, Y)
    return X[inside], Y[inside], hx * hy


class _MaskCache:
    """Region masks on a fixed query point set, shared between levels whose
    matchings bound the identical region (piecewise-constant data)."""

    def __init__(self, domain, xs, ys):
        self.domain = domain
        self.xs = xs
        self.ys = ys
        self._store = {}

    def mask(self, m: LevelMatching) -> np.ndarray:
        key = _matching_key(m)
        if key is not None and key in self._store:
            return self._store[key]
        x0, y0, x1, y1 = region_bbox(self.domain, m.crossings, m.pairs, m.paths)
        sel = ((self.xs >= x0) & (self.xs <= x1)
               & (self.ys >= y0) & (self.ys <= y1))
        out = np.zeros(self.xs.shape, dtype=bool)
        if sel.any():
            out[sel] = level_mask(self.domain, m.crossings, m.pairs,
                                  self.xs[sel], self.ys[sel], m.paths)
        if key is not None:
            self._store[key] = out
        return out


def sweep(datum: BoundaryDatum, domain: ConvexDomain, aniso: Anisotropy,
          levels: int = DEFAULT_LEVELS, *, tie_tol: float = TIE_REL_TOL,
          slope_tol: float = SLOPE_TOL, nesting_grid: int = NESTING_GRID,
          repair: bool = True) -> SuperlevelFamily:
    """Sample levels, match crossings per level, verify and repair nesting.

    Levels are the K midpoints of a uniform partition of (min f, max f);
    non-regular levels are skipped and recorded.  Identical crossing
    structures share one matching solve, which keeps piecewise-constant data
    cheap.  Nesting repair walks from the highest level down: a region not
    contained in its lower neighbour is replaced by the cheapest cost-tied
    alternative that is contained, and a diagnostic is recorded when none is.
    """
    if levels < 2:
        raise ValidationError("need at least 2 levels")
    vmin, vmax = datum.value_range
    if not vmax - vmin > 0.0:
        raise ValidationError("f non-constant is required for a level sweep")
    dt = (vmax - vmin) / levels
    ts = vmin + (np.arange(levels) + 0.5) * dt

    kept_levels, matchings, skipped = [], [], []
    cache: dict = {}
    for t in ts:
        try:
            cs = datum.level_crossings(float(t), slope_tol)
        except NonRegularLevel as exc:
            skipped.append((float(t), str(exc)))
            continue
        if cs.n == 0:
            skipped.append((float(t), "no crossings"))
            continue
        key = cs.signature()
        cached = cache.get(key)
        if cached is not None:
            matchings.append(cached.with_level(float(t), cs))
        else:
            m = min_matching(cs, domain, aniso, tie_tol=tie_tol)
            cache[key] = m
            matchings.append(m)
        kept_levels.append(float(t))

    if not kept_levels:
        raise SolverError("no regular levels: the sweep kept nothing")

    family = SuperlevelFamily(
        domain=domain, aniso=aniso, levels=np.asarray(kept_levels),
        matchings=matchings, delta_t=dt, vmin=vmin, vmax=vmax, skipped=skipped,
    )
    _verify_and_repair_nesting(family, nesting_grid, tie_tol, repair)
    return family


def _verify_and_repair_nesting(family: SuperlevelFamily, nesting_grid: int,
                               tie_tol: float, repair: bool):
    n_levels = len(family.levels)
    if n_levels < 2:
        return
    xs, ys, cell_area = _nesting_points(family.domain, nesting_grid)
    cache = _MaskCache(family.domain, xs, ys)
    masks = [None] * n_levels

    def mask(k):
        if masks[k] is None:
            masks[k] = cache.mask(family.matchings[k])
        return masks[k]

    # highest level first; each level must sit inside the one below it
    for k in range(n_levels - 1, 0, -1):
        upper, lower = k, k - 1
        extra = mask(upper) & ~mask(lower)
        if not extra.any():
            continue
        repaired = False
        if repair:
            enum = enumerate_optimal(family.matchings[upper].crossings,
                                     family.domain, family.aniso, rel_tol=tie_tol)
            for cand in enum.matchings:
                cand_mask = cache.mask(cand)
                if not (cand_mask & ~mask(lower)).any():
                    family.matchings[upper] = cand.with_level(
                        family.matchings[upper].level,
                        family.matchings[upper].crossings)
                    masks[upper] = cand_mask
                    family.repaired.append(float(family.levels[upper]))
                    repaired = True
                    break
        if not repaired:
            family.nesting_violations.append(
                (float(family.levels[lower]), float(family.levels[upper]),
                 float(extra.sum() * cell_area))
            )


@dataclass
class SolutionField:
    """Rasterized solution on the domain bounding box.

    xs, ys are cell-center coordinates; values is (H, W) with NaN outside
    the domain mask.  coarea_tv is None for fields that did not come from a
    level sweep (competitors, synthetic instances).
    """

    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray
    mask: np.ndarray
    aniso: Anisotropy
    floor: float
    grid_tv: float = 0.0
    coarea_tv: float | None = None
    family: SuperlevelFamily | None = None

    @property
    def cell_size(self) -> tuple[float, float]:
        return float(self.xs[1] - self.xs[0]), float(self.ys[1] - self.ys[0])

    @property
    def cell_area(self) -> float:
        hx, hy = self.cell_size
        return hx * hy

    def l1_norm(self) -> float:
        return float(np.abs(self.values[self.mask]).sum() * self.cell_area)

    def l1_difference(self, other: "SolutionField") -> float:
        if self.values.shape != other.values.shape:
            raise ValidationError("incomparable: fields live on different grids")
        common = self.mask & other.mask
        return float(np.abs(self.values[common] - other.values[common]).sum()
                     * self.cell_area)


def grid_total_variation(values: np.ndarray, mask: np.ndarray, hx: float,
                         hy: float, aniso: Anisotropy) -> float:
    """Discrete anisotropic variation: per-edge jumps weighted by the cost
    of the edge normal (vertical edges see phi(e_x), horizontal phi(e_y))."""
    wx, wy = aniso.axis_costs()
    dx = np.abs(values[:, 1:] - values[:, :-1])
    both_x = mask[:, 1:] & mask[:, :-1]
    dy = np.abs(values[1:, :] - values[:-1, :])
    both_y = mask[1:, :] & mask[:-1, :]
    return float(dx[both_x].sum() * hy * wx + dy[both_y].sum() * hx * wy)


def _grid_axes(domain: ConvexDomain, resolution) -> tuple[np.ndarray, np.ndarray]:
    w, h = resolution
    if w < 32 or h < 32:
        raise ValidationError("grid resolution must be at least 32 x 32")
    x0, y0, x1, y1 = domain.bbox
    xs = x0 + (np.arange(w) + 0.5) * (x1 - x0) / w
    ys = y0 + (np.arange(h) + 0.5) * (y1 - y0) / h
    return xs, ys


def reconstruct(family: SuperlevelFamily, resolution=(256, 256),
                strict: bool = True) -> SolutionField:
    """Rebuild u(x) = max{t_k : x in region(t_k)} on a W x H raster.

    Cells in no region take the floor value min f (the supremum over an
    empty set of sampled levels).  With strict=True a family carrying
    nesting violations is rejected.
    """
    if strict and family.nesting_violations:
        raise InvariantViolation(
            f"nesting violated at {len(family.nesting_violations)} level pairs"
        )
    xs, ys = _grid_axes(family.domain, resolution)
    X, Y = np.meshgrid(xs, ys)
    inside = family.domain.contains_xy(X, Y)
    xi, yi = X[inside], Y[inside]
    ui = np.full(xi.shape, family.vmin)
    cache = _MaskCache(family.domain, xi, yi)
    for k in range(len(family.levels)):
        mem = cache.mask(family.matchings[k])
        ui[mem] = family.levels[k]

    values = np.full(X.shape, np.nan)
    values[inside] = ui
    hx, hy = xs[1] - xs[0], ys[1] - ys[0]
    tv = grid_total_variation(np.where(inside, values, 0.0), inside, hx, hy,
                              family.aniso)
    return SolutionField(
        xs=xs, ys=ys, values=values, mask=inside, aniso=family.aniso,
        floor=family.vmin, grid_tv=tv, coarea_tv=family.coarea_tv, family=family,
    )


def field_from_function(domain: ConvexDomain, resolution, fn,
                        aniso: Anisotropy = Anisotropy(2.0)) -> SolutionField:
    """Raster a closed-form competitor u(x, y) on the same kind of grid."""
    xs, ys = _grid_axes(domain, resolution)
    X, Y = np.meshgrid(xs, ys)
    inside = domain.contains_xy(X, Y)
    values = np.full(X.shape, np.nan)
    values[inside] = np.asarray(fn(X[inside], Y[inside]), dtype=float)
    hx, hy = xs[1] - xs[0], ys[1] - ys[0]
    tv = grid_total_variation(np.where(inside, values, 0.0), inside, hx, hy, aniso)
    floor = float(np.nanmin(values)) if inside.any() else 0.0
    return SolutionField(xs=xs, ys=ys, values=values, mask=inside, aniso=aniso,
                         floor=floor, grid_tv=tv)


def sample_field(field: SolutionField, points: np.ndarray) -> np.ndarray:
    """Nearest-cell lookup with a small search for points on masked-out cells."""
    hx, hy = field.cell_size
    cols = np.clip(np.round((points[:, 0] - field.xs[0]) / hx).astype(int),
                   0, len(field.xs) - 1)
    rows = np.clip(np.round((points[:, 1] - field.ys[0]) / hy).astype(int),
                   0, len(field.ys) - 1)
    out = field.values[rows, cols]
    bad = ~field.mask[rows, cols]
    if bad.any():
        H, W = field.values.shape
        for idx in np.nonzero(bad)[0]:
            r, c = rows[idx], cols[idx]
            found = False
            for radius in (1, 2, 3):
                r0, r1 = max(0, r - radius), min(H, r + radius + 1)
                c0, c1 = max(0, c - radius), min(W, c + radius + 1)
                window = field.mask[r0:r1, c0:c1]
                if window.any():
                    vals = field.values[r0:r1, c0:c1][window]
                    out[idx] = vals[0]
                    found = True
                    break
            if not found:
                out[idx] = field.floor
    return out


def trace_check(field: SolutionField, datum: BoundaryDatum, band: float,
                samples: int = 2048) -> float:
    """L1 discrepancy between u on an inner offset curve and the datum.

    Small values mean the boundary trace is attained; a discrepancy on the
    order of the datum's L1 norm flags trace loss.
    """
    if field.family is not None:
        domain = field.family.domain
    else:
        raise ValidationError("trace_check needs a field with an attached family")
    return trace_discrepancy(field, domain, datum, band, samples)


def trace_discrepancy(field: SolutionField, domain: ConvexDomain,
                      datum: BoundaryDatum, band: float,
                      samples: int = 2048) -> float:
    if not 0.0 < band < domain.inradius:
        raise ValidationError("offset band must be positive and below the inradius")
    thetas = 2.0 * math.pi * (np.arange(samples) + 0.5) / samples
    pts = domain.point(thetas) - band * domain.outward_normal(thetas)
    u = sample_field(field, pts)
    f = datum.evaluate(thetas)
    return float(np.abs(u - f).mean() * 2.0 * math.pi)


@dataclass(frozen=True)
class Comparison:
    field_tv: float
    competitor_tv: float
    used: str  # "coarea" or "grid"


def compare_competitor(field: SolutionField, competitor: SolutionField,
                       datum: BoundaryDatum, domain: ConvexDomain,
                       band: float = 0.01, trace_tol: float = 0.25,
                       tv_tol: float = 1e-6) -> Comparison:
    """Order the anisotropic total variations of the solver's field and a
    competitor with the same trace; the solver must not lose."""
    if field.values.shape != competitor.values.shape:
        raise ValidationError("incomparable: fields live on different grids")
    d1 = trace_discrepancy(field, domain, datum, band)
    d2 = trace_discrepancy(competitor, domain, datum, band)
    if d1 > trace_tol or d2 > trace_tol:
        raise ValidationError(
            f"incomparable: trace discrepancies {d1:.4g} vs {d2:.4g} "
            f"exceed tolerance {trace_tol}"
        )
    if field.coarea_tv is not None and competitor.coarea_tv is not None:
        a, b, used = field.coarea_tv, competitor.coarea_tv, "coarea"
    else:
        a, b, used = field.grid_tv, competitor.grid_tv, "grid"
    if a > b + tv_tol * max(1.0, abs(b)):
        raise InvariantViolation(
            f"competitor beats the solver: {a:.12g} > {b:.12g} ({used})"
        )
    return Comparison(a, b, used)


def realize_with_staircases(family: SuperlevelFamily, steps: int = 4) -> SuperlevelFamily:
    """Alternative solution family: every chord admitting non-segment
    minimizers is replaced by an equal-cost staircase or zigzag."""
    new_matchings = []
    for m in family.matchings:
        pts = family.domain.point(m.crossings.thetas)
        paths = {}
        for i, j in m.pairs:
            lo, hi = min(i, j), max(i, j)
            if chord_has_nonunique_realization(pts[lo], pts[hi], family.aniso):
                paths[(lo, hi)] = staircase_witness(pts[lo], pts[hi],
                                                    family.aniso, steps)
        if paths:
            cost = math.fsum(
                polyline_cost(paths[(min(i, j), max(i, j))], family.aniso)
                if (min(i, j), max(i, j)) in paths
                else family.aniso.cost(pts[j] - pts[i])
                for i, j in m.pairs
            )
            new_matchings.append(replace(m, paths=paths, cost=cost))
        else:
            new_matchings.append(m)
    return replace(family, matchings=new_matchings)


def field_to_csv(field: SolutionField, path):
    """Write the raster as CSV rows (x, y, u) over in-domain cells."""
    X, Y = np.meshgrid(field.xs, field.ys)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "u"])
        for x, y, u in zip(X[field.mask], Y[field.mask], field.values[field.mask]):
            writer.writerow([f"{x:.9g}", f"{y:.9g}", f"{u:.12g}"])


def summary_dict(field: SolutionField) -> dict:
    """Stable summary payload shared by all commands."""
    fam = field.family
    return {
        "schema": 1,
        "coarea_tv": field.coarea_tv,
        "grid_tv": field.grid_tv,
        "skipped_levels": [t for t, _ in fam.skipped] if fam else [],
        "nesting_violations": (
            [{"t_lower": lo, "t_upper": hi, "area": a}
             for lo, hi, a in fam.nesting_violations] if fam else []
        ),
        "levels_kept": int(len(fam.levels)) if fam else 0,
        "repaired_levels": fam.repaired if fam else [],
    }
