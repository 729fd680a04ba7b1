"""Boundary data of bounded variation on the parameter circle.

Three representations: closed-form evaluators, piecewise-constant arc data,
and uniformly sampled grids with linear interpolation.  All are 2pi-periodic.
The module also houses the built-in generators (the cos(2 theta) family and
the Cantor-stage characteristic functions) and mollification.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InvariantViolation, NonRegularLevel, ValidationError
from .geometry import TWO_PI, normalize_angle

DEFAULT_RESOLUTION = 4096
MOLLIFY_RESOLUTION = 1 << 16

# Removal fraction for the fat Cantor variant: gaps of length rho * 4^-n.
# Must be small enough that excluding each removed gap costs more chord
# length than it saves; verified stage by stage before use.  1/65536 passes
# the reversed-inequality check for stages 1..10.
DEFAULT_FAT_REMOVAL = Fraction(1, 65536)

# A level is non-regular when the datum slope at a crossing is below this.
SLOPE_TOL = 1e-6
_PLATEAU_TOL = 1e-12
_THETA_TOL = 1e-13


@dataclass(frozen=True)
class CrossingSet:
    """Cyclically ordered solutions of f(theta) = t with crossing direction.

    direction +1 means f passes from below to above t as theta increases.
    A regular level always yields an even count with alternating directions.
    """

    level: float
    thetas: np.ndarray
    directions: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "thetas", np.asarray(self.thetas, dtype=float))
        object.__setattr__(self, "directions", np.asarray(self.directions, dtype=int))

    @property
    def n(self) -> int:
        return len(self.thetas)

    def validate(self):
        if len(self.thetas) != len(self.directions):
            raise ValidationError("malformed crossing set: length mismatch")
        if self.n % 2 != 0:
            raise ValidationError("malformed crossing set: odd crossing count")
        if self.n and not np.all(np.diff(self.thetas) > 0):
            raise ValidationError("malformed crossing set: thetas not increasing")
        if self.n and np.any(self.directions[1:] == self.directions[:-1]):
            raise ValidationError("malformed crossing set: directions do not alternate")
        if self.n and self.directions[0] == self.directions[-1]:
            raise ValidationError("malformed crossing set: directions do not alternate")

    def signature(self) -> tuple:
        """Hashable key identifying the crossing structure (for caching)."""
        return (tuple(np.round(self.thetas, 12)), tuple(self.directions))


def _build_crossing_set(level, thetas, directions) -> CrossingSet:
    order = np.argsort(thetas)
    cs = CrossingSet(level, np.asarray(thetas)[order], np.asarray(directions)[order])
    try:
        cs.validate()
    except ValidationError as exc:
        # Tangential or unresolved double crossings surface here.
        raise NonRegularLevel(f"non-regular level {level}: {exc}") from exc
    return cs


class BoundaryDatum:
    """Base class for boundary data f: [0, 2pi) -> R."""

    def evaluate(self, thetas) -> np.ndarray:
        raise NotImplementedError

    @property
    def value_range(self) -> tuple[float, float]:
        raise NotImplementedError

    def bv_seminorm(self) -> float:
        raise NotImplementedError

    def level_crossings(self, t: float, slope_tol: float = SLOPE_TOL) -> CrossingSet:
        raise NotImplementedError

    def __call__(self, thetas):
        return self.evaluate(thetas)


class AnalyticDatum(BoundaryDatum):
    """Closed-form datum; sampled at a fixed resolution for range, variation,
    and crossing brackets, then refined by bisection."""

    def __init__(self, fn, resolution: int = DEFAULT_RESOLUTION):
        if resolution < 16:
            raise ValidationError("analytic datum resolution too small")
        self.fn = fn
        self.resolution = int(resolution)
        self._grid = TWO_PI * np.arange(self.resolution) / self.resolution
        self._samples = np.asarray(fn(self._grid), dtype=float)
        if self._samples.shape != self._grid.shape:
            raise ValidationError("analytic datum evaluator must be vectorized")

    def evaluate(self, thetas):
        return np.asarray(self.fn(normalize_angle(np.asarray(thetas, dtype=float))),
                          dtype=float)

    @property
    def value_range(self):
        return float(self._samples.min()), float(self._samples.max())

    def bv_seminorm(self):
        d = np.diff(self._samples, append=self._samples[:1])
        return float(np.abs(d).sum())

    def level_crossings(self, t, slope_tol=SLOPE_TOL):
        vmin, vmax = self.value_range
        if not (vmin < t < vmax):
            return CrossingSet(t, np.empty(0), np.empty(0, dtype=int))
        s = self._samples - t
        if np.any(s == 0.0):
            raise NonRegularLevel(f"non-regular level {t}: grid sample hits the level")
        s_next = np.roll(s, -1)
        flips = np.nonzero(np.sign(s) != np.sign(s_next))[0]
        if len(flips) == 0:
            return CrossingSet(t, np.empty(0), np.empty(0, dtype=int))
        h = TWO_PI / self.resolution
        lo = self._grid[flips]
        hi = lo + h
        f_lo = s[flips]
        # vectorized bisection to ~1e-13 in theta
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            f_mid = self.evaluate(mid) - t
            take_lo = (f_mid == 0.0) | ((f_mid > 0) == (f_lo > 0))
            lo = np.where(take_lo, mid, lo)
            f_lo = np.where(take_lo, f_mid, f_lo)
            hi = np.where(take_lo, hi, mid)
            if np.max(hi - lo) < _THETA_TOL:
                break
        thetas = 0.5 * (lo + hi)
        # slope at the refined crossing; a bracket secant would smear flat
        # extrema into apparently healthy slopes
        dh = 1e-6
        slopes = (self.evaluate(thetas + dh) - self.evaluate(thetas - dh)) / (2 * dh)
        if np.any(np.abs(slopes) < slope_tol):
            raise NonRegularLevel(f"non-regular level {t}: near-critical crossing")
        directions = np.where(slopes > 0, 1, -1)
        return _build_crossing_set(t, normalize_angle(thetas), directions)


class PiecewiseConstantDatum(BoundaryDatum):
    """Piecewise-constant datum: value ``values[i]`` on [breaks[i], breaks[i+1]),
    cyclically.  Crossings are exact arc endpoints."""

    def __init__(self, breaks, values):
        breaks = np.asarray(breaks, dtype=float)
        values = np.asarray(values, dtype=float)
        if len(breaks) != len(values) or len(breaks) == 0:
            raise ValidationError("piecewise datum needs matching breaks and values")
        if np.any(breaks < 0) or np.any(breaks >= TWO_PI):
            raise ValidationError("breaks must lie in [0, 2pi)")
        if np.any(np.diff(breaks) <= 0):
            raise ValidationError("breaks must be strictly increasing")
        # merge cyclically adjacent arcs with equal values
        keep = np.ones(len(values), dtype=bool)
        for i in range(len(values)):
            if values[i] == values[i - 1] and len(values) > 1:
                keep[i] = False
        if not keep.any():
            keep[0] = True  # constant datum collapses to a single arc
        self.breaks = breaks[keep]
        self.values = values[keep]

    def evaluate(self, thetas):
        th = normalize_angle(np.asarray(thetas, dtype=float))
        idx = np.searchsorted(self.breaks, th, side="right") - 1
        return self.values[idx]

    @property
    def value_range(self):
        return float(self.values.min()), float(self.values.max())

    def bv_seminorm(self):
        if len(self.values) < 2:
            return 0.0
        return float(np.abs(self.values - np.roll(self.values, 1)).sum())

    def level_crossings(self, t, slope_tol=SLOPE_TOL):
        vmin, vmax = self.value_range
        if not (vmin < t < vmax):
            return CrossingSet(t, np.empty(0), np.empty(0, dtype=int))
        if np.min(np.abs(self.values - t)) < _PLATEAU_TOL:
            raise NonRegularLevel(f"non-regular level {t}: coincides with a plateau value")
        thetas, dirs = [], []
        for i in range(len(self.breaks)):
            v_prev = self.values[i - 1]
            v_next = self.values[i]
            if min(v_prev, v_next) < t < max(v_prev, v_next):
                thetas.append(self.breaks[i])
                dirs.append(1 if v_next > v_prev else -1)
        return _build_crossing_set(t, np.asarray(thetas), np.asarray(dirs, dtype=int))


class SampledDatum(BoundaryDatum):
    """Values on the uniform grid theta_i = 2pi i / N, linearly interpolated."""

    def __init__(self, values):
        values = np.asarray(values, dtype=float)
        if values.ndim != 1 or len(values) < 16:
            raise ValidationError("sampled datum needs at least 16 grid values")
        self.values = values
        self.resolution = len(values)
        self._grid = TWO_PI * np.arange(self.resolution + 1) / self.resolution
        self._ext = np.concatenate((values, values[:1]))

    def evaluate(self, thetas):
        th = normalize_angle(np.asarray(thetas, dtype=float))
        return np.interp(th, self._grid, self._ext)

    @property
    def value_range(self):
        return float(self.values.min()), float(self.values.max())

    def bv_seminorm(self):
        d = np.diff(self.values, append=self.values[:1])
        return float(np.abs(d).sum())

    def level_crossings(self, t, slope_tol=SLOPE_TOL):
        vmin, vmax = self.value_range
        if not (vmin < t < vmax):
            return CrossingSet(t, np.empty(0), np.empty(0, dtype=int))
        s = self._ext - t
        if np.any(s == 0.0):
            raise NonRegularLevel(f"non-regular level {t}: grid sample hits the level")
        flips = np.nonzero(np.sign(s[:-1]) != np.sign(s[1:]))[0]
        if len(flips) == 0:
            return CrossingSet(t, np.empty(0), np.empty(0, dtype=int))
        h = TWO_PI / self.resolution
        slopes = (s[flips + 1] - s[flips]) / h
        if np.any(np.abs(slopes) < slope_tol):
            raise NonRegularLevel(f"non-regular level {t}: near-critical crossing")
        frac = -s[flips] / (s[flips + 1] - s[flips])
        thetas = normalize_angle(self._grid[flips] + frac * h)
        directions = np.where(slopes > 0, 1, -1)
        return _build_crossing_set(t, thetas, directions)


# -- module-level operation surface -------------------------------------

def bv_seminorm(f: BoundaryDatum) -> float:
    """Total variation of f around the circle (supremal sum of differences)."""
    return f.bv_seminorm()


def level_crossings(f: BoundaryDatum, t: float,
                    slope_tol: float = SLOPE_TOL) -> CrossingSet:
    """All transversal solutions of f(theta) = t; raises NonRegularLevel."""
    return f.level_crossings(t, slope_tol)


def piecewise_constant(arcs, default: float = 0.0) -> PiecewiseConstantDatum:
    """Datum from arcs [(from, to, value), ...]; `default` fills the gaps.

    Arcs may not overlap; an arc with from > to wraps through 2pi.
    """
    events = []
    for a, b, v in arcs:
        a, b = normalize_angle(a), normalize_angle(b)
        if a == b:
            raise ValidationError("zero-length arc in piecewise data")
        if a < b:
            events.append((a, b, float(v)))
        else:
            events.append((a, TWO_PI, float(v)))
            events.append((0.0, b, float(v)))
    breaks = sorted({0.0} | {e[0] for e in events} | {e[1] % TWO_PI for e in events})
    breaks = np.asarray(breaks, dtype=float)
    values = np.full(len(breaks), float(default))
    mids = (breaks + np.append(np.diff(breaks), TWO_PI - breaks[-1]) / 2.0)
    for a, b, v in events:
        inside = (mids > a) & (mids < b)
        values[inside] = v
    return PiecewiseConstantDatum(breaks, values)


def brothers_datum(phase: float = 0.0,
                   resolution: int = DEFAULT_RESOLUTION) -> AnalyticDatum:
    """The classical two-bump datum cos(2 theta - phase) on the unit circle."""
    return AnalyticDatum(lambda th: np.cos(2.0 * th - phase), resolution)


# -- Cantor-stage generators ---------------------------------------------

def cantor_interval_length(n: int) -> Fraction:
    """Exact interval length at stage n of the thin construction:
    (2^n + 1) / 2^(2n+1)."""
    if n < 0:
        raise ValidationError("stage must be nonnegative")
    return Fraction(2 ** n + 1, 2 ** (2 * n + 1))


def _stage_intervals(n: int, removal) -> list[tuple[Fraction, Fraction]]:
    """Stage-n intervals of [0, 1]; removal(k) is the gap removed at stage k."""
    intervals = [(Fraction(0), Fraction(1))]
    for k in range(1, n + 1):
        gap = removal(k)
        out = []
        for lo, hi in intervals:
            length = hi - lo
            if gap >= length:
                raise ValidationError(f"removal at stage {k} exceeds interval length")
            child = (length - gap) / 2
            out.append((lo, lo + child))
            out.append((hi - child, hi))
        intervals = out
    return intervals


def cantor_stage_intervals(n: int, variant: str = "thin",
                           rho: Fraction = DEFAULT_FAT_REMOVAL):
    """Exact rational stage-n intervals for either construction."""
    if variant == "thin":
        return _stage_intervals(n, lambda k: Fraction(1, 2 ** (2 * k)))
    if variant == "fat":
        rho = Fraction(rho)
        return _stage_intervals(n, lambda k: rho * Fraction(1, 2 ** (2 * k)))
    raise ValidationError(f"unknown cantor variant {variant!r}")


def _chord_factor(x: float) -> float:
    # sqrt(1 - cos x), evaluated stably as sqrt(2)*|sin(x/2)|
    return math.sqrt(2.0) * abs(math.sin(0.5 * x))


def cantor_inequality_check(n: int) -> tuple[bool, float, float]:
    """Check the thin-stage chord inequality
    sqrt(1-cos a_n) + sqrt(1-cos 4^-n) > 2 sqrt(1-cos a_{n+1})
    in double precision.  Returns (holds, lhs, rhs)."""
    if n < 1:
        raise ValidationError("stage must be positive")
    a_n = float(cantor_interval_length(n))
    a_n1 = float(cantor_interval_length(n + 1))
    lhs = _chord_factor(a_n) + _chord_factor(4.0 ** -n)
    rhs = 2.0 * _chord_factor(a_n1)
    return lhs > rhs, lhs, rhs


def thin_inequality_margin(x: float) -> float:
    """The substitution x = 2^-n turns the stage inequality into g(x) > 0 with
    g(0) = 0; this evaluates g."""
    return (
        _chord_factor(x * (x + 1.0) / 2.0)
        + _chord_factor(x * x)
        - 2.0 * _chord_factor(x * (x + 2.0) / 8.0)
    )


def fat_inequality_reversed(n: int,
                            rho: Fraction = DEFAULT_FAT_REMOVAL) -> tuple[bool, float, float]:
    """Check that the stage inequality reverses for the fat construction,
    i.e. spanning a parent interval plus its gap is cheaper than spanning the
    two children separately.  Returns (reversed, lhs, rhs)."""
    if n < 1:
        raise ValidationError("stage must be positive")
    rho = Fraction(rho)
    lengths = _fat_lengths(n + 1, rho)
    lhs = _chord_factor(float(lengths[n])) + _chord_factor(float(rho) * 4.0 ** -n)
    rhs = 2.0 * _chord_factor(float(lengths[n + 1]))
    return lhs < rhs, lhs, rhs


def _fat_lengths(n_max: int, rho: Fraction) -> list[Fraction]:
    lengths = [Fraction(1)]
    for k in range(1, n_max + 1):
        lengths.append(lengths[-1] / 2 - rho * Fraction(1, 2 ** (2 * k + 1)))
    return lengths


def cantor_stage_datum(n: int, variant: str = "thin",
                       rho: Fraction = DEFAULT_FAT_REMOVAL) -> PiecewiseConstantDatum:
    """Characteristic function of the stage-n set, mapped to boundary arcs.

    The interval [0, 1] is read as angles in radians; the datum is 1 on the
    stage intervals and 0 elsewhere.  For the fat variant the reversed chord
    inequality is verified for every stage actually used.
    """
    if n < 0 or n > 20:
        raise ValidationError("cantor stage must be in 0..20")
    if variant == "fat":
        for k in range(1, n + 1):
            ok, lhs, rhs = fat_inequality_reversed(k, rho)
            if not ok:
                raise InvariantViolation(
                    f"fat removal fraction {rho} fails the reversed chord "
                    f"inequality at stage {k} (lhs={lhs:.6e} >= rhs={rhs:.6e})"
                )
    intervals = cantor_stage_intervals(n, variant, rho)
    arcs = [(float(lo), float(hi), 1.0) for lo, hi in intervals]
    return piecewise_constant(arcs, default=0.0)


# -- mollification --------------------------------------------------------

def mollify(f: BoundaryDatum, eps: float,
            resolution: int = MOLLIFY_RESOLUTION) -> SampledDatum:
    """Circular convolution with a smooth bump of half-width eps.

    Returns a sampled datum.  The kernel has unit mass, so constants are
    preserved and the variation never increases; as eps -> 0 the output
    converges to f in L1 with converging variation.
    """
    if eps <= 0.0:
        raise ValidationError("mollification width must be positive")
    if eps >= math.pi:
        raise ValidationError("mollification width must be below pi")
    grid = TWO_PI * np.arange(resolution) / resolution
    vals = f.evaluate(grid)
    h = TWO_PI / resolution
    r = int(eps / h)
    if r == 0:
        return SampledDatum(vals)
    x = np.arange(-r, r + 1) * h
    u = x / eps
    w = np.zeros_like(x)
    inside = np.abs(u) < 1.0
    w[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
    w /= w.sum()
    kernel = np.zeros(resolution)
    kernel[: r + 1] = w[r:]
    kernel[-r:] = w[:r]
    out = np.fft.irfft(np.fft.rfft(vals) * np.fft.rfft(kernel), n=resolution)
    return SampledDatum(out)


def datum_l1_distance(f: BoundaryDatum, g: BoundaryDatum,
                      resolution: int = MOLLIFY_RESOLUTION) -> float:
    """L1 distance on the parameter circle, by midpoint quadrature."""
    grid = TWO_PI * (np.arange(resolution) + 0.5) / resolution
    return float(np.abs(f.evaluate(grid) - g.evaluate(grid)).mean() * TWO_PI)


def datum_l1_norm(f: BoundaryDatum, resolution: int = MOLLIFY_RESOLUTION) -> float:
    grid = TWO_PI * (np.arange(resolution) + 0.5) / resolution
    return float(np.abs(f.evaluate(grid)).mean() * TWO_PI)


# -- file interfaces -------------------------------------------------------

def load_sampled_csv(path) -> SampledDatum:
    """Read a sampled datum from CSV with header ``theta,value``.

    Thetas must form the uniform grid 2pi*i/N in order.
    """
    thetas, values = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [c.strip().lower() for c in header[:2]] != ["theta", "value"]:
            raise ValidationError('sampled CSV must start with header "theta,value"')
        for row in reader:
            if not row:
                continue
            thetas.append(float(row[0]))
            values.append(float(row[1]))
    thetas = np.asarray(thetas)
    n = len(thetas)
    if n < 16:
        raise ValidationError("sampled CSV needs at least 16 rows")
    expected = TWO_PI * np.arange(n) / n
    if not np.allclose(thetas, expected, atol=1e-9):
        raise ValidationError("sampled CSV thetas must be the uniform grid 2pi*i/N")
    return SampledDatum(np.asarray(values))


def piecewise_from_json(spec, default: float = 0.0) -> PiecewiseConstantDatum:
    """Datum from JSON [{"from": t0, "to": t1, "value": v}, ...] (radians)."""
    try:
        arcs = [(float(entry["from"]), float(entry["to"]), float(entry["value"]))
                for entry in spec]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"bad piecewise datum spec: {exc}") from exc
    return piecewise_constant(arcs, default=default)
