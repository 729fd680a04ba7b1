"""Strictly convex planar domains and p-norm chord costs.

The domain boundary is exposed only through a parametric interface
``gamma(theta)``, ``theta in [0, 2pi)``, counterclockwise.  All cost
computations reduce to the planar p-norm of chord displacement vectors;
``p = inf`` is a first-class case with the explicit max formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import shapely
from shapely.geometry import Polygon as ShapelyPolygon

from .errors import ValidationError

TWO_PI = 2.0 * math.pi

# Containment slack: points this close to a boundary curve count as inside.
BOUNDARY_EPS = 1e-9


def normalize_angle(theta):
    """Map angles into [0, 2pi)."""
    return np.mod(theta, TWO_PI)


def parse_p(value) -> float:
    """Parse a p-norm exponent; the string "inf" encodes p = infinity."""
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinity"):
            return math.inf
        value = float(value)
    p = float(value)
    if math.isnan(p) or p < 1.0:
        raise ValidationError(f"anisotropy exponent must satisfy p >= 1, got {value!r}")
    return p


@dataclass(frozen=True)
class Anisotropy:
    """Uniform planar p-norm acting on directions.

    Convex, 1-homogeneous, and elliptic: bounded between positive multiples
    of the Euclidean norm, so it is an admissible cost on chord directions.
    """

    p: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "p", parse_p(self.p))

    @property
    def is_smooth(self) -> bool:
        """True for 1 < p < inf, where the norm is smooth off the origin."""
        return 1.0 < self.p < math.inf

    def cost(self, v) -> float:
        """p-norm of a single displacement vector."""
        x, y = float(v[0]), float(v[1])
        if self.p == 1.0:
            return abs(x) + abs(y)
        if self.p == math.inf:
            return max(abs(x), abs(y))
        if self.p == 2.0:
            return math.hypot(x, y)
        return (abs(x) ** self.p + abs(y) ** self.p) ** (1.0 / self.p)

    def costs(self, vs: np.ndarray) -> np.ndarray:
        """Vectorized p-norms of an (n, 2) array of displacements."""
        vs = np.asarray(vs, dtype=float)
        ax = np.abs(vs)
        if self.p == 1.0:
            return ax.sum(axis=-1)
        if self.p == math.inf:
            return ax.max(axis=-1)
        if self.p == 2.0:
            return np.hypot(ax[..., 0], ax[..., 1])
        return (ax ** self.p).sum(axis=-1) ** (1.0 / self.p)

    def axis_costs(self) -> tuple[float, float]:
        """Costs of the coordinate directions (phi(e_x), phi(e_y))."""
        return self.cost((1.0, 0.0)), self.cost((0.0, 1.0))


def boundary_point(domain: "ConvexDomain", theta) -> np.ndarray:
    """gamma(theta); angles outside [0, 2pi) are normalized, not rejected."""
    return domain.point(normalize_angle(theta))


def chord_cost(a, b, aniso: Anisotropy) -> float:
    """Minimal anisotropic perimeter of any curve joining a and b.

    Equals the p-norm of b - a: straight segments are minimal for smooth p,
    and for p in {1, inf} the monotone / slope-bounded competitors achieve
    the same value, never less.
    """
    return aniso.cost((b[0] - a[0], b[1] - a[1]))


def polyline_cost(points, aniso: Anisotropy) -> float:
    """Sum of chord costs over consecutive segments of a polyline."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] != 2:
        raise ValidationError("degenerate polyline: need at least 2 planar points")
    return math.fsum(aniso.costs(np.diff(pts, axis=0)))


def _point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.hypot(*(p - a)))
    t = float((p - a) @ ab) / denom
    t = min(1.0, max(0.0, t))
    proj = a + t * ab
    return float(np.hypot(*(p - proj)))


def _cross2(u: np.ndarray, v: np.ndarray) -> float:
    return float(u[0] * v[1] - u[1] * v[0])


def segment_distance(p1, p2, q1, q2) -> float:
    """Euclidean distance between two closed segments (0 if they intersect)."""
    p1, p2, q1, q2 = (np.asarray(v, dtype=float) for v in (p1, p2, q1, q2))

    d1 = _cross2(q2 - q1, p1 - q1)
    d2 = _cross2(q2 - q1, p2 - q1)
    d3 = _cross2(p2 - p1, q1 - p1)
    d4 = _cross2(p2 - p1, q2 - p1)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
        return 0.0
    return min(
        _point_segment_distance(p1, q1, q2),
        _point_segment_distance(p2, q1, q2),
        _point_segment_distance(q1, p1, p2),
        _point_segment_distance(q2, p1, p2),
    )


class ConvexDomain:
    """Base class: a bounded strictly convex region with parametric boundary."""

    kind: str = "abstract"

    def point(self, theta):
        """Boundary point gamma(theta); accepts scalars or arrays."""
        raise NotImplementedError

    def outward_normal(self, theta):
        raise NotImplementedError

    def contains_xy(self, x, y) -> np.ndarray:
        """Closure membership test, vectorized over coordinate arrays."""
        raise NotImplementedError

    def arc_area_integral(self, t0: float, t1: float) -> float:
        """Integral of (x dy - y dx)/2 along the boundary arc t0 -> t1 (ccw)."""
        raise NotImplementedError

    def arc_points(self, t0: float, t1: float, tol: float) -> np.ndarray:
        """Polyline along the ccw arc t0 -> t1 with spatial deviation <= tol."""
        raise NotImplementedError

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        raise NotImplementedError

    @property
    def area(self) -> float:
        raise NotImplementedError

    @property
    def inradius(self) -> float:
        raise NotImplementedError

    def to_config(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def arc_span(t0: float, t1: float) -> float:
        """Ccw angular span from t0 to t1, in (0, 2pi]."""
        span = (t1 - t0) % TWO_PI
        return span if span > 0.0 else TWO_PI


def _arc_thetas(t0: float, span: float, scale: float, tol: float) -> np.ndarray:
    # chord sagitta of a step dt on radius R is about R*dt^2/8
    dt_max = math.sqrt(8.0 * max(tol, 1e-12) / max(scale, 1e-12))
    dt_max = min(max(dt_max, 2e-4), span)
    n = max(2, int(math.ceil(span / dt_max)) + 1)
    return t0 + np.linspace(0.0, span, n)


@dataclass(frozen=True)
class Circle(ConvexDomain):
    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 1.0
    kind: str = field(default="circle", init=False)

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ValidationError("circle radius must be positive")

    def point(self, theta):
        theta = np.asarray(theta, dtype=float)
        return np.stack(
            (self.center[0] + self.radius * np.cos(theta),
             self.center[1] + self.radius * np.sin(theta)),
            axis=-1,
        )

    def outward_normal(self, theta):
        theta = np.asarray(theta, dtype=float)
        return np.stack((np.cos(theta), np.sin(theta)), axis=-1)

    def contains_xy(self, x, y):
        dx = np.asarray(x, dtype=float) - self.center[0]
        dy = np.asarray(y, dtype=float) - self.center[1]
        r = self.radius + BOUNDARY_EPS
        return dx * dx + dy * dy <= r * r

    def arc_area_integral(self, t0, t1):
        span = self.arc_span(t0, t1)
        t1 = t0 + span
        cx, cy = self.center
        r = self.radius
        return 0.5 * (
            r * r * span
            + r * cx * (math.sin(t1) - math.sin(t0))
            - r * cy * (math.cos(t1) - math.cos(t0))
        )

    def arc_points(self, t0, t1, tol):
        span = self.arc_span(t0, t1)
        return self.point(_arc_thetas(t0, span, self.radius, tol))

    @property
    def bbox(self):
        cx, cy = self.center
        r = self.radius
        return (cx - r, cy - r, cx + r, cy + r)

    @property
    def area(self):
        return math.pi * self.radius ** 2

    @property
    def inradius(self):
        return self.radius

    def to_config(self):
        return {"kind": "circle", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class Ellipse(ConvexDomain):
    center: tuple[float, float] = (0.0, 0.0)
    semi_axes: tuple[float, float] = (1.0, 1.0)
    kind: str = field(default="ellipse", init=False)

    def __post_init__(self):
        if not (self.semi_axes[0] > 0.0 and self.semi_axes[1] > 0.0):
            raise ValidationError("ellipse semi-axes must be positive")

    def point(self, theta):
        theta = np.asarray(theta, dtype=float)
        a, b = self.semi_axes
        return np.stack(
            (self.center[0] + a * np.cos(theta),
             self.center[1] + b * np.sin(theta)),
            axis=-1,
        )

    def outward_normal(self, theta):
        theta = np.asarray(theta, dtype=float)
        a, b = self.semi_axes
        nx = np.cos(theta) / a
        ny = np.sin(theta) / b
        norm = np.hypot(nx, ny)
        return np.stack((nx / norm, ny / norm), axis=-1)

    def contains_xy(self, x, y):
        a, b = self.semi_axes
        u = (np.asarray(x, dtype=float) - self.center[0]) / a
        v = (np.asarray(y, dtype=float) - self.center[1]) / b
        return u * u + v * v <= 1.0 + BOUNDARY_EPS

    def arc_area_integral(self, t0, t1):
        span = self.arc_span(t0, t1)
        t1 = t0 + span
        cx, cy = self.center
        a, b = self.semi_axes
        return 0.5 * (
            a * b * span
            + b * cx * (math.sin(t1) - math.sin(t0))
            - a * cy * (math.cos(t1) - math.cos(t0))
        )

    def arc_points(self, t0, t1, tol):
        span = self.arc_span(t0, t1)
        return self.point(_arc_thetas(t0, span, max(self.semi_axes), tol))

    @property
    def bbox(self):
        cx, cy = self.center
        a, b = self.semi_axes
        return (cx - a, cy - b, cx + a, cy + b)

    @property
    def area(self):
        return math.pi * self.semi_axes[0] * self.semi_axes[1]

    @property
    def inradius(self):
        return min(self.semi_axes)

    def to_config(self):
        return {"kind": "ellipse", "center": list(self.center),
                "semi_axes": list(self.semi_axes)}


class ConvexPolygon(ConvexDomain):
    """Polygonal approximation of a strictly convex boundary.

    The parameter theta is proportional to arc length: theta = 2pi * s / L.
    Requires at least 64 counterclockwise vertices with strictly positive
    cross products at every corner.
    """

    kind = "polygon"
    MIN_VERTICES = 64

    def __init__(self, vertices):
        verts = np.asarray(vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2:
            raise ValidationError("polygon vertices must be an (n, 2) array")
        if verts.shape[0] < self.MIN_VERTICES:
            raise ValidationError(
                f"polygonal domains need >= {self.MIN_VERTICES} vertices, "
                f"got {verts.shape[0]}"
            )
        e = np.roll(verts, -1, axis=0) - verts
        cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        if not np.all(cross > 0.0):
            raise ValidationError(
                "polygon must be strictly convex and counterclockwise "
                "(all consecutive-edge cross products positive)"
            )
        self.vertices = verts
        self._edge_len = np.hypot(e[:, 0], e[:, 1])
        if np.any(self._edge_len <= 0.0):
            raise ValidationError("polygon has a zero-length edge")
        self._cum = np.concatenate(([0.0], np.cumsum(self._edge_len)))
        self._perimeter = float(self._cum[-1])
        self._shape = ShapelyPolygon(verts)
        shapely.prepare(self._shape)
        self._centroid = verts.mean(axis=0)

    @classmethod
    def regular(cls, n: int, center=(0.0, 0.0), radius: float = 1.0) -> "ConvexPolygon":
        th = TWO_PI * np.arange(n) / n
        return cls(np.stack((center[0] + radius * np.cos(th),
                             center[1] + radius * np.sin(th)), axis=-1))

    def _arclen(self, theta) -> np.ndarray:
        return normalize_angle(theta) / TWO_PI * self._perimeter

    def point(self, theta):
        s = np.atleast_1d(self._arclen(theta))
        idx = np.clip(np.searchsorted(self._cum, s, side="right") - 1, 0,
                      len(self._edge_len) - 1)
        frac = (s - self._cum[idx]) / self._edge_len[idx]
        a = self.vertices[idx]
        b = self.vertices[(idx + 1) % len(self.vertices)]
        out = a + frac[:, None] * (b - a)
        if np.isscalar(theta) or np.asarray(theta).ndim == 0:
            return out[0]
        return out

    def outward_normal(self, theta):
        s = np.atleast_1d(self._arclen(theta))
        idx = np.clip(np.searchsorted(self._cum, s, side="right") - 1, 0,
                      len(self._edge_len) - 1)
        a = self.vertices[idx]
        b = self.vertices[(idx + 1) % len(self.vertices)]
        t = b - a
        n = np.stack((t[:, 1], -t[:, 0]), axis=-1)
        n /= np.hypot(n[:, 0], n[:, 1])[:, None]
        if np.isscalar(theta) or np.asarray(theta).ndim == 0:
            return n[0]
        return n

    def contains_xy(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return shapely.intersects_xy(self._shape, x, y)

    def _arc_vertex_chain(self, t0: float, t1: float) -> np.ndarray:
        span = self.arc_span(t0, t1)
        s0 = float(self._arclen(t0))
        s_span = span / TWO_PI * self._perimeter
        s1 = s0 + s_span
        # vertices with arc length strictly inside (s0, s1), unwrapped
        verts = [self.point(t0)]
        k0 = int(np.searchsorted(self._cum, s0, side="right"))
        s = self._cum[k0 % len(self._edge_len)] + self._perimeter * (k0 // len(self._edge_len))
        k = k0
        while s < s1 - 1e-12 * self._perimeter:
            if s > s0 + 1e-12 * self._perimeter:
                verts.append(self.vertices[k % len(self.vertices)])
            k += 1
            s = self._cum[k % len(self._edge_len)] + self._perimeter * (k // len(self._edge_len))
        verts.append(self.point(t0 + span))
        return np.asarray(verts)

    def arc_area_integral(self, t0, t1):
        pts = self._arc_vertex_chain(t0, t1)
        x, y = pts[:, 0], pts[:, 1]
        return 0.5 * float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))

    def arc_points(self, t0, t1, tol):
        return self._arc_vertex_chain(t0, t1)

    @property
    def bbox(self):
        mn = self.vertices.min(axis=0)
        mx = self.vertices.max(axis=0)
        return (mn[0], mn[1], mx[0], mx[1])

    @property
    def area(self):
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @property
    def inradius(self):
        c = self._centroid
        a = self.vertices
        b = np.roll(a, -1, axis=0)
        e = b - a
        # distance from centroid to each edge line
        d = np.abs(e[:, 0] * (c[1] - a[:, 1]) - e[:, 1] * (c[0] - a[:, 0]))
        return float(np.min(d / np.hypot(e[:, 0], e[:, 1])))

    def to_config(self):
        return {"kind": "polygon", "vertices": self.vertices.tolist()}


def domain_from_config(cfg: dict) -> ConvexDomain:
    """Build a domain from its JSON configuration form."""
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ValidationError("domain config must be an object with a 'kind' field")
    kind = cfg["kind"]
    if kind == "circle":
        return Circle(tuple(cfg.get("center", (0.0, 0.0))), float(cfg.get("radius", 1.0)))
    if kind == "ellipse":
        return Ellipse(tuple(cfg.get("center", (0.0, 0.0))),
                       tuple(cfg.get("semi_axes", (1.0, 1.0))))
    if kind == "polygon":
        if "vertices" not in cfg:
            raise ValidationError("polygon config needs a 'vertices' list")
        return ConvexPolygon(cfg["vertices"])
    raise ValidationError(f"unknown domain kind {kind!r}")
