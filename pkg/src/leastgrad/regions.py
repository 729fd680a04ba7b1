"""Superlevel regions bounded by boundary arcs and interior chords.

A region at level t is described by the crossing set of the datum together
with a non-crossing pairing of the crossings.  Its boundary decomposes into
loops alternating boundary arcs (where the datum lies above the level) and
chords; areas come from the exact line integral of (x dy - y dx)/2 along
the loops.

Membership is decided without discretizing arcs: the relative boundary of
the region inside the domain is exactly the union of the (disjoint) chords,
so a point belongs to the region iff the segment joining it to an anchor
point known to lie inside crosses the chords an even number of times.  By
convexity such segments never leave the domain, which makes the parity test
exact up to floating-point orientation predicates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boundary import CrossingSet
from .errors import InvariantViolation
from .geometry import ConvexDomain

# Points this close to a chord count as inside (closure convention).
CHORD_EPS = 1e-9

# Anchor offset from its seed segment, relative to segment length.
_ANCHOR_FRAC = 1e-7

_QUERY_CHUNK = 1 << 14


@dataclass(frozen=True)
class Loop:
    """One closed boundary component: alternating arc and chord pieces.

    ``pieces`` holds ("arc", theta_from, theta_to) and ("chord", i, j)
    entries, the chord traversed from crossing i to crossing j; the region
    lies to the left of the traversal.
    """

    pieces: tuple


def build_level_loops(crossings: CrossingSet, pairs) -> list[Loop]:
    """Split the region boundary into closed loops.

    Each up-crossing starts a boundary arc running ccw to the next crossing
    (a down-crossing by alternation); each down-crossing continues along its
    chord back to an up-crossing.
    """
    n = crossings.n
    if n == 0:
        return []
    partner = {}
    for i, j in pairs:
        partner[i] = j
        partner[j] = i
    ups = [i for i in range(n) if crossings.directions[i] > 0]
    visited = set()
    loops = []
    for start in ups:
        if start in visited:
            continue
        pieces = []
        cur = start
        while True:
            visited.add(cur)
            nxt = (cur + 1) % n
            pieces.append(("arc", float(crossings.thetas[cur]),
                           float(crossings.thetas[nxt])))
            back = partner[nxt]
            pieces.append(("chord", nxt, back))
            cur = back
            if cur == start:
                break
        loops.append(Loop(tuple(pieces)))
    return loops


def _chord_path(points: np.ndarray, i: int, j: int, paths) -> np.ndarray:
    """Polyline realizing the chord, oriented from crossing i to crossing j."""
    if paths is not None:
        key = (min(i, j), max(i, j))
        path = paths.get(key)
        if path is not None:
            path = np.asarray(path, dtype=float)
            if i > j:
                path = path[::-1]
            return path
    return np.stack((points[i], points[j]))


def loop_area(domain: ConvexDomain, crossings: CrossingSet, loop: Loop,
              paths=None) -> float:
    """Exact enclosed area of one loop via the boundary line integral."""
    points = domain.point(crossings.thetas) if crossings.n else np.empty((0, 2))
    total = 0.0
    for piece in loop.pieces:
        if piece[0] == "arc":
            total += domain.arc_area_integral(piece[1], piece[2])
        else:
            path = _chord_path(points, piece[1], piece[2], paths)
            x, y = path[:, 0], path[:, 1]
            total += 0.5 * float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))
    return total


def enclosed_area(domain: ConvexDomain, crossings: CrossingSet, pairs,
                  paths=None) -> float:
    """Total area of the superlevel region described by crossings + pairing."""
    loops = build_level_loops(crossings, pairs)
    area = math.fsum(loop_area(domain, crossings, loop, paths) for loop in loops)
    if area < -1e-9 * max(domain.area, 1.0):
        raise InvariantViolation(f"negative region area {area}: loop orientation broken")
    return area


def _boundary_segments(points: np.ndarray, crossings: CrossingSet, pairs,
                       paths) -> np.ndarray:
    """All chord segments, each oriented from its down- to its up-crossing,
    flattened to an (n_seg, 2, 2) array (paths may contribute several)."""
    segs = []
    for i, j in pairs:
        if crossings.directions[i] < 0:
            src, dst = i, j
        else:
            src, dst = j, i
        path = _chord_path(points, src, dst, paths)
        for s in range(len(path) - 1):
            segs.append((path[s], path[s + 1]))
    return np.asarray(segs, dtype=float)


def _anchor_point(segs: np.ndarray) -> np.ndarray:
    """A point just left of the first boundary segment, inside the region."""
    a, b = segs[0]
    d = b - a
    length = float(np.hypot(*d))
    n = np.array([-d[1], d[0]]) / length
    return (a + b) / 2.0 + _ANCHOR_FRAC * length * n


def level_mask(domain: ConvexDomain, crossings: CrossingSet, pairs,
               xs: np.ndarray, ys: np.ndarray, paths=None) -> np.ndarray:
    """Region membership for in-domain query points (flat arrays).

    Parity of chord crossings along the segment from an interior anchor:
    even means the point shares the anchor's side of every separating chord,
    i.e. lies in the region.  Points within CHORD_EPS of a chord count as
    inside (closure convention).
    """
    if crossings.n == 0:
        return np.zeros(xs.shape, dtype=bool)
    points = domain.point(crossings.thetas)
    segs = _boundary_segments(points, crossings, pairs, paths)
    anchor = _anchor_point(segs)

    A = segs[:, 0, :]
    B = segs[:, 1, :]
    AB = B - A
    # side of each segment's line the anchor falls on
    side_anchor = AB[:, 0] * (anchor[1] - A[:, 1]) - AB[:, 1] * (anchor[0] - A[:, 0])

    out = np.empty(xs.shape, dtype=bool)
    for lo in range(0, len(xs), _QUERY_CHUNK):
        hi = min(lo + _QUERY_CHUNK, len(xs))
        x = xs[lo:hi]
        y = ys[lo:hi]
        dxa = x[None, :] - anchor[0]
        dya = y[None, :] - anchor[1]
        # proper crossing of segment (anchor -> point) with each chord segment
        side_pt = (AB[:, 0, None] * (y[None, :] - A[:, 1, None])
                   - AB[:, 1, None] * (x[None, :] - A[:, 0, None]))
        o_a = dxa * (A[:, 1, None] - anchor[1]) - dya * (A[:, 0, None] - anchor[0])
        o_b = dxa * (B[:, 1, None] - anchor[1]) - dya * (B[:, 0, None] - anchor[0])
        crosses = (side_anchor[:, None] * side_pt < 0.0) & (o_a * o_b < 0.0)
        inside = (crosses.sum(axis=0) % 2) == 0
        # closure convention near the chords themselves
        near = _near_segments(segs, x, y, CHORD_EPS)
        out[lo:hi] = inside | near
    return out


def _near_segments(segs: np.ndarray, x: np.ndarray, y: np.ndarray,
                   eps: float) -> np.ndarray:
    A = segs[:, 0, :]
    AB = segs[:, 1, :] - A
    den = np.maximum((AB * AB).sum(axis=1), 1e-300)
    px = x[None, :] - A[:, 0, None]
    py = y[None, :] - A[:, 1, None]
    t = np.clip((px * AB[:, 0, None] + py * AB[:, 1, None]) / den[:, None], 0.0, 1.0)
    dx = px - t * AB[:, 0, None]
    dy = py - t * AB[:, 1, None]
    return ((dx * dx + dy * dy) <= eps * eps).any(axis=0)


def region_bbox(domain: ConvexDomain, crossings: CrossingSet, pairs,
                paths=None) -> tuple[float, float, float, float]:
    """Bounding box of the region: chord endpoints, path vertices, and the
    domain extremes of every boundary arc the region touches."""
    x0, y0, x1, y1 = domain.bbox
    if domain.kind not in ("circle", "ellipse"):
        # arc-length parameters do not locate axis extremes; stay conservative
        return x0, y0, x1, y1
    points = domain.point(crossings.thetas)
    xs = [points[:, 0].min(), points[:, 0].max()]
    ys = [points[:, 1].min(), points[:, 1].max()]
    if paths:
        for path in paths.values():
            path = np.asarray(path)
            xs.extend((path[:, 0].min(), path[:, 0].max()))
            ys.extend((path[:, 1].min(), path[:, 1].max()))
    for loop in build_level_loops(crossings, pairs):
        for piece in loop.pieces:
            if piece[0] != "arc":
                continue
            t0 = piece[1]
            span = domain.arc_span(piece[1], piece[2])
            for axis_angle, which in ((0.0, "xmax"), (0.5 * math.pi, "ymax"),
                                      (math.pi, "xmin"), (1.5 * math.pi, "ymin")):
                if (axis_angle - t0) % (2.0 * math.pi) <= span:
                    if which == "xmax":
                        xs.append(x1)
                    elif which == "xmin":
                        xs.append(x0)
                    elif which == "ymax":
                        ys.append(y1)
                    else:
                        ys.append(y0)
    return min(xs), min(ys), max(xs), max(ys)
