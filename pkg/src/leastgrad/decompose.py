"""Split a solved field into a continuous part and a piecewise-constant part.

Jump curves of a planar least-gradient function are chords with constant
jump; removing them cuts the domain into regions whose adjacency graph is a
tree.  The jump part is the path sum of signed jump weights from a root
region; subtracting it leaves the continuous part.  Chords are detected in
chord space (the same chord persisting over an interval of levels), not by
raster edge detection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvariantViolation, ValidationError
from .geometry import Anisotropy
from .solver import SolutionField, grid_total_variation, sample_field

# Relative value gap (fraction of the datum range) below which a persistent
# chord is considered level-sampling granularity rather than a jump.
JUMP_THRESHOLD_FRACTION = 1e-3

# Chord endpoints are matched across levels after rounding to this many
# decimals; genuine jumps repeat the same endpoints exactly.
_CHORD_DECIMALS = 9


@dataclass
class RegionTree:
    """Regions cut out by jump chords, with jump weights on adjacency edges.

    edges hold (a, b, weight, chord_index) with the convention
    value(b) - value(a) = weight.  labels is an (H, W) map of region ids
    (-1 outside the domain); chords align with chord_index.
    """

    n_regions: int
    edges: list
    root: int
    labels: np.ndarray
    xs: np.ndarray
    ys: np.ndarray
    aniso: Anisotropy
    chords: list
    jump_threshold: float

    def __post_init__(self):
        validate_tree(self.n_regions, self.edges)

    def region_sizes(self) -> np.ndarray:
        return np.bincount(self.labels[self.labels >= 0], minlength=self.n_regions)

    def to_json(self) -> dict:
        return {
            "regions": [int(s) for s in self.region_sizes()],
            "edges": [{"a": int(a), "b": int(b), "weight": float(w)}
                      for a, b, w, _ in self.edges],
            "root": int(self.root),
        }


def validate_tree(n_regions: int, edges) -> None:
    """Connected and acyclic, or raise "non-tree adjacency"."""
    if n_regions < 1:
        raise ValidationError("a region tree needs at least one region")
    if len(edges) != n_regions - 1:
        raise InvariantViolation(
            f"non-tree adjacency: {len(edges)} edges for {n_regions} regions"
        )
    adj = {i: [] for i in range(n_regions)}
    for a, b, *_ in edges:
        if a == b or not (0 <= a < n_regions and 0 <= b < n_regions):
            raise InvariantViolation("non-tree adjacency: bad edge endpoints")
        adj[a].append(b)
        adj[b].append(a)
    seen = {0}
    stack = [0]
    while stack:
        cur = stack.pop()
        for nxt in adj[cur]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    if len(seen) != n_regions:
        raise InvariantViolation("non-tree adjacency: region graph is disconnected")


def region_values(tree: RegionTree, root: int | None = None) -> np.ndarray:
    """Signed path sums of edge weights from the root region (value 0)."""
    root = tree.root if root is None else root
    vals = np.full(tree.n_regions, np.nan)
    vals[root] = 0.0
    adj: dict = {i: [] for i in range(tree.n_regions)}
    for a, b, w, _ in tree.edges:
        adj[a].append((b, +w))
        adj[b].append((a, -w))
    stack = [root]
    while stack:
        cur = stack.pop()
        for nxt, w in adj[cur]:
            if math.isnan(vals[nxt]):
                vals[nxt] = vals[cur] + w
                stack.append(nxt)
    return vals


def chord_side_signs(chords, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """(npoints, nchords) matrix: True where the point lies on the positive
    (left) side of the chord's supporting line."""
    out = np.empty((len(x), len(chords)), dtype=bool)
    for m, (p, q) in enumerate(chords):
        out[:, m] = ((q[0] - p[0]) * (y - p[1]) - (q[1] - p[1]) * (x - p[0])) >= 0.0
    return out


def tree_from_chords(xs, ys, inside, chords, weights, aniso: Anisotropy,
                     jump_threshold: float) -> RegionTree:
    """Label grid cells by chord sides and assemble the adjacency tree.

    chords are ((x1, y1), (x2, y2)) pairs with both endpoints on the domain
    boundary; ``weights[m]`` is the jump across chord m, positive toward its
    left side.  Raises when the detected graph is not a tree (thin regions
    lost to the raster, crossing chords, or a deliberately cyclic input).
    """
    X, Y = np.meshgrid(xs, ys)
    labels = np.full(X.shape, -1, dtype=int)
    if not chords:
        labels[inside] = 0
        return RegionTree(1, [], 0, labels, np.asarray(xs), np.asarray(ys),
                          aniso, [], jump_threshold)
    signs = chord_side_signs(chords, X[inside], Y[inside])
    uniq, ids = np.unique(signs, axis=0, return_inverse=True)
    labels[inside] = ids
    n_regions = len(uniq)
    edges = []
    for m in range(len(chords)):
        pair = None
        for a in range(n_regions):
            for b in range(a + 1, n_regions):
                diff = uniq[a] != uniq[b]
                if diff[m] and diff.sum() == 1:
                    if pair is not None:
                        raise InvariantViolation(
                            "non-tree adjacency: chord separates multiple region pairs"
                        )
                    pair = (a, b)
        if pair is None:
            raise InvariantViolation(
                f"non-tree adjacency: chord {m} has no adjacent region pair "
                "(region lost to raster resolution?)"
            )
        a, b = pair
        # orient the weight toward the positive side
        if uniq[a][m]:
            a, b = b, a
        edges.append((a, b, float(weights[m]), m))
    sizes = np.bincount(ids, minlength=n_regions)
    root = int(np.argmax(sizes))
    return RegionTree(n_regions, edges, root, labels, np.asarray(xs),
                      np.asarray(ys), aniso, list(chords), jump_threshold)


def _persistent_chords(family, jump_threshold: float):
    """Chords shared by a run of consecutive levels spanning a value gap of
    at least jump_threshold, with that gap as the jump magnitude."""
    tracks = {}
    finished = []
    for k in range(len(family.levels)):
        current = {}
        for p, q in family.chords(k):
            a, b = sorted((tuple(p), tuple(q)))
            key = tuple(round(v, _CHORD_DECIMALS) for v in (*a, *b))
            if key in tracks:
                start, _, chord = tracks.pop(key)
                current[key] = (start, k, chord)
            else:
                current[key] = (k, k, (np.asarray(a), np.asarray(b)))
        finished.extend(tracks.values())
        tracks = current
    finished.extend(tracks.values())
    chords, gaps = [], []
    for start, end, chord in finished:
        if end == start:
            continue  # a jump needs a positive-length interval of levels
        gap = float(family.levels[end] - family.levels[start]) + family.delta_t
        if gap >= jump_threshold:
            chords.append(chord)
            gaps.append(gap)
    return chords, gaps


def _side_samples(field: SolutionField, chord, offset: float):
    (p, q) = chord
    d = np.asarray(q, dtype=float) - np.asarray(p, dtype=float)
    n = np.array([-d[1], d[0]])
    n /= np.hypot(*n)
    mid = (np.asarray(p) + np.asarray(q)) / 2.0
    pts = np.stack((mid + offset * n, mid - offset * n))
    u = sample_field(field, pts)
    return float(u[0]), float(u[1])


def build_region_tree(field: SolutionField,
                      jump_threshold: float | None = None) -> RegionTree:
    """Detect jump chords of a solved field and build its region tree."""
    fam = field.family
    if fam is None:
        raise ValidationError("build_region_tree needs a field from a level sweep")
    if jump_threshold is None:
        jump_threshold = JUMP_THRESHOLD_FRACTION * (fam.vmax - fam.vmin)
    chords, gaps = _persistent_chords(fam, jump_threshold)
    hx, hy = field.cell_size
    offset = 2.0 * max(hx, hy)
    weights = []
    for chord, gap in zip(chords, gaps):
        u_pos, u_neg = _side_samples(field, chord, offset)
        weights.append(math.copysign(gap, u_pos - u_neg))
    return tree_from_chords(field.xs, field.ys, field.mask, chords, weights,
                            field.aniso, jump_threshold)


def jump_part(tree: RegionTree) -> SolutionField:
    """Piecewise-constant field of path sums over the region tree."""
    vals = region_values(tree)
    values = np.full(tree.labels.shape, np.nan)
    mask = tree.labels >= 0
    values[mask] = vals[tree.labels[mask]]
    hx = float(tree.xs[1] - tree.xs[0])
    hy = float(tree.ys[1] - tree.ys[0])
    tv = grid_total_variation(np.where(mask, values, 0.0), mask, hx, hy, tree.aniso)
    return SolutionField(xs=tree.xs, ys=tree.ys, values=values, mask=mask,
                         aniso=tree.aniso, floor=float(np.nanmin(vals)),
                         grid_tv=tv)


def continuous_part(field: SolutionField, tree: RegionTree) -> SolutionField:
    """field minus its jump part; verifies no residual jumps at the chords."""
    jumps = jump_part(tree)
    values = field.values - jumps.values
    mask = field.mask & jumps.mask
    hx, hy = field.cell_size
    tv = grid_total_variation(np.where(mask, values, 0.0), mask, hx, hy,
                              field.aniso)
    out = SolutionField(xs=field.xs, ys=field.ys, values=values, mask=mask,
                        aniso=field.aniso,
                        floor=float(np.nanmin(values[mask])) if mask.any() else 0.0,
                        grid_tv=tv, family=field.family)
    offset = 2.0 * max(hx, hy)
    for m, chord in enumerate(tree.chords):
        u_pos, u_neg = _side_samples(out, chord, offset)
        if abs(u_pos - u_neg) > max(tree.jump_threshold, 4.0 * _level_step(field)):
            raise InvariantViolation(
                f"decomposition incomplete: residual jump {u_pos - u_neg:.4g} "
                f"across chord {m}"
            )
    return out


def _level_step(field: SolutionField) -> float:
    return field.family.delta_t if field.family is not None else 0.0


def rerooted(tree: RegionTree, root: int) -> RegionTree:
    if not 0 <= root < tree.n_regions:
        raise ValidationError("root out of range")
    return replace(tree, root=root)
