"""Shared generators for synthetic decomposition instances.

Random disjoint chords of the disk form a laminar family, so the region
tree is known analytically from the nesting structure: one region per chord
(its lens side) plus the root.  Building the tree directly keeps arbitrarily
thin lens regions as vertices even when no raster cell falls inside them,
which is exactly what the synthetic mode is for.  The continuous bump is
supported away from every chord so the discrete variations add exactly.
"""

import numpy as np

from leastgrad.decompose import RegionTree, jump_part
from leastgrad.geometry import Anisotropy, Circle
from leastgrad.solver import SolutionField, grid_total_variation


def random_noncrossing_pairs(rng, count):
    """Random non-crossing perfect matching of indices 0..2*count-1."""

    def rec(indices):
        if not indices:
            return []
        offset = int(rng.integers(0, len(indices) // 2)) * 2 + 1
        mate = indices[offset]
        return ([(indices[0], mate)]
                + rec(indices[1:offset])
                + rec(indices[offset + 1:]))

    return rec(list(range(2 * count)))


def separated_thetas(rng, count, lo_gap=0.5, hi_gap=1.5):
    """Sorted angles with gaps bounded away from zero after normalization."""
    gaps = rng.uniform(lo_gap, hi_gap, size=count)
    thetas = 2 * np.pi * np.cumsum(gaps) / gaps.sum()
    return np.sort((thetas + rng.uniform(0, 2 * np.pi)) % (2 * np.pi))


def laminar_tree(rng, n_chords, xs, ys, inside, weight_scale=(0.5, 2.0)):
    """RegionTree of a random laminar chord family with random jump weights.

    Region ids: 0 is the root (outside every lens); chord c bounds region
    c + 1, its lens side.  Labels assign each cell the innermost enclosing
    lens.  Edge weights are signed toward the lens side.
    """
    domain = Circle()
    aniso = Anisotropy(2.0)
    thetas = separated_thetas(rng, 2 * n_chords)
    pairs = random_noncrossing_pairs(rng, n_chords)
    pts = domain.point(thetas)

    # nesting depth and parent from the parenthesization
    start = {i: (i, j) for i, j in pairs}
    depth, parent = {}, {}
    stack = []
    for idx in range(2 * n_chords):
        if idx in start:
            c = pairs.index(start[idx])
            parent[c] = stack[-1] if stack else None
            depth[c] = len(stack)
            stack.append(c)
        else:
            stack.pop()

    X, Y = np.meshgrid(xs, ys)
    labels = np.full(X.shape, -1, dtype=int)
    labels[inside] = 0
    xi, yi = X[inside], Y[inside]
    in_lens = np.zeros((n_chords, xi.size), dtype=bool)
    for c, (i, j) in enumerate(pairs):
        p, q = pts[i], pts[j]
        mid = domain.point((thetas[i] + thetas[j]) / 2.0
                           if thetas[j] > thetas[i]
                           else (thetas[i] + thetas[j]) / 2.0 + np.pi)
        side = np.sign((q[0] - p[0]) * (mid[1] - p[1])
                       - (q[1] - p[1]) * (mid[0] - p[0]))
        val = (q[0] - p[0]) * (yi - p[1]) - (q[1] - p[1]) * (xi - p[0])
        in_lens[c] = side * val > 0
    order = sorted(range(n_chords), key=lambda c: depth[c])
    lab_flat = np.zeros(xi.size, dtype=int)
    for c in order:  # deeper lenses overwrite shallower ones
        lab_flat[in_lens[c]] = c + 1
    labels[inside] = lab_flat

    weights = (rng.choice([-1.0, 1.0], size=n_chords)
               * rng.uniform(*weight_scale, size=n_chords))
    chords = [(pts[i], pts[j]) for i, j in pairs]
    edges = []
    for c in range(n_chords):
        parent_region = 0 if parent[c] is None else parent[c] + 1
        edges.append((parent_region, c + 1, float(weights[c]), c))
    threshold = float(np.min(np.abs(weights))) / 4 if n_chords else 1.0
    tree = RegionTree(n_chords + 1, edges, 0, labels, np.asarray(xs),
                      np.asarray(ys), aniso, chords, threshold)
    return tree


def synthetic_instance(rng, n_chords, grid=128, weight_scale=(0.5, 2.0)):
    """(field, tree, continuous) with field.values = bump + path sums."""
    domain = Circle()
    aniso = Anisotropy(2.0)
    x0, y0, x1, y1 = domain.bbox
    xs = x0 + (np.arange(grid) + 0.5) * (x1 - x0) / grid
    ys = y0 + (np.arange(grid) + 0.5) * (y1 - y0) / grid
    X, Y = np.meshgrid(xs, ys)
    inside = domain.contains_xy(X, Y)

    tree = laminar_tree(rng, n_chords, xs, ys, inside, weight_scale)
    u_j = jump_part(tree)

    # bump centered at the in-domain cell farthest from all chords, radius
    # short enough that no cell edge touches both the bump and a chord
    h = float(xs[1] - xs[0])
    if tree.chords:
        d = np.full(X.shape, np.inf)
        for p, q in tree.chords:
            pq = np.asarray(q) - np.asarray(p)
            den = float(pq @ pq)
            t = np.clip(((X - p[0]) * pq[0] + (Y - p[1]) * pq[1]) / den, 0, 1)
            d = np.minimum(d, np.hypot(X - p[0] - t * pq[0], Y - p[1] - t * pq[1]))
        d[~inside] = -np.inf
        idx = np.unravel_index(np.argmax(d), d.shape)
        cx, cy = X[idx], Y[idx]
        radius = max(0.55 * (d[idx] - 4 * h), 3 * h)
    else:
        cx, cy, radius = 0.0, 0.0, 0.6
    r2 = ((X - cx) ** 2 + (Y - cy) ** 2) / radius ** 2
    bump = np.zeros(X.shape)
    core = r2 < 1.0
    bump[core] = np.exp(-1.0 / (1.0 - r2[core]))

    values = np.where(inside, bump + np.nan_to_num(u_j.values), np.nan)
    tv = grid_total_variation(np.where(inside, values, 0.0), inside, h, h, aniso)
    field = SolutionField(xs=xs, ys=ys, values=values, mask=inside, aniso=aniso,
                          floor=float(np.nanmin(values)), grid_tv=tv)
    continuous = np.where(inside, bump, np.nan)
    return field, tree, continuous
