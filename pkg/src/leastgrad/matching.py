"""Minimal-cost non-crossing perfect matchings of level crossings.

Crossings live on the boundary of a strictly convex domain, so chords of a
non-crossing pairing are pairwise disjoint inside the domain.  The optimum
is found by interval dynamic programming over the cyclic crossing sequence
(O(n^3) time); cutting the circle at any non-crossing point preserves the
nesting structure, so a linear interval DP suffices.  Matching costs are
canonicalized as the exactly-rounded sum (math.fsum) of chord costs so the
DP and the brute-force oracle agree bit for bit on generic instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .boundary import CrossingSet
from .errors import ValidationError
from .geometry import Anisotropy, ConvexDomain
from .regions import enclosed_area

TIE_REL_TOL = 1e-9
ENUM_CAP = 64

# Two chords closer in slope than this to the degenerate directions are
# treated as admitting only the straight segment.
_AXIS_TOL = 1e-9


@dataclass(frozen=True)
class LevelMatching:
    """A non-crossing perfect matching of one level's crossings.

    pairs index into the crossing set; cost is the total chord cost under
    the anisotropy; enclosed_area is the area of the superlevel region the
    matching bounds.  ``paths`` optionally realizes chords as polylines
    (used for non-uniqueness witnesses); None means straight segments.
    """

    level: float
    crossings: CrossingSet
    pairs: tuple
    cost: float
    enclosed_area: float
    paths: dict | None = None

    def with_level(self, level: float, crossings: CrossingSet) -> "LevelMatching":
        return replace(self, level=level, crossings=crossings)

    def to_json(self) -> dict:
        return {
            "t": self.level,
            "pairs": [list(p) for p in self.pairs],
            "cost": self.cost,
            "area": self.enclosed_area,
        }


def _chord_matrix(crossings: CrossingSet, domain: ConvexDomain,
                  aniso: Anisotropy) -> tuple[np.ndarray, np.ndarray]:
    pts = domain.point(crossings.thetas)
    diff = pts[None, :, :] - pts[:, None, :]
    return pts, aniso.costs(diff)


def _canonical_cost(pairs, costs: np.ndarray) -> float:
    return math.fsum(costs[i, j] for i, j in sorted(pairs))


def _validate_input(crossings: CrossingSet):
    crossings.validate()
    if crossings.n == 0:
        raise ValidationError("malformed crossing set: empty")


def _dp_tables(costs: np.ndarray):
    """Interval DP over half-open blocks: best[i][j] = min cost of crossings
    i..j-1.  The first element of a block pairs with an odd offset, splitting
    the block into an enclosed part and a remainder."""
    n = costs.shape[0]
    best = np.zeros((n + 2, n + 2))
    choice = np.full((n + 1, n + 1), -1, dtype=int)
    for length in range(2, n + 1, 2):
        for i in range(0, n - length + 1):
            j = i + length
            ks = np.arange(i + 1, j, 2)
            vals = costs[i, ks] + best[i + 1, ks] + best[ks + 1, j]
            a = int(np.argmin(vals))
            best[i, j] = vals[a]
            choice[i, j] = ks[a]
    return best, choice


def _dp_pairs(choice: np.ndarray, n: int) -> list[tuple[int, int]]:
    pairs = []
    stack = [(0, n)]
    while stack:
        i, j = stack.pop()
        if i >= j:
            continue
        k = int(choice[i, j])
        pairs.append((i, k))
        stack.append((i + 1, k))
        stack.append((k + 1, j))
    return sorted(pairs)


def _enumerate_blocks(i: int, j: int, budget: float, costs: np.ndarray,
                      best: np.ndarray, out_limit: int):
    """All pairings of the half-open block [i, j) with cost <= budget.

    Yields (cost, pairs) pairs; pruned with the DP lower bounds, so only
    near-optimal branches are explored.
    """
    if i >= j:
        yield 0.0, []
        return
    count = 0
    for k in range(i + 1, j, 2):
        c = costs[i, k]
        lb = c + best[i + 1, k] + best[k + 1, j]
        if lb > budget:
            continue
        for cl, pl in _enumerate_blocks(i + 1, k, budget - c - best[k + 1, j],
                                        costs, best, out_limit):
            for cr, pr in _enumerate_blocks(k + 1, j, budget - c - cl,
                                            costs, best, out_limit):
                yield c + cl + cr, [(i, k)] + pl + pr
                count += 1
                if count >= out_limit:
                    return


@dataclass(frozen=True)
class MatchingEnumeration:
    matchings: tuple
    overflow: bool


def enumerate_optimal(crossings: CrossingSet, domain: ConvexDomain,
                      aniso: Anisotropy, rel_tol: float = TIE_REL_TOL,
                      cap: int = ENUM_CAP) -> MatchingEnumeration:
    """All non-crossing pairings within (1 + rel_tol) of the minimum cost,
    sorted by enclosed area descending.  Capped at ``cap`` results with an
    overflow flag, since degenerate anisotropies can tie combinatorially."""
    _validate_input(crossings)
    n = crossings.n
    _, costs = _chord_matrix(crossings, domain, aniso)
    best, _ = _dp_tables(costs)
    # slack absorbs association-order rounding; the canonical re-filter
    # below restores the exact rel_tol semantics
    budget = best[0, n] * (1.0 + rel_tol + 1e-12) + 1e-300
    found = []
    overflow = False
    for _, pairs in _enumerate_blocks(0, n, budget, costs, best, cap + 1):
        if len(found) >= cap:
            overflow = True
            break
        found.append(tuple(sorted(pairs)))
    seen = set()
    results = []
    min_cost = math.inf
    for pairs in found:
        if pairs in seen:
            continue
        seen.add(pairs)
        cost = _canonical_cost(pairs, costs)
        min_cost = min(min_cost, cost)
        area = enclosed_area(domain, crossings, pairs)
        results.append(LevelMatching(crossings.level, crossings, pairs, cost, area))
    # branch budgets prune with accumulated sums; re-filter on canonical cost
    results = [m for m in results if m.cost <= min_cost * (1.0 + rel_tol) + 1e-300]
    results.sort(key=lambda m: (-m.enclosed_area, m.pairs))
    return MatchingEnumeration(tuple(results), overflow)


def min_matching(crossings: CrossingSet, domain: ConvexDomain,
                 aniso: Anisotropy, tie_tol: float = TIE_REL_TOL) -> LevelMatching:
    """Minimum-cost non-crossing perfect matching; ties within tie_tol are
    broken by maximal enclosed area (the secondary maximization of the
    level-set construction)."""
    _validate_input(crossings)
    n = crossings.n
    _, costs = _chord_matrix(crossings, domain, aniso)
    best, choice = _dp_tables(costs)
    dp_set = tuple(_dp_pairs(choice, n))
    candidates = {dp_set: _canonical_cost(dp_set, costs)}
    enum = enumerate_optimal(crossings, domain, aniso, rel_tol=tie_tol)
    for m in enum.matchings:
        candidates.setdefault(m.pairs, m.cost)
    min_cost = min(candidates.values())
    ties = [
        LevelMatching(crossings.level, crossings, pairs, cost,
                      enclosed_area(domain, crossings, pairs))
        for pairs, cost in candidates.items()
        if cost <= min_cost * (1.0 + tie_tol) + 1e-300
    ]
    ties.sort(key=lambda m: (-m.enclosed_area, m.pairs))
    return ties[0]


def brute_force_min(crossings: CrossingSet, domain: ConvexDomain,
                    aniso: Anisotropy) -> LevelMatching:
    """Independent oracle: exhaustive enumeration of all non-crossing
    pairings (Catalan many) with canonical costs."""
    _validate_input(crossings)
    n = crossings.n
    _, costs = _chord_matrix(crossings, domain, aniso)

    def enum(indices):
        if not indices:
            yield []
            return
        first = indices[0]
        for pos in range(1, len(indices), 2):
            mate = indices[pos]
            for inner in enum(indices[1:pos]):
                for outer in enum(indices[pos + 1:]):
                    yield [(first, mate)] + inner + outer

    best_pairs, best_cost = None, math.inf
    for pairs in enum(list(range(n))):
        cost = _canonical_cost(pairs, costs)
        if cost < best_cost:
            best_cost, best_pairs = cost, tuple(sorted(pairs))
    area = enclosed_area(domain, crossings, best_pairs)
    return LevelMatching(crossings.level, crossings, best_pairs, best_cost, area)


# -- non-uniqueness machinery ----------------------------------------------

def chord_has_nonunique_realization(a, b, aniso: Anisotropy,
                                    tol: float = _AXIS_TOL) -> bool:
    """Whether curves other than the straight segment achieve the chord cost.

    For p = 1 every non-axis-parallel chord admits monotone staircases of
    equal cost; for p = inf every chord off slope +-1 admits slope-bounded
    zigzags.  Smooth p admit only the segment.
    """
    if aniso.is_smooth:
        return False
    dx = abs(float(b[0]) - float(a[0]))
    dy = abs(float(b[1]) - float(a[1]))
    scale = max(dx, dy, 1e-300)
    if aniso.p == 1.0:
        return min(dx, dy) > tol * scale
    return abs(dx - dy) > tol * scale


def staircase_witness(a, b, aniso: Anisotropy, k: int) -> np.ndarray:
    """A non-segment minimizer joining a and b, witnessing non-uniqueness.

    p = 1: a k-step monotone staircase (axis-parallel segments).
    p = inf: k slope +-1 teeth followed by one finishing diagonal, all
    tangents inside the unit-slope cone relative to the dominant axis.
    Raises for smooth p, where segments are the only minimizers.
    """
    if aniso.is_smooth:
        raise ValidationError("anisotropy admits only segments for 1 < p < inf")
    if k < 1:
        raise ValidationError("staircase needs k >= 1 steps")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = b - a

    if aniso.p == 1.0:
        pts = [a]
        for i in range(1, k + 1):
            x = a[0] + d[0] * i / k
            y_prev = a[1] + d[1] * (i - 1) / k
            pts.append(np.array([x, y_prev]))
            pts.append(np.array([x, a[1] + d[1] * i / k]))
        return np.asarray(pts)

    # p = inf: operate along the dominant coordinate
    swap = abs(d[1]) > abs(d[0])
    if swap:
        a2, d2 = a[::-1], d[::-1]
    else:
        a2, d2 = a, d
    sx = 1.0 if d2[0] >= 0 else -1.0
    run = abs(d2[0])
    rise = abs(d2[1])
    slack = run - rise  # x-budget for the zero-net teeth
    amp = slack / (2.0 * k)
    pts = [a2.copy()]
    x, y = a2
    for _ in range(k):
        x += sx * amp
        y += amp
        pts.append(np.array([x, y]))
        x += sx * amp
        y -= amp
        pts.append(np.array([x, y]))
    pts.append(np.array([a2[0] + d2[0], a2[1] + d2[1]]))
    out = np.asarray(pts)
    if swap:
        out = out[:, ::-1]
    return out


def degenerate_chords(matching: LevelMatching, domain: ConvexDomain,
                      aniso: Anisotropy) -> list[tuple[int, int]]:
    """Pairs of the matching whose chords admit non-segment minimizers."""
    pts = domain.point(matching.crossings.thetas)
    return [
        (i, j) for i, j in matching.pairs
        if chord_has_nonunique_realization(pts[i], pts[j], aniso)
    ]
