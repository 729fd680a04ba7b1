"""Solver for the two-dimensional least gradient problem on strictly convex
domains: level-set construction with p-norm chord costs, solution
reconstruction, co-area total variation accounting, and the continuous+jump
decomposition."""

from .boundary import (
    AnalyticDatum,
    BoundaryDatum,
    CrossingSet,
    PiecewiseConstantDatum,
    SampledDatum,
    brothers_datum,
    bv_seminorm,
    cantor_inequality_check,
    cantor_interval_length,
    cantor_stage_datum,
    level_crossings,
    load_sampled_csv,
    mollify,
    piecewise_constant,
    piecewise_from_json,
)
from .decompose import RegionTree, build_region_tree, continuous_part, jump_part
from .errors import InvariantViolation, NonRegularLevel, SolverError, ValidationError
from .geometry import (
    Anisotropy,
    Circle,
    ConvexDomain,
    ConvexPolygon,
    Ellipse,
    boundary_point,
    chord_cost,
    domain_from_config,
    polyline_cost,
)
from .matching import (
    LevelMatching,
    brute_force_min,
    enumerate_optimal,
    min_matching,
    staircase_witness,
)
from .solver import (
    SolutionField,
    SuperlevelFamily,
    compare_competitor,
    field_from_function,
    realize_with_staircases,
    reconstruct,
    sweep,
    trace_check,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
