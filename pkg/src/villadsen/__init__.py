"""Exact invariants, trace machinery, and isomorphism decisions for diagonal
AH inductive systems built from coordinate projections and point evaluations."""

from .classify import (
    ClassificationVerdict,
    classify_k_contractible,
    classify_same_shape,
    invariant_tuple,
)
from .extended import INF, ExtendedRational
from .families import (
    ConstantFamily,
    GoodearlFamily,
    HalvingFamily,
    OddSquaresFamily,
    SquaresFamily,
)
from .invariants import (
    CertifiedValue,
    asymptotic_checks,
    gamma,
    mdim_upper,
    radius_of_comparison,
    rc_lower_witness,
    rc_realization,
)
from .supernatural import (
    ComparisonVerdict,
    K0Description,
    SupernaturalNumber,
    compare,
    from_terms,
    k0_of_system,
)
from .system import (
    MapDescriptor,
    Point,
    SeedSpace,
    StageData,
    VilladsenSystem,
    cantor,
    compose,
    composite_map,
    cube,
    finite_metric,
    hilbert_cube,
    stage,
    stage_map,
    validate,
)
from .sysfile import load_system, save_system
from .traces import (
    DiscreteMeasure,
    SampledFunction,
    approximate_by_extreme,
    discretize,
    extreme_trace,
    simplex_tag,
    theta_pushforward,
    trace_distance_bound,
    trace_functional,
)

__version__ = "0.1.0"
