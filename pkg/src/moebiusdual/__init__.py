"""Piecewise fractional-linear interval maps and their natural duals.

Build systems of Moebius branches over an interval, decide whether a dual
system exists (through a fractional-linear conjugacy or through the
endpoint-constraint solver), and turn dual sets into closed-form invariant
densities verified by exact arithmetic and extended-precision residuals.
"""

from .exactnum import (
    INFINITY,
    ExtPoint,
    Interval,
    QuadSurd,
    as_fraction,
    as_point,
    as_surd,
    order_points,
    solve_quadratic,
)
from .moebius import MoebiusMatrix, compose_word, projectively_equal
from .systems import (
    CANONICAL_NAMES,
    Branch,
    DescriptorError,
    Histogram,
    MoebiusSystem,
    ParamTriple,
    SystemType,
    TruncationTail,
    ValidationReport,
    build_standard_system,
    canonical_example,
    evaluate_map,
    orbit_histogram,
    system_from_json,
    system_to_json,
    validate_system,
)
from .duality import (
    ORDERS,
    ConjugacyMap,
    DualReport,
    DualWitness,
    ExceptionalOutcome,
    SolutionSpace,
    condition_param_mu,
    construct_dual,
    dual_from_conjugacy,
    dual_link_determinant,
    exceptional_condition,
    mirror_order,
    order_filter,
    solve_conjugacy,
    symmetric_conjugacy_space,
    type_condition_residual,
)
from .density import (
    BranchFamily,
    ConformalReport,
    DensityModel,
    DiracDensity,
    DualFamilies,
    IntervalUnionDensity,
    KuzminReport,
    MassValue,
    TailBound,
    comb_dual_families,
    comb_series_density,
    compare_orbit_histogram,
    conformal_sum_check,
    density_from_dual,
    density_mass,
    dirac_dual_families,
    families_from_system,
    kuzmin_residual,
)

__version__ = "0.1.0"

__all__ = [
    "INFINITY", "ExtPoint", "Interval", "QuadSurd", "as_fraction",
    "as_point", "as_surd", "order_points", "solve_quadratic",
    "MoebiusMatrix", "compose_word", "projectively_equal",
    "CANONICAL_NAMES", "Branch", "DescriptorError", "Histogram",
    "MoebiusSystem", "ParamTriple", "SystemType", "TruncationTail",
    "ValidationReport", "build_standard_system", "canonical_example",
    "evaluate_map", "orbit_histogram", "system_from_json",
    "system_to_json", "validate_system",
    "ORDERS", "ConjugacyMap", "DualReport", "DualWitness",
    "ExceptionalOutcome", "SolutionSpace", "condition_param_mu",
    "construct_dual", "dual_from_conjugacy", "dual_link_determinant",
    "exceptional_condition", "mirror_order", "order_filter",
    "solve_conjugacy", "symmetric_conjugacy_space",
    "type_condition_residual",
    "BranchFamily", "ConformalReport", "DensityModel", "DiracDensity",
    "DualFamilies", "IntervalUnionDensity", "KuzminReport", "MassValue",
    "TailBound", "comb_dual_families", "comb_series_density",
    "compare_orbit_histogram", "conformal_sum_check", "density_from_dual",
    "density_mass", "dirac_dual_families", "families_from_system",
    "kuzmin_residual",
    "__version__",
]
