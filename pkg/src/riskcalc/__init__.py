"""Scenario-based toolkit for risk-averse stochastic optimization.

Quantile and Lorenz functions of discrete random variables, average and
spectral value-at-risk with exact subdifferentials, subgradients of
risk-composed convex integrands (with or without partial information), and
solving plus certifying optimization problems under inverse second-order
stochastic dominance constraints.
"""

from .composite import (
    CompositeGradient,
    composite_directional,
    composite_subgradient,
    composite_value,
    strassen_gradient,
)
from .dominance import (
    DominanceConstraint,
    constraint_subgradient,
    constraint_values,
    constraint_values_at,
    dominates_first_order,
    dominates_second_order,
    in_B,
    uniform_dominance_margin,
)
from .errors import (
    ConfigurationError,
    DomainError,
    InvariantViolation,
    ProblemFormatError,
    RiskcalcError,
    StructuralError,
)
from .integrands import (
    ACTIVITY_TOL,
    Curvature,
    DecisionPoint,
    MaxAffineIntegrand,
    SubgradientSelector,
    blend_selectors,
    deterministic,
    differential_quotient,
    directional_derivative,
    evaluate,
    local_property_check,
    subgradient_selector,
)
from .quantiles import (
    SortedScenarioView,
    cdf,
    integrated_cdf,
    lorenz,
    lorenz_breakpoints,
    lorenz_conjugate,
    quantile,
    sorted_view,
)
from .risk import (
    IDENTIFIER_TOL,
    Orientation,
    RiskIdentifier,
    SpectralMeasure,
    avar,
    avar_identifier,
    avar_identifier_lmo,
    avar_lower,
    avar_upper,
    lorenz_supergradient,
    spectral_identifier,
    spectral_identifier_lmo,
    spectral_risk,
)
from .scenario import (
    InfoPartition,
    ProbSpace,
    RandomVariable,
    almost_sure_leq,
    conditional_expectation,
    equiprobable,
    expectation,
    is_measurable,
    singleton_partition,
    trivial_partition,
)
from .solver import (
    BruteForceResult,
    Certificate,
    ProblemSpec,
    Solution,
    SolveOptions,
    brute_force_optimum,
    certify,
    lagrangian_value,
    nu_from_mu,
    solve,
)

__version__ = "0.1.0"

__all__ = [
    "ACTIVITY_TOL",
    "BruteForceResult",
    "Certificate",
    "CompositeGradient",
    "ConfigurationError",
    "Curvature",
    "DecisionPoint",
    "DomainError",
    "DominanceConstraint",
    "IDENTIFIER_TOL",
    "InfoPartition",
    "InvariantViolation",
    "MaxAffineIntegrand",
    "Orientation",
    "ProbSpace",
    "ProblemFormatError",
    "ProblemSpec",
    "RandomVariable",
    "RiskIdentifier",
    "RiskcalcError",
    "Solution",
    "SolveOptions",
    "SortedScenarioView",
    "SpectralMeasure",
    "StructuralError",
    "SubgradientSelector",
    "almost_sure_leq",
    "avar",
    "avar_identifier",
    "avar_identifier_lmo",
    "avar_lower",
    "avar_upper",
    "blend_selectors",
    "brute_force_optimum",
    "cdf",
    "certify",
    "composite_directional",
    "composite_subgradient",
    "composite_value",
    "conditional_expectation",
    "constraint_subgradient",
    "constraint_values",
    "constraint_values_at",
    "deterministic",
    "differential_quotient",
    "directional_derivative",
    "dominates_first_order",
    "dominates_second_order",
    "equiprobable",
    "evaluate",
    "expectation",
    "in_B",
    "integrated_cdf",
    "is_measurable",
    "lagrangian_value",
    "local_property_check",
    "lorenz",
    "lorenz_breakpoints",
    "lorenz_conjugate",
    "lorenz_supergradient",
    "nu_from_mu",
    "quantile",
    "singleton_partition",
    "solve",
    "sorted_view",
    "spectral_identifier",
    "spectral_identifier_lmo",
    "spectral_risk",
    "strassen_gradient",
    "subgradient_selector",
    "trivial_partition",
    "uniform_dominance_margin",
]
