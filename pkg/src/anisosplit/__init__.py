"""Symbolic-numeric wave splitting in anisotropic acoustic media.

The package computes the polyhomogeneous expansion of the acoustic
admittance symbol for heterogeneous anisotropic instantaneously
reacting media, derives the one-way generators and composition maps of
the up/down splitting (approximate eta=0 and true-amplitude eta=1),
verifies everything against independent oracles, and applies the
splitting in spectral depth propagation on the transverse torus.
"""

from .expr import (
    DivisionByZeroError,
    EvalError,
    Expr,
    ExprError,
    ParseError,
    SqrtDomainError,
    UnboundVariableError,
    VarId,
    const,
    diff,
    eval_expr,
    free_vars,
    node_count,
    parse,
    simplify,
    to_text,
    variable,
)
from .medium import (
    MediumError,
    MediumSpec,
    SchurData,
    ValidationReport,
    is_depth_independent,
    is_homogeneous,
    load_medium,
    schur,
    validate,
)
from .symbols import (
    HomogeneityReport,
    PolyhomSymbol,
    SymbolError,
    SymbolMatrix22,
    SymbolTerm,
    TransverseGrid,
    compose,
    compose_degree_part,
    homogeneity_check,
    quantize_apply,
    quantize_matrix,
    random_smooth_field,
    spectral_derivative,
    systems_symbols,
)
from .expansion import (
    MAX_ORDER,
    AdmittanceExpansion,
    ExpansionError,
    SplitSymbols,
    closed_form_step,
    collector_step,
    expand,
    gamma1,
    leading_term,
    riccati_degree_part,
    split_symbols,
)
from .normalization import (
    NormalizationError,
    NormalizationSpec,
    apply_normalization,
    apply_normalization_symbols,
    symbol_inverse,
)
from .oracle import (
    DEFAULT_LAMBDAS,
    GlancingIncidenceError,
    GridOracleResult,
    OracleError,
    OrderClaimReport,
    QuadRoots,
    ResidualReport,
    SpectralGapError,
    depth_derivative_leading,
    draw_probe_points,
    fit_loglog,
    grid_riccati_oracle,
    operator_distance,
    order_claim_check,
    quad_oracle,
    riccati_residual,
)
from .propagate import (
    PropagationError,
    Wavefield,
    apply_systems_operator,
    build_rhs,
    decompose_homogeneous,
    full_solve,
    oneway_solve,
    recompose,
)
from . import presets

__version__ = "1.0.0"

__all__ = [
    "__version__",
    "presets",
    # expressions
    "Expr",
    "VarId",
    "ExprError",
    "ParseError",
    "EvalError",
    "UnboundVariableError",
    "DivisionByZeroError",
    "SqrtDomainError",
    "const",
    "variable",
    "parse",
    "to_text",
    "eval_expr",
    "diff",
    "simplify",
    "free_vars",
    "node_count",
    # media
    "MediumSpec",
    "MediumError",
    "SchurData",
    "ValidationReport",
    "load_medium",
    "validate",
    "schur",
    "is_homogeneous",
    "is_depth_independent",
    # symbols
    "SymbolTerm",
    "PolyhomSymbol",
    "SymbolMatrix22",
    "SymbolError",
    "TransverseGrid",
    "systems_symbols",
    "compose",
    "compose_degree_part",
    "quantize_apply",
    "quantize_matrix",
    "spectral_derivative",
    "random_smooth_field",
    "homogeneity_check",
    "HomogeneityReport",
    # expansion
    "MAX_ORDER",
    "AdmittanceExpansion",
    "SplitSymbols",
    "ExpansionError",
    "gamma1",
    "leading_term",
    "expand",
    "collector_step",
    "closed_form_step",
    "riccati_degree_part",
    "split_symbols",
    # normalization
    "NormalizationError",
    "NormalizationSpec",
    "symbol_inverse",
    "apply_normalization",
    "apply_normalization_symbols",
    # oracles
    "OracleError",
    "GlancingIncidenceError",
    "SpectralGapError",
    "ResidualReport",
    "QuadRoots",
    "GridOracleResult",
    "OrderClaimReport",
    "riccati_residual",
    "quad_oracle",
    "grid_riccati_oracle",
    "operator_distance",
    "order_claim_check",
    "depth_derivative_leading",
    "draw_probe_points",
    "fit_loglog",
    "DEFAULT_LAMBDAS",
    # propagation
    "PropagationError",
    "Wavefield",
    "build_rhs",
    "apply_systems_operator",
    "full_solve",
    "oneway_solve",
    "recompose",
    "decompose_homogeneous",
]
