"""Singular control of a diffusion coupled with its running infimum.

Closed-form model quantities, the free-boundary solve for the
infimum-dependent dividend barrier, path integrals against the control and
the running infimum (with running-supremum duals), policy simulation, and a
quantitative verification harness.
"""

from .boundary import (
    BoundaryTable,
    boundary_at,
    critical_infimum,
    flow,
    load_boundary,
    save_boundary,
    solve_boundary,
)
from .errors import (
    ConfigurationError,
    DomainError,
    NumericalError,
    ParameterError,
    PathInvalidError,
    PolicyError,
)
from .integrals import (
    ExpAffineField,
    JumpEvent,
    SamplePath,
    box_integral,
    box_integral_sup,
    control_integral_1d,
    diamond_integral,
    diamond_integral_sup,
    payoff_functional,
    reflect_path,
)
from .model import (
    CharRoots,
    ModelParams,
    Region,
    char_roots,
    classical_value,
    classify_region,
    gradient_constraint_gap,
    value,
    value_x,
)
from .sim import (
    Policy,
    PolicyKind,
    SimConfig,
    SupportReport,
    initial_lump,
    path_support_check,
    simulate_path,
)
from .verify import (
    DominanceReport,
    PayoffEstimate,
    QSweepReport,
    ResidualReport,
    SmoothFitReport,
    dominance_test,
    hjb_residual_grid,
    mc_payoff,
    q_sweep,
    scale_boundary,
    smooth_fit_check,
)

__version__ = "0.1.0"

__all__ = [
    "BoundaryTable",
    "CharRoots",
    "ConfigurationError",
    "DominanceReport",
    "DomainError",
    "ExpAffineField",
    "JumpEvent",
    "ModelParams",
    "NumericalError",
    "ParameterError",
    "PathInvalidError",
    "PayoffEstimate",
    "Policy",
    "PolicyError",
    "PolicyKind",
    "QSweepReport",
    "Region",
    "ResidualReport",
    "SamplePath",
    "SimConfig",
    "SmoothFitReport",
    "SupportReport",
    "boundary_at",
    "box_integral",
    "box_integral_sup",
    "char_roots",
    "classical_value",
    "classify_region",
    "control_integral_1d",
    "critical_infimum",
    "diamond_integral",
    "diamond_integral_sup",
    "dominance_test",
    "flow",
    "gradient_constraint_gap",
    "hjb_residual_grid",
    "initial_lump",
    "load_boundary",
    "mc_payoff",
    "path_support_check",
    "payoff_functional",
    "q_sweep",
    "reflect_path",
    "save_boundary",
    "scale_boundary",
    "simulate_path",
    "smooth_fit_check",
    "solve_boundary",
    "value",
    "value_x",
]
