"""Lost-sales inventory control: PIL and competitor policies, exact solves,
simulation benchmarks, and executable theory checks."""

__version__ = "0.1.0"

from .core import CostParams, PeriodOutcome, PipelineState, step
from .demand import (
    Deterministic,
    Exponential,
    Geometric,
    MixedErlang,
    MomentTarget,
    Poisson,
    convolve_lead_time,
    fit_mixed_erlang,
    make_exponential,
    make_geometric,
    make_poisson,
    parse_demand_spec,
)
from .policies import (
    BaseStock,
    CappedBaseStock,
    ConstantOrder,
    Myopic,
    PIL,
    Policy,
    parse_policy_spec,
)
from .projection import (
    LatticeExact,
    MECustomer,
    MonteCarlo,
    project_expected_level,
    parse_backend_spec,
)
from .simulate import CostEstimate, SimConfig, estimate_cost, estimate_difference_crn

__all__ = [
    "BaseStock",
    "CappedBaseStock",
    "ConstantOrder",
    "CostEstimate",
    "CostParams",
    "Deterministic",
    "Exponential",
    "Geometric",
    "LatticeExact",
    "MECustomer",
    "MixedErlang",
    "MomentTarget",
    "MonteCarlo",
    "Myopic",
    "PIL",
    "PeriodOutcome",
    "PipelineState",
    "Poisson",
    "Policy",
    "SimConfig",
    "convolve_lead_time",
    "estimate_cost",
    "estimate_difference_crn",
    "fit_mixed_erlang",
    "make_exponential",
    "make_geometric",
    "make_poisson",
    "parse_backend_spec",
    "parse_demand_spec",
    "parse_policy_spec",
    "project_expected_level",
    "step",
]
