"""The back-order twin system: newsvendor optimum and coupled comparison.

When excess demand is back-ordered instead of lost, the optimal policy is
a base-stock policy whose level solves a newsvendor equation in the demand
over lead time plus one period, and the optimal cost rate has a closed
form.  A base-stock level S in this system is simultaneously a
projected-inventory-level policy with level S - tau * mu, which is what
makes the two systems directly comparable on shared demand paths.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import CostParams
from .demand import DemandModel, convolve_lead_time
from .errors import ParameterError
from .simulate import SimConfig, backorder_traces, generate_paths, pil_traces, _ci_halfwidth


@dataclass(frozen=True)
class BackorderSolution:
    s_star: float
    c_star: float
    leadtime_demand: DemandModel

    @property
    def tail_mass(self) -> float:
        return getattr(self.leadtime_demand, "tail_mass", 0.0)


def solve_backorder(demand: DemandModel, tau: int, cost: CostParams) -> BackorderSolution:
    """Newsvendor-optimal base-stock level and cost rate of the twin system.

    Demand over the exposure window is the (tau + 1)-fold convolution of
    one-period demand; the optimal level is its p/(p+h) quantile.
    """
    if tau < 1:
        raise ParameterError(f"lead time must be >= 1, got {tau}")
    lead = convolve_lead_time(demand, tau + 1)
    s_star = lead.quantile(cost.critical_ratio)
    shortfall = lead.loss(s_star)  # E[(X - S)^+]
    surplus = s_star - lead.mean + shortfall  # E[(S - X)^+]
    c_star = cost.h * surplus + cost.p * shortfall
    return BackorderSolution(float(s_star), float(c_star), lead)


@dataclass(frozen=True)
class CoupledComparison:
    """Paired per-period statistics of the two systems on shared demand paths."""

    lost_rate: float
    lost_ci: float
    backorder_rate: float
    backorder_ci: float
    cost_rate: float
    cost_ci: float
    backorder_cost_rate: float
    backorder_cost_ci: float
    lost_minus_back_ci: float
    cost_gap_ci: float
    mean_inventory_at_arrival: float
    periods: int


def coupled_lost_vs_backorder(level: float, demand: DemandModel, tau: int, cost: CostParams,
                              cfg: SimConfig, periods: int | None = None) -> CoupledComparison:
    """Run both systems under the same PIL level on the same demand stream.

    The lost-sales system runs the PIL policy with the given level; the
    back-order system runs the equivalent base-stock policy with level
    ``level + tau * mu``.  Identical seeds produce bitwise-identical demand
    paths in the two systems.
    """
    horizon = cfg.effective_warmup(tau) + (periods or cfg.periods)
    warm = cfg.effective_warmup(tau)
    if level > 0:
        lost_tr = pil_traces(level, demand, tau, cost, cfg, horizon)
        lost = lost_tr["lost"][:, warm:]
        lcost = lost_tr["cost"][:, warm:]
    else:
        demands = generate_paths(demand, cfg.seed, cfg.stream, cfg.replications, horizon)
        lost = demands[:, warm:]
        lcost = cost.p * lost
    s_equiv = level + tau * demand.mean
    back_tr = backorder_traces(s_equiv, demand, tau, cost, cfg, horizon)
    back = back_tr["backorders"][:, warm:]
    bcost = back_tr["cost"][:, warm:]
    # net inventory at arrival is S - demand over tau periods in steady state
    from . import _kernels

    agg = _kernels.sim_backorder_basestock(back_tr["demands"], tau, s_equiv, cost.h, cost.p, warm)
    n = lost.shape[1]
    lr, br = lost.mean(axis=1), back.mean(axis=1)
    cr, bcr = lcost.mean(axis=1), bcost.mean(axis=1)
    return CoupledComparison(
        lost_rate=float(lr.mean()),
        lost_ci=_ci_halfwidth(lr),
        backorder_rate=float(br.mean()),
        backorder_ci=_ci_halfwidth(br),
        cost_rate=float(cr.mean()),
        cost_ci=_ci_halfwidth(cr),
        backorder_cost_rate=float(bcr.mean()),
        backorder_cost_ci=_ci_halfwidth(bcr),
        lost_minus_back_ci=_ci_halfwidth(lr - br),
        cost_gap_ci=_ci_halfwidth(cr - bcr),
        mean_inventory_at_arrival=float((agg[:, 4] / agg[:, 5]).mean()),
        periods=n,
    )
