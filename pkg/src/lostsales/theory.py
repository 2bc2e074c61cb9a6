"""Closed-form objects for exponential demand and executable theory checks.

Under exponential demand the constant-order policy admits a closed-form
long-run cost and a parabolic relative value (bias) function.  One policy
improvement step on that bias is exactly a projected-inventory-level
policy, which is what the dominance results build on.  This module turns
those statements into numerical checks: a fixed-point residual for the
bias, an improvement-step check against a grid scan, and CRN-paired
simulation tests of the dominance chain, the quadratic-divergence
identity, and the lost-sales-versus-back-order comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .backorder import coupled_lost_vs_backorder, solve_backorder
from .core import CostParams, PipelineState
from .demand import DemandModel, Exponential
from .errors import ParameterError
from .policies import PIL, ConstantOrder
from .projection import MECustomer, project_expected_level
from .simulate import SimConfig, _aggregate, _ci_halfwidth, generate_paths
from .optimize import optimize_scalar


@dataclass(frozen=True)
class BiasFunction:
    """Relative value of starting stock under a constant-order policy.

    Exponential demand only: the bias is the parabola
    a1 * (x - improving_level)^2 + a2 anchored at bias(0) = 0.
    """

    mu: float
    r: float
    h: float
    p: float

    def __post_init__(self):
        if not 0.0 <= self.r < self.mu:
            raise ParameterError(f"need 0 <= r < mu, got r={self.r}, mu={self.mu}")
        if self.h <= 0 or self.p <= 0:
            raise ParameterError("cost rates must be positive")

    @property
    def gain(self) -> float:
        return self.p * (self.mu - self.r) + self.h * self.r**2 / (2.0 * (self.mu - self.r))

    @property
    def improving_level(self) -> float:
        return self.p * (self.mu - self.r) / self.h

    @property
    def curvature(self) -> float:
        return self.h / (2.0 * (self.mu - self.r))

    @property
    def offset(self) -> float:
        return -self.p**2 * (self.mu - self.r) / (2.0 * self.h)

    def bias(self, x):
        x = np.asarray(x, dtype=float)
        out = self.curvature * x * x - self.p * x
        return out if out.ndim else float(out)


def optimal_constant_order(mu: float, h: float, p: float) -> float:
    """Minimizer of the closed-form constant-order cost."""
    return mu * (1.0 - math.sqrt(h / (2.0 * p + h)))


def bias_fixed_point_residual(bf: BiasFunction, n_points: int = 50, x_max: float | None = None) -> float:
    """Max deviation of the bias from its defining one-step fixed point.

    Both sides are evaluated in closed form (the exponential expectation of
    a quadratic in (x - D)^+ has elementary antiderivatives), so the
    residual isolates algebra errors rather than quadrature noise.
    """
    mu, r, h, p = bf.mu, bf.r, bf.h, bf.p
    xs = np.linspace(0.0, x_max if x_max is not None else 4.0 * bf.improving_level, n_points)
    ex = np.exp(-xs / mu)
    e_hold = xs - mu * (1.0 - ex)  # E[(x - D)^+]
    e_short = mu * ex  # E[(D - x)^+]
    w1 = e_hold  # E[W], W = (x - D)^+
    w2 = xs * xs - 2.0 * mu * xs + 2.0 * mu * mu * (1.0 - ex)  # E[W^2]
    c2, c1 = bf.curvature, -p
    e_bias_next = c2 * (w2 + 2.0 * r * w1 + r * r) + c1 * (w1 + r)
    rhs = h * e_hold + p * e_short + e_bias_next - bf.gain
    return float(np.max(np.abs(rhs - bf.bias(xs))))


@dataclass(frozen=True)
class ImprovementCheck:
    state: PipelineState
    projected: float
    pil_order: float
    grid_argmin: float
    decomposition_residual: float  # algebraic identity, should sit at rounding level
    backend_gap_se: float  # |backend projection - MC mean| in standard errors


def verify_pil_improvement(r: float, mu: float, h: float, p: float, tau: int,
                           seed: int = 0, n_states: int = 100,
                           mc_paths: int = 100_000) -> list[ImprovementCheck]:
    """Check that the one-step improvement on the constant-order bias is PIL.

    For random pipeline states the expected bias of (end-of-window stock +
    order) is scanned over the order quantity via its variance-plus-squared
    -mean decomposition; the minimizer must match the PIL order at the
    improving level.  Two cross-checks accompany the scan: the
    decomposition is verified as an identity on a Monte Carlo sample, and
    the backend projection is compared with the sample mean.
    """
    bf = BiasFunction(mu, r, h, p)
    level = bf.improving_level
    demand = Exponential(mu)
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n_states):
        on_hand = float(rng.uniform(0.0, 2.0 * level)) if i else 0.0
        pipe = tuple(float(x) for x in rng.uniform(0.0, 2.0 * mu, tau - 1)) if i else (0.0,) * (tau - 1)
        state = PipelineState(on_hand, pipe, tau)
        ej = project_expected_level(state, demand, MECustomer())
        pil_order = max(level - ej, 0.0)
        # grid scan of the decomposed objective a1*Var + a1*(EJ + q - U)^2 + a2
        qs = np.arange(0.0, level + 2.0 * mu, 1e-4)
        objective = bf.curvature * (ej + qs - level) ** 2
        grid_argmin = float(qs[int(np.argmin(objective))])
        # end-of-window inventory sample for the cross-checks
        path_rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(7, i))))
        inv = np.full(mc_paths, state.on_hand)
        for j in range(tau):
            d = demand.sample(path_rng, mc_paths)
            inv = np.maximum(inv - d, 0.0)
            if j < tau - 1:
                inv = inv + state.outstanding[j]
        mean_j = float(inv.mean())
        var_j = float(inv.var())
        se_j = float(inv.std(ddof=1) / math.sqrt(mc_paths))
        resid = 0.0
        for q in np.linspace(0.0, 2.0 * level, 5):
            lhs = float(bf.bias(inv + q).mean())
            rhs = bf.curvature * var_j + bf.curvature * (mean_j + q - level) ** 2 + bf.offset
            resid = max(resid, abs(lhs - rhs) / (1.0 + abs(lhs)))
        gap_se = abs(ej - mean_j) / se_j if se_j > 0 else abs(ej - mean_j)
        out.append(ImprovementCheck(state, ej, pil_order, grid_argmin, resid, gap_se))
    return out


@dataclass(frozen=True)
class DominanceRow:
    name: str
    tau: int
    p: float
    lhs: float
    rhs: float
    slack: float  # 3-SE allowance
    passed: bool
    note: str = ""


def theorem1_chain(mu: float, h: float, p: float, tau: int, cfg: SimConfig,
                   search_cfg: SimConfig | None = None) -> list[DominanceRow]:
    """C(PIL at optimized level) <= C(PIL at improving level) <= C(best COP)."""
    demand = Exponential(mu)
    cost = CostParams(h, p)
    r_star = optimal_constant_order(mu, h, p)
    bf = BiasFunction(mu, r_star, h, p)
    level = bf.improving_level
    warm = cfg.effective_warmup(tau)
    demands = generate_paths(demand, cfg.seed, cfg.stream, cfg.replications, warm + cfg.periods)
    agg_pil = _aggregate(PIL(level, demand), demand, tau, cost, demands, warm)
    agg_cop = _aggregate(ConstantOrder(r_star, mu), demand, tau, cost, demands, warm)
    n = cfg.periods
    pil_rate = agg_pil[:, 0] / n
    cop_rate = agg_cop[:, 0] / n
    opt = optimize_scalar("pil", demand, tau, cost, cfg, search_cfg=search_cfg or cfg)
    rows = []
    d1 = pil_rate - cop_rate
    rows.append(DominanceRow(
        "pil_improving_le_cop", tau, p, float(pil_rate.mean()), float(cop_rate.mean()),
        3.0 * _ci_halfwidth(d1) / 2.0, float(d1.mean()) <= 3.0 * _ci_halfwidth(d1) / 2.0,
        note=f"U(r*)={level:.4f}, r*={r_star:.4f}",
    ))
    best = opt.estimate
    slack = 3.0 * (best.ci_halfwidth + _ci_halfwidth(pil_rate)) / 2.0
    rows.append(DominanceRow(
        "pil_best_le_pil_improving", tau, p, best.cost, float(pil_rate.mean()), slack,
        best.cost <= float(pil_rate.mean()) + slack, note=f"U*={opt.param:.4f}",
    ))
    g_closed = bf.gain
    slack_g = 3.0 * _ci_halfwidth(cop_rate) / 2.0
    rows.append(DominanceRow(
        "cop_sim_matches_closed_form", tau, p, float(cop_rate.mean()), g_closed, slack_g,
        abs(float(cop_rate.mean()) - g_closed) <= slack_g,
    ))
    # quadratic-divergence identity: cost gap = curvature * mean squared order gap
    gap_rate = (r_star ** 2 - 2.0 * r_star * agg_pil[:, 3] / n + agg_pil[:, 4] / n)
    resid = (cop_rate - pil_rate) - bf.curvature * gap_rate
    slack_q = 3.0 * _ci_halfwidth(resid) / 2.0
    rows.append(DominanceRow(
        "quadratic_divergence_identity", tau, p, float((cop_rate - pil_rate).mean()),
        float(bf.curvature * gap_rate.mean()), slack_q,
        abs(float(resid.mean())) <= slack_q,
    ))
    return rows


def theorem3_row(demand: DemandModel, tau: int, cost: CostParams, cfg: SimConfig) -> DominanceRow:
    """Simulated lost-sales PIL cost at the twin-equivalent level vs the twin optimum."""
    bo = solve_backorder(demand, tau, cost)
    level = max(bo.s_star - tau * demand.mean, 0.0)
    cmp_ = coupled_lost_vs_backorder(level, demand, tau, cost, cfg)
    slack = 3.0 * cmp_.cost_ci
    return DominanceRow(
        "lost_sales_dominates_backorder", tau, cost.p, cmp_.cost_rate, bo.c_star, slack,
        cmp_.cost_rate <= bo.c_star + slack, note=f"U={level:.3f}, S*={bo.s_star:.3f}",
    )


def lemma7_row(demand: DemandModel, tau: int, cost: CostParams, cfg: SimConfig) -> DominanceRow:
    """Per-period lost sales in the lost-sales system vs backorders in the twin."""
    bo = solve_backorder(demand, tau, cost)
    level = max(bo.s_star - tau * demand.mean, 0.0)
    cmp_ = coupled_lost_vs_backorder(level, demand, tau, cost, cfg)
    slack = 3.0 * cmp_.lost_minus_back_ci
    return DominanceRow(
        "lost_rate_le_backorder_rate", tau, cost.p, cmp_.lost_rate, cmp_.backorder_rate, slack,
        cmp_.lost_rate <= cmp_.backorder_rate + slack,
    )


def leadtime_trend(mu: float, h: float, p: float, taus, cfg: SimConfig) -> list[DominanceRow]:
    """Gap between best-COP and improving-PIL costs as the lead time doubles."""
    demand = Exponential(mu)
    cost = CostParams(h, p)
    r_star = optimal_constant_order(mu, h, p)
    bf = BiasFunction(mu, r_star, h, p)
    rows = []
    prev_gap, prev_se = None, 0.0
    for tau in taus:
        warm = cfg.effective_warmup(tau)
        demands = generate_paths(demand, cfg.seed, cfg.stream, cfg.replications, warm + cfg.periods)
        agg_pil = _aggregate(PIL(bf.improving_level, demand), demand, tau, cost, demands, warm)
        agg_cop = _aggregate(ConstantOrder(r_star, mu), demand, tau, cost, demands, warm)
        gaps = (agg_cop[:, 0] - agg_pil[:, 0]) / cfg.periods
        gap, se = float(gaps.mean()), _ci_halfwidth(gaps) / 2.0
        if prev_gap is None:
            rows.append(DominanceRow("cop_pil_gap", tau, p, gap, gap, 0.0, True))
        else:
            slack = 3.0 * (se + prev_se)
            rows.append(DominanceRow(
                "cop_pil_gap_nonincreasing", tau, p, gap, prev_gap, slack, gap <= prev_gap + slack
            ))
        prev_gap, prev_se = gap, se
    return rows
