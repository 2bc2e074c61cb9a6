"""Long-run cost-rate estimation with common random numbers.

Demand paths are generated from counter-based Philox streams keyed by
(master seed, stream id, replication), so two policies evaluated on the
same stream see bitwise-identical demand paths, and extending a run keeps
the prefix of every path unchanged.  Estimates are across independent
replications with a normal-theory 95% confidence interval; the horizon is
doubled until the CI half-width target is met or the period budget runs
out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats as sps

from . import _kernels
from .core import CostParams, PipelineState, step
from .demand import DemandModel, MixedErlang
from .errors import ConfigError
from .policies import (
    BaseStock,
    CappedBaseStock,
    ConstantOrder,
    Myopic,
    PIL,
    Policy,
    myopic_order_cap,
)
from .projection import LatticeExact, MECustomer, default_backend, lattice_tables, me_tables


@dataclass(frozen=True)
class SimConfig:
    seed: int = 12345
    replications: int = 30
    periods: int = 4096
    warmup: int = 2000
    ci_target: float = 0.01  # 95% half-width as a fraction of the point estimate
    stream: int = 0
    max_periods: int = 1 << 18
    extend: bool = True

    def effective_warmup(self, tau: int) -> int:
        return max(self.warmup, tau)


@dataclass(frozen=True)
class CostEstimate:
    cost: float
    ci_halfwidth: float
    lost_rate: float
    mean_end_inventory: float
    mean_order: float
    mean_order_sq: float
    min_pil_slack: float
    periods: int
    replications: int
    seed: int
    stream: int
    target_missed: bool


@dataclass(frozen=True)
class DiffEstimate:
    """CRN-paired difference of two policies' cost rates (first minus second)."""

    diff: float
    ci_halfwidth: float
    first: CostEstimate
    second: CostEstimate
    mean_sq_order_gap: float | None


def generate_paths(demand: DemandModel, seed: int, stream: int, reps: int, horizon: int) -> np.ndarray:
    """Demand draws for each (replication, period); prefix-stable in horizon."""
    out = np.empty((reps, horizon))
    for rep in range(reps):
        if isinstance(demand, MixedErlang):
            rng_k = _stream_rng(seed, stream, rep, 0)
            rng_g = _stream_rng(seed, stream, rep, 1)
            ks = np.searchsorted(np.cumsum(demand.theta_arr), rng_k.random(horizon), side="right")
            out[rep] = rng_g.standard_gamma(ks.astype(np.float64)) / demand.lam
        else:
            out[rep] = demand.sample(_stream_rng(seed, stream, rep, 0), horizon)
    return out


def _stream_rng(seed: int, stream: int, rep: int, sub: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(stream, rep, sub))
    return np.random.Generator(np.random.Philox(ss))


def _ci_halfwidth(values: np.ndarray) -> float:
    n = values.size
    if n < 2:
        return 0.0
    s = float(values.std(ddof=1))
    return float(sps.t.ppf(0.975, n - 1)) * s / math.sqrt(n)


def _aggregate(policy: Policy, demand: DemandModel, tau: int, cost: CostParams,
               demands: np.ndarray, warmup: int) -> np.ndarray:
    """Per-replication sums over the post-warmup window (kernel dispatch)."""
    h, p = cost.h, cost.p
    if isinstance(policy, BaseStock):
        return _kernels.sim_position_policy(demands, tau, 0, policy.level, 0.0, h, p, warmup)
    if isinstance(policy, ConstantOrder):
        return _kernels.sim_position_policy(demands, tau, 1, 0.0, policy.rate, h, p, warmup)
    if isinstance(policy, CappedBaseStock):
        return _kernels.sim_position_policy(demands, tau, 2, policy.level, policy.cap, h, p, warmup)
    if isinstance(policy, PIL):
        backend = policy.backend if policy.backend is not None else default_backend(demand)
        if isinstance(backend, MECustomer):
            lam, theta, elk, band = me_tables(demand, tau)
            return _kernels.sim_pil_me(
                demands, tau, policy.level, lam, theta, elk, band, demand.mean, h, p, warmup
            )
        if isinstance(backend, LatticeExact):
            pmf, st, sp, mu = lattice_tables(demand)
            size_l = int(policy.level + tau * mu) + 6
            return _kernels.sim_pil_lattice(
                demands, tau, policy.level, pmf, st, sp, size_l, mu, h, p, warmup
            )
    if isinstance(policy, Myopic):
        backend = policy.backend if policy.backend is not None else default_backend(demand)
        if isinstance(backend, LatticeExact):
            pmf, st, sp, mu = lattice_tables(demand)
            qhi = myopic_order_cap(demand, tau, cost)
            size_l = int((tau + 1) * qhi) + pmf.size + 8
            return _kernels.sim_myopic_lattice(
                demands, tau, pmf, st, sp, size_l, mu, h, p, qhi, policy.tol, warmup
            )
    return _aggregate_generic(policy, tau, cost, demands, warmup)


def _aggregate_generic(policy: Policy, tau: int, cost: CostParams,
                       demands: np.ndarray, warmup: int) -> np.ndarray:
    """Pure-Python reference simulator; used for cross-checks and rare policies."""
    from .projection import project_expected_level

    reps, horizon = demands.shape
    agg = np.zeros((reps, _kernels.AGG_COLS))
    for rep in range(reps):
        state = PipelineState.empty(tau)
        acc = np.zeros(5)
        min_slack = np.inf
        for t in range(horizon):
            if isinstance(policy, PIL):
                backend = policy.backend if policy.backend is not None else default_backend(policy.demand)
                proj = project_expected_level(state, policy.demand, backend)
                min_slack = min(min_slack, policy.level - proj)
                order = max(policy.level - proj, 0.0)
            else:
                order = policy.order(state)
            out = step(state, order, demands[rep, t], cost)
            if t >= warmup:
                acc += (out.cost, out.lost, out.end_inventory, order, order * order)
            state = out.next_state
        agg[rep, :5] = acc
        agg[rep, 5] = min_slack
    return agg


def _estimate_from_agg(agg: np.ndarray, n: int, cfg: SimConfig, missed: bool) -> CostEstimate:
    rates = agg[:, 0] / n
    return CostEstimate(
        cost=float(rates.mean()),
        ci_halfwidth=_ci_halfwidth(rates),
        lost_rate=float(agg[:, 1].mean() / n),
        mean_end_inventory=float(agg[:, 2].mean() / n),
        mean_order=float(agg[:, 3].mean() / n),
        mean_order_sq=float(agg[:, 4].mean() / n),
        min_pil_slack=float(agg[:, 5].min()),
        periods=n,
        replications=agg.shape[0],
        seed=cfg.seed,
        stream=cfg.stream,
        target_missed=missed,
    )


def estimate_cost(policy: Policy, demand: DemandModel, tau: int, cost: CostParams,
                  cfg: SimConfig) -> CostEstimate:
    """Long-run cost rate of a policy from the all-zero initial state.

    With one replication the CI comes from non-overlapping batch means on
    the single long run; otherwise it is the across-replication interval.
    """
    warmup = cfg.effective_warmup(tau)
    periods = cfg.periods
    while True:
        demands = generate_paths(demand, cfg.seed, cfg.stream, cfg.replications, warmup + periods)
        agg = _aggregate(policy, demand, tau, cost, demands, warmup)
        est = _estimate_from_agg(agg, periods, cfg, missed=False)
        if cfg.replications == 1:
            est = replace(est, ci_halfwidth=_batch_means_ci(
                policy, demand, tau, cost, demands, warmup))
        if est.ci_halfwidth <= cfg.ci_target * abs(est.cost) or not cfg.extend:
            return est
        if periods >= cfg.max_periods:
            return replace(est, target_missed=True)
        periods = min(periods * 2, cfg.max_periods)


def _cost_trace(policy: Policy, demand: DemandModel, tau: int, cost: CostParams,
                demands: np.ndarray) -> np.ndarray:
    h, p = cost.h, cost.p
    zeros = np.zeros(demands.shape)
    if isinstance(policy, BaseStock):
        out = np.zeros(demands.shape)
        _kernels.sim_position_policy_cost_trace(demands, tau, 0, policy.level, 0.0, h, p, out)
        return out
    if isinstance(policy, ConstantOrder):
        out = np.zeros(demands.shape)
        _kernels.sim_position_policy_cost_trace(demands, tau, 1, 0.0, policy.rate, h, p, out)
        return out
    if isinstance(policy, CappedBaseStock):
        out = np.zeros(demands.shape)
        _kernels.sim_position_policy_cost_trace(demands, tau, 2, policy.level, policy.cap, h, p, out)
        return out
    if isinstance(policy, PIL):
        backend = policy.backend if policy.backend is not None else default_backend(demand)
        out = np.zeros(demands.shape)
        if isinstance(backend, MECustomer):
            lam, theta, elk, band = me_tables(demand, tau)
            _kernels.sim_pil_me_trace(demands, tau, policy.level, lam, theta, elk, band,
                                      demand.mean, h, p, zeros, zeros.copy(), out, zeros.copy())
            return out
        if isinstance(backend, LatticeExact):
            pmf, st, sp, mu = lattice_tables(demand)
            size_l = int(policy.level + tau * mu) + 6
            _kernels.sim_pil_lattice_trace(demands, tau, policy.level, pmf, st, sp, size_l,
                                           mu, h, p, zeros, zeros.copy(), out, zeros.copy())
            return out
    # generic fallback: step the policy in Python (slow; fine for small runs)
    from .core import PipelineState, step

    out = np.zeros(demands.shape)
    for rep in range(demands.shape[0]):
        state = PipelineState.empty(tau)
        for t in range(demands.shape[1]):
            o = step(state, policy.order(state), demands[rep, t], cost)
            out[rep, t] = o.cost
            state = o.next_state
    return out


def _batch_means_ci(policy, demand, tau, cost, demands, warmup, n_batches: int = 30) -> float:
    trace = _cost_trace(policy, demand, tau, cost, demands)[0, warmup:]
    width = trace.size // n_batches
    if width < 1:
        return float("inf")
    batches = trace[: width * n_batches].reshape(n_batches, width).mean(axis=1)
    return _ci_halfwidth(batches)


def estimate_difference_crn(policy_a: Policy, policy_b: Policy, demand: DemandModel, tau: int,
                            cost: CostParams, cfg: SimConfig) -> DiffEstimate:
    """Paired difference of cost rates on shared demand paths.

    Also reports the time-average squared gap between the two order
    sequences when one side is a constant-order policy (recoverable from
    aggregate moments in that case).
    """
    warmup = cfg.effective_warmup(tau)
    periods = cfg.periods
    while True:
        demands = generate_paths(demand, cfg.seed, cfg.stream, cfg.replications, warmup + periods)
        agg_a = _aggregate(policy_a, demand, tau, cost, demands, warmup)
        agg_b = _aggregate(policy_b, demand, tau, cost, demands, warmup)
        est_a = _estimate_from_agg(agg_a, periods, cfg, missed=False)
        est_b = _estimate_from_agg(agg_b, periods, cfg, missed=False)
        ok_a = est_a.ci_halfwidth <= cfg.ci_target * abs(est_a.cost) if est_a.cost else True
        ok_b = est_b.ci_halfwidth <= cfg.ci_target * abs(est_b.cost) if est_b.cost else True
        if (ok_a and ok_b) or not cfg.extend or periods >= cfg.max_periods:
            break
        periods = min(periods * 2, cfg.max_periods)
    diffs = (agg_a[:, 0] - agg_b[:, 0]) / periods
    gap = _order_gap_sq(policy_a, agg_a, policy_b, agg_b, periods)
    return DiffEstimate(
        diff=float(diffs.mean()),
        ci_halfwidth=_ci_halfwidth(diffs),
        first=est_a,
        second=est_b,
        mean_sq_order_gap=gap,
    )


def _order_gap_sq(policy_a, agg_a, policy_b, agg_b, n) -> float | None:
    if isinstance(policy_b, ConstantOrder):
        r = policy_b.rate
        mo, mo2 = agg_a[:, 3].mean() / n, agg_a[:, 4].mean() / n
        return float(r * r - 2.0 * r * mo + mo2)
    if isinstance(policy_a, ConstantOrder):
        r = policy_a.rate
        mo, mo2 = agg_b[:, 3].mean() / n, agg_b[:, 4].mean() / n
        return float(r * r - 2.0 * r * mo + mo2)
    return None


def pil_traces(level: float, demand: DemandModel, tau: int, cost: CostParams,
               cfg: SimConfig, horizon: int) -> dict:
    """Per-period arrays (orders, lost, cost, projection) under a PIL policy."""
    demands = generate_paths(demand, cfg.seed, cfg.stream, cfg.replications, horizon)
    shape = demands.shape
    orders = np.zeros(shape)
    lost = np.zeros(shape)
    costs = np.zeros(shape)
    proj = np.zeros(shape)
    if isinstance(demand, MixedErlang):
        lam, theta, elk, band = me_tables(demand, tau)
        _kernels.sim_pil_me_trace(
            demands, tau, level, lam, theta, elk, band, demand.mean, cost.h, cost.p,
            orders, lost, costs, proj,
        )
    elif demand.integer_valued:
        pmf, st, sp, mu = lattice_tables(demand)
        size_l = int(level + tau * mu) + 6
        _kernels.sim_pil_lattice_trace(
            demands, tau, level, pmf, st, sp, size_l, mu, cost.h, cost.p,
            orders, lost, costs, proj,
        )
    else:
        raise ConfigError(f"no exact PIL trace kernel for {demand.kind} demand")
    return {"demands": demands, "orders": orders, "lost": lost, "cost": costs, "projection": proj}


def backorder_traces(base_level: float, demand: DemandModel, tau: int, cost: CostParams,
                     cfg: SimConfig, horizon: int) -> dict:
    """Per-period backorders and cost of the back-order twin under base-stock."""
    demands = generate_paths(demand, cfg.seed, cfg.stream, cfg.replications, horizon)
    backorders = np.zeros(demands.shape)
    costs = np.zeros(demands.shape)
    _kernels.sim_backorder_basestock_trace(demands, tau, base_level, cost.h, cost.p, backorders, costs)
    return {"demands": demands, "backorders": backorders, "cost": costs}
