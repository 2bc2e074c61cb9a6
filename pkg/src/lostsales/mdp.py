"""Relative value iteration for the average-cost lost-sales MDP.

States live on the integer lattice (on-hand, q_1, ..., q_{tau-1}) with all
coordinates capped; actions are integer order quantities.  Sweeps are
synchronous (Jacobi), so results do not depend on any evaluation order.
Iteration stops when the span of the Bellman residual falls below the
configured tolerance; the gain estimate is the midpoint of the residual
range.  After solving, the stationary distribution of the greedy policy is
computed and the probability mass on the cap boundary is audited; caps are
enlarged and the solve repeated if the boundary is visited too often.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import CostParams
from .demand import DemandModel
from .errors import ConfigError, ResourceError

@dataclass(frozen=True)
class MDPConfig:
    cap: int | None = None  # default: ceil(6 * mean * (tau + 1))
    order_cap: int | None = None  # default: same as cap
    demand_tail: float = 1e-9
    tol: float = 1e-8
    max_iter: int = 200_000
    audit_threshold: float = 1e-6
    max_enlargements: int = 3


@dataclass(frozen=True)
class MDPSolution:
    gain: float
    policy: np.ndarray  # integer action per lattice state
    value: np.ndarray  # relative value function
    cap: int
    order_cap: int
    iterations: int
    span_history: np.ndarray
    boundary_mass: float
    audit_ok: bool


def _truncated_demand(demand: DemandModel, tail: float) -> np.ndarray:
    if not demand.integer_valued:
        raise ConfigError(f"exact MDP requires integer-valued demand, got {demand.kind}")
    pmf = demand.pmf_array().copy()
    keep = np.cumsum(pmf) < 1.0 - tail
    hi = int(np.searchsorted(np.cumsum(pmf), 1.0 - tail)) + 1
    pmf = pmf[: max(hi, 1)]
    return pmf / pmf.sum()


def _tables(demand: DemandModel, cost: CostParams, cap: int, tail: float):
    pmf = _truncated_demand(demand, tail)
    m = pmf.size - 1
    i = np.arange(cap + 1)
    d = np.arange(m + 1)
    stage = cost.h * (np.maximum(i[:, None] - d[None, :], 0) @ pmf) + cost.p * (
        np.maximum(d[None, :] - i[:, None], 0) @ pmf
    )
    # p2[i, y] = P((i - D)^+ = y)
    sf = np.concatenate([np.cumsum(pmf[::-1])[::-1], [0.0]])
    p2 = np.zeros((cap + 1, cap + 1))
    for ii in range(cap + 1):
        p2[ii, 0] = sf[min(ii, m + 1)]
        dd = ii - np.arange(1, ii + 1)
        ok = dd <= m
        p2[ii, np.arange(1, ii + 1)[ok]] = pmf[dd[ok]]
    return pmf, stage, p2


def _bellman_sweep(value: np.ndarray, stage: np.ndarray, p2: np.ndarray, cap: int,
                   order_cap: int, tau: int, policy_out: np.ndarray | None = None) -> np.ndarray:
    """One synchronous optimality sweep; optionally records argmin actions."""
    n = cap + 1
    na = order_cap + 1
    if tau == 1:
        shifted = value[np.minimum(np.arange(n)[:, None] + np.arange(na)[None, :], cap)]
        w = p2 @ shifted  # (n, na)
        if policy_out is not None:
            policy_out[:] = np.argmin(w, axis=1)
        return stage + w.min(axis=1)
    new = np.empty_like(value)
    v2 = value.reshape(n, -1)  # first axis: next on-hand
    rest = value.shape[1:-1]
    for q1 in range(n):
        gathered = v2[np.minimum(np.arange(n) + q1, cap)]
        w = (p2 @ gathered).reshape((n,) + rest + (na,))
        if policy_out is not None:
            policy_out[:, q1] = np.argmin(w, axis=-1)
        new[:, q1] = stage.reshape((n,) + (1,) * len(rest)) + w.min(axis=-1)
    return new


def _policy_sweep(value: np.ndarray, stage: np.ndarray, p2: np.ndarray, cap: int,
                  tau: int, actions: np.ndarray) -> np.ndarray:
    """One synchronous evaluation sweep under a fixed integer action table."""
    n = cap + 1
    if tau == 1:
        # w[i] = sum_y p2[i, y] * value[min(y + a(i), cap)]
        w = np.empty(n)
        for a in np.unique(actions):
            mask = actions == a
            w[mask] = p2[mask] @ value[np.minimum(np.arange(n) + a, cap)]
        return stage + w
    new = np.empty_like(value)
    v2 = value.reshape(n, -1)
    rest = value.shape[1:-1]
    for q1 in range(n):
        gathered = v2[np.minimum(np.arange(n) + q1, cap)]
        w = (p2 @ gathered).reshape((n,) + rest + (-1,))
        act = actions[:, q1][..., None]
        new[:, q1] = stage.reshape((n,) + (1,) * len(rest)) + np.take_along_axis(w, act, axis=-1)[..., 0]
    return new


def _relative_iteration(step, shape, tol, max_iter):
    value = np.zeros(shape)
    spans = []
    for it in range(max_iter):
        new = step(value)
        delta = new - value
        lo, hi = float(delta.min()), float(delta.max())
        spans.append(hi - lo)
        value = new - new.flat[0]
        if hi - lo < tol:
            return value, 0.5 * (lo + hi), it + 1, np.array(spans)
    raise ResourceError(f"relative value iteration did not reach span {tol} in {max_iter} sweeps")


def solve_average_cost(demand: DemandModel, tau: int, cost: CostParams,
                       cfg: MDPConfig | None = None) -> MDPSolution:
    """Optimal average cost (gain) and greedy policy on the capped lattice."""
    cfg = cfg or MDPConfig()
    cap = cfg.cap if cfg.cap is not None else math.ceil(6.0 * demand.mean * (tau + 1))
    for attempt in range(cfg.max_enlargements + 1):
        order_cap = min(cfg.order_cap, cap) if cfg.order_cap is not None else cap
        pmf, stage, p2 = _tables(demand, cost, cap, cfg.demand_tail)
        shape = (cap + 1,) * tau
        value, gain, iters, spans = _relative_iteration(
            lambda v: _bellman_sweep(v, stage, p2, cap, order_cap, tau), shape, cfg.tol, cfg.max_iter
        )
        policy = np.zeros(shape, dtype=np.int64)
        _bellman_sweep(value, stage, p2, cap, order_cap, tau, policy_out=policy)
        dist = _stationary_distribution(policy, p2, cap, tau)
        boundary = _boundary_mass(dist, policy, cap, order_cap)
        if boundary < cfg.audit_threshold:
            return MDPSolution(gain, policy, value, cap, order_cap, iters, spans, boundary, True)
        cap = int(cap * 1.4) + 1
    return MDPSolution(gain, policy, value, cap, order_cap, iters, spans, boundary, False)


def evaluate_policy_exact(actions: np.ndarray, demand: DemandModel, tau: int,
                          cost: CostParams, cfg: MDPConfig | None = None) -> float:
    """Average cost of a fixed lattice policy (iterative policy evaluation)."""
    cfg = cfg or MDPConfig()
    cap = cfg.cap if cfg.cap is not None else math.ceil(6.0 * demand.mean * (tau + 1))
    actions = np.asarray(actions, dtype=np.int64)
    if actions.shape != (cap + 1,) * tau:
        raise ConfigError(f"action table shape {actions.shape} does not match cap {cap}, tau {tau}")
    if actions.max() > cap or actions.min() < 0:
        raise ConfigError("actions must lie within the lattice caps")
    pmf, stage, p2 = _tables(demand, cost, cap, cfg.demand_tail)
    _, gain, _, _ = _relative_iteration(
        lambda v: _policy_sweep(v, stage, p2, cap, tau, actions), actions.shape, cfg.tol, cfg.max_iter
    )
    return gain


def policy_table(policy_fn, cap: int, tau: int) -> np.ndarray:
    """Tabulate an integer action for every lattice state."""
    shape = (cap + 1,) * tau
    table = np.zeros(shape, dtype=np.int64)
    for idx in np.ndindex(shape):
        table[idx] = int(policy_fn(idx[0], idx[1:]))
    return table


def _stationary_distribution(policy: np.ndarray, p2: np.ndarray, cap: int, tau: int,
                             iters: int = 5000, tol: float = 1e-13) -> np.ndarray:
    """Occupancy distribution of the policy's chain by power iteration.

    Transition from (I, q1, ..., q_{tau-1}) with action a: on-hand moves to
    min((I - D)^+ + q1, cap), the pipeline shifts left, and a is appended.
    """
    n = cap + 1
    dist = np.zeros(policy.shape)
    dist[(0,) * tau] = 1.0
    for _ in range(iters):
        new = np.zeros_like(dist)
        if tau == 1:
            for a in np.unique(policy):
                contrib = (dist * (policy == a)) @ p2  # mass over y = (I - D)^+
                np.add.at(new, np.minimum(np.arange(n) + a, cap), contrib)
        else:
            for q1 in range(n):
                idx = np.minimum(np.arange(n) + q1, cap)
                for rest in np.ndindex(policy.shape[2:]):
                    sel = (slice(None), q1) + rest
                    col = dist[sel]
                    if not col.any():
                        continue
                    acol = policy[sel]
                    for a in np.unique(acol):
                        contrib = (col * (acol == a)) @ p2
                        np.add.at(new[(slice(None),) + rest + (int(a),)], idx, contrib)
        delta = np.abs(new - dist).sum()
        dist = new
        if delta < tol:
            break
    return dist


def _boundary_mass(dist: np.ndarray, policy: np.ndarray, cap: int, order_cap: int) -> float:
    mass = 0.0
    for axis in range(dist.ndim):
        sl = [slice(None)] * dist.ndim
        sl[axis] = cap
        mass += float(dist[tuple(sl)].sum())
    mass += float(dist[policy == order_cap].sum())
    return mass
