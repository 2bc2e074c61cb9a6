"""Policy-parameter optimization on CRN-coupled simulated cost.

All candidate evaluations inside one search share a demand stream, so the
search objective is a deterministic function of the parameter.  Scalar
parameters (base-stock level, constant order rate, projected inventory
level) use golden-section search under the convexity hypothesis, with an
edge-detection retry; the guaranteed geometric grid is available as the
provably near-optimal fallback.  The two-parameter capped base-stock
policy is optimized by multi-start Nelder-Mead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize as spo

from .backorder import solve_backorder
from .core import CostParams
from .demand import DemandModel
from .errors import ConfigError, ParameterError
from .policies import BaseStock, CappedBaseStock, ConstantOrder, PIL, Policy
from .simulate import CostEstimate, SimConfig, estimate_cost


@dataclass(frozen=True)
class SearchSpec:
    lo: float
    hi: float
    tol: float = 1e-3
    budget: int = 200

    def __post_init__(self):
        if self.lo > self.hi:
            raise ParameterError(f"bracket [{self.lo}, {self.hi}] is empty")
        if self.tol <= 0:
            raise ParameterError("tolerance must be positive")


@dataclass(frozen=True)
class OptResult:
    policy: Policy
    param: float
    estimate: CostEstimate
    evaluations: int
    edge_flag: bool


@dataclass(frozen=True)
class GuaranteedGrid:
    """The arithmetic-plus-geometric level grid with a performance guarantee."""

    eps: float
    alpha: float
    points: np.ndarray

    def __len__(self):
        return self.points.size


def alpha_d(demand: DemandModel, cost: CostParams) -> float:
    """Newsvendor floor of the per-period cost, scaled by the holding rate.

    alpha = min_x E[(p/h)(D - x)^+ + (x - D)^+], attained at the p/(p+h)
    quantile of one-period demand.  Degenerate (zero-variance) demand is
    rejected because the floor collapses to zero.
    """
    if demand.var <= 0:
        raise ParameterError("alpha requires Var(D) > 0")
    ratio = cost.p / cost.h
    x_star = demand.quantile(cost.critical_ratio)
    over = x_star - demand.mean + demand.loss(x_star)  # E[(x* - D)^+]
    return float(ratio * demand.loss(x_star) + over)


def build_grid(eps: float, demand: DemandModel, cost: CostParams) -> GuaranteedGrid:
    """Level grid whose best point is within a (1 + eps) factor of optimal."""
    if eps <= 0:
        raise ParameterError(f"eps must be positive, got {eps}")
    mu = demand.mean
    alpha = alpha_d(demand, cost)
    n_arith = math.ceil(2.0 * mu / (alpha * eps)) - 1
    n_geom = math.ceil(math.log(cost.p / cost.h) / math.log1p(eps)) if cost.p > cost.h else 0
    arith = np.arange(n_arith + 1) * (eps * alpha)
    geom = mu + mu * (1.0 + eps) ** np.arange(n_geom + 1)
    points = np.unique(np.concatenate([arith, geom]))
    return GuaranteedGrid(eps=eps, alpha=alpha, points=points)


def grid_cardinality_bound(grid: GuaranteedGrid, demand: DemandModel, cost: CostParams) -> float:
    return (2.0 * demand.mean / grid.alpha + math.log(cost.p / cost.h)) / grid.eps + 2.0


def _make_policy(family: str, param: float, demand: DemandModel, cost: CostParams, backend) -> Policy:
    if family == "bs":
        return BaseStock(param)
    if family == "cop":
        return ConstantOrder(param, demand.mean)
    if family == "pil":
        return PIL(param, demand, backend)
    raise ConfigError(f"scalar optimization supports bs/cop/pil, got {family!r}")


def default_bracket(family: str, demand: DemandModel, tau: int, cost: CostParams) -> SearchSpec:
    mu = demand.mean
    if family == "cop":
        return SearchSpec(0.0, mu * (1.0 - 1e-6), tol=1e-3 * mu)
    if family == "pil":
        return SearchSpec(0.0, (1.0 + cost.p / cost.h) * mu, tol=1e-3 * mu)
    if family == "bs":
        bo = solve_backorder(demand, tau, cost)
        sd = math.sqrt(demand.var * (tau + 1))
        return SearchSpec(0.0, bo.s_star + 4.0 * sd + mu, tol=1e-3 * mu)
    raise ConfigError(f"no default bracket for family {family!r}")


def golden_section(f, lo: float, hi: float, tol: float, budget: int = 200):
    """Deterministic golden-section minimum of a memoized objective."""
    cache: dict[float, float] = {}

    def g(x):
        if x not in cache:
            if len(cache) >= budget:
                raise ConfigError(f"evaluation budget {budget} exhausted in golden-section search")
            cache[x] = f(x)
        return cache[x]

    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    inv_phi2 = (3.0 - math.sqrt(5.0)) / 2.0
    a, b = lo, hi
    dist = b - a
    c = a + inv_phi2 * dist
    d = a + inv_phi * dist
    yc, yd = g(c), g(d)
    while dist > tol:
        if yc < yd:
            b, d, yd = d, c, yc
            dist *= inv_phi
            c = a + inv_phi2 * dist
            yc = g(c)
        else:
            a, c, yc = c, d, yd
            dist *= inv_phi
            d = a + inv_phi * dist
            yd = g(d)
    x = 0.5 * (a + b)
    y = g(x)
    for cand, val in ((lo, g(lo)), (hi, g(hi))):
        if val < y:
            x, y = cand, val
    return x, y, len(cache)


def optimize_scalar(family: str, demand: DemandModel, tau: int, cost: CostParams,
                    cfg: SimConfig, spec: SearchSpec | None = None,
                    search_cfg: SimConfig | None = None, backend=None) -> OptResult:
    """Best scalar parameter for a policy family on CRN-coupled simulated cost.

    ``search_cfg`` (default: ``cfg``) drives the candidate evaluations; the
    returned estimate re-evaluates the winner under ``cfg``.
    """
    spec = spec or default_bracket(family, demand, tau, cost)
    search_cfg = search_cfg or cfg
    evals = 0

    def objective(x):
        nonlocal evals
        evals += 1
        pol = _make_policy(family, x, demand, cost, backend)
        return estimate_cost(pol, demand, tau, cost, search_cfg).cost

    lo, hi = spec.lo, spec.hi
    edge = False
    for attempt in range(2):
        x, _, _ = golden_section(objective, lo, hi, spec.tol, spec.budget)
        at_edge = (hi - x) < 2.0 * spec.tol and family != "cop"
        if not at_edge:
            break
        if attempt == 0:
            hi = hi * 2.0  # widen once, then flag
        else:
            edge = True
    policy = _make_policy(family, x, demand, cost, backend)
    return OptResult(policy, float(x), estimate_cost(policy, demand, tau, cost, cfg), evals, edge)


def grid_search_pil(eps: float, demand: DemandModel, tau: int, cost: CostParams,
                    cfg: SimConfig, search_cfg: SimConfig | None = None,
                    backend=None) -> tuple[OptResult, GuaranteedGrid]:
    """Evaluate the guaranteed grid and return its best level."""
    grid = build_grid(eps, demand, cost)
    search_cfg = search_cfg or cfg
    best_u, best_c = None, math.inf
    for u in grid.points:
        c = estimate_cost(PIL(float(u), demand, backend), demand, tau, cost, search_cfg).cost
        if c < best_c:
            best_u, best_c = float(u), c
    policy = PIL(best_u, demand, backend)
    res = OptResult(policy, best_u, estimate_cost(policy, demand, tau, cost, cfg), len(grid), False)
    return res, grid


def optimize_capped(demand: DemandModel, tau: int, cost: CostParams, cfg: SimConfig,
                    search_cfg: SimConfig | None = None, xtol: float = 1e-3) -> OptResult:
    """Multi-start Nelder-Mead over (base-stock level, order cap)."""
    search_cfg = search_cfg or cfg
    mu = demand.mean
    bo = solve_backorder(demand, tau, cost)
    sd = math.sqrt(demand.var * (tau + 1))
    evals = 0
    cache: dict[tuple[float, float], float] = {}

    def objective(x):
        nonlocal evals
        s = max(float(x[0]), 0.0)
        r = max(float(x[1]), 1e-9)
        key = (round(s, 9), round(r, 9))
        if key not in cache:
            evals += 1
            pol = CappedBaseStock(s, r)
            cache[key] = estimate_cost(pol, demand, tau, cost, search_cfg).cost
        return cache[key]

    s0 = bo.s_star
    starts = [
        (s0 - 2.0 * sd, 0.7 * mu),
        (s0 + 2.0 * sd, 0.7 * mu),
        (s0 - 2.0 * sd, 0.99 * mu),
        (s0 + 2.0 * sd, 0.99 * mu),
    ]
    results = []
    for st in starts:
        x0 = np.array([max(st[0], 1e-6), st[1]])
        r = spo.minimize(objective, x0, method="Nelder-Mead",
                         options={"xatol": xtol, "fatol": 1e-9, "maxfev": 400})
        results.append((float(r.fun), float(max(r.x[0], 0.0)), float(max(r.x[1], 1e-9))))
    best = min(results)
    flat = len({round(v, 9) for v, _, _ in results}) == 1 and len(
        {(round(s, 6), round(r, 6)) for _, s, r in results}
    ) > 1
    policy = CappedBaseStock(best[1], best[2])
    return OptResult(policy, best[1], estimate_cost(policy, demand, tau, cost, cfg), evals, flat)
