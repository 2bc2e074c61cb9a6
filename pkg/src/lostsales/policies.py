"""The five ordering policies compared in the benchmarks.

Every policy is an immutable value with an ``order(state) -> float`` method.
Base-stock, constant-order, and capped base-stock act on the inventory
position alone; the projected-inventory-level (PIL) and myopic policies act
on a projection of the inventory level at the moment the order will arrive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import CostParams, PipelineState
from .demand import DemandModel, MixedErlang
from .errors import ConfigError, ParameterError, StabilityError
from .projection import (
    LatticeExact,
    MECustomer,
    MonteCarlo,
    default_backend,
    lattice_tables,
    me_tables,
    project_expected_level,
)


class Policy:
    family: str = "abstract"

    def order(self, state: PipelineState) -> float:
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError

    def spec_string(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class BaseStock(Policy):
    """Order up to S on the inventory position."""

    level: float
    family = "bs"

    def __post_init__(self):
        if self.level < 0:
            raise ParameterError(f"base-stock level must be >= 0, got {self.level}")

    def order(self, state: PipelineState) -> float:
        return max(self.level - state.position, 0.0)

    def params(self) -> dict:
        return {"S": self.level}

    def spec_string(self) -> str:
        return f"bs:S={self.level:g}"


@dataclass(frozen=True)
class ConstantOrder(Policy):
    """Order ``rate`` every period; requires rate < mean demand for stability."""

    rate: float
    mean_demand: float
    family = "cop"

    def __post_init__(self):
        if self.rate < 0:
            raise ParameterError(f"constant order must be >= 0, got {self.rate}")
        if self.rate >= self.mean_demand:
            raise StabilityError(
                f"constant order {self.rate} must stay below mean demand {self.mean_demand}"
            )

    def order(self, state: PipelineState) -> float:
        return self.rate

    def params(self) -> dict:
        return {"r": self.rate}

    def spec_string(self) -> str:
        return f"cop:r={self.rate:g}"


@dataclass(frozen=True)
class CappedBaseStock(Policy):
    """Base-stock order truncated at a per-period cap."""

    level: float
    cap: float
    family = "cbs"

    def __post_init__(self):
        if self.level < 0 or self.cap < 0:
            raise ParameterError("capped base-stock parameters must be >= 0")

    def order(self, state: PipelineState) -> float:
        return min(max(self.level - state.position, 0.0), self.cap)

    def params(self) -> dict:
        return {"S": self.level, "r": self.cap}

    def spec_string(self) -> str:
        return f"cbs:S={self.level:g},r={self.cap:g}"


@dataclass(frozen=True)
class PIL(Policy):
    """Raise the projected inventory level at order arrival to ``level``."""

    level: float
    demand: DemandModel
    backend: object = None
    family = "pil"

    def __post_init__(self):
        if self.level < 0:
            raise ParameterError(f"projected inventory level must be >= 0, got {self.level}")

    def order(self, state: PipelineState) -> float:
        backend = self.backend if self.backend is not None else default_backend(self.demand)
        return max(self.level - project_expected_level(state, self.demand, backend), 0.0)

    def params(self) -> dict:
        return {"U": self.level}

    def spec_string(self) -> str:
        return f"pil:U={self.level:g}"


@dataclass(frozen=True)
class Myopic(Policy):
    """Order to minimize the expected cost in the period the order arrives."""

    cost: CostParams
    demand: DemandModel
    backend: object = None
    tol: float = 1e-6
    family = "myopic"

    def order(self, state: PipelineState) -> float:
        backend = self.backend if self.backend is not None else default_backend(self.demand)
        if isinstance(backend, LatticeExact):
            return _myopic_order_lattice(state, self.demand, self.cost, self.tol)
        if isinstance(backend, MECustomer):
            return _myopic_order_me(state, self.demand, self.cost, self.tol)
        return _myopic_order_mc(state, self.demand, self.cost, backend, self.tol)

    def params(self) -> dict:
        return {}

    def spec_string(self) -> str:
        return "myopic"


def myopic_order_cap(demand: DemandModel, tau: int, cost: CostParams) -> float:
    """Upper bracket for the myopic order: the all-from-this-order newsvendor point.

    With zero projected stock the arrival-period cost is the newsvendor
    objective in the order quantity against demand over tau + 1 periods, so
    no larger order is ever optimal.
    """
    lead = demand.lead_time_total(tau + 1)
    return lead.quantile(cost.critical_ratio) + 1.0


def _myopic_order_lattice(state: PipelineState, demand, cost, tol) -> float:
    tau = state.lead_time
    pmf, st, sp, mu = lattice_tables(demand)
    qhi = myopic_order_cap(demand, tau, cost)
    size_l = int(math.floor(state.position + qhi)) + pmf.size + 2
    el = np.zeros(tau)
    anchors = np.zeros(tau + 1)
    probs = np.zeros((tau + 1, size_l))
    glen = np.zeros(tau + 1, dtype=np.int64)
    pipe = np.asarray(state.outstanding, dtype=float)
    zero = _kernels.lattice_el_profile(state.on_hand, pipe, pmf, st, sp, el, anchors, probs, glen, True)
    ng = int(np.max(np.nonzero(glen)[0]) + 1) if np.any(glen > 0) else 0
    return float(
        _kernels.myopic_order_lattice(
            zero, anchors, probs, glen, ng, st, sp, pmf.size - 1, mu, cost.h, cost.p, qhi, tol
        )
    )


def _myopic_order_me(state: PipelineState, demand: MixedErlang, cost, tol) -> float:
    tau = state.lead_time
    lam, theta, elk, band = me_tables(demand, tau)
    el = np.zeros(tau)
    cur = np.zeros(band)
    nxt = np.zeros(band)
    pq = np.zeros(band)
    pipe = np.asarray(state.outstanding, dtype=float)
    _kernels.me_el_profile(state.on_hand, pipe, lam, theta, elk, el, cur, nxt, pq, True)
    jt = cur.copy()
    ej = state.position - tau * demand.mean + float(el.sum()) / lam
    mu = demand.mean

    def objective(q):
        extra = _kernels.me_extra_loss(jt, lam * q, pq, elk, band) / lam
        return cost.h * (ej + q - mu) + (cost.h + cost.p) * extra

    qhi = myopic_order_cap(demand, tau, cost)
    return _golden_with_left_edge(objective, 0.0, qhi, tol)


def _myopic_order_mc(state: PipelineState, demand, cost, backend: MonteCarlo, tol) -> float:
    tau = state.lead_time
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(backend.seed)))
    n = backend.paths
    inv = np.full(n, float(state.on_hand))
    for j in range(tau):
        d = demand.sample(rng, n)
        inv = np.maximum(inv - d, 0.0)
        if j < tau - 1:
            inv = inv + state.outstanding[j]
    d_arrival = demand.sample(rng, n)

    def objective(q):
        arrived = inv + q
        lost = np.maximum(d_arrival - arrived, 0.0)
        held = np.maximum(arrived - d_arrival, 0.0)
        return float(cost.p * lost.mean() + cost.h * held.mean())

    qhi = myopic_order_cap(demand, tau, cost)
    return _golden_with_left_edge(objective, 0.0, qhi, tol)


def _golden_with_left_edge(f, lo, hi, tol):
    """Golden-section minimum, then slide left across any flat stretch."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    inv_phi2 = (3.0 - math.sqrt(5.0)) / 2.0
    a, b = lo, hi
    dist = b - a
    c = a + inv_phi2 * dist
    d = a + inv_phi * dist
    yc, yd = f(c), f(d)
    while dist > tol:
        if yc < yd:
            b, d, yd = d, c, yc
            dist *= inv_phi
            c = a + inv_phi2 * dist
            yc = f(c)
        else:
            a, c, yc = c, d, yd
            dist *= inv_phi
            d = a + inv_phi * dist
            yd = f(d)
    qm = 0.5 * (a + b)
    ym = f(qm)
    thresh = ym + 1e-12 * (1.0 + abs(ym))
    if f(lo) <= thresh:
        return lo
    left, right = lo, qm
    while right - left > tol:
        mid = 0.5 * (left + right)
        if f(mid) <= thresh:
            right = mid
        else:
            left = mid
    return right


def parse_policy_spec(
    spec: str,
    demand: DemandModel | None = None,
    cost: CostParams | None = None,
    backend=None,
) -> Policy:
    """Parse a policy specification string.

    Examples: ``bs:S=20``, ``cop:r=3``, ``pil:U=12.5``, ``myopic``,
    ``cbs:S=20,r=4``.  PIL and myopic need the demand model (and myopic the
    cost parameters) to be supplied alongside.
    """
    try:
        kind, _, rest = spec.partition(":")
        kv = dict(item.split("=") for item in rest.split(",")) if rest else {}
        args = {k.strip(): float(v) for k, v in kv.items()}
    except (ValueError, TypeError) as exc:
        raise ParameterError(f"malformed policy spec {spec!r}") from exc
    kind = kind.strip().lower()
    if kind == "bs":
        return BaseStock(args["S"])
    if kind == "cop":
        if demand is None:
            raise ConfigError("constant-order policy needs the demand model for its stability check")
        return ConstantOrder(args["r"], demand.mean)
    if kind == "cbs":
        return CappedBaseStock(args["S"], args["r"])
    if kind == "pil":
        if demand is None:
            raise ConfigError("PIL policy needs the demand model")
        return PIL(args["U"], demand, backend)
    if kind == "myopic":
        if demand is None or cost is None:
            raise ConfigError("myopic policy needs the demand model and cost parameters")
        return Myopic(cost, demand, backend)
    raise ParameterError(f"unknown policy kind {kind!r}")
