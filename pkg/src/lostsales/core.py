"""Lost-sales state, one-period transition, and cost accounting.

This is the simulation kernel shared by every policy and by the exact
solver.  A period unfolds as: demand is served from on-hand stock, unmet
demand is lost, the next outstanding order arrives, and the order placed
this period joins the back of the pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class PipelineState:
    """On-hand inventory plus the outstanding orders not yet arrived.

    ``outstanding`` holds the orders arriving 1, 2, ..., lead_time-1 periods
    from now, so its length is exactly ``lead_time - 1``.
    """

    on_hand: float
    outstanding: tuple
    lead_time: int

    def __post_init__(self):
        if self.lead_time < 1:
            raise ParameterError(f"lead time must be >= 1, got {self.lead_time}")
        if len(self.outstanding) != self.lead_time - 1:
            raise ParameterError(
                f"outstanding must have length {self.lead_time - 1}, got {len(self.outstanding)}"
            )
        if self.on_hand < 0 or any(q < 0 for q in self.outstanding):
            raise ParameterError("inventory quantities must be non-negative")

    @property
    def position(self) -> float:
        """Inventory position: on-hand plus everything in the pipeline."""
        return self.on_hand + sum(self.outstanding)

    @classmethod
    def empty(cls, lead_time: int) -> "PipelineState":
        return cls(0.0, (0.0,) * (lead_time - 1), lead_time)


@dataclass(frozen=True)
class CostParams:
    """Holding cost per item per period and penalty per lost item."""

    h: float
    p: float

    def __post_init__(self):
        if self.h <= 0 or self.p <= 0:
            raise ParameterError(f"cost parameters must be positive, got h={self.h}, p={self.p}")

    @property
    def critical_ratio(self) -> float:
        return self.p / (self.p + self.h)


@dataclass(frozen=True)
class PeriodOutcome:
    end_inventory: float
    lost: float
    cost: float
    next_state: PipelineState


def step(state: PipelineState, order: float, demand_draw: float, cost: CostParams) -> PeriodOutcome:
    """Advance the system one period under a given order and demand draw."""
    if order < 0:
        raise ParameterError(f"order must be non-negative, got {order}")
    if demand_draw < 0:
        raise ParameterError(f"demand must be non-negative, got {demand_draw}")
    lost = max(demand_draw - state.on_hand, 0.0)
    end_inv = max(state.on_hand - demand_draw, 0.0)
    arriving = state.outstanding[0] if state.lead_time > 1 else order
    rest = state.outstanding[1:] + (order,) if state.lead_time > 1 else ()
    nxt = PipelineState(end_inv + arriving, rest, state.lead_time)
    return PeriodOutcome(end_inv, lost, cost.h * end_inv + cost.p * lost, nxt)


def cumulative_lost(initial: PipelineState, demand_path, orders) -> float:
    """Total lost sales over a demand path, via the running-maximum identity.

    ``orders[t]`` is the order placed in period t (arriving ``lead_time``
    periods later).  The result equals the sum of per-period lost sales from
    repeated :func:`step`; the two computations are cross-checked in tests.
    """
    demand_path = np.asarray(demand_path, dtype=float)
    orders = np.asarray(orders, dtype=float)
    if demand_path.shape != orders.shape:
        raise ParameterError("demand_path and orders must have equal length")
    t_end = demand_path.size
    tau = initial.lead_time
    # q[k] = order arriving in period k, for k = 1..t_end-1
    arrivals = np.zeros(t_end)
    for k in range(1, t_end):
        if k <= tau - 1:
            arrivals[k] = initial.outstanding[k - 1]
        elif k - tau >= 0:
            arrivals[k] = orders[k - tau]
    cum_demand = np.cumsum(demand_path)
    cum_arrivals = np.cumsum(arrivals)
    shortfall = cum_demand - initial.on_hand - cum_arrivals
    return float(np.maximum(shortfall, 0.0).max())


def replay_lost(initial: PipelineState, demand_path, orders, cost: CostParams | None = None) -> float:
    """Sum of per-period lost sales from repeated :func:`step` (cross-check path)."""
    cost = cost or CostParams(1.0, 1.0)
    state = initial
    total = 0.0
    for d, q in zip(demand_path, orders):
        out = step(state, float(q), float(d), cost)
        total += out.lost
        state = out.next_state
    return total
