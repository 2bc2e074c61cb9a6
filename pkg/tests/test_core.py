"""Tests for the one-period transition and the cumulative-lost-sales identity."""

import numpy as np
import pytest

from lostsales.core import CostParams, PipelineState, cumulative_lost, replay_lost, step
from lostsales.errors import ParameterError


class TestStep:
    def test_holding_only(self):
        s = PipelineState(10.0, (0.0,), 2)
        out = step(s, 0.0, 4.0, CostParams(1.0, 9.0))
        assert out.end_inventory == 6.0
        assert out.lost == 0.0
        assert out.cost == 6.0

    def test_stockout(self):
        s = PipelineState(3.0, (0.0,), 2)
        out = step(s, 0.0, 7.0, CostParams(1.0, 9.0))
        assert out.end_inventory == 0.0
        assert out.lost == 4.0
        assert out.cost == 36.0

    def test_boundary(self):
        s = PipelineState(5.0, (), 1)
        out = step(s, 0.0, 5.0, CostParams(1.0, 9.0))
        assert out.end_inventory == 0.0 and out.lost == 0.0 and out.cost == 0.0

    def test_pipeline_shift(self):
        s = PipelineState(10.0, (3.0, 7.0), 3)
        out = step(s, 2.5, 4.0, CostParams(1.0, 9.0))
        assert out.next_state.on_hand == 6.0 + 3.0
        assert out.next_state.outstanding == (7.0, 2.5)

    def test_tau_one_order_arrives_next_period(self):
        s = PipelineState(1.0, (), 1)
        out = step(s, 4.5, 2.0, CostParams(1.0, 9.0))
        assert out.next_state.on_hand == 4.5

    def test_mass_balance(self):
        rng = np.random.default_rng(0)
        cost = CostParams(1.0, 9.0)
        for _ in range(200):
            i0 = float(rng.uniform(0, 20))
            d = float(rng.uniform(0, 20))
            out = step(PipelineState(i0, (), 1), 0.0, d, cost)
            assert i0 - d + out.lost == pytest.approx(out.end_inventory, abs=1e-12)

    def test_contract_violations(self):
        s = PipelineState(1.0, (), 1)
        with pytest.raises(ParameterError):
            step(s, -1.0, 1.0, CostParams(1.0, 1.0))
        with pytest.raises(ParameterError):
            step(s, 1.0, -1.0, CostParams(1.0, 1.0))

    def test_deterministic_bitwise(self):
        s = PipelineState(1.2345678901234, (0.5,), 2)
        a = step(s, 0.777, 1.111, CostParams(1.0, 9.0))
        b = step(s, 0.777, 1.111, CostParams(1.0, 9.0))
        assert a == b


class TestPipelineState:
    def test_length_invariant(self):
        with pytest.raises(ParameterError):
            PipelineState(1.0, (2.0,), 1)
        with pytest.raises(ParameterError):
            PipelineState(1.0, (), 2)

    def test_nonnegativity(self):
        with pytest.raises(ParameterError):
            PipelineState(-1.0, (), 1)
        with pytest.raises(ParameterError):
            PipelineState(1.0, (-0.5,), 2)

    def test_position(self):
        assert PipelineState(5.0, (6.0, 4.0), 3).position == 15.0


class TestCumulativeLost:
    def test_never_stocks_out(self):
        s = PipelineState(10.0, (0.0, 0.0), 3)
        assert cumulative_lost(s, [3.0, 3.0, 3.0], [0.0, 0.0, 0.0]) == 0.0

    def test_single_stockout(self):
        s = PipelineState(2.0, (0.0, 0.0), 3)
        assert cumulative_lost(s, [5.0, 0.0, 0.0], [0.0, 0.0, 0.0]) == 3.0

    def test_length_mismatch(self):
        s = PipelineState(2.0, (), 1)
        with pytest.raises(ParameterError):
            cumulative_lost(s, [1.0, 2.0], [0.0])

    def test_matches_step_replay_on_random_instances(self):
        # the running-maximum formula must agree with period-by-period stepping
        rng = np.random.default_rng(42)
        for _ in range(10_000):
            tau = int(rng.integers(1, 5))
            horizon = int(rng.integers(1, 12))
            state = PipelineState(
                float(rng.uniform(0, 10)),
                tuple(float(x) for x in rng.uniform(0, 5, tau - 1)),
                tau,
            )
            demands = rng.uniform(0, 6, horizon)
            orders = rng.uniform(0, 5, horizon)
            lhs = cumulative_lost(state, demands, orders)
            rhs = replay_lost(state, demands, orders)
            assert lhs == pytest.approx(rhs, abs=1e-9)
