"""Tests for relative value iteration on the lost-sales lattice."""

import pytest

from lostsales.core import CostParams
from lostsales.demand import Exponential, make_geometric, make_poisson
from lostsales.errors import ConfigError
from lostsales.mdp import (
    MDPConfig,
    evaluate_policy_exact,
    policy_table,
    solve_average_cost,
)
from lostsales.policies import BaseStock
from lostsales.simulate import SimConfig, estimate_cost


P5 = make_poisson(5.0)
G5 = make_geometric(5.0)


class TestSolve:
    def test_poisson_tau1_benchmark(self):
        sol = solve_average_cost(P5, 1, CostParams(1.0, 4.0))
        assert sol.gain == pytest.approx(4.04, abs=0.02)
        assert sol.audit_ok

    def test_geometric_tau1_benchmark(self):
        sol = solve_average_cost(G5, 1, CostParams(1.0, 39.0))
        assert sol.gain == pytest.approx(23.87, abs=0.02)

    def test_poisson_tau2_benchmark(self):
        sol = solve_average_cost(P5, 2, CostParams(1.0, 9.0))
        assert sol.gain == pytest.approx(6.09, abs=0.02)

    def test_cap_doubling_is_stable(self):
        a = solve_average_cost(P5, 1, CostParams(1.0, 9.0), MDPConfig(cap=60))
        b = solve_average_cost(P5, 1, CostParams(1.0, 9.0), MDPConfig(cap=120))
        assert abs(a.gain - b.gain) < 0.005

    def test_span_history_monotone_after_burn_in(self):
        sol = solve_average_cost(P5, 2, CostParams(1.0, 19.0))
        spans = sol.span_history[-min(50, len(sol.span_history) - 1):]
        assert all(b <= a + 1e-12 for a, b in zip(spans, spans[1:]))

    def test_rejects_continuous_demand(self):
        with pytest.raises(ConfigError):
            solve_average_cost(Exponential(1.0), 1, CostParams(1.0, 4.0))

    def test_boundary_audit_enlarges_caps(self):
        sol = solve_average_cost(P5, 1, CostParams(1.0, 9.0), MDPConfig(cap=8))
        assert sol.cap > 8
        assert sol.audit_ok
        assert sol.gain == pytest.approx(5.44, abs=0.02)


class TestPolicyEvaluation:
    def test_cop_zero_gain(self):
        tab = policy_table(lambda i, q: 0, 60, 1)
        gain = evaluate_policy_exact(tab, P5, 1, CostParams(1.0, 4.0), MDPConfig(cap=60))
        assert gain == pytest.approx(20.0, abs=1e-6)

    def test_cop_gain_independent_of_lead_time(self):
        cost = CostParams(1.0, 4.0)
        g1 = evaluate_policy_exact(policy_table(lambda i, q: 4, 60, 1), P5, 1, cost,
                                   MDPConfig(cap=60))
        g2 = evaluate_policy_exact(policy_table(lambda i, q: 4, 60, 2), P5, 2, cost,
                                   MDPConfig(cap=60))
        assert g1 == pytest.approx(g2, abs=1e-6)

    def test_base_stock_matches_simulation(self):
        cost = CostParams(1.0, 4.0)
        tab = policy_table(lambda i, q: max(12 - i - sum(q), 0), 60, 2)
        gain = evaluate_policy_exact(tab, P5, 2, cost, MDPConfig(cap=60))
        est = estimate_cost(BaseStock(12.0), P5, 2, cost,
                            SimConfig(seed=4, replications=20, periods=30000, warmup=2000))
        assert abs(gain - est.cost) <= 3.0 * est.ci_halfwidth

    def test_optimal_dominates_heuristics(self):
        cost = CostParams(1.0, 9.0)
        sol = solve_average_cost(P5, 1, cost, MDPConfig(cap=60))
        for level in (10, 12, 14):
            tab = policy_table(lambda i, q, s=level: max(s - i - sum(q), 0), 60, 1)
            heur = evaluate_policy_exact(tab, P5, 1, cost, MDPConfig(cap=60))
            assert sol.gain <= heur + 1e-6

    def test_greedy_policy_evaluates_to_gain(self):
        cost = CostParams(1.0, 4.0)
        sol = solve_average_cost(P5, 1, cost, MDPConfig(cap=60))
        gain = evaluate_policy_exact(sol.policy, P5, 1, cost, MDPConfig(cap=60))
        assert gain == pytest.approx(sol.gain, abs=1e-6)
