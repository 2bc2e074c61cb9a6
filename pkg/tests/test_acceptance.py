"""Acceptance suite: every criterion from the build contract, run end to end.

Each check prints a ``[PASS]/[FAIL]`` line (visible with ``pytest -s`` and in
failure output).  Known irreproducible benchmark cells are asserted
faithfully and fail red; the analysis lives in the project notes, outside
the package.
"""

import math
import time

import numpy as np
import pytest

from lostsales.core import CostParams, PipelineState
from lostsales.demand import (
    MomentTarget,
    fit_mixed_erlang,
    make_geometric,
    make_poisson,
    parse_demand_spec,
)
from lostsales.mdp import solve_average_cost
from lostsales.optimize import (
    build_grid,
    grid_cardinality_bound,
    grid_search_pil,
    optimize_scalar,
)
from lostsales.projection import (
    LatticeExact,
    MECustomer,
    MonteCarlo,
    _mc_profile,
    measure_throughput,
    project_expected_level,
)
from lostsales.simulate import SimConfig, pil_traces
from lostsales.testbeds import run_testbed, leadtime_spec, zipkin_spec
from lostsales.theory import (
    BiasFunction,
    bias_fixed_point_residual,
    lemma7_row,
    theorem1_chain,
    theorem3_row,
)

pytestmark = pytest.mark.acceptance

SEED = 20240501


def report(criterion, name, ok, detail=""):
    print(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {name} {detail}")
    return ok


# ---------------------------------------------------------------------------
# Benchmark table (costs per policy; lead times 1..4 per row, one COP per p)
# ---------------------------------------------------------------------------

TABLE1 = {
    "poisson": {
        4.0: {"optimal": [4.04, 4.40, 4.60, 4.73], "pil": [4.04, 4.40, 4.62, 4.74],
              "myopic": [4.11, 4.56, 4.84, 5.06], "bs": [4.16, 4.64, 4.98, 5.20],
              "cbs": [4.06, 4.41, 4.63, 4.80], "cop": 5.27},
        9.0: {"optimal": [5.44, 6.09, 6.53, 6.84], "pil": [5.45, 6.12, 6.58, 6.90],
              "myopic": [5.45, 6.22, 6.80, 7.20], "bs": [5.55, 6.32, 6.86, 7.27],
              "cbs": [5.48, 6.12, 6.62, 6.91], "cop": 10.27},
        19.0: {"optimal": [6.68, 7.66, 8.36, 8.89], "pil": [6.68, 7.68, 8.42, 8.95],
               "myopic": [6.69, 7.77, 8.56, 9.18], "bs": [6.73, 7.84, 8.60, 9.23],
               "cbs": [6.69, 7.72, 8.40, 8.95], "cop": 15.78},
        39.0: {"optimal": [7.84, 9.11, 10.04, 10.79], "pil": [7.84, 9.12, 10.09, 10.91],
               "myopic": [7.88, 9.16, 10.17, 11.04], "bs": [7.86, 9.19, 10.22, 11.06],
               "cbs": [7.84, 9.14, 10.08, 10.88], "cop": 18.21},
    },
    "geometric": {
        4.0: {"optimal": [9.82, 10.24, 10.47, 10.61], "pil": [9.84, 10.28, 10.51, 10.64],
              "myopic": [9.95, 10.57, 10.99, 11.31], "bs": [10.04, 10.70, 11.13, 11.44],
              "cbs": [9.87, 10.32, 10.51, 10.70], "cop": 11.00},
        9.0: {"optimal": [14.51, 15.50, 16.14, 16.58], "pil": [14.55, 15.60, 16.27, 16.73],
              "myopic": [14.64, 15.93, 16.86, 17.61], "bs": [14.73, 15.99, 16.87, 17.54],
              "cbs": [14.58, 15.63, 16.27, 16.73], "cop": 18.19},
        19.0: {"optimal": [19.22, 20.89, 22.06, 22.95], "pil": [19.28, 21.03, 22.73, 23.85],
               "myopic": [19.37, 21.30, 22.79, 24.02], "bs": [19.40, 21.31, 22.73, 23.85],
               "cbs": [19.32, 21.06, 22.27, 23.28], "cop": 28.60},
        39.0: {"optimal": [23.87, 26.21, 27.96, 29.36], "pil": [23.94, 26.37, 28.18, 29.72],
               "myopic": [23.97, 26.55, 28.61, 30.31], "bs": [24.00, 26.55, 28.51, 30.12],
               "cbs": [24.00, 26.30, 28.28, 29.76], "cop": 36.73},
    },
}


# ---------------------------------------------------------------------------
# Criterion 1: exact optimal gains on the small testbed
# ---------------------------------------------------------------------------


class TestC1ZipkinOptimalRows:
    @pytest.fixture(scope="class")
    def solved(self):
        start = time.perf_counter()
        gains = {}
        for kind, dem in [("poisson", make_poisson(5.0)), ("geometric", make_geometric(5.0))]:
            taus = (1, 2) if kind == "poisson" else (1,)
            for tau in taus:
                for p in (4.0, 9.0, 19.0, 39.0):
                    sol = solve_average_cost(dem, tau, CostParams(1.0, p))
                    gains[(kind, tau, p)] = sol.gain
        return gains, time.perf_counter() - start

    @pytest.mark.parametrize("kind,tau,p", [
        ("poisson", t, p) for t in (1, 2) for p in (4.0, 9.0, 19.0, 39.0)
    ] + [("geometric", 1, p) for p in (4.0, 9.0, 19.0, 39.0)])
    def test_gain_matches_benchmark(self, solved, kind, tau, p):
        gains, _ = solved
        target = TABLE1[kind][p]["optimal"][tau - 1]
        ok = abs(gains[(kind, tau, p)] - target) <= 0.02
        assert report("criterion-1", f"optimal {kind} tau={tau} p={p:g}", ok,
                      f"gain={gains[(kind, tau, p)]:.4f} table={target}")

    def test_runtime_under_ten_minutes(self, solved):
        _, elapsed = solved
        assert report("criterion-1", "exact solves runtime", elapsed < 600.0,
                      f"{elapsed:.1f}s")


# ---------------------------------------------------------------------------
# Criterion 2: simulated heuristic rows on the small testbed
# ---------------------------------------------------------------------------


@pytest.fixture(scope="session")
def zipkin_run(tmp_path_factory):
    start = time.perf_counter()
    result = run_testbed(zipkin_spec(seed=SEED), tmp_path_factory.mktemp("zipkin"))
    elapsed = time.perf_counter() - start
    cells = {}
    for r in result["rows"]:
        kind = "poisson" if "poisson" in r["demand"] else "geometric"
        if r["status"].startswith("ok") and r["cost"]:
            cells[(kind, int(r["tau"]), float(r["p"]), r["policy"])] = (
                float(r["cost"]), float(r["ci_halfwidth"] or 0.0))
    return cells, elapsed


HEURISTIC_CELLS = [(k, t, p, pol)
                   for k in ("poisson", "geometric")
                   for t in (1, 2, 3, 4)
                   for p in (4.0, 9.0, 19.0, 39.0)
                   for pol in ("pil", "myopic", "bs", "cbs")]


class TestC2ZipkinHeuristicRows:
    @pytest.mark.parametrize("kind,tau,p,policy", HEURISTIC_CELLS)
    def test_cost_matches_table(self, zipkin_run, kind, tau, p, policy):
        cells, _ = zipkin_run
        cost, ci = cells[(kind, tau, p, policy)]
        target = TABLE1[kind][p][policy][tau - 1]
        tol = max(0.01 * target, ci)
        ok = abs(cost - target) <= tol
        assert report("criterion-2", f"{policy} {kind} tau={tau} p={p:g}", ok,
                      f"cost={cost:.4f} table={target} tol={tol:.4f}")

    @pytest.mark.parametrize("kind,p", [(k, p) for k in ("poisson", "geometric")
                                        for p in (4.0, 9.0, 19.0, 39.0)])
    def test_cop_per_p_value(self, zipkin_run, kind, p):
        cells, _ = zipkin_run
        cost, ci = cells[(kind, 1, p, "cop")]
        target = TABLE1[kind][p]["cop"]
        tol = max(0.01 * target, ci)
        ok = abs(cost - target) <= tol
        assert report("criterion-2", f"cop {kind} p={p:g}", ok,
                      f"cost={cost:.4f} table={target} tol={tol:.4f}")

    def test_pil_never_above_base_stock(self, zipkin_run):
        cells, _ = zipkin_run
        violations = []
        for kind in ("poisson", "geometric"):
            for tau in (1, 2, 3, 4):
                for p in (4.0, 9.0, 19.0, 39.0):
                    c_pil, _ = cells[(kind, tau, p, "pil")]
                    c_bs, _ = cells[(kind, tau, p, "bs")]
                    if c_pil > c_bs:
                        violations.append((kind, tau, p, c_pil, c_bs))
        assert report("criterion-2", "PIL <= base-stock on all 32 instances",
                      not violations, f"violations={violations}")

    def test_runtime_under_thirty_minutes(self, zipkin_run):
        _, elapsed = zipkin_run
        assert report("criterion-2", "heuristic grid runtime", elapsed < 1800.0,
                      f"{elapsed:.0f}s")


# ---------------------------------------------------------------------------
# Criterion 3: exponential-demand theory suite
# ---------------------------------------------------------------------------


class TestC3ExponentialTheory:
    def test_bias_fixed_point_residuals(self):
        rng = np.random.default_rng(SEED)
        worst = 0.0
        for _ in range(20):
            mu = float(rng.uniform(0.5, 200.0))
            r = float(rng.uniform(0.05, 0.95) * mu)
            h = float(rng.uniform(0.1, 5.0))
            p = float(rng.uniform(0.5, 50.0) * h)
            worst = max(worst, bias_fixed_point_residual(BiasFunction(mu, r, h, p)))
        assert report("criterion-3a", "bias fixed-point residual (20 params)",
                      worst < 1e-6, f"max={worst:.2e}")

    @pytest.mark.parametrize("tau", (1, 2, 4, 8))
    @pytest.mark.parametrize("p", (4.0, 9.0, 19.0))
    def test_dominance_chain(self, tau, p):
        stream = 31_000 + 10 * tau + int(p)
        cfg = SimConfig(seed=SEED, replications=24, periods=32768, warmup=3000,
                        extend=False, stream=stream)
        search = SimConfig(seed=SEED, replications=12, periods=16384, warmup=3000,
                           extend=False, stream=stream + 500_000)
        rows = theorem1_chain(100.0, 1.0, p, tau, cfg, search_cfg=search)
        for row in rows:
            assert report("criterion-3", f"{row.name} tau={tau} p={p:g}", row.passed,
                          f"lhs={row.lhs:.3f} rhs={row.rhs:.3f} slack={row.slack:.3f}")


# ---------------------------------------------------------------------------
# Criterion 4: dominance over the back-order twin
# ---------------------------------------------------------------------------


class TestC4BackorderDominance:
    @pytest.mark.parametrize("spec_str", ["poisson:mean=5", "geometric:mean=5"])
    def test_zipkin_instances(self, spec_str):
        demand = parse_demand_spec(spec_str)
        for tau in (1, 2, 3, 4):
            for p in (4.0, 9.0, 19.0, 39.0):
                cost = CostParams(1.0, p)
                cfg = SimConfig(seed=SEED, replications=16, periods=16384, warmup=2000,
                                stream=41_000 + 10 * tau + int(p))
                t3 = theorem3_row(demand, tau, cost, cfg)
                l7 = lemma7_row(demand, tau, cost, cfg)
                assert report("criterion-4", f"theorem3 {demand.kind} tau={tau} p={p:g}",
                              t3.passed, f"C(PIL)={t3.lhs:.3f} C_B*={t3.rhs:.3f}")
                assert report("criterion-4", f"lemma7 {demand.kind} tau={tau} p={p:g}",
                              l7.passed, f"E[L]={l7.lhs:.4f} E[B]={l7.rhs:.4f}")

    def test_random_me_instances(self):
        rng = np.random.default_rng(SEED + 7)
        for i in range(20):
            mean = float(rng.uniform(20.0, 200.0))
            cv = float(rng.uniform(0.3, 2.0))
            tau = int(rng.integers(1, 5))
            p = float(rng.uniform(2.0, 60.0))
            demand = fit_mixed_erlang(MomentTarget(mean, cv))
            cost = CostParams(1.0, p)
            cfg = SimConfig(seed=SEED, replications=16, periods=16384, warmup=2000,
                            stream=42_000 + i)
            t3 = theorem3_row(demand, tau, cost, cfg)
            l7 = lemma7_row(demand, tau, cost, cfg)
            label = f"me mean={mean:.0f} cv={cv:.2f} tau={tau} p={p:.1f}"
            assert report("criterion-4", f"theorem3 {label}", t3.passed,
                          f"C(PIL)={t3.lhs:.3f} C_B*={t3.rhs:.3f}")
            assert report("criterion-4", f"lemma7 {label}", l7.passed,
                          f"E[L]={l7.lhs:.4f} E[B]={l7.rhs:.4f}")


# ---------------------------------------------------------------------------
# Criterion 5: pathwise monotonicity in the projected level
# ---------------------------------------------------------------------------


class TestC5LevelMonotonicity:
    @pytest.mark.parametrize("spec_str", ["poisson:mean=5", "exp:mean=100",
                                          "me:mean=100,cv=1.5"])
    def test_cumulative_orders_and_lost_sales(self, spec_str):
        demand = parse_demand_spec(spec_str)
        cost = CostParams(1.0, 9.0)
        cfg = SimConfig(seed=SEED, replications=100, periods=1000, warmup=0, stream=51_000)
        levels = np.array([0.4, 0.8, 1.2, 1.6, 2.0]) * demand.mean
        cum_orders, cum_lost = [], []
        for u in levels:
            tr = pil_traces(float(u), demand, 3, cost, cfg, 1000)
            cum_orders.append(np.cumsum(tr["orders"], axis=1))
            cum_lost.append(np.cumsum(tr["lost"], axis=1))
        worst_order = min(float((b - a).min()) for a, b in zip(cum_orders, cum_orders[1:]))
        worst_lost = min(float((a - b).min()) for a, b in zip(cum_lost, cum_lost[1:]))
        ok = worst_order >= -1e-9 and worst_lost >= -1e-9
        assert report("criterion-5", f"monotone in level ({demand.kind}, 100 paths x 5 levels)",
                      ok, f"min order increment={worst_order:.2e} min lost decrement={worst_lost:.2e}")


# ---------------------------------------------------------------------------
# Criterion 6: guaranteed level grid
# ---------------------------------------------------------------------------

GRID_INSTANCES = [
    ("exp:mean=100", 1, 4.0), ("exp:mean=100", 1, 9.0), ("exp:mean=100", 2, 19.0),
    ("exp:mean=100", 2, 4.0), ("me:mean=100,cv=0.5", 1, 4.0), ("me:mean=100,cv=0.5", 2, 19.0),
    ("me:mean=100,cv=1.5", 1, 9.0), ("poisson:mean=5", 2, 9.0), ("poisson:mean=5", 1, 19.0),
    ("geometric:mean=5", 1, 9.0),
]


@pytest.fixture(scope="session")
def grid_reference():
    """Golden-section optimum per grid instance, shared across eps values."""
    ref = {}
    for idx, (spec_str, tau, p) in enumerate(GRID_INSTANCES):
        demand = parse_demand_spec(spec_str)
        cost = CostParams(1.0, p)
        cfg = SimConfig(seed=SEED, replications=16, periods=16384, warmup=2000,
                        extend=False, stream=61_000 + idx)
        search = SimConfig(seed=SEED, replications=8, periods=8192, warmup=2000,
                           extend=False, stream=61_000 + idx)
        ref[(spec_str, tau, p)] = optimize_scalar("pil", demand, tau, cost, cfg,
                                                  search_cfg=search)
    return ref


class TestC6GuaranteedGrid:
    @pytest.mark.parametrize("eps", (0.05, 0.1, 0.25))
    @pytest.mark.parametrize("spec_str,tau,p", GRID_INSTANCES)
    def test_grid_performance_guarantee(self, grid_reference, spec_str, tau, p, eps):
        demand = parse_demand_spec(spec_str)
        cost = CostParams(1.0, p)
        idx = GRID_INSTANCES.index((spec_str, tau, p))
        cfg = SimConfig(seed=SEED, replications=16, periods=16384, warmup=2000,
                        extend=False, stream=61_000 + idx)
        search = SimConfig(seed=SEED, replications=8, periods=8192, warmup=2000,
                           extend=False, stream=61_000 + idx)
        grid_res, _ = grid_search_pil(eps, demand, tau, cost, cfg, search_cfg=search)
        golden = grid_reference[(spec_str, tau, p)]
        slack = 3.0 * (grid_res.estimate.ci_halfwidth + golden.estimate.ci_halfwidth)
        bound = (1.0 + eps) * golden.estimate.cost + slack
        ok = grid_res.estimate.cost <= bound
        assert report("criterion-6", f"grid within (1+{eps}) of golden [{spec_str} tau={tau} p={p:g}]",
                      ok, f"grid={grid_res.estimate.cost:.3f} bound={bound:.3f}")

    def test_grid_cardinality_bound(self):
        # The published bound omits the two ceilings and approximates
        # ln(1 + eps) by eps, so it undercounts by 1-3 points on most
        # parameterizations; asserted faithfully, see the project notes.
        violations = []
        for spec_str, tau, p in GRID_INSTANCES:
            demand = parse_demand_spec(spec_str)
            cost = CostParams(1.0, p)
            for eps in (0.05, 0.1, 0.25):
                grid = build_grid(eps, demand, cost)
                bound = grid_cardinality_bound(grid, demand, cost)
                ok = len(grid) <= bound
                report("criterion-6", f"|grid| <= bound [eps={eps} {spec_str} p={p:g}]",
                       ok, f"|grid|={len(grid)} bound={bound:.2f}")
                if not ok:
                    violations.append((spec_str, p, eps, len(grid), round(bound, 2)))
        assert not violations, (
            f"cardinality bound exceeded on {len(violations)}/30 cells "
            f"(stated bound is analytically loose): {violations[:6]} ..."
        )


# ---------------------------------------------------------------------------
# Criterion 7: projection backend agreement and throughput
# ---------------------------------------------------------------------------


class TestC7ProjectionAgreement:
    @pytest.mark.parametrize("spec_str,backend", [
        ("poisson:mean=5", LatticeExact()),
        ("geometric:mean=5", LatticeExact()),
        ("me:mean=100,cv=0.5", MECustomer()),
        ("exp:mean=100", MECustomer()),
    ])
    def test_exact_vs_monte_carlo_100_states(self, spec_str, backend):
        demand = parse_demand_spec(spec_str)
        rng = np.random.default_rng(SEED + 11)
        worst = 0.0
        for i in range(100):
            tau = int(rng.integers(1, 5))
            state = PipelineState(
                float(rng.uniform(0.0, 2.5 * demand.mean)),
                tuple(float(x) for x in rng.uniform(0.0, 1.5 * demand.mean, tau - 1)),
                tau,
            )
            exact = project_expected_level(state, demand, backend)
            el, se = _mc_profile(state, demand, MonteCarlo(paths=100_000, seed=71_000 + i))
            mc_level = max(state.position - tau * demand.mean + float(el.sum()), 0.0)
            band = 4.0 * math.sqrt(float((se**2).sum())) + 1e-9
            worst = max(worst, abs(exact - mc_level) / band)
            assert abs(exact - mc_level) <= band, (spec_str, i, exact, mc_level, band)
        assert report("criterion-7", f"{spec_str} exact-vs-MC on 100 states", True,
                      f"worst |diff|/4SE={worst:.2f}")

    def test_me_throughput_floor(self):
        demand = fit_mixed_erlang(MomentTarget(100.0, 0.5))
        rate = measure_throughput(demand, 4, MECustomer(), budget_s=1.0, seed=SEED)
        assert report("criterion-7", "ME projections per minute >= 1e5", rate >= 1e5,
                      f"rate={rate:.3g}/min")


# ---------------------------------------------------------------------------
# Criterion 8: lead-time trend grid
# ---------------------------------------------------------------------------


@pytest.fixture(scope="session")
def leadtime_run(tmp_path_factory):
    spec = leadtime_spec(seed=SEED, taus=(1, 5, 10, 20))
    result = run_testbed(spec, tmp_path_factory.mktemp("leadtime"))
    cells = {}
    for r in result["rows"]:
        if r["status"].startswith("ok") and r["cost"]:
            cells[(r["cv"], float(r["p"]), int(r["tau"]), r["policy"])] = (
                float(r["cost"]), float(r["ci_halfwidth"] or 0.0))
    return cells


class TestC8LeadtimeTrend:
    @pytest.mark.parametrize("cv", ("0.5", "1.5"))
    @pytest.mark.parametrize("p", (4.0, 9.0, 19.0))
    def test_pil_dominates_both(self, leadtime_run, cv, p):
        for tau in (1, 5, 10, 20):
            c_pil, ci_pil = leadtime_run[(cv, p, tau, "pil")]
            c_bs, ci_bs = leadtime_run[(cv, p, tau, "bs")]
            c_cop, ci_cop = leadtime_run[(cv, p, tau, "cop")]
            bound = min(c_bs, c_cop) + 3.0 * (ci_pil + max(ci_bs, ci_cop))
            ok = c_pil <= bound
            assert report("criterion-8", f"PIL best at cv={cv} p={p:g} tau={tau}", ok,
                          f"pil={c_pil:.2f} bs={c_bs:.2f} cop={c_cop:.2f}")

    @pytest.mark.parametrize("cv", ("0.5", "1.5"))
    def test_cop_eventually_beats_base_stock_at_low_penalty(self, leadtime_run, cv):
        # the crossover visible in the long-lead-time curves at p = 4
        c_bs, _ = leadtime_run[(cv, 4.0, 20, "bs")]
        c_cop, _ = leadtime_run[(cv, 4.0, 20, "cop")]
        assert report("criterion-8", f"COP < base-stock at tau=20, p=4, cv={cv}",
                      c_cop < c_bs, f"cop={c_cop:.2f} bs={c_bs:.2f}")
