"""End-to-end benchmark testbeds and their CSV artifacts.

Three named testbeds mirror the benchmark study: ``zipkin`` (Poisson and
geometric demand with mean 5, with exact-MDP optimal rows at short lead
times), ``leadtime`` (Mixed-Erlang demand, lead times up to 20, emitting
per-panel curve files), and ``large`` (the 216-instance Mixed-Erlang
grid).  Every run writes a results CSV (one row per instance and policy),
a gap summary grouped per factor, a resolved-configuration JSON, and a
timing sidecar.  With a fixed master seed the results and summary files
are byte-identical across reruns; wall-clock timings live only in the
sidecar.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .core import CostParams
from .demand import parse_demand_spec
from .errors import ConfigError
from .mdp import MDPConfig, solve_average_cost
from .optimize import optimize_capped, optimize_scalar
from .policies import Myopic
from .projection import MECustomer, measure_throughput, parse_backend_spec
from .simulate import SimConfig, estimate_cost

RESULT_COLUMNS = [
    "testbed", "demand", "mean", "cv", "tau", "h", "p", "policy", "params",
    "cost", "ci_halfwidth", "lost_rate", "periods", "replications", "seed", "status",
]

SUMMARY_COLUMNS = ["factor", "level", "policy", "min_gap_pct", "max_gap_pct", "avg_gap_pct", "count"]

ZIPKIN_POLICIES = ("optimal", "pil", "myopic", "bs", "cbs", "cop")
CURVE_POLICIES = ("pil", "bs", "cop")
LARGE_POLICIES = ("pil", "bs", "cop", "cbs")


@dataclass(frozen=True)
class TestbedSpec:
    name: str
    demands: tuple
    taus: tuple
    ps: tuple
    h: float = 1.0
    policies: tuple = CURVE_POLICIES
    seed: int = 20240501
    ci_target: float = 0.01
    exact_tau_max: int = 2
    projection: str = "auto"
    final: SimConfig = field(default=None)  # type: ignore[assignment]
    search: SimConfig = field(default=None)  # type: ignore[assignment]

    def instances(self):
        for d in self.demands:
            for tau in self.taus:
                for p in self.ps:
                    yield d, int(tau), float(p)


def zipkin_spec(seed: int = 20240501, ci_target: float = 0.01, extended: bool = False,
                **overrides) -> TestbedSpec:
    base = TestbedSpec(
        name="zipkin",
        demands=("poisson:mean=5", "geometric:mean=5"),
        taus=(1, 2, 3, 4),
        ps=(4.0, 9.0, 19.0, 39.0),
        policies=ZIPKIN_POLICIES,
        seed=seed,
        ci_target=ci_target,
        exact_tau_max=4 if extended else 2,
        final=SimConfig(seed=seed, replications=30, periods=16384, warmup=2000,
                        ci_target=min(ci_target, 0.0015), max_periods=1 << 20),
        search=SimConfig(seed=seed, replications=24, periods=24576, warmup=2000, extend=False),
    )
    return replace(base, **overrides)


def leadtime_spec(seed: int = 20240501, ci_target: float = 0.01, **overrides) -> TestbedSpec:
    base = TestbedSpec(
        name="leadtime",
        demands=("me:mean=100,cv=0.5", "me:mean=100,cv=1.5"),
        taus=tuple(range(1, 21)),
        ps=(4.0, 9.0, 19.0),
        policies=CURVE_POLICIES,
        seed=seed,
        ci_target=ci_target,
        final=SimConfig(seed=seed, replications=16, periods=8192, warmup=2000,
                        ci_target=ci_target, max_periods=1 << 16),
        search=SimConfig(seed=seed, replications=8, periods=4096, warmup=2000, extend=False),
    )
    return replace(base, **overrides)


# Table 2 lists cv in 0.4..1.4; the accompanying text names a wider set.
LARGE_CV_TABLE = (0.4, 0.6, 0.8, 1.0, 1.2, 1.4)
LARGE_CV_TEXT = (0.15, 0.25, 0.5, 1.0, 1.5, 2.0)


def large_spec(seed: int = 20240501, ci_target: float = 0.01, cv_set: str = "table",
               **overrides) -> TestbedSpec:
    cvs = LARGE_CV_TABLE if cv_set == "table" else LARGE_CV_TEXT
    base = TestbedSpec(
        name="large",
        demands=tuple(f"me:mean=100,cv={cv:g}" for cv in cvs),
        taus=(1, 2, 3, 4, 5, 6),
        ps=(1.0, 4.0, 9.0, 19.0, 49.0, 99.0),
        policies=LARGE_POLICIES,
        seed=seed,
        ci_target=ci_target,
        final=SimConfig(seed=seed, replications=16, periods=8192, warmup=2000,
                        ci_target=ci_target, max_periods=1 << 16),
        search=SimConfig(seed=seed, replications=8, periods=4096, warmup=2000, extend=False),
    )
    return replace(base, **overrides)


def _demand_fields(spec_str: str):
    model = parse_demand_spec(spec_str)
    cv = f"{model.cv:.6g}" if model.var > 0 else "0"
    return model, f"{model.mean:.6g}", cv


def _params_string(params: dict) -> str:
    return ";".join(f"{k}={v:.6g}" for k, v in sorted(params.items()))


def _fmt(x: float) -> str:
    return f"{x:.10g}"


# Winners are re-evaluated on a stream the search never saw, so the reported
# cost is free of selection bias; all policies of an instance share it.
FINAL_STREAM_OFFSET = 1_000_000


def run_instance(spec: TestbedSpec, demand_str: str, tau: int, p: float, stream: int,
                 cop_cache: dict) -> tuple[list[dict], list[tuple]]:
    """All policy rows for one instance; returns (rows, timings)."""
    demand, mean_s, cv_s = _demand_fields(demand_str)
    cost = CostParams(spec.h, p)
    backend = None if spec.projection == "auto" else parse_backend_spec(spec.projection)
    final = replace(spec.final, stream=stream + FINAL_STREAM_OFFSET)
    search = replace(spec.search, stream=stream)
    rows, timings = [], []

    def base_row(policy_name):
        return {
            "testbed": spec.name, "demand": demand_str, "mean": mean_s, "cv": cv_s,
            "tau": tau, "h": f"{spec.h:g}", "p": f"{p:g}", "policy": policy_name,
            "params": "", "cost": "", "ci_halfwidth": "", "lost_rate": "",
            "periods": "", "replications": "", "seed": spec.seed, "status": "ok",
        }

    for policy_name in spec.policies:
        row = base_row(policy_name)
        start = time.perf_counter()
        try:
            if policy_name == "optimal":
                if not demand.integer_valued or tau > spec.exact_tau_max:
                    continue
                sol = solve_average_cost(demand, tau, cost, MDPConfig())
                row.update(cost=_fmt(sol.gain), ci_halfwidth="0", lost_rate="",
                           params=f"cap={sol.cap}", periods=sol.iterations, replications=1)
            elif policy_name == "myopic":
                # parameter-free, and its per-period decision is the slowest;
                # a looser CI is still far inside the comparison tolerance
                myopic_cfg = replace(final, ci_target=max(final.ci_target, 0.005))
                est = estimate_cost(Myopic(cost, demand, backend), demand, tau, cost, myopic_cfg)
                _fill(row, est, {})
            elif policy_name == "cop":
                # the constant-order cost does not depend on the lead time;
                # optimize once per (demand, p) and reuse across tau
                key = (demand_str, p)
                if key not in cop_cache:
                    cop_cache[key] = optimize_scalar("cop", demand, 1, cost, final,
                                                     search_cfg=search)
                res = cop_cache[key]
                _fill(row, res.estimate, res.policy.params())
            elif policy_name == "cbs":
                # the simplex search is evaluation-hungry; thin its budget
                cbs_search = replace(search, replications=max(search.replications // 2, 4),
                                     periods=max(search.periods // 2, 2048))
                res = optimize_capped(demand, tau, cost, final, search_cfg=cbs_search)
                _fill(row, res.estimate, res.policy.params())
            elif policy_name in ("pil", "bs"):
                res = optimize_scalar(policy_name, demand, tau, cost, final,
                                      search_cfg=search, backend=backend)
                _fill(row, res.estimate, res.policy.params())
            else:
                raise ConfigError(f"unknown policy {policy_name!r} in testbed spec")
        except Exception as exc:  # keep the run going; the row records the failure
            row["status"] = f"error: {type(exc).__name__}: {exc}"
        timings.append((demand_str, tau, p, policy_name, time.perf_counter() - start))
        rows.append(row)
    return rows, timings


def _fill(row: dict, est, params: dict) -> None:
    row.update(
        params=_params_string(params), cost=_fmt(est.cost), ci_halfwidth=_fmt(est.ci_halfwidth),
        lost_rate=_fmt(est.lost_rate), periods=est.periods, replications=est.replications,
    )
    if est.target_missed:
        row["status"] = "ok (ci target missed)"


def run_testbed(spec: TestbedSpec, out_dir) -> dict:
    """Run every (instance, policy) cell and write the CSV artifacts."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    all_rows, all_timings = [], []
    cop_cache: dict = {}
    for stream, (demand_str, tau, p) in enumerate(spec.instances()):
        rows, timings = run_instance(spec, demand_str, tau, p, stream, cop_cache)
        all_rows.extend(rows)
        all_timings.extend(timings)
    results_path = out / f"{spec.name}_results.csv"
    _write_csv(results_path, RESULT_COLUMNS, [[r[c] for c in RESULT_COLUMNS] for r in all_rows])
    summary_path = out / f"{spec.name}_summary.csv"
    _write_csv(summary_path, SUMMARY_COLUMNS, summarize_gaps(all_rows))
    _write_csv(out / f"{spec.name}_timing.csv",
               ["demand", "tau", "p", "policy", "wall_time_s"],
               [[d, t, f"{p:g}", pol, f"{dt:.3f}"] for d, t, p, pol, dt in all_timings])
    config_path = out / f"{spec.name}_config.json"
    config_path.write_text(json.dumps(_resolved_config(spec), indent=2, sort_keys=True) + "\n")
    extra = {}
    if spec.name == "leadtime":
        extra["curves"] = write_leadtime_curves(all_rows, out)
    return {"results": results_path, "summary": summary_path, "config": config_path,
            "rows": all_rows, **extra}


def _resolved_config(spec: TestbedSpec) -> dict:
    cfg = asdict(spec)
    cfg["version"] = __version__
    return cfg


def _write_csv(path: Path, header, rows) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def summarize_gaps(rows: list[dict]) -> list[list]:
    """Min/max/avg percentage gap versus the PIL policy, per factor level.

    Gap layout follows the benchmark's summary table: one block per demand
    cv, one per lead time, one per penalty, then a Total block.
    """
    pil = {}
    for r in rows:
        if r["policy"] == "pil" and r["status"].startswith("ok") and r["cost"]:
            pil[(r["demand"], r["tau"], r["p"])] = float(r["cost"])
    gaps = []  # (policy, cv, tau, p, gap_pct)
    for r in rows:
        if r["policy"] in ("pil",) or not r["status"].startswith("ok") or not r["cost"]:
            continue
        key = (r["demand"], r["tau"], r["p"])
        if key not in pil:
            continue
        gap = 100.0 * (float(r["cost"]) - pil[key]) / pil[key]
        gaps.append((r["policy"], r["cv"], r["tau"], r["p"], gap))
    out = []
    policies = sorted({g[0] for g in gaps})

    def block(factor, level, sel):
        for pol in policies:
            vals = [g[4] for g in gaps if g[0] == pol and sel(g)]
            if vals:
                out.append([factor, level, pol, f"{min(vals):.2f}", f"{max(vals):.2f}",
                            f"{float(np.mean(vals)):.2f}", len(vals)])

    for cv in sorted({g[1] for g in gaps}, key=float):
        block("cv", cv, lambda g, cv=cv: g[1] == cv)
    for tau in sorted({g[2] for g in gaps}):
        block("tau", tau, lambda g, tau=tau: g[2] == tau)
    for p in sorted({g[3] for g in gaps}, key=float):
        block("p", p, lambda g, p=p: g[3] == p)
    block("total", "all", lambda g: True)
    return out


def write_leadtime_curves(rows: list[dict], out: Path) -> list[Path]:
    """One (tau, CBS, CPIL, COP) file per (cv, p) panel, Figure-1 style.

    CBS here is the base-stock cost column, matching the curve files the
    figure is drawn from.
    """
    series = {}
    for r in rows:
        if not r["status"].startswith("ok") or not r["cost"]:
            continue
        key = (r["cv"], r["p"])
        series.setdefault(key, {}).setdefault(int(r["tau"]), {})[r["policy"]] = float(r["cost"])
    paths = []
    for (cv, p), by_tau in sorted(series.items()):
        path = out / f"leadtime_cv{cv}_p{p}.csv"
        rows_out = []
        for tau in sorted(by_tau):
            cell = by_tau[tau]
            if {"bs", "pil", "cop"} <= set(cell):
                rows_out.append([tau, _fmt(cell["bs"]), _fmt(cell["pil"]), _fmt(cell["cop"])])
        _write_csv(path, ["tau", "CBS", "CPIL", "COP"], rows_out)
        paths.append(path)
    return paths


def throughput_probe(taus=(1, 2, 3, 4, 5, 6), cvs=(0.4, 0.6, 0.8, 1.0, 1.2, 1.4),
                     mean: float = 100.0, budget_s: float = 0.5, seed: int = 0):
    """Projections per minute of the Mixed-Erlang backend across a grid."""
    from .demand import MomentTarget, fit_mixed_erlang

    rows = []
    for cv in cvs:
        model = fit_mixed_erlang(MomentTarget(mean, cv))
        for tau in taus:
            rate = measure_throughput(model, tau, MECustomer(), budget_s=budget_s, seed=seed)
            rows.append({"cv": cv, "tau": tau, "k_max": model.k_max, "per_minute": rate})
    rates = [r["per_minute"] for r in rows]
    summary = {"min": min(rates), "max": max(rates), "avg": float(np.mean(rates))}
    return rows, summary
