"""Command-line harness: evaluate, optimize, mdp, backorder, verify,
throughput, and the three named testbeds.

Evaluation-style subcommands print CSV to standard output; testbeds write
their artifacts into the output directory.  The ``verify`` subcommand
exits nonzero iff any theory check fails.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .backorder import solve_backorder
from .core import CostParams
from .demand import parse_demand_spec
from .errors import ParameterError
from .mdp import MDPConfig, solve_average_cost
from .optimize import grid_search_pil, optimize_capped, optimize_scalar
from .policies import parse_policy_spec
from .projection import parse_backend_spec
from .simulate import SimConfig, estimate_cost
from .testbeds import large_spec, leadtime_spec, run_testbed, throughput_probe, zipkin_spec
from .theory import (
    BiasFunction,
    bias_fixed_point_residual,
    lemma7_row,
    theorem1_chain,
    theorem3_row,
    verify_pil_improvement,
)


def _add_instance_args(sp, demand_required=True):
    sp.add_argument("--demand", required=demand_required,
                    help="demand spec, e.g. poisson:mean=5 | me:mean=100,cv=0.5")
    sp.add_argument("--tau", type=int, required=True, help="lead time (periods)")
    sp.add_argument("--h", type=float, default=1.0, help="holding cost per item per period")
    sp.add_argument("--p", type=float, required=True, help="lost-sales penalty per item")


def _add_sim_args(sp):
    sp.add_argument("--seed", type=int, default=12345)
    sp.add_argument("--reps", type=int, default=30)
    sp.add_argument("--periods", type=int, default=16384)
    sp.add_argument("--warmup", type=int, default=2000)
    sp.add_argument("--ci-target", type=float, default=0.01)
    sp.add_argument("--stream", type=int, default=0)
    sp.add_argument("--projection", default=None,
                    help="projection backend: lattice | me | mc:paths=N")


def _sim_config(args) -> SimConfig:
    return SimConfig(seed=args.seed, replications=args.reps, periods=args.periods,
                     warmup=args.warmup, ci_target=args.ci_target, stream=args.stream)


def _print_csv(header, rows, file=None):
    writer = csv.writer(file or sys.stdout, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)


def cmd_evaluate(args) -> int:
    demand = parse_demand_spec(args.demand)
    cost = CostParams(args.h, args.p)
    backend = parse_backend_spec(args.projection) if args.projection else None
    policy = parse_policy_spec(args.policy, demand=demand, cost=cost, backend=backend)
    est = estimate_cost(policy, demand, args.tau, cost, _sim_config(args))
    _print_csv(
        ["demand", "tau", "h", "p", "policy", "params", "cost", "ci_halfwidth",
         "lost_rate", "periods", "seed"],
        [[args.demand, args.tau, f"{args.h:g}", f"{args.p:g}", policy.family,
          ";".join(f"{k}={v:.6g}" for k, v in sorted(policy.params().items())),
          f"{est.cost:.10g}", f"{est.ci_halfwidth:.10g}", f"{est.lost_rate:.10g}",
          est.periods, args.seed]],
    )
    return 0


def cmd_optimize(args) -> int:
    demand = parse_demand_spec(args.demand)
    cost = CostParams(args.h, args.p)
    backend = parse_backend_spec(args.projection) if args.projection else None
    cfg = _sim_config(args)
    search = replace(cfg, replications=max(cfg.replications // 2, 4),
                     periods=max(cfg.periods // 2, 1024), extend=False)
    if args.family == "cbs":
        res = optimize_capped(demand, args.tau, cost, cfg, search_cfg=search)
        params = res.policy.params()
    elif args.family == "pil" and args.grid_eps is not None:
        res, grid = grid_search_pil(args.grid_eps, demand, args.tau, cost, cfg,
                                    search_cfg=search, backend=backend)
        params = {**res.policy.params(), "grid_size": float(len(grid))}
    else:
        res = optimize_scalar(args.family, demand, args.tau, cost, cfg,
                              search_cfg=search, backend=backend)
        params = res.policy.params()
    est = res.estimate
    _print_csv(
        ["demand", "tau", "h", "p", "family", "params", "cost", "ci_halfwidth",
         "evaluations", "edge_flag", "seed"],
        [[args.demand, args.tau, f"{args.h:g}", f"{args.p:g}", args.family,
          ";".join(f"{k}={v:.6g}" for k, v in sorted(params.items())),
          f"{est.cost:.10g}", f"{est.ci_halfwidth:.10g}", res.evaluations,
          int(res.edge_flag), args.seed]],
    )
    return 0


def cmd_mdp(args) -> int:
    demand = parse_demand_spec(args.demand)
    cost = CostParams(args.h, args.p)
    if args.tau > 2 and not args.extended:
        print("exact solves with tau > 2 can take very long; pass --extended to confirm",
              file=sys.stderr)
        return 2
    cfg = MDPConfig(cap=args.cap, tol=args.tol)
    sol = solve_average_cost(demand, args.tau, cost, cfg)
    print(f"gain,{sol.gain:.10g}")
    print(f"cap,{sol.cap}")
    print(f"iterations,{sol.iterations}")
    print(f"boundary_mass,{sol.boundary_mass:.3e}")
    if args.policy_out:
        coords = [f"q{i}" for i in range(1, args.tau)]
        with open(args.policy_out, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["on_hand", *coords, "order"])
            for idx in np.ndindex(sol.policy.shape):
                writer.writerow([*idx, int(sol.policy[idx])])
    return 0


def cmd_backorder(args) -> int:
    demand = parse_demand_spec(args.demand)
    sol = solve_backorder(demand, args.tau, CostParams(args.h, args.p))
    print(f"s_star,{sol.s_star:.10g}")
    print(f"c_star,{sol.c_star:.10g}")
    return 0


def cmd_throughput(args) -> int:
    taus = tuple(int(x) for x in args.taus.split(","))
    cvs = tuple(float(x) for x in args.cvs.split(","))
    rows, summary = throughput_probe(taus=taus, cvs=cvs, budget_s=args.budget_s)
    _print_csv(["cv", "tau", "k_max", "projections_per_minute"],
               [[f"{r['cv']:g}", r["tau"], r["k_max"], f"{r['per_minute']:.6g}"] for r in rows])
    print(f"# min={summary['min']:.6g} max={summary['max']:.6g} avg={summary['avg']:.6g}")
    return 0


def cmd_testbed(args) -> int:
    overrides = {}
    if args.taus:
        overrides["taus"] = tuple(int(x) for x in args.taus.split(","))
    if args.ps:
        overrides["ps"] = tuple(float(x) for x in args.ps.split(","))
    if args.policies:
        overrides["policies"] = tuple(args.policies.split(","))
    if args.demands:
        overrides["demands"] = tuple(args.demands.split(";"))
    if args.projection:
        overrides["projection"] = args.projection
    if args.name == "zipkin":
        spec = zipkin_spec(seed=args.seed, ci_target=args.ci_target,
                           extended=args.extended, **overrides)
    elif args.name == "leadtime":
        spec = leadtime_spec(seed=args.seed, ci_target=args.ci_target, **overrides)
    elif args.name == "large":
        spec = large_spec(seed=args.seed, ci_target=args.ci_target,
                          cv_set=args.cv_set, **overrides)
    else:
        raise ParameterError(f"unknown testbed {args.name!r}")
    result = run_testbed(spec, args.out)
    bad = [r for r in result["rows"] if not r["status"].startswith("ok")]
    print(f"wrote {result['results']}")
    print(f"wrote {result['summary']}")
    if bad:
        print(f"{len(bad)} rows failed", file=sys.stderr)
        return 1
    return 0


def cmd_verify(args) -> int:
    rows = []
    rng = np.random.default_rng(args.seed)
    if args.suite in ("bias", "all"):
        worst = 0.0
        for _ in range(20):
            mu = float(rng.uniform(0.5, 200.0))
            r = float(rng.uniform(0.05, 0.95) * mu)
            h = float(rng.uniform(0.1, 5.0))
            p = float(rng.uniform(0.5, 50.0) * h)
            worst = max(worst, bias_fixed_point_residual(BiasFunction(mu, r, h, p)))
        rows.append(("bias", "fixed_point_residual_20_params", worst, 1e-6, worst < 1e-6))
        bf0 = BiasFunction(100.0, 0.0, 1.0, 9.0)
        rows.append(("bias", "gain_at_r0_is_p_mu", bf0.gain, 900.0, abs(bf0.gain - 900.0) < 1e-9))
    if args.suite in ("improvement", "all"):
        checks = verify_pil_improvement(50.0, 100.0, 1.0, 9.0, 3, seed=args.seed,
                                        n_states=args.states, mc_paths=50_000)
        worst_arg = max(abs(c.grid_argmin - c.pil_order) for c in checks)
        worst_resid = max(c.decomposition_residual for c in checks)
        worst_gap = max(c.backend_gap_se for c in checks)
        rows.append(("improvement", "grid_argmin_matches_pil", worst_arg, 2e-4, worst_arg < 2e-4))
        rows.append(("improvement", "decomposition_identity", worst_resid, 1e-9, worst_resid < 1e-9))
        rows.append(("improvement", "projection_vs_mc_se", worst_gap, 5.0, worst_gap < 5.0))
    if args.suite in ("dominance", "all"):
        cfg = SimConfig(seed=args.seed, replications=16, periods=16384, warmup=2000, extend=False)
        search = SimConfig(seed=args.seed, replications=8, periods=8192, warmup=2000, extend=False)
        for tau in (1, 2, 4, 8):
            for p in (4.0, 9.0, 19.0):
                for row in theorem1_chain(100.0, 1.0, p, tau, replace(cfg, stream=tau * 100 + int(p)),
                                          search_cfg=replace(search, stream=tau * 100 + int(p))):
                    rows.append(("dominance", f"{row.name}_tau{tau}_p{p:g}",
                                 row.lhs - row.rhs, row.slack, row.passed))
        for spec_str in ("poisson:mean=5", "geometric:mean=5", "me:mean=100,cv=0.5"):
            demand = parse_demand_spec(spec_str)
            cost = CostParams(1.0, 9.0)
            c3 = theorem3_row(demand, 2, cost, replace(cfg, stream=9000))
            rows.append(("dominance", f"theorem3_{demand.kind}", c3.lhs - c3.rhs, c3.slack, c3.passed))
            c7 = lemma7_row(demand, 2, cost, replace(cfg, stream=9001))
            rows.append(("dominance", f"lemma7_{demand.kind}", c7.lhs - c7.rhs, c7.slack, c7.passed))
    width = max(len(r[1]) for r in rows) + 2
    failures = 0
    for suite, name, value, tol, ok in rows:
        status = "pass" if ok else "FAIL"
        failures += not ok
        print(f"[{status}] {suite:12s} {name:<{width}s} value={value:.3e} allowance={tol:.3e}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "verify.csv", "w", newline="") as fh:
            _print_csv(["suite", "check", "value", "allowance", "passed"],
                       [[s, n, f"{v:.10g}", f"{t:.10g}", int(ok)] for s, n, v, t, ok in rows],
                       file=fh)
    print(f"{len(rows) - failures}/{len(rows)} checks passed")
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lostsales", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("evaluate", help="simulate one policy on one instance")
    sp.add_argument("--policy", required=True, help="e.g. pil:U=12.5 | bs:S=20 | myopic")
    _add_instance_args(sp)
    _add_sim_args(sp)
    sp.set_defaults(fn=cmd_evaluate)

    sp = sub.add_parser("optimize", help="optimize a policy family on one instance")
    sp.add_argument("--family", required=True, choices=["pil", "bs", "cop", "cbs"])
    sp.add_argument("--grid-eps", type=float, default=None,
                    help="use the guaranteed level grid with this eps (pil only)")
    _add_instance_args(sp)
    _add_sim_args(sp)
    sp.set_defaults(fn=cmd_optimize)

    sp = sub.add_parser("mdp", help="exact average-cost solve on the integer lattice")
    _add_instance_args(sp)
    sp.add_argument("--cap", type=int, default=None)
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--extended", action="store_true")
    sp.add_argument("--policy-out", default=None, help="CSV dump of the optimal action table")
    sp.set_defaults(fn=cmd_mdp)

    sp = sub.add_parser("backorder", help="newsvendor solution of the back-order twin")
    _add_instance_args(sp)
    sp.set_defaults(fn=cmd_backorder)

    sp = sub.add_parser("verify", help="run the theory-check suites")
    sp.add_argument("--suite", default="all", choices=["bias", "improvement", "dominance", "all"])
    sp.add_argument("--seed", type=int, default=20240501)
    sp.add_argument("--states", type=int, default=25)
    sp.add_argument("--out", default=None)
    sp.set_defaults(fn=cmd_verify)

    sp = sub.add_parser("throughput", help="projection speed probe (ME backend)")
    sp.add_argument("--taus", default="1,2,3,4,5,6")
    sp.add_argument("--cvs", default="0.4,0.6,0.8,1,1.2,1.4")
    sp.add_argument("--budget-s", type=float, default=0.5)
    sp.set_defaults(fn=cmd_throughput)

    sp = sub.add_parser("testbed", help="run a named benchmark grid")
    sp.add_argument("name", choices=["zipkin", "leadtime", "large"])
    sp.add_argument("--out", required=True)
    sp.add_argument("--seed", type=int, default=20240501)
    sp.add_argument("--ci-target", type=float, default=0.01)
    sp.add_argument("--extended", action="store_true",
                    help="zipkin: exact-MDP rows up to tau=4 (very slow)")
    sp.add_argument("--cv-set", default="table", choices=["table", "text"],
                    help="large: which published cv grid to run")
    sp.add_argument("--taus", default=None, help="comma-separated override")
    sp.add_argument("--ps", default=None, help="comma-separated override")
    sp.add_argument("--policies", default=None, help="comma-separated override")
    sp.add_argument("--demands", default=None, help="semicolon-separated demand specs")
    sp.add_argument("--projection", default=None)
    sp.set_defaults(fn=cmd_testbed)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
