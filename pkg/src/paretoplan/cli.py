"""Command-line interface.

Subcommands: ``translate`` (formula to automaton JSON), ``plan`` (one-shot
front computation), ``run`` (full episode loop with CSV outputs), ``bench``
(selector comparison across trials), ``diag`` (normality and sampling-error
reports).  Exit codes: 0 success, 1 runtime or infeasibility failure,
2 usage or parse errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import harness, ltlf
from .belief import CostBelief, normality_diagnostic
from .harness import (
    HarnessError,
    ScenarioConfig,
    builtin_scenarios,
    generate_random_grid,
    run_episode_loop,
    true_front,
    write_run_outputs,
)
from .ltlf import LtlfError, parse, to_dfa
from .model import load_model, plan_edges
from .mosearch import InfeasibleTaskError, lcb_weight, pareto_search
from .product import build_product
from .select import candidate_rng, efe_term3

USAGE_ERROR = 2
RUNTIME_ERROR = 1
OUT_ROOT_ENV = "PARETOPLAN_OUT"


def _out_dir(args) -> Path:
    if args.out:
        return Path(args.out)
    return Path(os.environ.get(OUT_ROOT_ENV, ".")) / "paretoplan-out"


def _load_config(args) -> ScenarioConfig:
    """Config file (JSON or TOML) merged with command-line overrides."""
    if args.builtin:
        cfg = builtin_scenarios()[args.builtin]
    elif args.config:
        text = Path(args.config).read_text()
        if args.config.endswith(".toml"):
            try:
                import tomllib as toml
            except ModuleNotFoundError:
                import tomli as toml
            doc = toml.loads(text)
        else:
            doc = json.loads(text)
        cfg = ScenarioConfig.from_dict(doc)
    else:
        raise HarnessError("either --config or --builtin is required")
    if args.seed is not None:
        cfg.seed = args.seed
    if args.selector is not None:
        cfg.selector = args.selector
    if args.alpha is not None:
        cfg.alpha = args.alpha
    if args.samples is not None:
        cfg.n_s = args.samples
    if args.instances is not None:
        cfg.instances = args.instances
    if args.weights is not None:
        cfg.weights = [float(x) for x in args.weights.split(",")]
    return cfg


def cmd_translate(args) -> int:
    ap = [a for a in args.ap.split(",") if a]
    formula = parse(args.formula, ap)
    dfa = to_dfa(formula, ap)
    n_edges = dfa.n_states * dfa.n_symbols
    if args.check:
        from itertools import product as iproduct
        symbols = [frozenset(n for i, n in enumerate(dfa.ap) if m >> i & 1)
                   for m in range(dfa.n_symbols)]
        for length in range(1, args.check_length + 1):
            for trace in iproduct(symbols, repeat=length):
                if dfa.accepts(trace) != ltlf.holds(formula, trace):
                    print(f"MISMATCH on trace {trace}", file=sys.stderr)
                    return RUNTIME_ERROR
        print(f"# semantics check passed up to length {args.check_length}",
              file=sys.stderr)
    print(dfa.to_json())
    print(f"# states={dfa.n_states} symbols={dfa.n_symbols} edges={n_edges} "
          f"accepting={len(dfa.accepting)}", file=sys.stderr)
    return 0


def _front_for_config(cfg: ScenarioConfig):
    ts, truth = load_model(cfg.model)
    formula = parse(cfg.formula, ts.ap)
    dfa = to_dfa(formula, ts.ap)
    start = harness.resolve_start(cfg)
    belief = CostBelief.initialize(
        ts, lam0=cfg.prior.lam0, kappa0=cfg.prior.kappa0,
        scale0=cfg.prior.scale0, nu0=cfg.prior.nu0)
    product = build_product(ts, dfa, start)
    front = pareto_search(
        product,
        weight_fn=lambda s, a: lcb_weight(belief, s, a, cfg.alpha, 1),
        moments_fn=lambda s, a: (belief.posterior_mean(s, a),
                                 belief.posterior_mean_cov(s, a)))
    return ts, truth, dfa, start, front


def cmd_plan(args) -> int:
    cfg = _load_config(args)
    ts, truth, dfa, start, front = _front_for_config(cfg)
    if args.true_front:
        front = true_front(ts, truth, dfa, start)
    n = ts.n_objectives
    print(",".join([f"objective_{i+1}" for i in range(n)] + ["plan"]))
    for row in front.csv_rows():
        print(row)
    return 0


def cmd_run(args) -> int:
    cfg = _load_config(args)
    records = run_episode_loop(cfg)
    out = _out_dir(args)
    paths = write_run_outputs(out, cfg, records)
    cum_regret = sum(r.regret for r in records)
    cum_bias = sum(r.bias for r in records)
    print(f"instances={len(records)} cumulative_regret={cum_regret:.6g} "
          f"cumulative_bias={cum_bias:.6g}")
    print(f"outputs in {out}")
    return 0


def _bench_trial(spec):
    cfg, trial = spec
    try:
        records = run_episode_loop(cfg)
        regret = [r.regret for r in records]
        bias = [r.bias for r in records]
        return trial, cfg.selector, regret, bias, None
    except Exception as exc:  # report per-trial status, keep the suite going
        return trial, cfg.selector, None, None, str(exc)


def cmd_bench(args) -> int:
    selectors = []
    for name in args.selectors.split(","):
        name = name.strip()
        if name.startswith("aif"):
            selectors.append((name, "aif", None))
        elif name == "weights":
            selectors.append((name, "weights", [0.5, 0.5]))
        else:
            selectors.append((name, name, None))

    variance_scale = {"aif": 1.0, "aif-small": 0.25, "aif-medium": 1.0,
                      "aif-large": 4.0, "aif-none": None}
    trials = []
    for trial in range(args.trials):
        if args.builtin:
            base = builtin_scenarios()[args.builtin]
            base.seed = args.seed0 + trial
        else:
            doc = generate_random_grid(args.grid, args.grid,
                                       seed=args.seed0 + trial)
            base = ScenarioConfig(
                model=doc, formula=harness.ROVER_FORMULA, start=doc["start"],
                preference_mean=[60.0, 10.0],
                preference_cov=[[140.0, -2.0], [-2.0, 70.0]],
                seed=args.seed0 + trial, name=f"random-{trial}")
        base.instances = args.instances
        if args.samples:
            base.n_s = args.samples
        for name, selector, weights in selectors:
            cfg = ScenarioConfig.from_dict(base.to_dict())
            cfg.name = name
            cfg.selector = selector
            cfg.weights = weights
            scale = variance_scale.get(name, 1.0)
            if selector == "aif" and scale is None:
                cfg.preference_cov = (np.eye(len(cfg.preference_mean))
                                      * 1e-6).tolist()
            elif selector == "aif":
                cfg.preference_cov = (np.asarray(cfg.preference_cov)
                                      * scale).tolist()
            trials.append((cfg, trial))

    results = []
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        for res in pool.map(_bench_trial, trials):
            results.append(res)
            trial, name, _, _, err = res
            status = f"error: {err}" if err else "ok"
            print(f"trial {trial} selector {name}: {status}", file=sys.stderr)

    by_selector: dict[str, list] = {}
    failures = []
    for (cfg, trial), (t2, _, regret, bias, err) in zip(trials, results):
        if err:
            failures.append((cfg.name, trial, err))
            continue
        by_selector.setdefault(cfg.name, []).append((regret, bias))

    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    rows = ["selector,instance,n_trials,"
            "regret_mean,regret_std,bias_mean,bias_std,"
            "cum_regret_mean,cum_regret_std,cum_bias_mean,cum_bias_std"]
    for name, runs in sorted(by_selector.items()):
        regret = np.array([r for r, _ in runs])
        bias = np.array([b for _, b in runs])
        cum_regret = np.cumsum(regret, axis=1)
        cum_bias = np.cumsum(bias, axis=1)
        for i in range(regret.shape[1]):
            rows.append(",".join(
                [name, str(i + 1), str(len(runs))]
                + [f"{v:.10g}" for v in (
                    regret[:, i].mean(), regret[:, i].std(),
                    bias[:, i].mean(), bias[:, i].std(),
                    cum_regret[:, i].mean(), cum_regret[:, i].std(),
                    cum_bias[:, i].mean(), cum_bias[:, i].std())]))
    (out / "aggregate.csv").write_text("\n".join(rows) + "\n")
    print(f"aggregate written to {out / 'aggregate.csv'}")
    if failures:
        print(f"{len(failures)} trial(s) failed:", file=sys.stderr)
        for name, trial, err in failures:
            print(f"  {name} trial {trial}: {err}", file=sys.stderr)
        return RUNTIME_ERROR
    return 0


def cmd_diag(args) -> int:
    cfg = _load_config(args)
    ts, truth, dfa, start, front = _front_for_config(cfg)
    tf = true_front(ts, truth, dfa, start)
    plan = max(tf, key=lambda e: len(e.plan.actions)).plan
    edges = plan_edges(ts, plan)

    belief = CostBelief.initialize(
        ts, lam0=cfg.prior.lam0, kappa0=cfg.prior.kappa0,
        scale0=cfg.prior.scale0, nu0=cfg.prior.nu0)
    rng = np.random.default_rng(cfg.seed)
    for s, a in set(edges):
        data = [truth.mean(s, a) + rng.normal(scale=0.1, size=ts.n_objectives)
                for _ in range(args.observations)]
        belief.update(s, a, np.array(data))

    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)

    report = normality_diagnostic(belief, edges, n_samples=args.qq_samples,
                                  rng=np.random.default_rng(cfg.seed))
    qq_rows = ["coordinate,theoretical_quantile,sample_quantile"]
    for coord in range(report.sample.shape[0]):
        for t, s_ in zip(report.theoretical, report.sample[coord]):
            qq_rows.append(f"{coord},{t:.10g},{s_:.10g}")
    (out / "qq_report.csv").write_text("\n".join(qq_rows) + "\n")

    sweep = [10, 30, 100, 300, 1000]
    estimates = {
        n_s: np.array([
            efe_term3(belief, edges, n_s, candidate_rng((cfg.seed, n_s), r))
            for r in range(args.replicates)])
        for n_s in sweep
    }
    reference = estimates[sweep[-1]].mean()
    rows = ["n_s,mean_estimate,std_error,percent_error"]
    for n_s in sweep:
        vals = estimates[n_s]
        rows.append(f"{n_s},{vals.mean():.10g},{vals.std(ddof=1):.10g},"
                    f"{abs(vals.mean() - reference) / abs(reference) * 100:.10g}")
    (out / "mc_error.csv").write_text("\n".join(rows) + "\n")
    print(f"diagnostics in {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paretoplan",
        description="Multi-objective temporal-logic planning with Bayesian "
                    "cost learning and free-energy plan selection")
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("translate", help="formula to automaton JSON")
    t.add_argument("formula")
    t.add_argument("--ap", required=True, help="comma-separated propositions")
    t.add_argument("--check", action="store_true",
                   help="verify against trace semantics before printing")
    t.add_argument("--check-length", type=int, default=6)
    t.set_defaults(func=cmd_translate)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario file (.json or .toml)")
    common.add_argument("--builtin", choices=sorted(builtin_scenarios()),
                        help="named built-in scenario")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--selector",
                        choices=["aif", "uniform", "weights", "topsis"])
    common.add_argument("--alpha", type=float)
    common.add_argument("--samples", type=int)
    common.add_argument("--instances", type=int)
    common.add_argument("--weights", help="comma-separated objective weights")

    p = sub.add_parser("plan", parents=[common],
                       help="compute one front and print it as CSV")
    p.add_argument("--true-front", action="store_true",
                   help="use exact costs instead of belief-based weights")
    p.set_defaults(func=cmd_plan)

    r = sub.add_parser("run", parents=[common], help="run the episode loop")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bench", parents=[common],
                       help="compare selectors across trials")
    b.add_argument("--selectors",
                   default="aif-small,aif-medium,aif-large,aif-none,"
                           "uniform,weights,topsis")
    b.add_argument("--trials", type=int, default=10)
    b.add_argument("--grid", type=int, default=20,
                   help="random grid side length (ignored with --builtin)")
    b.add_argument("--seed0", type=int, default=0)
    b.add_argument("--jobs", type=int, default=1)
    b.set_defaults(func=cmd_bench)

    d = sub.add_parser("diag", parents=[common],
                       help="normality and sampling-error diagnostics")
    d.add_argument("--observations", type=int, default=10,
                   help="cost samples folded into each edge belief")
    d.add_argument("--qq-samples", type=int, default=5000)
    d.add_argument("--replicates", type=int, default=20)
    d.set_defaults(func=cmd_diag)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (LtlfError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (InfeasibleTaskError, HarnessError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
