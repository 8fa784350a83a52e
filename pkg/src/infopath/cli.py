"""Command-line entry point: ``infopath translate | plan | montecarlo``.

Exit codes: 0 success, 2 usage or parse error, 3 infeasible
specification, 4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .belief import belief_entropy
from .config import ConfigError, ExperimentConfig, load_config
from .graph import InfeasibleSpecification
from .planners import FeasibilityViolated, execute_path, plan_exhaustive, run_rhc
from .scltl import FormulaError, parse_formula, translate
from .simkit.experiment import build_environment, environment_seed, monte_carlo, write_report
from .simkit.world import sample_ground_truth

log = logging.getLogger("infopath")

EXIT_USAGE, EXIT_INFEASIBLE, EXIT_INTERNAL = 2, 3, 4


def cmd_translate(args) -> int:
    ap = [a.strip() for a in args.ap.split(",") if a.strip()]
    fsa = translate(parse_formula(args.formula, ap), ap)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "fsa.dot").write_text(fsa.to_dot())
    (out / "fsa.json").write_text(json.dumps(fsa.to_json(), indent=2, sort_keys=True) + "\n")
    print(f"states: {fsa.n_states}  accepting: {sorted(fsa.accepting)}  initial: {fsa.initial}")
    for s, label in enumerate(fsa.labels):
        print(f"  {s}: {label}")
    return 0


def _config(args) -> ExperimentConfig:
    overrides = {
        "seed": args.seed,
        "horizon": getattr(args, "horizon", None),
        "mode": getattr(args, "mode", None),
        "jobs": getattr(args, "jobs", None),
        "trials": getattr(args, "trials", None),
    }
    cfg = load_config(args.config, **overrides)
    if getattr(args, "no_timing", False):
        cfg.record_timing = False
    return cfg


def cmd_plan(args) -> int:
    cfg = _config(args)
    if cfg.mode == "compare":
        raise ConfigError("plan runs a single planner; use --mode rhc or exhaustive")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    env = build_environment(cfg, np.random.default_rng(environment_seed(cfg.seed)))
    p, ts = env.product, env.ts
    b0 = env.prior(cfg)
    rng = np.random.default_rng(cfg.seed)
    truth = sample_ground_truth(ts.n_regions, cfg.p_target, rng)
    start = time.process_time()
    summary = {"mode": cfg.mode, "seed": cfg.seed, "initial_entropy": belief_entropy(b0),
               "product_states": p.n_states, "target": p.target}
    if cfg.mode == "rhc":
        trace = run_rhc(p, b0, env.model, cfg.plan, truth, rng)
    else:
        plan = plan_exhaustive(p, b0, env.model, cfg.plan)
        summary["expected_entropy"] = plan.expected_entropy
        summary["accepting_runs"] = plan.n_runs
        W = p.potential
        trace = execute_path(plan.run.regions, b0, env.model, truth, rng,
                             plan.run.states, [W[c] for c in plan.run.states])
    cpu_ms = (time.process_time() - start) * 1000.0
    satisfied = p.fsa.accepts(ts.word(trace.regions))
    summary.update(terminal_entropy=trace.terminal_entropy, satisfied=satisfied,
                   steps=trace.steps, path=list(trace.regions))
    (out / "trace.json").write_text(json.dumps(trace.to_json(), indent=2, sort_keys=True) + "\n")
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    (out / "environment.json").write_text(json.dumps(ts.to_json(), indent=2, sort_keys=True) + "\n")
    (out / "product.dot").write_text(p.to_dot())
    if not args.no_figures and cfg.transition_system is None:
        from .plotting import path_figure

        path_figure(ts, trace.regions, cfg.grid.width, out / "path.png",
                    f"{cfg.mode}: {trace.terminal_entropy:.2f} bits")
    print(f"terminal_entropy_bits={trace.terminal_entropy:.6f} satisfied={str(satisfied).lower()} "
          f"steps={trace.steps}" + (f" cpu_ms={cpu_ms:.1f}" if cfg.record_timing else ""))
    return 0


def cmd_montecarlo(args) -> int:
    cfg = _config(args)
    report = monte_carlo(cfg)
    write_report(report, args.out, cfg, figures=not args.no_figures)
    s = report.summary
    if s.get("count"):
        print(f"trials={s['count']} mean={s['mean']:.4f} median={s['median']:.4f} "
              f"variance={s['variance']:.4f} satisfaction_rate={s['satisfaction_rate']}")
    else:
        print("trials=0")
    if report.comparison is not None:
        ex = report.comparison["exhaustive"]
        print(f"exhaustive mean={ex['mean']:.4f} median={ex['median']:.4f} variance={ex['variance']:.4f} "
              f"runs={ex['n_runs']} exact={str(ex['exact']).lower()}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="infopath", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("translate", help="translate an scLTL formula into a DFA")
    t.add_argument("formula")
    t.add_argument("--ap", required=True, help="comma-separated atomic propositions, in bit order")
    t.add_argument("--out", default="fsa_out")
    t.set_defaults(func=cmd_translate)

    def common(p, modes):
        p.add_argument("--config", help="JSON experiment configuration")
        p.add_argument("--seed", type=int)
        p.add_argument("--horizon", type=int)
        p.add_argument("--mode", choices=modes)
        p.add_argument("--out", default="out")
        p.add_argument("--no-figures", action="store_true")
        p.add_argument("--no-timing", action="store_true", help="write cpu_ms as 0 for byte-stable output")

    p = sub.add_parser("plan", help="plan and execute one instance")
    common(p, ("exhaustive", "rhc"))
    p.set_defaults(func=cmd_plan)

    m = sub.add_parser("montecarlo", help="run a Monte Carlo study")
    common(m, ("exhaustive", "rhc", "compare"))
    m.add_argument("--jobs", type=int)
    m.add_argument("--trials", type=int)
    m.set_defaults(func=cmd_montecarlo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (FormulaError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleSpecification as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (FeasibilityViolated, AssertionError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
