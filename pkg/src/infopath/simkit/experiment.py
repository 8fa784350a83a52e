"""Seeded Monte Carlo studies over grid environments."""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from pathlib import Path

import numpy as np

from ..belief import Belief, SensorModel, belief_entropy, uniform_belief
from ..graph import InfeasibleSpecification, ProductAutomaton, TransitionSystem, build_product
from ..planners import (
    ExhaustiveResult,
    execute_path,
    plan_exhaustive,
    run_rhc,
    sampled_terminal_entropies,
    terminal_entropy_distribution,
)
from ..scltl import parse_formula, translate
from .world import generate_grid, sample_ground_truth

log = logging.getLogger(__name__)

CSV_COLUMNS = ("trial", "seed", "terminal_entropy_bits", "satisfied", "steps", "cpu_ms")
EXACT_PMF_STEPS = 24


def trial_seed(seed: int, trial: int) -> int:
    """Per-trial seed derived from the experiment seed and the trial index."""
    return int(np.random.SeedSequence([seed, trial]).generate_state(1, dtype=np.uint64)[0])


def environment_seed(seed: int) -> int:
    return int(np.random.SeedSequence([seed, 1 << 32]).generate_state(1, dtype=np.uint64)[0])


@dataclass
class Environment:
    ts: TransitionSystem
    product: ProductAutomaton
    model: SensorModel
    rejections: int = 0
    plan: ExhaustiveResult | None = None

    def prior(self, cfg) -> Belief:
        return uniform_belief(self.ts.n_regions, cfg.belief_mode, cfg.prior)


def build_environment(cfg, rng: np.random.Generator) -> Environment:
    """Draw environments until the specification is satisfiable on one."""
    fsa = translate(parse_formula(cfg.formula, cfg.ap), cfg.ap)
    rejections = 0
    while True:
        if cfg.transition_system is not None:
            ts = TransitionSystem.from_json(cfg.transition_system)
        else:
            ts = generate_grid(cfg.grid, rng)
        product = build_product(ts, fsa, stop_at_acceptance=cfg.stop_at_acceptance)
        try:
            product.potential
        except InfeasibleSpecification:
            if (cfg.transition_system is not None or cfg.grid.fixed_labels is not None
                    or rejections >= cfg.max_redraws):
                raise
            rejections += 1
            continue
        model = SensorModel.from_transition_system(ts, cfg.mu0, cfg.lam, cfg.r)
        return Environment(ts, product, model, rejections)


@dataclass
class TrialResult:
    trial: int
    seed: int
    terminal_entropy: float
    satisfied: bool
    steps: int
    cpu_ms: float
    rejections: int
    initial_entropy: float
    trace: dict


def run_trial(cfg, trial: int, env: Environment | None = None) -> TrialResult:
    seed = trial_seed(cfg.seed, trial)
    rng = np.random.default_rng(seed)
    start = time.process_time()
    if env is None:
        env = build_environment(cfg, rng)
    p = env.product
    b0 = env.prior(cfg)
    truth = sample_ground_truth(env.ts.n_regions, cfg.p_target, rng)
    if cfg.mode == "rhc":
        trace = run_rhc(p, b0, env.model, cfg.plan, truth, rng)
    else:
        plan = env.plan or plan_exhaustive(p, b0, env.model, cfg.plan)
        W = p.potential
        trace = execute_path(plan.run.regions, b0, env.model, truth, rng,
                             plan.run.states, [W[c] for c in plan.run.states])
    cpu_ms = (time.process_time() - start) * 1000.0 if cfg.record_timing else 0.0
    satisfied = env.product.fsa.accepts(env.ts.word(trace.regions))
    record = {
        "trial": trial,
        "seed": seed,
        "truth": truth.to_json(),
        "labels": env.ts.labels,
        "steps": trace.to_json(),
    }
    return TrialResult(trial, seed, trace.terminal_entropy, satisfied, trace.steps,
                       cpu_ms, env.rejections, belief_entropy(b0), record)


def summarize(values, weights=None) -> dict:
    """Mean, median and (population) variance of a sample or weighted pmf."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return {"count": 0, "mean": None, "median": None, "variance": None}
    w = np.full(v.size, 1.0 / v.size) if weights is None else np.asarray(weights, float) / np.sum(weights)
    mean = float(np.dot(w, v))
    if weights is None:
        median = float(np.median(v))
    else:
        order = np.argsort(v, kind="stable")
        cum = np.cumsum(w[order])
        median = float(v[order][np.searchsorted(cum, 0.5 - 1e-12)])
    var = float(np.dot(w, (v - mean) ** 2))
    return {"count": int(v.size), "mean": mean, "median": median, "variance": var}


def histogram(values, edges, weights=None) -> list[tuple[float, float, float]]:
    counts, edges = np.histogram(np.asarray(values, float), bins=edges, weights=weights)
    return [(float(a), float(b), float(c)) for a, b, c in zip(edges[:-1], edges[1:], counts)]


@dataclass
class StatsReport:
    mode: str
    rows: list[TrialResult] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    histogram: list = field(default_factory=list)
    comparison: dict | None = None

    @property
    def satisfaction_rate(self) -> float | None:
        if not self.rows:
            return None
        return sum(r.satisfied for r in self.rows) / len(self.rows)


def _map_trials(cfg, trials, env):
    fn = partial(run_trial, cfg, env=env)
    if cfg.jobs > 1 and len(trials) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            rows = list(pool.map(fn, trials))
    else:
        rows = [fn(t) for t in trials]
    return sorted(rows, key=lambda r: r.trial)


def monte_carlo(cfg) -> StatsReport:
    """Run ``cfg.trials`` closed-loop trials of the configured planner.

    In ``compare`` mode the environment is fixed, the exhaustive optimum
    is computed once and its exact terminal-entropy pmf is reported next
    to the receding-horizon trials.
    """
    if cfg.mode == "compare":
        return _compare(cfg)
    env = None
    if cfg.fixed_environment and cfg.trials > 0:
        env = build_environment(cfg, np.random.default_rng(environment_seed(cfg.seed)))
        if cfg.mode == "exhaustive":
            env.plan = plan_exhaustive(env.product, env.prior(cfg), env.model, cfg.plan)
    rows = _map_trials(cfg, list(range(cfg.trials)), env)
    report = StatsReport(cfg.mode, rows)
    values = [r.terminal_entropy for r in rows]
    report.summary = summarize(values)
    report.summary["satisfaction_rate"] = report.satisfaction_rate
    report.summary["rejections"] = sum(r.rejections for r in rows)
    if values:
        report.histogram = histogram(values, np.histogram_bin_edges(values, bins=cfg.hist_bins))
    return report


def exhaustive_entropy_pmf(path, b0, model, cfg) -> tuple[np.ndarray, np.ndarray, bool]:
    """Terminal-entropy pmf of a fixed path; exact when short enough."""
    if len(path) <= EXACT_PMF_STEPS:
        w, h = terminal_entropy_distribution(path, b0, model, max_steps=EXACT_PMF_STEPS)
        return w, h, True
    h = sampled_terminal_entropies(path, b0, model, 1 << 16, cfg.seed)
    return np.full(h.size, 1.0 / h.size), h, False


def _compare(cfg) -> StatsReport:
    env = build_environment(cfg, np.random.default_rng(environment_seed(cfg.seed)))
    b0 = env.prior(cfg)
    start = time.process_time()
    plan = plan_exhaustive(env.product, b0, env.model, cfg.plan)
    ex_cpu = (time.process_time() - start) * 1000.0 if cfg.record_timing else 0.0
    w, h, exact = exhaustive_entropy_pmf(plan.run.regions, b0, env.model, cfg)

    rhc_cfg = replace(cfg, mode="rhc")
    rows = _map_trials(rhc_cfg, list(range(cfg.trials)), env)
    # the exhaustive path replayed against the same ground truths and report streams
    env.plan = plan
    ex_cfg = replace(cfg, mode="exhaustive")
    replay = _map_trials(ex_cfg, list(range(cfg.trials)), env)

    rhc_values = [r.terminal_entropy for r in rows]
    report = StatsReport("compare", rows)
    report.summary = summarize(rhc_values)
    report.summary["satisfaction_rate"] = report.satisfaction_rate
    lo = min([*h, *rhc_values]) if rhc_values else float(np.min(h))
    hi = max([*h, *rhc_values]) if rhc_values else float(np.max(h))
    edges = np.linspace(lo, hi if hi > lo else lo + 1.0, cfg.hist_bins + 1)
    if rhc_values:
        report.histogram = histogram(rhc_values, edges)
    report.comparison = {
        "exhaustive": {
            **summarize(h, w),
            "exact": exact,
            "path": list(plan.run.regions),
            "expected_entropy": plan.expected_entropy,
            "n_runs": plan.n_runs,
            "cpu_ms": ex_cpu,
            "histogram": histogram(h, edges, w),
        },
        "exhaustive_replay": summarize([r.terminal_entropy for r in replay]),
        "rhc": dict(report.summary),
        "environment": env.ts.to_json(),
    }
    return report


# ---------------------------------------------------------------------------
# output

def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def results_csv(report: StatsReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in report.rows:
        w.writerow([_fmt(v) for v in (r.trial, r.seed, r.terminal_entropy, r.satisfied, r.steps, r.cpu_ms)])
    return buf.getvalue()


def histogram_csv(bins) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("bin_low", "bin_high", "count"))
    for lo, hi, c in bins:
        w.writerow((_fmt(lo), _fmt(hi), _fmt(c)))
    return buf.getvalue()


def write_report(report: StatsReport, out: str | Path, cfg=None, figures: bool = True) -> list[Path]:
    """Write CSV/JSON outputs (and figures) into ``out``; returns the paths."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "results.csv": results_csv(report),
        "histogram.csv": histogram_csv(report.histogram),
        "summary.json": json.dumps({"mode": report.mode, **report.summary}, indent=2, sort_keys=True) + "\n",
        "traces.json": json.dumps([r.trace for r in report.rows], sort_keys=True) + "\n",
    }
    if report.comparison is not None:
        files["comparison.json"] = json.dumps(report.comparison, indent=2, sort_keys=True) + "\n"
        files["exhaustive_histogram.csv"] = histogram_csv(report.comparison["exhaustive"]["histogram"])
    if cfg is not None:
        files["config.json"] = json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n"
    written = []
    for name, text in files.items():
        path = out / name
        path.write_text(text)
        written.append(path)
    if figures:
        from .. import plotting

        written += plotting.report_figures(report, out)
    return written
