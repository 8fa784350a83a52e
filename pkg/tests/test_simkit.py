import csv
import io
import json

import numpy as np
import pytest

from infopath.belief import SensorModel, alert_likelihood
from infopath.config import ConfigError, ExperimentConfig, load_config
from infopath.graph import InfeasibleSpecification
from infopath.simkit.experiment import (
    CSV_COLUMNS,
    build_environment,
    monte_carlo,
    results_csv,
    summarize,
    trial_seed,
    write_report,
)
from infopath.simkit.world import GridSpec, GroundTruth, generate_grid, sample_ground_truth, sample_report


def small_cfg(**kw):
    base = dict(grid=GridSpec(width=4, height=4, counts={"D1": 1, "D2": 1, "U": 2}), trials=4, seed=3,
                record_timing=False)
    base.update(kw)
    return ExperimentConfig(**base)


# --- grid world -----------------------------------------------------------------------

def test_grid_combinatorics():
    ts = generate_grid(GridSpec(), np.random.default_rng(0))
    assert ts.n_regions == 25
    assert len(ts.transitions) == 2 * (2 * 5 * 4) == 80
    assert all(t.weight == 1.0 for t in ts.transitions)
    for t in ts.transitions:
        r1, c1 = divmod(t.src, 5)
        r2, c2 = divmod(t.dst, 5)
        assert abs(r1 - r2) + abs(c1 - c2) == 1
        assert 0 <= ts.meas[t.src, t.dst] <= 10
        assert ts.meas[t.src, t.dst] == ts.meas[t.dst, t.src]


def test_grid_seeded_and_labels():
    spec = GridSpec()
    a = generate_grid(spec, np.random.default_rng(4))
    b = generate_grid(spec, np.random.default_rng(4))
    assert a.to_json() == b.to_json()
    idx = {name: i for i, name in enumerate(spec.ap)}
    for name, want in {"D1": 2, "D2": 2, "U": 3, "C": 1}.items():
        assert sum(lab >> idx[name] & 1 for lab in a.labels) == want
    assert all(bin(lab).count("1") <= 1 for lab in a.labels)
    assert a.labels[a.q0] == 0
    assert a.labels[24] == 1 << idx["C"]


def test_fixed_labels_and_conflicts():
    spec = GridSpec(width=3, height=3, fixed_labels={"D1": [1], "D2": [2], "U": [4]})
    ts = generate_grid(spec, np.random.default_rng(0))
    assert ts.labels[1] == 1 and ts.labels[2] == 2 and ts.labels[4] == 8 and ts.labels[8] == 4
    with pytest.raises(ValueError, match="conflicting"):
        generate_grid(GridSpec(width=3, height=3, fixed_labels={"D1": [1], "U": [1]}), np.random.default_rng(0))
    with pytest.raises(ValueError):
        GridSpec(width=2, height=2, counts={"U": 5})


# --- ground truth and reports -------------------------------------------------------------

def test_ground_truth_extremes_and_concentration():
    rng = np.random.default_rng(0)
    assert sample_ground_truth(10, 0.0, rng).s == (0,) * 10
    assert sample_ground_truth(10, 1.0, rng).s == (1,) * 10
    n, p = 100_000, 0.08
    mean = np.mean(sample_ground_truth(n, p, rng).s)
    assert abs(mean - p) <= 3 * np.sqrt(p * (1 - p) / n)
    with pytest.raises(ValueError):
        GroundTruth((0, 2))


def test_report_rates():
    ts = generate_grid(GridSpec(width=3, height=3, counts={}), np.random.default_rng(1))
    m = SensorModel.from_transition_system(ts, 0.9, 0.01, 0.01)
    rng = np.random.default_rng(2)
    n = 40_000
    zero = GroundTruth((0,) * 9)
    rate = np.mean([sample_report(m, zero, 4, rng) for _ in range(n)])
    assert abs(rate - 0.01) <= 4 * np.sqrt(0.01 * 0.99 / n)
    one = GroundTruth(tuple(int(i == 5) for i in range(9)))
    expect = alert_likelihood(m, one.s, 4, 1)
    assert expect == pytest.approx(0.9 * np.exp(-0.01 * ts.meas[4, 5]))
    rate = np.mean([sample_report(m, one, 4, rng) for _ in range(n)])
    assert abs(rate - expect) <= 4 * np.sqrt(expect * (1 - expect) / n)
    a = [sample_report(m, one, 4, np.random.default_rng(7)) for _ in range(5)]
    assert len(set(a)) == 1


# --- experiments ------------------------------------------------------------------------

def test_summarize():
    s = summarize([1.0, 2.0, 4.0])
    assert s == {"count": 3, "mean": pytest.approx(7 / 3), "median": 2.0, "variance": pytest.approx(14 / 9)}
    w = summarize([1.0, 3.0], weights=[0.25, 0.75])
    assert w["mean"] == pytest.approx(2.5) and w["median"] == 3.0 and w["variance"] == pytest.approx(0.75)
    assert summarize([])["mean"] is None


def test_trial_seeds_distinct():
    seeds = {trial_seed(0, t) for t in range(1000)}
    assert len(seeds) == 1000
    assert trial_seed(5, 1) == trial_seed(5, 1)


def test_zero_trials_gives_empty_report(tmp_path):
    rep = monte_carlo(small_cfg(trials=0))
    assert rep.rows == [] and rep.summary["count"] == 0 and rep.histogram == []
    write_report(rep, tmp_path, figures=False)
    assert (tmp_path / "results.csv").read_text().strip() == ",".join(CSV_COLUMNS)


def test_monte_carlo_satisfaction_and_entropy_bounds():
    rep = monte_carlo(small_cfg(trials=6))
    assert rep.satisfaction_rate == 1.0
    for r in rep.rows:
        assert 0 <= r.terminal_entropy <= r.initial_entropy + 0.5
        assert r.cpu_ms == 0.0
    assert rep.summary["count"] == 6
    assert sum(b[2] for b in rep.histogram) == 6


def test_monte_carlo_exhaustive_mode_fixed_environment():
    rep = monte_carlo(small_cfg(mode="exhaustive", trials=3, fixed_environment=True,
                                grid=GridSpec(width=3, height=3, counts={"D1": 1, "D2": 1, "U": 1})))
    assert rep.satisfaction_rate == 1.0
    paths = {tuple(step["region"] for step in r.trace["steps"]) for r in rep.rows}
    assert len(paths) == 1


def test_outputs_byte_identical(tmp_path):
    for name in ("a", "b"):
        write_report(monte_carlo(small_cfg(trials=4)), tmp_path / name, small_cfg(), figures=False)
    for f in ("results.csv", "histogram.csv", "summary.json", "traces.json", "config.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    rows = list(csv.DictReader(io.StringIO((tmp_path / "a" / "results.csv").read_text())))
    assert tuple(rows[0]) == CSV_COLUMNS and len(rows) == 4


def test_parallel_matches_serial():
    serial = results_csv(monte_carlo(small_cfg(trials=4)))
    parallel = results_csv(monte_carlo(small_cfg(trials=4, jobs=2)))
    assert serial == parallel


def test_infeasible_fixed_environment_raises():
    ts = {"names": ["a", "b"], "ap": ["D1", "D2", "C", "U"], "labels": [0, 0], "q0": 0,
          "transitions": [[0, "go", 1, 1.0]], "meas": [[0, 1, 1.0]]}
    with pytest.raises(InfeasibleSpecification):
        build_environment(small_cfg(transition_system=ts), np.random.default_rng(0))


def test_redraws_are_counted():
    # many U cells make some draws infeasible
    cfg = small_cfg(grid=GridSpec(width=3, height=3, counts={"D1": 1, "D2": 1, "U": 4}), trials=10)
    rep = monte_carlo(cfg)
    assert rep.summary["rejections"] == sum(r.rejections for r in rep.rows)
    assert rep.satisfaction_rate == 1.0


def test_config_round_trip_and_validation(tmp_path):
    cfg = small_cfg()
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert load_config(path).to_dict() == cfg.to_dict()
    nested = {"sensor": {"mu0": 0.8}, "planner": {"horizon": 2, "mode": "exhaustive"}, "belief": {"mode": "joint"}}
    path.write_text(json.dumps(nested))
    c = load_config(path, seed=11)
    assert (c.mu0, c.horizon, c.mode, c.belief_mode, c.seed) == (0.8, 2, "exhaustive", "joint", 11)
    for bad in ({"mu0": 2}, {"mode": "x"}, {"nope": 1}, {"sensor": {"zzz": 1}}, {"trials": -1}):
        path.write_text(json.dumps(bad))
        with pytest.raises(ConfigError):
            load_config(path)
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(path)
