"""Expected-entropy path evaluation, the exhaustive planner and the
receding-horizon planner."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .belief import (
    Belief,
    SensorModel,
    belief_entropy,
    bayes_update,
    binary_entropy,
    factored_branch,
    joint_alert_table,
)
from .graph import (
    InfeasibleSpecification,
    ProductAutomaton,
    Run,
    TransitionSystem,
    finite_paths,
    greedy_descent,
    iter_accepting_runs,
    reach_neighborhood,
)
from .simkit.world import GroundTruth, sample_report


class FeasibilityViolated(RuntimeError):
    """The receding-horizon problem had no admissible trajectory."""


@dataclass(frozen=True)
class PlanConfig:
    horizon: int = 3
    exact_cap: int = 12
    mc_samples: int = 512
    seed: int = 0

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.exact_cap < 1 or self.mc_samples < 1:
            raise ValueError("exact_cap and mc_samples must be positive")


# ---------------------------------------------------------------------------
# expected terminal entropy along a path

def _check_path(path: Sequence[int], ts: TransitionSystem | None) -> None:
    if ts is None:
        return
    for a, b in zip(path, path[1:]):
        if not ts.connected(a, b):
            raise ValueError(f"path is disconnected between regions {a} and {b}")


class _Batch:
    """A batch of beliefs restricted to the cells a path can observe."""

    def __init__(self, path: Sequence[int], b0: Belief, model: SensorModel):
        self.mode = b0.mode
        self.model = model
        if self.mode == "factored":
            rel = sorted({c for q in path for c, _ in model.neighborhoods[q]})
            pos = {c: i for i, c in enumerate(rel)}
            rest = np.ones(b0.n_cells, dtype=bool)
            rest[rel] = False
            self.base = float(binary_entropy(b0.probs[rest]).sum())
            self.steps = []
            for q in path:
                cells, mu = model.detection(q)
                self.steps.append((np.array([pos[c] for c in cells]), mu))
            self.state = b0.probs[rel][None, :].copy()
        else:
            self.base = 0.0
            self.steps = [joint_alert_table(model, q, b0.n_cells) for q in path]
            self.state = b0.probs[None, :].copy()

    def branch(self, t: int):
        if self.mode == "factored":
            loc, mu = self.steps[t]
            return factored_branch(self.state, loc, mu, self.model.r)
        f1 = self.steps[t]
        j1 = self.state * f1
        j0 = self.state - j1
        p1 = j1.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            post1 = j1 / p1[:, None]
            post0 = j0 / (1.0 - p1)[:, None]
        return p1, post1, post0

    def entropies(self) -> np.ndarray:
        if self.mode == "factored":
            return self.base + binary_entropy(self.state).sum(axis=1)
        p = self.state
        logs = np.zeros_like(p)
        nz = p > 0
        logs[nz] = np.log2(p[nz])
        return -(p * logs).sum(axis=1)


def terminal_entropy_distribution(
    path: Sequence[int], b0: Belief, model: SensorModel, max_steps: int = 24, chunk: int = 1 << 15
) -> tuple[np.ndarray, np.ndarray]:
    """Exact pmf of the terminal belief entropy over all report sequences.

    One report is taken at every region of ``path``.  Returns
    ``(probabilities, entropies)`` with one entry per report sequence of
    nonzero probability.  The report tree is expanded breadth-first and
    split into subtrees of at most ``chunk`` leaves to bound memory.
    """
    if len(path) > max_steps:
        raise ValueError(f"{len(path)} report steps exceed the enumeration limit {max_steps}")
    batch = _Batch(path, b0, model)
    probs: list[np.ndarray] = []
    ents: list[np.ndarray] = []

    def expand(state: np.ndarray, w: np.ndarray, t: int) -> None:
        while t < len(path) and 2 * len(w) <= chunk:
            batch.state = state
            p1, post1, post0 = batch.branch(t)
            w = np.concatenate([w * p1, w * (1.0 - p1)])
            state = np.concatenate([post1, post0])
            keep = w > 0
            w, state = w[keep], state[keep]
            t += 1
        if t == len(path):
            batch.state = state
            probs.append(w)
            ents.append(batch.entropies())
            return
        for i in range(len(w)):
            expand(state[i:i + 1], w[i:i + 1], t)

    expand(batch.state, np.ones(1), 0)
    return np.concatenate(probs), np.concatenate(ents)


def sampled_terminal_entropies(
    path: Sequence[int], b0: Belief, model: SensorModel, samples: int, seed: int
) -> np.ndarray:
    """Terminal entropies of report sequences drawn from the predictive chain."""
    rng = np.random.default_rng(seed)
    batch = _Batch(path, b0, model)
    batch.state = np.repeat(batch.state, samples, axis=0)
    for t in range(len(path)):
        p1, post1, post0 = batch.branch(t)
        y = rng.random(samples) < p1
        batch.state = np.where(y[:, None], post1, post0)
    return batch.entropies()


def expected_conditional_entropy(
    path: Sequence[int],
    b0: Belief,
    model: SensorModel,
    cfg: PlanConfig = PlanConfig(),
    ts: TransitionSystem | None = None,
) -> float:
    """Expected entropy of the belief after one report at every region of ``path``.

    Exact over all ``2**len(path)`` report sequences up to
    ``cfg.exact_cap`` steps, otherwise a seeded Monte Carlo average.
    """
    _check_path(path, ts)
    if len(path) == 0:
        return belief_entropy(b0)
    if len(path) <= cfg.exact_cap:
        w, h = terminal_entropy_distribution(path, b0, model, max_steps=cfg.exact_cap)
        return float(np.dot(w, h))
    return float(sampled_terminal_entropies(path, b0, model, cfg.mc_samples, cfg.seed).mean())


# ---------------------------------------------------------------------------
# exhaustive search

@dataclass(frozen=True)
class ExhaustiveResult:
    run: Run
    expected_entropy: float
    n_runs: int


def plan_exhaustive(
    p: ProductAutomaton, b0: Belief, model: SensorModel, cfg: PlanConfig = PlanConfig()
) -> ExhaustiveResult:
    """Accepting run whose projection minimizes expected terminal entropy."""
    p.target  # raises if infeasible
    best: tuple[float, Run] | None = None
    n = 0
    for run in iter_accepting_runs(p):
        n += 1
        value = expected_conditional_entropy(run.regions, b0, model, cfg)
        if best is None or value < best[0]:
            best = (value, run)
    if best is None:
        raise InfeasibleSpecification()
    return ExhaustiveResult(best[1], best[0], n)


# ---------------------------------------------------------------------------
# receding horizon

@dataclass(frozen=True)
class RhcState:
    current: int
    time: int
    predicted: tuple[int, ...]
    visited: frozenset[int] | None
    belief: Belief


@dataclass(frozen=True)
class StepResult:
    next_state: int
    trajectory: tuple[int, ...]
    candidates: int
    feasible: int
    collapsed: bool
    value: float


def initial_rhc_state(p: ProductAutomaton, b0: Belief, cfg: PlanConfig) -> RhcState:
    pred = tuple(greedy_descent(p, p.initial, cfg.horizon - 1))
    return RhcState(p.initial, 0, pred, None, b0)


def rhc_step(state: RhcState, p: ProductAutomaton, model: SensorModel, cfg: PlanConfig) -> StepResult:
    """Solve one finite-horizon problem and return its first move.

    Within ``b`` transitions of the target every candidate must end at the
    target and must not revisit states seen since the robot first came
    that close.  Otherwise candidates have exactly ``b`` transitions and
    their last state must have strictly lower ``W`` than the previous
    plan's last state.
    """
    chi = state.current
    if chi == p.target:
        raise ValueError("already at the target state")
    W = p.potential
    b = cfg.horizon
    collapsed = p.target in reach_neighborhood(p, chi, b)
    if collapsed:
        visited = state.visited if state.visited is not None else frozenset({chi})
        paths = finite_paths(p, chi, b, forbidden=visited, simple=True)
        feasible = [c for c in paths if c[-1] == p.target]
    else:
        paths = finite_paths(p, chi, b)
        bound = W[state.predicted[-1]]
        feasible = [c for c in paths if len(c) == b + 1 and W[c[-1]] < bound]
    if not feasible:
        raise FeasibilityViolated(f"no admissible trajectory from product state {chi} at time {state.time}")
    best: tuple[float, tuple[int, ...]] | None = None
    for cand in feasible:
        value = expected_conditional_entropy(p.project(cand[1:]), state.belief, model, cfg)
        if best is None or value < best[0]:
            best = (value, cand)
    return StepResult(best[1][1], best[1], len(paths), len(feasible), collapsed, best[0])


@dataclass
class Trace:
    """Closed-loop execution record; index 0 is the initial position."""

    regions: list[int] = field(default_factory=list)
    states: list[int] = field(default_factory=list)
    reports: list[int] = field(default_factory=list)
    entropy: list[float] = field(default_factory=list)
    potential: list[float] = field(default_factory=list)
    candidates: list[int] = field(default_factory=list)
    trajectories: list[list[int]] = field(default_factory=list)
    belief: Belief | None = None

    @property
    def steps(self) -> int:
        return len(self.regions) - 1

    @property
    def terminal_entropy(self) -> float:
        return self.entropy[-1]

    def to_json(self) -> list[dict]:
        rows = []
        for i in range(len(self.regions)):
            w = self.potential[i]
            rows.append({
                "time": i,
                "region": self.regions[i],
                "product_state": self.states[i] if self.states else None,
                "report": self.reports[i],
                "belief_entropy": self.entropy[i],
                "W": None if math.isinf(w) else w,
                "candidate_count": self.candidates[i] if i < len(self.candidates) else 0,
                "chosen_trajectory": self.trajectories[i] if i < len(self.trajectories) else [],
            })
        return rows


def _observe(trace: Trace, belief: Belief, model: SensorModel, world: GroundTruth, q: int, rng) -> Belief:
    y = sample_report(model, world, q, rng)
    belief = bayes_update(belief, model, q, y)
    trace.regions.append(q)
    trace.reports.append(y)
    trace.entropy.append(belief_entropy(belief))
    return belief


def run_rhc(
    p: ProductAutomaton,
    b0: Belief,
    model: SensorModel,
    cfg: PlanConfig,
    world: GroundTruth,
    rng: np.random.Generator,
) -> Trace:
    """Plan, move one step, observe, update and replan until the target."""
    W = p.potential
    trace = Trace()
    state = initial_rhc_state(p, b0, cfg)
    belief = _observe(trace, b0, model, world, p.region(p.initial), rng)
    trace.states.append(p.initial)
    trace.potential.append(W[p.initial])
    limit = p.n_states + len(p.graph) + 1
    while state.current != p.target:
        if state.time >= limit:
            raise FeasibilityViolated("receding horizon loop failed to terminate")
        step = rhc_step(RhcState(state.current, state.time, state.predicted, state.visited, belief), p, model, cfg)
        trace.candidates.append(step.candidates)
        trace.trajectories.append(list(step.trajectory))
        nxt = step.next_state
        visited = state.visited
        if step.collapsed:
            visited = (visited if visited is not None else frozenset({state.current})) | {nxt}
        belief = _observe(trace, belief, model, world, p.region(nxt), rng)
        trace.states.append(nxt)
        trace.potential.append(W[nxt])
        state = RhcState(nxt, state.time + 1, step.trajectory, visited, belief)
    trace.belief = belief
    return trace


def execute_path(
    regions: Sequence[int],
    b0: Belief,
    model: SensorModel,
    world: GroundTruth,
    rng: np.random.Generator,
    states: Sequence[int] | None = None,
    potential: Sequence[float] | None = None,
) -> Trace:
    """Follow a fixed region sequence, observing and filtering along the way."""
    trace = Trace()
    belief = b0
    for q in regions:
        belief = _observe(trace, belief, model, world, q, rng)
    trace.states = list(states) if states is not None else []
    trace.potential = list(potential) if potential is not None else [math.nan] * len(regions)
    trace.belief = belief
    return trace
