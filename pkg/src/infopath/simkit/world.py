from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..belief import SensorModel, alert_likelihood
from ..graph import Transition, TransitionSystem

MOVES = (("N", -1, 0), ("S", 1, 0), ("W", 0, -1), ("E", 0, 1))


@dataclass(frozen=True)
class GroundTruth:
    """Realized occupancy, one bit per region."""

    s: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(b not in (0, 1) for b in self.s):
            raise ValueError("ground truth must be a 0/1 vector")

    def to_json(self) -> list[int]:
        return list(self.s)


@dataclass
class GridSpec:
    """Layout of a 4-connected grid world.

    Cells are numbered row-major.  ``start`` and ``terminal`` default to
    opposite corners; ``terminal`` carries the ``C`` label.  ``counts``
    gives how many cells receive each of the other labels, drawn at random
    unless ``fixed_labels`` pins them.
    """

    width: int = 5
    height: int = 5
    ap: tuple[str, ...] = ("D1", "D2", "C", "U")
    start: int = 0
    terminal: int | None = None
    terminal_label: str = "C"
    counts: dict[str, int] = field(default_factory=lambda: {"D1": 2, "D2": 2, "U": 3})
    fixed_labels: dict[str, list[int]] | None = None
    dm_low: float = 0.0
    dm_high: float = 10.0

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("grid dimensions must be positive")
        if self.terminal is None:
            self.terminal = self.width * self.height - 1
        n = self.width * self.height
        if not (0 <= self.start < n and 0 <= self.terminal < n) or self.start == self.terminal:
            raise ValueError("start and terminal must be distinct cells of the grid")
        free = n - 2
        if self.fixed_labels is None and sum(self.counts.values()) > free:
            raise ValueError("more labeled cells requested than the grid has")


def generate_grid(spec: GridSpec, rng: np.random.Generator) -> TransitionSystem:
    """Random labels and measurement weights on a ``width x height`` grid.

    Adjacent moves cost 1.  Labeled cells are disjoint; the start cell is
    left unlabeled.
    """
    w, h = spec.width, spec.height
    n = w * h
    names = [f"r{i // w}c{i % w}" for i in range(n)]
    transitions = []
    for i in range(n):
        row, col = divmod(i, w)
        for act, dr, dc in MOVES:
            r2, c2 = row + dr, col + dc
            if 0 <= r2 < h and 0 <= c2 < w:
                transitions.append(Transition(i, act, r2 * w + c2, 1.0))
    meas = {}
    for t in transitions:
        if t.src < t.dst:
            meas[t.src, t.dst] = float(rng.uniform(spec.dm_low, spec.dm_high))
    index = {name: k for k, name in enumerate(spec.ap)}
    labels = [0] * n
    labels[spec.terminal] = 1 << index[spec.terminal_label]
    if spec.fixed_labels is not None:
        placement = {name: list(cells) for name, cells in spec.fixed_labels.items()}
    else:
        free = [i for i in range(n) if i not in (spec.start, spec.terminal)]
        order = list(spec.counts)
        total = sum(spec.counts.values())
        picks = rng.choice(free, size=total, replace=False) if total else []
        placement, k = {}, 0
        for name in order:
            placement[name] = [int(c) for c in picks[k:k + spec.counts[name]]]
            k += spec.counts[name]
    used: set[int] = set()
    for name, cells in placement.items():
        for c in cells:
            if c in used or c == spec.terminal:
                raise ValueError(f"cell {c} would carry conflicting labels")
            used.add(c)
            labels[c] |= 1 << index[name]
    return TransitionSystem(names, tuple(spec.ap), labels, spec.start, transitions, meas)


def sample_ground_truth(n_cells: int, p: float, rng: np.random.Generator) -> GroundTruth:
    """Independent Bernoulli(p) occupancy bits."""
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    return GroundTruth(tuple(int(b) for b in rng.random(n_cells) < p))


def sample_report(model: SensorModel, truth: GroundTruth, q: int, rng: np.random.Generator) -> int:
    return int(rng.random() < alert_likelihood(model, truth.s, q, 1))
