"""Weighted transition systems and their product with a specification DFA.

Product states are pairs ``(q, sigma)`` where ``sigma`` is the automaton
state after reading the labels of the regions visited *before* ``q``.
Moving out of ``q`` consumes ``L(q)``.  A product state is accepting when
reading its own region's label would drive the automaton into ``F``, so a
run ``q0 .. qk`` is accepting exactly when the word ``L(q0) .. L(qk)`` is.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Sequence

import networkx as nx

from .scltl import Fsa

UNREACHABLE = math.inf


class InfeasibleSpecification(RuntimeError):
    """No accepting product state is reachable from the initial state."""

    def __init__(self, message: str = "specification infeasible"):
        super().__init__(message)


@dataclass(frozen=True)
class Transition:
    src: int
    action: str
    dst: int
    weight: float = 1.0


@dataclass
class TransitionSystem:
    """Regions, labeled transitions and the measurement-overlap weights.

    ``meas`` maps ordered region pairs ``(j, k)`` to ``d_M``; it is kept
    symmetric and always contains every self pair at distance 0.
    """

    names: list[str]
    ap: tuple[str, ...]
    labels: list[int]
    q0: int
    transitions: list[Transition]
    meas: dict[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        n = len(self.names)
        self.ap = tuple(self.ap)
        if not 0 <= self.q0 < n:
            raise ValueError(f"initial region {self.q0} out of range")
        if len(self.labels) != n:
            raise ValueError("one label per region required")
        for lab in self.labels:
            if not 0 <= lab < 1 << len(self.ap):
                raise ValueError(f"label {lab} is not a letter over {self.ap}")
        seen = set()
        for t in self.transitions:
            if not (0 <= t.src < n and 0 <= t.dst < n):
                raise ValueError(f"transition {t} has an invalid endpoint")
            if t.weight < 0:
                raise ValueError(f"transition {t} has a negative weight")
            if (t.src, t.action) in seen:
                raise ValueError(f"action {t.action!r} is not deterministic at region {t.src}")
            seen.add((t.src, t.action))
        meas = {}
        for (j, k), d in self.meas.items():
            if d < 0:
                raise ValueError("measurement distances must be nonnegative")
            meas[j, k] = meas[k, j] = float(d)
        for q in range(n):
            meas[q, q] = 0.0
        for t in self.transitions:
            if (t.src, t.dst) not in meas:
                raise ValueError(f"no measurement weight for adjacent regions {t.src}, {t.dst}")
        self.meas = meas

    @property
    def n_regions(self) -> int:
        return len(self.names)

    @cached_property
    def successors(self) -> list[list[Transition]]:
        out: list[list[Transition]] = [[] for _ in self.names]
        for t in self.transitions:
            out[t.src].append(t)
        return out

    def connected(self, a: int, b: int) -> bool:
        return any(t.dst == b for t in self.successors[a])

    def observation_neighborhood(self, q: int) -> list[tuple[int, float]]:
        """Regions observable from ``q`` with their ``d_M``, ``q`` itself first."""
        others = sorted(j for (k, j) in self.meas if k == q and j != q)
        return [(q, 0.0)] + [(j, self.meas[q, j]) for j in others]

    def word(self, regions: Sequence[int]) -> list[int]:
        return [self.labels[q] for q in regions]

    def to_json(self) -> dict:
        pairs = sorted((j, k) for (j, k) in self.meas if j < k)
        return {
            "names": list(self.names),
            "ap": list(self.ap),
            "labels": list(self.labels),
            "q0": self.q0,
            "transitions": [[t.src, t.action, t.dst, t.weight] for t in self.transitions],
            "meas": [[j, k, self.meas[j, k]] for j, k in pairs],
        }

    @classmethod
    def from_json(cls, data: dict) -> "TransitionSystem":
        return cls(
            names=list(data["names"]),
            ap=tuple(data["ap"]),
            labels=[int(x) for x in data["labels"]],
            q0=int(data["q0"]),
            transitions=[Transition(int(s), str(a), int(d), float(w)) for s, a, d, w in data["transitions"]],
            meas={(int(j), int(k)): float(d) for j, k, d in data.get("meas", [])},
        )


@dataclass(frozen=True)
class Run:
    """A path on the product together with its projection onto regions."""

    states: tuple[int, ...]
    regions: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class ProductAutomaton:
    ts: TransitionSystem
    fsa: Fsa
    states: tuple[tuple[int, int], ...]
    succ: tuple[tuple[tuple[int, str, float], ...], ...]
    accepting: frozenset[int]
    initial: int = 0

    @property
    def n_states(self) -> int:
        return len(self.states)

    def region(self, chi: int) -> int:
        return self.states[chi][0]

    def project(self, path: Sequence[int]) -> tuple[int, ...]:
        return tuple(self.states[c][0] for c in path)

    @cached_property
    def graph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(range(self.n_states))
        for u, edges in enumerate(self.succ):
            for v, _, w in edges:
                if not g.has_edge(u, v) or g[u][v]["weight"] > w:
                    g.add_edge(u, v, weight=w)
        return g

    @cached_property
    def target(self) -> int:
        return select_target(self)

    @cached_property
    def potential(self) -> tuple[float, ...]:
        return compute_potential(self, self.target)

    @cached_property
    def co_accepting(self) -> frozenset[int]:
        """States from which some accepting state is reachable."""
        rev = self.graph.reverse(copy=False)
        found = set(self.accepting)
        for a in self.accepting:
            found |= nx.descendants(rev, a)
        return frozenset(found)

    def neighbors(self, chi: int) -> list[int]:
        return sorted({v for v, _, _ in self.succ[chi]})

    def to_json(self) -> dict:
        data = {
            "initial": self.initial,
            "states": [list(s) for s in self.states],
            "accepting": sorted(self.accepting),
            "edges": [[u, v, a, w] for u, es in enumerate(self.succ) for v, a, w in es],
        }
        try:
            data["target"] = self.target
            data["potential"] = [None if math.isinf(x) else x for x in self.potential]
        except InfeasibleSpecification:
            data["target"] = None
        return data

    def to_dot(self) -> str:
        try:
            W = self.potential
        except InfeasibleSpecification:
            W = None
        lines = ["digraph product {"]
        for i, (q, s) in enumerate(self.states):
            shape = "doublecircle" if i in self.accepting else "circle"
            note = ""
            if W is not None:
                note = "\\nW=inf" if math.isinf(W[i]) else f"\\nW={W[i]:g}"
            lines.append(f'  p{i} [shape={shape}, label="({self.ts.names[q]},{s}){note}"];')
        for u, es in enumerate(self.succ):
            for v, a, w in es:
                lines.append(f'  p{u} -> p{v} [label="{a}/{w:g}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_product(ts: TransitionSystem, fsa: Fsa, stop_at_acceptance: bool = False) -> ProductAutomaton:
    """Reachable part of ``ts x fsa``, states numbered in BFS order.

    With ``stop_at_acceptance`` accepting states get no outgoing
    transitions, so every maximal run ends the first time the
    specification is met.
    """
    if tuple(ts.ap) != tuple(fsa.ap):
        raise ValueError(f"AP mismatch: transition system {ts.ap} vs automaton {fsa.ap}")
    start = (ts.q0, fsa.initial)
    index = {start: 0}
    states = [start]
    succ: list[tuple[tuple[int, str, float], ...]] = []
    queue = deque([start])
    while queue:
        q, s = queue.popleft()
        s_next = fsa.step(s, ts.labels[q])
        edges = []
        if stop_at_acceptance and s_next in fsa.accepting:
            succ.append(())
            continue
        for t in ts.successors[q]:
            key = (t.dst, s_next)
            if key not in index:
                index[key] = len(states)
                states.append(key)
                queue.append(key)
            edges.append((index[key], t.action, t.weight))
        succ.append(tuple(edges))
    accepting = frozenset(
        i for i, (q, s) in enumerate(states) if fsa.step(s, ts.labels[q]) in fsa.accepting
    )
    return ProductAutomaton(ts, fsa, tuple(states), tuple(succ), accepting)


def select_target(p: ProductAutomaton) -> int:
    """Reachable accepting state farthest from the initial state.

    Ties go to the smallest state index.  Raises
    :class:`InfeasibleSpecification` if no accepting state is reachable.
    """
    dist = nx.single_source_dijkstra_path_length(p.graph, p.initial, weight="weight")
    best = None
    for chi in sorted(p.accepting):
        if chi in dist and (best is None or dist[chi] > dist[best]):
            best = chi
    if best is None:
        raise InfeasibleSpecification()
    return best


def compute_potential(p: ProductAutomaton, target: int | None = None) -> tuple[float, ...]:
    """Weighted distance from every state to ``target`` (``inf`` if unreachable)."""
    if target is None:
        target = p.target
    dist = nx.single_source_dijkstra_path_length(p.graph.reverse(copy=False), target, weight="weight")
    return tuple(float(dist.get(chi, UNREACHABLE)) for chi in range(p.n_states))


def reach_neighborhood(p: ProductAutomaton, chi: int, n: int) -> frozenset[int]:
    """States reachable from ``chi`` in at most ``n`` transitions."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return frozenset(nx.single_source_shortest_path_length(p.graph, chi, cutoff=n))


def backward_neighborhood(p: ProductAutomaton, chi: int, n: int) -> frozenset[int]:
    """States from which ``chi`` is reachable in at most ``n`` transitions."""
    return frozenset(nx.single_source_shortest_path_length(p.graph.reverse(copy=False), chi, cutoff=n))


def constrained_neighborhood(p: ProductAutomaton, chi: int, n: int) -> frozenset[int]:
    ball = reach_neighborhood(p, chi, n)
    if p.target in ball:
        return frozenset({p.target})
    return ball


def iter_accepting_runs(p: ProductAutomaton) -> Iterator[Run]:
    """Simple paths from the initial state to an accepting state.

    A run ends at the first accepting state it meets.  Yields in
    lexicographic order of the state-index sequence.
    """
    live = p.co_accepting
    if p.initial not in live:
        return
    nbrs = [sorted({v for v, _, _ in es if v in live}) for es in p.succ]
    path = [p.initial]
    on_path = {p.initial}
    stack = [iter(nbrs[p.initial])]
    if p.initial in p.accepting:
        yield Run(tuple(path), p.project(path))
        return
    while stack:
        nxt = next(stack[-1], None)
        if nxt is None:
            stack.pop()
            on_path.discard(path.pop())
            continue
        if nxt in on_path:
            continue
        path.append(nxt)
        on_path.add(nxt)
        if nxt in p.accepting:
            yield Run(tuple(path), p.project(path))
            stack.append(iter(()))
        else:
            stack.append(iter(nbrs[nxt]))


def enumerate_accepting_runs(p: ProductAutomaton, limit: int | None = None) -> list[Run]:
    runs = []
    for run in iter_accepting_runs(p):
        runs.append(run)
        if limit is not None and len(runs) > limit:
            raise RuntimeError(f"more than {limit} accepting runs")
    return runs


def finite_paths(
    p: ProductAutomaton,
    chi: int,
    b: int,
    forbidden: frozenset[int] | set[int] = frozenset(),
    simple: bool = False,
) -> list[tuple[int, ...]]:
    """All paths of exactly ``b`` transitions from ``chi``.

    States after the first must avoid ``forbidden``.  A path that reaches
    the target stops there, so it may be shorter than ``b``.  With
    ``simple`` no state may repeat.
    """
    if b < 1:
        raise ValueError("horizon must be at least 1")
    target = p.target
    nbrs = [p.neighbors(c) for c in range(p.n_states)]
    out: list[tuple[int, ...]] = []

    def extend(path: list[int]) -> None:
        if path[-1] == target and len(path) > 1:
            out.append(tuple(path))
            return
        if len(path) == b + 1:
            out.append(tuple(path))
            return
        for v in nbrs[path[-1]]:
            if v in forbidden or (simple and v in path):
                continue
            path.append(v)
            extend(path)
            path.pop()

    extend([chi])
    return out


def greedy_descent(p: ProductAutomaton, chi: int, steps: int) -> list[int]:
    """Follow strictly decreasing ``W`` for up to ``steps`` transitions.

    Picks the neighbor minimizing ``weight + W`` (a shortest-path step),
    smallest index on ties.  Stops at the target.
    """
    W = p.potential
    path = [chi]
    while len(path) <= steps and path[-1] != p.target:
        u = path[-1]
        best = None
        for v, _, w in sorted(p.succ[u]):
            if W[v] < W[u] and (best is None or (w + W[v], v) < best):
                best = (w + W[v], v)
        if best is None:
            break
        path.append(best[1])
    return path


def dump_json(obj) -> str:
    return json.dumps(obj.to_json(), indent=2, sort_keys=True)
