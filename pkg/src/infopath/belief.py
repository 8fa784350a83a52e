"""Estimate of the hidden occupancy vector, the sensor model and entropies.

Two belief representations share one interface:

* ``joint``: a pmf over all ``2**n`` occupancy vectors.  Outcome index
  ``k`` encodes ``s_j = (k >> j) & 1``.  Updates are exact.
* ``factored``: one marginal ``Pr(s_j = 1)`` per cell.  Each update
  computes the exact posterior marginals under the current product-form
  prior and then keeps only those marginals.

All logarithms are base 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

EPS = 1e-12
JOINT_CAP = 12


class InconsistentReport(ValueError):
    """The observed report has zero probability under the current belief."""


# ---------------------------------------------------------------------------
# information measures

def as_pmf(p, tol: float = 1e-9) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise ValueError("probabilities must be nonnegative")
    if abs(p.sum() - 1.0) > tol:
        raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
    return p


def _plogp(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    nz = p > 0
    out[nz] = p[nz] * np.log2(p[nz])
    return out


def entropy(p) -> float:
    """Shannon entropy in bits; ``0 log 0`` counts as 0."""
    return float(-_plogp(as_pmf(p)).sum())


def binary_entropy(m):
    """Elementwise entropy of Bernoulli(m), vectorized."""
    m = np.asarray(m, dtype=float)
    return -(_plogp(m) + _plogp(1.0 - m))


def conditional_entropy(joint) -> float:
    """H(X|Y) for a joint pmf laid out as ``joint[x, y]``."""
    pxy = as_pmf(joint)
    py = pxy.sum(axis=0)
    # H(X|Y) = H(X,Y) - H(Y)
    return float(-_plogp(pxy).sum() + _plogp(py).sum())


def mutual_information(joint) -> float:
    """I(X;Y) for ``joint[x, y]``, summed directly over the joint."""
    pxy = as_pmf(joint)
    px = pxy.sum(axis=1, keepdims=True)
    py = pxy.sum(axis=0, keepdims=True)
    nz = pxy > 0
    return float(np.sum(pxy[nz] * np.log2(pxy[nz] / (px * py)[nz])))


# ---------------------------------------------------------------------------
# sensor model

@dataclass(frozen=True)
class SensorModel:
    """Range-decayed detection with a constant false-alarm rate.

    ``neighborhoods[q]`` lists ``(cell, d_M)`` for every cell observable
    from region ``q``, starting with ``(q, 0.0)``.
    """

    mu0: float
    lam: float
    r: float
    neighborhoods: tuple[tuple[tuple[int, float], ...], ...]

    def __post_init__(self) -> None:
        if not (0 <= self.mu0 <= 1 and 0 <= self.r <= 1):
            raise ValueError("mu0 and r must lie in [0, 1]")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        for q, nb in enumerate(self.neighborhoods):
            if (q, 0.0) not in nb:
                raise ValueError(f"region {q} must observe itself at distance 0")

    @classmethod
    def from_transition_system(cls, ts, mu0: float = 0.9, lam: float = 0.01, r: float = 0.01) -> "SensorModel":
        nbs = tuple(tuple(ts.observation_neighborhood(q)) for q in range(ts.n_regions))
        return cls(mu0, lam, r, nbs)

    @property
    def n_cells(self) -> int:
        return len(self.neighborhoods)

    def detection(self, q: int) -> tuple[np.ndarray, np.ndarray]:
        """Observed cells and their detection probabilities from region ``q``."""
        cells = np.array([c for c, _ in self.neighborhoods[q]], dtype=int)
        d = np.array([dm for _, dm in self.neighborhoods[q]], dtype=float)
        return cells, self.mu0 * np.exp(-self.lam * d)

    def to_json(self) -> dict:
        return {
            "mu0": self.mu0,
            "lam": self.lam,
            "r": self.r,
            "neighborhoods": [[[c, d] for c, d in nb] for nb in self.neighborhoods],
        }

    @classmethod
    def from_json(cls, data: dict) -> "SensorModel":
        nbs = tuple(tuple((int(c), float(d)) for c, d in nb) for nb in data["neighborhoods"])
        return cls(float(data["mu0"]), float(data["lam"]), float(data["r"]), nbs)


def alert_likelihood(model: SensorModel, s, q: int, y: int) -> float:
    """Pr(report = y | s, robot at q).

    ``s`` may be a 0/1 occupancy vector or a vector of independent
    marginals; on 0/1 input the expression reduces to the piecewise rule
    (``r`` when nothing observable is occupied, else a noisy-OR of the
    occupied cells).
    """
    s = np.asarray(s, dtype=float)
    cells, mu = model.detection(q)
    m = s[cells]
    p1 = model.r * np.prod(1.0 - m) + 1.0 - np.prod(1.0 - mu * m)
    return float(p1 if y else 1.0 - p1)


def outcome_bits(n: int) -> np.ndarray:
    k = np.arange(1 << n)
    return ((k[:, None] >> np.arange(n)) & 1).astype(np.int8)


def joint_alert_table(model: SensorModel, q: int, n: int | None = None) -> np.ndarray:
    """Pr(y = 1 | s, q) for every outcome of a joint belief, piecewise rule."""
    n = model.n_cells if n is None else n
    bits = outcome_bits(n)
    cells, mu = model.detection(q)
    sub = bits[:, cells].astype(float)
    miss = np.prod(1.0 - mu * sub, axis=1)
    return np.where(sub.any(axis=1), 1.0 - miss, model.r)


# ---------------------------------------------------------------------------
# beliefs

@dataclass(frozen=True, eq=False)
class Belief:
    mode: str
    probs: np.ndarray
    n_cells: int

    def __post_init__(self) -> None:
        if self.mode not in ("joint", "factored"):
            raise ValueError(f"unknown belief mode {self.mode!r}")
        probs = np.array(self.probs, dtype=float)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        if self.mode == "joint":
            if probs.shape != (1 << self.n_cells,):
                raise ValueError("joint belief needs 2**n_cells probabilities")
            as_pmf(probs)
        else:
            if probs.shape != (self.n_cells,):
                raise ValueError("factored belief needs one marginal per cell")
            if np.any(probs < 0) or np.any(probs > 1):
                raise ValueError("marginals must lie in [0, 1]")

    def marginals(self) -> np.ndarray:
        if self.mode == "factored":
            return self.probs.copy()
        return self.probs @ outcome_bits(self.n_cells)

    def to_json(self) -> dict:
        return {"mode": self.mode, "n_cells": self.n_cells, "probs": self.probs.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "Belief":
        return cls(data["mode"], np.asarray(data["probs"]), int(data["n_cells"]))


def uniform_belief(n_cells: int, mode: str = "factored", p: float = 0.5, cap: int = JOINT_CAP) -> Belief:
    """Independent Bernoulli(p) prior in either representation."""
    if mode == "factored":
        return Belief("factored", np.full(n_cells, p), n_cells)
    if n_cells > cap:
        raise ValueError(f"joint belief over {n_cells} cells exceeds the cap of {cap}")
    return product_joint(np.full(n_cells, p))


def product_joint(marginals: Sequence[float]) -> Belief:
    m = np.asarray(marginals, dtype=float)
    bits = outcome_bits(len(m))
    probs = np.prod(np.where(bits == 1, m, 1.0 - m), axis=1)
    return Belief("joint", probs / probs.sum(), len(m))


def factored_branch(m: np.ndarray, cells: np.ndarray, mu: np.ndarray, r: float):
    """Report probability and posterior marginals for both report values.

    ``m`` has shape ``(..., n_cells)``.  Returns ``(p1, post1, post0)``
    where ``p1`` has the leading shape and the posteriors the shape of
    ``m``.  Only the observed ``cells`` change.
    """
    sub = m[..., cells]
    miss = 1.0 - mu * sub
    free = 1.0 - sub
    p1 = r * np.prod(free, axis=-1) + 1.0 - np.prod(miss, axis=-1)
    k = len(cells)
    # likelihoods with cell j forced occupied, the rest at their marginals
    like1 = np.empty_like(sub)
    for j in range(k):
        others = [i for i in range(k) if i != j]
        like1[..., j] = 1.0 - (1.0 - mu[j]) * np.prod(miss[..., others], axis=-1)
    p1e = p1[..., None]
    # a zero-probability branch yields nan here; callers never follow it
    with np.errstate(invalid="ignore", divide="ignore"):
        new1 = np.clip(like1 * sub / p1e, EPS, 1.0 - EPS)
        new0 = np.clip((1.0 - like1) * sub / (1.0 - p1e), EPS, 1.0 - EPS)
    post1 = m.copy()
    post0 = m.copy()
    post1[..., cells] = new1
    post0[..., cells] = new0
    return p1, post1, post0


def predictive_report_pmf(b: Belief, model: SensorModel, q: int) -> np.ndarray:
    """``[Pr(y=0), Pr(y=1)]`` for a report taken at region ``q``."""
    if b.mode == "joint":
        p1 = float(b.probs @ joint_alert_table(model, q, b.n_cells))
    else:
        cells, mu = model.detection(q)
        p1 = float(factored_branch(b.probs[None, :], cells, mu, model.r)[0][0])
    return np.array([1.0 - p1, p1])


def bayes_update(b: Belief, model: SensorModel, q: int, y: int) -> Belief:
    """Posterior after observing report ``y`` at region ``q``."""
    if b.mode == "joint":
        f1 = joint_alert_table(model, q, b.n_cells)
        like = f1 if y else 1.0 - f1
        post = like * b.probs
        z = post.sum()
        if z <= 0:
            raise InconsistentReport("inconsistent report")
        return Belief("joint", post / z, b.n_cells)
    cells, mu = model.detection(q)
    p1, post1, post0 = factored_branch(b.probs[None, :], cells, mu, model.r)
    if (p1[0] if y else 1.0 - p1[0]) <= 0:
        raise InconsistentReport("inconsistent report")
    return Belief("factored", (post1 if y else post0)[0], b.n_cells)


def belief_entropy(b: Belief) -> float:
    if b.mode == "joint":
        return entropy(b.probs)
    return float(binary_entropy(b.probs).sum())


def clamp_marginal(p: float) -> float:
    return min(max(p, EPS), 1.0 - EPS)


def bits_entropy_bound(b: Belief) -> float:
    return float(b.n_cells) if b.mode == "factored" else math.log2(len(b.probs))
