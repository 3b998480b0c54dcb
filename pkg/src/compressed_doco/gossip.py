"""Choco-gossip compressed averaging.

Two interchangeable engines keep the replica bookkeeping:

* :class:`NaiveGossipState` -- every learner stores a copy of the replica
  ``xhat_j`` of each neighbour ``j`` (and its own), ``deg(i) + 1`` vectors;
* :class:`EfficientGossipState` -- every learner stores only ``xhat_i`` and
  the weighted sum ``s_i = sum_j W_ij xhat_j``.

Both expose the same two primitives, which the online algorithms reuse:
``mix`` (consensus move along replica differences) and ``absorb`` (apply
one round of broadcast compressed messages to the replicas).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .compress import CompressedPayload, CompressorKind, compress_rows
from .errors import InvalidStepSize
from .topology import GossipMatrix

__all__ = [
    "NaiveGossipState",
    "EfficientGossipState",
    "make_state",
    "choco_step",
    "choco_step_efficient",
    "consensus_error",
    "global_mean",
]

ENGINES = ("naive", "efficient")


def _check_gamma(gamma: float) -> None:
    if not (0.0 < gamma <= 1.0):
        raise InvalidStepSize(f"consensus step size must lie in (0, 1], got {gamma}")


@dataclass
class NaiveGossipState:
    """Decisions ``x`` (n, d) and held replicas ``reps[h, j]`` (n, n, d).

    ``reps[h, j]`` is learner ``h``'s copy of ``xhat_j``; it is meaningful
    only where ``holds[h, j]`` (``j`` is ``h`` or a neighbour of ``h``).
    """

    x: np.ndarray
    reps: np.ndarray
    holds: np.ndarray

    @classmethod
    def init(cls, x, P: GossipMatrix, xhat=None) -> "NaiveGossipState":
        x = np.array(x, dtype=float)
        n, d = x.shape
        holds = (P.w != 0) | np.eye(n, dtype=bool)
        base = np.zeros((n, d)) if xhat is None else np.asarray(xhat, dtype=float)
        reps = np.where(holds[:, :, None], base[None, :, :], 0.0)
        return cls(x, reps, holds)

    def copy(self) -> "NaiveGossipState":
        return NaiveGossipState(self.x.copy(), self.reps.copy(), self.holds)

    def own(self) -> np.ndarray:
        """Each learner's own replica ``xhat_i``."""
        return np.einsum("iid->id", self.reps).copy()

    def mix(self, base: np.ndarray, P: GossipMatrix, gamma: float) -> np.ndarray:
        """``base_i + gamma * sum_j W_ij (xhat_j - xhat_i)`` from held copies."""
        own = np.einsum("iid->id", self.reps)
        diff = self.reps - own[:, None, :]
        return base + gamma * np.einsum("ij,ijd->id", P.w, diff)

    def absorb(self, q: np.ndarray, P: GossipMatrix) -> None:
        # every holder of j applies the same broadcast q_j
        self.reps = np.where(self.holds[:, :, None], self.reps + q[None, :, :], self.reps)

    def replicas_consistent(self) -> bool:
        n = self.reps.shape[0]
        for j in range(n):
            holders = np.flatnonzero(self.holds[:, j])
            first = self.reps[holders[0], j]
            if any(not np.array_equal(self.reps[h, j], first) for h in holders[1:]):
                return False
        return True


@dataclass
class EfficientGossipState:
    """Decisions ``x``, own replicas ``xhat`` and sums ``s = W xhat``, each (n, d)."""

    x: np.ndarray
    xhat: np.ndarray
    s: np.ndarray

    @classmethod
    def init(cls, x, P: GossipMatrix, xhat=None) -> "EfficientGossipState":
        x = np.array(x, dtype=float)
        xhat = np.zeros_like(x) if xhat is None else np.array(xhat, dtype=float)
        return cls(x, xhat, P.w @ xhat)

    def copy(self) -> "EfficientGossipState":
        return EfficientGossipState(self.x.copy(), self.xhat.copy(), self.s.copy())

    def own(self) -> np.ndarray:
        return self.xhat.copy()

    def mix(self, base: np.ndarray, P: GossipMatrix, gamma: float) -> np.ndarray:
        return base + gamma * (self.s - self.xhat)

    def absorb(self, q: np.ndarray, P: GossipMatrix) -> None:
        self.xhat = self.xhat + q
        self.s = self.s + P.w @ q


def make_state(engine: str, x, P: GossipMatrix, xhat=None):
    if engine == "naive":
        return NaiveGossipState.init(x, P, xhat)
    if engine == "efficient":
        return EfficientGossipState.init(x, P, xhat)
    raise ValueError(f"unknown gossip engine {engine!r}; expected one of {ENGINES}")


def _step(state, P, gamma, kind, rngs, mode):
    _check_gamma(gamma)
    new = state.copy()
    new.x = new.mix(new.x, P, gamma)
    q, cost = compress_rows(kind, new.x - new.own(), rngs, mode=mode)
    new.absorb(q, P)
    messages = [CompressedPayload(q[i], cost[i]) for i in range(q.shape[0])]
    return new, messages


def choco_step(state: NaiveGossipState, P: GossipMatrix, gamma: float, kind: CompressorKind,
               rngs=None, *, mode: str = "expected"):
    """One synchronous Choco-gossip round on the per-neighbour replica form.

    Mix along replica differences, then every learner broadcasts
    ``q_i = C(x_i' - xhat_i)`` and all holders add it to their copy of
    ``xhat_i``.  ``rngs[i]`` is learner ``i``'s compressor stream.
    Returns ``(new_state, messages)`` with one payload per learner.
    """
    return _step(state, P, gamma, kind, rngs, mode)


def choco_step_efficient(state: EfficientGossipState, P: GossipMatrix, gamma: float,
                         kind: CompressorKind, rngs=None, *, mode: str = "expected"):
    """Same round as :func:`choco_step` on the three-variable form."""
    return _step(state, P, gamma, kind, rngs, mode)


def global_mean(x: np.ndarray) -> np.ndarray:
    """Coordinate-wise mean of the rows of ``x`` with compensated summation."""
    x = np.asarray(x, dtype=float)
    return np.array([math.fsum(col) for col in x.T]) / x.shape[0]


def consensus_error(state) -> tuple[float, float]:
    """``(sum_i ||x_i - mean||^2, sum_i ||x_i - xhat_i||^2)``."""
    x = state.x
    dev = x - global_mean(x)
    comp = x - state.own()
    return float(np.sum(dev * dev)), float(np.sum(comp * comp))
