"""Uncoded multi-message computation with the circular-shift schedule.

Each worker streams raw partial gradients in its assigned order; the PS
keeps the first copy of each index.  An iteration can optionally terminate
once a (1 - tolerance) fraction of the gradients has arrived, trading a
slightly stale update for completion time.
"""

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class UncodedPlan:
    """schedule[j, i] = gradient computed by worker i in position j."""

    k: int
    r: int
    schedule: np.ndarray

    def gradient_for(self, worker, position):
        return int(self.schedule[position, worker])


def uc_schedule(k, r):
    """Row j of the schedule is [0..K-1] circularly shifted left by j."""
    if not 1 <= r <= k:
        raise ValueError(f"need 1 <= r <= K, got r={r}, K={k}")
    schedule = np.empty((r, k), dtype=int)
    for j in range(r):
        schedule[j] = (np.arange(k) + j) % k
    return UncodedPlan(k, r, schedule)


@dataclass
class RecoveryState:
    """Accumulated first-arrival gradients for one iteration."""

    k: int
    dim: int
    have: np.ndarray = field(default=None)
    sums: np.ndarray = field(default=None)
    messages: int = 0
    _reported: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.have is None:
            self.have = np.zeros(self.k, dtype=bool)
        if self.sums is None:
            self.sums = np.zeros(self.dim)
        if self._reported is None:
            self._reported = np.zeros(0, dtype=int)

    @property
    def n_recovered(self):
        return int(self.have.sum())


def uc_ingest(state, worker, completed_count, plan, partials):
    """Mark the worker's first `completed_count` gradients as delivered.

    Re-deliveries are counted as transmissions but never accumulated twice.
    Returns the state for chaining.
    """
    if completed_count > plan.r:
        raise ValueError(f"worker cannot complete more than r={plan.r} computations")
    if state._reported.size == 0:
        state._reported = np.zeros(plan.k, dtype=int)
    prev = int(state._reported[worker])
    for j in range(completed_count):
        g = plan.gradient_for(worker, j)
        if not state.have[g]:
            state.have[g] = True
            state.sums = state.sums + np.asarray(partials[g], dtype=float)
    if completed_count > prev:
        state.messages += completed_count - prev
        state._reported[worker] = completed_count
    return state


def uc_complete(state, k, tolerance=0.0):
    """Completion verdict and current gradient estimate.

    Complete once ceil((1 - tolerance) * K) distinct gradients arrived; the
    estimate is the exact sum over the recovered subset (the full gradient
    when tolerance is 0 and everything arrived).
    """
    if not 0.0 <= tolerance < 1.0:
        raise ValueError("tolerance must lie in [0, 1)")
    needed = math.ceil((1.0 - tolerance) * k)
    return state.n_recovered >= needed, state.sums.copy()


def required_count(k, tolerance):
    """The K-tilde cut: ceil((1 - tolerance) * K)."""
    return math.ceil((1.0 - tolerance) * k)
