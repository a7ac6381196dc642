"""Lagrange-coded computation of X^T X theta, with a tunable polynomial count.

The dataset rows are split into K submatrices.  With n polynomials
(n | K, n | r), each polynomial interpolates K/n submatrices at shared
anchor points; workers hold coded submatrices (evaluations at their own
points) and return scalar-weighted products, one message per n coded
computations.  Interpolating the degree-(2K/n - 2) result polynomial from
any 2K/n - 1 received points and summing it over the anchors yields
X^T X theta:

  n = r reproduces classic single-message Lagrange coding (threshold 2K/r - 1);
  n = 1 is the fully multi-message variant (threshold 2K - 1);
  n = 2 halves the transmission count of the n = 1 scheme.

A plan stores (N/K) * d * K * r/n coded numbers; encoding happens once, the
per-iteration work is evaluation only.
"""

from dataclasses import dataclass, field

import numpy as np

from . import interp
from .errors import DecodingError, NotEnoughMessages
from .gradient import pad_rows

_LAYER_STAGGER = 3  # de-clusters the per-worker point columns across layers


@dataclass(frozen=True)
class LccMessage:
    """Evaluation of the result polynomial at one worker point."""

    point: int  # index into the plan's evaluation points
    value: np.ndarray


@dataclass(frozen=True)
class LccPlan:
    k: int
    r: int
    n_poly: int
    anchors: np.ndarray
    points: np.ndarray  # sorted worker evaluation points, disjoint from anchors
    encoded: np.ndarray = field(repr=False)  # (n_points, n_poly, N/K, d)
    xty: np.ndarray = field(repr=False)

    @property
    def slots_per_worker(self):
        return self.r // self.n_poly

    @property
    def threshold(self):
        """Distinct evaluations required: 2K/n - 1."""
        return 2 * (self.k // self.n_poly) - 1

    @property
    def n_points(self):
        return len(self.points)

    def point_index(self, worker, slot):
        """Evaluation point used by a worker's slot-th message.

        Worker columns are strided across the sorted points so that any
        union of per-worker prefixes stays spread out over the interval.
        """
        if not 0 <= slot < self.slots_per_worker:
            raise IndexError(f"slot {slot} out of range for r/n = {self.slots_per_worker}")
        layer = (_LAYER_STAGGER * worker + slot) % self.slots_per_worker
        return worker + self.k * layer


def _interleaved_points(n_anchors, n_points):
    """Chebyshev grid split into anchor and worker points, interleaved."""
    total = n_anchors + n_points
    grid = np.sort(interp.chebyshev_nodes(total))
    apos = np.round((np.arange(n_anchors) + 0.5) * total / n_anchors - 0.5).astype(int)
    apos = np.unique(np.clip(apos, 0, total - 1))
    if len(apos) != n_anchors:
        raise DecodingError("could not interleave distinct anchor points")
    return grid[apos], np.delete(grid, apos)


def lcc_build(data, k, r, n_poly):
    """Encode the dataset once for the (K, r, n) family member.

    Rows are zero-padded to a multiple of K (padding is gradient-neutral).
    """
    if n_poly < 1 or k % n_poly != 0:
        raise ValueError(f"polynomial count n={n_poly} must divide K={k}")
    if r % n_poly != 0:
        raise ValueError(f"polynomial count n={n_poly} must divide r={r}")
    if not 1 <= r <= k:
        raise ValueError(f"need 1 <= r <= K, got r={r}, K={k}")
    data = pad_rows(data, k)
    per_group = k // n_poly
    anchors, points = _interleaved_points(per_group, k * (r // n_poly))
    subs = data.X.reshape(k, data.n_rows // k, data.n_features)
    groups = subs.reshape(n_poly, per_group, subs.shape[1], subs.shape[2]).astype(interp.LONG)
    wa = interp.barycentric_weights(anchors)
    encoded = np.empty((len(points), n_poly) + subs.shape[1:], dtype=float)
    for p, z in enumerate(points):
        coef = wa / (z - anchors)
        coef = coef / coef.sum()
        for q in range(n_poly):
            encoded[p, q] = np.asarray(np.tensordot(coef, groups[q], axes=(0, 0)), dtype=float)
    xty = data.X.T @ data.y
    return LccPlan(k, r, n_poly, np.asarray(anchors), np.asarray(points), encoded, xty)


def eval_poly(plan, q, z):
    """Evaluate coding polynomial q at z (test hook; f_q(anchor_i) = submatrix)."""
    wa = interp.barycentric_weights(plan.anchors)
    diff = np.asarray(z, dtype=interp.LONG) - plan.anchors
    hit = np.nonzero(diff == 0)[0]
    per_group = plan.k // plan.n_poly
    # reconstruct group q's submatrices from any full set of coded points
    rows = plan.encoded.shape[2]
    d = plan.encoded.shape[3]
    sel = [plan.point_index(w, 0) for w in range(plan.k)][: 2 * per_group]
    vals = plan.encoded[sel, q].reshape(len(sel), rows * d)
    rec = interp.interpolate_at(plan.points[sel], vals, plan.anchors)
    if hit.size:
        return rec[hit[0]].reshape(rows, d)
    out = interp.interpolate_at(plan.anchors, rec, [z])
    return out[0].reshape(rows, d)


def lcc_compute(plan, worker, slot, theta):
    """Worker-side computation: sum_q f_q(beta)^T f_q(beta) theta.

    Costs n submatrix multiply pairs, i.e. n computation units in the
    timing model.
    """
    theta = np.asarray(theta, dtype=float)
    p = plan.point_index(worker, slot)
    acc = np.zeros(plan.encoded.shape[3])
    for q in range(plan.n_poly):
        coded = plan.encoded[p, q]
        acc += coded.T @ (coded @ theta)
    return LccMessage(p, acc)


def lcc_decode(plan, received):
    """Recover X^T X theta from at least `threshold` distinct evaluations.

    The result polynomial is interpolated through the received points and
    summed over the anchors; which workers sent the points is irrelevant.
    """
    by_point = {}
    for msg in received:
        if msg.point not in by_point:
            by_point[msg.point] = np.asarray(msg.value, dtype=float)
    need = plan.threshold
    if len(by_point) < need:
        raise NotEnoughMessages(f"have {len(by_point)} distinct evaluations, need {need}")
    idx = np.array(sorted(by_point))
    pts = plan.points[idx]
    if len(idx) > need:
        keep = interp.leja_order(pts)[:need]
        idx, pts = idx[keep], pts[keep]
    vals = np.stack([by_point[int(i)] for i in idx])
    at_anchors, abs_terms = interp.interpolate_at(pts, vals, plan.anchors,
                                                  with_cond=True)
    out = at_anchors.sum(axis=0)
    # amplification applied to float64 payload rounding noise
    cond = abs_terms / max(float(np.abs(out).sum()), 1e-300)
    if not np.isfinite(out).all() or cond * 2.3e-16 > 1e-2:
        raise DecodingError(
            f"point subset too ill-conditioned to decode (amplification {cond:.1e})",
            condition=cond)
    return out


def lcc_gradient(plan, received):
    """Full unnormalized gradient: decoded X^T X theta minus the fixed X^T y."""
    return lcc_decode(plan, received) - plan.xty
