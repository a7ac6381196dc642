"""Gradient coding over the reals via polynomial embedding.

Each gradient g_k is attached to a monic polynomial f_k whose roots are the
evaluation points of the rows *not* computing g_k.  A row's message is the
evaluation of h(x) = sum_k g_k f_k(x) at that row's point, so the leading
coefficient of h is the sum of all gradients and can be read off from any
`threshold` distinct evaluations.  Balanced mask columns keep every f_k at
the same degree, which is what makes the leading coefficient the decode
target; unbalanced masks are rejected at construction.
"""

from dataclasses import dataclass, field

import numpy as np

from . import interp
from .assignment import (ClusterLayout, MaskMatrix, cluster_split, cyclic_mask,
                         validate_orders, virtual_expand)
from .errors import DecodingError, NotEnoughMessages

_COND_LIMIT = 1e16


@dataclass(frozen=True)
class CodedMessage:
    """One worker-to-PS payload: the evaluation of h at the source row's point."""

    row: int
    value: np.ndarray


@dataclass(frozen=True)
class GcCode:
    """A gradient code instance: mask, evaluation points, generator matrix."""

    mask: MaskMatrix
    alphas: np.ndarray
    generator: np.ndarray = field(repr=False)  # generator[i, k] = f_k(alpha_i)

    @classmethod
    def build(cls, mask, alphas=None):
        n = mask.n_rows
        if alphas is None:
            alphas = interp.chebyshev_nodes(n)
        alphas = np.asarray(alphas, dtype=interp.LONG)
        if len(alphas) != n or len(np.unique(alphas)) != n:
            raise DecodingError("evaluation points must be distinct, one per row")
        gen = np.empty((n, mask.n_gradients), dtype=interp.LONG)
        for k in range(mask.n_gradients):
            zero_rows = np.nonzero(mask.bits[:, k] == 0)[0]
            gen[:, k] = np.prod(alphas[:, None] - alphas[zero_rows][None, :], axis=1)
        return cls(mask, alphas, gen)

    @property
    def degree(self):
        return self.mask.n_rows - self.mask.column_sum

    @property
    def threshold(self):
        """Messages needed to recover the gradient sum from any distinct rows."""
        return self.degree + 1


def gc_encode(code, partials, row):
    """Encode row `row`: sum of f_k(alpha_row) * g_k over the row's support.

    Only gradients in the row's support are read, so entries of `partials`
    outside it may be absent or poisoned.
    """
    sup = code.mask.support(row)
    for k in sup:
        if partials[k] is None:
            raise ValueError(f"row {row} requires partial gradient {k}")
    acc = None
    for k in sup:
        term = code.generator[row, k] * np.atleast_1d(np.asarray(partials[k], dtype=interp.LONG))
        acc = term if acc is None else acc + term
    return CodedMessage(row, np.asarray(acc, dtype=float))


def _dedup_rows(received):
    seen = {}
    for msg in received:
        if msg.row not in seen:
            seen[msg.row] = np.atleast_1d(np.asarray(msg.value, dtype=float))
    return seen


def gc_decode(code, received):
    """Recover sum_k g_k from at least `threshold` messages with distinct rows.

    Raises NotEnoughMessages below the threshold.  When more messages than
    needed are available, a Leja-ordered subset is used to keep the divided
    difference well conditioned.
    """
    by_row = _dedup_rows(received)
    need = code.threshold
    if len(by_row) < need:
        raise NotEnoughMessages(f"have {len(by_row)} distinct messages, need {need}")
    rows = np.array(sorted(by_row))
    pts = code.alphas[rows]
    if len(rows) > need:
        keep = interp.leja_order(pts)[:need]
        rows, pts = rows[keep], pts[keep]
    vals = np.stack([by_row[int(r)] for r in rows]).astype(interp.LONG)
    w = interp.barycentric_weights(pts)
    lead = np.asarray((w[:, None] * vals).sum(axis=0), dtype=float)
    # cheap amplification estimate: float64 payload noise times sum |w_i y_i|
    cond = float((np.abs(w)[:, None] * np.abs(vals)).sum()
                 / max(np.abs(lead).sum(), 1e-300))
    if not np.isfinite(lead).all() or cond * 2.3e-16 > 1e-2:
        raise DecodingError(
            f"point subset too ill-conditioned to decode (amplification {cond:.1e})",
            condition=cond)
    return lead


def gc_decode_coeffs(code, rows, rtol=1e-6):
    """Combination coefficients a_k with sum_k a_k c_k = (1/K) sum_k g_k.

    Solved against the generator matrix, independently of the interpolation
    path, so the two decoders cross-check each other.  Raises DecodingError
    when no exact combination exists for the given rows.
    """
    rows = sorted(set(int(r) for r in rows))
    if not rows:
        raise NotEnoughMessages("no rows supplied")
    K = code.mask.n_gradients
    gen = np.asarray(code.generator, dtype=float)[rows]
    target = np.full(K, 1.0 / K)
    coeffs, *_ = np.linalg.lstsq(gen.T, target, rcond=None)
    residual = float(np.linalg.norm(gen.T @ coeffs - target))
    if residual > rtol:
        raise DecodingError(
            f"rows {rows} admit no exact recovery combination (residual {residual:.2e})",
            condition=residual)
    return {row: float(a) for row, a in zip(rows, coeffs)}


def decodable_rows(code, rows, rtol=1e-6):
    """Whether the gradient sum is recoverable from exactly these rows."""
    try:
        gc_decode_coeffs(code, rows, rtol=rtol)
        return True
    except (DecodingError, NotEnoughMessages):
        return False


@dataclass(frozen=True)
class CorrelatedPlan:
    """Multi-message GC where consecutive messages reuse recent computations.

    Per cluster, an inner code of load m over the cluster's gradients defines
    K_c coded messages; worker i's j-th transmission is inner message
    (i + j) mod K_c, available after m + j computations.  The same inner
    message can be sent by several workers, so decoding counts distinct
    inner messages.
    """

    k: int
    r: int
    m: int
    layout: ClusterLayout
    inner: GcCode

    @property
    def window(self):
        """Messages per worker: l = r - m + 1."""
        return self.r - self.m + 1

    @property
    def threshold(self):
        """Distinct inner messages required per cluster."""
        return self.inner.threshold

    def inner_id(self, worker, msg):
        """Global inner-message id carried by a worker's msg-th transmission."""
        size = self.layout.cluster_size
        local = (self.layout.local_index(worker) + msg) % size
        return self.layout.cluster_of(worker) * size + local

    @property
    def send_table(self):
        """l x K table; column i lists worker i's inner-message ids in order."""
        return np.array([[self.inner_id(w, j) for w in range(self.k)]
                         for j in range(self.window)])

    def message_units(self, msg):
        """Computations finished before transmission msg (0-based) is ready."""
        return self.m + msg

    def decode_cluster(self, messages):
        return gc_decode(self.inner, messages)


def mmc_correlated_plan(k, r, m, clusters=1):
    """Build the correlated multi-message design for (K, r, m, P)."""
    layout = cluster_split(k, clusters, r)
    if not 1 <= m <= r:
        raise ValueError(f"message order m={m} must satisfy 1 <= m <= r={r}")
    inner = GcCode.build(cyclic_mask(layout.cluster_size, m))
    return CorrelatedPlan(k, r, m, layout, inner)


@dataclass(frozen=True)
class UncorrelatedPlan:
    """Multi-message GC via virtual workers: every message is its own row."""

    k: int
    r: int
    orders: tuple
    layout: ClusterLayout
    code: GcCode  # per-cluster code over the expanded mask

    @property
    def window(self):
        return len(self.orders)

    @property
    def threshold(self):
        """Messages required per cluster: K_c*l - sum(orders) + 1."""
        return self.code.threshold

    def row_for(self, worker, msg):
        """Expanded-mask row of a worker's msg-th transmission (ascending order)."""
        l = self.window
        return self.layout.local_index(worker) * l + (l - 1 - msg)

    def message_units(self, msg):
        return self.orders[msg]

    def decode_cluster(self, messages):
        return gc_decode(self.code, messages)


def mmc_uncorrelated_plan(k, r, orders, clusters=1):
    """Build the uncorrelated multi-message design for (K, r, orders, P)."""
    layout = cluster_split(k, clusters, r)
    orders = validate_orders(orders, r)
    base = cyclic_mask(layout.cluster_size, r)
    code = GcCode.build(virtual_expand(base, orders))
    return UncorrelatedPlan(k, r, orders, layout, code)


def hybrid_decode(plan, received, cluster_totals):
    """Decode with the fast-worker fallback.

    A cluster is recovered either from `threshold` coded messages or from
    any complete cluster sum a fully-finished worker sent in place of its
    last coded message.  `received` holds (cluster, CodedMessage) pairs;
    `cluster_totals` maps cluster id to the transmitted sum.
    """
    per_cluster = {p: [] for p in range(plan.layout.n_clusters)}
    for cluster, msg in received:
        per_cluster[cluster].append(msg)
    out = None
    for p in range(plan.layout.n_clusters):
        if p in cluster_totals:
            part = np.atleast_1d(np.asarray(cluster_totals[p], dtype=float))
        else:
            part = plan.decode_cluster(per_cluster[p])
        out = part if out is None else out + part
    return out
