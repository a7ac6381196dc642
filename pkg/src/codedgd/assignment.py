"""Mask matrices: which partial gradients each (real or virtual) worker owns.

A mask is a binary workers x gradients matrix with balanced column sums;
balance is what makes every column polynomial of the gradient code monic of
the same degree, and therefore is enforced here rather than at decode time.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class MaskMatrix:
    """Binary assignment matrix plus each row's computation order.

    bits[i, k] == 1 iff row i computes gradient k.  row_order[i] lists row
    i's support in the order the work is performed; row i's message order
    (number of combined gradients) is len(row_order[i]).  worker_of_row maps
    virtual rows back to the real worker that transmits them.
    """

    bits: np.ndarray
    row_order: tuple
    worker_of_row: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.int8)
        if bits.ndim != 2:
            raise ValueError("mask must be two-dimensional")
        if not np.isin(bits, (0, 1)).all():
            raise ValueError("mask entries must be 0/1")
        if (bits.sum(axis=1) < 1).any():
            raise ValueError("every row must be assigned at least one gradient")
        cols = bits.sum(axis=0)
        if cols.min() != cols.max():
            raise ValueError("column sums must be balanced")
        if cols.min() == 0:
            raise ValueError("every gradient must be covered")
        for i, order in enumerate(self.row_order):
            if sorted(order) != sorted(np.nonzero(bits[i])[0]):
                raise ValueError(f"row {i} order does not match its support")
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "worker_of_row", np.asarray(self.worker_of_row, dtype=int))

    @property
    def n_rows(self):
        return self.bits.shape[0]

    @property
    def n_gradients(self):
        return self.bits.shape[1]

    @property
    def column_sum(self):
        return int(self.bits.sum(axis=0)[0])

    def support(self, row):
        return self.row_order[row]


def cyclic_mask(k, r):
    """Circulant mask: row i owns gradients i, i+1, ..., i+r-1 (mod K)."""
    if not 1 <= r <= k:
        raise ValueError(f"need 1 <= r <= K, got r={r}, K={k}")
    bits = np.zeros((k, k), dtype=np.int8)
    order = []
    for i in range(k):
        sup = tuple((i + j) % k for j in range(r))
        bits[i, list(sup)] = 1
        order.append(sup)
    return MaskMatrix(bits, tuple(order), np.arange(k))


def validate_orders(orders, r):
    """Check the nested-prefix rule: 1 <= m_0 <= ... <= m_{l-1} = r."""
    orders = tuple(int(m) for m in orders)
    if len(orders) < 1:
        raise ValueError("order vector must be nonempty")
    if orders[0] < 1:
        raise ValueError("message orders must be positive")
    if any(a > b for a, b in zip(orders, orders[1:])):
        raise ValueError("message orders must be nondecreasing")
    if orders[-1] != r:
        raise ValueError(f"last message order must equal the load r={r}")
    return orders


def virtual_expand(base, orders):
    """Add virtual-worker rows for multi-message transmission.

    For each real row, one extra row per message order m keeps only the
    first m gradients of that row's computation order (a message sent after
    the first m computations cannot involve later ones).  Rows are grouped
    per worker with the full-order row first, which reproduces the usual
    interleaved real/virtual layout.
    """
    r = len(base.row_order[0])
    if any(len(o) != r for o in base.row_order):
        raise ValueError("virtual expansion requires a uniform-load base mask")
    orders = validate_orders(orders, r)
    l = len(orders)
    k = base.n_rows
    bits = np.zeros((k * l, base.n_gradients), dtype=np.int8)
    order_out = []
    worker = np.empty(k * l, dtype=int)
    for i in range(k):
        for pos, m in enumerate(reversed(orders)):
            row = i * l + pos
            sup = base.row_order[i][:m]
            bits[row, list(sup)] = 1
            order_out.append(tuple(sup))
            worker[row] = i
    return MaskMatrix(bits, tuple(order_out), worker)


@dataclass(frozen=True)
class ClusterLayout:
    """Equal-size contiguous clusters of workers and of gradient indices."""

    n_clusters: int
    cluster_size: int

    @property
    def n_workers(self):
        return self.n_clusters * self.cluster_size

    def cluster_of(self, worker):
        return worker // self.cluster_size

    def local_index(self, worker):
        return worker % self.cluster_size

    def workers(self, p):
        lo = p * self.cluster_size
        return range(lo, lo + self.cluster_size)

    def gradients(self, p):
        lo = p * self.cluster_size
        return range(lo, lo + self.cluster_size)


def cluster_split(k, p, r):
    """Divide K workers (and the K gradients) into P equal contiguous blocks."""
    if p < 1 or k % p != 0:
        raise ValueError(f"cluster count P={p} must divide K={k}")
    size = k // p
    if r > size:
        raise ValueError(f"load r={r} cannot exceed the cluster size {size}")
    return ClusterLayout(p, size)


def save_mask_csv(mask, path):
    """Dump a mask as dense 0/1 CSV, one row per (real or virtual) worker."""
    np.savetxt(path, mask.bits, fmt="%d", delimiter=",")


def load_mask_bits(path):
    return np.loadtxt(path, delimiter=",", dtype=np.int8, ndmin=2)
