"""Uniform scheme plans consumed by the simulator, the verifier, and the CLI.

Every scheme exposes the same small surface:

  n_workers / k_gradients     population sizes
  message_units(worker)       cumulative computation units unlocking each message
  new_session()               delivery tracker that reports decode completion
  verify_decode(...)          numeric decode of a delivered message set

Completion tracking is purely combinatorial (counts of distinct information
tokens per cluster), which the polynomial constructions make exact: any
threshold-sized distinct set decodes.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NotEnoughMessages
from .gc import (CodedMessage, GcCode, gc_decode, hybrid_decode,
                 mmc_correlated_plan, mmc_uncorrelated_plan)
from .assignment import cluster_split, cyclic_mask
from .lcc import lcc_build, lcc_compute, lcc_gradient
from .uncoded import RecoveryState, UncodedPlan, required_count, uc_complete, uc_ingest, uc_schedule

TOTAL = object()  # token marking a cluster-completing message


class TokenSession:
    """Counts distinct tokens per cluster; completes when all clusters do."""

    def __init__(self, thresholds, token_of):
        self._need = list(thresholds)
        self._token_of = token_of
        self._seen = [set() for _ in thresholds]
        self._done = [n <= 0 for n in self._need]
        self._pending = sum(1 for d in self._done if not d)

    def deliver(self, worker, msg):
        """Record one delivery; returns True once every cluster is decodable."""
        cluster, token = self._token_of(worker, msg)
        if not self._done[cluster]:
            if token is TOTAL:
                self._done[cluster] = True
                self._pending -= 1
            else:
                seen = self._seen[cluster]
                if token not in seen:
                    seen.add(token)
                    if len(seen) >= self._need[cluster]:
                        self._done[cluster] = True
                        self._pending -= 1
        return self._pending == 0

    @property
    def complete(self):
        return self._pending == 0


def _check_feasible(scheme):
    session = scheme.new_session()
    ok = False
    for w in range(scheme.n_workers):
        for j in range(len(scheme.message_units(w))):
            ok = session.deliver(w, j)
    if not ok:
        raise ConfigError(
            f"{scheme.scheme_id}: plan cannot decode even with every message delivered")


@dataclass
class GcScheme:
    """Plain gradient coding, optionally applied per cluster."""

    k: int
    r: int
    clusters: int = 1
    scheme_id: str = "gc"

    def __post_init__(self):
        self.layout = cluster_split(self.k, self.clusters, self.r)
        self.code = GcCode.build(cyclic_mask(self.layout.cluster_size, self.r))
        _check_feasible(self)

    @property
    def n_workers(self):
        return self.k

    @property
    def k_gradients(self):
        return self.k

    @property
    def threshold(self):
        return self.code.threshold

    @property
    def simple_count_threshold(self):
        return self.threshold if self.clusters == 1 else None

    def message_units(self, worker):
        return (self.r,)

    def new_session(self):
        thr = [self.threshold] * self.clusters
        return TokenSession(thr, lambda w, j: (self.layout.cluster_of(w),
                                               self.layout.local_index(w)))

    def prepare(self, data):
        pass

    def closed_form(self, k_model_load=None):
        if self.clusters == 1:
            return ("worker", self.threshold)
        return None

    def verify_decode(self, delivered, partials, theta=None):
        per_cluster = [[] for _ in range(self.clusters)]
        for w, j in delivered:
            p = self.layout.cluster_of(w)
            local = [partials[g] for g in self.layout.gradients(p)]
            row = self.layout.local_index(w)
            value = _encode_row(self.code, local, row)
            per_cluster[p].append(CodedMessage(row, value))
        total = sum(gc_decode(self.code, msgs) for msgs in per_cluster)
        return np.asarray(total, dtype=float), 0


def _encode_row(code, partials, row):
    from .gc import gc_encode
    return gc_encode(code, partials, row).value


@dataclass
class GcMmCorrelatedScheme:
    """Correlated multi-message GC (shared coded messages across workers)."""

    k: int
    r: int
    m: int
    clusters: int = 1
    scheme_id: str = "gc-mm-c"

    def __post_init__(self):
        self.plan = mmc_correlated_plan(self.k, self.r, self.m, self.clusters)
        self.layout = self.plan.layout
        _check_feasible(self)

    @property
    def n_workers(self):
        return self.k

    @property
    def k_gradients(self):
        return self.k

    @property
    def threshold(self):
        return self.plan.threshold

    def message_units(self, worker):
        return tuple(self.plan.message_units(j) for j in range(self.plan.window))

    def new_session(self):
        thr = [self.threshold] * self.clusters
        size = self.layout.cluster_size

        def token(w, j):
            inner = self.plan.inner_id(w, j)
            return inner // size, inner % size

        return TokenSession(thr, token)

    def prepare(self, data):
        pass

    def closed_form(self):
        return None  # completion is set-dependent; simulation only

    def verify_decode(self, delivered, partials, theta=None):
        per_cluster = [[] for _ in range(self.clusters)]
        size = self.layout.cluster_size
        for w, j in delivered:
            inner = self.plan.inner_id(w, j)
            p = inner // size
            local = [partials[g] for g in self.layout.gradients(p)]
            value = _encode_row(self.plan.inner, local, inner % size)
            per_cluster[p].append(CodedMessage(inner % size, value))
        total = sum(self.plan.decode_cluster(msgs) for msgs in per_cluster)
        return np.asarray(total, dtype=float), 0


@dataclass
class GcMmUncorrelatedScheme:
    """Uncorrelated multi-message GC (virtual-worker expansion)."""

    k: int
    r: int
    orders: tuple
    clusters: int = 1
    scheme_id: str = "gc-mm-u"

    def __post_init__(self):
        self.plan = mmc_uncorrelated_plan(self.k, self.r, self.orders, self.clusters)
        self.orders = self.plan.orders
        self.layout = self.plan.layout
        _check_feasible(self)

    @property
    def n_workers(self):
        return self.k

    @property
    def k_gradients(self):
        return self.k

    @property
    def threshold(self):
        return self.plan.threshold

    @property
    def simple_count_threshold(self):
        return self.threshold if self.clusters == 1 else None

    def message_units(self, worker):
        return self.plan.orders

    def new_session(self):
        thr = [self.threshold] * self.clusters
        return TokenSession(
            thr, lambda w, j: (self.layout.cluster_of(w), self.plan.row_for(w, j)))

    def prepare(self, data):
        pass

    def closed_form(self):
        return None

    def verify_decode(self, delivered, partials, theta=None):
        per_cluster = [[] for _ in range(self.clusters)]
        for w, j in delivered:
            p = self.layout.cluster_of(w)
            local = [partials[g] for g in self.layout.gradients(p)]
            row = self.plan.row_for(w, j)
            value = _encode_row(self.plan.code, local, row)
            per_cluster[p].append(CodedMessage(row, value))
        total = sum(self.plan.decode_cluster(msgs) for msgs in per_cluster)
        return np.asarray(total, dtype=float), 0


@dataclass
class GcHybridScheme:
    """Multi-message GC whose final message falls back to the cluster sum.

    Requires cluster size == r so a fully-finished worker has seen its whole
    cluster: its last transmission carries the plain sum, completing the
    cluster on its own.
    """

    k: int
    r: int
    orders: tuple
    clusters: int = 1
    scheme_id: str = "gc-hybrid"

    def __post_init__(self):
        self.plan = mmc_uncorrelated_plan(self.k, self.r, self.orders, self.clusters)
        self.orders = self.plan.orders
        self.layout = self.plan.layout
        if self.layout.cluster_size != self.r:
            raise ConfigError("hybrid scheme needs cluster size == r "
                              f"(got {self.layout.cluster_size} != {self.r})")
        _check_feasible(self)

    @property
    def n_workers(self):
        return self.k

    @property
    def k_gradients(self):
        return self.k

    @property
    def threshold(self):
        return self.plan.threshold

    def message_units(self, worker):
        return self.plan.orders

    def new_session(self):
        thr = [self.threshold] * self.clusters
        last = self.plan.window - 1

        def token(w, j):
            p = self.layout.cluster_of(w)
            if j == last:
                return p, TOTAL
            return p, self.plan.row_for(w, j)

        return TokenSession(thr, token)

    def prepare(self, data):
        pass

    def closed_form(self):
        return None

    def verify_decode(self, delivered, partials, theta=None):
        received = []
        totals = {}
        last = self.plan.window - 1
        for w, j in delivered:
            p = self.layout.cluster_of(w)
            local = [np.asarray(partials[g], dtype=float)
                     for g in self.layout.gradients(p)]
            if j == last:
                if p not in totals:
                    totals[p] = np.sum(local, axis=0)
            else:
                row = self.plan.row_for(w, j)
                received.append((p, CodedMessage(row, _encode_row(self.plan.code, local, row))))
        return hybrid_decode(self.plan, received, totals), 0


@dataclass
class LccScheme:
    """Lagrange-coded computation; n_poly selects the family member."""

    k: int
    r: int
    n_poly: int
    scheme_id: str = "lcc"

    def __post_init__(self):
        if self.n_poly < 1 or self.r % self.n_poly != 0:
            raise ConfigError(f"polynomial count n={self.n_poly} must divide r={self.r}")
        self.plan = None
        _check_feasible(self)

    @property
    def n_workers(self):
        return self.k

    @property
    def k_gradients(self):
        return self.k

    @property
    def slots(self):
        return self.r // self.n_poly

    @property
    def threshold(self):
        """2*ceil(K/n) - 1; the ceiling covers zero-padded group counts."""
        return 2 * -(-self.k // self.n_poly) - 1

    @property
    def simple_count_threshold(self):
        return self.threshold

    def message_units(self, worker):
        return tuple(self.n_poly * (j + 1) for j in range(self.slots))

    def new_session(self):
        return TokenSession([self.threshold],
                            lambda w, j: (0, w * self.slots + j))

    def prepare(self, data):
        if self.k % self.n_poly != 0:
            raise ConfigError(
                f"numeric decode needs n={self.n_poly} to divide K={self.k}")
        self.plan = lcc_build(data, self.k, self.r, self.n_poly)

    def closed_form(self):
        return ("count", self.threshold, self.n_poly)

    def verify_decode(self, delivered, partials=None, theta=None):
        if self.plan is None:
            raise ConfigError("call prepare(data) before decoding")
        msgs = [lcc_compute(self.plan, w, j, theta) for w, j in delivered]
        return lcc_gradient(self.plan, msgs), 0


@dataclass
class UncodedScheme:
    """Uncoded multi-message streaming with circular-shift assignment."""

    k: int
    r: int
    tolerance: float = 0.0
    scheme_id: str = "uc-mm"

    def __post_init__(self):
        self.plan = uc_schedule(self.k, self.r)
        if not 0.0 <= self.tolerance < 1.0:
            raise ConfigError("tolerance must lie in [0, 1)")
        _check_feasible(self)

    @property
    def n_workers(self):
        return self.k

    @property
    def k_gradients(self):
        return self.k

    @property
    def threshold(self):
        return required_count(self.k, self.tolerance)

    def message_units(self, worker):
        return tuple(range(1, self.r + 1))

    def new_session(self):
        return TokenSession([self.threshold],
                            lambda w, j: (0, self.plan.gradient_for(w, j)))

    def prepare(self, data):
        pass

    def closed_form(self):
        return None  # coverage condition is set-dependent

    def verify_decode(self, delivered, partials, theta=None):
        dim = len(np.atleast_1d(np.asarray(partials[0], dtype=float)))
        state = RecoveryState(self.k, dim)
        counts = {}
        for w, j in delivered:
            counts[w] = max(counts.get(w, 0), j + 1)
        for w, c in counts.items():
            uc_ingest(state, w, c, self.plan, partials)
        done, estimate = uc_complete(state, self.k, self.tolerance)
        if not done:
            raise NotEnoughMessages(
                f"only {state.n_recovered} of {self.threshold} required gradients arrived")
        return estimate, self.k - state.n_recovered


def make_scheme(kind, k, r, m=None, orders=None, clusters=1, n_poly=None,
                tolerance=0.05):
    """Build a scheme plan from its config-file name and parameters."""
    if kind == "gc":
        return GcScheme(k, r, clusters)
    if kind == "gc-mm-c":
        if m is None:
            raise ConfigError("gc-mm-c requires the message order m")
        return GcMmCorrelatedScheme(k, r, m, clusters)
    if kind == "gc-mm-u":
        if not orders:
            raise ConfigError("gc-mm-u requires an order vector")
        return GcMmUncorrelatedScheme(k, r, tuple(orders), clusters)
    if kind == "gc-hybrid":
        if not orders:
            raise ConfigError("gc-hybrid requires an order vector")
        return GcHybridScheme(k, r, tuple(orders), clusters)
    if kind == "lcc":
        return LccScheme(k, r, r, scheme_id="lcc")
    if kind == "lcc-mm":
        return LccScheme(k, r, 1, scheme_id="lcc-mm")
    if kind == "lcc-mm-n":
        if not n_poly:
            raise ConfigError("lcc-mm-n requires n_poly")
        return LccScheme(k, r, n_poly, scheme_id=f"lcc-mm-{n_poly}")
    if kind == "uc-mm":
        return UncodedScheme(k, r, 0.0, scheme_id="uc-mm")
    if kind == "uc-mm-pg":
        return UncodedScheme(k, r, tolerance, scheme_id="uc-mm-pg")
    raise ConfigError(f"unknown scheme kind {kind!r}")
