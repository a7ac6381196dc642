"""Discrete-event cluster simulator: one PS, K workers, any scheme plan.

Timeline contract per worker: computation j finishes at delay + j*C (model
mode) or at the cumulative trace draw; a message becomes send-eligible when
both its computations are done and the previous message has been received;
delivery adds the communication time.  With congestion enabled the PS is a
single FIFO server serialized by eligibility time.  An iteration ends at
the earliest delivery instant at which the scheme's decoder is complete.

Determinism: every draw for iteration i comes from a generator seeded with
(master_seed, i), in a fixed order, so records are bitwise reproducible for
a given configuration regardless of how runs are scheduled.
"""

import csv
import heapq
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .timing import ShiftedExp


@dataclass(frozen=True)
class DelayScenario:
    """Per-iteration delay injection knobs."""

    p_delay: float = 0.0
    initial_delay: float = 0.0
    comm_base: float = 0.0
    comm_exp_mu: float = None
    correlated: bool = False

    def __post_init__(self):
        if not 0.0 <= self.p_delay <= 1.0:
            raise ConfigError("p_delay must lie in [0, 1]")
        if self.initial_delay < 0 or self.comm_base < 0:
            raise ConfigError("delays must be nonnegative")
        if self.comm_exp_mu is not None and self.comm_exp_mu <= 0:
            raise ConfigError("comm_exp_mu must be positive when given")


@dataclass(frozen=True)
class IterationRecord:
    completion: float
    messages_sent: int
    messages_delivered: int
    decode_ok: bool
    scheme_id: str


class ShiftedExpSource:
    """One shifted-exponential duration per worker per iteration."""

    def __init__(self, model):
        if not isinstance(model, ShiftedExp):
            model = ShiftedExp(*model)
        self.model = model

    def sample_unit_times(self, rng, k, max_units):
        c = self.model.shift + rng.exponential(1.0 / self.model.mu, size=k)
        return c[:, None] * np.arange(1, max_units + 1)[None, :]

    def sample_comm_times(self, rng, k, max_msgs):
        return None


class ConstantSource:
    """Fixed computation time per unit (trace-free deterministic workload)."""

    def __init__(self, unit_time):
        if unit_time <= 0:
            raise ConfigError("unit computation time must be positive")
        self.unit_time = float(unit_time)

    def sample_unit_times(self, rng, k, max_units):
        return np.full((k, 1), self.unit_time) * np.arange(1, max_units + 1)[None, :]

    def sample_comm_times(self, rng, k, max_msgs):
        return None


class TraceSource:
    """Measured per-worker computation/communication multisets, resampled."""

    def __init__(self, comp_traces, comm_traces=None):
        if not comp_traces or any(len(t) == 0 for t in comp_traces):
            raise ConfigError("every worker needs a nonempty computation trace")
        self.comp = [np.asarray(t, dtype=float) for t in comp_traces]
        if any((t <= 0).any() for t in self.comp):
            raise ConfigError("trace durations must be positive")
        self.comm = None
        if comm_traces is not None:
            if len(comm_traces) != len(comp_traces):
                raise ConfigError("computation and communication traces must cover the same workers")
            self.comm = [np.asarray(t, dtype=float) for t in comm_traces]

    def sample_unit_times(self, rng, k, max_units):
        if k != len(self.comp):
            raise ConfigError(f"trace covers {len(self.comp)} workers, plan has {k}")
        out = np.empty((k, max_units))
        for w in range(k):
            draws = self.comp[w][rng.integers(0, len(self.comp[w]), size=max_units)]
            out[w] = np.cumsum(draws)
        return out

    def sample_comm_times(self, rng, k, max_msgs):
        if self.comm is None:
            return None
        out = np.empty((k, max_msgs))
        for w in range(k):
            out[w] = self.comm[w][rng.integers(0, len(self.comm[w]), size=max_msgs)]
        return out


class _PlanContext:
    """Precomputed message geometry for one plan."""

    def __init__(self, plan):
        self.plan = plan
        self.k = plan.n_workers
        units = [np.asarray(plan.message_units(w), dtype=int) for w in range(self.k)]
        self.n_msgs = np.array([len(u) for u in units])
        self.max_msgs = int(self.n_msgs.max())
        self.max_units = int(max(u[-1] for u in units))
        # unit index per (worker, message); padded slots replay the last message
        self.unit_idx = np.zeros((self.k, self.max_msgs), dtype=int)
        for w, u in enumerate(units):
            self.unit_idx[w, :len(u)] = u - 1
            self.unit_idx[w, len(u):] = u[-1] - 1
        self.valid = np.zeros((self.k, self.max_msgs), dtype=bool)
        for w, u in enumerate(units):
            self.valid[w, :len(u)] = True
        self.flat_w, self.flat_j = np.nonzero(self.valid)
        # schemes where every message is a distinct token in one cluster can
        # skip the session walk: completion is an order statistic
        self.simple_threshold = getattr(plan, "simple_count_threshold", None)


def _deliveries(ctx, finish, comm, congestion):
    """Eligibility and delivery times honoring the message-overlap contract."""
    elig = np.full_like(finish, np.inf)
    deliv = np.full_like(finish, np.inf)
    if not congestion:
        for w in range(ctx.k):
            prev = 0.0
            for j in range(int(ctx.n_msgs[w])):
                e = max(finish[w, j], prev)
                elig[w, j] = e
                prev = e + comm[w, j]
                deliv[w, j] = prev
        return elig, deliv
    # single FIFO server at the PS, serialized by eligibility time
    heap = [(finish[w, 0], w, 0) for w in range(ctx.k)]
    heapq.heapify(heap)
    server_free = 0.0
    while heap:
        t, w, j = heapq.heappop(heap)
        elig[w, j] = t
        start = max(t, server_free)
        server_free = start + comm[w, j]
        deliv[w, j] = server_free
        if j + 1 < ctx.n_msgs[w]:
            heapq.heappush(heap, (max(finish[w, j + 1], deliv[w, j]), w, j + 1))
    return elig, deliv


def _iterate(ctx, source, scenario, congestion, seed, carry=None, collect=False):
    rng = np.random.default_rng(seed)
    k = ctx.k
    delayed = rng.random(k) < scenario.p_delay
    unit_times = source.sample_unit_times(rng, k, ctx.max_units)
    comm_trace = source.sample_comm_times(rng, k, ctx.max_msgs)
    comm = comm_trace if comm_trace is not None else np.full((k, ctx.max_msgs),
                                                             scenario.comm_base)
    if scenario.comm_exp_mu is not None:
        comm = comm + rng.exponential(1.0 / scenario.comm_exp_mu, size=(k, ctx.max_msgs))

    delays = delayed * scenario.initial_delay
    if carry is not None:
        delays = delays + carry
    finish = delays[:, None] + unit_times[np.arange(k)[:, None], ctx.unit_idx]

    zero_comm = (comm_trace is None and scenario.comm_base == 0.0
                 and scenario.comm_exp_mu is None and not congestion)
    if zero_comm:
        elig = deliv = finish
    else:
        elig, deliv = _deliveries(ctx, finish, comm, congestion)

    flat_t = deliv[ctx.flat_w, ctx.flat_j]
    if ctx.simple_threshold is not None and not collect:
        # order statistic shortcut; identical to the session walk below
        thr = ctx.simple_threshold
        completion = float(np.partition(flat_t, thr - 1)[thr - 1])
        sent = int((elig[ctx.valid] <= completion).sum())
        record = IterationRecord(completion, sent,
                                 int((flat_t <= completion).sum()), True,
                                 ctx.plan.scheme_id)
        return record, delays, None
    order = np.lexsort((ctx.flat_j, ctx.flat_w, flat_t))
    session = ctx.plan.new_session()
    completion = None
    for idx in order:
        w = int(ctx.flat_w[idx])
        j = int(ctx.flat_j[idx])
        if session.deliver(w, j):
            completion = float(flat_t[idx])
            break
    if completion is None:
        raise ConfigError(f"{ctx.plan.scheme_id}: iteration cannot complete "
                          "even with every message delivered")

    sent = int((elig[ctx.valid] <= completion).sum())
    delivered_mask = deliv[ctx.valid] <= completion
    record = IterationRecord(completion, sent, int(delivered_mask.sum()), True,
                             ctx.plan.scheme_id)
    delivered = [(int(ctx.flat_w[idx]), int(ctx.flat_j[idx])) for idx in order
                 if flat_t[idx] <= completion]
    return record, delays, delivered


def simulate_iteration(plan, source, scenario, congestion=False, rng_seed=0):
    """Run a single iteration; see module docstring for the timeline rules."""
    ctx = _PlanContext(plan)
    record, _, _ = _iterate(ctx, source, scenario, congestion,
                            np.random.SeedSequence(rng_seed))
    return record


def simulate_run(plan, source, scenario, congestion, iterations, master_seed,
                 collect_deliveries=False):
    """Simulate many iterations with per-iteration derived seeds.

    In correlated mode the unserved part of a worker's delay (delay end
    minus iteration completion, when positive) carries into the next
    iteration; uncorrelated mode starts every iteration clean.
    """
    if iterations < 1:
        raise ConfigError("iterations must be at least 1")
    ctx = _PlanContext(plan)
    carry = np.zeros(plan.n_workers)
    records = []
    delivered_sets = []
    for i in range(iterations):
        seed = np.random.SeedSequence((master_seed, i))
        record, delays, delivered = _iterate(ctx, source, scenario, congestion,
                                             seed, carry, collect_deliveries)
        records.append(record)
        if collect_deliveries:
            delivered_sets.append(delivered)
        if scenario.correlated:
            carry = np.maximum(delays - record.completion, 0.0)
    if collect_deliveries:
        return records, delivered_sets
    return records


def communication_load(records):
    """Average transmissions per iteration (messages sent by completion)."""
    if not records:
        raise ValueError("no records")
    return float(np.mean([r.messages_sent for r in records]))


def write_records_csv(path, records):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "scheme", "completion_ms", "msgs_sent",
                         "msgs_delivered"])
        for i, r in enumerate(records):
            writer.writerow([i, r.scheme_id, f"{r.completion:.10g}",
                             r.messages_sent, r.messages_delivered])


def load_trace_csv(path):
    """Read a measurement trace: columns worker_id, kind in {comp, comm}, duration_ms."""
    comp, comm = {}, {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != ["worker_id", "kind", "duration_ms"]:
            raise ConfigError(f"{path}: expected header worker_id,kind,duration_ms")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                w = int(row[0])
                kind = row[1].strip()
                dur = float(row[2])
            except (ValueError, IndexError):
                raise ConfigError(f"{path}:{lineno}: malformed trace row {row!r}")
            if kind not in ("comp", "comm"):
                raise ConfigError(f"{path}:{lineno}: kind must be comp or comm")
            (comp if kind == "comp" else comm).setdefault(w, []).append(dur)
    workers = sorted(comp)
    if workers != list(range(len(workers))):
        raise ConfigError(f"{path}: worker ids must be contiguous from 0")
    comp_list = [comp[w] for w in workers]
    comm_list = [comm.get(w, []) for w in workers]
    has_comm = all(len(c) > 0 for c in comm_list)
    return TraceSource(comp_list, comm_list if has_comm else None)


def save_trace_csv(path, source):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["worker_id", "kind", "duration_ms"])
        for w, samples in enumerate(source.comp):
            for s in samples:
                writer.writerow([w, "comp", f"{s:.10g}"])
        if source.comm is not None:
            for w, samples in enumerate(source.comm):
                for s in samples:
                    writer.writerow([w, "comm", f"{s:.10g}"])


def synthetic_trace(k, samples, model, comm_mean=None, seed=0):
    """Generate a measurement trace from the shifted-exponential model.

    Stands in for real point-to-point measurements; communication samples
    are exponential around comm_mean when requested.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    comp = [model.shift + rng.exponential(1.0 / model.mu, size=samples)
            for _ in range(k)]
    comm = None
    if comm_mean is not None:
        comm = [rng.exponential(comm_mean, size=samples) for _ in range(k)]
    return TraceSource(comp, comm)
