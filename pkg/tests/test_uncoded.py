import itertools
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from codedgd.uncoded import (RecoveryState, required_count, uc_complete,
                             uc_ingest, uc_schedule)

GOLDEN = os.path.join(os.path.dirname(__file__), "golden")


def test_schedule_matches_golden_k10_r4():
    plan = uc_schedule(10, 4)
    want = np.loadtxt(os.path.join(GOLDEN, "uc_schedule_k10_r4.csv"),
                      delimiter=",", dtype=int) - 1  # golden table is 1-based
    assert np.array_equal(plan.schedule, want)
    assert [plan.gradient_for(0, j) for j in range(4)] == [0, 1, 2, 3]


def test_schedule_r1_identity():
    plan = uc_schedule(5, 1)
    assert np.array_equal(plan.schedule, np.arange(5)[None, :])


def test_schedule_coverage_counts():
    plan = uc_schedule(7, 3)
    counts = np.bincount(plan.schedule.ravel(), minlength=7)
    assert (counts == 3).all()


def test_schedule_errors():
    with pytest.raises(ValueError):
        uc_schedule(4, 5)


def make_partials(k, d=2, seed=0):
    rng = np.random.default_rng(seed)
    return [rng.standard_normal(d) for _ in range(k)]


class TestIngest:
    def test_first_row_covers_everything(self):
        k = 6
        plan = uc_schedule(k, 3)
        partials = make_partials(k)
        state = RecoveryState(k, 2)
        for w in range(k):
            uc_ingest(state, w, 1, plan, partials)
        assert state.n_recovered == k
        assert state.messages == k
        assert np.allclose(state.sums, np.sum(partials, axis=0), rtol=1e-12)

    def test_three_fast_workers_cover_k10(self):
        plan = uc_schedule(10, 4)
        partials = make_partials(10)
        state = RecoveryState(10, 2)
        for w in (0, 4, 8):
            uc_ingest(state, w, 4, plan, partials)
        assert state.n_recovered == 10

    def test_duplicates_do_not_change_sums(self):
        plan = uc_schedule(5, 2)
        partials = make_partials(5)
        state = RecoveryState(5, 2)
        uc_ingest(state, 2, 2, plan, partials)  # covers gradients 2, 3
        before = state.sums.copy()
        uc_ingest(state, 3, 1, plan, partials)  # gradient 3 again
        assert np.array_equal(state.sums, before)
        assert state.messages == 3  # the duplicate still counts as a transmission

    def test_repeat_ingest_idempotent(self):
        plan = uc_schedule(5, 2)
        partials = make_partials(5)
        state = RecoveryState(5, 2)
        uc_ingest(state, 1, 2, plan, partials)
        uc_ingest(state, 1, 2, plan, partials)
        assert state.messages == 2

    def test_over_capacity_rejected(self):
        plan = uc_schedule(5, 2)
        with pytest.raises(ValueError):
            uc_ingest(RecoveryState(5, 2), 0, 3, plan, make_partials(5))


class TestComplete:
    def test_zero_tolerance_needs_everything(self):
        plan = uc_schedule(6, 2)
        partials = make_partials(6)
        state = RecoveryState(6, 2)
        for w in range(5):
            uc_ingest(state, w, 1, plan, partials)
        done, _ = uc_complete(state, 6, 0.0)
        assert not done

    def test_tolerance_cut_matches_paper_count(self):
        assert required_count(40, 0.05) == 38  # two of forty may be missing

    def test_exact_full_sum(self):
        plan = uc_schedule(6, 3)
        partials = make_partials(6)
        state = RecoveryState(6, 2)
        for w in range(6):
            uc_ingest(state, w, 3, plan, partials)
        done, estimate = uc_complete(state, 6, 0.0)
        assert done
        oracle = np.zeros(2)
        for p in partials:
            oracle += p
        assert np.allclose(estimate, oracle, rtol=1e-12)

    def test_partial_sum_identity(self):
        plan = uc_schedule(8, 2)
        partials = make_partials(8)
        state = RecoveryState(8, 2)
        for w in (0, 2, 4):
            uc_ingest(state, w, 2, plan, partials)
        done, estimate = uc_complete(state, 8, 0.3)
        covered = sorted({plan.gradient_for(w, j) for w in (0, 2, 4) for j in range(2)})
        assert done == (len(covered) >= required_count(8, 0.3))
        assert np.allclose(estimate, np.sum([partials[g] for g in covered], axis=0),
                           rtol=1e-12)

    def test_bad_tolerance(self):
        with pytest.raises(ValueError):
            uc_complete(RecoveryState(4, 1), 4, 1.0)


@given(st.integers(2, 7), st.integers(1, 4), st.data())
@settings(max_examples=40, deadline=None)
def test_order_independent_final_state(k, r, data):
    r = min(r, k)
    plan = uc_schedule(k, r)
    partials = make_partials(k, seed=k * 10 + r)
    counts = [data.draw(st.integers(0, r)) for _ in range(k)]
    orderings = [list(range(k)), list(reversed(range(k)))]
    states = []
    for order in orderings:
        state = RecoveryState(k, 2)
        for w in order:
            uc_ingest(state, w, counts[w], plan, partials)
        states.append(state)
    assert np.array_equal(states[0].have, states[1].have)
    assert np.allclose(states[0].sums, states[1].sums, rtol=1e-12)
    assert states[0].messages == states[1].messages


def test_dominance_over_gc_exhaustive():
    # whenever K-r+1 workers finish everything, the schedule covers all gradients
    for k, r in [(6, 3), (8, 3), (7, 2)]:
        plan = uc_schedule(k, r)
        for counts in itertools.product(range(r + 1), repeat=k):
            full = sum(1 for c in counts if c == r)
            if full < k - r + 1:
                continue
            covered = {plan.gradient_for(w, j)
                       for w in range(k) for j in range(counts[w])}
            assert len(covered) == k, (k, r, counts)
