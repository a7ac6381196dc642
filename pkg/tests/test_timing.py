import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from codedgd.timing import (ShiftedExp, cdf_count_threshold, cdf_worker_threshold,
                            count_distribution, empirical_cdf, expected_completion,
                            mc_completion_times, prob_completes_by, prob_exact_count)

MODEL = ShiftedExp(10.0, 0.01)


def naive_count_cdf(model, k, r, m_th, t):
    """Eq.-style oracle: explicit sum over worker-count compositions."""
    probs = [prob_exact_count(model, r, s, t) for s in range(r + 1)]
    total = 0.0
    for counts in itertools.product(range(k + 1), repeat=r + 1):
        if sum(counts) != k:
            continue
        if sum(s * n for s, n in enumerate(counts)) < m_th:
            continue
        term = math.factorial(k)
        for s, n in enumerate(counts):
            term = term // math.factorial(n)
        value = float(term)
        for s, n in enumerate(counts):
            value *= probs[s] ** n
        total += value
    return total


class TestPerWorker:
    def test_boundary_is_zero(self):
        assert prob_completes_by(MODEL, 3, 3 * MODEL.shift) == 0.0
        assert prob_completes_by(MODEL, 3, 3 * MODEL.shift - 1e-9) == 0.0

    def test_known_value(self):
        # mu=10, alpha=0.01, s=1, t=0.11 -> 1 - e^{-1}
        got = prob_completes_by(MODEL, 1, 0.11)
        assert got == pytest.approx(1.0 - math.exp(-1.0), rel=1e-12)

    def test_monotone_in_s(self):
        for t in (0.05, 0.2, 1.0):
            vals = [prob_completes_by(MODEL, s, t) for s in range(1, 8)]
            assert all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))

    def test_s_zero_rejected(self):
        with pytest.raises(ValueError):
            prob_completes_by(MODEL, 0, 1.0)

    def test_middle_branch_formula(self):
        # with s*alpha <= t < (s+1)*alpha the worker cannot have finished s+1
        s, t = 3, 3.5 * MODEL.shift
        want = 1.0 - math.exp(-MODEL.mu * (t / s - MODEL.shift))
        assert prob_exact_count(MODEL, 5, s, t) == pytest.approx(want, rel=1e-12)

    @given(st.floats(0.0, 0.5), st.integers(1, 8))
    @settings(max_examples=60, deadline=None)
    def test_total_probability(self, t, r):
        probs = count_distribution(MODEL, r, t)
        assert probs.sum() == pytest.approx(1.0, abs=1e-12)
        assert (probs >= -1e-15).all()

    def test_against_monte_carlo(self):
        r, t, n = 2, 0.05, 1_000_000
        rng = np.random.default_rng(42)
        c = MODEL.shift + rng.exponential(1.0 / MODEL.mu, n)
        counts = np.minimum(np.floor(t / c).astype(int), r)
        for s in range(r + 1):
            p_hat = float(np.mean(counts == s))
            p = prob_exact_count(MODEL, r, s, t)
            sigma = math.sqrt(max(p * (1 - p), 1e-12) / n)
            assert abs(p_hat - p) <= 3 * sigma + 1e-9


class TestCountThreshold:
    def test_limits(self):
        assert cdf_count_threshold(MODEL, 4, 2, 1, 50.0) == pytest.approx(1.0, abs=1e-9)
        assert cdf_count_threshold(MODEL, 4, 2, 1, 0.0) == 0.0

    def test_two_workers_product(self):
        t = 0.08
        got = cdf_count_threshold(MODEL, 2, 1, 2, t)
        f1 = prob_completes_by(MODEL, 1, t)
        assert got == pytest.approx(f1 ** 2, rel=1e-12)

    def test_matches_naive_enumeration(self):
        for k, r in [(3, 2), (4, 3), (6, 3)]:
            m_th = k * r // 2
            for t in (0.02, 0.06, 0.15):
                dp = cdf_count_threshold(MODEL, k, r, m_th, t)
                naive = naive_count_cdf(MODEL, k, r, m_th, t)
                assert dp == pytest.approx(naive, abs=1e-12)

    def test_against_monte_carlo_paper_setup(self):
        # K=10, r=5, M_th = 2K-1 = 19: the multi-message count threshold
        times = mc_completion_times(MODEL, 10, 5, 19, kind="count",
                                    trials=100_000, seed=7)
        grid = np.linspace(0.0, float(np.quantile(times, 0.9999)), 200)
        closed = cdf_count_threshold(MODEL, 10, 5, 19, grid)
        mc = empirical_cdf(times, grid)
        assert np.max(np.abs(closed - mc)) <= 0.01

    def test_message_grouping(self):
        # two units per message: only even unit counts produce messages
        t = 0.06
        got = cdf_count_threshold(MODEL, 3, 4, 3, t, units_per_message=2)
        # oracle: per-worker message distribution collapsed by hand
        per_unit = count_distribution(MODEL, 4, t)
        per_msg = np.array([per_unit[0] + per_unit[1],
                            per_unit[2] + per_unit[3], per_unit[4]])
        dist = np.convolve(np.convolve(per_msg, per_msg), per_msg)
        assert got == pytest.approx(dist[3:].sum(), abs=1e-12)

    def test_monotone_in_t(self):
        grid = np.linspace(0.0, 1.0, 100)
        vals = cdf_count_threshold(MODEL, 6, 3, 9, grid)
        assert (np.diff(vals) >= -1e-12).all()
        assert 0.0 <= vals[0] and vals[-1] <= 1.0


class TestWorkerThreshold:
    def test_all_workers_is_product(self):
        t = 0.2
        got = cdf_worker_threshold(MODEL, 5, 2, 5, t)
        fr = prob_completes_by(MODEL, 2, t)
        assert got == pytest.approx(fr ** 5, rel=1e-12)

    def test_single_worker_complement(self):
        t = 0.25
        got = cdf_worker_threshold(MODEL, 6, 3, 1, t)
        q = math.exp(-MODEL.mu * (t / 3 - MODEL.shift))
        assert got == pytest.approx(1.0 - q ** 6, rel=1e-12)

    def test_zero_before_support(self):
        assert cdf_worker_threshold(MODEL, 6, 3, 4, 3 * MODEL.shift - 1e-6) == 0.0

    def test_low_threshold_dominates(self):
        # LCC at (6,3) waits for 3 workers, GC for 4: LCC's CDF sits above
        grid = np.linspace(0.0, 1.0, 200)
        gc = cdf_worker_threshold(MODEL, 6, 3, 4, grid)
        lcc = cdf_worker_threshold(MODEL, 6, 3, 3, grid)
        assert (lcc >= gc - 1e-12).all()
        assert lcc.max() > gc[np.argmax(lcc)] or (lcc - gc).max() > 0

    def test_against_monte_carlo(self):
        times = mc_completion_times(MODEL, 10, 5, 6, kind="worker",
                                    trials=100_000, seed=11)
        grid = np.linspace(0.0, float(np.quantile(times, 0.9999)), 200)
        closed = cdf_worker_threshold(MODEL, 10, 5, 6, grid)
        mc = empirical_cdf(times, grid)
        assert np.max(np.abs(closed - mc)) <= 0.01


class TestExpectedCompletion:
    def test_single_worker_single_unit(self):
        # analytic integral of the shifted-exponential survival function
        want = MODEL.shift + 1.0 / MODEL.mu
        got = expected_completion(
            lambda t: cdf_worker_threshold(MODEL, 1, 1, 1, t),
            breakpoints=[MODEL.shift], tail_scale=1.0 / MODEL.mu)
        assert got == pytest.approx(want, rel=1e-4)

    @pytest.mark.parametrize("s", [2, 5])
    def test_identical_duration_scaling(self, s):
        want = s * (MODEL.shift + 1.0 / MODEL.mu)
        got = expected_completion(
            lambda t: cdf_worker_threshold(MODEL, 1, s, 1, t),
            breakpoints=[s * MODEL.shift], tail_scale=s / MODEL.mu)
        assert got == pytest.approx(want, rel=1e-4)

    def test_monotone_in_threshold_slack(self):
        e = []
        for m_th in (5, 10, 15):
            e.append(expected_completion(
                lambda t, m=m_th: cdf_count_threshold(MODEL, 6, 3, m, t),
                breakpoints=[s * MODEL.shift for s in range(1, 4)],
                tail_scale=3.0 / MODEL.mu))
        assert e[0] <= e[1] <= e[2]


def test_mc_block_seeding_is_schedule_independent():
    a = mc_completion_times(MODEL, 4, 2, 3, kind="count", trials=1000, seed=5, block=100)
    b = mc_completion_times(MODEL, 4, 2, 3, kind="count", trials=1000, seed=5, block=100)
    assert np.array_equal(a, b)
