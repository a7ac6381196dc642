"""Closed-form per-iteration completion-time statistics and their Monte Carlo twins.

Model: a worker's per-computation duration this iteration is one draw
C = shift + Exp(mu), identical across its computations, so computation s
finishes at s*C.  That generative reading is the unique one consistent with
the completion probability F_s(t) = Pr(C <= t/s).

Closed forms are provided where they are exact: a count threshold (any
M_th computations anywhere suffice) and a worker threshold (K_th workers
must finish everything).  Set-dependent schemes (uncoded coverage,
correlated multi-message) have no closed form here and are handled by the
simulator.
"""

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ShiftedExp:
    """Shifted-exponential computation model: rate mu, minimum time shift."""

    mu: float
    shift: float

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("rate mu must be positive")
        if self.shift < 0:
            raise ValueError("shift must be nonnegative")


def prob_completes_by(model, s, t):
    """F_s(t): probability of finishing at least s computations by time t."""
    if s < 1:
        raise ValueError("s must be at least 1")
    t = np.asarray(t, dtype=float)
    expo = np.where(t >= s * model.shift,
                    1.0 - np.exp(-model.mu * (t / s - model.shift)), 0.0)
    return expo if expo.ndim else float(expo)


def prob_exact_count(model, r, s, t):
    """P_s(t): probability of finishing exactly s of r computations by t.

    Intervals are left-closed/right-open, so Sum_s P_s(t) = 1 at every t.
    """
    if not 0 <= s <= r:
        raise ValueError(f"need 0 <= s <= r, got s={s}, r={r}")
    if s == 0:
        return 1.0 - prob_completes_by(model, 1, t)
    if s == r:
        return prob_completes_by(model, r, t)
    t = np.asarray(t, dtype=float)
    fs = 1.0 - np.exp(-model.mu * (t / s - model.shift))
    fs1 = 1.0 - np.exp(-model.mu * (t / (s + 1) - model.shift))
    out = np.where(t < s * model.shift, 0.0,
                   np.where(t < (s + 1) * model.shift, fs, fs - fs1))
    return out if out.ndim else float(out)


def count_distribution(model, r, t):
    """[P_0(t), ..., P_r(t)] for one worker with load r."""
    probs = np.array([prob_exact_count(model, r, s, t) for s in range(r + 1)])
    total = probs.sum()
    if abs(total - 1.0) > 1e-12:
        raise ValueError(f"count distribution sums to {total!r}")
    return probs


def _convolve_power(p, k):
    """Distribution of the sum of k iid copies of p, by binary exponentiation."""
    result = np.array([1.0])
    base = p
    while k:
        if k & 1:
            result = np.convolve(result, base)
        k >>= 1
        if k:
            base = np.convolve(base, base)
    return result


def cdf_count_threshold(model, k, r, m_th, t, units_per_message=1):
    """Pr(T <= t) when any m_th completed messages anywhere suffice.

    Computed by convolving the K per-worker count distributions, which
    reproduces the multinomial sum over worker-count compositions exactly
    while staying tractable at K = 40.  With units_per_message = n, a
    worker's s finished computations yield floor(s/n) messages and m_th
    counts messages.
    """
    cap = r // units_per_message
    if not 1 <= m_th <= k * cap:
        raise ValueError(f"need 1 <= m_th <= K*r/n = {k * cap}")
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty_like(t_arr)
    for i, ti in enumerate(t_arr):
        per_unit = count_distribution(model, r, ti)
        per_msg = np.zeros(cap + 1)
        for s in range(r + 1):
            per_msg[min(s // units_per_message, cap)] += per_unit[s]
        total = _convolve_power(per_msg, k)
        out[i] = total[m_th:].sum()
    out = np.clip(out, 0.0, 1.0)
    return out if np.ndim(t) else float(out[0])


def cdf_worker_threshold(model, k, r, k_th, t):
    """Pr(T <= t) when K_th workers must each finish all r computations."""
    if not 1 <= k_th <= k:
        raise ValueError(f"need 1 <= K_th <= K, got {k_th}")
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    p = np.where(t_arr >= r * model.shift,
                 1.0 - np.exp(-model.mu * (t_arr / r - model.shift)), 0.0)
    out = np.zeros_like(t_arr)
    for j in range(k_th, k + 1):
        out += math.comb(k, j) * p ** j * (1.0 - p) ** (k - j)
    out = np.where(t_arr >= r * model.shift, np.clip(out, 0.0, 1.0), 0.0)
    return out if np.ndim(t) else float(out[0])


def expected_completion(cdf, breakpoints, tail_scale, rel_tol=1e-4):
    """E[T] = integral of the survival function 1 - cdf.

    The grid keeps knots at the distribution breakpoints and is refined by
    halving until the value moves by less than rel_tol relatively.  Beyond
    the last knot the integration extends in blocks until the remainder
    bound survival * tail_scale drops below 1e-6 of the running value.
    """
    knots = sorted(set(float(b) for b in breakpoints) | {0.0})
    t_hi = max(knots[-1], tail_scale)

    def integrate(points_per_unit):
        total = 0.0
        edges = knots + [t_hi]
        for a, b in zip(edges[:-1], edges[1:]):
            if b <= a:
                continue
            n = max(8, int(math.ceil((b - a) * points_per_unit)))
            ts = np.linspace(a, b, n + 1)
            total += np.trapezoid(1.0 - np.asarray(cdf(ts), dtype=float), ts)
        # extend past the last knot until the tail is negligible
        a = t_hi
        width = max(tail_scale, (t_hi - knots[0]) / 4 or tail_scale)
        while True:
            b = a + width
            n = max(8, int(math.ceil(width * points_per_unit)))
            ts = np.linspace(a, b, n + 1)
            surv = 1.0 - np.asarray(cdf(ts), dtype=float)
            total += np.trapezoid(surv, ts)
            a = b
            remainder = surv[-1] * tail_scale
            if surv[-1] < 1e-12 or remainder < 1e-6 * max(total, 1e-30):
                return total + remainder

    base = 64.0 / max(t_hi, 1e-12)
    value = integrate(base)
    for _ in range(12):
        finer = integrate(base * 2)
        if abs(finer - value) <= rel_tol * max(abs(finer), 1e-30):
            return finer
        value, base = finer, base * 2
    raise RuntimeError("expected-completion integral did not converge")


def mc_completion_times(model, k, r, threshold, kind="worker", units_per_message=1,
                        trials=100000, seed=0, block=4096):
    """Sampled per-iteration completion times of the generative model.

    kind="worker": time of the threshold-th worker to finish all r
    computations.  kind="count": time of the threshold-th completed message,
    message j of a worker landing at j*units_per_message*C.  Blocks draw from
    seeds derived as (seed, block_index) so results do not depend on block
    scheduling.
    """
    out = np.empty(trials)
    cap = r // units_per_message
    msg_times = units_per_message * np.arange(1, cap + 1)
    done = 0
    b = 0
    while done < trials:
        n = min(block, trials - done)
        rng = np.random.default_rng(np.random.SeedSequence((seed, b)))
        c = model.shift + rng.exponential(1.0 / model.mu, size=(n, k))
        if kind == "worker":
            finish = np.sort(r * c, axis=1)
            out[done:done + n] = finish[:, threshold - 1]
        elif kind == "count":
            times = (c[:, :, None] * msg_times[None, None, :]).reshape(n, k * cap)
            part = np.partition(times, threshold - 1, axis=1)
            out[done:done + n] = part[:, threshold - 1]
        else:
            raise ValueError(f"unknown kind {kind!r}")
        done += n
        b += 1
    return out


def empirical_cdf(samples, grid):
    """Fraction of samples at or below each grid point."""
    samples = np.sort(np.asarray(samples, dtype=float))
    return np.searchsorted(samples, np.asarray(grid, dtype=float), side="right") / len(samples)


def write_cdf_csv(path, t, closed_form, monte_carlo):
    """Export t, cdf_closed_form, cdf_monte_carlo columns."""
    arr = np.column_stack([t, closed_form, monte_carlo])
    np.savetxt(path, arr, delimiter=",", header="t,cdf_closed_form,cdf_monte_carlo",
               comments="", fmt="%.10g")
