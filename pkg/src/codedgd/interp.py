"""Polynomial interpolation helpers for the real-valued code constructions.

All decoders in this package reduce to linear functionals of polynomial
evaluations at distinct real points.  Products and accumulations run in
extended precision (``np.longdouble``) because the functionals can be badly
conditioned for unlucky point subsets; payload values on the wire stay
float64.
"""

import numpy as np

LONG = np.longdouble


def chebyshev_nodes(n):
    """First-kind Chebyshev nodes on [-1, 1], in extended precision."""
    k = np.arange(1, n + 1, dtype=LONG)
    return np.cos(np.pi * (2 * k - 1) / (2 * n))


def barycentric_weights(points):
    """w_i = 1 / prod_{j != i} (x_i - x_j) for the given nodes."""
    x = np.asarray(points, dtype=LONG)
    n = len(x)
    w = np.empty(n, dtype=LONG)
    for i in range(n):
        diff = x[i] - np.concatenate([x[:i], x[i + 1:]])
        w[i] = 1.0 / np.prod(diff)
    return w


def leading_coefficient(points, values):
    """Leading coefficient of the degree-(n-1) interpolant through n points.

    Equals the top divided difference: sum_i w_i * y_i.  `values` may be a
    vector per point (shape (n, d)).
    """
    x = np.asarray(points, dtype=LONG)
    y = np.asarray(values, dtype=LONG)
    if y.ndim == 1:
        y = y[:, None]
    w = barycentric_weights(x)
    lead = (w[:, None] * y).sum(axis=0)
    return np.asarray(lead, dtype=float)


def interpolate_at(points, values, targets, with_cond=False):
    """Evaluate the interpolant through (points, values) at each target.

    Uses the first (modified Lagrange) barycentric form, which stays
    backward stable when a target falls inside a gap of the node set.
    Returns an array of shape (len(targets), d); with_cond additionally
    returns the sum of absolute Lagrange terms, the amplification factor
    multiplying payload rounding noise.
    """
    x = np.asarray(points, dtype=LONG)
    y = np.asarray(values, dtype=LONG)
    if y.ndim == 1:
        y = y[:, None]
    w = barycentric_weights(x)
    out = np.empty((len(targets), y.shape[1]), dtype=LONG)
    abs_terms = 0.0
    for t, z in enumerate(np.asarray(targets, dtype=LONG)):
        diff = z - x
        hit = np.nonzero(diff == 0)[0]
        if hit.size:
            out[t] = y[hit[0]]
            abs_terms += float(np.abs(y[hit[0]]).sum())
            continue
        c = np.prod(diff) * (w / diff)
        out[t] = (c[:, None] * y).sum(axis=0)
        abs_terms += float((np.abs(c)[:, None] * np.abs(y)).sum())
    result = np.asarray(out, dtype=float)
    if with_cond:
        return result, abs_terms
    return result


def leja_order(points):
    """Indices of `points` in Leja order (greedy max-product).

    Deterministic given the point set; used to pick a well-spread subset
    when more evaluations than the threshold are available.
    """
    x = np.asarray(points, dtype=LONG)
    n = len(x)
    order = np.empty(n, dtype=int)
    order[0] = int(np.argmax(np.abs(x)))
    # running log-product of distances to already-chosen points
    score = np.log(np.abs(x - x[order[0]]) + np.finfo(LONG).tiny)
    chosen = np.zeros(n, dtype=bool)
    chosen[order[0]] = True
    for k in range(1, n):
        score_masked = np.where(chosen, -np.inf, score)
        nxt = int(np.argmax(score_masked))
        order[k] = nxt
        chosen[nxt] = True
        score = score + np.log(np.abs(x - x[nxt]) + np.finfo(LONG).tiny)
    return order


