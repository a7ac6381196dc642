"""Dataset handling and exact least-squares gradients.

Gradient convention: all functions return the *unnormalized* gradient
``X^T X theta - X^T y`` (and the matching per-subset pieces).  Dividing by
the row count gives the mean-loss gradient; dividing the recovered sum of
partial gradients by K gives the averaged form the coded schemes target.
``mean_loss_scale`` exposes that factor so callers pick the convention
explicitly instead of this module guessing one.

Summation order is fixed (subsets in index order, rows in storage order) so
repeated runs reproduce serial gradient descent bit for bit.
"""

from dataclasses import dataclass

import numpy as np


def mean_loss_scale(n_rows):
    """Factor converting the unnormalized gradient to the mean-loss gradient."""
    return 1.0 / float(n_rows)


@dataclass(frozen=True)
class Dataset:
    """Feature matrix X (N x d) and target vector y (N,)."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError("X must be a nonempty N x d matrix")
        if y.shape != (X.shape[0],):
            raise ValueError("y must have one entry per row of X")
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise ValueError("dataset entries must be finite")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n_rows(self):
        return self.X.shape[0]

    @property
    def n_features(self):
        return self.X.shape[1]


@dataclass(frozen=True)
class Partition:
    """Contiguous split of dataset rows into K subsets via K+1 row offsets."""

    offsets: np.ndarray

    def __post_init__(self):
        off = np.asarray(self.offsets, dtype=int)
        if off.ndim != 1 or len(off) < 2 or off[0] != 0:
            raise ValueError("offsets must start at 0 and contain K+1 entries")
        if not (np.diff(off) >= 1).all():
            raise ValueError("offsets must be strictly increasing")
        sizes = np.diff(off)
        if sizes.max() - sizes.min() > 1:
            raise ValueError("subset sizes may differ by at most one row")
        object.__setattr__(self, "offsets", off)

    @classmethod
    def balanced(cls, n_rows, k):
        """Split n_rows into k contiguous subsets with sizes differing by <= 1."""
        if not 1 <= k <= n_rows:
            raise ValueError(f"need 1 <= K <= N, got K={k}, N={n_rows}")
        base, extra = divmod(n_rows, k)
        sizes = [base + (1 if i < extra else 0) for i in range(k)]
        return cls(np.concatenate([[0], np.cumsum(sizes)]))

    @property
    def k(self):
        return len(self.offsets) - 1

    def rows(self, k):
        """Row slice of subset k (0-based)."""
        if not 0 <= k < self.k:
            raise IndexError(f"subset index {k} out of range [0, {self.k})")
        return slice(int(self.offsets[k]), int(self.offsets[k + 1]))


def partial_gradient(data, part, k, theta):
    """Unnormalized gradient of subset k: X_k^T X_k theta - X_k^T y_k."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (data.n_features,):
        raise ValueError("theta dimension does not match the dataset")
    sl = part.rows(k)
    Xk = data.X[sl]
    return Xk.T @ (Xk @ theta - data.y[sl])


def full_gradient(data, part, theta):
    """Sum of all partial gradients, in subset index order."""
    grad = np.zeros(data.n_features)
    for k in range(part.k):
        grad += partial_gradient(data, part, k, theta)
    return grad


def gd_step(theta, grad, eta):
    """One gradient-descent update: theta - eta * grad."""
    theta = np.asarray(theta, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if theta.shape != grad.shape:
        raise ValueError("theta and gradient dimensions differ")
    if eta <= 0:
        raise ValueError("learning rate must be positive")
    return theta - eta * grad


def pad_rows(data, k):
    """Zero-pad the dataset so K divides the row count.

    Padded rows contribute exactly zero to every partial gradient, so all
    downstream results are unchanged.
    """
    n = data.n_rows
    rem = n % k
    if rem == 0:
        return data
    extra = k - rem
    X = np.vstack([data.X, np.zeros((extra, data.n_features))])
    y = np.concatenate([data.y, np.zeros(extra)])
    return Dataset(X, y)


def synthetic_dataset(n_rows, n_features, seed, noise=0.1):
    """Random well-conditioned regression problem from a 64-bit seed."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    X = rng.standard_normal((n_rows, n_features))
    theta_true = rng.standard_normal(n_features)
    y = X @ theta_true + noise * rng.standard_normal(n_rows)
    return Dataset(X, y)


def load_csv(path):
    """Load a dataset from CSV with d feature columns followed by the target.

    A single header line is tolerated and skipped when its fields do not
    parse as numbers.
    """
    with open(path) as fh:
        first = fh.readline()
    skip = 0
    try:
        [float(tok) for tok in first.strip().split(",")]
    except ValueError:
        skip = 1
    raw = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
    if raw.shape[1] < 2:
        raise ValueError("dataset CSV needs at least one feature column plus the target")
    return Dataset(raw[:, :-1], raw[:, -1])
