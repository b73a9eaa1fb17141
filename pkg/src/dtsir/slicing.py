"""Response-ordered slicing and the per-coordinate slice statistics."""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class Dataset:
    """A response vector ``y`` paired with an ``n x p`` predictor matrix ``X``."""

    y: np.ndarray
    X: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        X = np.asarray(self.X, dtype=float)
        if y.ndim != 1:
            raise InvalidArgumentError("y must be one-dimensional")
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2:
            raise InvalidArgumentError("X must be a 2-d matrix")
        if X.shape[0] != y.shape[0]:
            raise InvalidArgumentError(
                f"X has {X.shape[0]} rows but y has {y.shape[0]} entries"
            )
        if y.shape[0] < 2:
            raise InvalidArgumentError("need at least two samples")
        if X.shape[1] < 1:
            raise InvalidArgumentError("need at least one predictor")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
            raise InvalidArgumentError("data contain non-finite entries")
        y.setflags(write=False)
        X.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    def columns(self, idx):
        return Dataset(self.y, self.X[:, np.asarray(idx, dtype=int)])


@dataclass(frozen=True)
class SlicePlan:
    """Partition of ``range(n)`` into ``H`` consecutive blocks of the sorted response.

    ``order`` is the stable argsort of ``y``; slice ``h`` is
    ``order[bounds[h]:bounds[h + 1]]``.
    """

    H: int
    order: np.ndarray
    bounds: np.ndarray

    @property
    def n(self):
        return int(self.bounds[-1])

    @property
    def sizes(self):
        return np.diff(self.bounds)

    @property
    def slices(self):
        return [self.order[self.bounds[h]:self.bounds[h + 1]] for h in range(self.H)]


@dataclass(frozen=True)
class SliceMeans:
    M: np.ndarray
    grand_mean: np.ndarray

    @property
    def H(self):
        return self.M.shape[0]


def slice_by_response(y, H):
    """Sort samples by response and cut them into ``H`` near-equal slices.

    Slice sizes are ``n // H`` or ``n // H + 1``; the first ``n % H`` slices
    take the extra sample. Ties in ``y`` keep their original index order.
    """
    y = np.asarray(y, dtype=float).ravel()
    n = y.shape[0]
    H = int(H)
    if H < 2 or H > n:
        raise InvalidArgumentError(f"slice count H={H} must satisfy 2 <= H <= n={n}")
    order = np.argsort(y, kind="stable")
    base, extra = divmod(n, H)
    sizes = np.full(H, base, dtype=np.intp)
    sizes[:extra] += 1
    bounds = np.concatenate(([0], np.cumsum(sizes)))
    order.setflags(write=False)
    bounds.setflags(write=False)
    return SlicePlan(H=H, order=order, bounds=bounds)


def center(X):
    """Subtract column means; returns ``(centered, means)``."""
    X = np.asarray(X, dtype=float)
    mean = X.mean(axis=0)
    return X - mean, mean


def slice_means(X, plan):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != plan.n:
        raise AssertionError(
            f"slice plan covers {plan.n} rows but X has {X.shape[0]}"
        )
    sums = np.add.reduceat(X[plan.order], plan.bounds[:-1], axis=0)
    M = sums / plan.sizes[:, None]
    return SliceMeans(M=M, grand_mean=X.mean(axis=0))


def var_h(X, plan):
    """Screening statistic ``(1/H) * sum_h xbar_h(k)**2`` for every column ``k``.

    ``X`` is expected to be centered. The result is the diagonal of the
    slice-mean outer-product average.
    """
    M = slice_means(X, plan).M
    return np.einsum("hk,hk->k", M, M) / plan.H
