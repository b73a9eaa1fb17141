"""Covariance estimation: sample covariance, banding, bandwidth choice, SPD solves.

Banding follows Bickel and Levina: entries more than ``k`` places off the
diagonal are set to zero. The bandwidth is chosen by random 50/50 splits,
comparing the banded covariance of one half against the raw sample
covariance of the other.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    InsufficientDataError,
    InvalidArgumentError,
    SingularCovarianceError,
)

log = logging.getLogger(__name__)

SINGULAR_RTOL = 1e-10
PD_FLOOR_RTOL = 1e-8
DEFAULT_SPLITS = 10
# Above this dimension banded solves switch from dense eigh to banded Cholesky.
BANDED_SOLVER_MIN_P = 1500

COV_MODES = ("sample", "banded", "identity")


@dataclass(frozen=True)
class CovEstimate:
    sigma: np.ndarray
    mode: str
    bandwidth: int | None = None

    @property
    def p(self):
        return self.sigma.shape[0]


@dataclass(frozen=True)
class CovarianceClassParams:
    """Parameters of the banded-decay covariance class used by the theory.

    Kept as a validated record only; nothing here tests class membership.
    """

    epsilon0: float
    alpha: float
    C: float

    def __post_init__(self):
        if not (self.epsilon0 > 0 and self.alpha > 0 and self.C > 0):
            raise InvalidArgumentError("epsilon0, alpha and C must all be positive")


@dataclass(frozen=True)
class CovarianceConfig:
    """How the full-dimension covariance is estimated before inversion.

    ``bandwidth=None`` in banded mode means "choose by split risk".
    """

    mode: str = "banded"
    bandwidth: int | None = None
    ridge: float = 0.0
    candidates: tuple | None = None
    splits: int = DEFAULT_SPLITS

    def __post_init__(self):
        if self.mode not in COV_MODES:
            raise InvalidArgumentError(
                f"covariance mode must be one of {COV_MODES}, got {self.mode!r}"
            )
        if self.ridge < 0:
            raise InvalidArgumentError("ridge must be non-negative")
        if self.splits < 1:
            raise InvalidArgumentError("splits must be >= 1")


def sample_cov(X):
    """``(1/n) X^T X`` for an already centered ``X``."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if n < 2:
        raise InsufficientDataError("sample covariance needs n >= 2")
    S = X.T @ X / n
    S = (S + S.T) / 2
    return CovEstimate(sigma=S, mode="sample")


def band(sigma, k):
    sigma = np.asarray(sigma, dtype=float)
    p = sigma.shape[0]
    k = int(k)
    if k < 0 or k > p - 1:
        raise InvalidArgumentError(f"bandwidth k={k} outside [0, {p - 1}]")
    i = np.arange(p)
    mask = np.abs(i[:, None] - i[None, :]) <= k
    return np.where(mask, sigma, 0.0)


def default_bandwidth_candidates(p):
    """``0, 1, 2, 4, 8, ...`` up to ``p - 1``."""
    cands = [0]
    k = 1
    while k <= p - 1:
        cands.append(k)
        k *= 2
    return tuple(cands)


def _offset_sums(M, kmax):
    """Sum of entries on each of the diagonals ``0..kmax`` of a symmetric matrix,
    counting both triangles for off-diagonals."""
    out = np.array([np.trace(M, offset=m) for m in range(kmax + 1)])
    out[1:] *= 2
    return out


def _upper_gram(A):
    """Upper triangle of ``A.T @ A``; the strict lower triangle is zero."""
    return scipy.linalg.blas.dsyrk(1.0, np.asfortranarray(A), trans=1, lower=0)


def select_bandwidth(X, candidates=None, splits=DEFAULT_SPLITS, rng=None):
    """Pick a banding width by random-split Frobenius risk.

    For each split the rows are divided in half; the risk of a candidate
    ``k`` is ``||band(S_train, k) - S_test||_F``, averaged over splits.
    Ties go to the smallest ``k``.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if n < 4:
        raise InsufficientDataError(f"bandwidth selection needs n >= 4, got {n}")
    if candidates is None:
        candidates = default_bandwidth_candidates(p)
    candidates = sorted({int(k) for k in candidates})
    if not candidates:
        raise InvalidArgumentError("no bandwidth candidates given")
    if candidates[0] < 0 or candidates[-1] > p - 1:
        raise InvalidArgumentError(f"bandwidth candidates must lie in [0, {p - 1}]")
    if splits < 1:
        raise InvalidArgumentError("splits must be >= 1")
    if len(candidates) == 1:
        return candidates[0]
    if rng is None:
        rng = np.random.default_rng(0)

    kmax = candidates[-1]
    cand = np.asarray(candidates)
    n1 = n // 2
    n2 = n - n1
    # Only the upper triangle is formed (BLAS syrk); the strict lower triangle
    # stays zero throughout, and every diagonal sum below reads offsets >= 0.
    # S_train - S_test = gram / n1 - G * (1/n1 + 1/n2) with G the test-half Gram
    gram = _upper_gram(X)
    gram /= n1
    c = 1.0 / n1 + 1.0 / n2
    buf = np.empty((p, p), order="F")
    risks = np.zeros(len(candidates))
    for _ in range(splits):
        test = rng.permutation(n)[n1:]
        G = _upper_gram(X[test])
        np.multiply(G, c, out=buf)
        np.subtract(gram, buf, out=buf)
        buf *= buf
        cum_diff = np.cumsum(_offset_sums(buf, kmax))
        np.multiply(G, G, out=buf)
        total_test = (2.0 * buf.sum() - np.trace(buf)) / n2**2
        cum_test = np.cumsum(_offset_sums(buf, kmax)) / n2**2
        risk_sq = cum_diff[cand] + (total_test - cum_test[cand])
        risks += np.sqrt(np.maximum(risk_sq, 0.0))
    risks /= splits
    best = int(np.argmin(risks))  # first minimum, i.e. smallest k on ties
    return candidates[best]


def banded_cov(X, bandwidth=None, candidates=None, splits=DEFAULT_SPLITS, rng=None):
    if bandwidth is None:
        bandwidth = select_bandwidth(X, candidates=candidates, splits=splits, rng=rng)
    S = sample_cov(X).sigma
    return CovEstimate(sigma=band(S, bandwidth), mode="banded", bandwidth=int(bandwidth))


def estimate_covariance(X, config, rng=None):
    """Covariance of centered ``X`` according to a :class:`CovarianceConfig`."""
    X = np.asarray(X, dtype=float)
    if config.mode == "identity":
        return CovEstimate(sigma=np.eye(X.shape[1]), mode="identity")
    if config.mode == "sample":
        return sample_cov(X)
    return banded_cov(
        X,
        bandwidth=config.bandwidth,
        candidates=config.candidates,
        splits=config.splits,
        rng=rng,
    )


def _check_symmetric(sigma):
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise InvalidArgumentError("covariance must be a square matrix")
    scale = max(1.0, float(np.abs(sigma).max(initial=0.0)))
    if not np.allclose(sigma, sigma.T, atol=1e-10 * scale, rtol=0):
        raise InvalidArgumentError("covariance must be symmetric")
    return (sigma + sigma.T) / 2


def _spd_eig(sigma, ridge, floor):
    w, Q = scipy.linalg.eigh(sigma)
    w = w + ridge
    if floor:
        level = PD_FLOOR_RTOL * np.trace(sigma) / sigma.shape[0]
        if w[0] < level:
            log.warning(
                "banded covariance not positive definite (min eigenvalue %.3g); "
                "flooring eigenvalues at %.3g",
                w[0],
                level,
            )
            w = np.maximum(w, level)
    top = max(abs(w[0]), abs(w[-1]))
    if w[0] <= SINGULAR_RTOL * top:
        raise SingularCovarianceError(
            f"covariance is singular or near-singular (min eigenvalue {w[0]:.3g}, "
            f"norm {top:.3g}); use banded covariance or set a ridge",
            min_eigenvalue=float(w[0]),
        )
    return w, Q


def invert_spd(sigma, ridge=0.0, floor=False):
    """Inverse of ``sigma + ridge * I`` after checking it is safely positive definite.

    With ``floor=True`` (used for banded estimates) eigenvalues below
    ``1e-8 * trace / p`` are raised to that level, with a logged warning,
    instead of failing.
    """
    if ridge < 0:
        raise InvalidArgumentError("ridge must be non-negative")
    sigma = _check_symmetric(sigma)
    w, Q = _spd_eig(sigma, ridge, floor)
    return (Q / w) @ Q.T


def _banded_solve(sigma, k, rhs, ridge):
    p = sigma.shape[0]
    ab = np.zeros((k + 1, p))
    for m in range(k + 1):
        ab[k - m, m:] = np.diagonal(sigma, offset=m)
    ab[k] += ridge
    try:
        cb = scipy.linalg.cholesky_banded(ab, lower=False)
    except np.linalg.LinAlgError:
        return None
    diag = cb[k]
    # Cholesky diagonal squared bounds the spectrum loosely; use it as a cheap guard.
    if diag.min() ** 2 <= SINGULAR_RTOL * np.abs(sigma).sum(axis=1).max():
        return None
    return scipy.linalg.cho_solve_banded((cb, False), rhs)


def solve_cov(cov, rhs, ridge=0.0):
    """Apply the inverse of a :class:`CovEstimate` to ``rhs``.

    Identity mode returns ``rhs`` unchanged. Sample mode refuses
    near-singular matrices. Banded mode floors non-PD spectra and, at large
    ``p`` with a narrow band, solves in banded storage.
    """
    rhs = np.asarray(rhs, dtype=float)
    if cov.mode == "identity":
        return rhs / (1.0 + ridge)
    if cov.mode == "banded":
        k = cov.bandwidth
        if cov.p >= BANDED_SOLVER_MIN_P and k is not None and k < cov.p // 8:
            out = _banded_solve(cov.sigma, k, rhs, ridge)
            if out is not None:
                return out
        return invert_spd(cov.sigma, ridge=ridge, floor=True) @ rhs
    return invert_spd(cov.sigma, ridge=ridge) @ rhs
