"""Classical sliced inverse regression.

The slice-mean outer-product average ``Lambda_hat = (1/H) sum_h m_h m_h^T``
estimates ``var(E[x | y])``; its leading eigenvectors span ``Sigma_x`` times
the central space, so the central space is recovered by applying the inverse
covariance to them.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .covariance import CovarianceConfig, estimate_covariance, solve_cov
from .errors import (
    DegenerateSpectrumError,
    EigenSolverError,
    InvalidArgumentError,
)
from .slicing import center, slice_by_response, slice_means

BETA_FORMS = ("eigen", "generalized")


@dataclass(frozen=True)
class ModelConfig:
    """Settings for one SIR fit.

    ``beta_form="eigen"`` multiplies the inverse covariance onto the top
    eigenvectors of ``Lambda_hat``; ``"generalized"`` instead takes the top
    generalized eigenvectors of ``(Lambda_hat, Sigma_hat)``.
    """

    H: int
    d: int = 1
    covariance_mode: str = "sample"
    bandwidth: int | None = None
    ridge: float = 0.0
    beta_form: str = "eigen"

    def __post_init__(self):
        if self.H < 2:
            raise InvalidArgumentError("H must be >= 2")
        if self.d < 1:
            raise InvalidArgumentError("d must be >= 1")
        if self.beta_form not in BETA_FORMS:
            raise InvalidArgumentError(f"beta_form must be one of {BETA_FORMS}")
        if self.d > self.H - 1:
            warnings.warn(
                f"d={self.d} exceeds H-1={self.H - 1}; Lambda_hat of centered data "
                "has rank at most H-1",
                stacklevel=3,
            )
        # validates mode and ridge
        self.covariance

    @property
    def covariance(self):
        return CovarianceConfig(
            mode=self.covariance_mode, bandwidth=self.bandwidth, ridge=self.ridge
        )


@dataclass(frozen=True)
class SirEstimate:
    lambda_hat: np.ndarray
    eigvals: np.ndarray
    V_hat: np.ndarray
    beta_hat: np.ndarray
    H: int
    d: int
    bandwidth: int | None = None
    extra: dict = field(default_factory=dict)


def lambda_hat(means):
    M = means.M
    return M.T @ M / M.shape[0]


def fix_signs(V):
    """Flip columns so that each one's largest-magnitude entry is positive.

    ``argmax`` returns the lowest index on ties.
    """
    V = np.array(V, dtype=float, copy=True)
    if V.size == 0:
        return V
    rows = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[rows, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def top_d_eigvecs(S, d):
    """Top ``d`` eigenpairs of a symmetric matrix, eigenvalues descending."""
    S = np.asarray(S, dtype=float)
    p = S.shape[0]
    if S.ndim != 2 or S.shape[1] != p:
        raise InvalidArgumentError("S must be square")
    if not 1 <= d <= p:
        raise InvalidArgumentError(f"d={d} must lie in [1, {p}]")
    scale = max(1.0, float(np.abs(S).max()))
    if not np.allclose(S, S.T, atol=1e-8 * scale, rtol=0):
        raise InvalidArgumentError("S must be symmetric")
    S = (S + S.T) / 2
    try:
        w, V = scipy.linalg.eigh(S, subset_by_index=[p - d, p - 1])
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigenSolverError(f"symmetric eigensolver failed: {exc}") from exc
    w = w[::-1]
    V = V[:, ::-1]
    return w, fix_signs(V)


def _top_from_means(M, d):
    """Top eigenpairs of ``M^T M / H`` through a thin SVD of the ``H x p`` means.

    Equivalent to :func:`top_d_eigvecs` on ``lambda_hat`` but costs
    ``O(H^2 p)`` rather than ``O(p^3)``.
    """
    H, p = M.shape
    if d > p:
        raise InvalidArgumentError(f"d={d} exceeds dimension {p}")
    try:
        _, s, Vt = np.linalg.svd(M / np.sqrt(H), full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"SVD failed: {exc}") from exc
    r = s.shape[0]
    if d <= r:
        return s[:d] ** 2, fix_signs(Vt[:d].T)
    # d beyond the rank: fill with an orthonormal basis of the null space
    lam = M.T @ M / H
    return top_d_eigvecs(lam, d)


def _unit_columns(B):
    norms = np.linalg.norm(B, axis=0)
    norms[norms == 0] = 1.0
    return B / norms


def sir_fit(data, cfg, rng=None):
    """Fit SIR on ``data`` (a :class:`~dtsir.slicing.Dataset`).

    ``rng`` is consulted only when banded mode has to choose its bandwidth.
    """
    Xc, _ = center(data.X)
    plan = slice_by_response(data.y, cfg.H)
    means = slice_means(Xc, plan)
    lam = lambda_hat(means)
    if cfg.d > data.p:
        raise InvalidArgumentError(f"d={cfg.d} exceeds p={data.p}")

    cov = estimate_covariance(Xc, cfg.covariance, rng=rng)
    if cfg.beta_form == "generalized" and cov.mode != "identity":
        sigma = cov.sigma + cfg.ridge * np.eye(data.p)
        # raises the singular-covariance error before LAPACK does
        solve_cov(cov, np.zeros((data.p, 1)), ridge=cfg.ridge)
        w, B = scipy.linalg.eigh(
            (lam + lam.T) / 2, sigma, subset_by_index=[data.p - cfg.d, data.p - 1]
        )
        eigvals, V_hat = top_d_eigvecs(lam, cfg.d)
        beta = fix_signs(_unit_columns(B[:, ::-1]))
        return SirEstimate(
            lambda_hat=lam,
            eigvals=eigvals,
            V_hat=V_hat,
            beta_hat=beta,
            H=cfg.H,
            d=cfg.d,
            bandwidth=cov.bandwidth,
            extra={"generalized_eigvals": w[::-1]},
        )

    eigvals, V_hat = _top_from_means(means.M, cfg.d)
    beta = solve_cov(cov, V_hat, ridge=cfg.ridge)
    return SirEstimate(
        lambda_hat=lam,
        eigvals=eigvals,
        V_hat=V_hat,
        beta_hat=_unit_columns(beta),
        H=cfg.H,
        d=cfg.d,
        bandwidth=cov.bandwidth,
    )


def eigengap_suggest_d(eigvals, H=None):
    """Suggest a structural dimension from the largest ratio of consecutive eigenvalues.

    Only a convenience; the dimension is assumed known everywhere else.
    """
    lam = np.asarray(eigvals, dtype=float)
    if lam.size < 2:
        raise InvalidArgumentError("need at least two eigenvalues")
    if np.any(np.diff(lam) > 1e-12 * max(1.0, abs(lam[0]))):
        raise InvalidArgumentError("eigenvalues must be nonincreasing")
    if lam[0] < 1e-12:
        raise DegenerateSpectrumError("all eigenvalues are below 1e-12")
    upper = lam.size - 1
    if H is not None:
        upper = min(upper, H - 1)
    upper = max(upper, 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = lam[:upper] / np.maximum(lam[1 : upper + 1], 0.0)
    ratios = np.where(np.isnan(ratios), 0.0, ratios)
    return int(np.argmax(ratios)) + 1
