"""Diagonal-thresholding SIR: screen coordinates by their slice variance, run
SIR on the survivors, embed back into ``p`` dimensions and multiply by the
inverse covariance estimate.
"""

from dataclasses import dataclass

import numpy as np

from .covariance import CovarianceConfig, estimate_covariance, solve_cov
from .errors import InvalidArgumentError, ScreeningTooAggressiveError
from .sir import SirEstimate, _top_from_means, _unit_columns, lambda_hat
from .slicing import center, slice_by_response, slice_means, var_h


@dataclass(frozen=True)
class AuxiliaryThreshold:
    """Maximum slice variance over ``p_prime`` synthetic N(0, 1) coordinates
    sliced by the observed response. ``p_prime=None`` means ``p``."""

    p_prime: int | None = None

    def describe(self):
        return {"kind": "auxiliary", "p_prime": self.p_prime}


@dataclass(frozen=True)
class TheoreticalThreshold:
    a: float
    s: float
    omega: float

    def describe(self):
        return {"kind": "theoretical", "a": self.a, "s": self.s, "omega": self.omega}


@dataclass(frozen=True)
class FixedThreshold:
    value: float

    def describe(self):
        return {"kind": "fixed", "value": self.value}


@dataclass(frozen=True)
class ScreeningResult:
    stats: np.ndarray
    threshold: float
    included: np.ndarray
    excluded: np.ndarray
    threshold_source: dict


@dataclass(frozen=True)
class DtSirEstimate:
    screening: ScreeningResult
    restricted_sir: SirEstimate
    embedded_V: np.ndarray
    beta_hat: np.ndarray
    H_screen: int
    H_sir: int
    bandwidth: int | None = None


def default_slice_counts(n):
    """``(H_screen, H_sir)``: 20 and 20 above n = 1000, else 10 and 20."""
    return (20, 20) if n > 1000 else (10, 20)


def theoretical_threshold(a, s, omega):
    """``a * s ** (-omega)``."""
    if not (a > 0 and s >= 1 and omega > 0):
        raise InvalidArgumentError("need a > 0, s >= 1 and omega > 0")
    return float(a * s ** (-omega))


def theoretical_slice_count(n, s, omega, p):
    """Slice count ``log(n / (s**omega * log p))`` suggested by the screening theory,
    rounded and clipped to at least 2. Not used by default."""
    val = np.log(n / (s**omega * np.log(p)))
    return max(2, int(round(val)))


def auxiliary_threshold(y, H, p_prime, rng):
    """Largest screening statistic among ``p_prime`` pure-noise coordinates.

    The noise is independent of ``y`` but sliced with the same plan, so the
    value calibrates what the statistic looks like for an irrelevant
    predictor at this ``(n, H)``.
    """
    if p_prime < 1:
        raise InvalidArgumentError("p_prime must be >= 1")
    y = np.asarray(y, dtype=float)
    plan = slice_by_response(y, H)
    Z = rng.standard_normal((y.shape[0], int(p_prime)))
    Zc, _ = center(Z)
    return float(var_h(Zc, plan).max())


def _resolve_threshold(source, y, H, p, rng):
    if isinstance(source, FixedThreshold):
        if source.value < 0:
            raise InvalidArgumentError("threshold must be >= 0")
        return float(source.value)
    if isinstance(source, TheoreticalThreshold):
        return theoretical_threshold(source.a, source.s, source.omega)
    if isinstance(source, AuxiliaryThreshold):
        if rng is None:
            raise InvalidArgumentError("auxiliary threshold needs an rng")
        return auxiliary_threshold(y, H, source.p_prime or p, rng)
    raise InvalidArgumentError(f"unknown threshold source {source!r}")


def _screen_centered(Xc, y, H, threshold, source=None):
    if threshold < 0:
        raise InvalidArgumentError("threshold must be >= 0")
    stats = var_h(Xc, slice_by_response(y, H))
    keep = stats > threshold
    return ScreeningResult(
        stats=stats,
        threshold=float(threshold),
        included=np.flatnonzero(keep),
        excluded=np.flatnonzero(~keep),
        threshold_source=source or {"kind": "fixed", "value": float(threshold)},
    )


def screen(data, H, threshold):
    """Keep coordinates whose slice variance strictly exceeds ``threshold``."""
    Xc, _ = center(data.X)
    return _screen_centered(Xc, data.y, H, threshold)


def embed_rows(V, rows, p):
    out = np.zeros((p, V.shape[1]))
    out[np.asarray(rows, dtype=int)] = V
    return out


def restricted_sir(Xc, y, rows, H_sir, d, cov_cfg, rng=None):
    """SIR on a column subset followed by full-dimension inverse covariance.

    The restricted step eigendecomposes the slice-mean matrix of the chosen
    columns directly; the covariance of all ``p`` columns enters only when
    mapping the embedded eigenvectors back.

    Returns ``(restricted SirEstimate, embedded V, beta_hat, bandwidth)``.
    """
    n, p = Xc.shape
    rows = np.asarray(rows, dtype=int)
    if rows.size < d:
        raise InvalidArgumentError(f"need at least d={d} columns, got {rows.size}")
    plan = slice_by_response(y, H_sir)
    means = slice_means(Xc[:, rows], plan)
    eigvals, V = _top_from_means(means.M, d)
    sub = SirEstimate(
        lambda_hat=lambda_hat(means),
        eigvals=eigvals,
        V_hat=V,
        beta_hat=V,
        H=H_sir,
        d=d,
    )
    E = embed_rows(V, rows, p)
    cov = estimate_covariance(Xc, cov_cfg, rng=rng)
    beta = _unit_columns(solve_cov(cov, E, ridge=cov_cfg.ridge))
    return sub, E, beta, cov.bandwidth


def dtsir_fit(
    data,
    d=1,
    H_screen=None,
    H_sir=None,
    threshold=AuxiliaryThreshold(),
    cov=CovarianceConfig(),
    rng=None,
):
    """Run the full screening-plus-SIR pipeline.

    ``rng`` drives the auxiliary noise draw and the bandwidth splits; both
    are taken from it in that order.
    """
    if d < 1:
        raise InvalidArgumentError("d must be >= 1")
    hs, hr = default_slice_counts(data.n)
    H_screen = H_screen or hs
    H_sir = H_sir or hr
    if rng is None:
        rng = np.random.default_rng(0)

    Xc, _ = center(data.X)
    t = _resolve_threshold(threshold, data.y, H_screen, data.p, rng)
    result = _screen_centered(Xc, data.y, H_screen, t, source=threshold.describe())
    if result.included.size < d:
        raise ScreeningTooAggressiveError(result.included.size, t, d)
    sub, E, beta, bw = restricted_sir(Xc, data.y, result.included, H_sir, d, cov, rng=rng)
    return DtSirEstimate(
        screening=result,
        restricted_sir=sub,
        embedded_V=E,
        beta_hat=beta,
        H_screen=H_screen,
        H_sir=H_sir,
        bandwidth=bw,
    )


def sure_baseline(data, keep):
    """Indices of the ``keep`` largest absolute marginal correlations with ``y``.

    Zero-variance columns score 0; ties go to the lowest index.
    """
    p = data.p
    if not 1 <= keep <= p:
        raise InvalidArgumentError(f"keep={keep} must lie in [1, {p}]")
    Xc, _ = center(data.X)
    yc = data.y - data.y.mean()
    sx = np.sqrt((Xc * Xc).sum(axis=0))
    sy = np.sqrt(yc @ yc)
    num = np.abs(Xc.T @ yc)
    with np.errstate(divide="ignore", invalid="ignore"):
        corr = np.where(sx > 0, num / (sx * sy if sy > 0 else 1.0), 0.0)
    if sy == 0:
        corr = np.zeros(p)
    order = np.lexsort((np.arange(p), -corr))
    return np.sort(order[:keep])


def parse_threshold(text):
    """Parse ``aux``, ``aux=<p_prime>``, ``fixed=<v>`` or ``theory=<a>,<s>,<omega>``."""
    text = str(text).strip()
    kind, _, arg = text.partition("=")
    kind = kind.strip().lower()
    try:
        if kind in ("aux", "auxiliary"):
            return AuxiliaryThreshold(int(arg) if arg else None)
        if kind == "fixed":
            return FixedThreshold(float(arg))
        if kind in ("theory", "theoretical"):
            a, s, w = (float(v) for v in arg.split(","))
            return TheoreticalThreshold(a, s, w)
    except ValueError:
        pass
    raise InvalidArgumentError(
        f"bad threshold {text!r}; use aux, fixed=<v> or theory=<a,s,w>"
    )
