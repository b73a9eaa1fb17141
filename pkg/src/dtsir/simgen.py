"""Seeded generators for the benchmark designs.

Random streams come from numpy's PCG64 bit generator. A replication's
stream is keyed by ``SeedSequence(seed, spawn_key=(cell, rep))`` so it never
depends on scheduling order.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .slicing import Dataset

RNG_ALGORITHM = "numpy.random.PCG64 seeded by numpy.random.SeedSequence"

SETTINGS = ("I", "II", "III", "IV", "V", "VI", "VII", "linear")
MIN_P = {"I": 4, "II": 9, "III": 20, "IV": 3, "V": 9, "VI": 9, "VII": 9, "linear": 1}
NOISE_SCALE = {"I": 0.5, "II": 0.5, "III": 1.0, "IV": 0.5, "V": 1.0, "VI": 1.0, "VII": 1.0, "linear": 1.0}
COV_FAMILY = {
    "I": "identity",
    "II": "identity",
    "III": "identity",
    "IV": "tridiag",
    "V": "block_ar1",
    "VI": "tridiag",
    "VII": "ar1",
    "linear": "identity",
}
DEFAULT_RHO = 0.5


def make_rng(seed, *keys):
    """Generator for ``seed``, optionally sub-keyed by integers (cell, rep, ...)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


def normalize_setting(name):
    s = str(name).strip()
    if s.lower() == "linear":
        return "linear"
    s = s.upper()
    if s not in SETTINGS:
        raise InvalidArgumentError(f"unknown setting {name!r}; choose from {SETTINGS}")
    return s


@dataclass(frozen=True)
class SettingSpec:
    setting: str
    n: int
    p: int
    rho: float = DEFAULT_RHO
    seed: int = 0

    def __post_init__(self):
        s = normalize_setting(self.setting)
        object.__setattr__(self, "setting", s)
        if self.n < 0:
            raise InvalidArgumentError("n must be non-negative")
        if self.p < MIN_P[s]:
            raise InvalidArgumentError(f"setting {s} needs p >= {MIN_P[s]}, got {self.p}")
        if s == "V" and self.p % 10:
            raise InvalidArgumentError(f"setting V needs p divisible by 10, got {self.p}")
        if not -1 < self.rho < 1:
            raise InvalidArgumentError("rho must lie in (-1, 1)")


@dataclass(frozen=True)
class GroundTruth:
    V_true: np.ndarray
    d: int
    active: np.ndarray


def build_covariance(family, p, rho=DEFAULT_RHO):
    """Structured covariance with unit diagonal.

    ``tridiag`` has ``rho`` one off the diagonal and ``rho**2`` two off;
    ``ar1`` is ``rho**|i-j|``; ``block_ar1`` is ``B kron I_{p/10}`` with ``B``
    the 10 x 10 ar1 matrix.
    """
    if not -1 < rho < 1:
        raise InvalidArgumentError("rho must lie in (-1, 1)")
    idx = np.arange(p)
    lag = np.abs(idx[:, None] - idx[None, :])
    if family == "identity":
        S = np.eye(p)
    elif family == "tridiag":
        S = np.eye(p) + rho * (lag == 1) + rho**2 * (lag == 2)
    elif family == "ar1":
        S = np.power(float(rho), lag)
    elif family == "block_ar1":
        if p % 10:
            raise InvalidArgumentError(f"block_ar1 needs p divisible by 10, got {p}")
        B = build_covariance("ar1", 10, rho)
        S = np.kron(B, np.eye(p // 10))
    else:
        raise InvalidArgumentError(f"unknown covariance family {family!r}")
    if p:
        lo = np.linalg.eigvalsh(S)[0]
        if lo <= 0:
            raise InvalidArgumentError(
                f"{family}(rho={rho}) with p={p} is not positive definite "
                f"(min eigenvalue {lo:.3g})"
            )
    return S


def gaussian_sampler(Sigma, n, rng):
    """``n`` rows drawn i.i.d. from N(0, Sigma) as ``Z @ L.T`` with ``L`` the Cholesky factor."""
    Sigma = np.asarray(Sigma, dtype=float)
    p = Sigma.shape[0]
    try:
        L = np.linalg.cholesky(Sigma)
    except np.linalg.LinAlgError as exc:
        raise InvalidArgumentError(f"Sigma is not positive definite: {exc}") from exc
    Z = rng.standard_normal((int(n), p))
    return Z @ L.T


def _ground_truth(setting, p):
    def e(*cols):
        v = np.zeros(p)
        v[list(cols)] = 1.0
        return v

    if setting == "I":
        V = np.column_stack([e(0, 1), e(2, 3)])
    elif setting in ("II", "V", "VI", "VII"):
        V = np.column_stack([e(*range(7)), e(7, 8)])
    elif setting == "III":
        V = np.column_stack([e(*range(10)), e(*range(10, 20))])
    elif setting == "IV":
        V = e(0, 1, 2)[:, None]
    else:
        V = e(0)[:, None]
    active = np.flatnonzero(np.any(V != 0, axis=1))
    return GroundTruth(V_true=V, d=V.shape[1], active=active)


def _response(setting, X, eps):
    if setting == "I":
        f = np.sin(X[:, 0] + X[:, 1]) + np.exp(X[:, 2] + X[:, 3])
    elif setting in ("II", "V", "VI", "VII"):
        f = X[:, :7].sum(axis=1) * np.exp(X[:, 7] + X[:, 8])
    elif setting == "III":
        # exponent read as the sum of coordinates 11..20 of the same sample
        f = X[:, :10].sum(axis=1) * np.exp(X[:, 10:20].sum(axis=1))
    elif setting == "IV":
        f = (X[:, 0] + X[:, 1] + X[:, 2]) ** 3 / 2
    else:
        f = X[:, 0]
    return f + NOISE_SCALE[setting] * eps


def generate(spec, rng=None):
    """Draw ``(Dataset, GroundTruth)`` for a :class:`SettingSpec`.

    The predictors are drawn first, then the noise. ``rng`` overrides the
    generator otherwise built from ``spec.seed``.
    """
    if rng is None:
        rng = make_rng(spec.seed)
    s = spec.setting
    family = COV_FAMILY[s]
    if family == "identity":
        # identical to gaussian_sampler with L = I, minus the O(n p^2) product
        X = rng.standard_normal((spec.n, spec.p))
    else:
        X = gaussian_sampler(build_covariance(family, spec.p, spec.rho), spec.n, rng)
    eps = rng.standard_normal(spec.n)
    y = _response(s, X, eps)
    truth = _ground_truth(s, spec.p)
    return Dataset(y, X), truth


def write_dataset_csv(path, data):
    """Header ``y,x1,...,xp``; floats written with shortest round-trip repr."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["y"] + [f"x{j + 1}" for j in range(data.p)])
        for yi, row in zip(data.y.tolist(), data.X.tolist()):
            w.writerow([repr(yi)] + [repr(v) for v in row])


def write_truth_csv(path, truth):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"v{j + 1}" for j in range(truth.d)])
        for row in truth.V_true.tolist():
            w.writerow([repr(v) for v in row])


class CsvFormatError(InvalidArgumentError):
    code = "parse-error"
    exit_code = 2


def _read_numeric_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError(f"{path}: empty file") from None
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise CsvFormatError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(rec)}"
                )
            try:
                rows.append([float(v) for v in rec])
            except ValueError as exc:
                raise CsvFormatError(f"{path}:{lineno}: {exc}") from None
    return header, np.array(rows, dtype=float).reshape(len(rows), len(header))


def read_dataset_csv(path):
    header, A = _read_numeric_csv(path)
    if not header or header[0] != "y":
        raise CsvFormatError(f"{path}:1: first column must be 'y'")
    if A.shape[0] < 2:
        raise CsvFormatError(f"{path}: need at least two data rows")
    return Dataset(A[:, 0], A[:, 1:])


def read_truth_csv(path):
    _, A = _read_numeric_csv(path)
    return A
