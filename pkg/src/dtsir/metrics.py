"""Projection matrices, subspace distances and direction angles."""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError

NORMS = ("frobenius", "operator")


@dataclass(frozen=True)
class Subspace:
    """Column space of a full-rank ``p x d`` basis."""

    basis: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=float)
        if B.ndim == 1:
            B = B[:, None]
        if B.ndim != 2 or B.shape[1] == 0:
            raise InvalidArgumentError("basis must be a non-empty p x d matrix")
        s = np.linalg.svd(B, compute_uv=False)
        if s[0] == 0 or s[-1] <= 1e-10 * s[0]:
            raise InvalidArgumentError("basis is rank deficient")
        object.__setattr__(self, "basis", B)

    @property
    def p(self):
        return self.basis.shape[0]

    @property
    def d(self):
        return self.basis.shape[1]


def _as_subspace(a):
    return a if isinstance(a, Subspace) else Subspace(a)


def projection(sub):
    """Orthogonal projector ``B (B^T B)^{-1} B^T`` onto the column space."""
    B = _as_subspace(sub).basis
    Q, _ = np.linalg.qr(B)
    P = Q @ Q.T
    return (P + P.T) / 2


def subspace_distance(a, b, norm="frobenius"):
    """Norm of the difference of the two orthogonal projectors.

    For two ``d``-dimensional spaces the Frobenius value lies in
    ``[0, sqrt(2d)]``, reaching the top for orthogonal spaces, while the
    operator value never exceeds 1. Spaces of different dimension are
    allowed; the value then compares unequal-rank projectors.
    """
    a, b = _as_subspace(a), _as_subspace(b)
    if a.p != b.p:
        raise InvalidArgumentError(f"ambient dimensions differ: {a.p} vs {b.p}")
    if norm not in NORMS:
        raise InvalidArgumentError(f"norm must be one of {NORMS}")
    if norm == "frobenius":
        # ||Pa - Pb||_F^2 = ||(I - Pa) Qb||_F^2 + ||(I - Pb) Qa||_F^2; the residual
        # form avoids both p x p matrices and the cancellation in da + db - 2||Qa'Qb||^2
        Qa, _ = np.linalg.qr(a.basis)
        Qb, _ = np.linalg.qr(b.basis)
        ra = Qb - Qa @ (Qa.T @ Qb)
        rb = Qa - Qb @ (Qb.T @ Qa)
        return float(np.sqrt(np.sum(ra * ra) + np.sum(rb * rb)))
    D = projection(a) - projection(b)
    return float(np.abs(np.linalg.eigvalsh(D)).max())


def vector_angle(u, v):
    """Acute angle in radians between the lines spanned by ``u`` and ``v``."""
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise InvalidArgumentError("angle undefined for a zero vector")
    c = abs(float(u @ v)) / (nu * nv)
    return float(np.arccos(min(1.0, c)))
