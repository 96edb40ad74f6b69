"""Proximal operators and norm-ball projections.

Everything here is a pure function of its array inputs.  The thin SVD is
wrapped so that signs and rank are reproducible, which keeps the solver
traces bit-stable across runs.
"""
from dataclasses import dataclass

import numpy as np

RANK_CUTOFF = 1e-12


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``M = U @ diag(s) @ V.T`` with only the nonzero part kept."""

    left_vectors: np.ndarray
    singular_values: np.ndarray
    right_vectors: np.ndarray

    @property
    def rank(self):
        return self.singular_values.size

    def reconstruct(self):
        U, s, V = self.left_vectors, self.singular_values, self.right_vectors
        return (U * s) @ V.T


def _as_finite_matrix(M, name="M"):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        bad = np.argwhere(~np.isfinite(M))[0]
        raise ValueError(f"{name} has a non-finite entry at {tuple(bad)}")
    return M


def _check_positive(value, name):
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value!r}")


def thin_svd(M):
    """Deterministic thin SVD.

    Singular values below ``1e-12 * s[0]`` are dropped.  Each left singular
    vector is flipped so that its first nonzero component is nonnegative,
    and the matching right vector is flipped with it.
    """
    M = _as_finite_matrix(M)
    m, n = M.shape
    if M.size == 0 or not np.any(M):
        return SvdFactors(np.zeros((m, 0)), np.zeros(0), np.zeros((n, 0)))
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    keep = int(np.count_nonzero(s > RANK_CUTOFF * s[0]))
    U, s, V = U[:, :keep], s[:keep], Vt[:keep].T
    # first entry of each column whose magnitude is above round-off
    tol = 1e-12 * np.abs(U).max(axis=0)
    lead = np.argmax(np.abs(U) > tol, axis=0)
    signs = np.sign(U[lead, np.arange(keep)])
    signs[signs == 0] = 1.0
    return SvdFactors(U * signs, s.copy(), V * signs)


def svt(M, mu):
    """Singular value thresholding, the prox of ``mu * ||.||_*``."""
    _check_positive(mu, "mu")
    f = thin_svd(M)
    s = np.maximum(f.singular_values - mu, 0.0)
    k = int(np.count_nonzero(s))
    return (f.left_vectors[:, :k] * s[:k]) @ f.right_vectors[:, :k].T


def soft_threshold(M, mu):
    """Entrywise shrinkage, the prox of ``mu * ||.||_1``."""
    _check_positive(mu, "mu")
    M = np.asarray(M, dtype=float)
    return np.sign(M) * np.maximum(np.abs(M) - mu, 0.0)


def project_spectral_ball(M, radius):
    """Frobenius-nearest point with spectral norm at most ``radius``."""
    _check_positive(radius, "radius")
    M = _as_finite_matrix(M)
    f = thin_svd(M)
    # slack absorbs SVD round-off so that a second projection is a no-op
    over = f.singular_values > radius * (1.0 + 1e-10)
    if not np.any(over):
        return M.copy()
    # subtract only the excess so that the untouched part stays bit-exact
    excess = f.singular_values[over] - radius
    U, V = f.left_vectors[:, over], f.right_vectors[:, over]
    return M - (U * excess) @ V.T


def project_inf_ball(M, bound):
    """Entrywise clamp to ``[-bound, bound]``."""
    _check_positive(bound, "bound")
    return np.clip(np.asarray(M, dtype=float), -bound, bound)


def nuclear_norm(M):
    return float(thin_svd(M).singular_values.sum())


def spectral_norm(M):
    s = thin_svd(M).singular_values
    return float(s[0]) if s.size else 0.0


def numerical_rank(M, rel_tol=1e-6):
    """Count singular values above ``rel_tol`` times the largest one."""
    s = thin_svd(M).singular_values
    if s.size == 0:
        return 0
    return int(np.count_nonzero(s > rel_tol * s[0]))
