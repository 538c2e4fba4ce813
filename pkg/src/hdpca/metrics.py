"""Evaluation metrics for estimated eigensystems.

All three metrics are invariant under positive rescaling of the
covariance matrix: proportions divide by the trace, the angle metric
only sees directions, and overdispersion compares proportions.
"""

from __future__ import annotations

import numpy as np

from .core import EigenSystem
from .errors import InputError, NumericalError

# Eigenvalues this far below zero (relative to the largest) are treated as
# rounding noise and clamped; anything more negative is a real failure.
NEGATIVE_EIGENVALUE_RTOL = 1e-10


def explained_variance_proportions(eig: EigenSystem) -> np.ndarray:
    """Fraction of total variance captured by each eigenvalue, descending.

    Small negative eigenvalues (magnitude at most 1e-10 times the largest)
    are clamped to zero before normalizing. Larger negatives raise
    NumericalError: the input was not a covariance matrix to working
    precision. A spectrum that sums to zero has no defined proportions.
    """
    w = np.asarray(eig.eigenvalues, dtype=float)
    top = float(w.max(initial=0.0))
    if top <= 0.0:
        raise InputError("spectrum has no positive eigenvalue; proportions undefined")
    floor = -NEGATIVE_EIGENVALUE_RTOL * top
    if w.min() < floor:
        raise NumericalError(
            f"eigenvalue {w.min():.6e} too negative relative to largest {top:.6e}"
        )
    w = np.maximum(w, 0.0)
    total = w.sum()
    return w / total


def cosine_similarity_error(u: np.ndarray, v: np.ndarray) -> float:
    """1 - |cos(angle)| between two vectors; 0 means same direction.

    Sign-agnostic on purpose: eigenvectors are defined up to sign, and a
    flipped copy of the truth is a perfect recovery.
    """
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.shape != v.shape:
        raise InputError(f"vector length mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise InputError("cosine similarity undefined for a zero vector")
    c = abs(float(u @ v) / (nu * nv))
    return 1.0 - min(c, 1.0)


def overdispersion(pi_hat: float, pi_pop: float, p: int, n: int) -> float:
    """Squared gap in first-PC explained proportion, dimension-adjusted.

    Computes (pi_hat - pi_pop)^2 * p / (n - 1). The p/(n-1) factor makes
    values comparable across sweep cells where dimension outruns sample
    size at different rates.
    """
    if not (0.0 <= pi_hat <= 1.0):
        raise InputError(f"pi_hat must lie in [0, 1], got {pi_hat}")
    if not (0.0 <= pi_pop <= 1.0):
        raise InputError(f"pi_pop must lie in [0, 1], got {pi_pop}")
    if p < 1:
        raise InputError(f"p must be at least 1, got {p}")
    if n < 2:
        raise InputError(f"n must be at least 2, got {n}")
    gap = float(pi_hat) - float(pi_pop)
    return gap * gap * p / (n - 1)
