"""Foundational matrix and eigendecomposition types.

Everything downstream (estimators, metrics, the simulation harness)
speaks in terms of the few constructs defined here: validated data
matrices, symmetric matrices, covariance estimates tagged with their
estimator, and descending eigensystems with a deterministic sign
convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, NumericalError

# Relative tolerance for accepting a matrix as symmetric, and the default
# relative cutoff below which an eigenvalue counts as numerically zero.
SYMMETRY_RTOL = 1e-12
RANK_RTOL = 1e-10

# Fixed estimator ordering used everywhere output is ranked or listed.
METHOD_ORDER = ("MLE", "LW", "PDC", "SPDC", "LSPDC", "MAXPDC", "RPDC")
ESTIMATOR_TAGS = ("POP",) + METHOD_ORDER


def fmt17(x: float) -> str:
    """Format a float with 17 significant digits (round-trip exact)."""
    return format(float(x), ".17g")


@dataclass(frozen=True)
class DataMatrix:
    """An n x p observation matrix, rows = observations, columns = dimensions.

    Parameters
    ----------
    values : ndarray, shape (n, p)
        Finite real entries.
    row_labels : sequence of str, optional
        One label per observation (e.g. gene IDs).
    col_labels : sequence of str, optional
        One label per dimension (e.g. condition names).
    """

    values: np.ndarray
    row_labels: tuple | None = None
    col_labels: tuple | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise InputError(f"data must be 2-dimensional, got ndim={v.ndim}")
        n, p = v.shape
        if n < 1 or p < 1:
            raise InputError(f"need n >= 1 and p >= 1, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InputError("data contains non-finite entries")
        if self.row_labels is not None and len(self.row_labels) != n:
            raise InputError(f"row_labels length {len(self.row_labels)} != n={n}")
        if self.col_labels is not None and len(self.col_labels) != p:
            raise InputError(f"col_labels length {len(self.col_labels)} != p={p}")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        if self.row_labels is not None:
            object.__setattr__(self, "row_labels", tuple(self.row_labels))
        if self.col_labels is not None:
            object.__setattr__(self, "col_labels", tuple(self.col_labels))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


def symmetrize(a: np.ndarray, rtol: float = SYMMETRY_RTOL) -> np.ndarray:
    """Validate near-symmetry and return the exactly symmetric part.

    The input must satisfy |a_ij - a_ji| <= rtol * max(1, |a_ij|) for all
    entries; the returned matrix is (A + A') / 2, read-only.

    Raises
    ------
    InputError
        Non-square, non-finite, or asymmetric beyond tolerance.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError("matrix contains non-finite entries")
    gap = np.abs(a - a.T)
    bound = rtol * np.maximum(1.0, np.abs(a))
    if np.any(gap > bound):
        worst = float(gap.max())
        raise InputError(f"matrix asymmetric beyond tolerance (max gap {worst:.3e})")
    out = 0.5 * (a + a.T)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class CovarianceEstimate:
    """A p x p covariance estimate tagged with the estimator that made it."""

    matrix: np.ndarray
    estimator: str
    n_used: int
    scaler_scope: str | None = None

    def __post_init__(self):
        if self.estimator not in ESTIMATOR_TAGS:
            raise InputError(f"unknown estimator tag {self.estimator!r}")
        m = symmetrize(self.matrix)
        d = np.diag(m)
        floor = -1e-10 * max(1.0, float(np.abs(d).max(initial=0.0)))
        if d.min(initial=0.0) < floor:
            raise NumericalError(
                f"{self.estimator}: negative diagonal entry {d.min():.3e} below tolerance"
            )
        object.__setattr__(self, "matrix", m)

    @property
    def p(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class EigenSystem:
    """Descending eigenvalues with matched unit-norm eigenvector columns.

    ``eigenvectors[:, i]`` pairs with ``eigenvalues[i]``. Each vector is
    sign-fixed so its largest-magnitude component is positive.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.eigenvalues, dtype=float)
        v = np.asarray(self.eigenvectors, dtype=float)
        if np.any(np.diff(w) > 0):
            raise InputError("eigenvalues must be non-increasing")
        norms = np.linalg.norm(v, axis=0)
        if np.any(np.abs(norms - 1.0) > 1e-10):
            raise InputError("eigenvectors must be unit norm")
        w = w.copy()
        v = v.copy()
        w.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "eigenvalues", w)
        object.__setattr__(self, "eigenvectors", v)

    @property
    def p(self) -> int:
        return self.eigenvalues.shape[0]

    def pc(self, index: int) -> np.ndarray:
        """The index-th principal component (1-based), a unit vector."""
        if not 1 <= index <= self.p:
            raise InputError(f"pc index {index} out of range 1..{self.p}")
        return self.eigenvectors[:, index - 1]


def _fix_signs(v: np.ndarray) -> np.ndarray:
    """Flip eigenvector columns so each one's largest-|entry| is positive."""
    idx = np.abs(v).argmax(axis=0)
    signs = np.sign(v[idx, np.arange(v.shape[1])])
    signs[signs == 0] = 1.0
    return v * signs


def sym_eigen(m: np.ndarray) -> EigenSystem:
    """Eigendecompose a symmetric matrix into a descending EigenSystem.

    Parameters
    ----------
    m : ndarray, shape (p, p)
        Near-symmetric real matrix (validated and symmetrized).

    Returns
    -------
    EigenSystem
        Eigenvalues descending, sign-fixed unit eigenvectors.

    Raises
    ------
    InputError
        Non-finite or asymmetric input.
    NumericalError
        LAPACK failure to converge.
    """
    a = symmetrize(m)
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    w = w[::-1]
    v = _fix_signs(v[:, ::-1])
    return EigenSystem(eigenvalues=w, eigenvectors=v)


def frobenius_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius norm of the difference of two equally sized symmetric matrices."""
    a = symmetrize(a)
    b = symmetrize(b)
    if a.shape != b.shape:
        raise InputError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b, "fro"))


def numerical_rank(m: np.ndarray, tol: float = RANK_RTOL) -> int:
    """Count eigenvalues whose magnitude exceeds tol times the largest magnitude.

    With the default tolerance this is the usual numerical rank; the
    magnitude form keeps the count meaningful for indefinite input too.
    """
    if tol <= 0:
        raise InputError("tol must be positive")
    w = sym_eigen(m).eigenvalues
    top = float(np.abs(w).max(initial=0.0))
    if top == 0.0:
        return 0
    return int(np.count_nonzero(np.abs(w) > tol * top))


def condition_number(m: np.ndarray, tol: float = RANK_RTOL) -> float:
    """Ratio of largest to smallest eigenvalue, or inf for a deficient matrix.

    Returns ``math.inf`` when the smallest eigenvalue is not strictly
    positive after the numerical-zero cutoff (tol relative to the largest
    eigenvalue). A rank-deficient covariance estimate therefore reports an
    infinite condition number even when rounding leaves its smallest
    eigenvalue a hair above zero.
    """
    w = sym_eigen(m).eigenvalues
    lam_max = float(w[0])
    lam_min = float(w[-1])
    if lam_max <= 0.0 or lam_min <= tol * lam_max:
        return math.inf
    return lam_max / lam_min


def matrix_to_csv(m: np.ndarray, header_lines: list[str] | None = None) -> str:
    """Render a symmetric matrix as CSV text, 17 significant digits per entry.

    header_lines, when given, are emitted first, each prefixed with '# '.
    """
    a = symmetrize(m)
    lines = [f"# {h}" for h in (header_lines or [])]
    for row in a:
        lines.append(",".join(fmt17(x) for x in row))
    return "\n".join(lines) + "\n"
