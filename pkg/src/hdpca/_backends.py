"""Accumulation kernels: numba-jitted hot paths with a numpy fallback.

The environment variable HDPCA_BACKEND selects the implementation:

* ``auto`` (default): numba when importable, else numpy
* ``numba``: require the jitted kernels, error if numba is missing
* ``numpy``: force the pure-numpy path

Both paths compute the same symmetrized accumulation

    E = sum_i 0.5 * (G_i' G_i + s_i s_i')

where G_i stacks observation i's scaled difference rows and s_i is their
column sum. They agree to rounding (different summation order), not bit
for bit; callers compare with relative tolerances.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import InputError

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

# per-pair scaler kind codes shared by both backends
KIND_STANDARDIZE = 0
KIND_MAXABS = 1
KIND_RANGE = 2


def backend_name() -> str:
    """Resolve the active backend from HDPCA_BACKEND."""
    choice = os.environ.get("HDPCA_BACKEND", "auto").strip().lower()
    if choice not in ("auto", "numba", "numpy"):
        raise InputError(f"HDPCA_BACKEND must be auto, numba, or numpy, got {choice!r}")
    if choice == "numba" and not HAVE_NUMBA:
        raise InputError("HDPCA_BACKEND=numba but numba is not importable")
    if choice == "auto":
        return "numba" if HAVE_NUMBA else "numpy"
    return choice


# ---------------------------------------------------------------------------
# numpy fallback path
# ---------------------------------------------------------------------------

def _accum_affine_np(x: np.ndarray, shift: np.ndarray, scale: np.ndarray) -> np.ndarray:
    n, p = x.shape
    E = np.zeros((p, p))
    for i in range(n):
        g = (x[i] - np.delete(x, i, axis=0) - shift) / scale
        s = g.sum(axis=0)
        E += g.T @ g + np.outer(s, s)
    return 0.5 * E


def _accum_local_np(x: np.ndarray, varmat: np.ndarray, eps: float) -> np.ndarray:
    n, p = x.shape
    E = np.zeros((p, p))
    for i in range(n):
        others = np.delete(np.arange(n), i)
        den = np.sqrt(varmat[i] + varmat[others])
        den = np.where(den < eps, 1.0, den)
        g = (x[i] - x[others]) / den
        s = g.sum(axis=0)
        E += g.T @ g + np.outer(s, s)
    return 0.5 * E


def _accum_perpair_np(x: np.ndarray, kind: int, eps: float) -> np.ndarray:
    n, p = x.shape
    E = np.zeros((p, p))
    for i in range(n):
        d = x[i] - np.delete(x, i, axis=0)
        if kind == KIND_STANDARDIZE:
            mu = d.mean(axis=1, keepdims=True)
            sd = d.std(axis=1, keepdims=True)
            sd = np.where(sd < eps, 1.0, sd)
            g = (d - mu) / sd
        elif kind == KIND_MAXABS:
            c = np.abs(d).max(axis=1, keepdims=True)
            c = np.where(c < eps, 1.0, c)
            g = d / c
        else:
            c = d.max(axis=1, keepdims=True) - d.min(axis=1, keepdims=True)
            c = np.where(c < eps, 1.0, c)
            g = d / c
        s = g.sum(axis=0)
        E += g.T @ g + np.outer(s, s)
    return 0.5 * E


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def _accum_affine_nb(x, shift, scale):  # pragma: no cover - jitted
        n, p = x.shape
        E = np.zeros((p, p))
        G = np.empty((n - 1, p))
        s = np.empty(p)
        for i in range(n):
            for a in range(p):
                s[a] = 0.0
            r = 0
            for j in range(n):
                if j == i:
                    continue
                for a in range(p):
                    v = (x[i, a] - x[j, a] - shift[a]) / scale[a]
                    G[r, a] = v
                    s[a] += v
                r += 1
            E += np.dot(G.T, G)
            for a in range(p):
                sa = s[a]
                for b in range(p):
                    E[a, b] += sa * s[b]
        return 0.5 * E

    @njit(cache=True, nogil=True)
    def _accum_local_nb(x, varmat, eps):  # pragma: no cover - jitted
        n, p = x.shape
        E = np.zeros((p, p))
        G = np.empty((n - 1, p))
        s = np.empty(p)
        for i in range(n):
            for a in range(p):
                s[a] = 0.0
            r = 0
            for j in range(n):
                if j == i:
                    continue
                for a in range(p):
                    den = np.sqrt(varmat[i, a] + varmat[j, a])
                    if den < eps:
                        den = 1.0
                    v = (x[i, a] - x[j, a]) / den
                    G[r, a] = v
                    s[a] += v
                r += 1
            E += np.dot(G.T, G)
            for a in range(p):
                sa = s[a]
                for b in range(p):
                    E[a, b] += sa * s[b]
        return 0.5 * E

    @njit(cache=True, nogil=True)
    def _accum_perpair_nb(x, kind, eps):  # pragma: no cover - jitted
        n, p = x.shape
        E = np.zeros((p, p))
        G = np.empty((n - 1, p))
        g = np.empty(p)
        s = np.empty(p)
        for i in range(n):
            for a in range(p):
                s[a] = 0.0
            r = 0
            for j in range(n):
                if j == i:
                    continue
                for a in range(p):
                    g[a] = x[i, a] - x[j, a]
                if kind == 0:
                    mu = 0.0
                    for a in range(p):
                        mu += g[a]
                    mu /= p
                    sq = 0.0
                    for a in range(p):
                        sq += (g[a] - mu) * (g[a] - mu)
                    sd = np.sqrt(sq / p)
                    if sd < eps:
                        sd = 1.0
                    for a in range(p):
                        g[a] = (g[a] - mu) / sd
                elif kind == 1:
                    c = 0.0
                    for a in range(p):
                        if abs(g[a]) > c:
                            c = abs(g[a])
                    if c < eps:
                        c = 1.0
                    for a in range(p):
                        g[a] = g[a] / c
                else:
                    lo = g[0]
                    hi = g[0]
                    for a in range(1, p):
                        if g[a] < lo:
                            lo = g[a]
                        if g[a] > hi:
                            hi = g[a]
                    c = hi - lo
                    if c < eps:
                        c = 1.0
                    for a in range(p):
                        g[a] = g[a] / c
                for a in range(p):
                    G[r, a] = g[a]
                    s[a] += g[a]
                r += 1
            E += np.dot(G.T, G)
            for a in range(p):
                sa = s[a]
                for b in range(p):
                    E[a, b] += sa * s[b]
        return 0.5 * E


def accum_affine(x: np.ndarray, shift: np.ndarray, scale: np.ndarray) -> np.ndarray:
    """E accumulation with rows transformed as (d - shift) / scale."""
    x = np.ascontiguousarray(x, dtype=float)
    shift = np.ascontiguousarray(np.broadcast_to(shift, (x.shape[1],)), dtype=float)
    scale = np.ascontiguousarray(np.broadcast_to(scale, (x.shape[1],)), dtype=float)
    if backend_name() == "numba":
        return _accum_affine_nb(x, shift, scale)
    return _accum_affine_np(x, shift, scale)


def accum_local(x: np.ndarray, varmat: np.ndarray, eps: float) -> np.ndarray:
    """E accumulation with rows d_ij divided by sqrt(var_i + var_j)."""
    x = np.ascontiguousarray(x, dtype=float)
    varmat = np.ascontiguousarray(np.broadcast_to(varmat, x.shape), dtype=float)
    if backend_name() == "numba":
        return _accum_local_nb(x, varmat, eps)
    return _accum_local_np(x, varmat, eps)


def accum_perpair(x: np.ndarray, kind: int, eps: float) -> np.ndarray:
    """E accumulation with per-row statistics computed at apply time."""
    if kind not in (KIND_STANDARDIZE, KIND_MAXABS, KIND_RANGE):
        raise InputError(f"unknown per-pair kind code {kind}")
    x = np.ascontiguousarray(x, dtype=float)
    if backend_name() == "numba":
        return _accum_perpair_nb(x, kind, eps)
    return _accum_perpair_np(x, kind, eps)
