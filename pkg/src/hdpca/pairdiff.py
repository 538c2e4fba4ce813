"""Pairwise observation differences, scalers, and the E accumulation.

The estimator family downstream never looks at raw observations. Its
ingredients are the n(n-1) ordered difference rows d_ij = x_i - x_j,
an index plan pairing those rows within each observation's group, and
an optional scaler applied to rows before pairing. accumulate_E folds
all of that into a p x p matrix without materializing the pair set,
using the grouped identity

    E = sum_i 0.5 * (G_i' G_i + s_i s_i')

with G_i the scaled rows of group i and s_i their column sum. The
identity holds for any row-wise scaling because the plan pairs rows
only within a group: (j, j) for every j plus every unordered (j, k).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import comb
from typing import Optional, Tuple

import numpy as np

from . import _backends
from .core import DataMatrix, symmetrize
from .errors import InputError

SCALER_KINDS = ("NONE", "STANDARDIZE", "LOCAL", "MAXABS", "RANGE")
SCALER_SCOPES = ("PER_DIMENSION", "GLOBAL_SCALAR", "PER_PAIR")

# MAXABS is a whole-matrix rescale by convention; the others act per column.
DEFAULT_SCOPES = {
    "NONE": "PER_DIMENSION",
    "STANDARDIZE": "PER_DIMENSION",
    "LOCAL": "PER_DIMENSION",
    "MAXABS": "GLOBAL_SCALAR",
    "RANGE": "PER_DIMENSION",
}

_PERPAIR_CODES = {
    "STANDARDIZE": _backends.KIND_STANDARDIZE,
    "MAXABS": _backends.KIND_MAXABS,
    "RANGE": _backends.KIND_RANGE,
}


def _as_values(data) -> np.ndarray:
    if isinstance(data, DataMatrix):
        return data.values
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2:
        raise InputError(f"expected a 2-d data matrix, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise InputError("data matrix contains non-finite entries")
    return arr


@dataclass(frozen=True)
class PairwiseDifferenceSet:
    """All ordered difference rows, grouped by first observation.

    Row layout: group i = 0..n-1 occupies rows i*(n-1) .. (i+1)*(n-1)-1
    and holds x_i - x_j for j ascending with j != i.
    """

    n: int
    p: int
    diffs: np.ndarray

    def __post_init__(self):
        if self.n < 2:
            raise InputError(f"pairwise differences need n >= 2, got n={self.n}")
        expected = (self.n * (self.n - 1), self.p)
        if self.diffs.shape != expected:
            raise InputError(
                f"difference set shape {self.diffs.shape} does not match "
                f"expected {expected}"
            )
        self.diffs.setflags(write=False)

    def row_index(self, i: int, j: int) -> int:
        """Row holding x_i - x_j (0-based observation indices)."""
        if i == j or not (0 <= i < self.n) or not (0 <= j < self.n):
            raise InputError(f"invalid ordered pair ({i}, {j}) for n={self.n}")
        return i * (self.n - 1) + (j if j < i else j - 1)

    def group(self, i: int) -> np.ndarray:
        """The n-1 difference rows of observation i."""
        if not (0 <= i < self.n):
            raise InputError(f"observation index {i} out of range for n={self.n}")
        return self.diffs[i * (self.n - 1) : (i + 1) * (self.n - 1)]


def pairwise_differences(data) -> PairwiseDifferenceSet:
    """Materialize the full ordered difference set (test/inspection path)."""
    x = _as_values(data)
    n, p = x.shape
    if n < 2:
        raise InputError(f"pairwise differences need n >= 2, got n={n}")
    rows = np.empty((n * (n - 1), p))
    for i in range(n):
        rows[i * (n - 1) : (i + 1) * (n - 1)] = x[i] - np.delete(x, i, axis=0)
    return PairwiseDifferenceSet(n=n, p=p, diffs=rows)


@dataclass(frozen=True)
class IndexPairPlan:
    """Within-group pairing shared by every observation.

    ``pairs`` indexes a group's n-1 difference rows (0-based): first the
    diagonal pairs (j, j), then every (j, k) with j < k. The same plan
    applies to each of the n groups, so the total pair count is
    n*(n-1) + n*C(n-1, 2).
    """

    n: int
    pairs: Tuple[Tuple[int, int], ...]

    @property
    def pairs_per_group(self) -> int:
        return len(self.pairs)

    @property
    def total_pairs(self) -> int:
        return self.n * len(self.pairs)


def index_pair_plan(n: int) -> IndexPairPlan:
    if n < 2:
        raise InputError(f"index plan needs n >= 2, got n={n}")
    m = n - 1
    pairs = [(j, j) for j in range(m)]
    pairs.extend((j, k) for j in range(m) for k in range(j + 1, m))
    plan = IndexPairPlan(n=n, pairs=tuple(pairs))
    # the count the plan must realize, kept as the two-term sum on purpose
    assert plan.total_pairs == n * (n - 1) + n * comb(n - 1, 2)
    return plan


@dataclass(frozen=True)
class ScalerSpec:
    """What to divide difference rows by, and at what granularity."""

    kind: str
    scope: Optional[str] = None
    epsilon_floor: float = 1e-12

    def __post_init__(self):
        if self.kind not in SCALER_KINDS:
            raise InputError(f"unknown scaler kind {self.kind!r}")
        if self.scope is None:
            object.__setattr__(self, "scope", DEFAULT_SCOPES[self.kind])
        if self.scope not in SCALER_SCOPES:
            raise InputError(f"unknown scaler scope {self.scope!r}")
        if self.kind == "LOCAL" and self.scope == "PER_PAIR":
            raise InputError("LOCAL scaling has no per-pair form")
        if self.kind == "NONE" and self.scope == "PER_PAIR":
            raise InputError("NONE scaling has no per-pair form")
        if not (self.epsilon_floor > 0):
            raise InputError(
                f"epsilon_floor must be positive, got {self.epsilon_floor}"
            )


@dataclass(frozen=True)
class ScalerState:
    """A fitted scaler: the spec plus whatever statistics it needs.

    shift/scale are per-dimension vectors (scalars are broadcast when the
    scope is GLOBAL_SCALAR). LOCAL keeps a per-observation variance table
    instead; its effective denominator sqrt(var_i + var_j) is formed at
    apply time, and the epsilon floor is tested against that combined
    value rather than the stored variances. PER_PAIR states carry no
    statistics at all.
    """

    spec: ScalerSpec
    shift: Optional[np.ndarray] = None
    scale: Optional[np.ndarray] = None
    local_var: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("shift", "scale", "local_var"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.asarray(arr, dtype=float)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)


def _floored(stat: np.ndarray, eps: float) -> np.ndarray:
    return np.where(np.asarray(stat, dtype=float) < eps, 1.0, stat)


def fit_scaler(diffs: PairwiseDifferenceSet, spec: ScalerSpec) -> ScalerState:
    """Fit scaler statistics from an explicit difference set.

    This is the reference path: every statistic is a plain reduction over
    the materialized rows. accumulate_E refuses to build those rows and
    derives the same numbers from the observations directly; the two are
    kept in agreement by tests.
    """
    d = diffs.diffs
    eps = spec.epsilon_floor
    if spec.kind == "NONE":
        return ScalerState(spec=spec)

    if spec.scope == "PER_PAIR":
        return ScalerState(spec=spec)

    per_dim = spec.scope == "PER_DIMENSION"
    if spec.kind == "STANDARDIZE":
        if per_dim:
            mu = d.mean(axis=0)
            sd = d.std(axis=0)
        else:
            mu = np.full(diffs.p, d.mean())
            sd = np.full(diffs.p, d.std())
        return ScalerState(spec=spec, shift=mu, scale=_floored(sd, eps))

    if spec.kind == "MAXABS":
        stat = np.abs(d).max(axis=0) if per_dim else np.full(diffs.p, np.abs(d).max())
        return ScalerState(spec=spec, scale=_floored(stat, eps))

    if spec.kind == "RANGE":
        if per_dim:
            stat = d.max(axis=0) - d.min(axis=0)
        else:
            stat = np.full(diffs.p, d.max() - d.min())
        return ScalerState(spec=spec, scale=_floored(stat, eps))

    # LOCAL: per-observation variance of that observation's own rows
    n = diffs.n
    if per_dim:
        var = np.empty((n, diffs.p))
        for i in range(n):
            var[i] = diffs.group(i).var(axis=0)
    else:
        var = np.empty((n, 1))
        for i in range(n):
            var[i, 0] = diffs.group(i).var()
    return ScalerState(spec=spec, local_var=var)


def apply_scaler(row: np.ndarray, pair: Tuple[int, int], state: ScalerState) -> np.ndarray:
    """Scale one difference row d_ij; ``pair`` is the 0-based (i, j)."""
    d = np.asarray(row, dtype=float)
    spec = state.spec
    eps = spec.epsilon_floor
    if spec.kind == "NONE":
        return d.copy()

    if spec.scope == "PER_PAIR":
        if spec.kind == "STANDARDIZE":
            sd = d.std()
            return (d - d.mean()) / (sd if sd >= eps else 1.0)
        if spec.kind == "MAXABS":
            c = np.abs(d).max()
            return d / (c if c >= eps else 1.0)
        c = d.max() - d.min()
        return d / (c if c >= eps else 1.0)

    if spec.kind == "LOCAL":
        i, j = pair
        den = np.sqrt(state.local_var[i] + state.local_var[j])
        den = np.where(den < eps, 1.0, den)
        return d / den

    if state.shift is not None:
        d = d - state.shift
    return d / state.scale


@dataclass(frozen=True)
class AccumulatedE:
    """The symmetrized pair accumulation and the counts behind it."""

    matrix: np.ndarray
    n: int
    num_pairs: int

    def __post_init__(self):
        object.__setattr__(self, "matrix", symmetrize(self.matrix))


def accumulate_E(data, spec: Optional[ScalerSpec] = None) -> AccumulatedE:
    """Accumulate E over the full index plan without building the pair set.

    Fitted statistics come from closed forms over the observations:

    * STANDARDIZE: the difference-set column means are exactly zero and
      the column variances equal 2n/(n-1) times the observation column
      variances, so mu = 0 and sigma follows from a single pass over x.
      The global scalar is the mean of the per-column variances.
    * MAXABS / RANGE: column extremes of the difference set are column
      ranges of x (and the global statistic is their max).
    * LOCAL: observation i's rows are x_i - x_j over j != i, so their
      per-column variance is the leave-one-out variance of the sample,
      available from the column sums and sums of squares.

    Memory stays O(p^2 + n p); work is O(n^2 p^2) inside the kernels.
    """
    x = _as_values(data)
    n, p = x.shape
    if n < 2:
        raise InputError(f"accumulate_E needs n >= 2, got n={n}")
    if spec is None:
        spec = ScalerSpec(kind="NONE")
    eps = spec.epsilon_floor
    plan = index_pair_plan(n)

    if spec.scope == "PER_PAIR":
        E = _backends.accum_perpair(x, _PERPAIR_CODES[spec.kind], eps)
        return AccumulatedE(matrix=E, n=n, num_pairs=plan.total_pairs)

    per_dim = spec.scope == "PER_DIMENSION"

    if spec.kind == "LOCAL":
        # One group of rows at a time: a sum-of-squares shortcut would be
        # cheaper but cancels catastrophically when a group's variance is
        # near zero (duplicated observations, n=2), leaving rounding dust
        # above the epsilon floor. Memory stays O(n p).
        varmat = np.empty((n, p) if per_dim else (n, 1))
        for i in range(n):
            grp = x[i] - np.delete(x, i, axis=0)
            if per_dim:
                varmat[i] = grp.var(axis=0)
            else:
                varmat[i, 0] = grp.var()
        E = _backends.accum_local(x, varmat, eps)
        return AccumulatedE(matrix=E, n=n, num_pairs=plan.total_pairs)

    shift = np.zeros(p)
    if spec.kind == "NONE":
        scale = np.ones(p)
    elif spec.kind == "STANDARDIZE":
        col_var = x.var(axis=0)
        diff_var = (2.0 * n / (n - 1)) * col_var
        stat = np.sqrt(diff_var) if per_dim else np.full(p, np.sqrt(diff_var.mean()))
        scale = _floored(stat, eps)
    elif spec.kind == "MAXABS":
        rng = x.max(axis=0) - x.min(axis=0)
        stat = rng if per_dim else np.full(p, rng.max())
        scale = _floored(stat, eps)
    else:  # RANGE: difference columns span [-(range), +range]
        rng = 2.0 * (x.max(axis=0) - x.min(axis=0))
        stat = rng if per_dim else np.full(p, rng.max())
        scale = _floored(stat, eps)

    E = _backends.accum_affine(x, shift, scale)
    return AccumulatedE(matrix=E, n=n, num_pairs=plan.total_pairs)
