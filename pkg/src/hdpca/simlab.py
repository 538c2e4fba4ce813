"""Seeded Monte Carlo sweeps over sample size.

A sweep fixes one population (a synthetic covariance drawn once from
``sigma_seed``, or the full-data MLE of a fixture table), then for each
requested n draws m replicate datasets, runs every requested estimator,
and averages the evaluation metrics per (n, estimator) cell.

Determinism contract: replicate r at sample size n derives all of its
randomness from the seed sequence [master_seed, n, r]. Means are taken
over a replicate-indexed array in fixed order, so results are identical
bytes whether the replicates ran on one thread or eight.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .core import DataMatrix, METHOD_ORDER, fmt17, sym_eigen
from .errors import InputError, NumericalError, SweepError
from .estimators import EstimatorSpec, estimate
from .metrics import (
    cosine_similarity_error,
    explained_variance_proportions,
    overdispersion,
)

# A cell may lose at most this fraction of its replicates before the
# whole sweep is considered untrustworthy.
FAILURE_BUDGET = 0.01

SWEEP_CSV_HEADER = "p,n,method,metric,mean_value,m,sigma_seed,master_seed"


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a sweep needs, and nothing execution-dependent.

    ``data_source`` is either the string "synthetic" or "file:<path>".
    Thread counts are deliberately not part of the config: they must not
    change results, so they stay a run-time argument.
    """

    p: int
    n_values: Tuple[int, ...]
    m: int
    estimators: Tuple[str, ...] = METHOD_ORDER
    master_seed: int = 0
    sigma_seed: int = 0
    sigma_entry_mean: float = 0.0
    data_source: str = "synthetic"
    pcs_reported: int = 1

    def __post_init__(self):
        if self.p < 2:
            raise InputError(f"p must be at least 2, got {self.p}")
        if self.m < 1:
            raise InputError(f"m must be at least 1, got {self.m}")
        n_values = tuple(int(n) for n in self.n_values)
        if not n_values:
            raise InputError("n_values must be non-empty")
        for n in n_values:
            if n < 2:
                raise InputError(f"every n must be at least 2, got {n}")
        if len(set(n_values)) != len(n_values):
            raise InputError("n_values contains duplicates")
        object.__setattr__(self, "n_values", n_values)

        est = tuple(str(e).upper() for e in self.estimators)
        for e in est:
            if e not in METHOD_ORDER:
                raise InputError(f"unknown estimator {e!r}")
        if len(set(est)) != len(est):
            raise InputError("estimators contains duplicates")
        # fixed presentation order keeps every downstream artifact stable
        est = tuple(e for e in METHOD_ORDER if e in est)
        object.__setattr__(self, "estimators", est)

        if not (1 <= self.pcs_reported <= self.p):
            raise InputError(
                f"pcs_reported must be in 1..p={self.p}, got {self.pcs_reported}"
            )
        if self.master_seed < 0 or self.sigma_seed < 0:
            raise InputError("seeds must be non-negative integers")
        ds = self.data_source
        if ds != "synthetic" and not (ds.startswith("file:") and len(ds) > 5):
            raise InputError(
                f'data_source must be "synthetic" or "file:<path>", got {ds!r}'
            )
        if not np.isfinite(self.sigma_entry_mean):
            raise InputError("sigma_entry_mean must be finite")

    def metric_names(self) -> Tuple[str, ...]:
        names = ["overdispersion", "explained_pct", "cse"]
        for k in range(2, self.pcs_reported + 1):
            names.append(f"explained_pct_pc{k}")
            names.append(f"cse_pc{k}")
        return tuple(names)


def generate_population_sigma(
    p: int, seed: int, entry_mean: float = 0.0
) -> np.ndarray:
    """Draw a population covariance as t t' with t a p x p Gaussian matrix.

    ``entry_mean`` shifts every entry of t, which tunes how dominant the
    leading eigenvalue is: at 0 the top eigenvalue carries a modest share
    of the trace, and growing shifts push it toward a rank-one spike.
    """
    if p < 2:
        raise InputError(f"p must be at least 2, got {p}")
    rng = np.random.default_rng(seed)
    t = rng.standard_normal((p, p)) + entry_mean
    return t @ t.T


def sample_mvn(sigma: np.ndarray, n: int, seed) -> np.ndarray:
    """Draw n rows from N(0, sigma), reproducibly for a given seed.

    The draw is z @ L' with z an (n, p) standard normal block and L the
    Cholesky factor. A positive semidefinite but singular sigma falls
    back to an eigenvalue factor; an indefinite sigma is rejected.
    """
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise InputError(f"sigma must be square, got shape {sigma.shape}")
    if n < 1:
        raise InputError(f"n must be at least 1, got {n}")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, sigma.shape[0]))
    try:
        factor = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(0.5 * (sigma + sigma.T))
        if w.min() < -1e-10 * max(w.max(), 1.0):
            raise InputError("sigma is not positive semidefinite") from None
        factor = v * np.sqrt(np.clip(w, 0.0, None))
    return z @ factor.T


@dataclass(frozen=True)
class SweepResult:
    """Per-cell metric means plus the provenance needed to rebuild them."""

    config: ExperimentConfig
    pop_explained_pct: Tuple[float, ...]
    means: Dict[Tuple[int, str, str], float]
    failures: Dict[Tuple[int, str], int] = field(default_factory=dict)

    def value(self, n: int, method: str, metric: str) -> float:
        return self.means[(n, method, metric)]

    def to_csv(self) -> str:
        """Long-form CSV, one row per (n, method, metric) cell mean."""
        cfg = self.config
        lines = [SWEEP_CSV_HEADER]
        for n in cfg.n_values:
            for method in ("POP",) + cfg.estimators:
                for metric in cfg.metric_names():
                    v = self.means[(n, method, metric)]
                    lines.append(
                        f"{cfg.p},{n},{method},{metric},{fmt17(v)},"
                        f"{cfg.m},{cfg.sigma_seed},{cfg.master_seed}"
                    )
        return "\n".join(lines) + "\n"


def _load_population(config: ExperimentConfig):
    """Resolve the sweep's population: covariance, eigensystem, data rows."""
    if config.data_source == "synthetic":
        sigma = generate_population_sigma(
            config.p, config.sigma_seed, config.sigma_entry_mean
        )
        return sigma, None
    from .ingest import load_expression_table

    path = config.data_source[len("file:") :]
    table = load_expression_table(path)
    if table.data.p != config.p:
        raise InputError(
            f"config p={config.p} does not match table width {table.data.p}"
        )
    x = table.data.values
    sigma = estimate(table.data, "MLE").matrix
    return sigma, x


def _replicate_data(config: ExperimentConfig, pool, chol, n: int, r: int) -> np.ndarray:
    seed = [config.master_seed, n, r]
    if pool is None:
        rng = np.random.default_rng(seed)
        z = rng.standard_normal((n, config.p))
        return z @ chol.T
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(pool.shape[0], size=n, replace=False))
    return pool[idx]


def run_sweep(config: ExperimentConfig, threads: int = 0) -> SweepResult:
    """Execute the full sweep described by ``config``.

    ``threads`` only sets the worker count (0 means one per CPU); any
    value yields byte-identical results. Raises SweepError if more than
    1% of any cell's replicates fail numerically.
    """
    sigma, pool = _load_population(config)
    if pool is None:
        try:
            chol = np.linalg.cholesky(sigma)
        except np.linalg.LinAlgError as exc:
            raise InputError(
                "synthetic population covariance is singular; cannot factor"
            ) from exc
    else:
        chol = None
        if max(config.n_values) > pool.shape[0]:
            raise InputError(
                f"n={max(config.n_values)} exceeds the {pool.shape[0]} rows available"
            )

    pop_eig = sym_eigen(sigma)
    pop_props = explained_variance_proportions(pop_eig)
    K = config.pcs_reported
    pop_pct = tuple(float(100.0 * pop_props[k]) for k in range(K))

    metric_names = config.metric_names()
    methods = config.estimators
    specs = {mth: EstimatorSpec(method=mth) for mth in methods}

    # values[n][method] is (n_metrics, m); NaN marks a failed replicate
    values = {
        n: {mth: np.full((len(metric_names), config.m), np.nan) for mth in methods}
        for n in config.n_values
    }

    def one_replicate(n: int, r: int):
        x = _replicate_data(config, pool, chol, n, r)
        dm = DataMatrix(values=x)
        for mth in methods:
            try:
                est = estimate(dm, specs[mth])
                eig = sym_eigen(est.matrix)
                props = explained_variance_proportions(eig)
                out = values[n][mth]
                # proportions can land a few ulp past 1.0; keep them legal
                pi_hat = min(max(float(props[0]), 0.0), 1.0)
                pi_pop = min(max(float(pop_props[0]), 0.0), 1.0)
                out[0, r] = overdispersion(pi_hat, pi_pop, config.p, n)
                out[1, r] = 100.0 * props[0]
                out[2, r] = cosine_similarity_error(eig.pc(1), pop_eig.pc(1))
                col = 3
                for k in range(2, K + 1):
                    out[col, r] = 100.0 * props[k - 1]
                    out[col + 1, r] = cosine_similarity_error(
                        eig.pc(k), pop_eig.pc(k)
                    )
                    col += 2
            except NumericalError:
                pass  # stays NaN; counted against the budget below

    tasks = [(n, r) for n in config.n_values for r in range(config.m)]
    workers = threads if threads > 0 else (os.cpu_count() or 1)
    if workers == 1:
        for n, r in tasks:
            one_replicate(n, r)
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            list(ex.map(lambda t: one_replicate(*t), tasks))

    failures: Dict[Tuple[int, str], int] = {}
    over_budget = []
    for n in config.n_values:
        for mth in methods:
            bad = int(np.isnan(values[n][mth][0]).sum())
            if bad:
                failures[(n, mth)] = bad
            if bad > FAILURE_BUDGET * config.m:
                over_budget.append(f"(n={n}, {mth}): {bad}/{config.m}")
    if over_budget:
        raise SweepError(
            "failure budget exceeded in " + "; ".join(over_budget)
        )

    means: Dict[Tuple[int, str, str], float] = {}
    for n in config.n_values:
        for idx, metric in enumerate(metric_names):
            pop_v = 0.0
            if metric == "explained_pct":
                pop_v = pop_pct[0]
            elif metric.startswith("explained_pct_pc"):
                pop_v = pop_pct[int(metric.rsplit("pc", 1)[1]) - 1]
            means[(n, "POP", metric)] = pop_v
            for mth in methods:
                row = values[n][mth][idx]
                means[(n, mth, metric)] = float(np.nanmean(row))

    return SweepResult(
        config=config,
        pop_explained_pct=pop_pct,
        means=means,
        failures=failures,
    )
