"""Covariance estimators: MLE, Ledoit-Wolf shrinkage, and the PDC family.

The PDC family is one estimator with five named scaling presets:

* PDC     - no scaling
* SPDC    - standardize difference columns (zero mean, unit sd)
* LSPDC   - local per-observation variances, combined per pair
* MAXPDC  - divide by the largest absolute difference (whole matrix)
* RPDC    - divide by twice the per-column observation range

Each preset is the accumulation from pairdiff followed by a normalization:
EQ1 uses 2 / (n^2 (n-1)); LISTING divides by n times the realized pair
count of the index plan. LISTING is the default.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .core import CovarianceEstimate, DataMatrix, METHOD_ORDER
from .errors import InputError
from .pairdiff import ScalerSpec, accumulate_E

PDC_METHODS = ("PDC", "SPDC", "LSPDC", "MAXPDC", "RPDC")
NORMALIZATIONS = ("EQ1", "LISTING")

_METHOD_SCALERS = {
    "PDC": "NONE",
    "SPDC": "STANDARDIZE",
    "LSPDC": "LOCAL",
    "MAXPDC": "MAXABS",
    "RPDC": "RANGE",
}


@dataclass(frozen=True)
class EstimatorSpec:
    """A method name plus the knobs that change its numbers.

    ``scaler_scope`` overrides the preset's default granularity (for the
    PDC family only); ``pdc_normalization`` picks the constant in front
    of the accumulated E.
    """

    method: str
    pdc_normalization: str = "LISTING"
    scaler_scope: Optional[str] = None
    epsilon_floor: float = 1e-12

    def __post_init__(self):
        if self.method not in METHOD_ORDER:
            raise InputError(
                f"unknown method {self.method!r}; expected one of {METHOD_ORDER}"
            )
        if self.pdc_normalization not in NORMALIZATIONS:
            raise InputError(
                f"unknown normalization {self.pdc_normalization!r}; "
                f"expected one of {NORMALIZATIONS}"
            )
        if self.method not in PDC_METHODS and self.scaler_scope is not None:
            raise InputError(f"{self.method} takes no scaler scope")

    def scaler_spec(self) -> Optional[ScalerSpec]:
        if self.method not in PDC_METHODS:
            return None
        return ScalerSpec(
            kind=_METHOD_SCALERS[self.method],
            scope=self.scaler_scope,
            epsilon_floor=self.epsilon_floor,
        )


def _as_data(data) -> DataMatrix:
    if isinstance(data, DataMatrix):
        return data
    return DataMatrix(values=np.asarray(data, dtype=float))


def estimate_mle(data) -> CovarianceEstimate:
    """Centered second-moment matrix with the 1/n convention."""
    dm = _as_data(data)
    x = dm.values
    n = dm.n
    if n < 2:
        raise InputError(f"covariance needs n >= 2 observations, got n={n}")
    xc = x - x.mean(axis=0)
    s = (xc.T @ xc) / n
    return CovarianceEstimate(matrix=s, estimator="MLE", n_used=n)


def estimate_ledoit_wolf(data) -> CovarianceEstimate:
    """Shrink the MLE toward a scaled identity.

    Target is mu * I with mu the mean eigenvalue. The shrinkage weight is
    min(b2, d2) / d2 where d2 is the squared distance from the MLE to the
    target and b2 averages the squared distances of the rank-one terms
    x_k x_k' from the MLE, both per dimension. Degenerate dispersion
    (d2 <= 0, every direction identical) gets weight 0.
    """
    dm = _as_data(data)
    x = dm.values
    n, p = dm.n, dm.p
    if n < 2:
        raise InputError(f"covariance needs n >= 2 observations, got n={n}")
    xc = x - x.mean(axis=0)
    s = (xc.T @ xc) / n
    mu = np.trace(s) / p
    d2 = np.linalg.norm(s - mu * np.eye(p), "fro") ** 2 / p
    if d2 <= 0.0:
        delta = 0.0
    else:
        # sum_k ||x_k x_k' - S||_F^2 = sum_k ||x_k||^4 - 2 x_k' S x_k + ||S||^2
        norms2 = (xc * xc).sum(axis=1)
        cross = ((xc @ s) * xc).sum(axis=1)
        s2 = np.linalg.norm(s, "fro") ** 2
        b2_raw = (norms2**2 - 2.0 * cross + s2).sum() / (n**2 * p)
        delta = min(b2_raw, d2) / d2
    shrunk = delta * mu * np.eye(p) + (1.0 - delta) * s
    return CovarianceEstimate(matrix=shrunk, estimator="LW", n_used=n)


def estimate_pdc_family(data, spec: Union[EstimatorSpec, str]) -> CovarianceEstimate:
    """Run one PDC-family preset and normalize the accumulation."""
    if isinstance(spec, str):
        spec = EstimatorSpec(method=spec)
    if spec.method not in PDC_METHODS:
        raise InputError(f"{spec.method} is not a PDC-family method")
    dm = _as_data(data)
    n = dm.n
    if n < 2:
        raise InputError(f"covariance needs n >= 2 observations, got n={n}")
    scaler = spec.scaler_spec()
    acc = accumulate_E(dm, scaler)
    if spec.pdc_normalization == "EQ1":
        factor = 2.0 / (n**2 * (n - 1))
    else:
        factor = 1.0 / (n * acc.num_pairs)
    return CovarianceEstimate(
        matrix=factor * acc.matrix,
        estimator=spec.method,
        n_used=n,
        scaler_scope=scaler.scope,
    )


def estimate(data, spec: Union[EstimatorSpec, str]) -> CovarianceEstimate:
    """Dispatch on the method name; accepts a bare string for defaults."""
    if isinstance(spec, str):
        spec = EstimatorSpec(method=spec)
    if spec.method == "MLE":
        return estimate_mle(data)
    if spec.method == "LW":
        return estimate_ledoit_wolf(data)
    return estimate_pdc_family(data, spec)
