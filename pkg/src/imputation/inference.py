"""HAC covariance estimators for loading rows and the chi-square row-nullity test.

For mode k and row j every time t contributes a score vector

    g_t = sum_i w_i * sum_h (1{t in psi_ijh} / |psi_ijh|) * C_(k),t,ih * E_(k),t,jh

with weights ``w_i = D_k^{-1} Q_k' (1/T sum_s C_(k),s C_(k),s') e_i``. The
missingness-discrepancy score replaces ``E`` by ``C`` and subtracts the
full-observation term ``(1/T) C_ih C_jh``, so it is exactly zero when nothing is
missing. Both score series are then Bartlett-weighted over lags 0..beta.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import stats

from imputation.errors import ConfigError, DimensionError, ModeError, SingularCovarianceError
from imputation.factors import FactorModel
from imputation.tensor import TensorSeries, unfold_series

logger = logging.getLogger(__name__)

EIGENVALUE_FLOOR = 1e-12
# Upper bound on entries of a (t-block, d_k, d_{-k}) temporary.
_BLOCK_ELEMENTS = 1 << 23

Beta = int | Literal["auto"]


@dataclass(frozen=True)
class InferenceReport:
    k: int
    j: int
    beta: int
    sigma_hac: np.ndarray
    sigma_hac_delta: np.ndarray
    standardized: np.ndarray
    statistic: float
    p_value: float

    def rejects(self, level: float = 0.05) -> bool:
        return self.p_value < level


# ---------------------------------------------------------------------------
# Scores
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _ModeContext:
    """Per-mode quantities shared by every row test of that mode."""

    common: np.ndarray
    values: np.ndarray
    mask: np.ndarray
    weights: np.ndarray

    @classmethod
    def build(cls, series: TensorSeries, model: FactorModel, k: int) -> _ModeContext:
        if not 0 <= k < model.order:
            raise ModeError(k, model.order)
        if series.dims != model.dims or series.T != model.T:
            raise DimensionError(
                f"model fitted on T={model.T} dims={model.dims} cannot score T={series.T} dims={series.dims}"
            )
        common = unfold_series(model.common_components(), k)
        values, mask = series.unfolded(k)
        T, d_k, _ = common.shape
        flat = np.reshape(np.moveaxis(common, 1, 0), (d_k, -1))
        gram = flat @ flat.T / T
        weights = (model.loadings[k].T @ gram) / model.eigenvalues[k][:, None]
        return cls(common=common, values=values, mask=mask, weights=weights)


def _row_scores(ctx: _ModeContext, j: int) -> tuple[np.ndarray, np.ndarray]:
    """Score series ``(T, r_k)`` for the HAC and the missingness-discrepancy estimators."""
    T, d_k, d_rest = ctx.common.shape
    if not 0 <= j < d_k:
        raise DimensionError(f"row {j + 1} out of range for a mode of size {d_k}")
    m = ctx.mask.astype(np.float64)
    m_j = m[:, j, :]
    c_j = ctx.common[:, j, :]
    resid_j = np.where(ctx.mask[:, j, :], ctx.values[:, j, :] - c_j, 0.0)

    block = max(1, _BLOCK_ELEMENTS // (d_k * d_rest))
    counts = np.zeros((d_k, d_rest))
    for start in range(0, T, block):
        rows = slice(start, start + block)
        counts += np.sum(m[rows] * m_j[rows, None, :], axis=0)
    inv = np.divide(1.0, counts, out=np.zeros_like(counts), where=counts > 0)

    a = np.zeros((T, d_k))
    a_delta = np.zeros((T, d_k))
    for start in range(0, T, block):
        rows = slice(start, start + block)
        weighted = inv * (m[rows] * m_j[rows, None, :])
        common = ctx.common[rows]
        a[rows] = np.sum(weighted * common * resid_j[rows, None, :], axis=2)
        a_delta[rows] = np.sum((weighted - 1.0 / T) * common * c_j[rows, None, :], axis=2)
    return a @ ctx.weights.T, a_delta @ ctx.weights.T


def bartlett_long_run(scores: np.ndarray, beta: int) -> np.ndarray:
    """``D_0 + sum_{nu=1}^{beta} (1 - nu/(1+beta)) (D_nu + D_nu')`` with ``D_nu = sum_t g_t g_{t-nu}'``."""
    sigma = scores.T @ scores
    for nu in range(1, beta + 1):
        lagged = scores[nu:].T @ scores[:-nu]
        sigma = sigma + (1.0 - nu / (1.0 + beta)) * (lagged + lagged.T)
    return (sigma + sigma.T) / 2


# ---------------------------------------------------------------------------
# Public estimators
# ---------------------------------------------------------------------------


def auto_beta(T: int, d_k: int, alpha: float = 1.0) -> int:
    """``floor((1/5) * (T * d_k^alpha)^(1/4))``."""
    return int(np.floor(0.2 * (T * d_k**alpha) ** 0.25))


def resolve_beta(beta: Beta, T: int, d_k: int, alpha: float = 1.0) -> int:
    if beta == "auto":
        beta = min(auto_beta(T, d_k, alpha), T - 1)
    beta = int(beta)
    if beta < 0:
        raise ConfigError(f"beta must be non-negative, got {beta}")
    if beta >= T:
        raise ConfigError(f"beta={beta} must be smaller than T={T}")
    return beta


def hac_sigma(series: TensorSeries, model: FactorModel, k: int, j: int, beta: Beta) -> np.ndarray:
    ctx = _ModeContext.build(series, model, k)
    scores, _ = _row_scores(ctx, j)
    return bartlett_long_run(scores, resolve_beta(beta, series.T, series.dims[k]))


def hac_sigma_delta(series: TensorSeries, model: FactorModel, k: int, j: int, beta: Beta) -> np.ndarray:
    ctx = _ModeContext.build(series, model, k)
    _, scores = _row_scores(ctx, j)
    return bartlett_long_run(scores, resolve_beta(beta, series.T, series.dims[k]))


def inverse_sqrt(matrix: np.ndarray) -> np.ndarray:
    values, vectors = np.linalg.eigh(matrix)
    floor = EIGENVALUE_FLOOR * float(np.trace(matrix))
    if floor <= 0 or values.min() < floor:
        raise SingularCovarianceError(
            f"HAC covariance is numerically singular (smallest eigenvalue {values.min():.3e}); "
            "a longer series is needed"
        )
    return (vectors / np.sqrt(values)) @ vectors.T


def _test_row(ctx: _ModeContext, model: FactorModel, k: int, j: int, beta: int) -> InferenceReport:
    scores, delta_scores = _row_scores(ctx, j)
    sigma = bartlett_long_run(scores, beta)
    sigma_delta = bartlett_long_run(delta_scores, beta)
    numerator = model.eigenvalues[k] * model.loadings[k][j]
    r_k = numerator.size
    if not numerator.any():
        standardized = np.zeros(r_k)
        statistic, p_value = 0.0, 1.0
    else:
        standardized = inverse_sqrt(sigma + sigma_delta) @ numerator
        statistic = float(standardized @ standardized)
        p_value = float(stats.chi2.sf(statistic, df=r_k))
    return InferenceReport(
        k=k,
        j=j,
        beta=beta,
        sigma_hac=sigma,
        sigma_hac_delta=sigma_delta,
        standardized=standardized,
        statistic=statistic,
        p_value=p_value,
    )


def row_test(
    series: TensorSeries,
    model: FactorModel,
    k: int,
    j: int,
    beta: Beta = "auto",
    *,
    alpha: float = 1.0,
) -> InferenceReport:
    """Chi-square test of ``Q_{k,j.} = 0`` with ``r_k`` degrees of freedom."""
    ctx = _ModeContext.build(series, model, k)
    return _test_row(ctx, model, k, j, resolve_beta(beta, series.T, series.dims[k], alpha))


def row_tests(
    series: TensorSeries,
    model: FactorModel,
    k: int,
    beta: Beta = "auto",
    *,
    alpha: float = 1.0,
    threads: int = 1,
) -> list[InferenceReport]:
    """Row tests for every row of mode k, sharing the per-mode weights.

    With ``threads > 1`` rows are tested on a thread pool; reports keep row order.
    """
    ctx = _ModeContext.build(series, model, k)
    beta = resolve_beta(beta, series.T, series.dims[k], alpha)
    logger.info("testing %d rows of mode %d with beta=%d", series.dims[k], k + 1, beta)
    rows = range(series.dims[k])
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda j: _test_row(ctx, model, k, j, beta), rows))
    return [_test_row(ctx, model, k, j, beta) for j in rows]
