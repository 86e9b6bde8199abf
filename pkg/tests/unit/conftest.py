"""Unit test fixtures."""

import numpy as np
import pytest

from imputation.nodes import PipelineSettings
from imputation.tensor import TensorSeries, series_mode_product


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


def orthonormal(rng: np.random.Generator, d: int, r: int) -> np.ndarray:
    q, _ = np.linalg.qr(rng.standard_normal((d, r)))
    return q


def low_rank_common(factors: np.ndarray, loadings: list[np.ndarray]) -> np.ndarray:
    """``F_t x_1 A_1 ... x_K A_K`` for a ``(T, *ranks)`` factor stack."""
    out = factors
    for k, a in enumerate(loadings):
        out = series_mode_product(out, a, k)
    return out


def noiseless_rank_one(T: int = 6, dims: tuple[int, int] = (3, 3), seed: int = 0):
    """Rank-(1, 1) series whose factor has constant magnitude, so masked covariances stay rank one.

    Returns (common, loadings).
    """
    rng = np.random.default_rng(seed)
    loadings = [rng.standard_normal((d, 1)) + 2.0 for d in dims]
    factors = np.where(rng.random((T, 1, 1)) < 0.5, -1.5, 1.5)
    return low_rank_common(factors, loadings), loadings


def scattered_mask(T: int, dims: tuple[int, ...], per_slice: int, seed: int = 0) -> np.ndarray:
    """Drop ``per_slice`` cells from every slice except the last, which stays fully observed."""
    rng = np.random.default_rng(seed)
    n_cells = int(np.prod(dims))
    mask = np.ones((T, n_cells), dtype=bool)
    for t in range(T - 1):
        mask[t, rng.choice(n_cells, size=per_slice, replace=False)] = False
    return mask.reshape((T, *dims))


def noisy_series(
    T: int = 30,
    dims: tuple[int, ...] = (6, 5),
    ranks: tuple[int, ...] = (2, 1),
    missing: float = 0.2,
    noise: float = 0.3,
    seed: int = 0,
) -> TensorSeries:
    rng = np.random.default_rng(seed)
    loadings = [rng.standard_normal((d, r)) for d, r in zip(dims, ranks)]
    common = low_rank_common(rng.standard_normal((T, *ranks)), loadings)
    values = common + noise * rng.standard_normal(common.shape)
    mask = rng.random(common.shape) >= missing
    mask[-1] = True
    return TensorSeries.from_arrays(values, mask)


def make_config(settings: PipelineSettings | None = None) -> dict:
    """Build a RunnableConfig-compatible dict for node functions."""
    return {"configurable": {"settings": settings or PipelineSettings()}}


def make_state(series: TensorSeries, overrides: dict | None = None) -> dict:
    """Build a minimal ImputationState dict positioned at the start of pass 0."""
    base = {
        "series": series,
        "requested_ranks": "auto",
        "centered": series,
        "offset": np.zeros(series.dims),
        "working": series,
        "pass_index": 0,
        "changes": [],
        "converged": False,
        "current_stage": "covariance",
    }
    if overrides:
        base.update(overrides)
    return base
