"""Data-generating process: Y_t = F_t x_1 A_1 ... x_K A_K + E_t, then a missing pattern.

Every random component draws from its own child of ``SeedSequence(config.seed)``,
so each one is reproducible on its own and unaffected by the others.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.linalg
import scipy.signal

from imputation.errors import ConfigError
from imputation.tensor import TensorSeries, series_mode_product
from simulation.config import MissingSpec, SimConfig, check_stationary, companion

logger = logging.getLogger(__name__)

Seed = int | np.random.SeedSequence
Innovation = Literal["gaussian", "student_t"]
Standardize = Literal["sample", "stationary"]

BURN_IN_PER_LAG = 50


@dataclass(frozen=True)
class GroundTruth:
    data: TensorSeries
    full_data: np.ndarray
    common: np.ndarray
    noise: np.ndarray
    loadings: tuple[np.ndarray, ...]
    factors: np.ndarray
    config: SimConfig


def _seed_sequence(seed: Seed) -> np.random.SeedSequence:
    return seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)


# ---------------------------------------------------------------------------
# Autoregressive paths
# ---------------------------------------------------------------------------


def stationary_variance(coeffs: Sequence[float]) -> float:
    """Stationary variance of a unit-innovation AR(p) from the companion-form Lyapunov equation."""
    coeffs = tuple(float(c) for c in coeffs)
    if not coeffs:
        return 1.0
    p = len(coeffs)
    shock = np.zeros((p, p))
    shock[0, 0] = 1.0
    return float(scipy.linalg.solve_discrete_lyapunov(companion(coeffs), shock)[0, 0])


def _innovations(rng: np.random.Generator, shape: tuple[int, ...], innovation: Innovation) -> np.ndarray:
    if innovation == "gaussian":
        return rng.standard_normal(shape)
    if innovation == "student_t":
        return rng.standard_t(3, size=shape) / math.sqrt(3.0)
    raise ConfigError(f"unknown innovation law {innovation!r}")


def gen_ar_series(
    count: int,
    T: int,
    coeffs: Sequence[float],
    innovation: Innovation = "gaussian",
    seed: Seed = 0,
    standardize: Standardize = "stationary",
) -> np.ndarray:
    """``count`` independent standardised AR(p) paths of length T, shape ``(count, T)``.

    ``"stationary"`` divides by the exact stationary standard deviation, leaving the
    sample moments free to vary around 0 and 1. ``"sample"`` centres every path and
    scales it to unit sample variance, so each realised path satisfies
    ``mean(x) = 0`` and ``mean(x**2) = 1`` exactly. Datasets take the mode from
    ``SimConfig.standardize``.
    """
    coeffs = tuple(float(c) for c in coeffs)
    check_stationary(coeffs)
    p = len(coeffs)
    burn = BURN_IN_PER_LAG * p
    rng = np.random.default_rng(_seed_sequence(seed))
    shocks = _innovations(rng, (count, T + burn), innovation)
    paths = scipy.signal.lfilter([1.0], [1.0, *(-c for c in coeffs)], shocks, axis=1)[:, burn:]
    if standardize == "stationary":
        return paths / math.sqrt(stationary_variance(coeffs))
    if standardize != "sample":
        raise ConfigError(f"unknown standardization {standardize!r}")
    paths = paths - paths.mean(axis=1, keepdims=True)
    return paths / paths.std(axis=1, keepdims=True)


def _ar_tensor_series(
    shape: tuple[int, ...], T: int, coeffs: Sequence[float], config: SimConfig, seed: Seed
) -> np.ndarray:
    """Elementwise AR processes arranged as a ``(T, *shape)`` stack."""
    count = int(np.prod(shape, dtype=np.int64))
    paths = gen_ar_series(count, T, coeffs, config.innovation, seed, config.standardize)
    return np.reshape(paths.T, (T, *shape), order="F")


# ---------------------------------------------------------------------------
# Loadings and noise
# ---------------------------------------------------------------------------


def gen_loadings(d: int, r: int, zetas: Sequence[float], seed: Seed = 0) -> np.ndarray:
    """``U diag(d^{-zeta_1}, ..., d^{-zeta_r})`` with standard normal U."""
    zetas = np.asarray(zetas, dtype=np.float64)
    if zetas.shape != (r,):
        raise ConfigError(f"expected {r} zetas, got {zetas.size}")
    rng = np.random.default_rng(_seed_sequence(seed))
    return rng.standard_normal((d, r)) * float(d) ** (-zetas)


def gen_noise(dims: Sequence[int], T: int, config: SimConfig, seed: Seed = 0) -> np.ndarray:
    """``F_e,t x_1 A_e,1 ... x_K A_e,K + Sigma_eps * eps_t`` as a ``(T, *dims)`` stack."""
    dims = tuple(int(d) for d in dims)
    K = len(dims)
    loading_ss, factor_ss, scale_ss, eps_ss = _seed_sequence(seed).spawn(4)

    noise_ranks = tuple(config.mode_noise_rank(k) for k in range(K))
    common = _ar_tensor_series(noise_ranks, T, config.ar_noise_common, config, factor_ss)
    for k, (child, d_k, r_k) in enumerate(zip(loading_ss.spawn(K), dims, noise_ranks)):
        rng = np.random.default_rng(child)
        a_e = rng.standard_normal((d_k, r_k))
        a_e[rng.random((d_k, r_k)) < config.noise_sparsity] = 0.0
        common = series_mode_product(common, a_e, k)

    sigma = config.idiosyncratic_scale * np.abs(np.random.default_rng(scale_ss).standard_normal(dims))
    eps = _ar_tensor_series(dims, T, config.ar_noise_idio, config, eps_ss)
    return common + sigma * eps


# ---------------------------------------------------------------------------
# Missing patterns
# ---------------------------------------------------------------------------


def _block_mask(dims: tuple[int, ...], T: int) -> np.ndarray:
    """Missing iff t >= ceil(T/2) and i_k <= floor(d_k/2) for all k (1-based)."""
    missing = np.zeros((T, *dims), dtype=bool)
    block = (slice(math.ceil(0.5 * T) - 1, T), *(slice(0, d // 2) for d in dims))
    missing[block] = True
    return ~missing


def apply_missing(
    dims: Sequence[int],
    T: int,
    pattern: str | MissingSpec,
    a_1: np.ndarray | None = None,
    seed: Seed = 0,
) -> np.ndarray:
    """Observation mask ``(T, *dims)`` with True at observed entries."""
    dims = tuple(int(d) for d in dims)
    if isinstance(pattern, str):
        try:
            spec = MissingSpec(pattern=pattern)
        except ValueError as exc:
            raise ConfigError(f"unknown missing pattern {pattern!r}") from exc
    else:
        spec = pattern
    rng = np.random.default_rng(_seed_sequence(seed))

    if spec.pattern == "none":
        return np.ones((T, *dims), dtype=bool)
    if spec.pattern in ("M-i", "M-ii"):
        return rng.random((T, *dims)) >= spec.miss_rate()
    if spec.pattern == "M-iii":
        return _block_mask(dims, T)

    # M-iv: whole mode-1 slices, more often missing where the first loading column is negative
    if a_1 is None:
        raise ConfigError("pattern M-iv needs the mode-1 loading matrix")
    rates = np.where(np.asarray(a_1)[:, 0] >= 0, 0.2, 0.5)
    if spec.per_series:
        slice_missing = np.broadcast_to(rng.random(dims[0]) < rates, (T, dims[0]))
    else:
        slice_missing = rng.random((T, dims[0])) < rates
    observed = ~slice_missing
    return np.broadcast_to(observed.reshape(T, dims[0], *([1] * (len(dims) - 1))), (T, *dims)).copy()


# ---------------------------------------------------------------------------
# Full dataset
# ---------------------------------------------------------------------------


def gen_dataset(config: SimConfig) -> GroundTruth:
    factor_ss, loading_ss, noise_ss, missing_ss = np.random.SeedSequence(config.seed).spawn(4)

    factors = _ar_tensor_series(config.ranks, config.T, config.ar_factor, config, factor_ss)
    loadings = [
        gen_loadings(d_k, r_k, config.mode_zetas(k), child)
        for k, (child, d_k, r_k) in enumerate(zip(loading_ss.spawn(config.K), config.dims, config.ranks))
    ]
    for fix in config.fixed_loadings:
        fix.apply(loadings[fix.mode - 1])

    common = factors
    for k, a in enumerate(loadings):
        common = series_mode_product(common, a, k)
    noise = gen_noise(config.dims, config.T, config, noise_ss)
    full_data = common + noise
    mask = apply_missing(config.dims, config.T, config.missing, loadings[0], missing_ss)
    logger.debug("generated T=%d dims=%s with %d missing entries", config.T, config.dims, int((~mask).sum()))

    for a in loadings:
        a.flags.writeable = False
    return GroundTruth(
        data=TensorSeries.from_arrays(full_data, mask),
        full_data=full_data,
        common=common,
        noise=noise,
        loadings=tuple(loadings),
        factors=factors,
        config=config,
    )
