"""LangGraph node functions for the imputation pipeline stages."""

import logging
from typing import Any

import numpy as np
from langchain_core.runnables import RunnableConfig
from pydantic import BaseModel, Field

from imputation.covariance import covariance_missing
from imputation.errors import ConfigError
from imputation.factors import (
    DEFAULT_C_XI,
    FactorModel,
    estimate_cores,
    estimate_loadings,
    estimate_rank,
    mode_spectrum,
)
from imputation.state import ImputationState
from imputation.tensor import TensorSeries

logger = logging.getLogger(__name__)

# ---------------------------------------------------------------------------
# Config helpers
# ---------------------------------------------------------------------------


class PipelineSettings(BaseModel):
    """Run settings carried in ``config["configurable"]["settings"]``."""

    c_xi: float = Field(default=DEFAULT_C_XI, gt=0)
    max_passes: int = Field(default=0, ge=0)
    tol: float = Field(default=1e-6, ge=0)
    center: bool = False


def _get_settings(config: RunnableConfig) -> PipelineSettings:
    return config.get("configurable", {}).get("settings") or PipelineSettings()


# ---------------------------------------------------------------------------
# Node functions
# ---------------------------------------------------------------------------


def prepare(state: ImputationState, config: RunnableConfig) -> dict:
    """Center the data if requested and start pass 0 on the masked series."""
    settings = _get_settings(config)
    series = state["series"]
    if settings.center:
        centered, offset = series.centered()
    else:
        centered, offset = series, np.zeros(series.dims)
    logger.info(
        "imputing T=%d dims=%s with %.1f%% missing",
        series.T,
        series.dims,
        100.0 * (1.0 - series.mask.mean()),
    )
    return {
        "centered": centered,
        "offset": offset,
        "working": centered,
        "pass_index": 0,
        "changes": [],
        "converged": False,
        "current_stage": "covariance",
    }


def covariance(state: ImputationState, config: RunnableConfig) -> dict:
    """Reconstruct the mode-k covariance of the working series for every mode."""
    working = state["working"]
    covs = [covariance_missing(working, k) for k in range(working.order)]
    result: dict[str, Any] = {"covariances": covs, "current_stage": "select_ranks"}
    if state["pass_index"] == 0:
        result["initial_covariances"] = covs
    return result


def select_ranks(state: ImputationState, config: RunnableConfig) -> dict:
    """Fix the ranks on pass 0, either as requested or by the eigenvalue-ratio rule."""
    result: dict[str, Any] = {"current_stage": "loadings"}
    if state["pass_index"] > 0:
        return result

    working = state["working"]
    requested = state["requested_ranks"]
    if requested == "auto":
        settings = _get_settings(config)
        reports = [
            estimate_rank(mode_spectrum(cov)[0], working.T, working.dims, cov.k, settings.c_xi)
            for cov in state["covariances"]
        ]
        ranks = [report.selected for report in reports]
        logger.info("estimated ranks %s", ranks)
        result["rank_reports"] = reports
    else:
        ranks = [int(r) for r in requested]
        if len(ranks) != working.order:
            raise ConfigError(f"expected {working.order} ranks, got {len(ranks)}")
        for k, (r, d_k) in enumerate(zip(ranks, working.dims)):
            if not 1 <= r <= d_k:
                raise ConfigError(f"mode {k + 1}: rank {r} must lie in [1, {d_k}]")
        result["rank_reports"] = []
    result["ranks"] = ranks
    return result


def loadings(state: ImputationState, config: RunnableConfig) -> dict:
    """PCA on each reconstructed covariance."""
    fitted = [estimate_loadings(cov, r) for cov, r in zip(state["covariances"], state["ranks"])]
    return {
        "loadings": [q for q, _ in fitted],
        "eigenvalues": [d for _, d in fitted],
        "current_stage": "core",
    }


def core(state: ImputationState, config: RunnableConfig) -> dict:
    """Masked least-squares core factors for every time slice."""
    return {"core_fit": estimate_cores(state["working"], state["loadings"]), "current_stage": "fill"}


def fill(state: ImputationState, config: RunnableConfig) -> dict:
    """Assemble common components and fill the missing positions of the centered data."""
    settings = _get_settings(config)
    fit = state["core_fit"]
    model = FactorModel(
        loadings=tuple(state["loadings"]),
        eigenvalues=tuple(state["eigenvalues"]),
        cores=fit.cores,
        empty_slices=fit.empty_slices,
        ill_conditioned=fit.ill_conditioned,
    )
    common = model.common_components()
    centered = state["centered"]
    filled = np.where(centered.mask, centered.zero_filled, common)

    result: dict[str, Any] = {"common": common, "fill": filled}
    if state["pass_index"] > 0:
        missing = ~centered.mask
        change = float(np.max(np.abs(filled[missing] - state["fill"][missing]))) if missing.any() else 0.0
        # threshold scale is the sd of the observed data as given, before any centering
        raw = state["series"]
        observed = raw.values[raw.mask]
        scale = float(np.std(observed)) if observed.size > 1 else 0.0
        result["changes"] = [*state["changes"], change]
        result["converged"] = change < settings.tol * scale
        logger.info("re-imputation pass %d: max change %.3e", state["pass_index"], change)
    return result


def refit(state: ImputationState, config: RunnableConfig) -> dict:
    """Treat the completed data as fully observed for the next pass."""
    return {
        "working": TensorSeries.complete(state["fill"]),
        "pass_index": state["pass_index"] + 1,
        "current_stage": "covariance",
    }
