"""Public entry points: impute, reimpute and the rank re-estimation recipe."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from functools import cache
from typing import Literal

import numpy as np

from imputation.covariance import covariance_complete, covariance_missing
from imputation.factors import (
    DEFAULT_C_XI,
    FactorModel,
    ImputationResult,
    RankReport,
    estimate_rank,
    mode_spectrum,
)
from imputation.graph import build_graph, recursion_limit
from imputation.nodes import PipelineSettings
from imputation.tensor import TensorSeries

logger = logging.getLogger(__name__)

Ranks = Sequence[int] | Literal["auto"]


@cache
def _compiled_graph():
    return build_graph()


def run_pipeline(series: TensorSeries, ranks: Ranks, settings: PipelineSettings) -> ImputationResult:
    """Invoke the compiled graph and package its final state."""
    requested: list[int] | Literal["auto"] = "auto" if ranks == "auto" else [int(r) for r in ranks]
    final = _compiled_graph().invoke(
        {"series": series, "requested_ranks": requested},
        config={
            "configurable": {"settings": settings},
            "recursion_limit": recursion_limit(settings.max_passes),
        },
    )
    fit = final["core_fit"]
    model = FactorModel(
        loadings=tuple(final["loadings"]),
        eigenvalues=tuple(final["eigenvalues"]),
        cores=fit.cores,
        empty_slices=fit.empty_slices,
        ill_conditioned=fit.ill_conditioned,
    )
    offset = final["offset"]
    fitted_common = final["common"] + offset
    completed = TensorSeries.complete(np.where(series.mask, series.zero_filled, fitted_common))
    return ImputationResult(
        completed=completed,
        model=model,
        fitted_common=fitted_common,
        iterations=final["pass_index"],
        changes=tuple(final["changes"]),
        covariances=tuple(final["initial_covariances"]),
        rank_reports=tuple(final.get("rank_reports", ())),
        offset=offset,
    )


def impute(
    series: TensorSeries,
    ranks: Ranks,
    *,
    c_xi: float = DEFAULT_C_XI,
    center: bool = False,
) -> ImputationResult:
    """Single-pass imputation: covariance, loadings, core regression, fill."""
    return run_pipeline(series, ranks, PipelineSettings(c_xi=c_xi, center=center))


def reimpute(
    series: TensorSeries,
    ranks: Ranks,
    max_passes: int = 1,
    tol: float = 1e-6,
    *,
    c_xi: float = DEFAULT_C_XI,
    center: bool = False,
) -> ImputationResult:
    """Imputation followed by up to ``max_passes`` refits on the completed data.

    Ranks are fixed after the first pass. ``result.changes`` holds the maximum
    absolute change at missing positions for every extra pass.
    """
    settings = PipelineSettings(c_xi=c_xi, max_passes=max_passes, tol=tol, center=center)
    return run_pipeline(series, ranks, settings)


@dataclass(frozen=True)
class RankRefinement:
    initial: tuple[RankReport, ...]
    refined: tuple[RankReport, ...]
    result: ImputationResult

    @property
    def initial_ranks(self) -> tuple[int, ...]:
        return tuple(r.selected for r in self.initial)

    @property
    def refined_ranks(self) -> tuple[int, ...]:
        return tuple(r.selected for r in self.refined)


def initial_rank_reports(
    series: TensorSeries, *, c_xi: float = DEFAULT_C_XI, center: bool = False
) -> tuple[RankReport, ...]:
    """Eigenvalue-ratio reports computed from the masked covariance of every mode."""
    working = series.centered()[0] if center else series
    return tuple(
        estimate_rank(mode_spectrum(covariance_missing(working, k))[0], series.T, series.dims, k, c_xi)
        for k in range(series.order)
    )


def refine_ranks(
    series: TensorSeries,
    r_extra: int = 1,
    *,
    c_xi: float = DEFAULT_C_XI,
    center: bool = False,
) -> RankRefinement:
    """Over-fit by ``r_extra`` factors per mode, then re-estimate ranks on the completed data."""
    initial = initial_rank_reports(series, c_xi=c_xi, center=center)
    ranks = [min(r.selected + r_extra, d_k) for r, d_k in zip(initial, series.dims)]
    logger.info("refitting with ranks %s before re-estimation", ranks)
    result = impute(series, ranks, c_xi=c_xi, center=center)

    completed = result.completed
    if center:
        completed = completed.centered()[0]
    refined = tuple(
        estimate_rank(mode_spectrum(covariance_complete(completed, k))[0], series.T, series.dims, k, c_xi)
        for k in range(series.order)
    )
    return RankRefinement(initial=initial, refined=refined, result=result)
