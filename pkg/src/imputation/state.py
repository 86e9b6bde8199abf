from typing import Literal, TypedDict

import numpy as np

from imputation.covariance import ModeCovariance
from imputation.factors import CoreFit, RankReport
from imputation.tensor import TensorSeries


class ImputationState(TypedDict, total=False):
    """State schema for the imputation pipeline graph."""

    # Inputs
    series: TensorSeries
    requested_ranks: list[int] | Literal["auto"]

    # Working data (centered when requested; fully observed after the first pass)
    centered: TensorSeries
    offset: np.ndarray
    working: TensorSeries

    # Estimates
    covariances: list[ModeCovariance]
    initial_covariances: list[ModeCovariance]
    rank_reports: list[RankReport]
    ranks: list[int]
    loadings: list[np.ndarray]
    eigenvalues: list[np.ndarray]
    core_fit: CoreFit
    common: np.ndarray
    fill: np.ndarray

    # Flow control
    current_stage: Literal["prepare", "covariance", "select_ranks", "loadings", "core", "fill", "refit"]
    pass_index: int
    changes: list[float]
    converged: bool
