"""Simulation configuration models, loadable from JSON."""

from __future__ import annotations

from pathlib import Path
from typing import Literal

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from imputation.errors import ConfigError

DEFAULT_AR_FACTOR = (0.7, 0.3, -0.4, 0.2, -0.1)
DEFAULT_AR_NOISE_COMMON = (-0.7, -0.3, -0.4, 0.2, 0.1)
DEFAULT_AR_NOISE_IDIO = (0.8, 0.4, -0.4, 0.2, -0.1)

MISSING_PATTERNS = ("none", "M-i", "M-ii", "M-iii", "M-iv")
BERNOULLI_RATES = {"M-i": 0.05, "M-ii": 0.3}
STATIONARITY_MARGIN = 1e-8


def companion(coeffs: tuple[float, ...]) -> np.ndarray:
    """Companion matrix of ``x_t = sum_l coeffs[l-1] x_{t-l} + e_t``."""
    p = len(coeffs)
    mat = np.zeros((p, p))
    mat[0, :] = coeffs
    mat[1:, :-1] = np.eye(p - 1)
    return mat


def check_stationary(coeffs: tuple[float, ...]) -> None:
    if not coeffs:
        return
    radius = float(np.max(np.abs(scipy.linalg.eigvals(companion(coeffs)))))
    if radius >= 1 - STATIONARITY_MARGIN:
        raise ConfigError(f"AR coefficients {coeffs} are not stationary (companion spectral radius {radius:.6f})")


class MissingSpec(BaseModel):
    """Missing pattern id plus its parameters."""

    model_config = ConfigDict(frozen=True)

    pattern: str = "none"
    probability: float | None = Field(default=None, gt=0, lt=1)
    per_series: bool = False

    @field_validator("pattern")
    @classmethod
    def _known_pattern(cls, value: str) -> str:
        if value not in MISSING_PATTERNS:
            raise ValueError(f"unknown missing pattern {value!r}; expected one of {MISSING_PATTERNS}")
        return value

    def miss_rate(self) -> float:
        return self.probability if self.probability is not None else BERNOULLI_RATES[self.pattern]


class LoadingOverride(BaseModel):
    """Fixes one entry of a generated loading matrix (1-based indices).

    With ``normalized`` the value is the target entry of the column-normalised
    loading ``A_k diag(A_k'A_k)^{-1/2}``, and the raw entry is solved for from the
    rest of its column.
    """

    model_config = ConfigDict(frozen=True)

    mode: int = Field(ge=1)
    row: int = Field(ge=1)
    col: int = Field(ge=1)
    value: float
    normalized: bool = False

    @model_validator(mode="after")
    def _normalized_range(self) -> LoadingOverride:
        if self.normalized and not -1 < self.value < 1:
            raise ValueError("a normalized loading entry must lie in (-1, 1)")
        return self

    def apply(self, loading: np.ndarray) -> None:
        row, col = self.row - 1, self.col - 1
        if not self.normalized:
            loading[row, col] = self.value
            return
        rest = float(np.sum(np.delete(loading[:, col], row) ** 2))
        loading[row, col] = self.value * np.sqrt(rest / (1.0 - self.value**2))


class SimConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    dims: tuple[int, ...] = Field(min_length=1)
    T: int = Field(ge=2)
    ranks: tuple[int, ...] = Field(min_length=1)
    zetas: tuple[tuple[float, ...], ...] | None = None
    ar_factor: tuple[float, ...] = DEFAULT_AR_FACTOR
    ar_noise_common: tuple[float, ...] = DEFAULT_AR_NOISE_COMMON
    ar_noise_idio: tuple[float, ...] = DEFAULT_AR_NOISE_IDIO
    innovation: Literal["gaussian", "student_t"] = "gaussian"
    standardize: Literal["sample", "stationary"] = "sample"
    noise_ranks: tuple[int, ...] | None = None
    noise_sparsity: float = Field(default=0.95, ge=0, le=1)
    idiosyncratic_scale: float = Field(default=1.0, ge=0)
    missing: MissingSpec = MissingSpec()
    fixed_loadings: tuple[LoadingOverride, ...] = ()
    seed: int = Field(default=0, ge=0, lt=2**64)

    @model_validator(mode="after")
    def _consistent(self) -> SimConfig:
        K = len(self.dims)
        if any(d < 1 for d in self.dims):
            raise ValueError("dims must be positive")
        if len(self.ranks) != K:
            raise ValueError(f"expected {K} ranks, got {len(self.ranks)}")
        if any(not 1 <= r <= d for r, d in zip(self.ranks, self.dims)):
            raise ValueError("every rank must lie in [1, d_k]")
        if self.zetas is not None:
            if [len(z) for z in self.zetas] != list(self.ranks):
                raise ValueError("zetas must hold one value per factor of every mode")
            if any(not 0 <= z <= 0.5 for row in self.zetas for z in row):
                raise ValueError("zetas must lie in [0, 0.5]")
        if self.noise_ranks is not None and (len(self.noise_ranks) != K or min(self.noise_ranks) < 1):
            raise ValueError(f"expected {K} positive noise ranks")
        for coeffs in (self.ar_factor, self.ar_noise_common, self.ar_noise_idio):
            check_stationary(coeffs)
        for fix in self.fixed_loadings:
            if fix.mode > K or fix.row > self.dims[fix.mode - 1] or fix.col > self.ranks[fix.mode - 1]:
                raise ValueError(f"loading override {fix} is out of range")
        return self

    @property
    def K(self) -> int:
        return len(self.dims)

    def mode_zetas(self, k: int) -> np.ndarray:
        if self.zetas is None:
            return np.zeros(self.ranks[k])
        return np.asarray(self.zetas[k], dtype=np.float64)

    def mode_noise_rank(self, k: int) -> int:
        return 2 if self.noise_ranks is None else self.noise_ranks[k]

    @classmethod
    def from_file(cls, path: str | Path) -> SimConfig:
        return cls.model_validate_json(Path(path).read_text())
