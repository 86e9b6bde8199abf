"""Run manifest: the settings of one CLI run, loaded from JSON and overridden by flags."""

from __future__ import annotations

from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field

from imputation.errors import DimensionError
from imputation.tensor import TensorSeries


class OutputPaths(BaseModel):
    completed: str = "completed.csv"
    model: str = "model.json"
    report: str = "report.json"
    ranks: str = "ranks.json"
    inference: str = "inference.json"
    data: str = "data.csv"
    truth: str = "truth.csv"
    common: str = "common.csv"
    truth_model: str = "truth.json"
    results_dir: str = "."


class RunManifest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dims: tuple[int, ...] | None = None
    T: int | None = Field(default=None, ge=1)
    ranks: list[int] | Literal["auto"] = "auto"
    c_xi: float = Field(default=0.2, gt=0)
    center: bool = True
    reimpute: int = Field(default=0, ge=0)
    tol: float = Field(default=1e-6, ge=0)
    beta: int | Literal["auto"] = "auto"
    alpha: float = Field(default=1.0, gt=0)
    rank_extra: int | None = Field(default=None, ge=0)
    varimax: bool = False
    seed: int = Field(default=0, ge=0)
    threads: int = Field(default=1, ge=1)
    outputs: OutputPaths = OutputPaths()

    @classmethod
    def load(cls, path: str | Path | None, **overrides: Any) -> RunManifest:
        """Manifest from ``path`` (or defaults), with every non-None override applied."""
        base = cls.model_validate_json(Path(path).read_text()) if path else cls()
        updates = {key: value for key, value in overrides.items() if value is not None}
        return cls.model_validate({**base.model_dump(), **updates})

    def check_series(self, series: TensorSeries) -> None:
        if self.dims is not None and tuple(self.dims) != series.dims:
            raise DimensionError(f"manifest dims {tuple(self.dims)} do not match the data dims {series.dims}")
        if self.T is not None and self.T != series.T:
            raise DimensionError(f"manifest T={self.T} does not match the data T={series.T}")
