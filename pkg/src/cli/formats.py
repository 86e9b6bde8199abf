"""Long-format CSV and JSON documents exchanged by the command-line tools.

A data file has the header ``t,i1,...,iK,value`` with 1-based indices. An empty
value or an absent row both mean "missing"; written files list every cell.
"""

from __future__ import annotations

import json
import re
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from imputation.errors import DimensionError, MalformedCSVError
from imputation.factors import FactorModel, RankReport, varimax
from imputation.inference import InferenceReport
from imputation.tensor import TensorSeries

FLOAT_FORMAT = "%.17g"

# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def _check_header(columns: Sequence[str]) -> int:
    K = len(columns) - 2
    expected = ["t", *(f"i{k}" for k in range(1, K + 1)), "value"]
    if K < 1 or list(columns[: K + 2]) != expected:
        raise MalformedCSVError(1, f"header must be t,i1,...,iK,value (got {','.join(columns)})")
    return K


def _parse_indices(frame: pd.DataFrame, column: str) -> np.ndarray:
    parsed = pd.to_numeric(frame[column], errors="coerce")
    bad = parsed.isna() | (parsed < 1) | (parsed % 1 != 0)
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        raise MalformedCSVError(row + 2, f"column {column!r} must hold a positive integer, got {frame[column].iloc[row]!r}")
    return parsed.to_numpy(dtype=np.int64)


def _parse_values(raw: pd.Series) -> tuple[np.ndarray, np.ndarray]:
    values = np.full(len(raw), np.nan)
    present = np.zeros(len(raw), dtype=bool)
    for row, text in enumerate(raw.str.strip()):
        if text == "":
            continue
        try:
            value = float(text)
        except ValueError:
            raise MalformedCSVError(row + 2, f"value {text!r} is not a number") from None
        if not np.isfinite(value):
            raise MalformedCSVError(row + 2, f"value {text!r} is not finite")
        values[row] = value
        present[row] = True
    return values, present


def read_long_csv(path: str | Path, dims: Sequence[int] | None = None, T: int | None = None) -> TensorSeries:
    """Load a long-format file; ``dims`` and ``T`` default to the largest indices present."""
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise MalformedCSVError(1, "file is empty") from None
    except pd.errors.ParserError as exc:
        found = re.search(r"line (\d+)", str(exc))
        raise MalformedCSVError(int(found.group(1)) if found else 0, str(exc).strip()) from None
    if frame.columns[-1] == "imputed":
        frame = frame.drop(columns="imputed")
    K = _check_header(list(frame.columns))
    if frame.empty:
        raise MalformedCSVError(2, "file has no data rows")

    times = _parse_indices(frame, "t")
    cells = [_parse_indices(frame, f"i{k}") for k in range(1, K + 1)]
    values, present = _parse_values(frame["value"])

    if dims is None:
        dims = tuple(int(c.max()) for c in cells)
    dims = tuple(int(d) for d in dims)
    if len(dims) != K:
        raise DimensionError(f"file has {K} modes but {len(dims)} dims were given")
    T = int(times.max()) if T is None else int(T)
    for name, index, bound in [("t", times, T), *((f"i{k + 1}", c, d) for k, (c, d) in enumerate(zip(cells, dims)))]:
        over = np.flatnonzero(index > bound)
        if over.size:
            raise DimensionError(f"line {over[0] + 2}: {name}={index[over[0]]} exceeds the declared size {bound}")

    position = (times - 1, *(c - 1 for c in cells))
    linear = np.ravel_multi_index(position, (T, *dims))
    _, first = np.unique(linear, return_index=True)
    if first.size != linear.size:
        duplicated = np.setdiff1d(np.arange(linear.size), first)[0]
        raise MalformedCSVError(int(duplicated) + 2, "duplicate (t, i1, ..., iK) record")

    grid = np.full((T, *dims), np.nan)
    mask = np.zeros((T, *dims), dtype=bool)
    grid[position] = values
    mask[position] = present
    return TensorSeries.from_arrays(grid, mask)


def series_frame(values: np.ndarray, extra: dict[str, np.ndarray] | None = None) -> pd.DataFrame:
    """Every cell of a ``(T, *dims)`` array as long-format rows, t slowest and i1 fastest."""
    T, dims = values.shape[0], values.shape[1:]
    n_cells = int(np.prod(dims, dtype=np.int64))
    cell_index = np.unravel_index(np.arange(n_cells), dims, order="F")
    columns: dict[str, np.ndarray] = {"t": np.repeat(np.arange(1, T + 1), n_cells)}
    for k, index in enumerate(cell_index):
        columns[f"i{k + 1}"] = np.tile(index + 1, T)
    columns["value"] = np.reshape(values, (T, n_cells), order="F").ravel()
    for name, column in (extra or {}).items():
        columns[name] = np.reshape(column, (T, n_cells), order="F").ravel()
    return pd.DataFrame(columns)


def write_long_csv(path: str | Path, values: np.ndarray, extra: dict[str, np.ndarray] | None = None) -> None:
    series_frame(values, extra).to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep="")


def write_series(path: str | Path, series: TensorSeries) -> None:
    write_long_csv(path, series.values)


def write_completed(path: str | Path, completed: TensorSeries, original: TensorSeries) -> None:
    write_long_csv(path, completed.values, {"imputed": (~original.mask).astype(np.int64)})


# ---------------------------------------------------------------------------
# JSON documents
# ---------------------------------------------------------------------------


def write_json(path: str | Path, document: dict[str, Any]) -> None:
    with open(path, "w") as f:
        json.dump(document, f, indent=2)
        f.write("\n")


def rank_report_dict(report: RankReport) -> dict[str, Any]:
    return {
        "mode": report.k + 1,
        "selected": report.selected,
        "xi": report.xi,
        "boundary_hit": report.boundary_hit,
        "eigenvalues": report.eigenvalues.tolist(),
        "ratios": report.ratios.tolist(),
    }


def model_dict(model: FactorModel, *, rotate: bool = False) -> dict[str, Any]:
    document: dict[str, Any] = {
        "dims": list(model.dims),
        "ranks": list(model.ranks),
        "loadings": [q.tolist() for q in model.loadings],
        "eigenvalues": [d.tolist() for d in model.eigenvalues],
        "empty_slices": [t + 1 for t in model.empty_slices],
        "ill_conditioned": [t + 1 for t in model.ill_conditioned],
    }
    if rotate:
        rotated = [varimax(q) for q in model.loadings]
        document["varimax"] = {
            "loadings": [q.tolist() for q, _ in rotated],
            "rotations": [rotation.tolist() for _, rotation in rotated],
        }
    return document


def inference_report_dict(report: InferenceReport) -> dict[str, Any]:
    return {
        "mode": report.k + 1,
        "row": report.j + 1,
        "beta": report.beta,
        "statistic": report.statistic,
        "p_value": report.p_value,
        "df": int(report.standardized.size),
        "standardized": report.standardized.tolist(),
        "sigma_hac": report.sigma_hac.tolist(),
        "sigma_hac_delta": report.sigma_hac_delta.tolist(),
    }
