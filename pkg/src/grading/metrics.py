"""Accuracy measures for fitted loadings and imputed common components."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from imputation.errors import DimensionError, InputError, NumericalError

Role = Literal["observed", "missing", "all"]


@dataclass(frozen=True)
class EntrySelection:
    """A subset of (t, multi-index) entries, resolved to a boolean array over the series."""

    role: Role
    mask: np.ndarray

    @classmethod
    def from_observed(cls, observed: np.ndarray, role: Role) -> EntrySelection:
        observed = np.asarray(observed, dtype=bool)
        if role == "observed":
            return cls(role, observed)
        if role == "missing":
            return cls(role, ~observed)
        if role == "all":
            return cls(role, np.ones_like(observed))
        raise InputError(f"unknown entry selection {role!r}")

    @property
    def size(self) -> int:
        return int(np.count_nonzero(self.mask))

    def indices(self) -> np.ndarray:
        """Selected entries as rows of ``(t, i_1, ..., i_K)`` (0-based)."""
        return np.argwhere(self.mask)


def _projector(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 2 or np.linalg.matrix_rank(q) < q.shape[1]:
        raise DimensionError(f"matrix of shape {q.shape} does not have full column rank")
    basis, _ = np.linalg.qr(q)
    return basis @ basis.T


def col_space_distance(q: np.ndarray, q_hat: np.ndarray) -> float:
    """Spectral norm of the difference between the projectors onto both column spaces."""
    if np.shape(q)[0] != np.shape(q_hat)[0]:
        raise DimensionError(f"row counts differ: {np.shape(q)[0]} vs {np.shape(q_hat)[0]}")
    distance = float(np.linalg.norm(_projector(q) - _projector(q_hat), ord=2))
    return min(distance, 1.0)


def relative_mse(fitted: np.ndarray, truth: np.ndarray, sel: EntrySelection | None = None) -> float:
    """``sum (fitted - truth)^2 / sum truth^2`` over the selected entries."""
    fitted = np.asarray(fitted, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if fitted.shape != truth.shape:
        raise DimensionError(f"shape mismatch: {fitted.shape} vs {truth.shape}")
    if sel is not None:
        if sel.mask.shape != truth.shape:
            raise DimensionError(f"selection shape {sel.mask.shape} does not match {truth.shape}")
        fitted, truth = fitted[sel.mask], truth[sel.mask]
    if truth.size == 0:
        raise InputError("empty entry selection")
    denominator = float(np.sum(truth**2))
    if denominator == 0:
        raise NumericalError("relative MSE undefined: selected truth entries are all zero")
    return float(np.sum((fitted - truth) ** 2)) / denominator


def quantile_cuts(n: int, q: int) -> np.ndarray:
    """Bin edges ``ceil(j n / q)`` for j = 0..q; bin j covers ``[cuts[j-1], cuts[j])``."""
    j = np.arange(q + 1)
    return -(-j * n // q)


def q_rse(truth: np.ndarray, fitted: np.ndarray, q: int) -> float:
    """Relative squared error between truth-quantile bin means of truth and fitted."""
    truth = np.ravel(np.asarray(truth, dtype=np.float64))
    fitted = np.ravel(np.asarray(fitted, dtype=np.float64))
    n = truth.size
    if fitted.size != n:
        raise DimensionError(f"length mismatch: {n} vs {fitted.size}")
    if not 1 <= q <= n:
        raise InputError(f"q={q} must lie in [1, {n}]")

    order = np.argsort(truth, kind="stable")
    cuts = quantile_cuts(n, q)
    widths = np.diff(cuts)
    mu = np.add.reduceat(truth[order], cuts[:-1]) / widths
    mu_hat = np.add.reduceat(fitted[order], cuts[:-1]) / widths
    denominator = float(np.sum(mu**2))
    if denominator == 0:
        raise NumericalError("q-RSE undefined: all bin means of the truth are zero")
    return float(np.sum((mu - mu_hat) ** 2)) / denominator
