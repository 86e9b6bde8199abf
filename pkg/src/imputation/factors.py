"""Loadings, rank selection, core-factor regression and common components."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from imputation.covariance import ModeCovariance
from imputation.errors import ConfigError, EigenDecompositionError, EmptySliceError
from imputation.tensor import TensorSeries, kron_loadings, series_mode_product

logger = logging.getLogger(__name__)

GRAM_CONDITION_LIMIT = 1e12
PINV_RCOND = 1e-10
DEFAULT_C_XI = 0.2

# ---------------------------------------------------------------------------
# Result types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RankReport:
    k: int
    eigenvalues: np.ndarray
    xi: float
    ratios: np.ndarray
    selected: int

    @property
    def boundary_hit(self) -> bool:
        return self.selected == len(self.ratios)


@dataclass(frozen=True)
class CoreFit:
    """Per-time regression output: vec(F_t) rows plus diagnostics."""

    cores: np.ndarray
    empty_slices: tuple[int, ...] = ()
    ill_conditioned: tuple[int, ...] = ()


@dataclass(frozen=True)
class FactorModel:
    """Fitted loadings Q_k, their eigenvalues D_k and the core series F_{Z,t}.

    ``cores`` has shape ``(T, r_1, ..., r_K)``.
    """

    loadings: tuple[np.ndarray, ...]
    eigenvalues: tuple[np.ndarray, ...]
    cores: np.ndarray
    empty_slices: tuple[int, ...] = ()
    ill_conditioned: tuple[int, ...] = ()

    @property
    def order(self) -> int:
        return len(self.loadings)

    @property
    def ranks(self) -> tuple[int, ...]:
        return tuple(q.shape[1] for q in self.loadings)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(q.shape[0] for q in self.loadings)

    @property
    def T(self) -> int:
        return int(self.cores.shape[0])

    def common_components(self, times: slice | None = None) -> np.ndarray:
        """``C_t = F_{Z,t} x_1 Q_1 ... x_K Q_K`` stacked as ``(T, *dims)``."""
        out = self.cores if times is None else self.cores[times]
        for k, q in enumerate(self.loadings):
            out = series_mode_product(out, q, k)
        return out


@dataclass(frozen=True)
class ImputationResult:
    """Completed series plus everything the fit produced.

    ``fitted_common`` is on the data scale (offset added back when centering), so
    completed values equal it wherever the input was missing. ``covariances`` are the
    ones reconstructed from the masked data on the first pass.
    """

    completed: TensorSeries
    model: FactorModel
    fitted_common: np.ndarray
    iterations: int
    changes: tuple[float, ...] = ()
    covariances: tuple[ModeCovariance, ...] = ()
    rank_reports: tuple[RankReport, ...] = ()
    offset: np.ndarray | None = field(default=None, repr=False)


# ---------------------------------------------------------------------------
# Loadings
# ---------------------------------------------------------------------------


def mode_spectrum(cov: ModeCovariance) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and matching eigenvectors of ``cov.s_hat``."""
    try:
        values, vectors = np.linalg.eigh(cov.s_hat)
    except np.linalg.LinAlgError as exc:
        raise EigenDecompositionError(f"mode {cov.k + 1}: {exc}") from exc
    order = np.argsort(values, kind="stable")[::-1]
    return values[order], vectors[:, order]


def normalize_signs(q: np.ndarray) -> np.ndarray:
    """Flip columns so that each column's largest-magnitude entry is positive."""
    pivots = q[np.argmax(np.abs(q), axis=0), np.arange(q.shape[1])]
    return q * np.where(pivots < 0, -1.0, 1.0)


def estimate_loadings(cov: ModeCovariance, r: int) -> tuple[np.ndarray, np.ndarray]:
    """Top-r eigenvectors of the mode covariance, sign-normalized, with their eigenvalues."""
    d_k = cov.s_hat.shape[0]
    if not 1 <= r <= d_k:
        raise ConfigError(f"mode {cov.k + 1}: rank {r} must lie in [1, {d_k}]")
    values, vectors = mode_spectrum(cov)
    return normalize_signs(vectors[:, :r]), values[:r]


# ---------------------------------------------------------------------------
# Number of factors
# ---------------------------------------------------------------------------


def rank_penalty(T: int, dims: Sequence[int], k: int, c_xi: float = DEFAULT_C_XI) -> float:
    """``xi = c_xi * d * [(T d_{-k})^{-1/2} + d_k^{-1/2}]``."""
    d = float(np.prod(dims))
    d_k = dims[k]
    return c_xi * d * ((T * d / d_k) ** -0.5 + d_k**-0.5)


def estimate_rank(
    eigenvalues: np.ndarray,
    T: int,
    dims: Sequence[int],
    k: int,
    c_xi: float = DEFAULT_C_XI,
    *,
    xi: float | None = None,
) -> RankReport:
    """Perturbed eigenvalue-ratio estimate of r_k over l in 1..floor(d_k / 2).

    Ties resolve to the smallest l. ``xi`` overrides the penalty computed from ``c_xi``.
    """
    lam = np.asarray(eigenvalues, dtype=np.float64)
    if lam.size < 2 or dims[k] < 2:
        raise ConfigError("rank selection needs at least two eigenvalues")
    if np.any(np.diff(lam) > 0):
        raise ConfigError("eigenvalues must be sorted in descending order")
    if c_xi <= 0:
        raise ConfigError("c_xi must be positive")
    if xi is None:
        xi = rank_penalty(T, dims, k, c_xi)
    upper = dims[k] // 2
    ratios = (lam[1 : upper + 1] + xi) / (lam[:upper] + xi)
    selected = int(np.argmin(ratios)) + 1
    if selected == upper:
        logger.warning("mode %d: selected rank %d sits on the search boundary", k + 1, selected)
    return RankReport(k=k, eigenvalues=lam, xi=float(xi), ratios=ratios, selected=selected)


# ---------------------------------------------------------------------------
# Core factors and common components
# ---------------------------------------------------------------------------


def _solve_gram(gram: np.ndarray, rhs: np.ndarray) -> tuple[np.ndarray, bool]:
    if np.linalg.cond(gram) > GRAM_CONDITION_LIMIT:
        return np.linalg.pinv(gram, rcond=PINV_RCOND, hermitian=True) @ rhs, True
    return scipy.linalg.solve(gram, rhs, assume_a="sym"), False


def estimate_cores(series: TensorSeries, loadings: Sequence[np.ndarray]) -> CoreFit:
    """Masked least-squares regression of every slice on ``Q_K ⊗ ... ⊗ Q_1``.

    Fully missing slices get a zero core and are listed in ``empty_slices``.
    """
    q_kron = kron_loadings(loadings)
    T = series.T
    y = np.reshape(series.zero_filled, (T, -1), order="F")
    m = np.reshape(series.mask, (T, -1), order="F").astype(np.float64)
    r = q_kron.shape[1]
    outer = np.reshape(q_kron[:, :, None] * q_kron[:, None, :], (-1, r * r))
    grams = np.reshape(m @ outer, (T, r, r))
    rhs = y @ q_kron

    cores = np.zeros((T, r))
    empty: list[int] = []
    ill: list[int] = []
    for t in range(T):
        if not m[t].any():
            empty.append(t)
            continue
        cores[t], flagged = _solve_gram(grams[t], rhs[t])
        if flagged:
            ill.append(t)
    if empty:
        logger.warning("%d fully missing time slices filled with zeros", len(empty))
    if ill:
        logger.warning("%d time slices fell back to a pseudo-inverse core fit", len(ill))
    ranks = tuple(q.shape[1] for q in loadings)
    shaped = np.reshape(cores, (T, *ranks), order="F")
    return CoreFit(cores=shaped, empty_slices=tuple(empty), ill_conditioned=tuple(ill))


def estimate_core(series: TensorSeries, loadings: Sequence[np.ndarray], t: int) -> np.ndarray:
    """``vec(F_{Z,t})`` for one time index; raises if the slice has no observations."""
    if not series.mask[t].any():
        raise EmptySliceError(t)
    q_kron = kron_loadings(loadings)
    y = np.reshape(series.zero_filled[t], -1, order="F")
    m = np.reshape(series.mask[t], -1, order="F")
    observed = q_kron[m]
    core, _ = _solve_gram(observed.T @ observed, observed.T @ y[m])
    return core


def common_components(model: FactorModel, t: int) -> np.ndarray:
    return model.common_components(slice(t, t + 1))[0]


# ---------------------------------------------------------------------------
# Varimax
# ---------------------------------------------------------------------------


def _varimax_criterion(b: np.ndarray) -> float:
    sq = b**2
    return float(np.sum(np.mean(sq**2, axis=0) - np.mean(sq, axis=0) ** 2))


def varimax(q: np.ndarray, *, tol: float = 1e-8, max_sweeps: int = 1000) -> tuple[np.ndarray, np.ndarray]:
    """Varimax rotation by sweeps of pairwise (Jacobi) plane rotations.

    Returns the rotated loadings and the orthogonal rotation with ``rotated == q @ rotation``.
    """
    d, r = q.shape
    rotation = np.eye(r)
    rotated = q.copy()
    if r == 1:
        return rotated, rotation

    criterion = _varimax_criterion(rotated)
    for _ in range(max_sweeps):
        for i in range(r - 1):
            for j in range(i + 1, r):
                u = rotated[:, i] ** 2 - rotated[:, j] ** 2
                v = 2 * rotated[:, i] * rotated[:, j]
                numer = 2 * (u @ v) - 2 * u.sum() * v.sum() / d
                denom = (u @ u) - (v @ v) - (u.sum() ** 2 - v.sum() ** 2) / d
                theta = np.arctan2(numer, denom) / 4
                c, s = np.cos(theta), np.sin(theta)
                plane = np.array([[c, -s], [s, c]])
                rotated[:, [i, j]] = rotated[:, [i, j]] @ plane
                rotation[:, [i, j]] = rotation[:, [i, j]] @ plane
        updated = _varimax_criterion(rotated)
        if updated - criterion < tol:
            break
        criterion = updated
    return q @ rotation, rotation
