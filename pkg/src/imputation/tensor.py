"""Dense tensors, observation masks and the unfolding conventions used everywhere else.

Tensors are plain numpy arrays. The linear index of a multi-index follows Fortran
order (first index fastest), so ``vectorize`` and ``kron_loadings`` agree:
``vec(F x_1 A_1 ... x_K A_K) == kron_loadings([A_1, ..., A_K]) @ vec(F)``.

Mode indices are 0-based in this module.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from functools import cached_property, reduce

import numpy as np

from imputation.errors import DimensionError, ModeError

# ---------------------------------------------------------------------------
# Single tensors
# ---------------------------------------------------------------------------


def _check_mode(order: int, k: int) -> None:
    if not 0 <= k < order:
        raise ModeError(k, order)


def unfold(x: np.ndarray, k: int) -> np.ndarray:
    """Mode-k unfolding: a ``d_k x d_{-k}`` matrix whose columns are the mode-k fibres.

    Surviving modes are ordered ascending with the lowest one varying fastest.
    """
    _check_mode(x.ndim, k)
    return np.reshape(np.moveaxis(x, k, 0), (x.shape[k], -1), order="F")


def refold(m: np.ndarray, k: int, dims: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`unfold`."""
    dims = tuple(int(d) for d in dims)
    _check_mode(len(dims), k)
    rest = dims[:k] + dims[k + 1 :]
    if m.ndim != 2 or m.shape != (dims[k], int(np.prod(rest, dtype=np.int64))):
        raise DimensionError(f"matrix of shape {m.shape} cannot be refolded along mode {k + 1} into {dims}")
    return np.moveaxis(np.reshape(m, (dims[k], *rest), order="F"), 0, k)


def mode_product(x: np.ndarray, a: np.ndarray, k: int) -> np.ndarray:
    """Mode-k product ``x x_k a``, defined by ``unfold(result, k) == a @ unfold(x, k)``."""
    _check_mode(x.ndim, k)
    if a.ndim != 2 or a.shape[1] != x.shape[k]:
        raise DimensionError(f"matrix with {a.shape[-1]} columns cannot multiply mode {k + 1} of size {x.shape[k]}")
    return np.moveaxis(np.tensordot(a, x, axes=(1, k)), 0, k)


def multi_mode_product(x: np.ndarray, mats: Sequence[np.ndarray]) -> np.ndarray:
    """``x x_1 mats[0] x_2 mats[1] ... x_K mats[K-1]``."""
    if len(mats) != x.ndim:
        raise DimensionError(f"expected {x.ndim} matrices, got {len(mats)}")
    for k, a in enumerate(mats):
        x = mode_product(x, a, k)
    return x


def vectorize(x: np.ndarray) -> np.ndarray:
    return np.reshape(x, -1, order="F")


def kron_loadings(mats: Sequence[np.ndarray]) -> np.ndarray:
    """``mats[K-1] ⊗ ... ⊗ mats[0]``, the matrix acting on ``vectorize`` of a core tensor."""
    return reduce(lambda acc, q: np.kron(q, acc), mats[1:], mats[0])


# ---------------------------------------------------------------------------
# Time series of tensors
# ---------------------------------------------------------------------------


def unfold_series(x: np.ndarray, k: int) -> np.ndarray:
    """Unfold every slice of a ``(T, *dims)`` stack along mode k, giving ``(T, d_k, d_{-k})``."""
    _check_mode(x.ndim - 1, k)
    return np.reshape(np.moveaxis(x, k + 1, 1), (x.shape[0], x.shape[k + 1], -1), order="F")


def series_mode_product(x: np.ndarray, a: np.ndarray, k: int) -> np.ndarray:
    """Mode-k product applied to every slice of a ``(T, *dims)`` stack."""
    _check_mode(x.ndim - 1, k)
    if a.shape[1] != x.shape[k + 1]:
        raise DimensionError(f"matrix with {a.shape[1]} columns cannot multiply mode {k + 1} of size {x.shape[k + 1]}")
    return np.moveaxis(np.tensordot(a, x, axes=(1, k + 1)), 0, k + 1)


@dataclass(frozen=True)
class TensorSeries:
    """T order-K tensors with a parallel observation mask.

    ``values`` holds NaN at every unobserved position; numeric code must gate on
    ``mask`` and never rely on the sentinel.
    """

    values: np.ndarray
    mask: np.ndarray

    @classmethod
    def from_arrays(cls, values: np.ndarray, mask: np.ndarray | None = None) -> TensorSeries:
        values = np.array(values, dtype=np.float64)
        if values.ndim < 2:
            raise DimensionError("a tensor series needs a time axis and at least one mode")
        if mask is None:
            mask = np.isfinite(values)
        else:
            mask = np.asarray(mask, dtype=bool)
            if mask.shape != values.shape:
                raise DimensionError(f"mask shape {mask.shape} does not match values shape {values.shape}")
            if not np.all(np.isfinite(values[mask])):
                raise DimensionError("observed positions must hold finite values")
        values = np.where(mask, values, np.nan)
        values.flags.writeable = False
        mask = mask.copy()
        mask.flags.writeable = False
        return cls(values=values, mask=mask)

    @classmethod
    def complete(cls, values: np.ndarray) -> TensorSeries:
        values = np.asarray(values, dtype=np.float64)
        return cls.from_arrays(values, np.ones(values.shape, dtype=bool))

    @property
    def T(self) -> int:
        return int(self.values.shape[0])

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(int(d) for d in self.values.shape[1:])

    @property
    def order(self) -> int:
        return self.values.ndim - 1

    @cached_property
    def fully_observed(self) -> bool:
        return bool(self.mask.all())

    @cached_property
    def zero_filled(self) -> np.ndarray:
        """Values with every unobserved position replaced by 0."""
        return np.where(self.mask, self.values, 0.0)

    def observed_mean(self) -> np.ndarray:
        """Per-cell mean over observed times; cells never observed get 0."""
        counts = self.mask.sum(axis=0)
        totals = self.zero_filled.sum(axis=0)
        return np.divide(totals, counts, out=np.zeros(self.dims), where=counts > 0)

    def centered(self) -> tuple[TensorSeries, np.ndarray]:
        means = self.observed_mean()
        return TensorSeries.from_arrays(self.values - means, self.mask), means

    def unfolded(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Zero-filled values and the mask, both unfolded along mode k."""
        return unfold_series(self.zero_filled, k), unfold_series(self.mask, k)
