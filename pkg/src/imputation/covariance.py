"""Mode-k sample covariance reconstructed from pairwise observation overlaps.

For rows i, j of the mode-k unfolding and column h, the psi-set is the set of
times at which both entries (i, h) and (j, h) are observed. Each (i, j, h)
cross-product is averaged over its own psi-set and the averages are summed over h.
"""

import logging
from dataclasses import dataclass

import numpy as np

from imputation.errors import DimensionError, InputError, UnidentifiableRowError
from imputation.tensor import TensorSeries, unfold_series

logger = logging.getLogger(__name__)

# Upper bound on d_k * d_k * (h-stripe width) held at once.
_STRIPE_ELEMENTS = 1 << 22


@dataclass(frozen=True)
class ModeCovariance:
    k: int
    s_hat: np.ndarray
    min_overlap: int
    dropped_terms: int


def psi_count(series: TensorSeries, k: int, i: int, j: int, h: int) -> int:
    """Number of times at which entries (i, h) and (j, h) of the mode-k unfolding are both observed."""
    _, mask = series.unfolded(k)
    d_k, d_rest = mask.shape[1:]
    if not (0 <= i < d_k and 0 <= j < d_k and 0 <= h < d_rest):
        raise DimensionError(f"index ({i + 1}, {j + 1}, {h + 1}) out of range for a {d_k} x {d_rest} unfolding")
    return int(np.count_nonzero(mask[:, i, h] & mask[:, j, h]))


def covariance_complete(series: TensorSeries, k: int) -> ModeCovariance:
    """``(1/T) sum_t mat_k(Y_t) mat_k(Y_t)'`` for a fully observed series."""
    if not series.fully_observed:
        raise InputError("covariance_complete needs a fully observed series")
    y = unfold_series(series.values, k)
    flat = np.reshape(np.moveaxis(y, 1, 0), (y.shape[1], -1))
    s_hat = flat @ flat.T / series.T
    s_hat = (s_hat + s_hat.T) / 2
    return ModeCovariance(k=k, s_hat=s_hat, min_overlap=series.T, dropped_terms=0)


def covariance_missing(series: TensorSeries, k: int, *, center: bool = False) -> ModeCovariance:
    """Pairwise-observation reconstruction of the mode-k covariance.

    Terms whose psi-set is empty contribute 0 and are counted in ``dropped_terms``.
    Partial sums are reduced over h-stripes in index order, so the result does not
    depend on how the work is split.
    """
    if center:
        series, _ = series.centered()
    y, mask = series.unfolded(k)
    T, d_k, d_rest = y.shape

    never_seen = ~mask.any(axis=(0, 2))
    if never_seen.any():
        raise UnidentifiableRowError(k, int(np.flatnonzero(never_seen)[0]))

    m = mask.astype(np.float64)
    stripe = max(1, _STRIPE_ELEMENTS // (d_k * d_k))
    s_hat = np.zeros((d_k, d_k))
    dropped = 0
    min_overlap = T
    for start in range(0, d_rest, stripe):
        cols = slice(start, min(start + stripe, d_rest))
        # (h, d_k, T) stacks; batched matmul gives per-h cross products
        yh = np.ascontiguousarray(np.transpose(y[:, :, cols], (2, 1, 0)))
        mh = np.ascontiguousarray(np.transpose(m[:, :, cols], (2, 1, 0)))
        numer = yh @ np.transpose(yh, (0, 2, 1))
        counts = mh @ np.transpose(mh, (0, 2, 1))
        seen = counts > 0
        averages = np.divide(numer, counts, out=np.zeros_like(numer), where=seen)
        s_hat += averages.sum(axis=0)
        dropped += int(np.count_nonzero(~seen))
        if seen.any():
            min_overlap = min(min_overlap, int(counts[seen].min()))

    if dropped:
        logger.warning("mode %d: %d zero-overlap terms dropped from the covariance", k + 1, dropped)
    s_hat = (s_hat + s_hat.T) / 2
    return ModeCovariance(k=k, s_hat=s_hat, min_overlap=min_overlap, dropped_terms=dropped)
