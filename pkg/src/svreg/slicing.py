"""Dyadic slicing of the response range and per-slice moments."""

from dataclasses import dataclass
import math

import numpy as np

from .errors import InvalidInput, InvalidInterval, NoAdmissibleBins


@dataclass(frozen=True)
class DyadicPartition:
    """The ``2**level`` equal-width bins of ``[a, b]``.

    Bins are half-open ``[lo, hi)`` except the last, which is closed so that
    the bins tile ``[a, b]`` exactly.
    """

    a: float
    b: float
    level: int

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)) or not self.b > self.a:
            raise InvalidInterval(f"degenerate interval [{self.a}, {self.b}]")
        if self.level < 0 or int(self.level) != self.level:
            raise InvalidInput("level must be a non-negative integer")

    @property
    def bin_count(self):
        return 1 << self.level

    @property
    def width(self):
        return (self.b - self.a) / self.bin_count

    def edges(self):
        k = np.arange(self.bin_count + 1)
        e = self.a + k * (self.b - self.a) / self.bin_count
        e[-1] = self.b
        return e

    def assign_many(self, values):
        """Vectorized :func:`assign`; returns -1 for values outside ``[a, b]``."""
        values = np.asarray(values, dtype=np.float64)
        scaled = np.floor((values - self.a) / (self.b - self.a) * self.bin_count)
        inside = (values >= self.a) & (values <= self.b)
        h = np.where(inside, np.minimum(scaled, self.bin_count - 1), -1)
        return h.astype(np.intp)


def build_partition(y, level, s_override=None):
    """Dyadic partition of ``s_override`` or, by default, ``[min(y), max(y)]``."""
    if s_override is not None:
        a, b = s_override
    else:
        y = np.asarray(y, dtype=np.float64)
        if y.size == 0:
            raise InvalidInput("cannot infer a slicing interval from no responses")
        a, b = float(y.min()), float(y.max())
    return DyadicPartition(float(a), float(b), int(level))


def assign(p, y):
    """Bin index of the scalar ``y`` in ``p``, or ``None`` when ``y`` is outside."""
    h = int(p.assign_many(np.array([y]))[0])
    return None if h < 0 else h


@dataclass(frozen=True, eq=False)
class SlicedStats:
    """Counts and first/second moments of the predictors in each slice.

    For empty bins the mean and both matrices are zero; use ``nonempty``.
    """

    partition: DyadicPartition
    counts: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    second_moments: np.ndarray
    total_in_s: int
    n: int

    @property
    def nonempty(self):
        return self.counts > 0

    @property
    def d(self):
        return self.means.shape[1]


@dataclass(frozen=True)
class AdmissibleSet:
    level: int
    indices: tuple


# per-bin matrices are stored densely; refuse levels that would not fit in memory
MAX_DENSE_ENTRIES = 1 << 24


def slice_stats(data, p):
    """Per-bin count, mean, centered covariance and uncentered second moment.

    ``data`` is anything with ``x`` and ``y`` attributes (a
    :class:`~svreg.data.Dataset` or :class:`~svreg.data.StandardizedDataset`).
    Samples are accumulated in their stored order within each bin.

    Raises
    ------
    InvalidInput
        ``2**level * d * d`` exceeds :data:`MAX_DENSE_ENTRIES`.
    """
    x = np.asarray(data.x, dtype=np.float64)
    y = np.asarray(data.y, dtype=np.float64)
    n, d = x.shape
    if p.level > 62 or p.bin_count * d * d > MAX_DENSE_ENTRIES:
        raise InvalidInput(f"level {p.level} is too fine for d={d}")
    bins = p.assign_many(y)
    inside = np.flatnonzero(bins >= 0)
    order = inside[np.argsort(bins[inside], kind="stable")]
    sorted_bins = bins[order]
    nb = p.bin_count
    counts = np.bincount(sorted_bins, minlength=nb).astype(np.int64)
    starts = np.concatenate(([0], np.cumsum(counts)))

    means = np.zeros((nb, d))
    covs = np.zeros((nb, d, d))
    seconds = np.zeros((nb, d, d))
    for h in np.flatnonzero(counts):
        xb = x[order[starts[h]:starts[h + 1]]]
        c = counts[h]
        mu = xb.mean(axis=0)
        centered = xb - mu
        cov = centered.T @ centered / c
        sec = xb.T @ xb / c
        means[h] = mu
        covs[h] = 0.5 * (cov + cov.T)
        seconds[h] = 0.5 * (sec + sec.T)
    return SlicedStats(p, counts, means, covs, seconds, int(inside.size), int(n))


def bin_members(data, p):
    """List of sample-index arrays, one per bin, in stored sample order."""
    bins = p.assign_many(np.asarray(data.y))
    return [np.flatnonzero(bins == h) for h in range(p.bin_count)]


def admissible_bins(stats, n=None):
    """Bins holding at least ``2**-l * n`` samples.

    Raises
    ------
    NoAdmissibleBins
        No bin reaches the threshold.
    """
    if n is None:
        n = stats.n
    level = stats.partition.level
    # counts >= n / 2**l, compared in integers to avoid rounding at the threshold
    ok = np.flatnonzero(stats.counts * (1 << level) >= n)
    if ok.size == 0:
        raise NoAdmissibleBins(f"no slice at level {level} holds {n / (1 << level):.3g} samples")
    return AdmissibleSet(level, tuple(int(h) for h in ok))
