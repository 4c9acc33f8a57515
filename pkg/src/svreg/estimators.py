"""Conditional index estimators: SIR, SAVE and SVR.

All three work on :class:`~svreg.slicing.SlicedStats` computed from
standardized predictors and return a unit vector in canonical sign.
"""

from dataclasses import dataclass

import numpy as np

from .errors import BinTooSmall, InvalidInput, NoAdmissibleBins
from .linalg import canonical_sign, largest_eigenvector, smallest_eigenvector

METHODS = ("SIR", "SAVE", "SVR")


@dataclass(frozen=True, eq=False)
class IndexEstimate:
    """Estimated index direction and diagnostics of the final eigenproblem."""

    v_hat: np.ndarray
    method: str
    level: int
    eigengap: float
    n_bins: int
    degenerate: bool = False

    @property
    def d(self):
        return self.v_hat.size


@dataclass(frozen=True, eq=False)
class LocalDirection:
    bin: int
    v_local: np.ndarray
    weight: int


def _bins(stats, restrict_to):
    bins = np.flatnonzero(stats.counts > 0)
    if restrict_to is not None:
        allowed = set(restrict_to.indices if hasattr(restrict_to, "indices") else restrict_to)
        bins = np.array([h for h in bins if h in allowed], dtype=np.intp)
    if bins.size == 0:
        raise NoAdmissibleBins("no nonempty slice to aggregate")
    return bins


def _finish(matrix, method, stats, n_bins):
    v, gap, degenerate = largest_eigenvector(matrix)
    return IndexEstimate(canonical_sign(v), method, stats.partition.level, gap, n_bins, degenerate)


def sir_matrix(stats, n=None, restrict_to=None):
    """``sum_h mu_h mu_h^T * count_h / n`` over nonempty bins."""
    n = stats.n if n is None else n
    bins = _bins(stats, restrict_to)
    mu = stats.means[bins]
    w = stats.counts[bins] / n
    return (mu * w[:, None]).T @ mu


def sir(stats, n=None, restrict_to=None):
    """Sliced inverse regression: top eigenvector of the weighted slice-mean outer products.

    ``restrict_to`` optionally limits the sum to an :class:`AdmissibleSet`
    (or any iterable of bin indices).
    """
    m = sir_matrix(stats, n, restrict_to)
    return _finish(m, "SIR", stats, len(_bins(stats, restrict_to)))


def save_matrix(stats, n=None, restrict_to=None):
    """``sum_h (I - Sigma_h)^2 * count_h / n`` over nonempty bins."""
    n = stats.n if n is None else n
    bins = _bins(stats, restrict_to)
    eye = np.eye(stats.d)
    out = np.zeros((stats.d, stats.d))
    for h in bins:
        a = eye - stats.covariances[h]
        out += (a @ a) * (stats.counts[h] / n)
    return 0.5 * (out + out.T)


def save(stats, n=None, restrict_to=None):
    """Sliced average variance estimation."""
    m = save_matrix(stats, n, restrict_to)
    return _finish(m, "SAVE", stats, len(_bins(stats, restrict_to)))


def svr_local(stats, h, mode="centered"):
    """Smallest-variance direction of the predictors inside slice ``h``.

    ``mode="centered"`` uses the slice covariance; ``mode="uncentered"`` the
    raw second moment ``mean(x x^T)`` over the slice.
    """
    count = int(stats.counts[h])
    if mode == "centered":
        if count < 2:
            raise BinTooSmall(f"slice {h} has {count} sample(s); the centered covariance needs 2")
        matrix = stats.covariances[h]
    elif mode == "uncentered":
        if count < 1:
            raise BinTooSmall(f"slice {h} is empty")
        matrix = stats.second_moments[h]
    else:
        raise InvalidInput(f"unknown mode {mode!r}")
    return LocalDirection(int(h), smallest_eigenvector(matrix), count)


def local_directions(stats, adm, mode="centered"):
    return [svr_local(stats, h, mode) for h in sorted(adm.indices)]


def svr_matrix(locals_):
    """Count-weighted average of the local projectors ``v v^T``."""
    if not locals_:
        raise NoAdmissibleBins("no admissible slice")
    d = locals_[0].v_local.size
    out = np.zeros((d, d))
    total = 0
    for loc in locals_:
        out += np.outer(loc.v_local, loc.v_local) * loc.weight
        total += loc.weight
    out /= total
    return 0.5 * (out + out.T)


def svr(stats, adm, mode="centered"):
    """Smallest vector regression.

    Each admissible slice contributes its smallest-variance direction; the
    estimate is the top eigenvector of their count-weighted projector average.
    """
    if not adm.indices:
        raise NoAdmissibleBins("no admissible slice")
    locals_ = local_directions(stats, adm, mode)
    return _finish(svr_matrix(locals_), "SVR", stats, len(locals_))


def index_error(v_hat, v_true):
    """Sign-insensitive distance ``min(||v_hat - v||, ||v_hat + v||)``."""
    v_hat = np.asarray(v_hat, dtype=np.float64)
    v_true = np.asarray(v_true, dtype=np.float64)
    return float(min(np.linalg.norm(v_hat - v_true), np.linalg.norm(v_hat + v_true)))
