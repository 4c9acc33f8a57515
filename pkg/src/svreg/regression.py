"""Dyadic piecewise-polynomial regression along an index direction, plus a kNN baseline."""

from dataclasses import dataclass, field
import json
import math

import numpy as np

from .errors import EmptyDataset, InvalidInput
from .linalg import polyfit_ls


@dataclass(frozen=True, eq=False)
class PiecewiseModel:
    """Piecewise polynomial in ``t = <projection, x> + offset`` on ``2**scale_j`` bins of ``interval``.

    Predictions are exactly zero for ``t`` outside ``interval`` (and outside
    ``[-radius, radius]`` when a radius is set).  ``coeffs[k]`` holds
    ascending-power coefficients of the polynomial used on bin ``k``; for an
    empty bin they are copied from the nearest nonempty ancestor bin recorded
    in ``fallback`` as ``{k: (j', k')}``.
    """

    projection: np.ndarray
    offset: float
    interval: tuple
    scale_j: int
    degree_m: int
    coeffs: np.ndarray
    bin_nonempty: np.ndarray
    fallback: dict = field(default_factory=dict)
    method: str = ""
    level_l: int = -1
    radius: float = None

    @property
    def bin_count(self):
        return 1 << self.scale_j

    def project(self, x):
        x = np.asarray(x, dtype=np.float64)
        return x @ self.projection + self.offset

    def predict_t(self, t):
        """Evaluate the link estimate at projected coordinates ``t``."""
        t = np.asarray(t, dtype=np.float64)
        a, b = self.interval
        nb = self.bin_count
        inside = (t >= a) & (t <= b)
        if self.radius is not None:
            inside &= np.abs(t) <= self.radius
        k = np.floor((t - a) / (b - a) * nb)
        k = np.clip(np.where(inside, k, 0), 0, nb - 1).astype(np.intp)
        c = self.coeffs[k]
        # Horner in ascending-power storage
        out = c[..., -1].copy()
        for p in range(self.degree_m - 1, -1, -1):
            out = out * t + c[..., p]
        return np.where(inside, out, 0.0)

    def predict(self, x):
        """Predict at predictor row(s) ``x`` (original coordinates)."""
        x = np.asarray(x, dtype=np.float64)
        out = self.predict_t(self.project(x))
        return float(out) if np.ndim(out) == 0 else out

    def to_dict(self):
        return {
            "direction": self.projection.tolist(),
            "offset": self.offset,
            "method": self.method,
            "level_l": self.level_l,
            "interval_i": list(self.interval),
            "scale_j": self.scale_j,
            "degree_m": self.degree_m,
            "coeffs": self.coeffs.tolist(),
            "bin_nonempty": self.bin_nonempty.tolist(),
            "fallback": {str(k): list(v) for k, v in sorted(self.fallback.items())},
            "radius": self.radius,
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, obj):
        try:
            return cls(
                projection=np.array(obj["direction"], dtype=np.float64),
                offset=float(obj.get("offset", 0.0)),
                interval=tuple(float(v) for v in obj["interval_i"]),
                scale_j=int(obj["scale_j"]),
                degree_m=int(obj["degree_m"]),
                coeffs=np.array(obj["coeffs"], dtype=np.float64).reshape(1 << int(obj["scale_j"]), -1),
                bin_nonempty=np.array(obj.get("bin_nonempty", [True] * (1 << int(obj["scale_j"]))), dtype=bool),
                fallback={int(k): tuple(v) for k, v in obj.get("fallback", {}).items()},
                method=obj.get("method", ""),
                level_l=int(obj.get("level_l", -1)),
                radius=obj.get("radius"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"malformed model: {exc}") from None

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _projection(data, direction):
    v = getattr(direction, "v_hat", direction)
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (data.d,):
        raise InvalidInput(f"direction has shape {v.shape}, data has d={data.d}")
    return v


def fit_piecewise(data, direction, scale_j, degree_m, interval=None, radius=None):
    """Fit a degree-``degree_m`` polynomial on each of the ``2**scale_j`` bins of ``interval``.

    Parameters
    ----------
    data : Dataset or StandardizedDataset
        Training samples.  For a standardized dataset the projection is taken
        in whitened coordinates and the returned model folds the whitening
        map in, so it predicts on original-coordinate inputs.
    direction : IndexEstimate or array_like
        Index direction in the coordinates of ``data.x``.
    scale_j, degree_m : int
        Dyadic scale and polynomial degree.
    interval : (float, float), optional
        Defaults to ``[min t, max t]`` over the training projections.
    radius : float, optional
        Additionally zero the estimator for ``|t| > radius``.

    Returns
    -------
    PiecewiseModel
    """
    scale_j, degree_m = int(scale_j), int(degree_m)
    if scale_j < 0 or degree_m < 0:
        raise InvalidInput("scale_j and degree_m must be non-negative")
    v = _projection(data, direction)
    t = np.asarray(data.x, dtype=np.float64) @ v
    y = np.asarray(data.y, dtype=np.float64)
    if interval is None:
        a, b = float(t.min()), float(t.max())
        if not b > a:
            b = a + 1.0
    else:
        a, b = (float(c) for c in interval)
        if not b > a:
            raise InvalidInput(f"degenerate interval [{a}, {b}]")

    inside = (t >= a) & (t <= b)
    if radius is not None:
        inside &= np.abs(t) <= radius
    if not inside.any():
        raise EmptyDataset("no sample projects into the fitting interval")
    t, y = t[inside], y[inside]

    nb = 1 << scale_j
    k = np.minimum(np.floor((t - a) / (b - a) * nb), nb - 1).astype(np.intp)
    order = np.argsort(k, kind="stable")
    counts = np.bincount(k, minlength=nb)
    starts = np.concatenate(([0], np.cumsum(counts)))

    coeffs = np.zeros((nb, degree_m + 1))
    nonempty = counts > 0
    for kk in np.flatnonzero(nonempty):
        idx = order[starts[kk]:starts[kk + 1]]
        coeffs[kk] = polyfit_ls(t[idx], y[idx], degree_m)

    fallback = {}
    ancestor_fits = {}
    for kk in np.flatnonzero(~nonempty):
        jj, anc = scale_j, int(kk)
        while True:
            jj -= 1
            anc >>= 1
            span = 1 << (scale_j - jj)
            lo, hi = anc * span, (anc + 1) * span
            if counts[lo:hi].sum() > 0:
                break
        key = (jj, anc)
        if key not in ancestor_fits:
            idx = order[starts[lo]:starts[hi]]
            ancestor_fits[key] = polyfit_ls(t[idx], y[idx], degree_m)
        coeffs[kk] = ancestor_fits[key]
        fallback[int(kk)] = key

    projection, offset = v, 0.0
    whitener = getattr(data, "whitener", None)
    if whitener is not None:
        projection = whitener @ v
        offset = -float(data.mean @ projection)
    return PiecewiseModel(
        projection=projection,
        offset=offset,
        interval=(a, b),
        scale_j=scale_j,
        degree_m=degree_m,
        coeffs=coeffs,
        bin_nonempty=nonempty,
        fallback=fallback,
        method=getattr(direction, "method", ""),
        level_l=getattr(direction, "level", -1),
        radius=radius,
    )


def predict(model, x):
    """Prediction of a fitted model (piecewise or kNN) at row(s) ``x``."""
    return model.predict(x)


def recommended_scale_j(n, s=1.0, b=1.0):
    """Scale with ``2**-j ~ sqrt(b) * (log n / n)**(1 / (2 s + 1))``, clamped to ``[0, log2 n]``."""
    if n < 2:
        raise InvalidInput("n must be at least 2")
    target = (n / math.log(n)) ** (1.0 / (2.0 * s + 1.0)) / math.sqrt(b)
    j = round(math.log2(target))
    return int(min(max(j, 0), math.floor(math.log2(n))))


def mse(model, test, truth=None):
    """Mean squared prediction error on ``test``.

    ``truth`` replaces ``test.y`` as the reference; it may be an array of
    noiseless values or a callable evaluated on ``test.x``.
    """
    pred = np.asarray(model.predict(test.x), dtype=np.float64)
    if truth is None:
        ref = test.y
    elif callable(truth):
        ref = np.asarray(truth(test.x), dtype=np.float64)
    else:
        ref = np.asarray(truth, dtype=np.float64)
    return float(np.mean((pred - ref) ** 2))


# --------------------------------------------------------------------------
# k nearest neighbours
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class KnnModel:
    """Brute-force Euclidean k-nearest-neighbour regressor on the full predictor."""

    x: np.ndarray
    y: np.ndarray
    k: int
    cv_scores: dict = field(default_factory=dict)

    def neighbors(self, x, chunk=2048):
        return _neighbors(self.x, np.atleast_2d(np.asarray(x, dtype=np.float64)), self.k, chunk)

    def predict(self, x, chunk=2048):
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        idx = self.neighbors(x, chunk)
        # sequential summation, so the result does not depend on numpy's pairwise blocking
        out = np.cumsum(self.y[idx], axis=1)[:, -1] / self.k
        return float(out[0]) if single else out


def _neighbors(train, query, k, chunk=2048):
    """Indices (ascending) of the ``k`` nearest training rows for each query row.

    Ties in distance go to the lower training index.
    """
    n = train.shape[0]
    sq_train = np.einsum("ij,ij->i", train, train)
    out = np.empty((query.shape[0], k), dtype=np.intp)
    for start in range(0, query.shape[0], chunk):
        q = query[start:start + chunk]
        dist = sq_train[None, :] - 2.0 * (q @ train.T) + np.einsum("ij,ij->i", q, q)[:, None]
        if k < n:
            part = np.argpartition(dist, k - 1, axis=1)[:, :k]
            # resolve ties at the k-th distance in favour of lower indices
            kth = np.take_along_axis(dist, part, axis=1).max(axis=1)
            tied = np.flatnonzero(np.count_nonzero(dist <= kth[:, None], axis=1) > k)
            for r in tied:
                part[r] = np.argsort(dist[r], kind="stable")[:k]
        else:
            part = np.broadcast_to(np.arange(n), (q.shape[0], n)).copy()
        out[start:start + chunk] = np.sort(part, axis=1)
    return out


def knn_candidates(n):
    """``1, 2, 4, ...`` up to ``n``."""
    return [1 << p for p in range(int(math.floor(math.log2(n))) + 1)]


def knn_fit(ds, k=None, folds=5):
    """Store the training set; choose ``k`` by ``folds``-fold cross-validation if absent.

    Folds are assigned as ``i mod folds`` in sample order.  Candidate ``k`` are
    powers of two no larger than the smallest training fold.
    """
    if ds.n == 0:
        raise EmptyDataset("kNN needs at least one training sample")
    x = np.asarray(ds.x, dtype=np.float64)
    y = np.asarray(ds.y, dtype=np.float64)
    if k is not None:
        k = int(k)
        if not 1 <= k <= ds.n:
            raise InvalidInput(f"k must lie in [1, {ds.n}]")
        return KnnModel(x, y, k)
    if ds.n < 2:
        return KnnModel(x, y, 1)
    folds = min(folds, ds.n)
    fold = np.arange(ds.n) % folds
    min_train = ds.n - np.bincount(fold).max()
    candidates = [c for c in knn_candidates(ds.n) if c <= min_train]
    errs = np.zeros(len(candidates))
    for f in range(folds):
        tr, te = fold != f, fold == f
        sums = _neighbor_sums(x[tr], y[tr], x[te], candidates)
        errs += np.sum((sums / np.array(candidates) - y[te][:, None]) ** 2, axis=0)
    errs /= ds.n
    best = candidates[int(np.argmin(errs))]
    return KnnModel(x, y, best, dict(zip(candidates, errs.tolist())))


def _neighbor_sums(train_x, train_y, query, ks, chunk=256):
    """Sum of responses over the ``k`` nearest training rows, for every ``k`` in ``ks``."""
    n = train_x.shape[0]
    ks = list(ks)
    sq_train = np.einsum("ij,ij->i", train_x, train_x)
    out = np.empty((query.shape[0], len(ks)))
    kth = [k - 1 for k in ks if k < n]
    for start in range(0, query.shape[0], chunk):
        q = query[start:start + chunk]
        dist = sq_train[None, :] - 2.0 * (q @ train_x.T)
        part = np.argpartition(dist, kth, axis=1) if kth else np.broadcast_to(np.arange(n), dist.shape)
        # positions k-1 of a multi-kth partition separate the k nearest from the rest
        csum = np.cumsum(train_y[part[:, : ks[-1]]], axis=1)
        out[start:start + chunk] = csum[:, np.array(ks) - 1]
    return out


def knn_predict(model, x):
    return model.predict(x)
