"""Dataset container, whitening, sample filtering and CSV input/output."""

import csv
from dataclasses import dataclass, field
import math

import numpy as np

from .errors import DataFormatError, EmptyDataset, InvalidInput, NumericalFailure
from .linalg import inv_sqrt


def _frozen(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """``n`` samples of a ``d``-dimensional predictor and a scalar response.

    Arrays are copied and made read-only on construction.
    """

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = _frozen(self.x)
        y = _frozen(self.y).ravel()
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        if x.ndim != 2:
            raise InvalidInput(f"x must be a 2-D array, got shape {x.shape}")
        if x.shape[0] != y.size:
            raise InvalidInput(f"x has {x.shape[0]} rows but y has {y.size} entries")
        if x.shape[0] < 1 or x.shape[1] < 1:
            raise InvalidInput("dataset needs n >= 1 and d >= 1")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise InvalidInput("dataset contains non-finite values")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def d(self):
        return self.x.shape[1]

    def take(self, index):
        return Dataset(self.x[index], self.y[index])


@dataclass(frozen=True, eq=False)
class StandardizedDataset:
    """Whitened samples together with the affine map that produced them.

    ``data.x[i] = whitener @ (x_orig[kept[i]] - mean)``.  Rows are stored in a
    canonical order (lexicographic in ``(y, x)``) so every downstream statistic
    is independent of the order in which samples were supplied.
    """

    data: Dataset
    mean: np.ndarray
    whitener: np.ndarray
    kept: np.ndarray = field(default=None)

    @property
    def n(self):
        return self.data.n

    @property
    def d(self):
        return self.data.d

    @property
    def x(self):
        return self.data.x

    @property
    def y(self):
        return self.data.y

    def transform(self, x):
        """Map predictor rows from original to whitened coordinates."""
        x = np.asarray(x, dtype=np.float64)
        return (x - self.mean) @ self.whitener


@dataclass(frozen=True)
class FilterConfig:
    """Thresholds for discarding far-out samples before slicing.

    A sample is kept when ``||x|| <= c_x * sqrt(d)`` (whitened coordinates)
    and ``|y - mean(y)| <= c_y * std(y)``.  Off by default.
    """

    c_x: float = 4.0
    c_y: float = 4.0
    enabled: bool = False

    def __post_init__(self):
        if not (self.c_x > 0 and self.c_y > 0):
            raise InvalidInput("filter thresholds must be positive")


def canonical_order(x, y):
    """Row permutation sorting samples lexicographically by ``(y, x_1, ..., x_d)``."""
    keys = tuple(x[:, j] for j in range(x.shape[1] - 1, -1, -1)) + (y,)
    return np.lexsort(keys)


def standardize(ds, rel_tol=1e-10):
    """Whiten ``ds`` to zero sample mean and identity sample covariance.

    Uses the biased (``1/n``) covariance and its symmetric inverse square
    root, ``x -> W (x - mean)``.

    Raises
    ------
    SingularCovariance
        The sample covariance is (numerically) singular, e.g. collinear
        predictors or ``n <= d``.
    """
    order = canonical_order(ds.x, ds.y)
    x = ds.x[order]
    y = ds.y[order]
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / ds.n
    whitener = inv_sqrt(0.5 * (cov + cov.T), rel_tol=rel_tol)
    z = centered @ whitener
    return StandardizedDataset(
        Dataset(z, y), _frozen(mean), _frozen(whitener), np.asarray(order, dtype=np.intp)
    )


def identity_standardization(ds):
    """Wrap ``ds`` without transforming it (for experiments that skip whitening)."""
    order = canonical_order(ds.x, ds.y)
    return StandardizedDataset(
        ds.take(order), _frozen(np.zeros(ds.d)), _frozen(np.eye(ds.d)), np.asarray(order, dtype=np.intp)
    )


def filter_samples(sd, cfg):
    """Drop samples with large predictor norm or large response deviation.

    No-op when ``cfg.enabled`` is false.

    Raises
    ------
    EmptyDataset
        Every sample was rejected.
    """
    if not cfg.enabled:
        return sd
    x, y = sd.x, sd.y
    keep = np.ones(sd.n, dtype=bool)
    if math.isfinite(cfg.c_x):
        keep &= np.linalg.norm(x, axis=1) <= cfg.c_x * math.sqrt(sd.d)
    if math.isfinite(cfg.c_y):
        keep &= np.abs(y - y.mean()) <= cfg.c_y * y.std()
    if not keep.any():
        raise EmptyDataset("all samples were removed by the filter")
    if keep.all():
        return sd
    return StandardizedDataset(sd.data.take(keep), sd.mean, sd.whitener, sd.kept[keep])


def _unit(v, what):
    norm = np.linalg.norm(v)
    if not norm > 0 or not np.isfinite(norm):
        raise NumericalFailure(f"{what} mapped to a zero or non-finite vector")
    return v / norm


def back_map_direction(sd, v_white):
    """Express a whitened-coordinate index direction in original coordinates.

    Since ``<u, W(x - mean)> = <W u, x> - const``, the direction is ``W u``
    renormalized.
    """
    return _unit(sd.whitener @ np.asarray(v_white, dtype=np.float64), "direction")


def forward_map_direction(sd, v):
    """Index direction of the original coordinates seen in whitened coordinates.

    If ``F(x) = f(<v, x>)`` then in whitened coordinates ``F`` depends on
    ``<W^{-1} v, z>``; this returns that direction, normalized.
    """
    return _unit(np.linalg.solve(sd.whitener, np.asarray(v, dtype=np.float64)), "direction")


def _read_table(path, y_optional):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError("empty file", line=1) from None
        header = [h.strip() for h in header]
        has_y = bool(header) and header[-1] == "y"
        d = len(header) - 1 if has_y else len(header)
        expected = [f"x{j + 1}" for j in range(d)] + (["y"] if has_y else [])
        if d < 1 or header != expected or not (has_y or y_optional):
            raise DataFormatError("header must be x1,...,xd,y", line=1)
        width = len(header)
        rows, lines = [], []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != width:
                raise DataFormatError(f"expected {width} fields, got {len(row)}", line=line)
            if any(c.strip() == "" for c in row):
                raise DataFormatError("missing field", line=line)
            try:
                values = [float(c) for c in row]
            except ValueError:
                raise DataFormatError("could not parse a number", line=line) from None
            rows.append(values)
            lines.append(line)
    if not rows:
        raise DataFormatError("no data rows", line=2)
    arr = np.array(rows)
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.all(np.isfinite(arr), axis=1))[0])
        raise DataFormatError("non-finite value", line=lines[bad])
    return arr[:, :d], (arr[:, d] if has_y else None)


def read_csv(path):
    """Load a dataset from CSV with header ``x1,...,xd,y``."""
    x, y = _read_table(path, y_optional=False)
    try:
        return Dataset(x, y)
    except InvalidInput as exc:
        raise DataFormatError(str(exc)) from None


def read_predictors(path):
    """Load predictor rows from CSV with header ``x1,...,xd`` and an optional trailing ``y``.

    Returns ``(x, y)`` with ``y`` None when the column is absent.
    """
    return _read_table(path, y_optional=True)


def write_csv(path, ds):
    """Write ``ds`` as CSV with header ``x1,...,xd,y`` (shortest round-trip floats)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{j + 1}" for j in range(ds.d)] + ["y"])
        for xi, yi in zip(ds.x.tolist(), ds.y.tolist()):
            writer.writerow([repr(v) for v in xi] + [repr(yi)])
