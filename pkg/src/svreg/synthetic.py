"""Seeded generators for the benchmark predictor laws, link functions and noise.

Random streams come from :class:`numpy.random.Philox`, a counter-based
generator, keyed through :class:`numpy.random.SeedSequence`.  A stream is
identified by an integer seed plus an optional tuple of non-negative integers
(the spawn key), so replicate ``r`` of grid cell ``c`` can be regenerated
independently of every other replicate.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .data import Dataset
from .errors import InvalidInput

SKEW_SHAPE = 5.0
F3_BREAKPOINTS = 8
F3_DOMAIN = (-4.0, 4.0)
F3_CURVATURE = 0.3
F3_MIN_SLOPE = (0.2, 1.0)
NOISE_REFERENCE = (-4.0, 4.0)


def make_rng(seed, *key):
    """Philox generator for ``seed`` and spawn key ``key``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


# --------------------------------------------------------------------------
# link functions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PiecewiseQuadratic:
    """Continuous strictly increasing piecewise quadratic, linear outside its domain."""

    knots: tuple        # domain endpoints and interior breakpoints, sorted
    quad: tuple         # a_k
    lin: tuple          # b_k
    const: tuple        # c_k

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        knots = np.asarray(self.knots)
        a, b, c = (np.asarray(v) for v in (self.quad, self.lin, self.const))
        lo, hi = knots[0], knots[-1]
        k = np.clip(np.searchsorted(knots, t, side="right") - 1, 0, len(a) - 1)
        inside = a[k] * t * t + b[k] * t + c[k]
        left_val = a[0] * lo * lo + b[0] * lo + c[0]
        left_slope = 2 * a[0] * lo + b[0]
        right_val = a[-1] * hi * hi + b[-1] * hi + c[-1]
        right_slope = 2 * a[-1] * hi + b[-1]
        out = np.where(t < lo, left_val + left_slope * (t - lo), inside)
        out = np.where(t > hi, right_val + right_slope * (t - hi), out)
        return out

    @classmethod
    def random(cls, seed):
        """Random monotone construction used for the regression-rate experiments.

        Eight breakpoints uniform on [-4, 4]; on each piece a curvature drawn
        from [-0.3, 0.3] and a linear term chosen so the derivative stays at
        least a random value in [0.2, 1.0] (hence above 0.1); constants make
        the curve continuous.
        """
        rng = make_rng(seed, 3)
        lo, hi = F3_DOMAIN
        inner = np.sort(rng.uniform(lo, hi, F3_BREAKPOINTS))
        knots = np.concatenate(([lo], inner, [hi]))
        quad, lin, const = [], [], []
        value = 0.0
        for left, right in zip(knots[:-1], knots[1:]):
            a = rng.uniform(-F3_CURVATURE, F3_CURVATURE)
            slope = rng.uniform(*F3_MIN_SLOPE)
            b = slope - min(2 * a * left, 2 * a * right)
            c = value - a * left * left - b * left
            quad.append(a)
            lin.append(b)
            const.append(c)
            value = a * right * right + b * right + c
        return cls(tuple(knots.tolist()), tuple(quad), tuple(lin), tuple(const))


FUNCTION_KINDS = ("F1", "F2", "F3", "linear", "polynomial")


@dataclass(frozen=True, eq=False)
class FunctionSpec:
    """A single-index link ``F(x) = f(<v, x>)``.

    ``kind`` is one of ``F1`` (``exp(t/3)``), ``F2`` (``F1 + sin(20 t)/15``),
    ``F3`` (random monotone piecewise quadratic, seeded by ``f3_seed``),
    ``linear`` (``t``) or ``polynomial`` (``coeffs`` in ascending powers).
    """

    kind: str
    v: np.ndarray = None
    f3_seed: int = 0
    coeffs: tuple = ()
    _f3: PiecewiseQuadratic = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.kind not in FUNCTION_KINDS:
            raise InvalidInput(f"unknown function kind {self.kind!r}")
        if self.v is not None:
            v = np.asarray(self.v, dtype=np.float64)
            if abs(np.linalg.norm(v) - 1.0) > 1e-12:
                raise InvalidInput("index vector must have unit norm")
            object.__setattr__(self, "v", v)
        if self.kind == "F3":
            object.__setattr__(self, "_f3", PiecewiseQuadratic.random(self.f3_seed))
        if self.kind == "polynomial" and not self.coeffs:
            raise InvalidInput("polynomial link needs coefficients")

    def link(self, t):
        return eval_f(self, t)

    def __call__(self, x):
        """``F(x) = f(<v, x>)`` for predictor rows ``x``."""
        if self.v is None:
            raise InvalidInput("index vector not set")
        return eval_f(self, np.asarray(x, dtype=np.float64) @ self.v)

    def with_v(self, v):
        return FunctionSpec(self.kind, v, self.f3_seed, self.coeffs)


def eval_f(spec, t):
    """Evaluate the one-dimensional link of ``spec`` at ``t``."""
    t = np.asarray(t, dtype=np.float64)
    if spec.kind == "F1":
        out = np.exp(t / 3.0)
    elif spec.kind == "F2":
        out = np.exp(t / 3.0) + np.sin(20.0 * t) / 15.0
    elif spec.kind == "F3":
        out = spec._f3(t)
    elif spec.kind == "linear":
        out = t.copy()
    else:
        out = np.polynomial.polynomial.polyval(t, np.asarray(spec.coeffs, dtype=np.float64))
    return float(out) if out.ndim == 0 else out


def resolve_sigma(spec, fraction):
    """Noise standard deviation ``fraction * |f(-4) - f(4)|``."""
    if fraction < 0:
        raise InvalidInput("noise fraction must be non-negative")
    lo, hi = NOISE_REFERENCE
    return float(fraction) * abs(eval_f(spec, lo) - eval_f(spec, hi))


# --------------------------------------------------------------------------
# predictor distributions
# --------------------------------------------------------------------------

DISTRIBUTION_KINDS = ("gaussian", "s1", "s2")


@dataclass(frozen=True)
class DistributionSpec:
    """Predictor law: standard Gaussian in ``d`` dimensions, or the 2-D settings S1/S2.

    S1 pairs an independent skew normal (shape 5) with a standard normal,
    the skew coordinate sitting on axis ``skew_axis``; S2 is uniform on the
    triangle with vertices (0,0), (1,1), (0,1).  Both are shifted and scaled
    coordinatewise to population mean 0 and variance 1.
    """

    kind: str
    d: int = 2
    skew_axis: int = 0

    def __post_init__(self):
        if self.kind not in DISTRIBUTION_KINDS:
            raise InvalidInput(f"unknown distribution {self.kind!r}")
        if self.kind in ("s1", "s2") and self.d != 2:
            raise InvalidInput(f"setting {self.kind} is two-dimensional")
        if self.d < 1:
            raise InvalidInput("d must be positive")
        if self.skew_axis not in (0, 1):
            raise InvalidInput("skew_axis must be 0 or 1")

    def default_v(self):
        if self.kind == "s1":
            return np.array([1.0, 2.0]) / math.sqrt(5.0)
        v = np.zeros(self.d)
        v[0] = 1.0
        return v


def skew_normal_moments(shape=SKEW_SHAPE):
    delta = shape / math.sqrt(1.0 + shape * shape)
    mean = delta * math.sqrt(2.0 / math.pi)
    return mean, 1.0 - mean * mean


# triangle (0,0), (1,1), (0,1): x ~ 2(1-x) on [0,1], y ~ 2y on [0,1]
TRIANGLE_MEAN = (1.0 / 3.0, 2.0 / 3.0)
TRIANGLE_VAR = 1.0 / 18.0


def sample_x(spec, n, rng, raw=False):
    """Draw ``n`` predictor rows.

    ``rng`` is a :class:`numpy.random.Generator` or an integer seed.  With
    ``raw=True`` the S1/S2 coordinates are returned before renormalization.
    """
    if n < 1:
        raise InvalidInput("n must be positive")
    if not isinstance(rng, np.random.Generator):
        rng = make_rng(rng)
    if spec.kind == "gaussian":
        return rng.standard_normal((n, spec.d))
    if spec.kind == "s1":
        delta = SKEW_SHAPE / math.sqrt(1.0 + SKEW_SHAPE ** 2)
        u = rng.standard_normal((n, 3))
        skew = delta * np.abs(u[:, 1]) + math.sqrt(1.0 - delta * delta) * u[:, 2]
        a = spec.skew_axis
        x = np.empty((n, 2))
        x[:, a] = skew
        x[:, 1 - a] = u[:, 0]
        if raw:
            return x
        mean, var = skew_normal_moments()
        x[:, a] = (x[:, a] - mean) / math.sqrt(var)
        return x
    u = rng.random((n, 2))
    x = np.column_stack((u.min(axis=1), u.max(axis=1)))
    if raw:
        return x
    return (x - np.array(TRIANGLE_MEAN)) / math.sqrt(TRIANGLE_VAR)


@dataclass(frozen=True, eq=False)
class SimulatedData:
    """A generated dataset with its ground truth."""

    dataset: Dataset
    v: np.ndarray
    func: FunctionSpec
    sigma: float
    noiseless: np.ndarray
    seed: int
    key: tuple = ()

    def ground_truth(self):
        return {
            "v": self.v.tolist(),
            "function": {"kind": self.func.kind, "f3_seed": self.func.f3_seed, "coeffs": list(self.func.coeffs)},
            "sigma": self.sigma,
            "seed": self.seed,
            "key": list(self.key),
        }


def make_dataset(dist, func, noise, n, seed, key=(), v=None):
    """Sample ``Y = f(<v, X>) + N(0, sigma^2)`` with ``sigma = noise * |f(-4) - f(4)|``.

    ``v`` defaults to ``func.v`` and then to the distribution's default
    ((1, 2)/sqrt(5) for S1, the first basis vector otherwise).
    """
    if v is None:
        v = func.v if func.v is not None else dist.default_v()
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (dist.d,):
        raise InvalidInput(f"index vector has shape {v.shape}, distribution has d={dist.d}")
    func = func.with_v(v)
    rng = make_rng(seed, *key)
    x = sample_x(dist, n, rng)
    clean = func(x)
    sigma = resolve_sigma(func, noise)
    y = clean + sigma * rng.standard_normal(n) if sigma > 0 else clean.copy()
    return SimulatedData(Dataset(x, y), v, func, sigma, clean, int(seed), tuple(key))
