"""End-to-end fitting: standardize, slice, estimate the index, regress the link."""

import math

import numpy as np

from .data import filter_samples, identity_standardization, standardize
from .errors import InvalidInput
from .estimators import save, sir, svr
from .regression import fit_piecewise, recommended_scale_j
from .slicing import admissible_bins, build_partition, slice_stats


def prepare(ds, whiten=True, filter_cfg=None):
    """Standardize (or just canonically reorder) and optionally filter ``ds``."""
    sd = standardize(ds) if whiten else identity_standardization(ds)
    if filter_cfg is not None:
        sd = filter_samples(sd, filter_cfg)
    return sd


def theory_interval(sd, filter_cfg):
    """``[-c_y * std(y), c_y * std(y)]`` around the response mean."""
    half = filter_cfg.c_y * float(sd.y.std())
    mid = float(sd.y.mean())
    return (mid - half, mid + half)


def estimate_index(sd, method="SVR", level=4, s_override=None, mode="centered", admissible_only=False):
    """Run one of SIR, SAVE, SVR on a prepared dataset at slicing level ``level``.

    ``admissible_only`` restricts SIR and SAVE to the admissible slices used
    by SVR.
    """
    method = method.upper()
    p = build_partition(sd.y, level, s_override)
    stats = slice_stats(sd, p)
    if method == "SVR":
        return svr(stats, admissible_bins(stats, sd.n), mode)
    restrict = admissible_bins(stats, sd.n) if admissible_only else None
    if method == "SIR":
        return sir(stats, sd.n, restrict)
    if method == "SAVE":
        return save(stats, sd.n, restrict)
    raise InvalidInput(f"unknown method {method!r}")


def auto_level(y, n, d, sigma=0.0, min_per_dim=1, s_override=None):
    """Finest slicing level that leaves room for local PCA and respects the noise scale.

    The level is the largest ``l`` with ``n 2^-l >= min_per_dim * (d + 1)``,
    so every admissible slice holds at least that many samples.  With
    ``sigma > 0`` the slice width ``|S| 2^-l`` must also be at least
    ``2 sigma``.
    """
    y = np.asarray(y, dtype=np.float64)
    a, b = s_override if s_override is not None else (float(y.min()), float(y.max()))
    width = b - a
    level = math.floor(math.log2(max(n / (min_per_dim * (d + 1)), 1.0)))
    if sigma > 0 and width > 0:
        level = min(level, math.floor(math.log2(max(width / (2.0 * sigma), 1.0))))
    return max(int(level), 0)


def fit_model(ds, method="SVR", level=None, scale_j=None, degree_m=1, sigma=0.0,
              whiten=True, filter_cfg=None, mode="centered", radius=None):
    """Estimate the index and fit the piecewise-polynomial link in one call.

    With ``filter_cfg.enabled`` the slicing interval is the symmetric
    theory-mode interval instead of the empirical response range.
    Returns ``(model, index_estimate, standardized_dataset)``.
    """
    sd = prepare(ds, whiten, filter_cfg)
    s_override = theory_interval(sd, filter_cfg) if filter_cfg is not None and filter_cfg.enabled else None
    if level is None:
        level = auto_level(sd.y, sd.n, sd.d, sigma, s_override=s_override)
    est = estimate_index(sd, method, level, s_override=s_override, mode=mode)
    if scale_j is None:
        scale_j = recommended_scale_j(sd.n, s=1.0 if degree_m == 0 else 2.0)
    model = fit_piecewise(sd, est, scale_j, degree_m, radius=radius)
    return model, est, sd
