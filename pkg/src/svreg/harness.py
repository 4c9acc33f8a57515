"""Seeded Monte Carlo experiments: index-error tables, rate sweeps and scale heatmaps.

Every replicate draws its data from a stream keyed by the base seed and the
integer coordinates of its data cell, so results do not depend on the number
of worker processes or on the order in which replicates finish.  Methods and
scales that share a data cell are evaluated on the same replicate data.
"""

from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import asdict, dataclass, field, fields
import hashlib
import itertools
import json
import math
import time
import warnings

import numpy as np

from .data import forward_map_direction
from .errors import DegenerateSpectrum, InvalidInput, SlopeUndefined, SVRegError
from .estimators import index_error
from .pipeline import auto_level, estimate_index, prepare
from .regression import fit_piecewise, knn_fit, mse, recommended_scale_j
from .synthetic import DistributionSpec, FunctionSpec, make_dataset

KINDS = {"index": 1, "rate": 2, "heatmap": 3}
SETTINGS = ("gaussian", "s1", "s2")
FUNCTIONS = ("F1", "F2", "F3", "linear")


@dataclass
class ExperimentConfig:
    """Grid and protocol of one experiment.

    ``levels`` and ``scales`` accept integers or ``"auto"``.  For the slicing
    level, ``"auto"`` is the finest level whose admissible slices hold at
    least ``d + 1`` samples (and, if ``noise_aware_level``, whose slice width
    is at least twice the noise level).  For the regression scale, ``"auto"``
    is :func:`recommended_scale_j` with ``smoothness`` and ``scale_constant``,
    shifted by ``scale_offset``.

    ``interval`` is ``"data"`` (``[min t, max t]``) or ``"theory"``
    (``[-r, r]`` with ``r = sqrt(2 d log n)``).  ``standardization`` is
    ``"population"`` (use the generator's coordinates, already normalized by
    closed-form moments) or ``"sample"`` (whiten with the sample covariance).
    """

    kind: str = "index"
    settings: list = field(default_factory=lambda: ["s1", "s2"])
    dims: list = field(default_factory=lambda: [2])
    functions: list = field(default_factory=lambda: ["F1", "F2"])
    noises: list = field(default_factory=lambda: [0.0, 0.01, 0.02])
    methods: list = field(default_factory=lambda: ["SIR", "SAVE", "SVR"])
    n_grid: list = field(default_factory=lambda: [1000])
    levels: list = field(default_factory=lambda: ["auto"])
    scales: list = field(default_factory=lambda: ["auto"])
    degree: int = 0
    replicates: int = 100
    trim: float = 0.0
    base_seed: int = 0
    f3_seed: int = 0
    target: str = "index_error"
    denoised: bool = False
    test_size: int = 10000
    standardization: str = "population"
    interval: str = "data"
    noise_aware_level: bool = False
    smoothness: float = 1.0
    scale_constant: float = 1.0
    scale_offset: int = 0
    mode: str = "centered"
    workers: int = 1
    knn_max_n: int = 0
    output_csv: str = ""
    output_manifest: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInput(f"unknown experiment kind {self.kind!r}")
        for name in ("settings", "dims", "functions", "noises", "methods", "n_grid", "levels", "scales"):
            if not getattr(self, name):
                raise InvalidInput(f"grid {name!r} is empty")
        if not 0.0 <= self.trim <= 0.45:
            raise InvalidInput("trim fraction must lie in [0, 0.45]")
        if self.replicates < 1:
            raise InvalidInput("replicates must be at least 1")
        for s in self.settings:
            if s not in SETTINGS:
                raise InvalidInput(f"unknown setting {s!r}")
        for f in self.functions:
            if f not in FUNCTIONS:
                raise InvalidInput(f"unknown function {f!r}")
        for m in self.methods:
            if m not in ("SIR", "SAVE", "SVR", "kNN"):
                raise InvalidInput(f"unknown method {m!r}")
        if self.target not in ("index_error", "regression_mse"):
            raise InvalidInput(f"unknown target {self.target!r}")
        if self.standardization not in ("population", "sample"):
            raise InvalidInput("standardization must be 'population' or 'sample'")
        if self.interval not in ("data", "theory"):
            raise InvalidInput("interval must be 'data' or 'theory'")

    @classmethod
    def from_dict(cls, obj):
        names = {f.name for f in fields(cls)}
        unknown = set(obj) - names
        if unknown:
            raise InvalidInput(f"unknown config keys: {sorted(unknown)}")
        return cls(**obj)

    def to_dict(self):
        return asdict(self)

    def digest(self):
        text = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass
class ExperimentResult:
    """Per-cell records in canonical grid order, plus fitted slopes for rate sweeps."""

    config: ExperimentConfig
    records: list
    slopes: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def provenance(self):
        return {"base_seed": self.config.base_seed, "config_hash": self.config.digest()}

    def find(self, **coords):
        """Records whose coordinates match every keyword."""
        return [r for r in self.records if all(r.get(k) == v for k, v in coords.items())]

    def one(self, **coords):
        hits = self.find(**coords)
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} records match {coords}")
        return hits[0]

    def slope(self, **coords):
        hits = [s for s in self.slopes if all(s.get(k) == v for k, v in coords.items())]
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} slopes match {coords}")
        return hits[0]["slope"]


# --------------------------------------------------------------------------
# aggregation helpers
# --------------------------------------------------------------------------

def trimmed_mean(values, trim_fraction):
    """Mean after dropping ``ceil(trim * count)`` smallest and largest values."""
    vals = np.sort(np.asarray(values, dtype=np.float64).ravel())
    if vals.size == 0:
        raise InvalidInput("trimmed mean of no values")
    if not 0.0 <= trim_fraction <= 0.45:
        raise InvalidInput("trim fraction must lie in [0, 0.45]")
    cut = math.ceil(trim_fraction * vals.size - 1e-9)
    kept = vals[cut:vals.size - cut]
    if kept.size == 0:
        raise InvalidInput("all values trimmed")
    return math.fsum(kept.tolist()) / kept.size


def fit_slope(ns, stats):
    """Least-squares slope of ``log10(stat)`` against ``log10(n)`` over finite positive points."""
    ns = np.asarray(ns, dtype=np.float64)
    stats = np.asarray(stats, dtype=np.float64)
    ok = np.isfinite(stats) & (stats > 0) & (ns > 0)
    if ok.sum() < 2:
        raise SlopeUndefined("need at least two finite points")
    slope, intercept = np.polyfit(np.log10(ns[ok]), np.log10(stats[ok]), 1)
    return float(slope), float(intercept)


def _summary(values, trim):
    vals = np.asarray([v for v in values if v is not None and np.isfinite(v)], dtype=np.float64)
    failures = len(values) - vals.size
    if vals.size == 0:
        return {"statistic": float("nan"), "spread": float("nan"), "se": float("nan"),
                "count": 0, "failures": failures}
    stat = trimmed_mean(vals, trim) if trim > 0 else float(vals.mean())
    spread = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
    return {"statistic": stat, "spread": spread, "se": spread / math.sqrt(vals.size),
            "count": int(vals.size), "failures": failures}


# --------------------------------------------------------------------------
# per-replicate work
# --------------------------------------------------------------------------

def _cell_key(kind, setting, d, func, noise, n):
    return (KINDS[kind], SETTINGS.index(setting), int(d), FUNCTIONS.index(func),
            int(round(noise * 1_000_000)), int(n))


def _data_cells(cfg):
    for setting, d, func, noise, n in itertools.product(
            cfg.settings, cfg.dims, cfg.functions, cfg.noises, cfg.n_grid):
        if setting in ("s1", "s2") and d != 2:
            continue
        yield setting, d, func, noise, n


def _level(cfg, level, sd, sigma):
    if level != "auto":
        return int(level)
    return auto_level(sd.y, sd.n, sd.d, sigma if cfg.noise_aware_level else 0.0)


def _scale(cfg, scale, n):
    if scale != "auto":
        return int(scale)
    return recommended_scale_j(n, cfg.smoothness, cfg.scale_constant) + cfg.scale_offset


def _interval(cfg, n, d):
    if cfg.interval == "data":
        return None
    r = math.sqrt(2.0 * d * math.log(n))
    return (-r, r)


NA = "-"


def _labels(cfg):
    """Configured (method, level, scale) labels in canonical order."""
    need_test = cfg.kind == "heatmap" or cfg.target == "regression_mse"
    scales = cfg.scales if need_test else [NA]
    for method in cfg.methods:
        if method == "kNN":
            yield method, NA, NA
            continue
        for level in cfg.levels:
            for scale in scales:
                yield method, level, scale


def _replicate(cfg, cell, rep):
    """One replicate of one data cell.

    Returns a dict keyed by configured (method, level, scale) labels whose
    values are ``(value, level_used, scale_used, degenerate)``; ``value`` is
    None when the pipeline failed and the entry is absent when skipped.
    """
    setting, d, func, noise, n = cell
    key = _cell_key(cfg.kind, setting, d, func, noise, n)
    dist = DistributionSpec(setting, d)
    fspec = FunctionSpec(func, f3_seed=cfg.f3_seed)
    sim = make_dataset(dist, fspec, noise, n, cfg.base_seed, key=key + (rep, 0))
    need_test = cfg.kind == "heatmap" or cfg.target == "regression_mse"
    test = truth = None
    if need_test:
        test = make_dataset(dist, fspec, noise, cfg.test_size, cfg.base_seed, key=key + (rep, 1))
        truth = test.noiseless if cfg.denoised else None

    out = {}
    try:
        sd = prepare(sim.dataset, whiten=cfg.standardization == "sample")
    except SVRegError:
        return {lab: (None, None, None, False) for lab in _labels(cfg)}
    v_std = forward_map_direction(sd, sim.v)

    estimates = {}
    for method, level, scale in _labels(cfg):
        if method == "kNN":
            if cfg.knn_max_n and n > cfg.knn_max_n:
                continue
            try:
                model = knn_fit(sim.dataset)
                out[(method, level, scale)] = (mse(model, test.dataset, truth), None, model.k, False)
            except SVRegError:
                out[(method, level, scale)] = (None, None, None, False)
            continue
        if (method, level) not in estimates:
            lv, est, degenerate = None, None, False
            try:
                lv = _level(cfg, level, sd, sim.sigma)
                with warnings.catch_warnings(record=True) as caught:
                    warnings.simplefilter("always", DegenerateSpectrum)
                    est = estimate_index(sd, method, lv, mode=cfg.mode)
                degenerate = any(issubclass(w.category, DegenerateSpectrum) for w in caught)
            except SVRegError:
                est = None
            estimates[(method, level)] = (lv, est, degenerate)
        lv, est, degenerate = estimates[(method, level)]
        if est is None:
            out[(method, level, scale)] = (None, lv, None, False)
            continue
        if not need_test:
            out[(method, level, scale)] = (index_error(est.v_hat, v_std), lv, None, degenerate)
            continue
        j = _scale(cfg, scale, n)
        try:
            model = fit_piecewise(sd, est, j, cfg.degree, interval=_interval(cfg, n, d))
            out[(method, level, scale)] = (mse(model, test.dataset, truth), lv, j, degenerate)
        except SVRegError:
            out[(method, level, scale)] = (None, lv, j, degenerate)
    return out


def _run_unit(args):
    cfg_dict, cell, rep = args
    return _replicate(ExperimentConfig.from_dict(cfg_dict), cell, rep)


def _collect(cfg):
    cells = list(_data_cells(cfg))
    units = [(cfg.to_dict(), cell, rep) for cell in cells for rep in range(cfg.replicates)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            outputs = list(pool.map(_run_unit, units, chunksize=max(1, len(units) // (4 * cfg.workers))))
    else:
        outputs = [_run_unit(u) for u in units]
    by_cell = {}
    for (_, cell, rep), result in zip(units, outputs):
        by_cell.setdefault(cell, []).append(result)
    return cells, by_cell


def _typical(values):
    vals = [v for v in values if v is not None]
    return int(np.median(vals)) if vals else ""


def _records(cfg, cells, by_cell, transform):
    records = []
    for cell in cells:
        setting, d, func, noise, n = cell
        reps = by_cell[cell]
        for lab in _labels(cfg):
            method, level, scale = lab
            entries = [out[lab] for out in reps if lab in out]
            vals = [None if e[0] is None else transform(e[0]) for e in entries]
            rec = {"setting": setting, "d": d, "function": func, "noise": noise, "n": n,
                   "method": method, "level": level, "scale": scale,
                   "level_used": _typical([e[1] for e in entries]),
                   "scale_used": _typical([e[2] for e in entries])}
            rec.update(_summary(vals, cfg.trim))
            rec["degenerate"] = sum(bool(e[3]) for e in entries)
            records.append(rec)
    return records


def _method_rank(m):
    order = ("SIR", "SAVE", "SVR", "kNN")
    return order.index(m) if m in order else len(order)


def _log10_sq(err):
    return math.log10(err * err) if err > 0 else -math.inf


def _log10(v):
    return math.log10(v) if v > 0 else -math.inf


# --------------------------------------------------------------------------
# public drivers
# --------------------------------------------------------------------------

def run_index_benchmark(cfg):
    """Mean ``log10(index_error**2)`` per (setting, function, noise, method) cell."""
    if cfg.kind != "index":
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), "kind": "index"})
    if any(m not in ("SIR", "SAVE", "SVR") for m in cfg.methods):
        raise InvalidInput("the index benchmark supports SIR, SAVE and SVR only")
    t0 = time.perf_counter()
    cells, by_cell = _collect(cfg)
    records = _records(cfg, cells, by_cell, _log10_sq)
    return ExperimentResult(cfg, records, timings={"run": time.perf_counter() - t0})


def run_rate_sweep(cfg, target=None):
    """Statistic per n and the fitted log-log slope of each curve.

    ``target="index_error"`` averages ``||v_hat - v||`` (sign aligned);
    ``"regression_mse"`` averages test-set MSE.  The slope is fitted to
    ``log10`` of those averages against ``log10 n``.
    """
    overrides = {"kind": "rate"}
    if target is not None:
        overrides["target"] = target
    cfg = ExperimentConfig.from_dict({**cfg.to_dict(), **overrides})
    if len(cfg.n_grid) < 2:
        raise InvalidInput("a rate sweep needs at least two sample sizes")
    t0 = time.perf_counter()
    cells, by_cell = _collect(cfg)
    records = _records(cfg, cells, by_cell, lambda v: v)
    for rec in records:
        rec["log10_statistic"] = _log10(rec["statistic"]) if np.isfinite(rec["statistic"]) else float("nan")

    slopes = []
    coords = ("setting", "d", "function", "noise", "method", "level", "scale")
    curves = {}
    for rec in records:
        curves.setdefault(tuple(rec[c] for c in coords), []).append((rec["n"], rec["statistic"]))
    for ck, pts in curves.items():
        entry = dict(zip(coords, ck))
        entry["points"] = len(pts)
        try:
            entry["slope"], entry["intercept"] = fit_slope(*zip(*pts))
        except SlopeUndefined:
            entry["slope"] = entry["intercept"] = float("nan")
        slopes.append(entry)
    return ExperimentResult(cfg, records, slopes, timings={"run": time.perf_counter() - t0})


def run_heatmap(cfg):
    """Trimmed mean of ``log10`` test MSE over the (level, scale, n) grid."""
    cfg = ExperimentConfig.from_dict({**cfg.to_dict(), "kind": "heatmap", "target": "regression_mse"})
    t0 = time.perf_counter()
    cells, by_cell = _collect(cfg)
    records = _records(cfg, cells, by_cell, _log10)
    return ExperimentResult(cfg, records, timings={"run": time.perf_counter() - t0})


RUNNERS = {"index": run_index_benchmark, "rate": run_rate_sweep, "heatmap": run_heatmap}


def run(cfg):
    return RUNNERS[cfg.kind](cfg)


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------

CSV_COLUMNS = ["setting", "d", "function", "noise", "n", "method", "level", "scale",
               "level_used", "scale_used", "statistic", "spread", "se", "count", "failures", "degenerate"]


def write_csv(result, path):
    """Long-format CSV, one row per grid cell."""
    cols = list(CSV_COLUMNS)
    if result.records and "log10_statistic" in result.records[0]:
        cols.append("log10_statistic")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore")
        writer.writeheader()
        for rec in result.records:
            writer.writerow(rec)


def write_slopes_csv(result, path):
    cols = ["setting", "d", "function", "noise", "method", "level", "scale", "points", "slope", "intercept"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=cols)
        writer.writeheader()
        for s in result.slopes:
            writer.writerow(s)


def manifest(result, extra_timings=None):
    timings = dict(result.timings)
    if extra_timings:
        timings.update(extra_timings)
    return {
        "config": result.config.to_dict(),
        **result.provenance(),
        "cells": len(result.records),
        "slopes": result.slopes,
        "wall_time_seconds": timings,
    }


def write_manifest(result, path, extra_timings=None):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest(result, extra_timings), fh, indent=2, default=str)
