"""Command-line entry point: ``svreg simulate | fit | predict | bench {index,rate,heatmap}``.

Every subcommand reads an optional TOML or JSON config (``--config``) whose
keys match the long flag names (underscores for dashes); explicit flags
override the file.  Exit codes: 0 success, 1 usage error, 2 data error,
3 numerical failure.
"""

import argparse
import csv
import json
import math
from pathlib import Path
import sys
import time

import numpy as np

from . import harness
from .data import FilterConfig, read_csv, read_predictors, write_csv
from .errors import (BinTooSmall, EmptyBin, EmptyDataset, InvalidInput, NoAdmissibleBins,
                     NumericalFailure, SlopeUndefined, SVRegError)
from .pipeline import fit_model
from .regression import PiecewiseModel
from .synthetic import DistributionSpec, FunctionSpec, make_dataset

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def load_config(path):
    """Read a TOML or JSON config file into a dict (format chosen by extension)."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        if path.suffix.lower() == ".json":
            obj = json.loads(raw)
        else:
            obj = tomllib.loads(raw.decode("utf-8"))
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise UsageError(f"cannot parse config {path}: {exc}") from None
    if not isinstance(obj, dict):
        raise UsageError("config must be a table/object")
    return obj


def _settings(args, defaults):
    """Merge defaults, config file and explicit flags (in increasing priority)."""
    merged = dict(defaults)
    if getattr(args, "config", None):
        cfg = load_config(args.config)
        unknown = set(cfg) - set(defaults)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        merged.update(cfg)
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


def _int_or_auto(text):
    if text == "auto":
        return text
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'auto', got {text!r}") from None


def _float_list(text):
    try:
        return [float(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _bool(text):
    low = str(text).lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _require(settings, *keys):
    missing = [k for k in keys if settings.get(k) in (None, "")]
    if missing:
        raise UsageError(f"missing required setting(s): {', '.join(missing)}")


# --------------------------------------------------------------------------
# simulate
# --------------------------------------------------------------------------

SIMULATE_DEFAULTS = {
    "distribution": "gaussian", "d": 2, "function": "F1", "noise": 0.0, "n": 1000,
    "seed": 0, "f3_seed": 0, "v": None, "skew_axis": 0, "coeffs": None,
    "output": None, "truth": None,
}


def cmd_simulate(args):
    s = _settings(args, SIMULATE_DEFAULTS)
    _require(s, "output")
    d = 2 if s["distribution"] in ("s1", "s2") else int(s["d"])
    try:
        dist = DistributionSpec(s["distribution"], d, int(s["skew_axis"]))
        func = FunctionSpec(s["function"], f3_seed=int(s["f3_seed"]), coeffs=tuple(s["coeffs"] or ()))
        v = None
        if s["v"] is not None:
            v = np.asarray(s["v"], dtype=np.float64)
            v = v / np.linalg.norm(v)
        sim = make_dataset(dist, func, float(s["noise"]), int(s["n"]), int(s["seed"]), v=v)
    except InvalidInput as exc:
        raise UsageError(str(exc)) from None
    out = Path(s["output"])
    write_csv(out, sim.dataset)
    truth_path = Path(s["truth"]) if s["truth"] else out.with_suffix(".json")
    truth = sim.ground_truth()
    truth.update({"distribution": dist.kind, "d": dist.d, "skew_axis": dist.skew_axis,
                  "noise": float(s["noise"]), "n": int(s["n"])})
    truth_path.write_text(json.dumps(truth, indent=2), encoding="utf-8")
    print(f"wrote {sim.dataset.n} samples to {out} and ground truth to {truth_path}")
    return EXIT_OK


# --------------------------------------------------------------------------
# fit / predict
# --------------------------------------------------------------------------

FIT_DEFAULTS = {
    "data": None, "output": None, "method": "SVR", "level": "auto", "scale": "auto",
    "degree": 1, "sigma": 0.0, "whiten": True, "mode": "centered", "theory": False,
}


def cmd_fit(args):
    s = _settings(args, FIT_DEFAULTS)
    _require(s, "data", "output")
    if str(s["method"]).upper() not in ("SIR", "SAVE", "SVR"):
        raise UsageError(f"unknown method {s['method']!r}")
    if s["mode"] not in ("centered", "uncentered"):
        raise UsageError(f"unknown mode {s['mode']!r}")
    ds = _load_dataset(s["data"])
    level = None if s["level"] == "auto" else int(s["level"])
    scale = None if s["scale"] == "auto" else int(s["scale"])
    filter_cfg = FilterConfig(enabled=True) if s["theory"] else None
    radius = math.sqrt(2.0 * ds.d * math.log(ds.n)) if s["theory"] and ds.n > 1 else None
    t0 = time.perf_counter()
    model, est, _ = fit_model(ds, method=str(s["method"]).upper(), level=level, scale_j=scale,
                              degree_m=int(s["degree"]), sigma=float(s["sigma"]),
                              whiten=bool(s["whiten"]), filter_cfg=filter_cfg,
                              mode=s["mode"], radius=radius)
    Path(s["output"]).write_text(model.to_json(indent=2), encoding="utf-8")
    print(f"{est.method} level={est.level} scale={model.scale_j} degree={model.degree_m} "
          f"eigengap={est.eigengap:.3g} time={time.perf_counter() - t0:.3f}s -> {s['output']}")
    return EXIT_OK


PREDICT_DEFAULTS = {"model": None, "data": None, "output": None}


def cmd_predict(args):
    s = _settings(args, PREDICT_DEFAULTS)
    _require(s, "model", "data", "output")
    try:
        model = PiecewiseModel.from_json(Path(s["model"]).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InvalidInput(f"cannot read model {s['model']}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"model is not valid JSON: {exc}") from None
    x, y = _load_predictors(s["data"])
    if x.shape[1] != model.projection.size:
        raise InvalidInput(f"data has d={x.shape[1]}, model expects d={model.projection.size}")
    pred = np.atleast_1d(model.predict(x))
    with open(s["output"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{j + 1}" for j in range(x.shape[1])] + ["y_hat"])
        for xi, pi in zip(x.tolist(), pred.tolist()):
            writer.writerow([repr(v) for v in xi] + [repr(pi)])
    msg = f"wrote {pred.size} predictions to {s['output']}"
    if y is not None:
        msg += f"; mse={float(np.mean((pred - y) ** 2)):.6g}"
    print(msg)
    return EXIT_OK


def _load_dataset(path):
    try:
        return read_csv(path)
    except OSError as exc:
        raise InvalidInput(f"cannot read {path}: {exc.strerror}") from None


def _load_predictors(path):
    try:
        return read_predictors(path)
    except OSError as exc:
        raise InvalidInput(f"cannot read {path}: {exc.strerror}") from None


# --------------------------------------------------------------------------
# bench
# --------------------------------------------------------------------------

BENCH_FLAGS = ("replicates", "base_seed", "workers", "trim", "test_size", "degree",
               "denoised", "output_csv", "output_manifest", "target")


def cmd_bench(args):
    obj = load_config(args.config) if args.config else {}
    obj["kind"] = args.kind
    for key in BENCH_FLAGS:
        value = getattr(args, key, None)
        if value is not None:
            obj[key] = value
    for item in args.set or []:
        key, sep, text = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects key=value, got {item!r}")
        try:
            obj[key] = json.loads(text)
        except json.JSONDecodeError:
            obj[key] = text
    try:
        cfg = harness.ExperimentConfig.from_dict(obj)
    except (InvalidInput, TypeError) as exc:
        raise UsageError(str(exc)) from None
    if not cfg.output_csv:
        raise UsageError("output_csv is required (flag --out or config key)")
    manifest_path = cfg.output_manifest or str(Path(cfg.output_csv).with_suffix(".manifest.json"))

    result = harness.run(cfg)
    t0 = time.perf_counter()
    harness.write_csv(result, cfg.output_csv)
    extra = {}
    if result.slopes:
        slopes_path = str(Path(cfg.output_csv).with_suffix(".slopes.csv"))
        harness.write_slopes_csv(result, slopes_path)
        extra["slopes_csv"] = slopes_path
    timings = {"write": time.perf_counter() - t0}
    harness.write_manifest(result, manifest_path, timings)
    failed = sum(r["failures"] for r in result.records)
    print(f"{len(result.records)} cells ({failed} failed replicates) -> {cfg.output_csv}, {manifest_path}")
    for s in result.slopes:
        print(f"  slope {s['setting']} d={s['d']} {s['function']} noise={s['noise']} {s['method']}: {s['slope']:.3f}")
    return EXIT_OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser():
    p = _Parser(prog="svreg", description="Single-index regression via smallest vector regression.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    sim = sub.add_parser("simulate", help="generate a synthetic dataset and its ground truth")
    sim.add_argument("--config")
    sim.add_argument("--distribution", choices=["gaussian", "s1", "s2"])
    sim.add_argument("--d", type=int)
    sim.add_argument("--function", choices=["F1", "F2", "F3", "linear", "polynomial"])
    sim.add_argument("--noise", type=float, help="noise sd as a fraction of |f(-4) - f(4)|")
    sim.add_argument("--n", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--f3-seed", dest="f3_seed", type=int)
    sim.add_argument("--v", type=_float_list, help="index vector, comma separated (normalized)")
    sim.add_argument("--skew-axis", dest="skew_axis", type=int, choices=[0, 1])
    sim.add_argument("--coeffs", type=_float_list, help="polynomial link, ascending powers")
    sim.add_argument("--output", "-o")
    sim.add_argument("--truth", help="sidecar JSON path (default: output with .json suffix)")
    sim.set_defaults(func=cmd_simulate)

    fit = sub.add_parser("fit", help="estimate the index and the link from a CSV dataset")
    fit.add_argument("--config")
    fit.add_argument("--data")
    fit.add_argument("--output", "-o")
    fit.add_argument("--method", type=str.upper, choices=["SIR", "SAVE", "SVR"])
    fit.add_argument("--level", type=_int_or_auto)
    fit.add_argument("--scale", type=_int_or_auto)
    fit.add_argument("--degree", type=int)
    fit.add_argument("--sigma", type=float, help="noise sd used by the automatic level rule")
    fit.add_argument("--whiten", type=_bool)
    fit.add_argument("--mode", choices=["centered", "uncentered"])
    fit.add_argument("--theory", action="store_const", const=True,
                     help="filter outliers and truncate to radius sqrt(2 d log n)")
    fit.set_defaults(func=cmd_fit)

    pr = sub.add_parser("predict", help="evaluate a fitted model on predictor rows")
    pr.add_argument("--config")
    pr.add_argument("--model")
    pr.add_argument("--data")
    pr.add_argument("--output", "-o")
    pr.set_defaults(func=cmd_predict)

    bench = sub.add_parser("bench", help="Monte Carlo experiments")
    bsub = bench.add_subparsers(dest="kind", parser_class=_Parser)
    for kind, text in (("index", "index-error table"), ("rate", "convergence-rate sweep"),
                       ("heatmap", "MSE over slicing level and regression scale")):
        b = bsub.add_parser(kind, help=text)
        b.add_argument("--config")
        b.add_argument("--replicates", type=int)
        b.add_argument("--seed", dest="base_seed", type=int)
        b.add_argument("--workers", type=int)
        b.add_argument("--trim", type=float)
        b.add_argument("--test-size", dest="test_size", type=int)
        b.add_argument("--degree", type=int)
        b.add_argument("--denoised", action="store_const", const=True)
        b.add_argument("--out", dest="output_csv")
        b.add_argument("--manifest", dest="output_manifest")
        if kind == "rate":
            b.add_argument("--target", choices=["index_error", "regression_mse"])
        b.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override any config key (value parsed as JSON when possible)")
        b.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "func", None) is None:
            raise UsageError("a subcommand is required")
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalFailure, NoAdmissibleBins, BinTooSmall, EmptyBin, SlopeUndefined) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InvalidInput, EmptyDataset) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SVRegError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
