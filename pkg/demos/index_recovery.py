"""Recovering the index vector in the two skewed 2-D settings.

SIR only looks at slice means.  When X is not elliptical (S2 is uniform on a
triangle) the mean of X over a level set of Y is not aligned with v, so SIR
keeps a bias however many samples it sees.  SAVE and SVR use the slice
covariances instead and recover v almost exactly on noiseless data.

Run:  python demos/index_recovery.py
"""

import warnings

import numpy as np

from svreg import DegenerateSpectrum, ExperimentConfig, run_index_benchmark

warnings.simplefilter("ignore", DegenerateSpectrum)

cfg = ExperimentConfig(
    kind="index",
    settings=["s1", "s2"],
    functions=["F1", "F2"],
    noises=[0.0, 0.01, 0.02],
    methods=["SIR", "SAVE", "SVR"],
    n_grid=[1000],
    replicates=20,  # 100 in the full benchmark
)
result = run_index_benchmark(cfg)

# one row per (setting, link, noise), columns are mean log10 ||v_hat - v||^2
print(f"{'cell':<18}" + "".join(f"{m:>8}" for m in cfg.methods))
for setting in cfg.settings:
    for func in cfg.functions:
        for noise in cfg.noises:
            stats = [result.one(setting=setting, function=func, noise=noise, method=m)["statistic"]
                     for m in cfg.methods]
            label = f"{setting}/{func}/{noise:.0%}"
            print(f"{label:<18}" + "".join(f"{s:8.2f}" for s in stats))

# SIR's floor in S2 is the angle between v and the population direction Sigma^{-1} E[X | <v,X>]
sir_s2 = [r["statistic"] for r in result.find(setting="s2", method="SIR")]
print(f"\nS2 SIR stays near {np.mean(sir_s2):.2f} in every cell: a bias, not a variance.")
