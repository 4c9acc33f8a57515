"""How the slicing level l and the regression scale j interact.

For each (l, j) the script prints the trimmed mean of log10 test MSE.
Reading a column (fixed j): once l is fine enough to locate v, refining
further changes little.  Reading a row (fixed l): coarse j underfits, fine j
overfits, and the best j moves right as n grows.

Run:  python demos/scale_heatmap.py          (a few minutes)
"""

import warnings

import numpy as np

from svreg import DegenerateSpectrum, ExperimentConfig, run_heatmap

warnings.simplefilter("ignore", DegenerateSpectrum)

cfg = ExperimentConfig(
    settings=["gaussian"],
    dims=[10],
    functions=["F2"],
    noises=[0.01],
    methods=["SVR"],
    n_grid=[2500, 20000],
    levels=[1, 3, 5, 7],
    scales=list(range(0, 11)),
    degree=1,
    replicates=8,
    trim=0.1,
    test_size=2000,
)
result = run_heatmap(cfg)

for n in cfg.n_grid:
    print(f"n = {n}   (rows l, columns j = {cfg.scales[0]}..{cfg.scales[-1]})")
    for l in cfg.levels:
        row = [result.one(n=n, level=l, scale=j)["statistic"] for j in cfg.scales]
        best = cfg.scales[int(np.argmin(row))]
        print(f"  l={l}  " + " ".join(f"{v:6.2f}" for v in row) + f"   best j={best}")
