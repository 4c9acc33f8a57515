"""Single-index regression: estimate the index by smallest vector regression, then the link.

Typical use::

    from svreg import Dataset, fit_model
    model, est, _ = fit_model(Dataset(x, y), method="SVR")
    y_hat = model.predict(x_new)
"""

from .data import (Dataset, FilterConfig, StandardizedDataset, back_map_direction,
                   filter_samples, forward_map_direction, identity_standardization,
                   read_csv, read_predictors, standardize, write_csv)
from .errors import (BinTooSmall, DataFormatError, DegenerateSpectrum, EmptyBin, EmptyDataset,
                     InvalidInput, InvalidInterval, NoAdmissibleBins, NumericalFailure,
                     SingularCovariance, SlopeUndefined, SVRegError)
from .estimators import IndexEstimate, index_error, save, sir, svr, svr_local
from .harness import (ExperimentConfig, ExperimentResult, fit_slope, run_heatmap,
                      run_index_benchmark, run_rate_sweep, trimmed_mean)
from .linalg import canonical_sign, inv_sqrt, jacobi_eigh, polyfit_ls, sym_eigen
from .pipeline import auto_level, estimate_index, fit_model, prepare
from .regression import (KnnModel, PiecewiseModel, fit_piecewise, knn_fit, knn_predict, mse,
                         predict, recommended_scale_j)
from .slicing import AdmissibleSet, DyadicPartition, SlicedStats, admissible_bins, build_partition, slice_stats
from .synthetic import (DistributionSpec, FunctionSpec, SimulatedData, eval_f, make_dataset, make_rng,
                        resolve_sigma, sample_x)

__version__ = "0.1.0"
