"""Self-normalised inference for relevant mean changes in high-dimensional time series."""

__version__ = "0.1.0"

from .cpoint import ChangeFit, estimate_cp
from .dgp import DGPSpec, simulate
from .limitdist import QuantileTable, quantile_table, tail_bound_constants
from .relevance import TestConfig, TestResult, report_sqrt_scale, run_test, test_dense, test_sparse
from .selfnorm import NuMeasure, v_ell, v_statistic
from .setestim import SetEstimate, SupportMetrics, delta_seq_all, estimate_S, support_metrics
from .trim import TrimSelection, select_m
from .tsdata import DataError, PreprocessPolicy, TimeSeriesMatrix, load_csv, preprocess, save_csv
from .ustat import SequentialUStat, useq

__all__ = [
    "ChangeFit", "DataError", "DGPSpec", "NuMeasure", "PreprocessPolicy", "QuantileTable",
    "SequentialUStat", "SetEstimate", "SupportMetrics", "TestConfig", "TestResult",
    "TimeSeriesMatrix", "TrimSelection", "delta_seq_all", "estimate_S", "estimate_cp",
    "load_csv", "preprocess", "quantile_table", "report_sqrt_scale", "run_test", "save_csv",
    "select_m", "simulate", "support_metrics", "tail_bound_constants", "test_dense",
    "test_sparse", "useq", "v_ell", "v_statistic",
]
