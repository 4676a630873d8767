"""Multiscale sparse FFT: flat-window bucketization with phase-based location."""

from .bucketizer import (
    BucketSet,
    PermutationParams,
    bucket_of,
    bucketize,
    make_params,
    mod_inverse,
    predict_buckets,
    random_params,
)
from .flat_window import FlatWindow, design_flat_window, get_window
from .locator import MultiscaleConfig, locate_frequency, stage_count, tau_schedule
from .phase_mc import PhaseErrorHistogram, run_phase_experiment
from .pipeline import RunStats, sfft4
from .signal_model import (
    ComplexSignal,
    SparseSpectrum,
    add_awgn,
    dft_dense,
    error_metrics,
    generate_test_signal,
    synthesize,
)

__version__ = "0.1.0"

__all__ = [
    "BucketSet",
    "ComplexSignal",
    "FlatWindow",
    "MultiscaleConfig",
    "PermutationParams",
    "PhaseErrorHistogram",
    "RunStats",
    "SparseSpectrum",
    "add_awgn",
    "bucket_of",
    "bucketize",
    "design_flat_window",
    "dft_dense",
    "error_metrics",
    "generate_test_signal",
    "get_window",
    "locate_frequency",
    "make_params",
    "mod_inverse",
    "predict_buckets",
    "random_params",
    "run_phase_experiment",
    "sfft4",
    "stage_count",
    "synthesize",
    "tau_schedule",
]
