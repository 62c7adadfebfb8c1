"""
gmee
====

Generalized minimum error entropy (GMEE) adaptive filtering: entropy
estimators with generalized Gaussian kernels, GMEE/QGMEE filters and
baselines, noise models, theoretical predictors, a Monte-Carlo harness and
an acoustic echo cancellation pipeline.
"""
__version__ = "0.1.0"

from .entropy import (
    Codebook,
    GGDKernel,
    InvalidParameterError,
    gamma,
    gaussian_kernel,
    generalized_ip,
    parzen_pdf,
    quadratic_ip,
    quantize,
    quantized_ip,
    renyi_entropy,
)
from .filters import GMCC, GMEE, LMF, LMS, MEE, QGMEE, RLS, GmeeConfig, SampleWindow, make_filter
from .noise import NoiseModel, make_rng, sample
from .simkit import AlgorithmSpec, SysIdExperiment, calibrate_eta, run_sysid, sweep

__all__ = [
    "__version__",
    "Codebook",
    "GGDKernel",
    "InvalidParameterError",
    "gamma",
    "gaussian_kernel",
    "generalized_ip",
    "parzen_pdf",
    "quadratic_ip",
    "quantize",
    "quantized_ip",
    "renyi_entropy",
    "GMCC",
    "GMEE",
    "LMF",
    "LMS",
    "MEE",
    "QGMEE",
    "RLS",
    "GmeeConfig",
    "SampleWindow",
    "make_filter",
    "NoiseModel",
    "make_rng",
    "sample",
    "AlgorithmSpec",
    "SysIdExperiment",
    "calibrate_eta",
    "run_sysid",
    "sweep",
]
