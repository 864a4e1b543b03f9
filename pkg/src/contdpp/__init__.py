"""Sampling from determinantal point processes on continuous spaces.

Low-rank kernel approximations (random Fourier features, Nystrom) turn
a continuous DPP into a finite-dimensional dual problem that can be
sampled exactly; a Schur-complement Gibbs sampler handles fixed-size
k-DPPs directly.  The package also ships the evaluation harness used to
study the approximations: total-variation estimation against exact
Gaussian-kernel spectra, chain mixing diagnostics, repulsive Gaussian
mixture modeling and a coverage-rate metric.
"""

from .dual_sampler import (
    ESPTable,
    esp_table,
    phase1_dpp,
    phase1_kdpp,
    phase2_sample,
    sample_dpp,
    sample_kdpp,
)
from .errors import (
    BracketError,
    ConfigError,
    ContDppError,
    DomainError,
    NumericError,
    RankDeficiencyError,
)
from .exact_reference import TvEstimate, estimate_tv, kdpp_log_prob
from .feature_maps import (
    DualRepresentation,
    NystromMap,
    RffMap,
    build_nystrom,
    build_rff,
    dual_matrix,
    dual_representation,
    eval_B,
    phase2_cdf,
)
from .kernels import (
    KernelSpec,
    MultiIndexEigenvalue,
    QualitySpec,
    SimilaritySpec,
    eval_L,
    gaussian_eigenvalues,
    kernel_from_json,
    kernel_matrix,
    kernel_to_json,
)
from .mixture_model import (
    MixtureMetrics,
    MixtureModelSpec,
    MixtureState,
    compute_metrics,
    gibbs_step_mog,
    run_mog,
)
from .diagnostics import average_movement, coverage_rate, ess_alpha
from .numerics import RngStream, erf_complex, erf_real
from .schur_gibbs import GibbsKdppState, full_conditional_cdf, gibbs_sweep, run_gibbs_kdpp

__version__ = "0.1.0"

__all__ = [
    "BracketError", "ConfigError", "ContDppError", "DomainError",
    "DualRepresentation", "ESPTable", "GibbsKdppState", "KernelSpec",
    "MixtureMetrics", "MixtureModelSpec", "MixtureState",
    "MultiIndexEigenvalue", "NystromMap", "NumericError", "QualitySpec",
    "RankDeficiencyError", "RffMap", "RngStream", "SimilaritySpec",
    "TvEstimate", "average_movement", "build_nystrom", "build_rff",
    "compute_metrics", "coverage_rate", "dual_matrix", "dual_representation",
    "erf_complex", "erf_real", "esp_table", "ess_alpha", "estimate_tv",
    "eval_B", "eval_L", "full_conditional_cdf", "gaussian_eigenvalues",
    "gibbs_step_mog", "gibbs_sweep", "kdpp_log_prob", "kernel_from_json",
    "kernel_matrix", "kernel_to_json", "phase1_dpp", "phase1_kdpp",
    "phase2_cdf", "phase2_sample", "run_gibbs_kdpp", "run_mog",
    "sample_dpp", "sample_kdpp",
]
