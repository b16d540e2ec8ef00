"""Spectral regularization with heat-kernel Gram matrices on compact manifolds."""

__version__ = "0.1.0"

from .estimator import (
    SpectralEstimate,
    SpectralFilterRegressor,
    empirical_covariance_in_basis,
    fit_coefficients,
    fit_from_features,
    fit_tikhonov_direct,
    predict,
)
from .experiments import (
    Dataset,
    ExperimentConfig,
    RateFit,
    fit_rate,
    generate_dataset,
    lambda_schedule,
    run_convergence_sweep,
)
from .filters import (
    FilterFamily,
    audit_axioms,
    cutoff,
    filter_eval,
    landweber,
    parse_filter,
    qualification_margin,
    residual_eval,
    tikhonov,
)
from .heat_kernel import (
    HeatKernelParams,
    KernelMatrix,
    basis_for_kernel,
    kernel_eval,
    kernel_matrix,
    mercer_weights,
)
from .manifolds import (
    Manifold,
    SpectralBasis,
    WeylEnvelope,
    build_spectral_basis,
    get_manifold,
    sample_uniform,
    weyl_envelope,
)
from .minimax import (
    BinaryCode,
    ConditionReport,
    HardFamily,
    build_hard_family,
    check_conditions,
    gilbert_varshamov,
    kl_divergence,
    verify_packing,
)
from .power_space import (
    NoiseModel,
    PowerCoefficients,
    TargetSpec,
    effective_dimension,
    error_norm,
    make_source_target,
    power_norm,
    project_estimate,
    whitened_deviation_norm,
)

__all__ = [
    "BinaryCode",
    "ConditionReport",
    "Dataset",
    "ExperimentConfig",
    "FilterFamily",
    "HardFamily",
    "HeatKernelParams",
    "KernelMatrix",
    "Manifold",
    "NoiseModel",
    "PowerCoefficients",
    "RateFit",
    "SpectralBasis",
    "SpectralEstimate",
    "SpectralFilterRegressor",
    "TargetSpec",
    "WeylEnvelope",
    "audit_axioms",
    "basis_for_kernel",
    "build_hard_family",
    "build_spectral_basis",
    "check_conditions",
    "cutoff",
    "effective_dimension",
    "empirical_covariance_in_basis",
    "error_norm",
    "filter_eval",
    "fit_coefficients",
    "fit_from_features",
    "fit_rate",
    "fit_tikhonov_direct",
    "generate_dataset",
    "get_manifold",
    "gilbert_varshamov",
    "kernel_eval",
    "kernel_matrix",
    "kl_divergence",
    "lambda_schedule",
    "landweber",
    "make_source_target",
    "mercer_weights",
    "parse_filter",
    "power_norm",
    "predict",
    "project_estimate",
    "qualification_margin",
    "residual_eval",
    "run_convergence_sweep",
    "sample_uniform",
    "tikhonov",
    "verify_packing",
    "weyl_envelope",
    "whitened_deviation_norm",
    "__version__",
]
