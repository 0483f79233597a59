"""Unbiased spectral-moment estimation for kernel integral operators.

Estimate the eigenvalue moments m(n) of a kernel integral operator from a
finite P x Q measurement matrix, compare against biased baselines and
analytic ground truth, and recover eigenvalues from the moment sequence.
"""

from .analytic import (EigenvalueList, RbfSpectrumSpec, block_circulant_moment,
                       compute_etas, linear_process_moments, phi_scalar,
                       rbf_eigenvalue, rbf_moment, rbf_moments,
                       rbf_top_eigenvalues, spec_from_covariances)
from .estimators import (AS_IS, AUTO, COL, ROW, TRANSPOSED, MomentSequence,
                         brute_force_all_paths, brute_force_increasing,
                         chebyshev_error, dp_moments, dp_moments_alt2,
                         dp_moments_altT, estimate_f, exact_second_moment,
                         gram_matrix, kv_moments, naive_moments,
                         permuted_dp_moments, variance_bound)
from .matio import (load_config, load_matrix, load_moments_csv,
                    load_moments_json, noise_from_dict, process_from_dict,
                    save_matrix, save_moments_csv, save_moments_json)
from .processes import (FeatureSet, GenerativeProcess, MeasurementMatrix,
                        NoiseModel, NO_NOISE, build_measurements,
                        evaluate_matrix, evaluate_phi, sample_features,
                        sample_inputs)
from .recovery import (RecoveryConfig, SpectralGrid, default_grid,
                       default_upper_bound, extract_eigenvalues, fit_density,
                       recover, solve_lp)

__version__ = "0.1.0"

__all__ = [
    "AS_IS", "AUTO", "COL", "ROW", "TRANSPOSED", "NO_NOISE",
    "EigenvalueList", "FeatureSet", "GenerativeProcess", "MeasurementMatrix",
    "MomentSequence", "NoiseModel", "RbfSpectrumSpec", "RecoveryConfig",
    "SpectralGrid",
    "block_circulant_moment", "brute_force_all_paths",
    "brute_force_increasing", "build_measurements", "chebyshev_error",
    "compute_etas", "default_grid", "default_upper_bound", "dp_moments",
    "dp_moments_alt2", "dp_moments_altT", "estimate_f", "evaluate_matrix",
    "evaluate_phi", "exact_second_moment", "extract_eigenvalues",
    "fit_density", "gram_matrix", "kv_moments", "linear_process_moments",
    "load_config", "load_matrix", "load_moments_csv", "load_moments_json",
    "naive_moments", "noise_from_dict", "permuted_dp_moments", "phi_scalar",
    "process_from_dict", "rbf_eigenvalue", "rbf_moment", "rbf_moments",
    "rbf_top_eigenvalues", "recover", "sample_features", "sample_inputs",
    "save_matrix", "save_moments_csv", "save_moments_json", "solve_lp",
    "spec_from_covariances", "variance_bound",
]
