"""lp-norm multiple kernel learning toolkit.

Public surface: kernel construction and file I/O (`kernels`), alignment
diagnostics (`alignment`), the wrapped SVM (`svm`), the lp-norm learner
(`mkl`), ranking metrics and significance tests (`metrics`), synthetic
benchmark generators (`synthetic`), and the experiment harness / CLI
(`harness`, `cli`).

The SVM inner loop runs in a compiled extension when available and falls
back to a pure-numpy twin otherwise; `lpmkl.svm.active_backend()` reports
the lane in use.
"""

__version__ = "0.1.0"

from .kernels import (KernelMatrix, FeatureGroupMatrix, chi2_kernel,
                      mean_chi2_bandwidth, gaussian_kernel, product_kernel,
                      multiplicative_normalize, center, feature_space_variance,
                      combine_kernels, read_kernel, write_kernel)
from .labels import LabelVector, read_labels, write_labels
from .alignment import (kernel_alignment, ideal_kernel, centered_kta,
                        alignment_matrix, kta_profile)
from .svm import SvmModel, solve_svm_dual, decision_values, active_backend
from .mkl import (MklModel, solve_lp_mkl, update_weights, kernel_information,
                  weight_histogram, mkl_decision_values)
from .metrics import (EvalReport, average_precision, conditional_std,
                      wilcoxon_signed_rank, welch_t_test)
from .synthetic import (SyntheticSpec, SyntheticDataset, experiment1_spec,
                        experiment2_spec, generate, noise_replicate_kernels)

__all__ = [
    "KernelMatrix", "FeatureGroupMatrix", "LabelVector", "SvmModel",
    "MklModel", "EvalReport", "SyntheticSpec", "SyntheticDataset",
    "chi2_kernel", "mean_chi2_bandwidth", "gaussian_kernel", "product_kernel",
    "multiplicative_normalize", "center", "feature_space_variance",
    "combine_kernels", "read_kernel", "write_kernel", "read_labels",
    "write_labels", "kernel_alignment", "ideal_kernel", "centered_kta",
    "alignment_matrix", "kta_profile", "solve_svm_dual", "decision_values",
    "active_backend", "solve_lp_mkl", "update_weights", "kernel_information",
    "weight_histogram", "mkl_decision_values", "average_precision",
    "conditional_std", "wilcoxon_signed_rank", "welch_t_test",
    "experiment1_spec", "experiment2_spec", "generate",
    "noise_replicate_kernels",
]
