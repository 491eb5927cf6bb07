"""Sparse and low-rank recovery solvers.

- :func:`weighted_l1_recover` : noise-ball-constrained weighted l1
  minimization by an alternating-direction splitting scheme.
- :func:`joint_omp_recover` : greedy two-phase simultaneous OMP exploiting
  a partially common support across users.
- :func:`nuclear_norm_recover` : proximal-gradient singular-value
  thresholding for low-rank multiuser channel matrices.
- :func:`gm_amp_em_recover` : approximate message passing with a
  Gaussian-mixture prior whose parameters are learned by EM.
"""

from sparse_csi.recovery.config import (
    RecoveryConfig,
    SupportPrior,
    build_weights,
    export_trace_csv,
    fabricate_support_prior,
)
from sparse_csi.recovery.weighted_l1 import weighted_l1_recover
from sparse_csi.recovery.joint_omp import joint_omp_recover
from sparse_csi.recovery.lowrank import nuclear_norm_recover
from sparse_csi.recovery.amp import gm_amp_em_recover, gm_posterior_moments

__all__ = [
    "RecoveryConfig",
    "SupportPrior",
    "build_weights",
    "export_trace_csv",
    "fabricate_support_prior",
    "weighted_l1_recover",
    "joint_omp_recover",
    "nuclear_norm_recover",
    "gm_amp_em_recover",
    "gm_posterior_moments",
]
