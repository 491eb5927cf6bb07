"""Sparsity-aware CSI acquisition lab for massive MIMO simulation studies.

Subpackages and modules:

- ``channel``      : channel models (angular-domain sparse, multipath/steering,
  low-rank multiuser) and their second-order statistics.
- ``training``     : pilot sequence and training matrix design (orthogonal,
  WBE, GWBE, FOS, Gaussian, Toeplitz) plus received-signal synthesis.
- ``estimators``   : LS, covariance-aided MMSE decontamination, and
  AoA-aware pilot allocation.
- ``recovery``     : sparse/low-rank recovery solvers (weighted l1 via ADMM,
  joint OMP, singular-value thresholding, GM-AMP with EM learning).
- ``analysis``     : precoding/SINR evaluation, phase transition and user
  capacity experiments, and the seeded Monte-Carlo runner.
- ``cli``          : command-line front end emitting CSV records.
"""

from sparse_csi.exceptions import (
    AmpDivergenceError,
    ConfigurationError,
    InfeasibleProblemError,
    RankDeficiencyError,
)

__version__ = "0.1.0"

__all__ = [
    "AmpDivergenceError",
    "ConfigurationError",
    "InfeasibleProblemError",
    "RankDeficiencyError",
    "__version__",
]
