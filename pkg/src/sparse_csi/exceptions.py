"""Exception types shared across the package."""


class RankDeficiencyError(ValueError):
    """A Gram or system matrix required to be invertible is singular."""


class InfeasibleProblemError(ValueError):
    """A constrained recovery problem has an empty feasible set."""


class IllPosedFitError(ValueError):
    """A least-squares subproblem has more unknowns than equations."""


class AmpDivergenceError(RuntimeError):
    """Message-passing residual energy blew up; try stronger damping."""


class ConfigurationError(ValueError):
    """An experiment or CLI configuration failed validation."""
