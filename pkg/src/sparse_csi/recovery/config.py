"""Shared solver configuration, support priors, and trace export."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from sparse_csi.estimators import EstimateReport


@dataclass(frozen=True)
class SupportPrior:
    """Partial support information handed to the weighted l1 solver.

    ``indices`` is the believed support; ``accuracy`` is the fraction of
    it that actually lies inside the true support. Solvers never see the
    accuracy, it is bookkeeping for experiment generators.
    """

    indices: frozenset[int]
    declared_size: int
    accuracy: float

    def __post_init__(self):
        object.__setattr__(self, "indices", frozenset(int(i) for i in self.indices))
        if len(self.indices) != self.declared_size:
            raise ValueError("declared_size must equal card(indices)")
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError("accuracy must lie in [0, 1]")


@dataclass(frozen=True)
class RecoveryConfig:
    """Knobs shared by the recovery solvers.

    ``max_iterations=None`` picks the solver default (2000 for the l1 and
    singular-value-thresholding solvers, 50 for message passing).
    """

    epsilon: float = 0.0
    weights: np.ndarray | None = None
    nuclear_gamma: float = 1.0
    max_iterations: int | None = None
    tolerance: float = 1e-6
    gm_components: int = 2
    amp_damping: float = 0.8

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.nuclear_gamma <= 0:
            raise ValueError("nuclear_gamma must be positive")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.gm_components < 2:
            raise ValueError("gm_components must be at least 2")
        if not 0.0 < self.amp_damping <= 1.0:
            raise ValueError("amp_damping must lie in (0, 1]")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
            if np.any(w < 0):
                raise ValueError("weights must be nonnegative")
            object.__setattr__(self, "weights", w)

    def iterations_or(self, default: int) -> int:
        return default if self.max_iterations is None else self.max_iterations


def build_weights(prior: SupportPrior, M: int) -> np.ndarray:
    """Objective weights: zero on the believed support, one elsewhere.

    Entries expected to be nonzero are exempted from the l1 penalty so the
    optimization concentrates on keeping everything else small.
    """
    idx = np.fromiter(prior.indices, dtype=int, count=len(prior.indices))
    if idx.size and (idx.min() < 0 or idx.max() >= M):
        raise ValueError("prior indices must lie in [0, M)")
    w = np.ones(M)
    if idx.size:
        w[idx] = 0.0
    return w


def fabricate_support_prior(
    true_support: Iterable[int],
    s_hat: int,
    alpha: float,
    M: int,
    rng: np.random.Generator,
) -> SupportPrior:
    """Construct a size-s_hat prior whose overlap with the truth is floor(alpha * s_hat).

    Used by experiment generators only; real systems would obtain the
    prior from long-term statistics or earlier estimates.
    """
    true_idx = np.fromiter(sorted(set(int(i) for i in true_support)), dtype=int)
    hits = int(np.floor(alpha * s_hat))
    misses = s_hat - hits
    if hits > true_idx.size:
        raise ValueError("true support too small for the requested overlap")
    complement = np.setdiff1d(np.arange(M), true_idx, assume_unique=True)
    if misses > complement.size:
        raise ValueError("not enough off-support indices available")
    chosen_hits = rng.choice(true_idx, size=hits, replace=False) if hits else []
    chosen_misses = rng.choice(complement, size=misses, replace=False) if misses else []
    idx = frozenset(int(i) for i in chosen_hits) | frozenset(int(i) for i in chosen_misses)
    return SupportPrior(indices=idx, declared_size=s_hat, accuracy=alpha)


def export_trace_csv(report: EstimateReport, path: str | Path) -> None:
    """Write a solver's per-iteration (iteration, objective, residual) trace."""
    if report.trace is None:
        raise ValueError(f"report for method {report.method!r} carries no trace")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "objective", "residual"])
        for it, obj, res in report.trace:
            writer.writerow([it, repr(float(obj)), repr(float(res))])
