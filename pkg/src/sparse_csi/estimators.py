"""Classical channel estimators and coordinated pilot allocation.

The LS estimator inverts the pilot Gram matrix; under pilot reuse across
cells it returns the sum of the desired and interfering channels, which is
the contamination this module's MMSE stage then strips using second-order
statistics. Decontamination works when the desired and interfering users'
angle-of-arrival ranges do not overlap, and the allocation routine tries
to create exactly that situation by coloring a conflict graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from sparse_csi.channel import CovarianceModel
from sparse_csi.exceptions import RankDeficiencyError
from sparse_csi.training import MeasurementBatch, PilotSet

MMSE_RIDGE_RTOL = 1e-10  # relative ridge applied to ill-conditioned filters


@dataclass(frozen=True)
class EstimateReport:
    """Outcome of one estimation/recovery call.

    ``residual_norm`` is solver-specific (data-fit residual for LS and the
    sparse solvers, correction magnitude for the MMSE filter); ``nmse_db``
    is present when the caller supplied ground truth; iterative solvers
    also report iteration counts, a convergence flag, an optional learned
    noise variance, and an optional per-iteration (iteration, objective,
    residual) trace.
    """

    estimate: np.ndarray
    method: str
    residual_norm: float
    nmse_db: float | None = None
    iterations: int | None = None
    converged: bool = True
    noise_var_estimate: float | None = None
    trace: tuple[tuple[int, float, float], ...] | None = None

    def __post_init__(self):
        if self.residual_norm < 0:
            raise ValueError("residual_norm must be nonnegative")
        object.__setattr__(
            self, "estimate", np.asarray(self.estimate, dtype=np.complex128)
        )


@dataclass(frozen=True)
class PilotAllocation:
    """Pilot index per (cell, user) plus the number of residual conflicts.

    A conflict is a pair of users in different cells that share a pilot
    while their angle-of-arrival ranges overlap; within one cell pilot
    indices are always distinct.
    """

    assignment: Mapping[tuple[int, int], int]
    conflict_count: int

    def __post_init__(self):
        per_cell: dict[int, set[int]] = {}
        for (cell, _), pilot in self.assignment.items():
            used = per_cell.setdefault(cell, set())
            if pilot in used:
                raise ValueError(f"cell {cell} assigns pilot {pilot} twice")
            used.add(pilot)
        if self.conflict_count < 0:
            raise ValueError("conflict_count must be nonnegative")
        object.__setattr__(self, "assignment", dict(self.assignment))


def ls_estimate(
    measurement: MeasurementBatch,
    pilots: PilotSet,
    truth: np.ndarray | None = None,
) -> EstimateReport:
    """Least-squares channel estimate from one uplink training block.

    Solves H_hat = (S^H S)^{-1} S^H Y. With the same orthogonal pilots
    reused in every cell and no noise, row k is the sum of all cells'
    channels for pilot k (the contaminated composite).
    """
    if measurement.tdd_measurement is None:
        raise ValueError("ls_estimate needs an uplink (tau x M) measurement")
    Y = measurement.tdd_measurement
    S = pilots.matrix
    if S.shape[0] != Y.shape[0]:
        raise ValueError("pilot length does not match measurement rows")
    gram = pilots.gram()
    eig = np.linalg.eigvalsh(gram)
    if eig[0] <= 1e-12 * max(eig[-1], 1.0):
        raise RankDeficiencyError(
            f"singular pilot Gram for pilot set (scheme={pilots.scheme.value}, "
            f"tau={pilots.tau}, K={pilots.num_users}); LS inversion impossible"
        )
    H_hat = np.linalg.solve(gram, S.conj().T @ Y)
    residual = float(np.linalg.norm(Y - S @ H_hat))
    return EstimateReport(
        estimate=H_hat,
        method="ls",
        residual_norm=residual,
        nmse_db=_nmse_db_or_none(H_hat, truth),
    )


def mmse_filter(
    desired_cov: CovarianceModel | np.ndarray,
    interferer_covs: Sequence[CovarianceModel | np.ndarray],
    noise_var: float,
) -> np.ndarray:
    """Linear filter R_d (noise_var I + R_d + sum R_i)^{-1}.

    Precompute this once per covariance configuration; it does not depend
    on the measurement. A relative ridge keeps the inversion stable when
    the covariances are low-rank and the noise vanishes.
    """
    R_d = _cov_matrix(desired_cov)
    M = R_d.shape[0]
    total = R_d + noise_var * np.eye(M)
    for R in interferer_covs:
        R = _cov_matrix(R)
        if R.shape != R_d.shape:
            raise ValueError("covariance dimensions disagree")
        total = total + R
    scale = np.real(np.trace(total)) / M
    eig_min = float(np.linalg.eigvalsh(total)[0])
    if eig_min <= MMSE_RIDGE_RTOL * scale:
        total = total + MMSE_RIDGE_RTOL * scale * np.eye(M)
    return R_d @ np.linalg.inv(total)


def mmse_decontaminate(
    ls_row: np.ndarray,
    desired_cov: CovarianceModel | np.ndarray,
    interferer_covs: Sequence[CovarianceModel | np.ndarray],
    noise_var: float,
    truth: np.ndarray | None = None,
    filter_matrix: np.ndarray | None = None,
) -> EstimateReport:
    """Extract the desired channel from a contaminated LS row.

    Applies the covariance-weighted filter to the composite estimate; with
    non-overlapping angle ranges the filter passes the desired subspace
    and suppresses the interferers', so the output approaches the desired
    channel as the array grows. ``residual_norm`` is the magnitude of the
    applied correction.
    """
    h = np.asarray(ls_row, dtype=np.complex128).reshape(-1)
    W = (
        filter_matrix
        if filter_matrix is not None
        else mmse_filter(desired_cov, interferer_covs, noise_var)
    )
    if W.shape[1] != h.size:
        raise ValueError("filter and estimate dimensions disagree")
    out = W @ h
    return EstimateReport(
        estimate=out,
        method="coordinated_mmse",
        residual_norm=float(np.linalg.norm(out - h)),
        nmse_db=_nmse_db_or_none(out, truth),
    )


def intervals_overlap(a: tuple[float, float], b: tuple[float, float]) -> bool:
    return a[0] <= b[1] and b[0] <= a[1]


def count_cross_cell_conflicts(
    aoa_ranges: np.ndarray, assignment: Mapping[tuple[int, int], int]
) -> int:
    """Number of different-cell user pairs sharing a pilot with overlapping ranges."""
    items = sorted(assignment.items())
    count = 0
    for idx, ((cell_a, ue_a), pilot_a) in enumerate(items):
        for (cell_b, ue_b), pilot_b in items[idx + 1 :]:
            if cell_a == cell_b or pilot_a != pilot_b:
                continue
            if intervals_overlap(
                tuple(aoa_ranges[cell_a][ue_a]), tuple(aoa_ranges[cell_b][ue_b])
            ):
                count += 1
    return count


def allocate_pilots_by_aoa(
    aoa_ranges: Sequence[Sequence[tuple[float, float]]],
    tau: int,
    L: int,
    K: int,
) -> PilotAllocation:
    """Coordinated pilot allocation by greedy conflict-graph coloring.

    Users are vertices; an edge joins different-cell users whose
    angle-of-arrival ranges overlap. Vertices are colored in order of
    decreasing range width (wide ranges are the hardest to place); each
    vertex takes the pilot, unused inside its own cell, that conflicts
    with the fewest already-colored neighbors. ``conflict_count`` is the
    number of cross-cell co-pilot overlaps that remain.
    """
    if K > tau:
        raise ValueError("each cell needs K <= tau for distinct in-cell pilots")
    ranges = np.asarray(aoa_ranges, dtype=np.float64)
    if ranges.shape != (L, K, 2):
        raise ValueError(f"aoa_ranges must have shape (L={L}, K={K}, 2)")
    widths = ranges[:, :, 1] - ranges[:, :, 0]
    order = sorted(
        ((cell, ue) for cell in range(L) for ue in range(K)),
        key=lambda v: (-widths[v[0], v[1]], v[0], v[1]),
    )
    assignment: dict[tuple[int, int], int] = {}
    used_in_cell: dict[int, set[int]] = {cell: set() for cell in range(L)}
    for cell, ue in order:
        interval = tuple(ranges[cell][ue])
        best_pilot, best_cost = -1, None
        for pilot in range(tau):
            if pilot in used_in_cell[cell]:
                continue
            cost = sum(
                1
                for (other_cell, other_ue), other_pilot in assignment.items()
                if other_cell != cell
                and other_pilot == pilot
                and intervals_overlap(interval, tuple(ranges[other_cell][other_ue]))
            )
            if best_cost is None or cost < best_cost:
                best_pilot, best_cost = pilot, cost
        assignment[(cell, ue)] = best_pilot
        used_in_cell[cell].add(best_pilot)
    return PilotAllocation(
        assignment=assignment,
        conflict_count=count_cross_cell_conflicts(ranges, assignment),
    )


def _cov_matrix(cov: CovarianceModel | np.ndarray) -> np.ndarray:
    if isinstance(cov, CovarianceModel):
        return cov.matrix
    return np.asarray(cov, dtype=np.complex128)


def _nmse_db_or_none(estimate: np.ndarray, truth: np.ndarray | None) -> float | None:
    if truth is None:
        return None
    from sparse_csi.analysis import nmse  # local import avoids module cycle

    return nmse(estimate, truth)
