"""Weighted l1 minimization inside a noise ball, solved by ADMM.

Problem: minimize sum_i w_i |x_i| subject to ||A x - y||_2 <= eps, where
A = S U maps angular-domain coefficients through the training matrix.
The splitting introduces a penalty copy v of x (carrying the weighted l1
term via magnitude soft-thresholding, which preserves phases) and a
residual copy z constrained to the eps-ball:

    minimize  f(v) + ind(||z|| <= eps)
    s.t.      v = x,  z = A x - y.

The x update is a ridge-type linear solve whose system matrix does not
depend on the penalty parameter, so the factorization is computed once
and the penalty can adapt freely. On termination the iterate is nudged
onto the constraint set exactly (minimum-norm correction), so returned
estimates always satisfy the noise-ball constraint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from sparse_csi.estimators import EstimateReport
from sparse_csi.exceptions import InfeasibleProblemError
from sparse_csi.recovery.config import RecoveryConfig
from sparse_csi.training import TrainingMatrix

DEFAULT_MAX_ITERATIONS = 2000
_RHO_ADAPT_PERIOD = 10
_RHO_ADAPT_RATIO = 10.0


def _soft_threshold(c: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Magnitude soft-thresholding of complex entries, keeping phases."""
    mag = np.abs(c)
    scale = np.maximum(mag - t, 0.0) / np.where(mag > 0, mag, 1.0)
    return c * scale


@dataclass
class _AdmmDiagnostics:
    iterations: int
    converged: bool
    trace: list[tuple[int, float, float]]
    aug_objective_pre: list[float]
    aug_objective_post: list[float]


class _XSolver:
    """Solves (I + A^H A) x = b, using the N x N dual form when N < M."""

    def __init__(self, A: np.ndarray):
        N, M = A.shape
        self.A = A
        if N < M:
            self._chol = scipy.linalg.cho_factor(
                np.eye(N) + A @ A.conj().T, check_finite=False
            )
            self._dual = True
        else:
            self._chol = scipy.linalg.cho_factor(
                np.eye(M) + A.conj().T @ A, check_finite=False
            )
            self._dual = False

    def solve(self, b: np.ndarray) -> np.ndarray:
        if self._dual:
            # Woodbury: (I + A^H A)^-1 b = b - A^H (I + A A^H)^-1 A b
            t = scipy.linalg.cho_solve(self._chol, self.A @ b, check_finite=False)
            return b - self.A.conj().T @ t
        return scipy.linalg.cho_solve(self._chol, b, check_finite=False)


def _sensing_matrix(S, U: np.ndarray | None) -> np.ndarray:
    mat = S.matrix if isinstance(S, TrainingMatrix) else np.asarray(S, np.complex128)
    return mat @ U if U is not None else mat


def _least_squares_point(A: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    """A least-squares solution and its residual norm (the feasibility floor)."""
    x, *_ = np.linalg.lstsq(A, y, rcond=None)
    return x, float(np.linalg.norm(A @ x - y))


def _polish_onto_ball(
    A: np.ndarray, y: np.ndarray, x: np.ndarray, x_ls: np.ndarray, eps: float
) -> np.ndarray:
    """Move x minimally along the segment to the LS point until feasible."""
    r = A @ x - y
    r_norm = float(np.linalg.norm(r))
    if r_norm <= eps:
        return x
    r_ls = A @ x_ls - y
    floor = float(np.linalg.norm(r_ls))
    if eps <= floor:
        return x_ls
    # along x + t (x_ls - x): residual = (1-t)(r - r_ls) + r_ls with r_ls
    # orthogonal to the range-space difference, so the norm is monotone in t
    gap = float(np.linalg.norm(r - r_ls))
    if gap == 0.0:
        return x
    keep = np.sqrt(max(eps**2 - floor**2, 0.0)) / gap
    t = 1.0 - min(keep, 1.0)
    return x + t * (x_ls - x)


def weighted_l1_recover(
    y: np.ndarray,
    S,
    U: np.ndarray | None = None,
    cfg: RecoveryConfig | None = None,
    truth: np.ndarray | None = None,
    record_trace: bool = False,
) -> EstimateReport:
    """Recover a sparse angular-domain vector from compressed training data.

    ``cfg.weights`` (default all-ones) weight the l1 objective; zeros mark
    entries a support prior expects to be active. ``cfg.epsilon`` is the
    noise-ball radius; with eps = 0 the data constraint is an equality.

    Raises :class:`InfeasibleProblemError` when eps is below the
    least-squares residual floor of an overdetermined system. If the
    splitting scheme does not converge within the iteration budget the
    best iterate is returned with ``converged=False``.
    """
    cfg = cfg or RecoveryConfig()
    A = _sensing_matrix(S, U)
    y = np.asarray(y, dtype=np.complex128).reshape(-1)
    N, M = A.shape
    if y.size != N:
        raise ValueError("measurement length does not match the sensing matrix")
    w = cfg.weights if cfg.weights is not None else np.ones(M)
    if w.size != M:
        raise ValueError("weight vector length must equal M")

    x_ls, floor = _least_squares_point(A, y)
    if N >= M and cfg.epsilon < floor * (1 - 1e-9):
        raise InfeasibleProblemError(
            f"eps={cfg.epsilon:g} below the residual floor {floor:g} "
            "of the overdetermined system"
        )

    x, diag = _admm_weighted_l1(A, y, w, cfg, x_ls, record_trace)
    x = _polish_onto_ball(A, y, x, x_ls, cfg.epsilon)
    return EstimateReport(
        estimate=x,
        method="weighted_l1",
        residual_norm=float(np.linalg.norm(A @ x - y)),
        nmse_db=_maybe_nmse(x, truth),
        iterations=diag.iterations,
        converged=diag.converged,
        trace=tuple(diag.trace) if record_trace else None,
    )


def _admm_weighted_l1(
    A: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    cfg: RecoveryConfig,
    x_ls: np.ndarray,
    record_trace: bool,
) -> tuple[np.ndarray, _AdmmDiagnostics]:
    N, M = A.shape
    eps = cfg.epsilon
    tol = cfg.tolerance
    max_iter = cfg.iterations_or(DEFAULT_MAX_ITERATIONS)
    solver = _XSolver(A)

    # feasible warm start
    x = x_ls.copy()
    v = x.copy()
    Ax = A @ x
    z = _project_ball(Ax - y, eps)
    u_v = np.zeros(M, dtype=np.complex128)
    u_z = np.zeros(N, dtype=np.complex128)
    rho = 1.0

    diag = _AdmmDiagnostics(0, False, [], [], [])
    sqrt_dims = np.sqrt(M + N)
    for it in range(1, max_iter + 1):
        if record_trace:
            diag.aug_objective_pre.append(
                _augmented_objective(w, x, v, z, u_v, u_z, Ax, y, rho)
            )
        rhs = (v - u_v) + A.conj().T @ (y + z - u_z)
        x = solver.solve(rhs)
        Ax = A @ x
        v_new = _soft_threshold(x + u_v, w / rho)
        z_new = _project_ball(Ax - y + u_z, eps)
        if record_trace:
            diag.aug_objective_post.append(
                _augmented_objective(w, x, v_new, z_new, u_v, u_z, Ax, y, rho)
            )
        r_v = x - v_new
        r_z = Ax - y - z_new
        u_v += r_v
        u_z += r_z
        dual = rho * np.sqrt(
            np.linalg.norm(v_new - v) ** 2 + np.linalg.norm(A.conj().T @ (z_new - z)) ** 2
        )
        primal = np.sqrt(np.linalg.norm(r_v) ** 2 + np.linalg.norm(r_z) ** 2)
        v, z = v_new, z_new

        if record_trace:
            diag.trace.append(
                (it, float(np.sum(w * np.abs(v))), float(np.linalg.norm(Ax - y)))
            )
        scale_pri = max(
            1.0,
            float(np.sqrt(np.linalg.norm(x) ** 2 + np.linalg.norm(Ax) ** 2)),
            float(np.sqrt(np.linalg.norm(v) ** 2 + np.linalg.norm(z) ** 2)),
            float(np.linalg.norm(y)),
        )
        scale_dual = max(
            1.0, rho * float(np.linalg.norm(u_v + A.conj().T @ u_z))
        )
        diag.iterations = it
        if primal <= tol * sqrt_dims * scale_pri and dual <= tol * sqrt_dims * scale_dual:
            diag.converged = True
            break
        if it % _RHO_ADAPT_PERIOD == 0:
            # keep primal and dual progress balanced; the x-system does
            # not involve rho, so this costs nothing
            if primal > _RHO_ADAPT_RATIO * dual:
                rho *= 2.0
                u_v /= 2.0
                u_z /= 2.0
            elif dual > _RHO_ADAPT_RATIO * primal:
                rho /= 2.0
                u_v *= 2.0
                u_z *= 2.0
    return v if eps == 0 else v, diag


def _project_ball(p: np.ndarray, eps: float) -> np.ndarray:
    if eps == 0.0:
        return np.zeros_like(p)
    norm = float(np.linalg.norm(p))
    return p if norm <= eps else p * (eps / norm)


def _augmented_objective(w, x, v, z, u_v, u_z, Ax, y, rho) -> float:
    return float(
        np.sum(w * np.abs(v))
        + 0.5 * rho * np.linalg.norm(x - v + u_v) ** 2
        + 0.5 * rho * np.linalg.norm(Ax - y - z + u_z) ** 2
    )


def _maybe_nmse(estimate: np.ndarray, truth: np.ndarray | None) -> float | None:
    if truth is None:
        return None
    from sparse_csi.analysis import nmse

    return nmse(estimate, truth)
