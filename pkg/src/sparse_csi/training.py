"""Pilot sequence and downlink training matrix design, plus received-signal synthesis.

Pilot families
--------------
- ORTHOGONAL : K <= tau columns of a unitary basis (zero cross-correlation).
- WBE        : unit-norm tight frame, S S^H = (K/tau) I, for K >= tau.
- GWBE       : power-weighted tight frame, sum_k p_k s_k s_k^H = (sum p / tau) I,
  feasible when every p_k is strictly below the mean power per dimension.
- FOS        : reuse of an orthonormal set, pairwise correlation exactly 0 or 1.

WBE/GWBE sets are built by eigen-structured completion: a Hermitian Gram
matrix with the prescribed spectrum is rotated by a sequence of
two-coordinate unitaries until its diagonal matches the prescribed column
energies, then factored. For WBE an alternating-projection pass first
spreads the off-diagonal correlation mass nearly uniformly across pairs,
which keeps per-user interference balanced; the closing rotations restore
the diagonal exactly, so the tight-frame identity holds to near machine
precision regardless.

Training matrices for downlink (FDD-style) measurement are Gaussian,
Toeplitz-structured, or orthonormal-rows, with entry variance 1/N so that
column energies concentrate at one independent of the measurement count.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg

from sparse_csi.random_utils import crandn, substream

# Internal seed for the deterministic frame completions; the constructions
# take no rng argument, so identical (tau, K, powers) always yield the
# same pilot set.
_CONSTRUCTION_SEED = 742025
_FLATTEN_ITERATIONS = 200


class PilotScheme(enum.Enum):
    ORTHOGONAL = "orthogonal"
    WBE = "wbe"
    GWBE = "gwbe"
    FOS = "fos"


class TrainingKind(enum.Enum):
    GAUSSIAN = "gaussian"
    TOEPLITZ = "toeplitz"
    ORTHONORMAL_ROWS = "orthonormal_rows"


@dataclass(frozen=True)
class PilotSet:
    """tau x K matrix whose unit-norm columns are per-user pilot sequences."""

    matrix: np.ndarray
    scheme: PilotScheme
    powers: np.ndarray | None = None

    def __post_init__(self):
        S = np.asarray(self.matrix, dtype=np.complex128)
        if S.ndim != 2:
            raise ValueError("pilot matrix must be two-dimensional")
        norms = np.linalg.norm(S, axis=0)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValueError("pilot columns must have unit norm within 1e-12")
        object.__setattr__(self, "matrix", S)
        if self.powers is not None:
            p = np.asarray(self.powers, dtype=np.float64).reshape(-1)
            if p.size != S.shape[1] or np.any(p < 0):
                raise ValueError("powers must be K nonnegative weights")
            object.__setattr__(self, "powers", p)

    @property
    def tau(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_users(self) -> int:
        return self.matrix.shape[1]

    def gram(self) -> np.ndarray:
        return self.matrix.conj().T @ self.matrix


@dataclass(frozen=True)
class TrainingMatrix:
    """N x M downlink training matrix."""

    matrix: np.ndarray
    kind: TrainingKind

    def __post_init__(self):
        S = np.asarray(self.matrix, dtype=np.complex128)
        if S.ndim != 2 or S.shape[0] < 1 or S.shape[1] < 1:
            raise ValueError("training matrix must have positive dimensions")
        if self.kind is TrainingKind.TOEPLITZ:
            for offset in range(-S.shape[0] + 1, S.shape[1]):
                diag = np.diagonal(S, offset=offset)
                if diag.size > 1 and np.any(diag != diag[0]):
                    raise ValueError("Toeplitz training must have constant diagonals")
        object.__setattr__(self, "matrix", S)

    @property
    def num_measurements(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_antennas(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class MeasurementBatch:
    """Received training signals: per-UE vectors (downlink) or one tau x M matrix (uplink).

    Exactly one payload is present. ``noise_bound`` optionally records the
    realized noise norm(s) for bounded-noise recovery: one value per UE for
    downlink batches, the Frobenius norm for uplink batches.
    """

    noise_std: float
    fdd_measurements: tuple[np.ndarray, ...] | None = None
    tdd_measurement: np.ndarray | None = None
    noise_bound: np.ndarray | float | None = None

    def __post_init__(self):
        if (self.fdd_measurements is None) == (self.tdd_measurement is None):
            raise ValueError("exactly one of the two measurement payloads must be set")
        if self.noise_std < 0:
            raise ValueError("noise_std must be nonnegative")
        if self.fdd_measurements is not None:
            object.__setattr__(
                self,
                "fdd_measurements",
                tuple(np.asarray(y, dtype=np.complex128) for y in self.fdd_measurements),
            )
        else:
            object.__setattr__(
                self, "tdd_measurement", np.asarray(self.tdd_measurement, np.complex128)
            )


# ---------------------------------------------------------------------------
# Gram completion with prescribed spectrum and diagonal
# ---------------------------------------------------------------------------


def _rotate_to_diagonal(G: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Drive diag(G) onto ``target`` with two-coordinate unitary similarities.

    Each rotation acts on one pair of coordinates, pins one diagonal entry
    to its target exactly, and leaves the spectrum untouched. Requires
    sum(diag) == sum(target) up to rounding.
    """
    G = G.copy()
    K = G.shape[0]
    scale = max(float(np.max(np.abs(target))), 1.0)
    for _ in range(8 * K):
        dev = np.real(np.diag(G)) - target
        if np.max(np.abs(dev)) <= 5e-14 * scale:
            return G
        under = int(np.argmin(dev))
        over = int(np.argmax(dev))
        done = False
        # prefer the most-violating pair, fall back to any workable one
        for i, j in [(under, over)] + [
            (i, over) for i in np.argsort(dev)[: K - 1] if dev[i] < 0
        ]:
            i, j = int(i), int(j)
            if i == j:
                continue
            a = float(np.real(G[i, i]))
            b = float(np.real(G[j, j]))
            g = G[i, j]
            phi = np.angle(g) if np.abs(g) > 0 else 0.0
            gr = float(np.abs(g))
            mid = (a + b) / 2.0
            radius = np.hypot((a - b) / 2.0, gr)
            for idx, want in ((i, target[i]), (j, (a + b) - target[j])):
                # want is the value g_ii must take (fixing j means moving
                # g_ii to the complementary value along the pair sum)
                if radius <= 0 or abs(want - mid) > radius * (1 + 1e-12):
                    continue
                psi = np.arctan2(gr, (a - b) / 2.0)
                theta = 0.5 * (psi - np.arccos(np.clip((want - mid) / radius, -1, 1)))
                c, s = np.cos(theta), np.sin(theta)
                # twist column/row j so the coupling is real, then rotate
                G[j, :] *= np.exp(1j * phi)
                G[:, j] *= np.exp(-1j * phi)
                row_i, row_j = G[i, :].copy(), G[j, :].copy()
                G[i, :] = c * row_i + s * row_j
                G[j, :] = -s * row_i + c * row_j
                col_i, col_j = G[:, i].copy(), G[:, j].copy()
                G[:, i] = c * col_i + s * col_j
                G[:, j] = -s * col_i + c * col_j
                G[i, i] = np.real(G[i, i])
                G[j, j] = np.real(G[j, j])
                # pin the adjusted entry exactly
                G[idx, idx] = target[idx] if idx == i else target[j]
                done = True
                break
            if done:
                break
        if not done:
            raise RuntimeError("diagonal adjustment stalled; should not happen")
    raise RuntimeError("diagonal adjustment did not converge")


def _spectral_projection(G: np.ndarray, tau: int, eig: float) -> np.ndarray:
    """Nearest Hermitian matrix with eigenvalues (eig x tau, 0 x rest)."""
    w, V = np.linalg.eigh((G + G.conj().T) / 2.0)
    Vt = V[:, -tau:]
    return eig * (Vt @ Vt.conj().T)


def _flatten_correlations(G: np.ndarray, tau: int, eig: float) -> np.ndarray:
    """Alternating projections pushing |G_jk| toward a common level.

    Keeps the prescribed spectrum after every pass; the diagonal is only
    approximately one on return and is fixed exactly by the closing
    rotation stage.
    """
    K = G.shape[0]
    level = np.sqrt(max(eig * tau / K * (K / tau - 1.0), 0.0) / (K - 1))
    for _ in range(_FLATTEN_ITERATIONS):
        T = G.copy()
        off = ~np.eye(K, dtype=bool)
        mags = np.abs(T[off])
        phases = np.where(mags > 0, T[off] / np.where(mags > 0, mags, 1.0), 1.0)
        T[off] = level * phases
        np.fill_diagonal(T, 1.0)
        G = _spectral_projection(T, tau, eig)
    return G


def _completed_gram(
    diag_target: np.ndarray, tau: int, rng: np.random.Generator, flatten: bool
) -> np.ndarray:
    """K x K PSD Gram with eigenvalues (sum(diag)/tau) x tau and the given diagonal."""
    K = diag_target.size
    eig = float(np.sum(diag_target)) / tau
    Q, _ = np.linalg.qr(crandn(rng, K, K))
    G = eig * (Q[:, :tau] @ Q[:, :tau].conj().T)
    if flatten:
        G = _flatten_correlations(G, tau, eig)
    return _rotate_to_diagonal(G, np.asarray(diag_target, dtype=np.float64))


def _factor_gram(G: np.ndarray, tau: int) -> np.ndarray:
    """tau x K factor S with S^H S = G, for G of rank tau."""
    w, V = np.linalg.eigh(G)
    w_top = np.clip(w[-tau:], 0.0, None)
    S = np.sqrt(w_top)[:, None] * V[:, -tau:].conj().T
    return S / np.linalg.norm(S, axis=0, keepdims=True)


# ---------------------------------------------------------------------------
# Pilot constructions
# ---------------------------------------------------------------------------


def make_orthogonal_pilots(tau: int, K: int) -> PilotSet:
    """K mutually orthogonal unit-norm sequences of length tau (needs K <= tau)."""
    if K > tau:
        raise ValueError(f"cannot fit {K} orthogonal sequences in dimension {tau}")
    if tau < 1 or K < 1:
        raise ValueError("tau and K must be >= 1")
    m = np.arange(tau)
    U = np.exp(-2j * np.pi * np.outer(m, m) / tau) / np.sqrt(tau)
    return PilotSet(matrix=U[:, :K], scheme=PilotScheme.ORTHOGONAL)


def make_wbe_pilots(tau: int, K: int) -> PilotSet:
    """Unit-norm tight frame: S S^H = (K/tau) I, defined for K >= tau.

    Deterministic for given (tau, K). Off-diagonal correlation magnitudes
    are spread nearly uniformly so no user sees concentrated interference.
    """
    if K < tau:
        raise ValueError("tight-frame identity requires K >= tau")
    if K == tau:
        orth = make_orthogonal_pilots(tau, K)
        return PilotSet(matrix=orth.matrix, scheme=PilotScheme.WBE)
    rng = substream(_CONSTRUCTION_SEED, tau, K, 0)
    G = _completed_gram(np.ones(K), tau, rng, flatten=True)
    return PilotSet(matrix=_factor_gram(G, tau), scheme=PilotScheme.WBE)


def gwbe_feasibility_violation(tau: int, powers: np.ndarray) -> str | None:
    """Return a message describing the violated feasibility condition, or None.

    A power-weighted tight frame with per-user powers p exists only if
    every p_k stays strictly below mean-power-per-dimension sum(p)/tau.
    """
    powers = np.asarray(powers, dtype=np.float64)
    bound = float(np.sum(powers)) / tau
    worst = int(np.argmax(powers))
    if powers[worst] >= bound:
        return (
            f"power profile infeasible: powers[{worst}] = {powers[worst]:g} "
            f">= sum(powers)/tau = {bound:g}"
        )
    return None


def make_gwbe_pilots(tau: int, K: int, powers: Sequence[float]) -> PilotSet:
    """Power-weighted tight frame: sum_k p_k s_k s_k^H = (sum p / tau) I.

    The weighted identity is what equalizes per-user interference under a
    heterogeneous power allocation; it requires K >= tau and every power
    strictly below sum(powers)/tau.
    """
    powers = np.asarray(powers, dtype=np.float64).reshape(-1)
    if powers.size != K:
        raise ValueError("need one power per user")
    if np.any(powers <= 0):
        raise ValueError("powers must be positive")
    if K < tau:
        raise ValueError("weighted tight-frame identity requires K >= tau")
    violation = gwbe_feasibility_violation(tau, powers)
    if violation is not None:
        raise ValueError(violation)
    rng = substream(_CONSTRUCTION_SEED, tau, K, 1)
    G = _completed_gram(powers, tau, rng, flatten=False)
    return PilotSet(
        matrix=_factor_gram(G, tau), scheme=PilotScheme.GWBE, powers=powers
    )


def make_fos_pilots(
    tau: int, K: int, assignment: Sequence[int] | None = None
) -> PilotSet:
    """Finite orthogonal sequences: user k reuses basis vector assignment[k].

    Pairwise correlations are exactly 0 or 1. Defaults to round-robin
    assignment k mod tau.
    """
    if assignment is None:
        assignment = [k % tau for k in range(K)]
    assignment = list(assignment)
    if len(assignment) != K:
        raise ValueError("assignment must map every user to a sequence index")
    if any(not 0 <= a < tau for a in assignment):
        raise ValueError("assignment indices must be < tau")
    S = np.zeros((tau, K), dtype=np.complex128)
    S[assignment, np.arange(K)] = 1.0
    return PilotSet(matrix=S, scheme=PilotScheme.FOS)


# ---------------------------------------------------------------------------
# Training matrices
# ---------------------------------------------------------------------------


def make_gaussian_training(N: int, M: int, rng: np.random.Generator) -> TrainingMatrix:
    """N x M i.i.d. complex normal training with entry variance 1/N."""
    if N < 1 or M < 1:
        raise ValueError("N and M must be >= 1")
    S = crandn(rng, N, M) / np.sqrt(N)
    return TrainingMatrix(matrix=S, kind=TrainingKind.GAUSSIAN)


def make_toeplitz_training(N: int, M: int, rng: np.random.Generator) -> TrainingMatrix:
    """Toeplitz training built from N+M-1 i.i.d. generators, entry variance 1/N.

    Entry (i, j) depends only on i - j, so far fewer independent random
    values are needed than for a full Gaussian matrix.
    """
    if N < 1 or M < 1:
        raise ValueError("N and M must be >= 1")
    gen = crandn(rng, N + M - 1) / np.sqrt(N)
    S = scipy.linalg.toeplitz(gen[M - 1 :], gen[M - 1 :: -1])
    return TrainingMatrix(matrix=S, kind=TrainingKind.TOEPLITZ)


def make_orthonormal_rows_training(
    N: int, M: int, rng: np.random.Generator
) -> TrainingMatrix:
    """Training with orthonormal rows (N <= M), e.g. for exactly determined probes."""
    if not 1 <= N <= M:
        raise ValueError("need 1 <= N <= M for orthonormal rows")
    Q, _ = np.linalg.qr(crandn(rng, M, N))
    return TrainingMatrix(matrix=Q.conj().T, kind=TrainingKind.ORTHONORMAL_ROWS)


# ---------------------------------------------------------------------------
# Received-signal synthesis
# ---------------------------------------------------------------------------


def fdd_downlink_measure(
    training_per_cell: Sequence[TrainingMatrix],
    channels_per_ue: Sequence[Sequence[np.ndarray]],
    noise_std: float,
    rng: np.random.Generator,
    record_noise_bound: bool = False,
) -> MeasurementBatch:
    """Downlink training observations y_k = sum_l S_l h_{l,k} + z_k per UE.

    ``channels_per_ue[k][l]`` is the channel from cell l's base station to
    UE k; the serving-cell channel and the intercell interference channels
    are simply summed with their cells' training matrices. With
    ``record_noise_bound`` the realized ||z_k||_2 values are stored for
    bounded-noise recovery.
    """
    mats = [t.matrix for t in training_per_cell]
    shapes = {m.shape for m in mats}
    if len(shapes) != 1:
        raise ValueError("all cells must use training matrices of one shape")
    N, M = mats[0].shape
    ys = []
    bounds = []
    for chans in channels_per_ue:
        if len(chans) != len(mats):
            raise ValueError("need one channel per cell for every UE")
        y = np.zeros(N, dtype=np.complex128)
        for S, h in zip(mats, chans):
            h = np.asarray(h, dtype=np.complex128).reshape(-1)
            if h.size != M:
                raise ValueError(f"channel length {h.size} does not match M={M}")
            y += S @ h
        z = noise_std * crandn(rng, N)
        ys.append(y + z)
        bounds.append(float(np.linalg.norm(z)))
    return MeasurementBatch(
        noise_std=float(noise_std),
        fdd_measurements=tuple(ys),
        noise_bound=np.asarray(bounds) if record_noise_bound else None,
    )


def tdd_uplink_measure(
    pilots_per_cell: Sequence[PilotSet],
    channel_blocks: Sequence[np.ndarray],
    noise_std: float,
    rng: np.random.Generator,
    record_noise_bound: bool = False,
) -> MeasurementBatch:
    """Uplink training observation Y = sum_l S_l H_l + Z at one base station.

    ``channel_blocks[l]`` holds the K_l x M channels from cell l's users to
    this base station; pilot reuse across cells is what superimposes the
    interfering blocks onto the desired one.
    """
    taus = {p.tau for p in pilots_per_cell}
    if len(taus) != 1:
        raise ValueError("all pilot sets must share the sequence length tau")
    if len(channel_blocks) != len(pilots_per_cell):
        raise ValueError("need one channel block per cell")
    tau = taus.pop()
    M = np.asarray(channel_blocks[0]).shape[1]
    Y = np.zeros((tau, M), dtype=np.complex128)
    for pilots, H in zip(pilots_per_cell, channel_blocks):
        H = np.asarray(H, dtype=np.complex128)
        if H.ndim != 2 or H.shape != (pilots.num_users, M):
            raise ValueError(
                f"channel block shape {H.shape} does not match "
                f"(K={pilots.num_users}, M={M})"
            )
        Y += pilots.matrix @ H
    Z = noise_std * crandn(rng, tau, M)
    return MeasurementBatch(
        noise_std=float(noise_std),
        tdd_measurement=Y + Z,
        noise_bound=float(np.linalg.norm(Z)) if record_noise_bound else None,
    )


# ---------------------------------------------------------------------------
# CSV serialization (reproducibility audits)
# ---------------------------------------------------------------------------


def write_complex_matrix_csv(matrix: np.ndarray, path: str | Path) -> None:
    """Write a complex matrix as rows of (row, col, re, im)."""
    matrix = np.asarray(matrix)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "col", "re", "im"])
        for (i, j), v in np.ndenumerate(matrix):
            writer.writerow([i, j, repr(float(v.real)), repr(float(v.imag))])


def read_complex_matrix_csv(path: str | Path) -> np.ndarray:
    """Read a matrix previously written by :func:`write_complex_matrix_csv`."""
    entries = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            entries.append(
                (int(rec["row"]), int(rec["col"]), float(rec["re"]), float(rec["im"]))
            )
    if not entries:
        return np.zeros((0, 0), dtype=np.complex128)
    rows = max(e[0] for e in entries) + 1
    cols = max(e[1] for e in entries) + 1
    out = np.zeros((rows, cols), dtype=np.complex128)
    for i, j, re, im in entries:
        out[i, j] = re + 1j * im
    return out
