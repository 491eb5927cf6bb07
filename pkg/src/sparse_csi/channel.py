"""Channel synthesis for a base station with an M-element uniform linear array.

Three channel families are produced here:

- sparse angular-domain vectors ``h = U h_a`` where ``U`` is the unitary DFT
  basis and ``h_a`` has a small support (limited local scattering);
- multipath channels built from a few steering vectors with angles of
  arrival confined to an interval, together with the induced (typically
  low-rank) spatial covariance matrix;
- multiuser channel matrices ``H = G A`` whose rank equals the number of
  distinct propagation directions.

Every sampler takes an explicit seeded ``numpy.random.Generator`` and is a
pure function of its inputs; returned objects are treated as immutable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from sparse_csi.random_utils import crandn

DEFAULT_ANTENNA_SPACING = 0.5  # element spacing in carrier wavelengths
NUMERIC_RANK_RTOL = 1e-8  # eigenvalue cutoff relative to the largest one


@dataclass(frozen=True)
class SystemGeometry:
    """Cell/user/antenna counts for a multicell deployment.

    ``antenna_spacing`` is the element spacing as a fraction of the carrier
    wavelength (0.5 = critically spaced).
    """

    L: int
    K: int
    M: int
    antenna_spacing: float = DEFAULT_ANTENNA_SPACING

    def __post_init__(self):
        if self.L < 1 or self.K < 1 or self.M < 1:
            raise ValueError("cell, user and antenna counts must be >= 1")
        if self.antenna_spacing <= 0:
            raise ValueError("antenna_spacing must be positive")


@dataclass(frozen=True)
class AngularChannel:
    """Sparse angular-domain representation of one uplink/downlink channel.

    ``coeffs`` has length M; ``support`` is exactly the set of indices with
    nonzero coefficients.
    """

    coeffs: np.ndarray
    support: frozenset[int]

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=np.complex128).reshape(-1)
        object.__setattr__(self, "coeffs", coeffs)
        actual = frozenset(np.flatnonzero(np.abs(coeffs) > 0).tolist())
        if actual != frozenset(self.support):
            raise ValueError("support must equal the indices of nonzero coeffs")
        object.__setattr__(self, "support", actual)

    @property
    def sparsity(self) -> int:
        return len(self.support)


@dataclass(frozen=True)
class MultipathChannel:
    """Finite collection of propagation paths seen by the array."""

    path_count: int
    gains: np.ndarray
    aoas: np.ndarray
    aoa_range: tuple[float, float]

    def __post_init__(self):
        gains = np.asarray(self.gains, dtype=np.complex128).reshape(-1)
        aoas = np.asarray(self.aoas, dtype=np.float64).reshape(-1)
        if self.path_count < 1:
            raise ValueError("path_count must be >= 1")
        if gains.size != self.path_count or aoas.size != self.path_count:
            raise ValueError("gains and aoas must have length path_count")
        lo, hi = self.aoa_range
        _validate_aoa_range(lo, hi)
        if np.any(aoas < lo) or np.any(aoas > hi):
            raise ValueError("every angle of arrival must lie in aoa_range")
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "aoas", aoas)
        object.__setattr__(self, "aoa_range", (float(lo), float(hi)))


@dataclass(frozen=True)
class CovarianceModel:
    """Spatial covariance induced by an angle-of-arrival interval.

    ``matrix`` is Hermitian PSD with trace M; ``numeric_rank`` counts
    eigenvalues above ``NUMERIC_RANK_RTOL`` times the largest eigenvalue.
    """

    matrix: np.ndarray
    aoa_range: tuple[float, float]
    numeric_rank: int

    def __post_init__(self):
        R = np.asarray(self.matrix, dtype=np.complex128)
        if R.ndim != 2 or R.shape[0] != R.shape[1]:
            raise ValueError("covariance matrix must be square")
        if np.max(np.abs(R - R.conj().T)) > 1e-12:
            raise ValueError("covariance matrix must be Hermitian to 1e-12")
        w = np.linalg.eigvalsh(R)
        if w[0] < -1e-10 * max(w[-1], 0.0):
            raise ValueError("covariance matrix must be positive semidefinite")
        if np.real(np.trace(R)) <= 0:
            raise ValueError("covariance trace must be positive")
        object.__setattr__(self, "matrix", R)


@dataclass(frozen=True)
class MultiUserChannelMatrix:
    """Stacked user-to-BS channels, optionally with a low-rank factorization.

    When ``gains`` (KL x r) and ``steering`` (r x M) are present they must
    reproduce ``matrix`` exactly: H = gains @ steering.
    """

    matrix: np.ndarray
    gains: np.ndarray | None = None
    steering: np.ndarray | None = None
    rank_param: int | None = None

    def __post_init__(self):
        H = np.asarray(self.matrix, dtype=np.complex128)
        if H.ndim != 2:
            raise ValueError("channel matrix must be two-dimensional")
        object.__setattr__(self, "matrix", H)
        if (self.gains is None) != (self.steering is None):
            raise ValueError("gains and steering must be supplied together")
        if self.gains is not None:
            G = np.asarray(self.gains, dtype=np.complex128)
            A = np.asarray(self.steering, dtype=np.complex128)
            r = G.shape[1]
            if self.rank_param is not None and self.rank_param != r:
                raise ValueError("rank_param disagrees with factor shapes")
            if r > min(H.shape):
                raise ValueError("factor rank exceeds min(KL, M)")
            rel = np.linalg.norm(H - G @ A) / max(np.linalg.norm(H), 1e-300)
            if rel >= 1e-12:
                raise ValueError("factorization does not reproduce the matrix")
            object.__setattr__(self, "gains", G)
            object.__setattr__(self, "steering", A)
            object.__setattr__(self, "rank_param", r)


def _validate_aoa_range(lo: float, hi: float) -> None:
    if lo > hi:
        raise ValueError(f"empty angle interval: [{lo}, {hi}]")
    if lo < -np.pi / 2 or hi > np.pi / 2:
        raise ValueError("angles of arrival must lie within [-pi/2, pi/2]")


def dft_basis(M: int) -> np.ndarray:
    """Unitary M x M DFT matrix whose columns form the angular basis.

    Column j has entries exp(-2i*pi*j*m/M)/sqrt(M) for m = 0..M-1.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    m = np.arange(M)
    return np.exp(-2j * np.pi * np.outer(m, m) / M) / np.sqrt(M)


def synthesize_angular_channel(
    M: int, s: int, rng: np.random.Generator
) -> AngularChannel:
    """Draw an s-sparse angular vector with unit-variance complex normal entries.

    The support is uniform over all size-s subsets of {0..M-1}.
    """
    if not 0 <= s <= M:
        raise ValueError(f"sparsity s={s} must satisfy 0 <= s <= M={M}")
    coeffs = np.zeros(M, dtype=np.complex128)
    support = rng.choice(M, size=s, replace=False) if s else np.empty(0, dtype=int)
    coeffs[support] = crandn(rng, s)
    return AngularChannel(coeffs=coeffs, support=frozenset(int(i) for i in support))


def to_dense(ch: AngularChannel) -> np.ndarray:
    """Map an angular-domain channel to antenna space: h = U @ coeffs."""
    return dft_basis(ch.coeffs.size) @ ch.coeffs


def synthesize_common_support_group(
    M: int, K: int, s: int, s_common: int, rng: np.random.Generator
) -> list[AngularChannel]:
    """Draw K angular channels sharing a common support of size ``s_common``.

    One shared index set is drawn once; each user receives ``s - s_common``
    additional private indices, disjoint from the shared set and from every
    other user's private indices. The intersection of all K supports
    therefore contains the shared set.
    """
    if not 0 <= s_common <= s <= M:
        raise ValueError("need 0 <= s_common <= s <= M")
    if K < 1:
        raise ValueError("K must be >= 1")
    total = s_common + K * (s - s_common)
    if total > M:
        raise ValueError(
            f"infeasible sizes: K*(s - s_common) + s_common = {total} > M = {M}"
        )
    picks = rng.choice(M, size=total, replace=False)
    shared = picks[:s_common]
    private = picks[s_common:].reshape(K, s - s_common) if s > s_common else None
    channels = []
    for k in range(K):
        idx = shared if private is None else np.concatenate([shared, private[k]])
        coeffs = np.zeros(M, dtype=np.complex128)
        coeffs[idx] = crandn(rng, idx.size)
        channels.append(
            AngularChannel(coeffs=coeffs, support=frozenset(int(i) for i in idx))
        )
    return channels


def steering_vector(
    theta: float, M: int, spacing: float = DEFAULT_ANTENNA_SPACING
) -> np.ndarray:
    """Array response a(theta) of the uniform linear array.

    Entry m is exp(-2i*pi*spacing*m*sin(theta)); the phase reference is
    element 0 and ||a||^2 = M. Angles are restricted to the front
    half-plane so that sin(theta) is injective.
    """
    if not -np.pi / 2 <= theta <= np.pi / 2:
        raise ValueError("theta must lie in [-pi/2, pi/2]")
    m = np.arange(M)
    return np.exp(-2j * np.pi * spacing * m * np.sin(theta))


def synthesize_multipath_channel(
    P: int,
    aoa_range: tuple[float, float],
    M: int,
    spacing: float = DEFAULT_ANTENNA_SPACING,
    rng: np.random.Generator | None = None,
) -> tuple[MultipathChannel, np.ndarray]:
    """Draw a P-path channel with uniform angles and complex normal gains.

    Returns the path description together with the dense channel
    h = (1/sqrt(P)) * sum_p gains[p] * a(aoas[p]); the 1/sqrt(P) scaling
    keeps E||h||^2 = M regardless of the path count.
    """
    if rng is None:
        raise ValueError("an explicit seeded rng is required")
    if P < 1:
        raise ValueError("path count must be >= 1")
    lo, hi = aoa_range
    _validate_aoa_range(lo, hi)
    gains = crandn(rng, P)
    aoas = rng.uniform(lo, hi, size=P) if hi > lo else np.full(P, float(lo))
    steering = np.stack([steering_vector(t, M, spacing) for t in aoas])
    h = (gains @ steering) / np.sqrt(P)
    model = MultipathChannel(
        path_count=P, gains=gains, aoas=aoas, aoa_range=(float(lo), float(hi))
    )
    return model, h


def covariance_from_aoa_range(
    aoa_range: tuple[float, float],
    M: int,
    spacing: float = DEFAULT_ANTENNA_SPACING,
    grid_points: int = 512,
) -> CovarianceModel:
    """Spatial covariance of a channel whose AoAs are uniform on an interval.

    The covariance is the average of a(theta) a(theta)^H over a uniform
    grid of the interval, trace-normalized to M so that per-antenna power
    is one. Its numeric rank grows with the interval width, which is what
    makes narrow scattering exploitable by covariance-aware estimators.
    """
    lo, hi = aoa_range
    _validate_aoa_range(lo, hi)
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    thetas = np.linspace(lo, hi, grid_points) if hi > lo else np.full(2, float(lo))
    A = np.stack([steering_vector(t, M, spacing) for t in thetas])
    R = A.T @ A.conj() / A.shape[0]
    R = (R + R.conj().T) / 2.0
    R *= M / np.real(np.trace(R))
    w = np.linalg.eigvalsh(R)
    rank = int(np.count_nonzero(w > NUMERIC_RANK_RTOL * w[-1]))
    return CovarianceModel(
        matrix=R, aoa_range=(float(lo), float(hi)), numeric_rank=rank
    )


def synthesize_lowrank_multiuser(
    KL: int,
    M: int,
    r: int,
    aoas: Sequence[float],
    rng: np.random.Generator,
    spacing: float = DEFAULT_ANTENNA_SPACING,
) -> MultiUserChannelMatrix:
    """Rank-r multiuser channel H = G A with steering-vector row space.

    G is KL x r with i.i.d. unit-variance complex normal entries; row i of
    A is the transposed steering vector of ``aoas[i]`` scaled by 1/sqrt(M),
    so that A A^H converges to the identity as the array grows. With
    distinct angles, H has rank exactly r with probability one.
    """
    aoas = np.asarray(aoas, dtype=np.float64).reshape(-1)
    if aoas.size != r:
        raise ValueError("need exactly r angles")
    if r > min(KL, M):
        raise ValueError("rank r must not exceed min(KL, M)")
    if np.unique(np.sin(aoas)).size != r:
        raise ValueError("angles of arrival must be distinct")
    A = np.stack([steering_vector(t, M, spacing) for t in aoas]) / np.sqrt(M)
    G = crandn(rng, KL, r)
    return MultiUserChannelMatrix(matrix=G @ A, gains=G, steering=A, rank_param=r)
