import numpy as np
import pytest

from sparse_csi import training as tr
from sparse_csi.channel import dft_basis, synthesize_angular_channel, to_dense
from sparse_csi.random_utils import crandn


def rng(seed=0):
    return np.random.default_rng(seed)


class TestOrthogonalPilots:
    def test_single_sequence(self):
        S = tr.make_orthogonal_pilots(1, 1)
        assert np.allclose(S.matrix, [[1.0]])

    def test_square_is_unitary(self):
        S = tr.make_orthogonal_pilots(8, 8)
        G = S.gram()
        assert np.linalg.norm(G - np.eye(8)) < 1e-12

    def test_too_many_users_rejected(self):
        with pytest.raises(ValueError):
            tr.make_orthogonal_pilots(4, 5)


class TestWbePilots:
    @pytest.mark.parametrize("tau,K", [(2, 4), (3, 6), (4, 12), (8, 24)])
    def test_tight_frame_identity(self, tau, K):
        S = tr.make_wbe_pilots(tau, K)
        lhs = S.matrix @ S.matrix.conj().T
        assert np.linalg.norm(lhs - (K / tau) * np.eye(tau)) < 1e-10

    def test_square_case_is_orthonormal(self):
        S = tr.make_wbe_pilots(5, 5)
        assert np.linalg.norm(S.matrix @ S.matrix.conj().T - np.eye(5)) < 1e-12

    def test_three_in_two_dimensions_equal_frame_potential(self):
        # Mercedes-Benz-style frame: every sequence sees the same
        # sum of squared correlations against the whole set.
        S = tr.make_wbe_pilots(2, 3)
        G = np.abs(S.gram()) ** 2
        potentials = G.sum(axis=0)
        assert np.allclose(potentials, potentials[0], atol=1e-10)

    def test_undersized_rejected(self):
        with pytest.raises(ValueError):
            tr.make_wbe_pilots(3, 2)

    def test_deterministic(self):
        a = tr.make_wbe_pilots(4, 9)
        b = tr.make_wbe_pilots(4, 9)
        assert np.array_equal(a.matrix, b.matrix)

    def test_unit_norm_columns(self):
        S = tr.make_wbe_pilots(6, 14)
        assert np.allclose(np.linalg.norm(S.matrix, axis=0), 1.0, atol=1e-12)


class TestGwbePilots:
    def test_equal_powers_reduce_to_wbe_identity(self):
        tau, K = 3, 7
        S = tr.make_gwbe_pilots(tau, K, np.ones(K))
        lhs = S.matrix @ S.matrix.conj().T
        assert np.linalg.norm(lhs - (K / tau) * np.eye(tau)) < 1e-8

    def test_infeasible_profile_rejected_with_reason(self):
        with pytest.raises(ValueError, match="powers\\[2\\]"):
            tr.make_gwbe_pilots(2, 3, [1.0, 1.0, 2.0])

    def test_weighted_identity_for_sinr_power_pattern(self):
        # powers proportional to g/(1+g) for targets {1/3, 1, 3}
        gammas = np.array([1 / 3] * 4 + [1.0] * 4 + [3.0] * 4)
        powers = gammas / (1 + gammas)
        tau = 4
        S = tr.make_gwbe_pilots(tau, 12, powers)
        lhs = S.matrix @ np.diag(powers) @ S.matrix.conj().T
        target = powers.sum() / tau * np.eye(tau)
        assert np.linalg.norm(lhs - target) < 1e-8
        assert np.allclose(S.powers, powers)


class TestFosPilots:
    def test_injective_assignment_is_orthogonal(self):
        S = tr.make_fos_pilots(4, 3, [0, 1, 2])
        G = S.gram()
        assert np.allclose(G, np.eye(3))

    def test_round_robin_sharing(self):
        S = tr.make_fos_pilots(4, 12)
        G = np.abs(S.gram())
        # every sequence shared by exactly 3 users
        assert np.all(np.isin(np.round(G, 12), [0.0, 1.0]))
        assert np.all(G.sum(axis=0) == 3)

    def test_degenerate_single_sequence(self):
        S = tr.make_fos_pilots(1, 3)
        assert np.all(np.abs(S.gram()) == 1.0)

    def test_bad_assignment_rejected(self):
        with pytest.raises(ValueError):
            tr.make_fos_pilots(2, 3, [0, 1, 2])


class TestTrainingMatrices:
    def test_gaussian_shape(self):
        S = tr.make_gaussian_training(60, 100, rng())
        assert S.matrix.shape == (60, 100)
        assert S.kind is tr.TrainingKind.GAUSSIAN

    def test_gaussian_column_energy_concentrates(self):
        S = tr.make_gaussian_training(100, 400, rng(1))
        energies = np.linalg.norm(S.matrix, axis=0) ** 2
        assert 0.9 <= energies.mean() <= 1.1

    def test_gaussian_deterministic(self):
        a = tr.make_gaussian_training(10, 20, rng(5))
        b = tr.make_gaussian_training(10, 20, rng(5))
        assert np.array_equal(a.matrix, b.matrix)

    def test_toeplitz_single_row(self):
        S = tr.make_toeplitz_training(1, 6, rng())
        assert S.matrix.shape == (1, 6)

    def test_toeplitz_distinct_values(self):
        S = tr.make_toeplitz_training(4, 4, rng(2))
        assert len(set(S.matrix.flatten().tolist())) <= 7

    def test_toeplitz_constant_diagonals(self):
        S = tr.make_toeplitz_training(5, 8, rng(3)).matrix
        for off in range(-4, 8):
            d = np.diagonal(S, offset=off)
            assert np.all(d == d[0])

    def test_orthonormal_rows(self):
        S = tr.make_orthonormal_rows_training(6, 10, rng())
        P = S.matrix @ S.matrix.conj().T
        assert np.linalg.norm(P - np.eye(6)) < 1e-12


class TestFddMeasure:
    def test_single_cell_noiseless(self):
        S = tr.make_gaussian_training(8, 16, rng())
        h = crandn(rng(1), 16)
        batch = tr.fdd_downlink_measure([S], [[h]], 0.0, rng(2))
        assert np.allclose(batch.fdd_measurements[0], S.matrix @ h)

    def test_identical_training_yields_composite_channel(self):
        S = tr.make_gaussian_training(10, 12, rng())
        hs = [crandn(rng(k), 12) for k in range(3)]
        batch = tr.fdd_downlink_measure([S, S, S], [hs], 0.0, rng(4))
        assert np.allclose(batch.fdd_measurements[0], S.matrix @ sum(hs))

    def test_noise_second_moment(self):
        # E||z||^2 = N * noise_std^2 = 0.6, sampled within +-5%
        S = tr.make_gaussian_training(60, 4, rng())
        h = np.zeros(4, dtype=complex)
        r = rng(7)
        total = 0.0
        n = 10_000
        for _ in range(n):
            batch = tr.fdd_downlink_measure([S], [[h]], 0.1, r)
            total += np.linalg.norm(batch.fdd_measurements[0]) ** 2
        assert 0.57 <= total / n <= 0.63

    def test_linearity(self):
        S = tr.make_gaussian_training(6, 9, rng())
        h = crandn(rng(1), 9)
        y1 = tr.fdd_downlink_measure([S], [[h]], 0.0, rng(0)).fdd_measurements[0]
        y2 = tr.fdd_downlink_measure([S], [[3 * h]], 0.0, rng(0)).fdd_measurements[0]
        assert np.allclose(y2, 3 * y1)

    def test_records_realized_noise_norm(self):
        S = tr.make_gaussian_training(6, 9, rng())
        h = crandn(rng(1), 9)
        batch = tr.fdd_downlink_measure(
            [S], [[h], [h]], 0.5, rng(3), record_noise_bound=True
        )
        assert batch.noise_bound.shape == (2,)
        assert np.all(batch.noise_bound >= 0)

    def test_dimension_mismatch_rejected(self):
        S = tr.make_gaussian_training(6, 9, rng())
        with pytest.raises(ValueError):
            tr.fdd_downlink_measure([S], [[crandn(rng(1), 5)]], 0.0, rng())


class TestTddMeasure:
    def test_orthogonal_single_cell_inversion(self):
        pilots = tr.make_orthogonal_pilots(8, 4)
        H = crandn(rng(1), 4, 16)
        batch = tr.tdd_uplink_measure([pilots], [H], 0.0, rng(2))
        recovered = pilots.matrix.conj().T @ batch.tdd_measurement
        assert np.allclose(recovered, H)

    def test_reuse_gives_contaminated_sum(self):
        pilots = tr.make_orthogonal_pilots(4, 4)
        H1 = crandn(rng(1), 4, 8)
        H2 = crandn(rng(2), 4, 8)
        batch = tr.tdd_uplink_measure([pilots, pilots], [H1, H2], 0.0, rng(3))
        recovered = pilots.matrix.conj().T @ batch.tdd_measurement
        assert np.allclose(recovered, H1 + H2)

    def test_shape_contract(self):
        pilots = tr.make_orthogonal_pilots(8, 4)
        H = crandn(rng(1), 4, 16)
        batch = tr.tdd_uplink_measure([pilots], [H], 0.1, rng(2))
        assert batch.tdd_measurement.shape == (8, 16)

    def test_determinism(self):
        pilots = tr.make_orthogonal_pilots(4, 2)
        H = crandn(rng(1), 2, 6)
        a = tr.tdd_uplink_measure([pilots], [H], 0.3, rng(11))
        b = tr.tdd_uplink_measure([pilots], [H], 0.3, rng(11))
        assert np.array_equal(a.tdd_measurement, b.tdd_measurement)

    def test_block_shape_mismatch_rejected(self):
        pilots = tr.make_orthogonal_pilots(4, 2)
        with pytest.raises(ValueError):
            tr.tdd_uplink_measure([pilots], [crandn(rng(1), 3, 6)], 0.0, rng())


class TestMeasurementBatchInvariants:
    def test_exactly_one_payload(self):
        with pytest.raises(ValueError):
            tr.MeasurementBatch(noise_std=0.0)
        with pytest.raises(ValueError):
            tr.MeasurementBatch(
                noise_std=0.0,
                fdd_measurements=(np.zeros(2),),
                tdd_measurement=np.zeros((2, 2)),
            )


class TestSerialization:
    def test_round_trip_pilots(self, tmp_path):
        S = tr.make_wbe_pilots(3, 6)
        path = tmp_path / "pilots.csv"
        tr.write_complex_matrix_csv(S.matrix, path)
        back = tr.read_complex_matrix_csv(path)
        assert np.array_equal(back, S.matrix)

    def test_round_trip_training(self, tmp_path):
        S = tr.make_toeplitz_training(5, 7, rng(9))
        path = tmp_path / "training.csv"
        tr.write_complex_matrix_csv(S.matrix, path)
        back = tr.read_complex_matrix_csv(path)
        assert np.array_equal(back, S.matrix)


@pytest.mark.slow
def test_toeplitz_matches_gaussian_recovery_rate():
    """Sparse-recovery success parity between Toeplitz and Gaussian training.

    Plain l1 at (M=100, s=10, N=60), 200 paired trials; the structured
    matrix should be within 10 percentage points of the Gaussian one.
    """
    from sparse_csi.recovery import RecoveryConfig, weighted_l1_recover

    M, s, N, trials = 100, 10, 60, 200
    U = dft_basis(M)
    cfg = RecoveryConfig(epsilon=0.0)
    wins = {"gaussian": 0, "toeplitz": 0}
    for t in range(trials):
        r = rng(1000 + t)
        ch = synthesize_angular_channel(M, s, r)
        h = to_dense(ch)
        for name, maker in (
            ("gaussian", tr.make_gaussian_training),
            ("toeplitz", tr.make_toeplitz_training),
        ):
            S = maker(N, M, r)
            y = S.matrix @ h
            rep = weighted_l1_recover(y, S, U, cfg)
            if np.linalg.norm(rep.estimate - ch.coeffs) <= 1e-4:
                wins[name] += 1
    gap = abs(wins["gaussian"] - wins["toeplitz"]) / trials
    assert gap <= 0.10, wins
