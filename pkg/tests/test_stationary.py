import numpy as np
import numpy.testing as npt
import pytest

from graphcov import (
    CovarianceMatrix,
    GraphFilter,
    InvalidInputError,
    SnapshotMatrix,
    build_shift,
    cycle_graph,
    frequency_response,
    generate_signals,
    load_snapshots_csv,
    ma_b_from_h,
    path_graph,
    power_spectrum_from_cov,
    sample_covariance,
    save_snapshots_csv,
    sensor_graph,
    stationarity_score,
    true_covariance,
)


@pytest.fixture
def path2():
    return build_shift(path_graph(2), "laplacian")


class TestCovarianceType:
    def test_rejects_non_hermitian(self):
        with pytest.raises(InvalidInputError):
            CovarianceMatrix(np.array([[1.0, 2.0], [0.0, 1.0]]), kind="true")

    def test_rejects_indefinite(self):
        with pytest.raises(InvalidInputError):
            CovarianceMatrix(np.array([[1.0, 0.0], [0.0, -1.0]]), kind="true")

    def test_rejects_unknown_kind(self):
        with pytest.raises(InvalidInputError):
            CovarianceMatrix(np.eye(2), kind="estimated")


class TestTrueCovariance:
    def test_identity_filter(self, path2):
        npt.assert_allclose(true_covariance(path2, GraphFilter([1.0])).matrix, np.eye(2))

    def test_pure_shift_gives_s_squared(self, path2):
        cov = true_covariance(path2, GraphFilter([0.0, 1.0]))
        npt.assert_allclose(cov.matrix, path2.matrix @ path2.matrix)

    def test_path2_one_plus_shift(self, path2):
        cov = true_covariance(path2, GraphFilter([1.0, 1.0]))
        npt.assert_allclose(cov.matrix, [[5, -4], [-4, 5]])

    def test_matches_shift_polynomial(self):
        # H H^T is also sum_k b_k S^k with b from the squared filter polynomial
        s = build_shift(sensor_graph(12, seed=3), "laplacian")
        h = GraphFilter([0.8, 0.3, -0.1])
        b = ma_b_from_h(h)
        expected = sum(bk * pk for bk, pk in zip(b, s.powers(b.size)))
        npt.assert_allclose(true_covariance(s, h).matrix, expected, atol=1e-8)


class TestGenerateSignals:
    def test_deterministic(self, path2):
        h = GraphFilter([1.0, 0.5])
        a = generate_signals(path2, h, 10, seed=42)
        b = generate_signals(path2, h, 10, seed=42)
        npt.assert_array_equal(a, b)

    def test_zero_filter(self, path2):
        out = generate_signals(path2, GraphFilter([0.0]), 5, seed=0)
        npt.assert_array_equal(out, np.zeros((2, 5)))

    def test_white_noise_converges_to_identity(self):
        s = build_shift(sensor_graph(20, seed=0), "laplacian")
        x = generate_signals(s, GraphFilter([1.0]), 50000, seed=123)
        r_hat = sample_covariance(x).matrix
        assert np.abs(r_hat - np.eye(20)).max() < 0.1


class TestSampleCovariance:
    def test_single_column(self):
        y = np.array([[1.0], [2.0]])
        npt.assert_allclose(sample_covariance(y).matrix, [[1, 2], [2, 4]])

    def test_repeated_column(self):
        y = np.array([[1.0, 1.0], [0.0, 0.0]])
        npt.assert_allclose(sample_covariance(y).matrix, [[1, 0], [0, 0]])

    def test_orthogonal_columns(self):
        y = np.eye(2)
        npt.assert_allclose(sample_covariance(y).matrix, np.eye(2) / 2)

    def test_demean(self):
        y = np.array([[1.0, 3.0], [2.0, 2.0]])
        cov = sample_covariance(y, demean=True)
        npt.assert_allclose(cov.matrix, [[1, 0], [0, 0]])
        assert cov.n_snapshots == 2

    def test_consistency_rate(self):
        # squared covariance error shrinks like 1/N_s (within a factor of 2)
        s = build_shift(cycle_graph(10), "adjacency")
        h = GraphFilter([1.0, 0.5])
        r_true = true_covariance(s, h).matrix
        err = {}
        for n_s in (100, 1000, 10000):
            total = 0.0
            for trial in range(20):
                x = generate_signals(s, h, n_s, seed=1000 * trial + n_s)
                total += np.linalg.norm(sample_covariance(x).matrix - r_true) ** 2
            err[n_s] = total / 20
        assert 5.0 < err[100] / err[1000] < 20.0
        assert 5.0 < err[1000] / err[10000] < 20.0


class TestPowerSpectrum:
    def test_identity_cov(self):
        basis = build_shift(cycle_graph(6), "adjacency").basis()
        cov = CovarianceMatrix(np.eye(6), kind="true")
        npt.assert_allclose(power_spectrum_from_cov(basis, cov), np.ones(6), atol=1e-12)

    def test_recovers_diagonal(self):
        basis = build_shift(sensor_graph(9, seed=2), "laplacian").basis()
        q = np.arange(1.0, 10.0)
        cov = CovarianceMatrix((basis.eigvecs * q) @ basis.eigvecs.conj().T, kind="true")
        npt.assert_allclose(power_spectrum_from_cov(basis, cov), q, atol=1e-10)

    def test_matches_squared_response(self):
        s = build_shift(sensor_graph(11, seed=5), "laplacian")
        basis = s.basis()
        h = GraphFilter([1.0, -0.4, 0.2])
        p = power_spectrum_from_cov(basis, true_covariance(s, h))
        npt.assert_allclose(p, np.abs(frequency_response(basis.eigvals, h)) ** 2, atol=1e-8)


class TestStationarityScore:
    def test_stationary_is_one(self):
        basis = build_shift(sensor_graph(8, seed=1), "laplacian").basis()
        p = np.linspace(0.5, 2.0, 8)
        cov = CovarianceMatrix((basis.eigvecs * p) @ basis.eigvecs.conj().T, kind="true")
        assert stationarity_score(basis, cov) > 1 - 1e-10

    def test_off_diagonal_energy_lowers_score(self):
        basis = build_shift(sensor_graph(8, seed=1), "laplacian").basis()
        u = basis.eigvecs
        r = np.outer(u[:, 0], u[:, 1]) + np.outer(u[:, 1], u[:, 0]) + 2 * np.eye(8)
        assert stationarity_score(basis, CovarianceMatrix(r, kind="true")) < 1.0

    def test_all_ones_on_complete_graph(self):
        # J = N u1 u1^T with u1 the constant vector of the complete-graph Laplacian
        from graphcov import Graph

        edges = tuple((i, j, 1.0) for i in range(4) for j in range(i + 1, 4))
        basis = build_shift(Graph(4, edges), "laplacian").basis()
        score = stationarity_score(basis, CovarianceMatrix(np.ones((4, 4)), kind="true"))
        assert score > 1 - 1e-10

    def test_zero_matrix(self):
        basis = build_shift(path_graph(2), "laplacian").basis()
        assert stationarity_score(basis, CovarianceMatrix(np.zeros((2, 2)), kind="true")) == 1.0

    def test_filtering_preserves_stationarity(self):
        rng = np.random.default_rng(11)
        s = build_shift(sensor_graph(10, seed=8), "laplacian")
        basis = s.basis()
        p = rng.random(10) + 0.2
        r = (basis.eigvecs * p) @ basis.eigvecs.conj().T
        for _ in range(5):
            from graphcov import filter_matrix

            h_mat = filter_matrix(s, GraphFilter(rng.standard_normal(3)))
            filtered = h_mat @ r @ h_mat.T
            score = stationarity_score(basis, CovarianceMatrix(filtered, kind="true"))
            assert score > 1 - 1e-8


class TestSnapshotCsv:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(4)
        snaps = SnapshotMatrix(rng.standard_normal((3, 7)), (0, 2, 5))
        path = tmp_path / "snaps.csv"
        save_snapshots_csv(path, snaps)
        loaded = load_snapshots_csv(path)
        assert loaded.node_indices == (0, 2, 5)
        npt.assert_array_equal(loaded.data, snaps.data)

    def test_header_layout(self, tmp_path):
        snaps = SnapshotMatrix(np.zeros((2, 3)), (1, 4))
        path = tmp_path / "snaps.csv"
        save_snapshots_csv(path, snaps)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "node_1,node_4"
        assert len(lines) == 4  # header + one row per snapshot

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(InvalidInputError):
            load_snapshots_csv(path)
