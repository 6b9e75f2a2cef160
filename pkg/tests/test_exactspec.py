import numpy as np
import pytest

from tpqsdp import exactspec as es
from tpqsdp import operators as op

from conftest import random_hermitian


def compile_terms(terms, n=None):
    return op.compile(op.PauliSum.from_terms(terms, n=n))


class TestEigendecompose:
    def test_z(self):
        eig = es.eigendecompose(compile_terms([(1.0, "Z")]))
        np.testing.assert_allclose(eig.eigenvalues, [-1.0, 1.0])

    def test_x_eigenvectors(self):
        eig = es.eigendecompose(compile_terms([(1.0, "X")]))
        np.testing.assert_allclose(eig.eigenvalues, [-1.0, 1.0])
        for k, lam in enumerate(eig.eigenvalues):
            v = eig.eigenvectors[:, k]
            np.testing.assert_allclose(np.abs(v), [1, 1] / np.sqrt(2), atol=1e-12)

    def test_reconstruction(self, rng):
        H = random_hermitian(16, rng)
        eig = es.eigendecompose_dense(H)
        recon = (eig.eigenvectors * eig.eigenvalues) @ eig.eigenvectors.conj().T
        assert np.linalg.norm(recon - H) <= 1e-10 * np.linalg.norm(H)

    def test_dimension_cap(self):
        with pytest.raises(es.DenseLimitError):
            es.eigendecompose(op.compile(op.PauliSum.zero(13), max_qubits=14))


class TestGibbsState:
    def test_beta_zero_maximally_mixed(self):
        eig = es.eigendecompose(compile_terms([(1.0, "ZZ")]))
        g = es.gibbs_state(eig, 0.0)
        np.testing.assert_allclose(g.density_matrix(), np.eye(4) / 4, atol=1e-12)

    def test_z_analytic_expectation(self):
        z = compile_terms([(1.0, "Z")])
        g = es.gibbs_state(es.eigendecompose(z), 0.4)
        assert abs(es.gibbs_expectation(g, z) + np.tanh(0.4)) < 1e-12

    def test_large_beta_ground_projector(self, rng):
        H = random_hermitian(8, rng)
        eig = es.eigendecompose_dense(H)
        g = es.gibbs_state(eig, 50.0 / max(1e-2, eig.eigenvalues[1] - eig.eigenvalues[0]))
        ground = eig.eigenvectors[:, 0]
        fidelity = np.real(ground.conj() @ g.density_matrix() @ ground)
        assert fidelity >= 1.0 - 1e-8

    def test_shift_invariance(self, rng):
        H = random_hermitian(16, rng)
        g1 = es.gibbs_state(es.eigendecompose_dense(H), 0.7)
        g2 = es.gibbs_state(es.eigendecompose_dense(H + 3.3 * np.eye(16)), 0.7)
        np.testing.assert_allclose(g1.density_matrix(), g2.density_matrix(),
                                   atol=1e-12)

    def test_rejects_negative_beta(self):
        eig = es.eigendecompose(compile_terms([(1.0, "Z")]))
        with pytest.raises(ValueError):
            es.gibbs_state(eig, -0.1)


class TestGibbsExpectation:
    def test_maximally_mixed_traceless(self):
        z = compile_terms([(1.0, "Z")])
        g = es.gibbs_state(es.eigendecompose(z), 0.0)
        assert abs(es.gibbs_expectation(g, z)) < 1e-14

    def test_pure_state_z(self):
        # ground state of -Z is |0>, so <Z> -> 1 at large beta
        mz = compile_terms([(-1.0, "Z")])
        g = es.gibbs_state(es.eigendecompose(mz), 60.0)
        z = compile_terms([(1.0, "Z")])
        assert abs(es.gibbs_expectation(g, z) - 1.0) < 1e-10

    def test_non_hermitian_rejected(self, rng):
        import scipy.sparse as sp
        g = es.gibbs_state(es.eigendecompose(compile_terms([(1.0, "X")])), 0.5)
        bad = op.SparseOperator(1, sp.csr_matrix(
            np.array([[0.0, 1.0j], [0.0, 0.0]], dtype=complex)))
        with pytest.raises(ValueError):
            es.gibbs_expectation(g, bad)


class TestPurity:
    def test_maximally_mixed(self):
        g = es.gibbs_state(es.eigendecompose(op.compile(op.PauliSum.zero(4))), 1.0)
        assert abs(es.purity(g) - 1.0 / 16.0) < 1e-14

    def test_pure_state(self, rng):
        H = random_hermitian(8, rng)
        g = es.gibbs_state(es.eigendecompose_dense(H), 2000.0)
        assert abs(es.purity(g) - 1.0) < 1e-8

    def test_monotone_in_n_for_xxz(self):
        # fixed beta, growing chain: exponential decay trend of the purity
        purities = []
        for n in (6, 8, 10):
            ham, _, _ = op.build_xxz(n, 1.0, 0.5, np.linspace(-1, 1, n))
            norm = op.spectral_norm_estimate(op.compile(ham))
            eig = es.eigendecompose(op.compile(ham * (1.0 / norm)))
            purities.append(es.purity(es.gibbs_state(eig, 0.4)))
        assert purities[0] > purities[1] > purities[2]


class TestRelativeEntropy:
    def test_self_is_zero(self, rng):
        g = es.gibbs_state(es.eigendecompose_dense(random_hermitian(8, rng)), 0.6)
        val = es.relative_entropy(g, g)
        assert -1e-9 <= val < 1e-9

    def test_pure_vs_mixed(self):
        pure = es.GibbsState(1.0, np.array([1.0, 0.0]), np.eye(2, dtype=complex), 0.0)
        mixed = es.GibbsState(0.0, np.array([0.5, 0.5]), np.eye(2, dtype=complex),
                              np.log(2.0))
        val, clamped = es.relative_entropy(pure, mixed, return_clamped=True)
        assert abs(val - np.log(2.0)) < 1e-9
        assert clamped >= 1  # the zero eigenvalue of the pure state was floored

    def test_vs_maximally_mixed_identity(self, rng):
        H = random_hermitian(16, rng)
        eig = es.eigendecompose_dense(H)
        eta = es.gibbs_state(eig, 0.8)
        mixed = es.gibbs_state(es.eigendecompose_dense(np.zeros((16, 16))), 1.0)
        lhs = es.relative_entropy(eta, mixed)
        rhs = np.log(16.0) - es.entropy(eta)
        assert abs(lhs - rhs) < 1e-9
        assert lhs <= np.log(16.0) + 1e-9

    def test_nonnegative(self, rng):
        eig1 = es.eigendecompose_dense(random_hermitian(8, rng))
        eig2 = es.eigendecompose_dense(random_hermitian(8, rng))
        for b1, b2 in [(0.2, 0.9), (1.5, 0.1), (0.0, 2.0)]:
            val = es.relative_entropy(es.gibbs_state(eig1, b1),
                                      es.gibbs_state(eig2, b2))
            assert val >= -1e-9


class TestSpectralCondition:
    def test_zero_hamiltonian(self):
        eig = es.eigendecompose(op.compile(op.PauliSum.zero(4)))
        count, c = es.spectral_condition_count(eig, 0.1)
        assert count == 16 and c == 1.0

    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_sum_of_z_single_flips(self, n):
        terms = []
        for i in range(n):
            letters = ["I"] * n
            letters[i] = "Z"
            terms.append((1.0, "".join(letters)))
        eig = es.eigendecompose(compile_terms(terms, n=n))
        # window nu*n = 2 captures the ground state plus single spin flips
        count, c = es.spectral_condition_count(eig, 2.0 / n)
        assert count == 1 + n
        assert abs(c - (1 + n) / 2**n) < 1e-15

    def test_rejects_negative_nu(self):
        eig = es.eigendecompose(compile_terms([(1.0, "Z")]))
        with pytest.raises(ValueError):
            es.spectral_condition_count(eig, -0.1)


class TestPurityBound:
    def test_degenerate_point(self):
        assert abs(es.purity_bound(1.0, 0.0, 0.4, 8) - 2.0**-8) < 1e-18

    def test_rejects_zero_c(self):
        with pytest.raises(ValueError):
            es.purity_bound(0.0, 0.1, 0.4, 8)

    def test_rejects_nu_out_of_range(self):
        with pytest.raises(ValueError):
            es.purity_bound(0.5, np.log(2) / 0.8 + 0.1, 0.4, 8)

    def test_bound_holds_for_xxz(self):
        beta = 0.4
        nu = (1.0 - 1e-5) * np.log(2.0) / (2.0 * beta)
        ham, _, _ = op.build_xxz(8, 1.0, 0.5, np.linspace(-1.5, 1.5, 8))
        norm = op.spectral_norm_estimate(op.compile(ham))
        eig = es.eigendecompose(op.compile(ham * (1.0 / norm)))
        count, c = es.spectral_condition_count(eig, nu)
        measured = es.purity(es.gibbs_state(eig, beta))
        assert measured <= es.purity_bound(c, nu, beta, 8)


class TestFreeEnergy:
    def test_zero_hamiltonian(self):
        eig = es.eigendecompose(op.compile(op.PauliSum.zero(4)))
        assert abs(es.free_energy_purity(eig, 1.3) - 1.0 / 16.0) < 1e-12

    def test_identity_with_purity(self, rng):
        eig = es.eigendecompose_dense(random_hermitian(16, rng))
        for beta in (0.1, 0.7, 2.5):
            direct = es.purity(es.gibbs_state(eig, beta))
            assert abs(es.free_energy_purity(eig, beta) - direct) < 1e-10

    def test_free_energy_monotone(self, rng):
        eig = es.eigendecompose_dense(random_hermitian(16, rng))
        for beta in (0.2, 1.0, 3.0):
            assert es.free_energy(eig, 2 * beta) > es.free_energy(eig, beta)


class TestGue:
    def test_hermitian_by_construction(self, rng):
        h = es.sample_gue(2, rng)
        np.testing.assert_allclose(h, h.conj().T)

    def test_entry_variances(self, rng):
        N = 64
        diag_sq, off_sq = [], []
        for _ in range(40):
            h = es.sample_gue(N, rng)
            diag_sq.append(np.real(np.diag(h)) ** 2)
            iu = np.triu_indices(N, k=1)
            off_sq.append(np.abs(h[iu]) ** 2)
        diag_var = np.mean(np.concatenate(diag_sq))
        off_var = np.mean(np.concatenate(off_sq))
        assert abs(diag_var - 1.0 / N) < 0.1 / N
        assert abs(off_var - 1.0 / N) < 0.1 / N

    def test_semicircle_support(self, rng):
        lam = np.linalg.eigvalsh(es.sample_gue(512, rng))
        assert lam[0] > -2.3 and lam[-1] < 2.3

    def test_semicircle_cdf_endpoints(self):
        assert abs(es.semicircle_cdf(-2.0)) < 1e-14
        assert abs(es.semicircle_cdf(2.0) - 1.0) < 1e-14
        assert abs(es.semicircle_cdf(0.0) - 0.5) < 1e-14

    def test_cdf_matches_quadrature(self):
        # independent oracle: numerically integrate the semicircle density
        from scipy.integrate import quad
        for e in (-1.5, -0.3, 0.8, 1.9):
            val, _ = quad(lambda t: np.sqrt(4 - t**2) / (2 * np.pi), -2.0, e)
            assert abs(es.semicircle_cdf(e) - val) < 1e-10
