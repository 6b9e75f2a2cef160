import numpy as np
import pytest
import scipy.sparse as sp

from tpqsdp import exactspec as es
from tpqsdp import krylov as kr
from tpqsdp import operators as op

from conftest import random_unit_vector


def dense_expmv(H_dense, beta, v):
    w, V = np.linalg.eigh(H_dense)
    return (V * np.exp(-0.5 * beta * w)) @ (V.conj().T @ v)


def sparse_from_dense(mat):
    n = int(np.log2(mat.shape[0]))
    return op.SparseOperator(n, sp.csr_matrix(mat))


class TestLanczosExpmv:
    def test_beta_zero_identity(self, rng):
        ham, _, _ = op.build_xxz(4, 1.0, 0.5, [0.1, -0.2, 0.3, 0.0])
        v = random_unit_vector(16, rng)
        w, norm = kr.lanczos_expmv(op.compile(ham), 0.0, v)
        np.testing.assert_allclose(w, v)
        assert norm == 1.0

    def test_diagonal_analytic(self):
        H = sparse_from_dense(np.diag([0.0, 1.0]).astype(complex))
        v = np.array([1.0, 1.0]) / np.sqrt(2.0)
        w, norm = kr.lanczos_expmv(H, 2.0, v)
        expected = np.array([1.0, np.exp(-1.0)]) / np.sqrt(2.0)
        np.testing.assert_allclose(norm * w, expected, atol=1e-12)

    def test_xxz_matches_dense(self, rng):
        ham, _, _ = op.build_xxz(10, 1.0, 0.5, np.linspace(-1, 1, 10))
        H = op.compile(ham)
        H = H * (1.0 / op.spectral_norm_estimate(H))
        v = random_unit_vector(1024, rng)
        w, norm = kr.lanczos_expmv(H, 2.0, v)
        exact = dense_expmv(H.to_dense(), 2.0, v)
        assert np.linalg.norm(norm * w - exact) / np.linalg.norm(exact) <= 1e-8

    def test_rejects_unnormalized_input(self):
        H = sparse_from_dense(np.diag([0.0, 1.0]).astype(complex))
        with pytest.raises(ValueError):
            kr.lanczos_expmv(H, 1.0, np.array([1.0, 1.0]))

    def test_nonconvergence_reports_residual(self, rng):
        ham, _, _ = op.build_xxz(8, 1.0, 0.5, np.linspace(-1, 1, 8))
        H = op.compile(ham)
        v = random_unit_vector(256, rng)
        with pytest.raises(kr.KrylovConvergenceError) as err:
            kr.lanczos_expmv(H, 40.0, v, kr.KrylovConfig(max_dim=4, tol=1e-12))
        assert err.value.residual > 0

    def test_shift_invariance(self, rng):
        ham, _, _ = op.build_xxz(6, 1.0, 0.5, np.linspace(-0.5, 0.5, 6))
        H = op.compile(ham)
        H = H * (1.0 / op.spectral_norm_estimate(H))
        v = random_unit_vector(64, rng)
        beta, c = 1.5, 0.37
        w1, n1 = kr.lanczos_expmv(H, beta, v)
        w2, n2 = kr.lanczos_expmv(H.shifted(c), beta, v)
        # e^{-beta(H+c)/2} v = e^{-beta c/2} e^{-beta H/2} v
        np.testing.assert_allclose(n2 * w2, np.exp(-0.5 * beta * c) * n1 * w1,
                                   atol=1e-9)

    def test_semigroup(self, rng):
        ham, _, _ = op.build_xxz(6, 1.0, 0.5, np.linspace(-0.5, 0.5, 6))
        H = op.compile(ham)
        H = H * (1.0 / op.spectral_norm_estimate(H))
        v = random_unit_vector(64, rng)
        b1, b2 = 0.8, 1.7
        w12, n12 = kr.lanczos_expmv(H, b1 + b2, v)
        wa, na = kr.lanczos_expmv(H, b2, v)
        wb, nb = kr.lanczos_expmv(H, b1, wa)
        np.testing.assert_allclose(na * nb * wb, n12 * w12, atol=1e-7)

    def test_tridiagonal_symmetric_and_ritz_interlace(self, rng):
        from scipy.linalg import eigh_tridiagonal
        ham, _, _ = op.build_xxz(6, 1.0, 0.5, np.linspace(-1, 1, 6))
        H = op.compile(ham)
        H = H * (1.0 / op.spectral_norm_estimate(H))
        v = random_unit_vector(64, rng)
        prev_min = np.inf
        for V, alphas, betas, _b, breakdown in kr._lanczos_basis(H, v, 20):
            # orthonormal basis to the stated tolerance
            G = V.conj().T @ V
            np.testing.assert_allclose(G, np.eye(G.shape[0]), atol=1e-12)
            if len(alphas) >= 2:
                theta = eigh_tridiagonal(alphas, betas, eigvals_only=True)
                assert theta[0] <= prev_min + 1e-12
                prev_min = theta[0]
            else:
                prev_min = alphas[0]
            if breakdown:
                break


class TestGroundEnergy:
    def test_z_two_by_two(self):
        z = op.compile(op.PauliSum.from_terms([(1.0, "Z")]))
        assert abs(kr.smallest_ritz_value(z) + 1.0) < 1e-10

    def test_hubbard_2x2_matches_dense(self):
        ham, _, _ = op.build_hubbard_spinless(op.LatticeSpec(2, 2), 1.0, 0.5, 1.2)
        H = op.compile(ham)
        H = H * (1.0 / op.spectral_norm_estimate(H))
        exact = es.eigendecompose(H).eigenvalues[0]
        assert abs(kr.smallest_ritz_value(H) - exact) < 1e-6

    def test_margin_and_bounds(self, rng):
        ham, _, _ = op.build_xxz(8, 1.0, 0.5, np.linspace(-1, 1, 8))
        H = op.compile(ham)
        H = H * (1.0 / (op.spectral_norm_estimate(H) * 1.5))  # keep away from -1
        exact = es.eigendecompose(H).eigenvalues[0]
        beta_total = 50.0
        xi = kr.ground_energy_estimate(H, beta_total=beta_total)
        assert xi <= exact + 1e-6
        assert xi >= exact - 1.0 / (2.0 * beta_total)

    def test_clamp_fires_for_norm_saturating(self):
        z = op.compile(op.PauliSum.from_terms([(1.0, "Z")]))
        assert kr.ground_energy_estimate(z, beta_total=100.0) == 0.0

    def test_no_clamp_for_interior_spectrum(self):
        z = op.compile(op.PauliSum.from_terms([(0.5, "Z")]))
        xi = kr.ground_energy_estimate(z, beta_total=100.0)
        assert xi != 0.0 and abs(xi + 0.5) < 1e-3
