"""Dense spectral oracle: exact Gibbs states, purity, relative entropy,
spectral-condition counting and GUE sampling.

Everything here is the ground truth the stochastic components are tested
against, so operations stay dense and are capped at n = 12 by default.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .operators import SparseOperator

DENSE_MAX_QUBITS = 12
CLAMP_FLOOR = 1e-14


class DenseLimitError(ValueError):
    """Operator too large for the dense oracle."""


@dataclass(frozen=True)
class EigenDecomposition:
    """Ascending eigenvalues and the unitary of eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def n(self) -> int:
        return int(self.dim).bit_length() - 1

    def lambda_min(self) -> float:
        return float(self.eigenvalues[0])


@dataclass(frozen=True)
class GibbsState:
    """e^{-beta H}/Z in the eigenbasis of H.

    probs are the Boltzmann weights; log_partition is ln tr e^{-beta H}.
    """

    beta: float
    probs: np.ndarray
    eigenvectors: np.ndarray
    log_partition: float

    @property
    def dim(self) -> int:
        return self.probs.shape[0]

    def density_matrix(self) -> np.ndarray:
        V = self.eigenvectors
        return (V * self.probs) @ V.conj().T


def eigendecompose(op: SparseOperator, max_qubits: int = DENSE_MAX_QUBITS) -> EigenDecomposition:
    if op.n > max_qubits:
        raise DenseLimitError(f"n = {op.n} exceeds dense cap {max_qubits}")
    w, v = np.linalg.eigh(op.to_dense())
    return EigenDecomposition(w, v)


def eigendecompose_dense(matrix: np.ndarray) -> EigenDecomposition:
    w, v = np.linalg.eigh(matrix)
    return EigenDecomposition(w, v)


def gibbs_state(H: EigenDecomposition, beta: float) -> GibbsState:
    """Boltzmann weights computed with the minimum-eigenvalue shift."""
    if beta < 0 or not np.isfinite(beta):
        raise ValueError("beta must be finite and >= 0")
    lam = H.eigenvalues
    shifted = -beta * (lam - lam[0])
    weights = np.exp(shifted)
    Z_shift = weights.sum()
    probs = weights / Z_shift
    log_partition = float(np.log(Z_shift) - beta * lam[0])
    return GibbsState(beta, probs, H.eigenvectors, log_partition)


def gibbs_expectation(state: GibbsState, A: SparseOperator) -> float:
    """tr[rho A]; raises if the imaginary residue exceeds 1e-8."""
    if A.dim != state.dim:
        raise ValueError("dimension mismatch")
    V = state.eigenvectors
    AV = A.matrix @ V
    vals = np.einsum("ij,ij->j", V.conj(), AV)
    out = complex(np.dot(state.probs, vals))
    if abs(out.imag) > 1e-8:
        raise ValueError(f"non-Hermitian input: imaginary residue {out.imag:g}")
    return float(out.real)


def gibbs_expectations(state: GibbsState, ops: list[SparseOperator]) -> np.ndarray:
    return np.array([gibbs_expectation(state, A) for A in ops])


def purity(state: GibbsState) -> float:
    return float(np.dot(state.probs, state.probs))


def entropy(state: GibbsState) -> float:
    """Von Neumann entropy in nats."""
    p = np.clip(state.probs, CLAMP_FLOOR, None)
    return float(-np.dot(state.probs, np.log(p)))


def relative_entropy(eta: GibbsState, rho: GibbsState, return_clamped: bool = False):
    """S(eta||rho) = tr[eta(ln eta - ln rho)], eigenvalues floored at 1e-14.

    Returns the value, or (value, clamp_count) when return_clamped is set.
    """
    if eta.dim != rho.dim:
        raise ValueError("dimension mismatch")
    clamped = int(np.sum(eta.probs < CLAMP_FLOOR) + np.sum(rho.probs < CLAMP_FLOOR))
    p = np.clip(eta.probs, CLAMP_FLOOR, None)
    q = np.clip(rho.probs, CLAMP_FLOOR, None)
    term_eta = float(np.dot(eta.probs, np.log(p)))
    # tr[eta ln rho] needs the basis overlap |<v_rho,i|v_eta,j>|^2
    overlap = np.abs(rho.eigenvectors.conj().T @ eta.eigenvectors) ** 2
    term_cross = float(np.dot(np.log(q), overlap @ eta.probs))
    value = term_eta - term_cross
    if return_clamped:
        return value, clamped
    return value


def spectral_condition_count(H: EigenDecomposition, nu: float) -> tuple[int, float]:
    """Eigenvalues within [lambda_min, lambda_min + nu*n] (inclusive) and the
    fraction c = count / 2^n. The n factor follows the generic form of the
    vanishing-purity condition."""
    if nu < 0:
        raise ValueError("nu must be >= 0")
    lam = H.eigenvalues
    window = nu * H.n
    tol = 1e-12 * max(1.0, abs(window) + abs(lam[0]))
    count = int(np.sum(lam <= lam[0] + window + tol))
    return count, count / H.dim


def purity_bound(c: float, nu: float, beta: float, n: int) -> float:
    """2^{-(1 - 2 beta nu / ln 2) n} / c^2, valid for 0 <= nu < ln2/(2 beta)."""
    if not 0 < c <= 1:
        raise ValueError("need 0 < c <= 1")
    if beta > 0 and not 0 <= nu < np.log(2) / (2 * beta):
        raise ValueError("nu out of range [0, ln2/(2 beta))")
    if nu < 0:
        raise ValueError("nu out of range")
    exponent = -(1.0 - 2.0 * beta * nu / np.log(2)) * n
    return float(2.0**exponent / c**2)


def free_energy(H: EigenDecomposition, beta: float) -> float:
    if beta <= 0:
        raise ValueError("free energy needs beta > 0")
    log_Z = float(logsumexp(-beta * H.eigenvalues))
    return -log_Z / beta


def free_energy_purity(H: EigenDecomposition, beta: float) -> float:
    """e^{-2 beta (F_{2 beta} - F_beta)}; algebraically equal to the purity."""
    log_Z_b = float(logsumexp(-beta * H.eigenvalues))
    log_Z_2b = float(logsumexp(-2.0 * beta * H.eigenvalues))
    return float(np.exp(log_Z_2b - 2.0 * log_Z_b))


# ---------------------------------------------------------------------------
# GUE sampling and the semicircle law
# ---------------------------------------------------------------------------

def sample_gue(N: int, rng: np.random.Generator) -> np.ndarray:
    """GUE matrix: off-diagonals (g + i g')/sqrt(2N), diagonals g/sqrt(N)."""
    if N < 2:
        raise ValueError("N must be >= 2")
    g = rng.standard_normal((N, N))
    gp = rng.standard_normal((N, N))
    upper = np.triu((g + 1j * gp) / np.sqrt(2.0 * N), k=1)
    diag = np.diag(rng.standard_normal(N) / np.sqrt(N))
    return upper + upper.conj().T + diag


def semicircle_cdf(E) -> np.ndarray:
    """Closed-form integral of sqrt(4 - E^2)/(2 pi) from -2 to E."""
    E = np.clip(np.asarray(E, dtype=float), -2.0, 2.0)
    return E * np.sqrt(4.0 - E**2) / (4.0 * np.pi) + np.arcsin(E / 2.0) / np.pi + 0.5


def semicircle_sup_deviation(eigenvalues: np.ndarray) -> float:
    """sup_E |ECDF(E) - F_sc(E)| evaluated at the jump points."""
    lam = np.sort(np.asarray(eigenvalues, dtype=float))
    N = lam.shape[0]
    F = semicircle_cdf(lam)
    ecdf_hi = np.arange(1, N + 1) / N
    ecdf_lo = np.arange(0, N) / N
    return float(np.max(np.maximum(np.abs(ecdf_hi - F), np.abs(F - ecdf_lo))))
