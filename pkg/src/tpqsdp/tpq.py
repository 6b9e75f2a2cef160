"""Thermal pure quantum states e^{-beta H/2} U|0>/norm and median-of-means
expectation estimation, with empirical validation helpers for the
mean-squared-error bound.

Ensemble members draw per-sample seeds from (seed, tag, sample_index), so
estimates are bitwise identical for any degree of parallelism.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import exactspec
from .clifford import random_stabilizer_state
from .krylov import KrylovConfig, lanczos_expmv, ground_energy_estimate
from .operators import SparseOperator
from .polyqet import exp_poly, qet_mu, qet_tpq_state

BACKENDS = ("exact", "krylov", "qet")


@dataclass(frozen=True)
class EnsembleConfig:
    """Median-of-means ensemble: batches x samples_per_batch TPQ states.

    The 3 x 25 default mirrors the Hamiltonian-learning experiments.
    """

    batches: int = 3
    samples_per_batch: int = 25
    backend: str = "krylov"
    xi: float = 0.05
    seed: int = 0
    threads: int = 1
    krylov: KrylovConfig = field(default_factory=KrylovConfig)

    def __post_init__(self):
        if self.batches < 1 or self.batches % 2 == 0:
            raise ValueError("batches must be odd so the median is well-defined")
        if self.samples_per_batch < 1:
            raise ValueError("samples_per_batch must be >= 1")
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}")

    @property
    def total_samples(self) -> int:
        return self.batches * self.samples_per_batch


@dataclass(frozen=True)
class TpqEstimate:
    """Per-observable median of batch means."""

    values: np.ndarray        # (m,)
    batch_means: np.ndarray   # (m, batches)
    samples: int


_SAMPLE_DOMAIN = 0  # distinguishes TPQ sampling from other seeded streams


def _sample_rng(seed: int, tag: int, index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=(seed, _SAMPLE_DOMAIN, tag, index)))


def prepare_tpq(H: SparseOperator, beta: float, cfg: EnsembleConfig,
                sample_index: int, tag: int = 0,
                beta_total: float | None = None) -> np.ndarray:
    """One TPQ state e^{-beta H/2} u / norm with u a fresh random stabilizer
    state drawn from (cfg.seed, tag, sample_index)."""
    rng = _sample_rng(cfg.seed, tag, sample_index)
    u = random_stabilizer_state(H.n, rng)
    if beta == 0.0:
        return u
    if cfg.backend == "krylov":
        state, _ = lanczos_expmv(H, beta, u, cfg.krylov)
        return state
    if cfg.backend == "exact":
        eig = exactspec.eigendecompose(H)
        prop = _eigen_propagator(eig, beta)
        w = prop @ u
        return w / np.linalg.norm(w)
    bt = beta_total if beta_total is not None else max(beta, 1.0)
    Xi = ground_energy_estimate(H, cfg.krylov, beta_total=bt)
    state, _ = qet_tpq_state(H, beta, Xi, cfg.xi, u)
    return state


def _eigen_propagator(eig: exactspec.EigenDecomposition, beta: float) -> np.ndarray:
    """Dense e^{-beta H/2} with the spectrum shifted so the largest entry is 1."""
    lam = eig.eigenvalues
    w = np.exp(-0.5 * beta * (lam - lam[0]))
    return (eig.eigenvectors * w) @ eig.eigenvectors.conj().T


def _stabilizer_batch(n: int, cfg: EnsembleConfig, tag: int, count: int) -> np.ndarray:
    """(N, count) matrix of independent stabilizer states."""
    N = 2**n
    out = np.empty((N, count), dtype=complex)

    def fill(i):
        out[:, i] = random_stabilizer_state(n, _sample_rng(cfg.seed, tag, i))

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            list(pool.map(fill, range(count)))
    else:
        for i in range(count):
            fill(i)
    return out


def tpq_state_batch(H: SparseOperator, beta: float, cfg: EnsembleConfig,
                    tag: int = 0, beta_total: float | None = None) -> np.ndarray:
    """All ensemble states as columns of an (N, total_samples) matrix."""
    count = cfg.total_samples
    U = _stabilizer_batch(H.n, cfg, tag, count)
    if beta == 0.0:
        return U
    if cfg.backend == "exact":
        prop = _eigen_propagator(exactspec.eigendecompose(H), beta)
        W = prop @ U
        return W / np.linalg.norm(W, axis=0)
    if cfg.backend == "qet":
        bt = beta_total if beta_total is not None else max(beta, 1.0)
        Xi = ground_energy_estimate(H, cfg.krylov, beta_total=bt)
        poly = exp_poly(beta / 2.0, qet_mu(H.n, cfg.xi))
        out = np.empty_like(U)
        for i in range(count):
            out[:, i], _ = qet_tpq_state(H, beta, Xi, cfg.xi, U[:, i], poly=poly)
        return out
    out = np.empty_like(U)

    def evolve(i):
        out[:, i], _ = lanczos_expmv(H, beta, U[:, i], cfg.krylov)

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            list(pool.map(evolve, range(count)))
    else:
        for i in range(count):
            evolve(i)
    return out


def batch_expectations(states: np.ndarray, observables: list[SparseOperator]) -> np.ndarray:
    """(m, n_states) matrix of <psi|A_j|psi> real parts."""
    m = len(observables)
    vals = np.empty((m, states.shape[1]))
    for j, A in enumerate(observables):
        vals[j] = np.real(np.einsum("ik,ik->k", states.conj(), A.matrix @ states))
    return vals


def estimate_expectations(H: SparseOperator, beta: float,
                          observables: list[SparseOperator],
                          cfg: EnsembleConfig, tag: int = 0,
                          beta_total: float | None = None) -> TpqEstimate:
    """Median-of-means estimate of tr[rho_beta A_j] for every observable."""
    states = tpq_state_batch(H, beta, cfg, tag=tag, beta_total=beta_total)
    vals = batch_expectations(states, observables)
    per_batch = vals.reshape(len(observables), cfg.batches, cfg.samples_per_batch)
    batch_means = per_batch.mean(axis=2)
    values = np.median(batch_means, axis=1)
    return TpqEstimate(values=values, batch_means=batch_means,
                       samples=cfg.total_samples)


# ---------------------------------------------------------------------------
# Error statistics against the dense oracle
# ---------------------------------------------------------------------------

MSE_BOUND_COEFF = 105.0 / 2.0


@dataclass(frozen=True)
class TpqErrorStats:
    """Single-sample TPQ errors versus exact Gibbs expectations."""

    errors: np.ndarray        # (trials, m) signed errors
    exact_values: np.ndarray  # (m,)
    purity: float
    trials: int

    @property
    def mse(self) -> np.ndarray:
        return np.mean(self.errors**2, axis=0)

    @property
    def mse_stderr(self) -> np.ndarray:
        return np.std(self.errors**2, axis=0, ddof=1) / np.sqrt(self.trials)

    @property
    def bound(self) -> float:
        """(105/2) sqrt(purity), the leading mean-squared-error bound."""
        return MSE_BOUND_COEFF * np.sqrt(self.purity)

    def tail_frequency(self, xi: float) -> np.ndarray:
        return np.mean(np.abs(self.errors) >= xi, axis=0)


def tpq_error_stats(H: SparseOperator, beta: float,
                    observables: list[SparseOperator],
                    trials: int, seed: int = 0) -> TpqErrorStats:
    """Empirical distribution of single-sample TPQ expectation errors.

    Uses the dense eigenbasis propagator, so it needs n small enough for
    the exact oracle.
    """
    eig = exactspec.eigendecompose(H)
    gibbs = exactspec.gibbs_state(eig, beta)
    exact_vals = exactspec.gibbs_expectations(gibbs, observables)

    N = H.dim
    U = np.empty((N, trials), dtype=complex)
    for i in range(trials):
        U[:, i] = random_stabilizer_state(H.n, _sample_rng(seed, 0, i))
    if beta > 0:
        W = _eigen_propagator(eig, beta) @ U
        W /= np.linalg.norm(W, axis=0)
    else:
        W = U
    vals = batch_expectations(W, observables)  # (m, trials)
    errors = vals.T - exact_vals[None, :]
    return TpqErrorStats(errors=errors, exact_values=exact_vals,
                         purity=exactspec.purity(gibbs), trials=trials)
