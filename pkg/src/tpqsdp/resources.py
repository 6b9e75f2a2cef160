"""Complexity and probability calculators: copy counts, OR-test acceptance
probabilities via an exact binomial model, gap amplification, query-count
formulas and formula-level Toffoli/qubit estimates.

All closed-form costs are evaluated with explicit constants set to 1 and are
labeled order-of-magnitude; the binomial acceptance model is exact given the
eigenvalue-discrimination polynomial.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

from .operators import LatticeSpec
from .polyqet import eigenvalue_step_poly, qet_mu

OR_DELTA = 1.0 / 184.0
OR_ZETA = 1.0 / 32.0


def copies_required(xi: float, m: int, delta: float) -> int:
    """x = ceil((8/xi^2) ln((m+1)/delta)) TPQ copies for the majority vote."""
    if not 0 < xi <= 1:
        raise ValueError("xi must lie in (0, 1]")
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    if m < 0:
        raise ValueError("m must be >= 0")
    value = 8.0 / xi**2 * np.log((m + 1) / delta)
    if value <= 0:
        warnings.warn("degenerate copy count (delta >= m+1)", stacklevel=2)
        return 0
    return int(np.ceil(value))


@dataclass(frozen=True)
class OrGapReport:
    P1: float
    P2: float
    gap: float
    delta: float
    zeta: float
    m: int
    purity_term: float

    @property
    def applicable(self) -> bool:
        return self.gap > 0


def or_lemma_probabilities(delta: float, zeta: float, m: int,
                           purity_term: float) -> OrGapReport:
    """Acceptance bounds of the fast OR test with the constraint projectors:
    P1 = (1 - 3 delta/(m+1) - purity_term)^2 / 4 - zeta in the broken case,
    P2 = 10 delta + 5 (m+1) purity_term + zeta in the satisfied case."""
    P1 = (1.0 - 3.0 * delta / (m + 1) - purity_term) ** 2 / 4.0 - zeta
    P2 = 10.0 * delta + 5.0 * (m + 1) * purity_term + zeta
    return OrGapReport(P1=float(P1), P2=float(P2), gap=float(P1 - P2),
                       delta=delta, zeta=zeta, m=m, purity_term=purity_term)


@dataclass(frozen=True)
class ThresholdStructure:
    """Cut points of the majority-vote eigenvalue discrimination.

    The shifted constraints satisfy tr[rho A_j] <= 1/2 + eps/4 when the
    constraint holds, and reach 1/2 + eps/4 + xi in the broken case (the
    eps_gap = xi convention). The discrimination polynomial rejects below
    1/2 + eps/4 and accepts above 1/2 + eps/4 + xi/2, with per-side failure
    delta/(m+1).
    """

    epsilon: float
    xi: float
    delta: float
    m: int

    @property
    def case_ii_threshold(self) -> float:
        return 0.5 + self.epsilon / 4.0

    @property
    def case_i_threshold(self) -> float:
        return 0.5 + self.epsilon / 4.0 + self.xi

    @property
    def reject_end(self) -> float:
        return 0.5 + self.epsilon / 4.0

    @property
    def accept_start(self) -> float:
        return 0.5 + self.epsilon / 4.0 + self.xi / 2.0

    @property
    def delta_prime(self) -> float:
        return self.delta / (self.m + 1)

    def step_poly(self):
        return eigenvalue_step_poly(self.reject_end, self.accept_start,
                                    self.delta_prime)


def or_acceptance_binomial(p_true: float, x: int, thresholds: ThresholdStructure,
                           step=None) -> float:
    """Exact acceptance probability sum_k Binom(x, p_true, k) * S(k/x)^2.

    S is the eigenvalue-discrimination polynomial on the majority-vote
    operator, whose eigenvalues are k/x; modeling the vote register
    diagonally is mathematically identical to the multi-copy circuit at
    any x.
    """
    if not 0.0 <= p_true <= 1.0:
        raise ValueError("p_true must lie in [0, 1]")
    if x < 1:
        raise ValueError("x must be >= 1")
    if step is None:
        step = thresholds.step_poly()
    k = np.arange(x + 1)
    pmf = binom.pmf(k, x, p_true)
    live = pmf > 1e-18
    vals = np.asarray(step(k[live] / x), dtype=float)
    return float(np.sum(pmf[live] * vals**2))


@dataclass(frozen=True)
class OrRepetitions:
    K: int
    log2m: int

    @property
    def total(self) -> int:
        return self.K * self.log2m


def or_repetitions(gap: float, log2m: int, delta_tilde: float) -> OrRepetitions:
    """K = ceil(2 ln(log2m / delta_tilde) / gap^2) majority repetitions and
    the total K * log2m including the binary search over constraint subsets.
    The 2/gap^2 Chernoff constant is made explicit."""
    if gap <= 0:
        raise ValueError("gap must be > 0")
    if log2m < 1:
        raise ValueError("log2m must be >= 1")
    value = 2.0 * np.log(log2m / delta_tilde) / gap**2
    if value <= 0:
        warnings.warn("degenerate repetition count (delta_tilde >= log2m)",
                      stacklevel=2)
        return OrRepetitions(K=0, log2m=log2m)
    return OrRepetitions(K=int(np.ceil(value)), log2m=log2m)


# ---------------------------------------------------------------------------
# Query-count and gate formulas (constants set to 1)
# ---------------------------------------------------------------------------

def tpq_prep_gates_generic(N: float, xi: float) -> float:
    """(N ln N)^{1/2} / xi^{1/2} * ln(N/xi): per-preparation gate count with
    amplitude amplification, generic purity decay."""
    return np.sqrt(N * np.log(N) / xi) * np.log(N / xi)


def tpq_prep_gates_spectral(N: float, epsilon: float, xi: float) -> float:
    """(N ln^2 N)^{1/4} / eps^{1/2} * ln(N/xi): the spectral-condition variant."""
    return (N * np.log(N) ** 2) ** 0.25 / np.sqrt(epsilon) * np.log(N / xi)


@dataclass(frozen=True)
class ComplexityReport:
    N: int
    m: int
    epsilon: float
    xi: float
    delta_tilde: float
    spectral_condition: bool
    T: int
    beta_max: float
    qet_degree: int
    amplification_rounds: float
    copies_x: int
    or_gap: float
    or_repetitions_K: int
    or_repetitions_total: int
    tpq_prep_gates: float
    queries_A_per_check: float
    total_block_encoding_queries: float
    qubit_estimate: int


def complexity_report(N: int, m: int, epsilon: float, xi: float | None = None,
                      delta_tilde: float = 0.01, spectral_condition: bool = False,
                      block_costs: tuple[float, float] = (1.0, 1.0)
                      ) -> ComplexityReport:
    """Evaluate the end-to-end cost formulas at the given problem shape.

    xi defaults to epsilon (the total-complexity convention). block_costs
    are the per-query gate costs (T_K, T_A) of the two block encodings.
    """
    if xi is None:
        xi = epsilon
    n = int(np.log2(N))
    if 2**n != N:
        raise ValueError("N must be a power of two")
    T = int(np.ceil(8.0 / epsilon**2 * np.log(N)))
    beta_max = 2.0 * np.log(N) / epsilon
    mu = qet_mu(n, xi)
    qet_degree = int(np.ceil(np.sqrt(beta_max) * np.log(1.0 / mu)))
    if spectral_condition:
        rounds = (N * np.log(N) ** 2) ** 0.25
        prep = tpq_prep_gates_spectral(N, epsilon, xi) * block_costs[0]
    else:
        rounds = np.sqrt(N)
        prep = tpq_prep_gates_generic(N, xi) * block_costs[0]

    x = copies_required(xi, m, OR_DELTA)
    gap_report = or_lemma_probabilities(OR_DELTA, OR_ZETA, m, 0.0)
    log2m = max(1, int(np.ceil(np.log2(max(m, 2)))))
    reps = or_repetitions(gap_report.gap, log2m, delta_tilde)

    queries_A = (np.sqrt(m) / xi**2 * np.log(max(m, 2)) ** 2
                 * (np.log(max(np.log(max(m, 2)), 2.0)) + np.log(1.0 / delta_tilde)))
    queries_K_per_iter = x * reps.total * rounds * qet_degree
    total_queries = T * (queries_K_per_iter + queries_A)
    qubits = n + int(np.ceil(np.log2(m + 1))) + 3
    return ComplexityReport(
        N=N, m=m, epsilon=epsilon, xi=xi, delta_tilde=delta_tilde,
        spectral_condition=spectral_condition, T=T, beta_max=float(beta_max),
        qet_degree=qet_degree, amplification_rounds=float(rounds), copies_x=x,
        or_gap=gap_report.gap, or_repetitions_K=reps.K,
        or_repetitions_total=reps.total, tpq_prep_gates=float(prep),
        queries_A_per_check=float(queries_A),
        total_block_encoding_queries=float(total_queries),
        qubit_estimate=qubits)


@dataclass(frozen=True)
class ToffoliEstimate:
    """ORDER-OF-MAGNITUDE Toffoli/qubit estimate; compilation constants are
    set to 1, so only coarse comparisons are meaningful."""

    mode: str
    gates: float
    qubits: int
    composite_degree: float
    per_query_toffoli: float
    amplification_rounds: float


def toffoli_estimate(spec: LatticeSpec, epsilon: float,
                     mode: str = "proof_of_concept") -> ToffoliEstimate:
    """Formula-level resources of one TPQ preparation for the Hubbard model.

    Cost = composite polynomial degree x LCU select/prepare Toffolis, times
    sqrt(N) amplification rounds in 'amplified' mode. Qubits are system +
    LCU address + QET/flag ancillas.
    """
    if mode not in ("amplified", "proof_of_concept"):
        raise ValueError("mode must be 'amplified' or 'proof_of_concept'")
    n = spec.n_sites
    N = 2.0**n
    edges = len(spec.edges())
    pauli_strings = n + 3 * edges
    beta = 2.0 * n * np.log(2.0) / epsilon
    mu = qet_mu(n, epsilon)
    deg_exp = np.sqrt(beta / 2.0) * np.log(1.0 / mu)
    zeta = np.log(1.0 / (1.0 - mu)) / beta
    deg_sign = 4.0 * beta * np.log(1.0 / zeta)
    composite = deg_exp * (deg_sign + 1.0)
    address = int(np.ceil(np.log2(pauli_strings)))
    per_query = pauli_strings * address + 2.0 ** (address + 1)
    gates = composite * per_query
    qubits = n + address + 3
    rounds = 1.0
    if mode == "amplified":
        rounds = np.sqrt(N)
        gates *= rounds
        qubits += 2
    return ToffoliEstimate(mode=mode, gates=float(gates), qubits=qubits,
                           composite_degree=float(composite),
                           per_query_toffoli=float(per_query),
                           amplification_rounds=float(rounds))
