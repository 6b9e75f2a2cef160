"""The SDP engine: problem rescaling, the zero-sum multiplicative-weights
loop with exact-Gibbs or TPQ constraint checking, feasibility verdicts, and
the binary-search optimization wrapper.

The weight matrix is exp(-sum_j theta_j A_j); the solver maintains the
exponent as a sparse running sum and factorizes it as beta^tau = tau eps/4
times H^tau = sum_j (4/(tau eps)) theta_j A_j, which has norm <= 1 because
the theta weights sum to beta^tau.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import exactspec
from .operators import (OperatorError, PauliSum, SparseOperator, compile,
                        dump_pauli_sum, load_pauli_sum, spectral_norm_estimate)
from .tpq import EnsembleConfig, estimate_expectations

_SHUFFLE_DOMAIN = 1


class SolverError(RuntimeError):
    """Backend failure inside the solver loop."""


@dataclass(frozen=True)
class Constraint:
    op: SparseOperator
    bound: float
    label: str = ""


@dataclass
class SdpProblem:
    """tr[A_j rho] <= b_j + epsilon over density matrices, optional objective."""

    n: int
    constraints: list[Constraint]
    epsilon: float
    objective: SparseOperator | None = None
    R: float = 1.0

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        for c in self.constraints:
            if not -1.0 <= c.bound <= 1.0:
                raise ValueError(f"bound {c.bound} outside [-1, 1]")
            if c.op.n != self.n:
                raise ValueError("constraint qubit count mismatch")

    def validate_norms(self, slack: float = 1e-10):
        for i, c in enumerate(self.constraints):
            norm = spectral_norm_estimate(c.op)
            if norm > 1.0 + slack:
                raise ValueError(f"constraint {i} norm {norm} exceeds 1")

    @property
    def m(self) -> int:
        return len(self.constraints)

    @property
    def dim(self) -> int:
        return 2**self.n


@dataclass
class TraceRow:
    tau: int
    beta: float
    violated_index: int  # -1 when no constraint was violated
    max_violation: float
    rel_entropy: float   # nan when not recorded at this step
    seconds: float


@dataclass
class SolverTrace:
    rows: list[TraceRow] = field(default_factory=list)

    def append(self, row: TraceRow):
        self.rows.append(row)

    def __len__(self):
        return len(self.rows)

    def max_violations(self) -> np.ndarray:
        return np.array([r.max_violation for r in self.rows])

    def rel_entropies(self) -> np.ndarray:
        return np.array([r.rel_entropy for r in self.rows])


@dataclass(frozen=True)
class Verdict:
    kind: str                 # "feasible" | "infeasible"
    tau_halt: int
    theta: np.ndarray
    trace: SolverTrace
    weight_exponent: SparseOperator  # sum_j theta_j A_j at halt
    final_exact_violation: float = np.nan

    @property
    def feasible(self) -> bool:
        return self.kind == "feasible"

    def hamiltonian(self) -> tuple[SparseOperator, float]:
        """(H^tau, beta^tau) at the halting step."""
        beta = float(np.sum(self.theta))
        if beta == 0.0:
            return self.weight_exponent, 0.0
        return self.weight_exponent * (1.0 / beta), beta


@dataclass
class ExactMonitor:
    """Dense-oracle instrumentation of a run.

    Every `stride` steps the monitor computes exact Gibbs violations (and,
    when target data is supplied, the relative entropy to the target as
    -S(eta) + sum_j theta_j tr[eta A_j] + ln Z(theta)). With
    stop_when_feasible it halts the run once the exact max violation is
    within epsilon, reproducing the paper-style stopping rule while the
    updates themselves stay TPQ-driven.
    """

    stride: int = 10
    stop_when_feasible: bool = False
    target_entropy: float | None = None
    target_expectations: np.ndarray | None = None
    history: list[tuple[int, float, float]] = field(default_factory=list)

    def check(self, problem: SdpProblem, theta: np.ndarray,
              weight_sum: SparseOperator, tau: int) -> tuple[float, float]:
        eig = exactspec.eigendecompose_dense(weight_sum.to_dense())
        state = exactspec.gibbs_state(eig, 1.0)
        vals = exactspec.gibbs_expectations(state, [c.op for c in problem.constraints])
        bounds = np.array([c.bound for c in problem.constraints])
        max_violation = float(np.max(vals - bounds))
        rel_entropy = np.nan
        if self.target_entropy is not None and self.target_expectations is not None:
            log_Z = state.log_partition
            rel_entropy = float(-self.target_entropy
                                + np.dot(theta, self.target_expectations) + log_Z)
        self.history.append((tau, max_violation, rel_entropy))
        return max_violation, rel_entropy


def iteration_budget(epsilon: float, N: int) -> int:
    """T = ceil(8/eps^2 ln N)."""
    if not 0 < epsilon:
        raise ValueError("epsilon must be > 0")
    if N < 2:
        raise ValueError("N must be >= 2")
    return int(np.ceil(8.0 / epsilon**2 * np.log(N)))


def hamiltonian_from_theta(problem: SdpProblem, theta: np.ndarray,
                           tau: int) -> tuple[SparseOperator, float]:
    """H^tau = (4/(tau eps)) sum_j theta_j A_j and beta^tau = tau eps / 4."""
    if tau < 1:
        raise ValueError("tau must be >= 1 (tau = 0 is the maximally mixed start)")
    beta = tau * problem.epsilon / 4.0
    acc = sp.csr_matrix((problem.dim, problem.dim), dtype=complex)
    for th, c in zip(theta, problem.constraints):
        if th != 0.0:
            acc = acc + th * c.op.matrix
    return SparseOperator(problem.n, (acc * (1.0 / beta)).tocsr()), beta


def find_broken_constraint(problem: SdpProblem, expectations: np.ndarray,
                           rng: np.random.Generator) -> int | None:
    """First violated index in a per-call shuffled order, None if all hold."""
    order = rng.permutation(problem.m)
    eps = problem.epsilon
    for j in order:
        if expectations[j] > problem.constraints[j].bound + eps:
            return int(j)
    return None


def _exact_expectations(problem: SdpProblem, weight_sum: SparseOperator) -> np.ndarray:
    eig = exactspec.eigendecompose_dense(weight_sum.to_dense())
    state = exactspec.gibbs_state(eig, 1.0)
    return exactspec.gibbs_expectations(state, [c.op for c in problem.constraints])


def zero_sum_solve(problem: SdpProblem, backend="exact",
                   hooks: ExactMonitor | None = None, seed: int = 0,
                   max_iterations: int | None = None) -> Verdict:
    """Zero-sum MMW loop.

    backend is the string "exact" or an EnsembleConfig for TPQ estimates.
    On a violation at step tau the weight of the violated constraint grows
    by eps/4; the loop halts "feasible" when no violation is found and
    "infeasible" once tau exceeds the iteration budget.
    """
    use_tpq = isinstance(backend, EnsembleConfig)
    if not use_tpq and backend != "exact":
        raise ValueError("backend must be 'exact' or an EnsembleConfig")
    T = iteration_budget(problem.epsilon, problem.dim)
    if max_iterations is not None:
        T = min(T, max_iterations)
    eps = problem.epsilon
    m = problem.m
    bounds = np.array([c.bound for c in problem.constraints])
    ops = [c.op for c in problem.constraints]
    beta_total = T * eps / 4.0

    theta = np.zeros(m)
    weight_sum = SparseOperator(
        problem.n, sp.csr_matrix((problem.dim, problem.dim), dtype=complex))
    trace = SolverTrace()
    final_exact = np.nan

    for tau in range(T + 1):
        t0 = time.perf_counter()
        beta_tau = tau * eps / 4.0
        try:
            if use_tpq:
                if tau == 0:
                    H_tau = weight_sum  # zero operator, beta 0
                else:
                    H_tau = weight_sum * (1.0 / beta_tau)
                est = estimate_expectations(H_tau, beta_tau, ops, backend,
                                            tag=tau, beta_total=beta_total)
                expectations = est.values
            else:
                if tau == 0:
                    diag = np.concatenate([A.matrix.diagonal() for A in ops])
                    expectations = np.real(
                        diag.reshape(m, problem.dim).sum(axis=1)) / problem.dim
                else:
                    expectations = _exact_expectations(problem, weight_sum)
        except (FloatingPointError, RuntimeError) as exc:
            raise SolverError(f"backend failure at tau={tau}: {exc}") from exc

        rel_entropy = np.nan
        stop_exact = False
        if hooks is not None and hooks.stride > 0 and tau % hooks.stride == 0:
            exact_violation, rel_entropy = hooks.check(problem, theta, weight_sum, tau)
            final_exact = exact_violation
            if hooks.stop_when_feasible and exact_violation <= eps:
                stop_exact = True

        rng_tau = np.random.default_rng(
            np.random.SeedSequence(entropy=(seed, _SHUFFLE_DOMAIN, tau)))
        j_star = None if stop_exact else find_broken_constraint(
            problem, expectations, rng_tau)
        max_violation = float(np.max(expectations - bounds))
        trace.append(TraceRow(
            tau=tau, beta=beta_tau,
            violated_index=-1 if j_star is None else j_star,
            max_violation=max_violation, rel_entropy=rel_entropy,
            seconds=time.perf_counter() - t0))

        if j_star is None:
            if hooks is not None and not stop_exact and hooks.stride > 0:
                final_exact, _ = hooks.check(problem, theta, weight_sum, tau)
            return Verdict("feasible", tau, theta.copy(), trace, weight_sum,
                           final_exact_violation=final_exact)
        theta[j_star] += eps / 4.0
        weight_sum = weight_sum + (eps / 4.0) * ops[j_star]

    return Verdict("infeasible", T, theta.copy(), trace, weight_sum,
                   final_exact_violation=final_exact)


def rescale_problem(raw: SdpProblem, R: float) -> SdpProblem:
    """Trace rescaling by R plus the one-extra-qubit dimension extension.

    Constraints become zero-padded direct sums on n+1 qubits (same nonzero
    spectrum), bounds map to b_j / R and the tolerance to eps / R, so the
    variable is a unit-trace density matrix storing X / R in its top block.
    """
    if R <= 0:
        raise ValueError("R must be > 0")
    pad = sp.csr_matrix(np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex))

    def extend(op: SparseOperator) -> SparseOperator:
        return SparseOperator(op.n + 1, sp.kron(pad, op.matrix, format="csr"))

    constraints = [Constraint(extend(c.op), c.bound / R, c.label)
                   for c in raw.constraints]
    objective = extend(raw.objective) if raw.objective is not None else None
    return SdpProblem(raw.n + 1, constraints, raw.epsilon / R, objective, R=R)


def binary_search_optimize(problem: SdpProblem, backend="exact", seed: int = 0,
                           hooks_factory=None) -> tuple[float, Verdict | None]:
    """Maximize tr[C rho] by bisecting on the guess a0 with the extra
    constraint tr[-C rho] <= -a0 (+ eps), using ceil(log2(1/eps)) feasibility
    calls. Returns (a0, witness verdict of the last feasible call)."""
    if problem.objective is None:
        raise ValueError("problem has no objective")
    eps = problem.epsilon
    steps = int(np.ceil(np.log2(1.0 / eps)))
    lo, hi = -1.0, 1.0
    witness = None
    for k in range(steps):
        a0 = 0.5 * (lo + hi)
        obj_constraint = Constraint((-1.0) * problem.objective, -a0, "objective")
        sub = SdpProblem(problem.n, [obj_constraint] + list(problem.constraints),
                         eps, objective=None, R=problem.R)
        hooks = hooks_factory() if hooks_factory is not None else None
        verdict = zero_sum_solve(sub, backend=backend, hooks=hooks,
                                 seed=seed + k)
        if verdict.feasible:
            lo = a0
            witness = verdict
        else:
            hi = a0
    return lo, witness


# ---------------------------------------------------------------------------
# Problem files: structured text with operator file references
# ---------------------------------------------------------------------------

def save_problem(problem: SdpProblem, path: str | Path, pauli_sums: list[PauliSum],
                 objective_sum: PauliSum | None = None):
    """Write a problem file plus one operator file per constraint.

    pauli_sums must align with problem.constraints; operator files land in
    '<stem>_ops/' next to the problem file.
    """
    path = Path(path)
    opdir = path.parent / f"{path.stem}_ops"
    opdir.mkdir(parents=True, exist_ok=True)
    lines = [f"n {problem.n}", f"epsilon {problem.epsilon!r}", f"R {problem.R!r}"]
    for i, (c, ps) in enumerate(zip(problem.constraints, pauli_sums)):
        opfile = opdir / f"a{i}.txt"
        opfile.write_text(dump_pauli_sum(ps))
        rel = opfile.relative_to(path.parent)
        lines.append(f"constraint {c.bound!r} {rel}")
    if objective_sum is not None:
        opfile = opdir / "objective.txt"
        opfile.write_text(dump_pauli_sum(objective_sum))
        lines.append(f"objective {opfile.relative_to(path.parent)}")
    path.write_text("\n".join(lines) + "\n")


def load_problem(path: str | Path) -> SdpProblem:
    path = Path(path)
    n = None
    epsilon = None
    R = 1.0
    constraints: list[Constraint] = []
    objective = None
    for raw in path.read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, rest = line.partition(" ")
        if key == "n":
            n = int(rest)
        elif key == "epsilon":
            epsilon = float(rest)
        elif key == "R":
            R = float(rest)
        elif key == "constraint":
            bound_str, _, opref = rest.partition(" ")
            ps = load_pauli_sum((path.parent / opref.strip()).read_text(), n=n)
            constraints.append(Constraint(compile(ps), float(bound_str),
                                          label=opref.strip()))
        elif key == "objective":
            ps = load_pauli_sum((path.parent / rest.strip()).read_text(), n=n)
            objective = compile(ps)
        else:
            raise OperatorError(f"unknown problem-file key {key!r}")
    if n is None or epsilon is None:
        raise OperatorError("problem file must set n and epsilon")
    return SdpProblem(n, constraints, epsilon, objective=objective, R=R)
