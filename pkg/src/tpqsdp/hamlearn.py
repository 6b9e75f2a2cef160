"""Hamiltonian-learning instances: target Gibbs expectations as constraint
bounds, the solver pipeline, and the learning metrics (parameter MSE, max
multiplicative error, relative-entropy trace).

Two-sided constraints b_j - eps <= tr[O_j rho] <= b_j + eps are encoded as
the pair (O_j, b_j), (-O_j, -b_j); the learned coefficient of term j is the
net signed weight (theta+_j - theta-_j) / beta_target, the unique linear
identification of the solver's Gibbs exponent with beta_target * H_theta.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import exactspec
from .mmw import Constraint, ExactMonitor, SdpProblem, Verdict, zero_sum_solve
from .operators import (LatticeSpec, PauliSum, SparseOperator,
                        build_hubbard_spinless, build_xxz, compile)
from .tpq import EnsembleConfig


@dataclass(frozen=True)
class LearningInstance:
    model: str
    model_params: dict
    n: int
    beta_target: float
    epsilon: float
    seed: int
    operator_sums: list[PauliSum]
    operators: list[SparseOperator]
    target_params: np.ndarray
    b: np.ndarray
    target_entropy: float
    target_purity: float

    @property
    def m(self) -> int:
        return len(self.operators)

    @property
    def purity_over_eps_sq(self) -> float:
        """TPQ-feasibility figure of merit; success needs this to stay small."""
        return self.target_purity / self.epsilon**2

    def problem(self) -> SdpProblem:
        """One-sided constraint pairs: (O_j, b_j) at index 2j and
        (-O_j, -b_j) at index 2j+1."""
        constraints = []
        for j, (op, bj) in enumerate(zip(self.operators, self.b)):
            constraints.append(Constraint(op, float(bj), f"+O{j}"))
            constraints.append(Constraint(-op, float(-bj), f"-O{j}"))
        return SdpProblem(self.n, constraints, self.epsilon)

    def monitor(self, stride: int = 10, stop_when_feasible: bool = True) -> ExactMonitor:
        # tr[eta A] for the pair layout: +b_j then -b_j
        target_expect = np.empty(2 * self.m)
        target_expect[0::2] = self.b
        target_expect[1::2] = -self.b
        return ExactMonitor(stride=stride, stop_when_feasible=stop_when_feasible,
                            target_entropy=self.target_entropy,
                            target_expectations=target_expect)


@dataclass(frozen=True)
class LearningMetrics:
    theta_hat: np.ndarray
    mse: float
    max_multiplicative_error: float
    rel_entropy_history: list[tuple[int, float]]
    final_exact_violation: float


def _build_model(model: str, model_params: dict, seed: int):
    """Returns (ham, operator sums, target params, n, resolved params)."""
    params = dict(model_params)
    if model == "hubbard":
        spec = LatticeSpec(int(params.get("nx", 2)), int(params.get("ny", 2)))
        mu = float(params.get("mu", 1.0))
        w = float(params.get("w", 0.5))
        u = float(params.get("u", 1.2))
        ham, ops, target = build_hubbard_spinless(spec, mu, w, u)
        resolved = {"nx": spec.nx, "ny": spec.ny, "mu": mu, "w": w, "u": u}
        return ham, ops, target, spec.n_sites, resolved
    if model == "xxz":
        n = int(params.get("n", 10))
        J = float(params.get("J", 1.0))
        Delta = float(params.get("Delta", 0.5))
        h = params.get("h")
        if h is None:
            rng = np.random.default_rng(np.random.SeedSequence(entropy=(seed, 3)))
            h = rng.uniform(-2.0, 2.0, n)
        h = [float(v) for v in np.atleast_1d(h)]
        ham, ops, target = build_xxz(n, J, Delta, h)
        resolved = {"n": n, "J": J, "Delta": Delta, "h": h}
        return ham, ops, target, n, resolved
    raise ValueError(f"unknown model {model!r}")


def make_instance(model: str, beta_target: float, epsilon: float, seed: int = 0,
                  **model_params) -> LearningInstance:
    """Exact target expectations b_j = tr[rho_target O_j] from the dense oracle."""
    ham, op_sums, target, n, resolved = _build_model(model, model_params, seed)
    ops = [compile(s) for s in op_sums]
    if ham.is_zero():
        # zero Hamiltonian: infinite-temperature target regardless of beta
        N = 2**n
        b = np.array([float(np.real(A.matrix.diagonal().sum())) / N for A in ops])
        entropy = float(n * np.log(2.0))
        pur = 1.0 / N
    else:
        eig = exactspec.eigendecompose(compile(ham))
        gibbs = exactspec.gibbs_state(eig, beta_target)
        b = exactspec.gibbs_expectations(gibbs, ops)
        entropy = exactspec.entropy(gibbs)
        pur = exactspec.purity(gibbs)
    return LearningInstance(
        model=model, model_params=resolved, n=n, beta_target=beta_target,
        epsilon=epsilon, seed=seed, operator_sums=op_sums, operators=ops,
        target_params=np.asarray(target, dtype=float), b=b,
        target_entropy=entropy, target_purity=pur)


def recover_parameters(verdict: Verdict, instance: LearningInstance) -> LearningMetrics:
    """theta_hat_j = (theta+_j - theta-_j) / beta_target, plus error metrics."""
    if not verdict.feasible:
        raise ValueError("cannot recover parameters from an infeasible verdict")
    theta = verdict.theta
    theta_hat = (theta[0::2] - theta[1::2]) / instance.beta_target
    diff = theta_hat - instance.target_params
    mse = float(np.mean(diff**2))
    nonzero = np.abs(instance.target_params) > 1e-9
    if np.any(nonzero):
        mme = float(np.max(np.abs(diff[nonzero]) / np.abs(instance.target_params[nonzero])))
    else:
        mme = float("nan")
    history = [(r.tau, r.rel_entropy) for r in verdict.trace.rows
               if np.isfinite(r.rel_entropy)]
    return LearningMetrics(theta_hat=theta_hat, mse=mse,
                           max_multiplicative_error=mme,
                           rel_entropy_history=history,
                           final_exact_violation=verdict.final_exact_violation)


def run_learning(instance: LearningInstance, backend="exact",
                 seed: int = 0, stride: int = 10,
                 stop_when_exact_feasible: bool = True,
                 max_iterations: int | None = None
                 ) -> tuple[Verdict, LearningMetrics]:
    """Full pipeline: solve the feasibility problem and recover parameters.

    The relative entropy S(rho_target || rho_tau) is recorded every `stride`
    steps via the dense oracle, matching the experiment split where updates
    are TPQ-driven but plotted errors are exact.
    """
    problem = instance.problem()
    monitor = instance.monitor(stride=stride,
                               stop_when_feasible=stop_when_exact_feasible)
    verdict = zero_sum_solve(problem, backend=backend, hooks=monitor, seed=seed,
                             max_iterations=max_iterations)
    metrics = recover_parameters(verdict, instance) if verdict.feasible else None
    if metrics is None:
        raise RuntimeError("learning run returned infeasible")
    return verdict, metrics


# ---------------------------------------------------------------------------
# Instance snapshots (replayable runs)
# ---------------------------------------------------------------------------

def save_instance(instance: LearningInstance, path: str | Path):
    payload = {
        "model": instance.model,
        "model_params": instance.model_params,
        "n": instance.n,
        "beta_target": instance.beta_target,
        "epsilon": instance.epsilon,
        "seed": instance.seed,
        "b": [float(x) for x in instance.b],
        "target_params": [float(x) for x in instance.target_params],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def load_instance(path: str | Path) -> LearningInstance:
    """Rebuild an instance from its snapshot, bit-for-bit.

    Operators are rebuilt from the stored model parameters; the stored b
    vector is kept verbatim (it is the replay contract) and cross-checked
    against a fresh oracle evaluation.
    """
    payload = json.loads(Path(path).read_text())
    inst = make_instance(payload["model"], payload["beta_target"],
                         payload["epsilon"], seed=payload["seed"],
                         **payload["model_params"])
    stored_b = np.asarray(payload["b"], dtype=float)
    if stored_b.shape != inst.b.shape or not np.allclose(stored_b, inst.b, atol=1e-12):
        raise ValueError("snapshot b vector does not match the rebuilt instance")
    stored_t = np.asarray(payload["target_params"], dtype=float)
    if not np.allclose(stored_t, inst.target_params, atol=1e-12):
        raise ValueError("snapshot target parameters do not match")
    return inst
