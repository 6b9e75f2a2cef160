"""Configuration-driven experiment runner.

Subcommands: solve, learn, diagnose, resources, poly-table. Every run writes
a trace CSV and/or metrics JSON plus a manifest embedding the fully resolved
configuration and seed; identical (config, seed) produces byte-identical
artifacts at any --threads value. Wall-clock timings go to the CSV only with
--timing, since they would break byte-reproducibility.

Exit codes: 0 success/feasible, 2 infeasible verdict, 3 configuration error,
4 numerical backend failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__, exactspec
from .hamlearn import load_instance, make_instance, recover_parameters, save_instance
from .krylov import KrylovConvergenceError
from .mmw import ExactMonitor, SolverError, Verdict, load_problem, zero_sum_solve
from .operators import LatticeSpec, OperatorError, build_xxz, compile
from .polyqet import PolynomialConstructionError, composite_exp_poly, exp_poly, sign_poly
from .resources import complexity_report, toffoli_estimate
from .tpq import EnsembleConfig

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_CONFIG = 3
EXIT_NUMERICAL = 4

TRACE_HEADER = "tau,beta,violated_index,max_violation,rel_entropy,seconds"


class ConfigError(ValueError):
    pass


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _fmt(value: float) -> str:
    if isinstance(value, float) and np.isnan(value):
        return "nan"
    return repr(float(value))


def trace_csv(verdict: Verdict, timing: bool) -> str:
    lines = [TRACE_HEADER]
    for r in verdict.trace.rows:
        seconds = r.seconds if timing else 0.0
        lines.append(",".join([
            str(r.tau), _fmt(r.beta), str(r.violated_index),
            _fmt(r.max_violation), _fmt(r.rel_entropy), _fmt(seconds)]))
    return "\n".join(lines) + "\n"


def _manifest(resolved: dict) -> str:
    return json.dumps({"version": __version__, "config": resolved},
                      indent=2, sort_keys=True) + "\n"


def _load_config_file(path: str) -> dict:
    """Flat 'key value' lines; '#' comments allowed."""
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition(" ")
        if not value:
            raise ConfigError(f"malformed config line: {raw!r}")
        out[key.replace("-", "_")] = value.strip()
    return out


def _resolve(args: argparse.Namespace, known: dict) -> dict:
    """File values overridden by explicitly passed flags; unknown keys rejected."""
    resolved = dict(known)
    if getattr(args, "config", None):
        file_values = _load_config_file(args.config)
        unknown = set(file_values) - set(known)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key, raw in file_values.items():
            default = known[key]
            if isinstance(default, bool):
                resolved[key] = raw.lower() in ("1", "true", "yes")
            elif isinstance(default, int):
                resolved[key] = int(raw)
            elif isinstance(default, float):
                resolved[key] = float(raw)
            else:
                resolved[key] = raw
    for key in known:
        flag = getattr(args, key, None)
        if flag is not None and key in getattr(args, "_explicit", set()):
            resolved[key] = flag
    return resolved


class _TrackExplicit(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):
        if not hasattr(namespace, "_explicit"):
            namespace._explicit = set()
        namespace._explicit.add(self.dest)
        setattr(namespace, self.dest, values)


def _add(parser, name, **kwargs):
    parser.add_argument(name, action=_TrackExplicit, **kwargs)


def _common_flags(p):
    _add(p, "--config", type=str, help="flat 'key value' config file")
    _add(p, "--seed", type=int, default=0)
    _add(p, "--epsilon", type=float, default=0.05)
    _add(p, "--backend", type=str, default="exact",
         choices=["exact", "krylov", "qet"])
    _add(p, "--out", type=str, default="runs")
    _add(p, "--threads", type=int, default=1)
    _add(p, "--timing", type=int, default=0, help="1: real per-step wall times")
    _add(p, "--batches", type=int, default=3)
    _add(p, "--samples-per-batch", type=int, default=25, dest="samples_per_batch")
    _add(p, "--xi", type=float, default=0.05)
    _add(p, "--stride", type=int, default=10)
    _add(p, "--max-iterations", type=int, default=0, dest="max_iterations")


def _backend_from(resolved):
    if resolved["backend"] == "exact":
        return "exact"
    return EnsembleConfig(batches=resolved["batches"],
                          samples_per_batch=resolved["samples_per_batch"],
                          backend=resolved["backend"], xi=resolved["xi"],
                          seed=resolved["seed"], threads=resolved["threads"])


def _write_run(outdir: Path, resolved: dict, verdict: Verdict, metrics: dict,
               timing: bool):
    _atomic_write(outdir / "trace.csv", trace_csv(verdict, timing))
    _atomic_write(outdir / "metrics.json",
                  json.dumps(metrics, indent=2, sort_keys=True) + "\n")
    _atomic_write(outdir / "manifest.json", _manifest(resolved))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_solve(args) -> int:
    known = {"config": "", "problem": "", "seed": 0, "epsilon": 0.05,
             "backend": "exact", "out": "runs", "threads": 1, "timing": 0,
             "batches": 3, "samples_per_batch": 25, "xi": 0.05, "stride": 0,
             "max_iterations": 0}
    resolved = _resolve(args, known)
    if not resolved["problem"]:
        raise ConfigError("solve needs --problem FILE")
    problem = load_problem(resolved["problem"])
    if "epsilon" in getattr(args, "_explicit", set()):
        problem.epsilon = resolved["epsilon"]
    resolved["epsilon"] = problem.epsilon
    backend = _backend_from(resolved)
    max_it = resolved["max_iterations"] or None
    verdict = zero_sum_solve(problem, backend=backend, seed=resolved["seed"],
                             max_iterations=max_it)
    outdir = Path(resolved["out"])
    metrics = {
        "kind": verdict.kind, "tau_halt": verdict.tau_halt,
        "theta_sum": float(np.sum(verdict.theta)),
        "max_violation": verdict.trace.rows[-1].max_violation,
    }
    _write_run(outdir, resolved, verdict, metrics, bool(resolved["timing"]))
    print(f"{verdict.kind} at tau={verdict.tau_halt}; artifacts in {outdir}")
    return EXIT_OK if verdict.feasible else EXIT_INFEASIBLE


def cmd_learn(args) -> int:
    known = {"config": "", "model": "hubbard", "nx": 2, "ny": 2, "n": 10,
             "mu": 1.0, "w": 0.5, "u": 1.2, "J": 1.0, "Delta": 0.5,
             "beta_target": 0.4, "seed": 0, "epsilon": 0.05,
             "backend": "exact", "out": "runs", "threads": 1, "timing": 0,
             "batches": 3, "samples_per_batch": 25, "xi": 0.05, "stride": 10,
             "max_iterations": 0, "instance": ""}
    resolved = _resolve(args, known)
    if resolved["instance"]:
        instance = load_instance(resolved["instance"])
        resolved["model"] = instance.model
        resolved["epsilon"] = instance.epsilon
    elif resolved["model"] == "hubbard":
        instance = make_instance(
            "hubbard", resolved["beta_target"], resolved["epsilon"],
            seed=resolved["seed"], nx=resolved["nx"], ny=resolved["ny"],
            mu=resolved["mu"], w=resolved["w"], u=resolved["u"])
    elif resolved["model"] == "xxz":
        instance = make_instance(
            "xxz", resolved["beta_target"], resolved["epsilon"],
            seed=resolved["seed"], n=resolved["n"], J=resolved["J"],
            Delta=resolved["Delta"])
    else:
        raise ConfigError(f"unknown model {resolved['model']!r}")

    backend = _backend_from(resolved)
    monitor = instance.monitor(stride=resolved["stride"], stop_when_feasible=True)
    max_it = resolved["max_iterations"] or None
    verdict = zero_sum_solve(instance.problem(), backend=backend, hooks=monitor,
                             seed=resolved["seed"], max_iterations=max_it)
    outdir = Path(resolved["out"])
    if verdict.feasible:
        metrics_obj = recover_parameters(verdict, instance)
        metrics = {
            "kind": verdict.kind, "tau_halt": verdict.tau_halt,
            "mse": metrics_obj.mse,
            "max_multiplicative_error": metrics_obj.max_multiplicative_error,
            "final_exact_violation": metrics_obj.final_exact_violation,
            "theta_hat": [float(x) for x in metrics_obj.theta_hat],
            "target_params": [float(x) for x in instance.target_params],
            "target_purity": instance.target_purity,
            "purity_over_eps_sq": instance.purity_over_eps_sq,
        }
    else:
        metrics = {"kind": verdict.kind, "tau_halt": verdict.tau_halt}
    _write_run(outdir, resolved, verdict, metrics, bool(resolved["timing"]))
    save_instance(instance, outdir / "instance.json")
    print(f"{verdict.kind} at tau={verdict.tau_halt}; artifacts in {outdir}")
    return EXIT_OK if verdict.feasible else EXIT_INFEASIBLE


def cmd_diagnose(args) -> int:
    known = {"config": "", "model": "xxz", "n": 8, "nx": 2, "ny": 2,
             "beta": 0.4, "seed": 0, "out": "runs", "nu_fraction": 1.0 - 1e-5}
    resolved = _resolve(args, known)
    beta = resolved["beta"]
    nu = resolved["nu_fraction"] * np.log(2.0) / (2.0 * beta)
    if resolved["model"] == "xxz":
        n = resolved["n"]
        rng = np.random.default_rng(np.random.SeedSequence(
            entropy=(resolved["seed"], 3)))
        ham, _, _ = build_xxz(n, 1.0, 0.5, rng.uniform(-2.0, 2.0, n))
    elif resolved["model"] == "hubbard":
        spec = LatticeSpec(resolved["nx"], resolved["ny"])
        from .operators import build_hubbard_spinless
        ham, _, _ = build_hubbard_spinless(spec, 1.0, 0.5, 1.2)
        n = spec.n_sites
    else:
        raise ConfigError(f"unknown model {resolved['model']!r}")
    # report against the normalized Hamiltonian so the purity bound applies
    from .operators import spectral_norm_estimate
    op = compile(ham)
    norm = spectral_norm_estimate(op)
    eig = exactspec.eigendecompose(op * (1.0 / norm))
    state = exactspec.gibbs_state(eig, beta)
    count, c = exactspec.spectral_condition_count(eig, nu)
    report = {
        "model": resolved["model"], "n": n, "beta": beta, "nu": float(nu),
        "purity": exactspec.purity(state),
        "bound": exactspec.purity_bound(c, nu, beta, n),
        "count": count, "c": c,
        "free_energy_check": exactspec.free_energy_purity(eig, beta),
    }
    outdir = Path(resolved["out"])
    _atomic_write(outdir / "diagnose.json",
                  json.dumps(report, indent=2, sort_keys=True) + "\n")
    _atomic_write(outdir / "manifest.json", _manifest(resolved))
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_resources(args) -> int:
    known = {"config": "", "mode": "report", "N": 1024, "m": 56,
             "epsilon": 0.05, "xi": 0.05, "delta_tilde": 0.01,
             "spectral_condition": 0, "out": "runs"}
    resolved = _resolve(args, known)
    outdir = Path(resolved["out"])
    if resolved["mode"] == "table1":
        lines = ["nx,ny,qubits_amplified,toffoli_amplified,"
                 "qubits_proof_of_concept,toffoli_proof_of_concept"]
        for nx, ny in ((2, 2), (4, 4), (6, 6)):
            spec = LatticeSpec(nx, ny)
            amp = toffoli_estimate(spec, resolved["epsilon"], "amplified")
            poc = toffoli_estimate(spec, resolved["epsilon"], "proof_of_concept")
            lines.append(f"{nx},{ny},{amp.qubits},{_fmt(amp.gates)},"
                         f"{poc.qubits},{_fmt(poc.gates)}")
        text = "\n".join(lines) + "\n"
        _atomic_write(outdir / "table1.csv", text)
        print(text, end="")
    else:
        report = complexity_report(
            resolved["N"], resolved["m"], resolved["epsilon"],
            xi=resolved["xi"], delta_tilde=resolved["delta_tilde"],
            spectral_condition=bool(resolved["spectral_condition"]))
        payload = {k: (v if not isinstance(v, np.generic) else v.item())
                   for k, v in vars(report).items()}
        _atomic_write(outdir / "resources.json",
                      json.dumps(payload, indent=2, sort_keys=True) + "\n")
        print(json.dumps(payload, indent=2, sort_keys=True))
    _atomic_write(outdir / "manifest.json", _manifest(resolved))
    return EXIT_OK


def cmd_poly_table(args) -> int:
    known = {"config": "", "betas": "1,2,4,8,16,32,64", "mu": 1e-2,
             "out": "runs"}
    resolved = _resolve(args, known)
    mu = resolved["mu"]
    lines = ["beta,mu,degree_exp,degree_sign,degree_composite"]
    for beta_str in resolved["betas"].split(","):
        beta = float(beta_str)
        delta = 1.0 / (4.0 * beta) if beta > 0 else 0.25
        zeta = np.log(1.0 / (1.0 - mu)) / beta if beta > 0 else 0.5
        de = exp_poly(beta, mu).degree
        ds = sign_poly(min(zeta, 0.5), min(delta, 0.5)).degree
        dc = composite_exp_poly(beta, mu, min(delta, 0.5)).construction_degree
        lines.append(f"{_fmt(beta)},{_fmt(mu)},{de},{ds},{dc}")
    text = "\n".join(lines) + "\n"
    outdir = Path(resolved["out"])
    _atomic_write(outdir / "poly_table.csv", text)
    _atomic_write(outdir / "manifest.json", _manifest(resolved))
    print(text, end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tpqsdp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a problem file")
    _common_flags(p)
    _add(p, "--problem", type=str, default="")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("learn", help="Hamiltonian-learning run")
    _common_flags(p)
    _add(p, "--model", type=str, default="hubbard", choices=["hubbard", "xxz"])
    _add(p, "--nx", type=int, default=2)
    _add(p, "--ny", type=int, default=2)
    _add(p, "--n", type=int, default=10)
    _add(p, "--mu", type=float, default=1.0)
    _add(p, "--w", type=float, default=0.5)
    _add(p, "--u", type=float, default=1.2)
    _add(p, "--J", type=float, default=1.0)
    _add(p, "--Delta", type=float, default=0.5)
    _add(p, "--beta-target", type=float, default=0.4, dest="beta_target")
    _add(p, "--instance", type=str, default="", help="replay a saved snapshot")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("diagnose", help="purity / spectral-condition report")
    _add(p, "--config", type=str)
    _add(p, "--model", type=str, default="xxz", choices=["hubbard", "xxz"])
    _add(p, "--n", type=int, default=8)
    _add(p, "--nx", type=int, default=2)
    _add(p, "--ny", type=int, default=2)
    _add(p, "--beta", type=float, default=0.4)
    _add(p, "--seed", type=int, default=0)
    _add(p, "--out", type=str, default="runs")
    _add(p, "--nu-fraction", type=float, default=1.0 - 1e-5, dest="nu_fraction")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("resources", help="complexity report or Table-1 CSV")
    _add(p, "mode", nargs="?", type=str, default="report",
         choices=["report", "table1"])
    _add(p, "--config", type=str)
    _add(p, "--N", type=int, default=1024)
    _add(p, "--m", type=int, default=56)
    _add(p, "--epsilon", type=float, default=0.05)
    _add(p, "--xi", type=float, default=0.05)
    _add(p, "--delta-tilde", type=float, default=0.01, dest="delta_tilde")
    _add(p, "--spectral-condition", type=int, default=0, dest="spectral_condition")
    _add(p, "--out", type=str, default="runs")
    p.set_defaults(func=cmd_resources)

    p = sub.add_parser("poly-table", help="polynomial degree table CSV")
    _add(p, "--config", type=str)
    _add(p, "--betas", type=str, default="1,2,4,8,16,32,64")
    _add(p, "--mu", type=float, default=1e-2)
    _add(p, "--out", type=str, default="runs")
    p.set_defaults(func=cmd_poly_table)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ConfigError, OperatorError, FileNotFoundError, ValueError,
            json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, KrylovConvergenceError, PolynomialConstructionError,
            FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
