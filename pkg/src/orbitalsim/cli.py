"""Command-line experiment harness.

Every subcommand runs one experiment, prints a short human-readable summary
to stdout, and writes a single ExperimentRecord (JSON by default, CSV for
trace-like payloads) to --out, or dumps it to stdout when --out is absent.

Exit codes: 0 success, 2 usage/validation error (no output file written),
1 runtime error. --seed falls back to the ORBITALSIM_SEED environment
variable, then to 0. Same command + same seed => identical record payload;
only wall_time_s differs between runs.

Sampled experiments draw each trial from its own stream
(master_seed, trial_index) and merge results by trial index, so --workers
changes scheduling but never the record.
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .continuous_search import fg_evolution_sweep, fg_hamiltonian, fg_shortcut_experiment
from .eigenfilter import convergence_study, filter_gain, small_rotation
from .grover import (
    circular_states,
    grover_instance,
    grover_success_curve,
    plane_eigensystem,
    predicted_eigenphase,
)
from .orbital import (
    GateSequence,
    eigenvector_search,
    exact_target_clock_probability,
    grover_gate_sequence,
    grover_orbital_experiment,
    orbital_hamiltonian,
    verify_step_structure,
)
from .qstate import RngStream, StateVector, overlap
from .records import ExperimentRecord, emit, load_gates, vector_to_pairs
from .spectral import eig_hermitian, group_degenerate

MAX_QUBITS = 12
MAX_CLOCK_STEPS = 16
MAX_COMPOSITE_DIM = 4096

_CSV_COMMANDS = {"grover-curve", "fg-evolve", "al-converge"}


@dataclass
class ExperimentConfig:
    """Validated, resolved parameters for one run; echoed verbatim into the record."""

    command: str
    seed: int
    out: str | None
    format: str
    params: dict = field(default_factory=dict)

    def echo(self) -> dict:
        return {"command": self.command, "seed": self.seed, "out": self.out,
                "format": self.format, **self.params}


class UsageError(ValueError):
    """Invalid configuration; maps to exit code 2."""


def _resolve_seed(args: argparse.Namespace) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("ORBITALSIM_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as err:
            raise UsageError(f"ORBITALSIM_SEED must be an integer, got {env!r}") from err
    return 0


def _check_qubits(n: int) -> None:
    if not 1 <= n <= MAX_QUBITS:
        raise UsageError(f"--qubits must be in [1, {MAX_QUBITS}], got {n}")


def _resolve_marked(args: argparse.Namespace) -> int:
    marked = args.marked if args.marked is not None else 2**args.qubits - 1
    if not 0 <= marked < 2**args.qubits:
        raise UsageError(f"--marked must be in [0, {2**args.qubits}), got {marked}")
    return marked


def _resolve_gates(args: argparse.Namespace) -> tuple[GateSequence, dict]:
    """Gate sequence from --gates file, or the Grover sequence from --qubits/--marked."""
    if args.gates is not None:
        if args.qubits is not None or args.marked is not None:
            raise UsageError("--gates is mutually exclusive with --qubits/--marked")
        gates = load_gates(args.gates)
        meta = {"gates_file": str(args.gates)}
    else:
        if args.qubits is None:
            raise UsageError("either --gates or --qubits is required")
        _check_qubits(args.qubits)
        marked = _resolve_marked(args)
        gates = grover_gate_sequence(args.qubits, marked)
        meta = {"qubits": args.qubits, "marked": marked, "gates_file": None}
    if gates.n_steps > MAX_CLOCK_STEPS:
        raise UsageError(f"clock register capped at M = {MAX_CLOCK_STEPS}, got {gates.n_steps}")
    if gates.n_steps * gates.qubit_dim > MAX_COMPOSITE_DIM:
        raise UsageError(
            f"composite dim {gates.n_steps * gates.qubit_dim} exceeds cap {MAX_COMPOSITE_DIM}")
    meta.update({"n_steps": gates.n_steps, "qubit_dim": gates.qubit_dim})
    return gates, meta


def _positive(name: str, value, minimum=1):
    if value < minimum:
        raise UsageError(f"{name} must be >= {minimum}, got {value}")
    return value


# ---------------------------------------------------------------- commands


def _cmd_grover_curve(args) -> tuple[ExperimentConfig, dict, dict, list | None, str]:
    _check_qubits(args.qubits)
    marked = _resolve_marked(args)
    k_max = args.kmax
    if k_max is None:
        theta = 2.0 * np.arcsin(2.0 ** (-args.qubits / 2.0))
        k_max = int(np.ceil(2.0 * np.pi / theta))
    if k_max < 0:
        raise UsageError(f"--kmax must be >= 0, got {k_max}")
    config = ExperimentConfig(args.command, _resolve_seed(args), args.out, args.format,
                              {"qubits": args.qubits, "marked": marked, "kmax": k_max})
    curve = grover_success_curve(grover_instance(args.qubits, marked), k_max)
    payload = {
        "k": [k for k, _ in curve],
        "success_probability": [p for _, p in curve],
        "peak_k": int(max(curve, key=lambda kp: kp[1])[0]),
    }
    provenance = {"k": "parameter", "success_probability": "exact", "peak_k": "exact"}
    best = max(curve, key=lambda kp: kp[1])
    summary = (f"grover-curve n={args.qubits} w={marked}: P(0)={curve[0][1]:.6f}, "
               f"peak P({best[0]})={best[1]:.6f}")
    return config, payload, provenance, [["k", "k"], ["success_probability", "success_probability"]], summary


def _cmd_grover_eigensystem(args):
    _check_qubits(args.qubits)
    marked = _resolve_marked(args)
    config = ExperimentConfig(args.command, _resolve_seed(args), args.out, args.format,
                              {"qubits": args.qubits, "marked": marked})
    inst = grover_instance(args.qubits, marked)
    plane = plane_eigensystem(inst)
    circ_plus, circ_minus = circular_states(inst)
    theta_formula = predicted_eigenphase(args.qubits)
    g = inst.operator.entries
    fid_plus = float(abs(overlap(plane.plus, circ_plus)) ** 2)
    fid_minus = float(abs(overlap(plane.minus, circ_minus)) ** 2)
    payload = {
        "eigenphase_plus": plane.eigenphase,
        "eigenphase_minus": float(2.0 * np.pi - plane.eigenphase),
        "rotation_angle_formula": theta_formula,
        "formula_deviation": float(abs((2.0 * np.pi - plane.eigenphase) - theta_formula)),
        "fidelity_plus_circular": fid_plus,
        "fidelity_minus_circular": fid_minus,
        "circular_fidelity_bound": 1.0 - 4.0 / inst.n_states,
        "plus_state": vector_to_pairs(plane.plus.amplitudes),
        "minus_state": vector_to_pairs(plane.minus.amplitudes),
        "plus_residual": float(np.linalg.norm(
            g @ plane.plus.amplitudes - np.exp(1j * plane.eigenphase) * plane.plus.amplitudes)),
    }
    provenance = {key: "exact" for key in payload}
    provenance["circular_fidelity_bound"] = "reference"
    summary = (f"grover-eigensystem n={args.qubits} w={marked}: theta_plus={plane.eigenphase:.9f} "
               f"(formula pair {theta_formula:.9f}), circular fidelity {fid_plus:.6f}")
    return config, payload, provenance, None, summary


def _cmd_fg_evolve(args):
    _check_qubits(args.qubits)
    marked = _resolve_marked(args)
    if args.energy_scale <= 0:
        raise UsageError(f"--energy-scale must be > 0, got {args.energy_scale}")
    n_states = 2**args.qubits
    predicted_peak = np.pi * np.sqrt(n_states) / (2.0 * args.energy_scale)
    t_max = args.t_max if args.t_max is not None else 1.5 * predicted_peak
    if t_max <= 0:
        raise UsageError(f"--t-max must be > 0, got {t_max}")
    steps = _positive("--steps", args.steps, 2)
    config = ExperimentConfig(args.command, _resolve_seed(args), args.out, args.format,
                              {"qubits": args.qubits, "marked": marked,
                               "energy_scale": args.energy_scale, "t_max": t_max, "steps": steps})
    trace = fg_evolution_sweep(fg_hamiltonian(args.qubits, marked, args.energy_scale), t_max, steps)
    peak = int(np.argmax(trace.success_probability))
    payload = {
        "time": trace.times.tolist(),
        "success_probability": trace.success_probability.tolist(),
        "peak_time": float(trace.times[peak]),
        "peak_probability": float(trace.success_probability[peak]),
        "predicted_peak_time": float(predicted_peak),
        "initial_probability": float(trace.success_probability[0]),
    }
    provenance = {"time": "parameter", "success_probability": "exact", "peak_time": "exact",
                  "peak_probability": "exact", "predicted_peak_time": "reference",
                  "initial_probability": "exact"}
    summary = (f"fg-evolve n={args.qubits} w={marked} E={args.energy_scale}: peak "
               f"P={payload['peak_probability']:.6f} at t={payload['peak_time']:.4f} "
               f"(predicted {predicted_peak:.4f})")
    return config, payload, provenance, [["t", "time"], ["success_probability", "success_probability"]], summary


def _cmd_fg_shortcut(args):
    _check_qubits(args.qubits)
    marked = _resolve_marked(args)
    if args.energy_scale <= 0:
        raise UsageError(f"--energy-scale must be > 0, got {args.energy_scale}")
    trials = _positive("--trials", args.trials)
    seed = _resolve_seed(args)
    config = ExperimentConfig(args.command, seed, args.out, args.format,
                              {"qubits": args.qubits, "marked": marked,
                               "energy_scale": args.energy_scale, "trials": trials,
                               "gap_tol": args.gap_tol, "workers": args.workers})
    instance = fg_hamiltonian(args.qubits, marked, args.energy_scale)
    result = fg_shortcut_experiment(instance, trials, RngStream(seed), args.gap_tol, args.workers)
    payload = {
        "exact_success": result.exact_success,
        "empirical_success": result.empirical_success,
        "trials": trials,
        "asymptotic_reference": 0.5,
        "branches": [
            {"energy": b.energy, "exact_probability": b.exact_probability,
             "exact_success_given_branch": b.exact_success_given_branch,
             "sample_count": b.sample_count, "sampled_frequency": b.sample_count / trials}
            for b in result.branches
        ],
    }
    provenance = {"exact_success": "exact", "empirical_success": "sampled", "trials": "parameter",
                  "asymptotic_reference": "reference",
                  "branches": "exact_probability/exact_success_given_branch exact; counts sampled"}
    summary = (f"fg-shortcut n={args.qubits} w={marked}: exact={result.exact_success:.6f}, "
               f"empirical={result.empirical_success:.6f} over {trials} trials (asymptote 0.5)")
    return config, payload, provenance, None, summary


def _cmd_orbital_spectrum(args):
    gates, meta = _resolve_gates(args)
    config = ExperimentConfig(args.command, _resolve_seed(args), args.out, args.format,
                              {**meta, "flux": args.flux, "gap_tol": args.gap_tol})
    ham = orbital_hamiltonian(gates, args.flux)
    decomp = eig_hermitian(ham.operator)
    spectrum = group_degenerate(decomp, args.gap_tol)
    product_phases = np.sort(np.mod(np.angle(np.linalg.eigvals(gates.product().entries)), 2 * np.pi))
    m = gates.n_steps
    predicted = np.sort(np.concatenate(
        [2.0 * np.cos((alpha + 2.0 * np.pi * np.arange(m)) / m + args.flux) for alpha in product_phases]))
    deviation = float(np.max(np.abs(np.sort(decomp.eigenvalues) - predicted)))
    payload = {
        "energies": decomp.eigenvalues.tolist(),
        "group_energies": [energy for energy, _ in spectrum.groups],
        "group_sizes": [len(members) for _, members in spectrum.groups],
        "gate_product_eigenphases": product_phases.tolist(),
        "predicted_energies": predicted.tolist(),
        "max_prediction_deviation": deviation,
    }
    provenance = {key: "exact" for key in payload}
    summary = (f"orbital-spectrum M={m} N={gates.qubit_dim} flux={args.flux:.6f}: "
               f"{len(spectrum.groups)} energy groups, |spectrum - 2cos((alpha+2pi m)/M + flux)| "
               f"<= {deviation:.2e}")
    return config, payload, provenance, None, summary


def _cmd_orbital_verify(args):
    gates, meta = _resolve_gates(args)
    config = ExperimentConfig(args.command, _resolve_seed(args), args.out, args.format,
                              {**meta, "flux": args.flux, "gap_tol": args.gap_tol,
                               "structure_tol": args.structure_tol})
    ham = orbital_hamiltonian(gates, args.flux)
    decomp = eig_hermitian(ham.operator)
    spectrum = group_degenerate(decomp, args.gap_tol)
    m = gates.n_steps
    product_phases = np.mod(np.angle(np.linalg.eigvals(gates.product().entries)), 2 * np.pi)
    levels = []
    worst = 0.0
    checked = 0
    for energy, members in spectrum.groups:
        degenerate = len(members) > 1
        for i in members:
            report = verify_step_structure(decomp.eigenvector(i), gates, args.structure_tol)
            phase_gap = float(np.min(np.abs(np.angle(
                np.exp(1j * (product_phases - report.loop_phase))))))
            levels.append({
                "index": int(i), "energy": float(decomp.eigenvalues[i]),
                "group_size": len(members), "max_residual": report.max_residual,
                "clock_uniformity_deviation": float(np.max(np.abs(
                    report.clock_distribution - 1.0 / m))),
                "loop_phase": report.loop_phase,
                "product_phase_gap": phase_gap,
            })
            if not degenerate:
                checked += 1
                worst = max(worst, report.max_residual)
    payload = {
        "levels": levels,
        "nondegenerate_levels_checked": checked,
        "max_residual_nondegenerate": worst,
        "structure_tol": args.structure_tol,
    }
    provenance = {key: "exact" for key in payload}
    summary = (f"orbital-verify M={m} N={gates.qubit_dim} flux={args.flux:.6f}: "
               f"{checked} nondegenerate levels, max step residual {worst:.2e}")
    return config, payload, provenance, None, summary


def _cmd_orbital_search(args):
    gates, meta = _resolve_gates(args)
    trials = _positive("--trials", args.trials)
    max_rounds = _positive("--max-rounds", args.max_rounds)
    if not 0 <= args.target_clock < gates.n_steps:
        raise UsageError(f"--target-clock must be in [0, {gates.n_steps}), got {args.target_clock}")
    seed = _resolve_seed(args)
    config = ExperimentConfig(args.command, seed, args.out, args.format,
                              {**meta, "flux": args.flux, "trials": trials,
                               "max_rounds": max_rounds, "target_clock": args.target_clock,
                               "strategy": args.strategy, "gap_tol": args.gap_tol,
                               "workers": args.workers})
    guess = StateVector.normalized(np.ones(gates.qubit_dim))  # uniform over the register
    base = RngStream(seed)

    def one_trial(t: int):
        return eigenvector_search(gates, guess, args.flux, max_rounds, args.target_clock,
                                  args.strategy, base.for_trial(t), args.gap_tol)

    if args.workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(one_trial, range(trials)))
    else:
        results = [one_trial(t) for t in range(trials)]

    successes = [r for r in results if r.success]
    exact_round_p = exact_target_clock_probability(gates, guess, args.flux,
                                                   args.target_clock, args.gap_tol)
    payload = {
        "trials": trials,
        "successes": len(successes),
        "rounds": [r.rounds_used for r in results],
        "mean_rounds": float(np.mean([r.rounds_used for r in results])),
        "exact_round_clock_probability": exact_round_p,
        "exact_expected_rounds": (1.0 / exact_round_p if args.strategy == "reinitialize"
                                  and exact_round_p > 0 else None),
        "measured_energy": [r.measured_energy for r in results],
        "eigenphase_estimate": [r.eigenphase_estimate for r in results],
        "eigen_residual": [r.eigen_residual for r in results],
        "round_clock_probabilities_first_trial": list(results[0].round_clock_probabilities),
        "max_residual_on_success": float(max((r.eigen_residual for r in successes), default=float("nan"))),
        "final_state_first_trial": vector_to_pairs(results[0].final_qubit_state.amplitudes),
    }
    provenance = {"trials": "parameter", "successes": "sampled", "rounds": "sampled",
                  "mean_rounds": "sampled", "exact_round_clock_probability": "exact",
                  "exact_expected_rounds": "exact (reinitialize only)",
                  "measured_energy": "sampled",
                  "eigenphase_estimate": "sampled", "eigen_residual": "sampled",
                  "round_clock_probabilities_first_trial": "exact",
                  "max_residual_on_success": "sampled", "final_state_first_trial": "sampled"}
    summary = (f"orbital-search M={gates.n_steps} N={gates.qubit_dim} flux={args.flux:.6f} "
               f"strategy={args.strategy}: {len(successes)}/{trials} reached clock "
               f"{args.target_clock}, mean rounds {payload['mean_rounds']:.3f}, "
               f"max success residual {payload['max_residual_on_success']:.2e}")
    return config, payload, provenance, None, summary


def _cmd_grover_orbital(args):
    _check_qubits(args.qubits)
    marked = _resolve_marked(args)
    trials = _positive("--trials", args.trials)
    max_rounds = _positive("--max-rounds", args.max_rounds)
    if not 0 <= args.target_clock < 4:
        raise UsageError(f"--target-clock must be in [0, 4), got {args.target_clock}")
    seed = _resolve_seed(args)
    config = ExperimentConfig(args.command, seed, args.out, args.format,
                              {"qubits": args.qubits, "marked": marked, "flux": args.flux,
                               "trials": trials, "max_rounds": max_rounds,
                               "target_clock": args.target_clock, "gap_tol": args.gap_tol,
                               "workers": args.workers})
    result = grover_orbital_experiment(args.qubits, marked, args.flux, trials, RngStream(seed),
                                       max_rounds, args.target_clock, args.gap_tol, args.workers)
    payload = {
        "exact_conditional_success": result.exact_conditional_success,
        "empirical_success": result.empirical_success,
        "paper_reference_value": result.paper_reference_value,
        "exact_round_clock_probability": result.exact_round_clock_probability,
        "trials": trials,
        "completed_searches": result.completed_searches,
        "mean_rounds": result.mean_rounds,
        "per_energy_stats": [
            {"energy": s.energy, "exact_probability": s.exact_probability,
             "exact_clock_target_probability": s.exact_clock_target_probability,
             "exact_success_given_branch": s.exact_success_given_branch,
             "sample_count": s.sample_count}
            for s in result.per_energy_stats
        ],
    }
    provenance = {"exact_conditional_success": "exact", "empirical_success": "sampled",
                  "paper_reference_value": "reference", "exact_round_clock_probability": "exact",
                  "trials": "parameter", "completed_searches": "sampled", "mean_rounds": "sampled",
                  "per_energy_stats": "exact_* exact; sample_count sampled"}
    summary = (f"grover-orbital n={args.qubits} w={marked} flux={args.flux:.6f}: "
               f"exact={result.exact_conditional_success:.6f}, "
               f"empirical={result.empirical_success:.6f} "
               f"({result.completed_searches}/{trials} searches), reference 0.5")
    return config, payload, provenance, None, summary


def _cmd_al_converge(args):
    if args.delta == 0.0:
        raise UsageError("--delta must be nonzero")
    if args.k_list is not None:
        try:
            k_list = [int(tok) for tok in args.k_list.split(",") if tok.strip()]
        except ValueError as err:
            raise UsageError(f"--k-list must be comma-separated integers: {err}") from err
    else:
        k_list, k = [], 1
        while k <= args.kmax:
            k_list.append(k)
            k *= 2
    if not k_list or any(k < 1 for k in k_list) or any(b <= a for a, b in zip(k_list, k_list[1:])):
        raise UsageError(f"k values must be ascending positive integers, got {k_list}")
    config = ExperimentConfig(args.command, _resolve_seed(args), args.out, args.format,
                              {"delta": args.delta, "k_list": k_list})
    u = small_rotation(args.delta)
    guess = StateVector.normalized([1.0, 1.0])
    target = StateVector.normalized([1.0, 0.0])
    rows = convergence_study(u, guess, target, k_list)
    payload = {
        "delta": args.delta,
        "k": [r.k for r in rows],
        "overlap": [r.overlap for r in rows],
        "residual": [r.residual for r in rows],
        "gain_formula": [filter_gain(args.delta, k) for k in k_list],
    }
    provenance = {"delta": "parameter", "k": "parameter", "overlap": "exact",
                  "residual": "exact", "gain_formula": "reference"}
    summary = (f"al-converge delta={args.delta:.6g}: overlap {rows[0].overlap:.4f} at k={rows[0].k} "
               f"-> {rows[-1].overlap:.4f} at k={rows[-1].k}")
    return config, payload, provenance, [["k", "k"], ["overlap", "overlap"], ["residual", "residual"]], summary


_HANDLERS = {
    "grover-curve": _cmd_grover_curve,
    "grover-eigensystem": _cmd_grover_eigensystem,
    "fg-evolve": _cmd_fg_evolve,
    "fg-shortcut": _cmd_fg_shortcut,
    "orbital-spectrum": _cmd_orbital_spectrum,
    "orbital-verify": _cmd_orbital_verify,
    "orbital-search": _cmd_orbital_search,
    "grover-orbital": _cmd_grover_orbital,
    "al-converge": _cmd_al_converge,
}


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--seed", type=int, default=None,
                     help="64-bit master seed (default: $ORBITALSIM_SEED, else 0)")
    sub.add_argument("--out", type=str, default=None, help="output file path")
    sub.add_argument("--format", choices=["json", "csv"], default="json")


def _add_gates_source(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--gates", type=str, default=None,
                     help="JSON gate file ([re,im]-pair matrices); overrides --qubits/--marked")
    sub.add_argument("--qubits", type=int, default=None,
                     help="build the 4-step Grover sequence on this many qubits")
    sub.add_argument("--marked", type=int, default=None,
                     help="marked index for the Grover sequence (default: highest)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orbitalsim",
        description="Exact experiments on quantum-search eigenvector protocols.",
    )
    parser.add_argument("--version", action="version", version=f"orbitalsim {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("grover-curve", help="exact success probabilities |<w|G^k|s>|^2")
    p.add_argument("--qubits", type=int, required=True)
    p.add_argument("--marked", type=int, default=None, help="default: highest index")
    p.add_argument("--kmax", type=int, default=None, help="default: one rotation period")
    _add_common(p)

    p = commands.add_parser("grover-eigensystem", help="exact plane eigenvectors of G")
    p.add_argument("--qubits", type=int, required=True)
    p.add_argument("--marked", type=int, default=None)
    _add_common(p)

    p = commands.add_parser("fg-evolve", help="continuous-search success trace |<w|e^{-iHt}|s>|^2")
    p.add_argument("--qubits", type=int, required=True)
    p.add_argument("--marked", type=int, default=None)
    p.add_argument("--energy-scale", type=float, default=1.0)
    p.add_argument("--t-max", type=float, default=None, help="default: 1.5x predicted peak time")
    p.add_argument("--steps", type=int, default=1001)
    _add_common(p)

    p = commands.add_parser("fg-shortcut", help="measure energy then qubits; exact vs sampled")
    p.add_argument("--qubits", type=int, required=True)
    p.add_argument("--marked", type=int, default=None)
    p.add_argument("--energy-scale", type=float, default=1.0)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--gap-tol", type=float, default=1e-8)
    p.add_argument("--workers", type=int, default=1)
    _add_common(p)

    p = commands.add_parser("orbital-spectrum", help="orbital energies vs 2cos((alpha+2pi m)/M + flux)")
    _add_gates_source(p)
    p.add_argument("--flux", type=float, default=0.0)
    p.add_argument("--gap-tol", type=float, default=1e-8)
    _add_common(p)

    p = commands.add_parser("orbital-verify", help="step-structure fit of every eigenvector")
    _add_gates_source(p)
    p.add_argument("--flux", type=float, default=0.0)
    p.add_argument("--gap-tol", type=float, default=1e-8)
    p.add_argument("--structure-tol", type=float, default=1e-8)
    _add_common(p)

    p = commands.add_parser("orbital-search", help="repeat energy+clock measurement to the target step")
    _add_gates_source(p)
    p.add_argument("--flux", type=float, default=0.0)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--max-rounds", type=int, default=1000)
    p.add_argument("--target-clock", type=int, default=0)
    p.add_argument("--strategy", choices=["reinitialize", "persist"], default="reinitialize")
    p.add_argument("--gap-tol", type=float, default=1e-8)
    p.add_argument("--workers", type=int, default=1)
    _add_common(p)

    p = commands.add_parser("grover-orbital", help="full search-as-orbital protocol from |s>")
    p.add_argument("--qubits", type=int, required=True)
    p.add_argument("--marked", type=int, default=None)
    p.add_argument("--flux", type=float, default=0.0)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--max-rounds", type=int, default=1000)
    p.add_argument("--target-clock", type=int, default=0)
    p.add_argument("--gap-tol", type=float, default=1e-8)
    p.add_argument("--workers", type=int, default=1)
    _add_common(p)

    p = commands.add_parser("al-converge", help="power-sum filter convergence on diag(1, e^{i delta})")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--k-list", type=str, default=None, help="comma-separated ascending k values")
    p.add_argument("--kmax", type=int, default=1024, help="powers of two up to kmax when --k-list absent")
    _add_common(p)

    return parser


def run(argv: list[str]) -> int:
    """Parse argv, run one experiment, write one record. 0/2/1 exit contract."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse printed usage/help already
        return int(exc.code or 0)
    handler = _HANDLERS[args.command]
    start = time.perf_counter()
    try:
        if args.format == "csv" and args.command not in _CSV_COMMANDS:
            raise UsageError(f"--format csv is only available for {sorted(_CSV_COMMANDS)}")
        config, payload, provenance, csv_columns, summary = handler(args)
    except (UsageError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except Exception as err:  # pragma: no cover - defensive
        print(f"runtime error: {err}", file=sys.stderr)
        return 1
    record = ExperimentRecord(
        command=config.command,
        config=config.echo(),
        payload=payload,
        provenance=provenance,
        artifact_version=__version__,
        wall_time_s=time.perf_counter() - start,
        csv_columns=csv_columns,
    )
    try:
        blob = emit(record, config.format)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    print(summary)
    if config.out:
        Path(config.out).write_bytes(blob)
        print(f"wrote {config.format} record to {config.out}")
    else:
        sys.stdout.write(blob.decode("utf-8"))
    return 0


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
