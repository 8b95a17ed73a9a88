"""Analog search: the two-projector Hamiltonian E(|s><s| + |w><w|).

The only excited states live in span{|s>,|w>} with energies E(1 ± x),
x = <s|w> = 2^(-n/2); |s> has no kernel component, so an energy measurement
of |s> collapses it onto one of the two diagonally polarized eigenvectors
(|s> ± |w>)/sqrt(2(1 ± x)). Measure-then-read beats waiting for the Rabi
rotation: success probability is (1 + x^2)/2 with just two measurements.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .qstate import (
    DenseOperator,
    MeasurementOutcome,
    RngStream,
    StateVector,
    basis_state,
    measure_computational,
    uniform_superposition,
)
from .spectral import DEFAULT_GAP_TOL, eig_hermitian, group_degenerate, group_probabilities, measure_energy


@dataclass(frozen=True)
class FGInstance:
    n_qubits: int
    marked_index: int
    energy_scale: float
    overlap_x: float
    hamiltonian: DenseOperator

    def marked_state(self) -> StateVector:
        return basis_state(2**self.n_qubits, self.marked_index)

    def uniform_state(self) -> StateVector:
        return uniform_superposition(self.n_qubits)


def fg_hamiltonian(n_qubits: int, marked: int, energy_scale: float = 1.0) -> FGInstance:
    """H = E(|s><s| + |w><w|); rank <= 2, nonzero eigenvalues E(1 ± x)."""
    if energy_scale <= 0:
        raise ValueError(f"energy_scale must be > 0, got {energy_scale}")
    dim = 2**n_qubits
    if not 0 <= marked < dim:
        raise ValueError(f"marked index {marked} out of range [0, {dim})")
    s = uniform_superposition(n_qubits).amplitudes
    w = basis_state(dim, marked).amplitudes
    h = energy_scale * (np.outer(s, s.conj()) + np.outer(w, w.conj()))
    ham = DenseOperator(dim, h).require_hermitian()
    return FGInstance(n_qubits, marked, float(energy_scale), float(2.0 ** (-n_qubits / 2.0)), ham)


@dataclass(frozen=True)
class FGPlaneEigensystem:
    """Diagonally polarized excited eigenvectors with their energies E(1 ± x)."""

    plus: StateVector
    minus: StateVector
    energy_plus: float
    energy_minus: float


def fg_plane_eigensystem(instance: FGInstance) -> FGPlaneEigensystem:
    """Exact normalized eigenvectors (|s> ± |w>)/sqrt(2(1 ± x))."""
    s = instance.uniform_state().amplitudes
    w = instance.marked_state().amplitudes
    x = instance.overlap_x
    e = instance.energy_scale
    plus = StateVector(s.shape[0], (s + w) / np.sqrt(2.0 * (1.0 + x)))
    minus = StateVector(s.shape[0], (s - w) / np.sqrt(2.0 * (1.0 - x)))
    return FGPlaneEigensystem(plus, minus, e * (1.0 + x), e * (1.0 - x))


@dataclass(frozen=True)
class EvolutionTrace:
    times: np.ndarray
    success_probability: np.ndarray


def fg_evolution_sweep(instance: FGInstance, t_max: float, steps: int) -> EvolutionTrace:
    """|<w| e^{-iHt} |s>|^2 on a uniform grid of `steps` points covering [0, t_max]."""
    if t_max <= 0:
        raise ValueError(f"t_max must be > 0, got {t_max}")
    if steps < 2:
        raise ValueError(f"steps must be >= 2, got {steps}")
    decomp = eig_hermitian(instance.hamiltonian)
    coeffs = decomp.eigenvectors.conj().T @ instance.uniform_state().amplitudes
    w_row = instance.marked_state().amplitudes.conj() @ decomp.eigenvectors
    times = np.linspace(0.0, t_max, steps)
    # <w|psi(t)> = sum_i (w†V)_i e^{-i lambda_i t} (V†s)_i, vectorized over the grid
    phases = np.exp(-1j * np.outer(times, decomp.eigenvalues))
    amps = phases @ (w_row * coeffs)
    return EvolutionTrace(times, np.abs(amps) ** 2)


@dataclass(frozen=True)
class ShortcutBranch:
    """Exact and sampled statistics for one energy branch of the shortcut protocol."""

    energy: float
    exact_probability: float
    exact_success_given_branch: float
    sample_count: int


@dataclass(frozen=True)
class ShortcutResult:
    exact_success: float
    empirical_success: float
    trials: int
    branches: tuple[ShortcutBranch, ...]


def fg_shortcut_experiment(
    instance: FGInstance,
    trials: int,
    rng: RngStream,
    gap_tol: float = DEFAULT_GAP_TOL,
    workers: int = 1,
) -> ShortcutResult:
    """Measure energy of |s>, then measure the qubits; success = marked outcome.

    exact_success comes from the projector chain (sums to (1 + x^2)/2);
    empirical_success is the sampled frequency over `trials` runs, each on
    its own trial stream derived from (master_seed, trial_index), so the
    aggregate is identical for any worker count.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    decomp = eig_hermitian(instance.hamiltonian)
    spectrum = group_degenerate(decomp, gap_tol)
    s = instance.uniform_state()

    probs = group_probabilities(decomp, spectrum, s)
    exact_success = 0.0
    branch_success: dict[int, float] = {}
    for g, ((energy, members), p) in enumerate(zip(spectrum.groups, probs)):
        if p <= 1e-12:
            branch_success[g] = 0.0
            continue
        idx = list(members)
        amps = decomp.eigenvectors.conj().T @ s.amplitudes
        post = decomp.eigenvectors[:, idx] @ amps[idx]
        post /= np.linalg.norm(post)
        w_prob = float(np.abs(post[instance.marked_index]) ** 2)
        branch_success[g] = w_prob
        exact_success += float(p) * w_prob

    def one_trial(trial: int) -> tuple[int, bool]:
        stream = rng.for_trial(trial)
        _, outcome = measure_energy(decomp, gap_tol, s, stream)
        qubit: MeasurementOutcome = measure_computational(outcome.post_state, stream)
        return outcome.outcome_index, qubit.outcome_index == instance.marked_index

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one_trial, range(trials)))
    else:
        results = [one_trial(t) for t in range(trials)]

    counts = {g: 0 for g in range(len(spectrum.groups))}
    hits = 0
    for group_index, hit in results:
        counts[group_index] += 1
        hits += hit

    branches = tuple(
        ShortcutBranch(energy, float(p), branch_success[g], counts[g])
        for g, ((energy, _), p) in enumerate(zip(spectrum.groups, probs))
    )
    return ShortcutResult(exact_success, hits / trials, trials, branches)
