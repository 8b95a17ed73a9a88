"""Cyclic clock ("artificial orbital") Hamiltonian built from a gate sequence.

A sequence U_1..U_M on an N-dimensional qubit register is wired into a ring
of M clock levels with one gate per hop:

    H = sum_t  e^{i flux} |t+1><t| (x) U_{t+1}  +  h.c.      (indices mod M)

H = e^{i flux} W + e^{-i flux} W† where W = sum_t |t+1><t| (x) U_{t+1} is the
unitary one-step operator, so H and W share eigenvectors. For each
eigenphase alpha of U = U_M...U_1 and each m in [0, M), the eigenvector

    (1/sqrt(M)) sum_t e^{-i mu t} |t> (x) U_t...U_1 |psi_alpha>,
        mu = (alpha + 2 pi m)/M,

has energy 2 cos(mu + flux). Its clock marginal is uniform and its
conditional qubit states satisfy c_{t+1} = e^{-i mu} U_{t+1} c_t, which is
what verify_step_structure fits and tests. Measuring energy then clock
therefore collapses onto a (clock level, eigenvector-branch) pair; when the
clock lands on the target step the qubit register holds an eigenvector of
the (cyclically permuted) product.

The flux is a uniform hopping phase. At flux = 0 the ring is time-reversal
symmetric and conjugate eigenphase branches (+alpha, -alpha) are pairwise
degenerate in energy, so an energy measurement cannot separate them; any
generic nonzero flux splits the pairs. GOLDEN_FLUX is a convenient
resonance-free choice.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .grover import oracle_inversion, walsh_hadamard, zero_inversion
from .qstate import (
    DenseOperator,
    MeasurementOutcome,
    RngStream,
    StateVector,
    basis_state,
    measure_computational,
    tensor_state,
    uniform_superposition,
    _sample_index,
)
from .spectral import (
    DEFAULT_GAP_TOL,
    SpectralDecomposition,
    eig_hermitian,
    group_degenerate,
    measure_energy,
)

GOLDEN_FLUX = 2.0 * np.pi * 0.381966

_STRATEGIES = ("reinitialize", "persist")


def _wrap_phase(phase: float) -> float:
    """Reduce to [0, 2 pi), mapping values within 1e-9 of 2 pi back to 0."""
    wrapped = float(np.mod(phase, 2.0 * np.pi))
    return 0.0 if wrapped > 2.0 * np.pi - 1e-9 else wrapped


@dataclass(frozen=True)
class GateSequence:
    """Ordered unitaries U_1..U_M on a common N-dimensional register."""

    qubit_dim: int
    gates: tuple[DenseOperator, ...]

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if len(self.gates) < 1:
            raise ValueError("gate sequence needs at least one gate")
        for k, gate in enumerate(self.gates):
            if gate.dim != self.qubit_dim:
                raise ValueError(f"gate {k} has dim {gate.dim}, expected {self.qubit_dim}")
            try:
                gate.require_unitary()
            except ValueError as err:
                raise ValueError(f"gate {k} is not unitary: {err}") from err

    @property
    def n_steps(self) -> int:
        return len(self.gates)

    def product(self) -> DenseOperator:
        """U = U_M ... U_2 U_1 (first gate applied first)."""
        mat = np.eye(self.qubit_dim, dtype=np.complex128)
        for gate in self.gates:
            mat = gate.entries @ mat
        return DenseOperator(self.qubit_dim, mat)


@dataclass(frozen=True)
class CompositeSpace:
    """Clock (M levels) x qubit register (N); composite index = t*N + q."""

    n_steps: int
    qubit_dim: int

    @property
    def total_dim(self) -> int:
        return self.n_steps * self.qubit_dim

    def clock_projector(self, t: int) -> DenseOperator:
        if not 0 <= t < self.n_steps:
            raise ValueError(f"clock index {t} out of range [0, {self.n_steps})")
        proj = np.zeros((self.total_dim, self.total_dim), dtype=np.complex128)
        lo = t * self.qubit_dim
        proj[lo : lo + self.qubit_dim, lo : lo + self.qubit_dim] = np.eye(self.qubit_dim)
        return DenseOperator(self.total_dim, proj)

    def clock_blocks(self, state: StateVector) -> np.ndarray:
        """Unnormalized conditional qubit components c_t, shape (M, N)."""
        if state.dim != self.total_dim:
            raise ValueError(f"state dim {state.dim} != composite dim {self.total_dim}")
        return state.amplitudes.reshape(self.n_steps, self.qubit_dim)


@dataclass(frozen=True)
class OrbitalHamiltonian:
    space: CompositeSpace
    gates: GateSequence
    flux: float
    operator: DenseOperator


def orbital_hamiltonian(gates: GateSequence, flux: float = 0.0) -> OrbitalHamiltonian:
    """Hermitian hopping ring of dim M*N; spectrum lies in [-2, 2].

    For M in {1, 2} the forward and backward hops share edges (self-loop /
    double edge); the construction and its spectral theory still hold.
    """
    m, n = gates.n_steps, gates.qubit_dim
    space = CompositeSpace(m, n)
    h = np.zeros((space.total_dim, space.total_dim), dtype=np.complex128)
    hop = np.exp(1j * flux)
    for t in range(m):
        t_next = (t + 1) % m
        clock = np.zeros((m, m), dtype=np.complex128)
        clock[t_next, t] = 1.0
        term = hop * np.kron(clock, gates.gates[t].entries)
        h += term + term.conj().T
    op = DenseOperator(space.total_dim, h).require_hermitian()
    return OrbitalHamiltonian(space, gates, float(flux), op)


def embed_initial(space: CompositeSpace, psi: StateVector) -> StateVector:
    """|t=0> (x) psi."""
    if psi.dim != space.qubit_dim:
        raise ValueError(f"qubit state dim {psi.dim} != register dim {space.qubit_dim}")
    return tensor_state(basis_state(space.n_steps, 0), psi)


def clock_distribution(state: StateVector, space: CompositeSpace) -> np.ndarray:
    """Exact probability of each clock outcome: ||c_t||^2."""
    blocks = space.clock_blocks(state)
    return np.sum(np.abs(blocks) ** 2, axis=1)


def measure_clock(state: StateVector, space: CompositeSpace, rng: RngStream) -> MeasurementOutcome:
    """Projective measurement over {|t><t| (x) I}; post state |t> (x) c_t / ||c_t||."""
    blocks = space.clock_blocks(state)
    probs = np.sum(np.abs(blocks) ** 2, axis=1)
    t = _sample_index(probs, rng)
    post = np.zeros_like(state.amplitudes)
    lo = t * space.qubit_dim
    post[lo : lo + space.qubit_dim] = blocks[t] / np.sqrt(probs[t])
    return MeasurementOutcome(t, float(probs[t]), StateVector(state.dim, post))


def conditional_qubit_state(state: StateVector, space: CompositeSpace, t: int) -> StateVector:
    """Normalized qubit component at clock level t."""
    blocks = space.clock_blocks(state)
    norm = np.linalg.norm(blocks[t])
    if norm < 1e-12:
        raise ValueError(f"state has no weight at clock level {t}")
    return StateVector(space.qubit_dim, blocks[t] / norm)


@dataclass(frozen=True)
class StructureReport:
    """Fit of the single-phase step relation c_{t+1} = e^{i kappa} U_{t+1} c_t."""

    residuals: np.ndarray
    step_phase: float
    clock_distribution: np.ndarray
    loop_phase: float
    tolerance: float

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals))

    @property
    def within_tolerance(self) -> bool:
        return self.max_residual <= self.tolerance


def verify_step_structure(state: StateVector, gates: GateSequence, tol: float = 1e-8) -> StructureReport:
    """Check a composite state against the orbital eigenstate form.

    Extracts the conditional components c_t, fits the step phase kappa
    minimizing sum_t ||c_{t+1} - e^{i kappa} U_{t+1} c_t||^2 (closed form:
    kappa = -arg sum_t <c_{t+1}|U_{t+1}|c_t>), and reports the per-step
    residuals, the clock distribution, and the loop phase
    alpha_hat = -M kappa mod 2 pi, which for a true eigenstate is an
    eigenphase of the gate product. kappa defaults to 0 when the fit
    correlation vanishes (no step structure at all).
    """
    m = gates.n_steps
    space = CompositeSpace(m, gates.qubit_dim)
    if np.linalg.norm(state.amplitudes) < 1e-12:
        raise ValueError("all-zero state has no step structure")
    blocks = space.clock_blocks(state)
    stepped = np.stack([gates.gates[t].entries @ blocks[t] for t in range(m)])
    shifted = np.roll(blocks, -1, axis=0)  # row t holds c_{t+1}, wrapping
    correlation = complex(np.sum(shifted.conj() * stepped))
    kappa = 0.0 if abs(correlation) < 1e-15 else float(-np.angle(correlation))
    residuals = np.linalg.norm(shifted - np.exp(1j * kappa) * stepped, axis=1)
    loop_phase = _wrap_phase(-m * kappa)
    return StructureReport(
        residuals=residuals,
        step_phase=kappa,
        clock_distribution=np.sum(np.abs(blocks) ** 2, axis=1),
        loop_phase=loop_phase,
        tolerance=tol,
    )


def eigenphase_candidates(energy: float, n_steps: int, flux: float = 0.0) -> tuple[float, ...]:
    """Gate-product eigenphases consistent with one orbital energy.

    Inverts E = 2 cos((alpha + 2 pi m)/M + flux): the candidates are
    M*(+-arccos(E/2) - flux) mod 2 pi (the m branches collapse mod 2 pi);
    duplicates within 1e-9 are merged.
    """
    if abs(energy) > 2.0 + 1e-9:
        raise ValueError(f"|energy| = {abs(energy)} exceeds the orbital band [-2, 2]")
    base = float(np.arccos(np.clip(energy / 2.0, -1.0, 1.0)))
    raw = []
    for sign in (1.0, -1.0):
        for m in range(n_steps):
            raw.append(_wrap_phase(n_steps * (sign * base - flux) - 2.0 * np.pi * m))
    merged: list[float] = []
    for value in sorted(raw):
        if not merged or value - merged[-1] > 1e-9:
            merged.append(float(value))
    return tuple(merged)


@dataclass(frozen=True)
class SearchResult:
    """Outcome of one run of the measure-energy / measure-clock protocol.

    eigen_residual is ||U psi - e^{i alpha} psi|| for the returned qubit
    state against the full gate product; it is reported whether or not the
    state is actually an eigenvector (it is not when the run failed, and
    not necessarily when flux degeneracies leave the energy measurement
    unable to isolate a branch).
    """

    success: bool
    rounds_used: int
    measured_clock: int
    measured_energy: float
    final_qubit_state: StateVector
    eigenphase_estimate: float
    eigen_residual: float
    candidate_phases: tuple[float, ...]
    round_clock_probabilities: tuple[float, ...]


@dataclass(frozen=True)
class _SearchContext:
    gates: GateSequence
    space: CompositeSpace
    flux: float
    decomp: SpectralDecomposition
    gap_tol: float
    product: np.ndarray


def _build_context(gates: GateSequence, flux: float, gap_tol: float) -> _SearchContext:
    ham = orbital_hamiltonian(gates, flux)
    return _SearchContext(
        gates=gates,
        space=ham.space,
        flux=float(flux),
        decomp=eig_hermitian(ham.operator),
        gap_tol=gap_tol,
        product=gates.product().entries,
    )


def _search_once(
    ctx: _SearchContext,
    guess: StateVector,
    max_rounds: int,
    target_clock: int,
    strategy: str,
    rng: RngStream,
) -> SearchResult:
    space = ctx.space
    initial = embed_initial(space, guess)
    state = initial
    success = False
    rounds = 0
    target_probs: list[float] = []
    energy = float("nan")
    clock_outcome = -1
    while rounds < max_rounds:
        rounds += 1
        if strategy == "reinitialize":
            state = initial
        energy, outcome = measure_energy(ctx.decomp, ctx.gap_tol, state, rng)
        target_probs.append(float(clock_distribution(outcome.post_state, space)[target_clock]))
        clock = measure_clock(outcome.post_state, space, rng)
        state = clock.post_state
        clock_outcome = clock.outcome_index
        if clock_outcome == target_clock:
            success = True
            break
    qubit = conditional_qubit_state(state, space, clock_outcome)
    rayleigh = complex(np.vdot(qubit.amplitudes, ctx.product @ qubit.amplitudes))
    alpha = _wrap_phase(np.angle(rayleigh))
    residual = float(
        np.linalg.norm(ctx.product @ qubit.amplitudes - np.exp(1j * alpha) * qubit.amplitudes)
    )
    return SearchResult(
        success=success,
        rounds_used=rounds,
        measured_clock=clock_outcome,
        measured_energy=float(energy),
        final_qubit_state=qubit,
        eigenphase_estimate=alpha,
        eigen_residual=residual,
        candidate_phases=eigenphase_candidates(energy, space.n_steps, ctx.flux),
        round_clock_probabilities=tuple(target_probs),
    )


def eigenvector_search(
    gates: GateSequence,
    guess: StateVector,
    flux: float = 0.0,
    max_rounds: int = 1000,
    target_clock: int = 0,
    strategy: str = "reinitialize",
    rng: RngStream | None = None,
    gap_tol: float = DEFAULT_GAP_TOL,
) -> SearchResult:
    """Repeat (prepare, measure energy, measure clock) until the clock hits target_clock.

    strategy "reinitialize" re-embeds the guess every round (the protocol's
    literal reading); "persist" keeps re-measuring the collapsed state.
    Exhausting max_rounds returns a no-convergence result (success=False)
    rather than raising.
    """
    if guess.dim != gates.qubit_dim:
        raise ValueError(f"guess dim {guess.dim} != register dim {gates.qubit_dim}")
    if max_rounds < 1:
        raise ValueError(f"max_rounds must be >= 1, got {max_rounds}")
    if not 0 <= target_clock < gates.n_steps:
        raise ValueError(f"target_clock {target_clock} out of range [0, {gates.n_steps})")
    if strategy not in _STRATEGIES:
        raise ValueError(f"strategy must be one of {_STRATEGIES}, got {strategy!r}")
    if rng is None:
        rng = RngStream(0)
    ctx = _build_context(gates, flux, gap_tol)
    return _search_once(ctx, guess, max_rounds, target_clock, strategy, rng)


def exact_target_clock_probability(
    gates: GateSequence,
    guess: StateVector,
    flux: float = 0.0,
    target_clock: int = 0,
    gap_tol: float = DEFAULT_GAP_TOL,
) -> float:
    """Exact single-round probability that measure-energy-then-clock hits the target.

    Computed by the projector chain from |t=0> (x) guess; constant across
    rounds under the reinitialize strategy, so the expected round count is
    its reciprocal.
    """
    ctx = _build_context(gates, flux, gap_tol)
    spectrum = group_degenerate(ctx.decomp, gap_tol)
    psi0 = embed_initial(ctx.space, guess)
    amps = ctx.decomp.eigenvectors.conj().T @ psi0.amplitudes
    n = ctx.space.qubit_dim
    lo = target_clock * n
    total = 0.0
    for _, members in spectrum.groups:
        idx = list(members)
        branch = ctx.decomp.eigenvectors[:, idx] @ amps[idx]
        block = branch[lo : lo + n]
        total += float(np.real(np.vdot(block, block)))
    return total


def grover_gate_sequence(n_qubits: int, marked: int) -> GateSequence:
    """[I_w, H, I_0, H]: M = 4 hops whose loop product is the search operator G."""
    h = walsh_hadamard(n_qubits)
    return GateSequence(
        2**n_qubits,
        (oracle_inversion(n_qubits, marked), h, zero_inversion(n_qubits), h),
    )


@dataclass(frozen=True)
class EnergyBranchStat:
    """Exact chain values and sampled counts for one energy group."""

    energy: float
    exact_probability: float
    exact_clock_target_probability: float
    exact_success_given_branch: float
    sample_count: int


@dataclass(frozen=True)
class GroverOrbitalResult:
    n_qubits: int
    marked_index: int
    flux: float
    trials: int
    completed_searches: int
    exact_conditional_success: float
    exact_round_clock_probability: float
    empirical_success: float
    mean_rounds: float
    paper_reference_value: float
    per_energy_stats: tuple[EnergyBranchStat, ...]


def grover_orbital_experiment(
    n_qubits: int,
    marked: int,
    flux: float,
    trials: int,
    rng: RngStream,
    max_rounds: int = 1000,
    target_clock: int = 0,
    gap_tol: float = DEFAULT_GAP_TOL,
    workers: int = 1,
) -> GroverOrbitalResult:
    """Run the search-orbital protocol from |s> and read the qubits.

    Per trial: eigenvector_search (reinitialize) until the clock hits
    target_clock, then measure the qubit register; success = marked outcome.
    exact_conditional_success is the projector-chain value conditioned on
    reaching the target clock; the claimed asymptotic 1/2 is recorded as
    paper_reference_value and never asserted.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    dim = 2**n_qubits
    if not 0 <= marked < dim:
        raise ValueError(f"marked index {marked} out of range [0, {dim})")
    gates = grover_gate_sequence(n_qubits, marked)
    ctx = _build_context(gates, flux, gap_tol)
    space = ctx.space
    s_full = embed_initial(space, uniform_superposition(n_qubits))

    # Exact chain: P(group) -> P(target clock | group) -> P(marked | group, clock).
    spectrum = group_degenerate(ctx.decomp, gap_tol)
    amps = ctx.decomp.eigenvectors.conj().T @ s_full.amplitudes
    stats: list[EnergyBranchStat] = []
    joint_w = 0.0
    joint_clock = 0.0
    lo = target_clock * dim
    for energy, members in spectrum.groups:
        idx = list(members)
        branch = ctx.decomp.eigenvectors[:, idx] @ amps[idx]  # unnormalized P_g |s_full>
        p_group = float(np.real(np.vdot(branch, branch)))
        block = branch[lo : lo + dim]
        block_norm2 = float(np.real(np.vdot(block, block)))
        w_weight = float(np.abs(block[marked]) ** 2)
        joint_w += w_weight
        joint_clock += block_norm2
        clock_given_group = block_norm2 / p_group if p_group > 1e-14 else 0.0
        w_given = w_weight / block_norm2 if block_norm2 > 1e-14 else 0.0
        stats.append(EnergyBranchStat(energy, p_group, clock_given_group, w_given, 0))
    exact_success = joint_w / joint_clock

    counts = [0] * len(spectrum.groups)
    hits = 0
    completed = 0
    total_rounds = 0
    guess = uniform_superposition(n_qubits)

    def one_trial(trial: int) -> tuple[int, bool, int | None, bool]:
        stream = rng.for_trial(trial)
        result = _search_once(ctx, guess, max_rounds, target_clock, "reinitialize", stream)
        if not result.success:
            return result.rounds_used, False, None, False
        group_index = _locate_group(spectrum, result.measured_energy)
        qubit = measure_computational(result.final_qubit_state, stream)
        return result.rounds_used, True, group_index, qubit.outcome_index == marked

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trial_results = list(pool.map(one_trial, range(trials)))
    else:
        trial_results = [one_trial(t) for t in range(trials)]

    for rounds_used, succeeded, group_index, hit in trial_results:
        total_rounds += rounds_used
        if not succeeded:
            continue
        completed += 1
        counts[group_index] += 1
        hits += hit

    stats = [
        EnergyBranchStat(s.energy, s.exact_probability, s.exact_clock_target_probability,
                         s.exact_success_given_branch, counts[i])
        for i, s in enumerate(stats)
    ]
    return GroverOrbitalResult(
        n_qubits=n_qubits,
        marked_index=marked,
        flux=float(flux),
        trials=trials,
        completed_searches=completed,
        exact_conditional_success=exact_success,
        exact_round_clock_probability=joint_clock,
        empirical_success=hits / completed if completed else float("nan"),
        mean_rounds=total_rounds / trials,
        paper_reference_value=0.5,
        per_energy_stats=tuple(stats),
    )


def _locate_group(spectrum, energy: float) -> int:
    for i, (group_energy, _) in enumerate(spectrum.groups):
        if abs(group_energy - energy) <= 1e-9:
            return i
    raise ValueError(f"energy {energy} does not match any group")
