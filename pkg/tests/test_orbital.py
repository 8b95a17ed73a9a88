import numpy as np
import pytest

from orbitalsim.orbital import (
    GOLDEN_FLUX,
    CompositeSpace,
    GateSequence,
    clock_distribution,
    conditional_qubit_state,
    eigenphase_candidates,
    eigenvector_search,
    embed_initial,
    grover_gate_sequence,
    grover_orbital_experiment,
    measure_clock,
    orbital_hamiltonian,
    verify_step_structure,
)
from orbitalsim.qstate import DenseOperator, RngStream, StateVector, basis_state, uniform_superposition
from orbitalsim.spectral import eig_hermitian, group_degenerate

X = DenseOperator.from_matrix([[0, 1], [1, 0]])
H2 = DenseOperator.from_matrix(np.array([[1, 1], [1, -1]]) / np.sqrt(2))
I2 = DenseOperator.identity(2)


def haar_unitary(dim, seed):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def random_gates(dim, steps, seed):
    return GateSequence(dim, tuple(
        DenseOperator.from_matrix(haar_unitary(dim, seed + 17 * k)) for k in range(steps)))


def product_eigenphases(gates):
    return np.mod(np.angle(np.linalg.eigvals(gates.product().entries)), 2 * np.pi)


def test_gate_sequence_validation():
    with pytest.raises(ValueError):
        GateSequence(2, ())
    with pytest.raises(ValueError, match="gate 1"):
        GateSequence(2, (X, DenseOperator.from_matrix([[1, 0], [0, 2]])))
    with pytest.raises(ValueError):
        GateSequence(2, (X, DenseOperator.identity(4)))


def test_gate_sequence_product_order():
    # product is U2 U1: first gate applied first
    seq = GateSequence(2, (X, H2))
    assert np.allclose(seq.product().entries, H2.entries @ X.entries)


def test_identity_ring_spectrum_no_flux():
    # 2 cos(2 pi m / 3) = {2, -1, -1}, each with qubit multiplicity 2
    ham = orbital_hamiltonian(GateSequence(2, (I2, I2, I2)), 0.0)
    vals = np.sort(eig_hermitian(ham.operator).eigenvalues)
    assert np.allclose(vals, [-1, -1, -1, -1, 2, 2], atol=1e-10)


def test_identity_ring_spectrum_with_flux():
    flux = 0.41
    ham = orbital_hamiltonian(GateSequence(2, (I2, I2, I2)), flux)
    vals = np.sort(eig_hermitian(ham.operator).eigenvalues)
    expected = np.sort(np.concatenate([2 * np.cos(2 * np.pi * np.arange(3) / 3 + flux)] * 2))
    assert np.allclose(vals, expected, atol=1e-10)


def test_orbital_hamiltonian_hermitian_random_gates():
    for m in (1, 2, 3, 5):
        ham = orbital_hamiltonian(random_gates(4, m, 100 + m), GOLDEN_FLUX)
        assert ham.operator.hermiticity_defect() <= 1e-10


def test_orbital_spectrum_in_band():
    ham = orbital_hamiltonian(random_gates(3, 4, 7), 1.1)
    vals = eig_hermitian(ham.operator).eigenvalues
    assert np.all(np.abs(vals) <= 2 + 1e-9)


def test_energy_multiset_matches_product_eigenphases():
    # oracle: diagonalize U directly, then predict the full orbital spectrum
    for m, seed in [(3, 0), (4, 1), (5, 2)]:
        gates = random_gates(4, m, seed)
        flux = GOLDEN_FLUX
        vals = np.sort(eig_hermitian(orbital_hamiltonian(gates, flux).operator).eigenvalues)
        predicted = np.sort(np.concatenate([
            2 * np.cos((alpha + 2 * np.pi * np.arange(m)) / m + flux)
            for alpha in product_eigenphases(gates)]))
        assert np.max(np.abs(vals - predicted)) <= 1e-7


def test_grover_gates_flux_zero_levels_all_degenerate():
    gates = grover_gate_sequence(2, 3)
    decomp = eig_hermitian(orbital_hamiltonian(gates, 0.0).operator)
    spectrum = group_degenerate(decomp, 1e-8)
    assert all(len(members) >= 2 for _, members in spectrum.groups)


def test_clock_projectors_complete():
    space = CompositeSpace(3, 2)
    total = sum(space.clock_projector(t).entries for t in range(3))
    assert np.array_equal(total, np.eye(6))


def test_embed_initial_indexing():
    out = embed_initial(CompositeSpace(2, 2), basis_state(2, 1))
    assert np.array_equal(out.amplitudes, [0, 1, 0, 0])
    with pytest.raises(ValueError):
        embed_initial(CompositeSpace(2, 2), basis_state(3, 0))


def test_embed_initial_clock_measurement_deterministic():
    space = CompositeSpace(4, 2)
    state = embed_initial(space, uniform_superposition(1))
    out = measure_clock(state, space, RngStream(0))
    assert out.outcome_index == 0
    assert out.probability == pytest.approx(1.0)


def test_measure_clock_product_state():
    space = CompositeSpace(3, 2)
    state = StateVector(6, np.array([0, 0, 0, 0, 0.6, 0.8], dtype=complex))  # |t=2> x psi
    out = measure_clock(state, space, RngStream(5))
    assert out.outcome_index == 2
    assert out.probability == pytest.approx(1.0)
    assert np.allclose(conditional_qubit_state(out.post_state, space, 2).amplitudes, [0.6, 0.8])


def test_eigenvector_clock_distribution_uniform():
    # exact projector probabilities: each 1/M for a nondegenerate-level eigenvector
    gates = random_gates(4, 4, 11)
    ham = orbital_hamiltonian(gates, GOLDEN_FLUX)
    decomp = eig_hermitian(ham.operator)
    spectrum = group_degenerate(decomp, 1e-8)
    assert all(len(members) == 1 for _, members in spectrum.groups)
    for i in range(decomp.dim):
        dist = clock_distribution(decomp.eigenvector(i), ham.space)
        assert np.max(np.abs(dist - 0.25)) <= 1e-9
        assert np.sum(dist) == pytest.approx(1.0, abs=1e-9)


def test_verify_structure_on_exact_eigenvectors():
    gates = random_gates(4, 4, 23)  # random 2-qubit gates, M=4
    ham = orbital_hamiltonian(gates, GOLDEN_FLUX)
    decomp = eig_hermitian(ham.operator)
    phases = product_eigenphases(gates)
    for i in range(decomp.dim):
        report = verify_step_structure(decomp.eigenvector(i), gates)
        assert report.max_residual <= 1e-8
        assert np.max(np.abs(report.clock_distribution - 0.25)) <= 1e-9
        gap = np.min(np.abs(np.angle(np.exp(1j * (phases - report.loop_phase)))))
        assert gap <= 1e-6
        assert report.within_tolerance


def test_verify_structure_momentum_state():
    # (1/sqrt3) sum_t e^{i 2 pi t/3} |t> x psi over identity gates fits kappa = 2pi/3
    psi = np.array([0.6, 0.8], dtype=complex)
    amps = np.concatenate([np.exp(2j * np.pi * t / 3) * psi for t in range(3)]) / np.sqrt(3)
    state = StateVector(6, amps)
    report = verify_step_structure(state, GateSequence(2, (I2, I2, I2)))
    assert report.step_phase == pytest.approx(2 * np.pi / 3, abs=1e-12)
    assert report.max_residual <= 1e-12
    assert report.loop_phase == pytest.approx(0.0, abs=1e-9)


def test_verify_structure_product_state_fails():
    gates = GateSequence(2, (X, H2))
    state = embed_initial(CompositeSpace(2, 2), basis_state(2, 0))
    report = verify_step_structure(state, gates)
    assert report.max_residual >= 0.5
    assert not report.within_tolerance


def test_eigenphase_candidates_examples():
    assert eigenphase_candidates(2.0, 3, 0.0) == (0.0,)
    assert eigenphase_candidates(-2.0, 1, 0.0) == (pytest.approx(np.pi),)
    with pytest.raises(ValueError):
        eigenphase_candidates(2.5, 3, 0.0)


def test_eigenphase_candidates_cover_loop_phases():
    # every eigenvector's fitted loop phase appears in the candidates of its energy
    gates = random_gates(3, 5, 31)
    flux = GOLDEN_FLUX
    decomp = eig_hermitian(orbital_hamiltonian(gates, flux).operator)
    for i in range(decomp.dim):
        report = verify_step_structure(decomp.eigenvector(i), gates)
        candidates = eigenphase_candidates(float(decomp.eigenvalues[i]), 5, flux)
        gap = min(abs(np.angle(np.exp(1j * (c - report.loop_phase)))) for c in candidates)
        assert gap <= 1e-6


def test_search_single_step_x_gate():
    # M=1, U=X: collapse to (|0> +- |1>)/sqrt2, eigenphase 0 or pi, one round
    gates = GateSequence(2, (X,))
    saw = set()
    for seed in range(12):
        result = eigenvector_search(gates, basis_state(2, 0), rng=RngStream(seed))
        assert result.success and result.rounds_used == 1
        assert result.eigen_residual <= 1e-9
        assert np.allclose(np.abs(result.final_qubit_state.amplitudes), [2**-0.5, 2**-0.5])
        phase = result.eigenphase_estimate
        assert min(abs(phase), abs(phase - np.pi)) <= 1e-9
        saw.add(round(phase, 6))
    assert len(saw) == 2  # both branches appear across seeds


def test_search_eigenvector_guess_is_fixed_point():
    gates = random_gates(4, 3, 41)
    vals, vecs = np.linalg.eig(gates.product().entries)
    guess = StateVector.normalized(vecs[:, 0])
    result = eigenvector_search(gates, guess, flux=GOLDEN_FLUX, max_rounds=200,
                                rng=RngStream(8))
    assert result.success
    fid = abs(np.vdot(result.final_qubit_state.amplitudes, guess.amplitudes)) ** 2
    assert fid >= 1 - 1e-9
    expected_phase = np.mod(np.angle(vals[0]), 2 * np.pi)
    assert abs(np.angle(np.exp(1j * (result.eigenphase_estimate - expected_phase)))) <= 1e-8


def test_search_results_deterministic():
    gates = grover_gate_sequence(2, 1)
    a = eigenvector_search(gates, uniform_superposition(2), GOLDEN_FLUX, rng=RngStream(99, 3))
    b = eigenvector_search(gates, uniform_superposition(2), GOLDEN_FLUX, rng=RngStream(99, 3))
    assert a.success == b.success and a.rounds_used == b.rounds_used
    assert a.measured_energy == b.measured_energy
    assert a.eigenphase_estimate == b.eigenphase_estimate
    assert a.eigen_residual == b.eigen_residual
    assert np.array_equal(a.final_qubit_state.amplitudes, b.final_qubit_state.amplitudes)
    assert a.round_clock_probabilities == b.round_clock_probabilities
    assert a.candidate_phases == b.candidate_phases


def test_search_round_exhaustion_reports_failure():
    gates = grover_gate_sequence(2, 2)
    failed = None
    for seed in range(40):
        result = eigenvector_search(gates, uniform_superposition(2), GOLDEN_FLUX,
                                    max_rounds=1, rng=RngStream(seed))
        assert result.success == (result.measured_clock == 0)
        if not result.success:
            failed = result
    assert failed is not None
    assert failed.rounds_used == 1
    assert failed.measured_clock != 0
    assert len(failed.round_clock_probabilities) == 1


def test_search_persist_strategy_runs():
    gates = grover_gate_sequence(2, 0)
    result = eigenvector_search(gates, uniform_superposition(2), GOLDEN_FLUX,
                                strategy="persist", rng=RngStream(17))
    assert result.success
    assert result.rounds_used >= 1


def test_search_argument_validation():
    gates = grover_gate_sequence(2, 0)
    s = uniform_superposition(2)
    with pytest.raises(ValueError):
        eigenvector_search(gates, uniform_superposition(3))
    with pytest.raises(ValueError):
        eigenvector_search(gates, s, max_rounds=0)
    with pytest.raises(ValueError):
        eigenvector_search(gates, s, target_clock=4)
    with pytest.raises(ValueError):
        eigenvector_search(gates, s, strategy="other")


def test_grover_orbital_exact_values():
    # derived closed forms: 1/2 at symmetry-breaking flux, 1/N at flux 0
    for n in (2, 3):
        res_flux = grover_orbital_experiment(n, 1, GOLDEN_FLUX, 50, RngStream(1))
        assert res_flux.exact_conditional_success == pytest.approx(0.5, abs=1e-9)
        res_zero = grover_orbital_experiment(n, 1, 0.0, 50, RngStream(1))
        assert res_zero.exact_conditional_success == pytest.approx(2.0**-n, abs=1e-9)
        for res in (res_flux, res_zero):
            assert res.exact_round_clock_probability == pytest.approx(0.25, abs=1e-9)
            assert res.paper_reference_value == 0.5


def test_exact_target_clock_probability_matches_experiment():
    from orbitalsim.orbital import exact_target_clock_probability

    gates = grover_gate_sequence(2, 1)
    p = exact_target_clock_probability(gates, uniform_superposition(2), GOLDEN_FLUX)
    assert p == pytest.approx(0.25, abs=1e-12)
    res = grover_orbital_experiment(2, 1, GOLDEN_FLUX, 5, RngStream(0))
    assert p == pytest.approx(res.exact_round_clock_probability, abs=1e-12)
    # also exact for an arbitrary gate set, cross-checked against group algebra
    other = random_gates(3, 3, 77)
    p_other = exact_target_clock_probability(other, StateVector.normalized([1, 2, 3]), 0.9, 2)
    assert 0 <= p_other <= 1


def test_grover_orbital_round_probabilities_are_quarter():
    result = eigenvector_search(grover_gate_sequence(2, 3), uniform_superposition(2),
                                GOLDEN_FLUX, rng=RngStream(23))
    assert all(p == pytest.approx(0.25, abs=1e-9) for p in result.round_clock_probabilities)


def test_grover_orbital_empirical_within_three_sigma():
    trials = 3000
    res = grover_orbital_experiment(2, 3, GOLDEN_FLUX, trials, RngStream(6))
    p = res.exact_conditional_success
    sigma = np.sqrt(p * (1 - p) / res.completed_searches)
    assert abs(res.empirical_success - p) <= 3 * sigma
    assert res.completed_searches == trials  # max_rounds=1000 never exhausts in practice
    assert abs(res.mean_rounds - 4.0) <= 3 * np.sqrt(12.0 / trials)


def test_grover_orbital_worker_count_invariant():
    a = grover_orbital_experiment(2, 2, GOLDEN_FLUX, 300, RngStream(4))
    b = grover_orbital_experiment(2, 2, GOLDEN_FLUX, 300, RngStream(4), workers=3)
    assert a == b


def test_grover_orbital_branch_stats_consistent():
    res = grover_orbital_experiment(2, 0, GOLDEN_FLUX, 500, RngStream(12))
    total_prob = sum(s.exact_probability for s in res.per_energy_stats)
    assert total_prob == pytest.approx(1.0, abs=1e-9)
    live = [s for s in res.per_energy_stats if s.exact_probability > 1e-12]
    # |s> populates exactly the eight plane levels (two branches x four momenta)
    assert len(live) == 8
    for s in live:
        assert s.exact_probability == pytest.approx(1 / 8, abs=1e-9)
        assert s.exact_clock_target_probability == pytest.approx(0.25, abs=1e-9)
        assert s.exact_success_given_branch == pytest.approx(0.5, abs=1e-9)
    assert sum(s.sample_count for s in res.per_energy_stats) == res.completed_searches
