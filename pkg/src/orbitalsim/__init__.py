"""orbitalsim: exact simulation and claims-checking for measurement-based
eigenvector finding in quantum search.

Subpackages by concern: qstate (states, operators, seeded measurement),
spectral (eigendecomposition, evolution, energy measurement), grover
(discrete search operator and its plane eigensystem), continuous_search
(two-projector analog Hamiltonian), orbital (cyclic clock Hamiltonian and
search protocols), eigenfilter (power-sum refinement), records + cli
(experiment harness).
"""

__version__ = "0.1.0"

from .qstate import (
    DenseOperator,
    MeasurementOutcome,
    RngStream,
    StateVector,
    apply,
    basis_state,
    measure_computational,
    measure_projective,
    overlap,
    tensor_op,
    tensor_state,
    uniform_superposition,
)
from .spectral import (
    DegenerateSpectrum,
    SpectralDecomposition,
    eig_hermitian,
    evolve,
    group_degenerate,
    measure_energy,
)
from .grover import (
    GroverInstance,
    PlaneEigensystem,
    grover_instance,
    grover_operator,
    grover_success_curve,
    oracle_inversion,
    plane_eigensystem,
    walsh_hadamard,
    zero_inversion,
)
from .continuous_search import (
    EvolutionTrace,
    FGInstance,
    fg_evolution_sweep,
    fg_hamiltonian,
    fg_plane_eigensystem,
    fg_shortcut_experiment,
)
from .orbital import (
    GOLDEN_FLUX,
    CompositeSpace,
    GateSequence,
    OrbitalHamiltonian,
    SearchResult,
    StructureReport,
    eigenphase_candidates,
    eigenvector_search,
    exact_target_clock_probability,
    embed_initial,
    grover_gate_sequence,
    grover_orbital_experiment,
    measure_clock,
    orbital_hamiltonian,
    verify_step_structure,
)
from .eigenfilter import CancellationError, ConvergenceRow, convergence_study, power_sum
