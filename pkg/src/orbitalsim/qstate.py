"""Dense state and operator algebra with seeded projective measurement.

Conventions used throughout the package:

- Basis index i encodes qubit values big-endian: qubit 0 is the most
  significant bit, so ``|w>`` for an n-qubit register is the basis state
  whose index is the integer w.
- Everything is dense complex128. Intended scale is <= ~4096 amplitudes.
- States must be normalized to NORM_TOL; asserted operator properties
  (unitarity, hermiticity) hold to OP_TOL in max-norm.
- Randomness comes from Philox4x64 keyed by (master_seed, stream_id), so
  identical streams reproduce bit-identical outcome sequences on any
  platform. Each concurrent consumer owns its own stream.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

NORM_TOL = 1e-9
OP_TOL = 1e-10


def _as_complex_vector(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.complex128)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-d amplitude sequence, got shape {arr.shape}")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class StateVector:
    """Normalized complex amplitudes over a dim-dimensional space."""

    dim: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _as_complex_vector(self.amplitudes)
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if amps.shape[0] != self.dim:
            raise ValueError(f"amplitude length {amps.shape[0]} != dim {self.dim}")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {norm!r} deviates from 1 by more than {NORM_TOL}")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @classmethod
    def normalized(cls, values) -> "StateVector":
        """Build a state from arbitrary amplitudes, rescaling to unit norm."""
        amps = _as_complex_vector(values)
        norm = np.linalg.norm(amps)
        if norm < 1e-12:
            raise ValueError("cannot normalize a (near-)zero vector")
        return cls(amps.shape[0], amps / norm)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class DenseOperator:
    """Square complex matrix with on-demand unitarity/hermiticity checks."""

    dim: int
    entries: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.entries, dtype=np.complex128)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {mat.shape}")
        if self.dim < 1 or mat.shape[0] != self.dim:
            raise ValueError(f"matrix shape {mat.shape} != dim {self.dim}")
        object.__setattr__(self, "entries", _frozen(mat))

    @classmethod
    def from_matrix(cls, values) -> "DenseOperator":
        mat = np.asarray(values, dtype=np.complex128)
        return cls(mat.shape[0], mat)

    @classmethod
    def identity(cls, dim: int) -> "DenseOperator":
        return cls(dim, np.eye(dim, dtype=np.complex128))

    def dagger(self) -> "DenseOperator":
        return DenseOperator(self.dim, self.entries.conj().T)

    def unitarity_defect(self) -> float:
        """max-norm of U†U − I."""
        defect = self.entries.conj().T @ self.entries - np.eye(self.dim)
        return float(np.max(np.abs(defect)))

    def hermiticity_defect(self) -> float:
        """max-norm of H − H†."""
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def require_unitary(self, tol: float = OP_TOL) -> "DenseOperator":
        defect = self.unitarity_defect()
        if defect > tol:
            raise ValueError(f"operator is not unitary: max |U†U − I| = {defect:.3e} > {tol}")
        return self

    def require_hermitian(self, tol: float = OP_TOL) -> "DenseOperator":
        defect = self.hermiticity_defect()
        if defect > tol:
            raise ValueError(f"operator is not Hermitian: max |H − H†| = {defect:.3e} > {tol}")
        return self

    def __matmul__(self, other: "DenseOperator") -> "DenseOperator":
        if not isinstance(other, DenseOperator):
            return NotImplemented
        if other.dim != self.dim:
            raise ValueError(f"operator dims differ: {self.dim} vs {other.dim}")
        return DenseOperator(self.dim, self.entries @ other.entries)


@dataclass(frozen=True)
class MeasurementOutcome:
    """One sampled projective outcome: label, exact branch probability, post state."""

    outcome_index: int
    probability: float
    post_state: StateVector


@dataclass
class RngStream:
    """Reproducible random stream: Philox4x64 keyed by (master_seed, stream_id).

    The same (master_seed, stream_id) pair yields the same draw sequence on
    every platform. Measurement sampling advances the stream; everything
    else in the package is pure.
    """

    master_seed: int
    stream_id: int = 0
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        mask = (1 << 64) - 1
        key = np.array([self.master_seed & mask, self.stream_id & mask], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def uniform(self) -> float:
        """One double in [0, 1)."""
        return float(self._gen.random())

    def for_trial(self, trial_index: int) -> "RngStream":
        """Independent stream for one trial: (master_seed, trial_index)."""
        return RngStream(self.master_seed, trial_index)


def _sample_index(probabilities: np.ndarray, rng: RngStream) -> int:
    """Sample an index from a probability vector using one uniform draw.

    Zero-probability entries are unreachable: their cumulative intervals are
    empty and searchsorted(side='right') skips them.
    """
    cum = np.cumsum(probabilities)
    total = cum[-1]
    if abs(total - 1.0) > NORM_TOL:
        raise ValueError(f"probabilities sum to {total!r}, not 1")
    u = rng.uniform() * total
    k = int(np.searchsorted(cum, u, side="right"))
    return min(k, len(cum) - 1)


def basis_state(dim: int, index: int) -> StateVector:
    """|index> in a dim-dimensional space."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if not 0 <= index < dim:
        raise ValueError(f"index {index} out of range [0, {dim})")
    amps = np.zeros(dim, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(dim, amps)


def uniform_superposition(n_qubits: int) -> StateVector:
    """|s>: every amplitude 2^(-n/2), the Walsh-Hadamard transform of |0...0>."""
    if n_qubits < 1:
        raise ValueError(f"n_qubits must be >= 1, got {n_qubits}")
    dim = 2**n_qubits
    return StateVector(dim, np.full(dim, dim**-0.5, dtype=np.complex128))


def tensor_state(a: StateVector, b: StateVector) -> StateVector:
    """Product state: amplitude at i*dim(b)+j is a_i * b_j."""
    return StateVector(a.dim * b.dim, np.kron(a.amplitudes, b.amplitudes))


def tensor_op(a: DenseOperator, b: DenseOperator) -> DenseOperator:
    """Kronecker product, dim(a)*dim(b)."""
    return DenseOperator(a.dim * b.dim, np.kron(a.entries, b.entries))


def apply(op: DenseOperator, psi: StateVector) -> StateVector:
    """op @ psi for a norm-preserving op; errors if the result drifts off unit norm."""
    if op.dim != psi.dim:
        raise ValueError(f"operator dim {op.dim} != state dim {psi.dim}")
    out = op.entries @ psi.amplitudes
    norm = float(np.linalg.norm(out))
    if abs(norm - 1.0) > NORM_TOL:
        raise ValueError(f"application broke normalization (norm {norm!r}); operator not unitary?")
    return StateVector(psi.dim, out)


def overlap(a: StateVector, b: StateVector) -> complex:
    """<a|b>, conjugate-linear in the first argument."""
    if a.dim != b.dim:
        raise ValueError(f"state dims differ: {a.dim} vs {b.dim}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def _check_projector_family(projectors: Sequence[DenseOperator], dim: int) -> None:
    total = np.zeros((dim, dim), dtype=np.complex128)
    for p in projectors:
        if p.dim != dim:
            raise ValueError(f"projector dim {p.dim} != state dim {dim}")
        total += p.entries
    defect = np.max(np.abs(total - np.eye(dim)))
    if defect > NORM_TOL:
        raise ValueError(f"projectors do not sum to identity: max deviation {defect:.3e}")
    for i in range(len(projectors)):
        for j in range(i + 1, len(projectors)):
            cross = np.max(np.abs(projectors[i].entries @ projectors[j].entries))
            if cross > NORM_TOL:
                raise ValueError(f"projectors {i} and {j} are not orthogonal (max |P_iP_j| = {cross:.3e})")


def measure_projective(
    psi: StateVector, projectors: Sequence[DenseOperator], rng: RngStream
) -> MeasurementOutcome:
    """Sample outcome k with probability ||P_k psi||^2; collapse and renormalize.

    The projector family must be pairwise orthogonal and complete (sum to
    identity within NORM_TOL); both are validated.
    """
    if len(projectors) == 0:
        raise ValueError("empty projector family")
    _check_projector_family(projectors, psi.dim)
    branches = [p.entries @ psi.amplitudes for p in projectors]
    probs = np.array([np.real(np.vdot(b, b)) for b in branches])
    k = _sample_index(probs, rng)
    post = branches[k] / np.sqrt(probs[k])
    return MeasurementOutcome(k, float(probs[k]), StateVector(psi.dim, post))


def measure_computational(psi: StateVector, rng: RngStream) -> MeasurementOutcome:
    """Projective measurement in the computational (logical qubit) basis."""
    probs = psi.probabilities()
    k = _sample_index(probs, rng)
    return MeasurementOutcome(k, float(probs[k]), basis_state(psi.dim, k))
