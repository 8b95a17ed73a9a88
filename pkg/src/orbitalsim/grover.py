"""Discrete search operator G = H·I0·H·I_w and its exact plane eigensystem.

Sign convention is taken literally from the source construction: every
inversion is I_k = I − 2|k><k| (it negates the |k> component), so
H·I0·H = I − 2|s><s| and G is the negative of the textbook
diffusion-times-oracle operator. All phases below follow from that choice.

Restricted to span{|s>, |w>}, G is a rotation by pi + 2*arcsin(N^-1/2);
its eigenvectors are the near-circular combinations of |s> and |w>, exact
up to O(1/sqrt(N)) corrections which this module computes rather than
assumes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qstate import (
    DenseOperator,
    StateVector,
    apply,
    basis_state,
    overlap,
    uniform_superposition,
)

_PLANE_RESIDUAL_TOL = 1e-9


def oracle_inversion(n_qubits: int, marked: int) -> DenseOperator:
    """I_w = I − 2|w><w|: diagonal, −1 at the marked index, +1 elsewhere."""
    dim = 2**n_qubits
    if not 0 <= marked < dim:
        raise ValueError(f"marked index {marked} out of range [0, {dim})")
    diag = np.ones(dim, dtype=np.complex128)
    diag[marked] = -1.0
    return DenseOperator(dim, np.diag(diag))


def zero_inversion(n_qubits: int) -> DenseOperator:
    """I_0 = I − 2|0><0|."""
    if n_qubits < 1:
        raise ValueError(f"n_qubits must be >= 1, got {n_qubits}")
    return oracle_inversion(n_qubits, 0)


def walsh_hadamard(n_qubits: int) -> DenseOperator:
    """n-fold Kronecker power of the 2x2 Hadamard."""
    if n_qubits < 1:
        raise ValueError(f"n_qubits must be >= 1, got {n_qubits}")
    h2 = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
    mat = np.array([[1.0]])
    for _ in range(n_qubits):
        mat = np.kron(mat, h2)
    return DenseOperator(2**n_qubits, mat.astype(np.complex128))


@dataclass(frozen=True)
class GroverInstance:
    """One search instance with all four factor operators cached."""

    n_qubits: int
    marked_index: int
    n_states: int
    oracle: DenseOperator      # I_w
    zero: DenseOperator        # I_0
    hadamard: DenseOperator    # H^(tensor n)
    operator: DenseOperator    # G = H I_0 H I_w

    def marked_state(self) -> StateVector:
        return basis_state(self.n_states, self.marked_index)

    def uniform_state(self) -> StateVector:
        return uniform_superposition(self.n_qubits)


def grover_instance(n_qubits: int, marked: int) -> GroverInstance:
    """Build and validate all operators for one (n, w)."""
    i_w = oracle_inversion(n_qubits, marked)
    i_0 = zero_inversion(n_qubits)
    h = walsh_hadamard(n_qubits)
    g = h @ i_0 @ h @ i_w
    for op in (i_w, i_0, h, g):
        op.require_unitary()
    rebuilt = h.entries @ i_0.entries @ h.entries @ i_w.entries
    if np.max(np.abs(g.entries - rebuilt)) > 1e-12:
        raise ValueError("cached G deviates from the product of its own factors")
    return GroverInstance(n_qubits, marked, 2**n_qubits, i_w, i_0, h, g)


def grover_operator(instance: GroverInstance) -> DenseOperator:
    """G = H·I0·H·I_w (right factor applied first)."""
    return instance.operator


@dataclass(frozen=True)
class PlaneEigensystem:
    """Eigenvectors of the search operator spanning the |s>,|w> plane.

    plus is the branch whose eigenphase lies in (0, pi):
    G plus = e^{i theta} plus and G minus = e^{-i theta} minus.
    """

    plus: StateVector
    minus: StateVector
    eigenphase: float


def _plane_basis(instance: GroverInstance) -> np.ndarray:
    """Orthonormal basis (columns) of span{|s>,|w>}: |w> and the unit complement of |s>."""
    w = instance.marked_state().amplitudes
    s = instance.uniform_state().amplitudes
    x = float(np.real(np.vdot(w, s)))
    r = s - x * w
    r = r / np.linalg.norm(r)
    return np.column_stack([w, r])


def plane_eigensystem(instance: GroverInstance) -> PlaneEigensystem:
    """Exact eigenvectors of G restricted to span{|s>,|w>}.

    Diagonalizes the 2x2 restriction of G in an orthonormalized plane basis
    and lifts the eigenvectors back to the full space. The restriction is a
    rotation, so the two eigenphases are conjugate.
    """
    if instance.n_states < 2:
        raise ValueError("plane eigensystem needs N >= 2")
    basis = _plane_basis(instance)
    restricted = basis.conj().T @ instance.operator.entries @ basis
    eigenvalues, vectors = np.linalg.eig(restricted)
    phases = np.mod(np.angle(eigenvalues), 2 * np.pi)
    in_upper = (phases > 0) & (phases < np.pi)
    if np.count_nonzero(in_upper) != 1:
        raise ValueError("expected exactly one plane eigenphase in (0, pi)")
    plus_i = int(np.argmax(in_upper))
    minus_i = 1 - plus_i

    def lift(col: np.ndarray) -> StateVector:
        full = basis @ col
        full = full / np.linalg.norm(full)
        pivot = full[int(np.argmax(np.abs(full)))]
        return StateVector(instance.n_states, full * (pivot.conjugate() / abs(pivot)))

    plus, minus = lift(vectors[:, plus_i]), lift(vectors[:, minus_i])
    theta = float(phases[plus_i])
    for vec, phase in ((plus, theta), (minus, -theta)):
        residual = np.linalg.norm(
            instance.operator.entries @ vec.amplitudes - np.exp(1j * phase) * vec.amplitudes
        )
        if residual > _PLANE_RESIDUAL_TOL:
            raise ValueError(f"plane eigenvector residual {residual:.3e} too large")
    return PlaneEigensystem(plus, minus, theta)


def circular_states(instance: GroverInstance) -> tuple[StateVector, StateVector]:
    """The approximate circular combinations (|s> + i|w>)/sqrt(2), (|s> − i|w>)/sqrt(2).

    These are exactly normalized because <s|w> is real; they approximate the
    true plane eigenvectors to O(1/sqrt(N)).
    """
    s = instance.uniform_state().amplitudes
    w = instance.marked_state().amplitudes
    return (
        StateVector(instance.n_states, (s + 1j * w) / np.sqrt(2.0)),
        StateVector(instance.n_states, (s - 1j * w) / np.sqrt(2.0)),
    )


def predicted_eigenphase(n_qubits: int) -> float:
    """pi + 2*arcsin(N^-1/2): the rotation angle of G on the plane."""
    return float(np.pi + 2.0 * np.arcsin(2.0 ** (-n_qubits / 2.0)))


def grover_success_curve(instance: GroverInstance, k_max: int) -> list[tuple[int, float]]:
    """Exact |<w|G^k|s>|^2 for k = 0..k_max, by repeated application."""
    if k_max < 0:
        raise ValueError(f"k_max must be >= 0, got {k_max}")
    state = instance.uniform_state()
    w = instance.marked_state()
    curve = []
    for k in range(k_max + 1):
        curve.append((k, float(abs(overlap(w, state)) ** 2)))
        if k < k_max:
            state = apply(instance.operator, state)
    return curve
