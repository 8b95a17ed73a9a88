"""Hermitian eigendecomposition, degeneracy grouping, time evolution, energy measurement.

Evolution is always spectral: e^{-iHt} = V e^{-i diag(lambda) t} V†. Energy
measurement projects onto whole degenerate groups (tolerance-grouped
eigenvalues), not individual eigenvectors.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qstate import (
    NORM_TOL,
    DenseOperator,
    MeasurementOutcome,
    RngStream,
    StateVector,
    _sample_index,
)

DEFAULT_GAP_TOL = 1e-8
_RESIDUAL_TOL = 1e-8


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Make each column's largest-magnitude component real positive (first max on ties)."""
    fixed = vectors.copy()
    for j in range(fixed.shape[1]):
        col = fixed[:, j]
        i = int(np.argmax(np.abs(col)))
        pivot = col[i]
        if abs(pivot) > 0:
            fixed[:, j] = col * (pivot.conjugate() / abs(pivot))
    return fixed


@dataclass(frozen=True)
class SpectralDecomposition:
    """Ascending eigenvalues with an aligned orthonormal eigenvector matrix (columns)."""

    dim: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        gram = self.eigenvectors.conj().T @ self.eigenvectors
        defect = float(np.max(np.abs(gram - np.eye(self.dim))))
        if defect > NORM_TOL:
            raise ValueError(f"eigenvectors not orthonormal: max |V†V − I| = {defect:.3e}")
        if np.any(np.diff(self.eigenvalues) < 0):
            raise ValueError("eigenvalues not ascending")

    def eigenvector(self, i: int) -> StateVector:
        return StateVector(self.dim, self.eigenvectors[:, i])


@dataclass(frozen=True)
class DegenerateSpectrum:
    """Tolerance-grouped energy levels: (group energy, member eigenvalue indices)."""

    groups: tuple[tuple[float, tuple[int, ...]], ...]
    gap_tol: float

    def energies(self) -> np.ndarray:
        return np.array([energy for energy, _ in self.groups])


def eig_hermitian(h: DenseOperator) -> SpectralDecomposition:
    """Full eigendecomposition of a Hermitian operator.

    Eigenvalues come out ascending; eigenvector phases are fixed
    deterministically (largest component real positive).
    """
    h.require_hermitian()
    eigenvalues, eigenvectors = np.linalg.eigh(h.entries)
    eigenvectors = _fix_phases(eigenvectors)
    residual = np.max(
        np.linalg.norm(h.entries @ eigenvectors - eigenvectors * eigenvalues, axis=0)
    )
    if residual > _RESIDUAL_TOL:
        raise ValueError(f"eigendecomposition residual {residual:.3e} exceeds {_RESIDUAL_TOL}")
    return SpectralDecomposition(h.dim, eigenvalues, eigenvectors)


def group_degenerate(decomp: SpectralDecomposition, gap_tol: float = DEFAULT_GAP_TOL) -> DegenerateSpectrum:
    """Greedy ascending sweep: a new group starts when the gap to the previous
    eigenvalue exceeds gap_tol; group energy is the mean of its members."""
    if gap_tol <= 0:
        raise ValueError(f"gap_tol must be > 0, got {gap_tol}")
    groups: list[tuple[float, tuple[int, ...]]] = []
    members: list[int] = [0]
    for i in range(1, decomp.dim):
        if decomp.eigenvalues[i] - decomp.eigenvalues[i - 1] > gap_tol:
            groups.append((float(np.mean(decomp.eigenvalues[members])), tuple(members)))
            members = [i]
        else:
            members.append(i)
    groups.append((float(np.mean(decomp.eigenvalues[members])), tuple(members)))
    return DegenerateSpectrum(tuple(groups), gap_tol)


def group_probabilities(
    decomp: SpectralDecomposition, spectrum: DegenerateSpectrum, psi: StateVector
) -> np.ndarray:
    """Exact probability of each degenerate group for a projective energy measurement."""
    amps = decomp.eigenvectors.conj().T @ psi.amplitudes
    weights = np.abs(amps) ** 2
    return np.array([float(np.sum(weights[list(members)])) for _, members in spectrum.groups])


def evolve(h: DenseOperator, t: float, psi: StateVector) -> StateVector:
    """psi(t) = sum_i e^{-i lambda_i t} v_i <v_i|psi>."""
    if h.dim != psi.dim:
        raise ValueError(f"operator dim {h.dim} != state dim {psi.dim}")
    decomp = eig_hermitian(h)
    amps = decomp.eigenvectors.conj().T @ psi.amplitudes
    amps = amps * np.exp(-1j * decomp.eigenvalues * t)
    return StateVector(psi.dim, decomp.eigenvectors @ amps)


def measure_energy(
    decomp: SpectralDecomposition,
    gap_tol: float,
    psi: StateVector,
    rng: RngStream,
) -> tuple[float, MeasurementOutcome]:
    """Project onto a degenerate energy group sampled with its exact probability.

    Returns (group energy, outcome); outcome_index labels the group. Sampling
    and collapse are the projective-measurement semantics with P_g = sum of
    |v_i><v_i| over the group, evaluated in the eigenbasis.
    """
    if decomp.dim != psi.dim:
        raise ValueError(f"decomposition dim {decomp.dim} != state dim {psi.dim}")
    spectrum = group_degenerate(decomp, gap_tol)
    amps = decomp.eigenvectors.conj().T @ psi.amplitudes
    weights = np.abs(amps) ** 2
    probs = np.array([float(np.sum(weights[list(members)])) for _, members in spectrum.groups])
    k = _sample_index(probs, rng)
    energy, members = spectrum.groups[k]
    idx = list(members)
    post = decomp.eigenvectors[:, idx] @ amps[idx]
    post = post / np.linalg.norm(post)
    return energy, MeasurementOutcome(k, float(probs[k]), StateVector(psi.dim, post))
