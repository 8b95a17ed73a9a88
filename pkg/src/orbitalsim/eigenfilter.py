"""Power-sum eigenvector refinement and its slow-convergence pathology.

The filter sum_{j=1..k} U^j |psi> amplifies whichever eigenvector dominates
the guess, but the gain on a branch with eigenphase delta relative to the
dominant one is only |sin(k delta/2) / (k sin(delta/2))|: for eigenphases
exponentially close to 0 mod 2pi the suppression is exponentially slow in k.
The unweighted sum is implemented verbatim; no phase-compensated variants.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .qstate import DenseOperator, StateVector, overlap


class CancellationError(ValueError):
    """The power sum vanished: branches of the guess interfered to (near) zero."""


def power_sum(u: DenseOperator, psi: StateVector, k: int) -> StateVector:
    """Normalized sum_{j=1..k} U^j psi, accumulated with k matrix-vector products."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if u.dim != psi.dim:
        raise ValueError(f"operator dim {u.dim} != state dim {psi.dim}")
    u.require_unitary()
    current = psi.amplitudes
    total = np.zeros_like(current)
    for _ in range(k):
        current = u.entries @ current
        total = total + current
    norm = np.linalg.norm(total)
    if norm < 1e-12:
        raise CancellationError(f"power sum at k={k} cancelled to norm {norm:.3e}")
    return StateVector(psi.dim, total / norm)


@dataclass(frozen=True)
class ConvergenceRow:
    k: int
    overlap: float      # |<target|filtered>|^2
    residual: float     # ||U f - rayleigh * f||


def convergence_study(
    u: DenseOperator,
    psi: StateVector,
    target: StateVector,
    k_list: Sequence[int],
) -> list[ConvergenceRow]:
    """One row per k: overlap with the intended eigenvector and Rayleigh residual."""
    ks = list(k_list)
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValueError("k_list must be strictly ascending")
    rows = []
    for k in ks:
        filtered = power_sum(u, psi, k)
        fidelity = float(abs(overlap(target, filtered)) ** 2)
        rayleigh = complex(np.vdot(filtered.amplitudes, u.entries @ filtered.amplitudes))
        residual = float(np.linalg.norm(u.entries @ filtered.amplitudes - rayleigh * filtered.amplitudes))
        rows.append(ConvergenceRow(k, fidelity, residual))
    return rows


def small_rotation(delta: float) -> DenseOperator:
    """diag(1, e^{i delta}): the minimal instance of a near-identity unitary."""
    return DenseOperator(2, np.diag([1.0, np.exp(1j * delta)]).astype(np.complex128))


def filter_gain(delta: float, k: int) -> float:
    """|sin(k delta/2) / (k sin(delta/2))|: amplitude gain of the off-branch after k steps."""
    half = delta / 2.0
    if abs(np.sin(half)) < 1e-300:
        return 1.0
    return float(abs(np.sin(k * half) / (k * np.sin(half))))
