"""Entropies, mutual informations and logarithmic negativities.

Entropies use the natural log; negativities use log base 2 (a Bell pair
reads 1).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import PositivityError, QubitIndexError
from .model import Partition
from .tensor import herm_eigvals, num_qubits_of, partial_trace, partial_transpose, trace_norm

POSITIVITY_TOL = 1e-6  # shared with the integrator guard


def clamp_spectrum(w: np.ndarray) -> np.ndarray:
    if w.size and w.min() < -POSITIVITY_TOL:
        raise PositivityError(f"eigenvalue {w.min():.3e} below -{POSITIVITY_TOL:g}")
    return np.where(w < 0, 0.0, w)


def entropy_of_spectrum(w: np.ndarray) -> float:
    w = clamp_spectrum(np.asarray(w, dtype=float))
    w = w[w > 0]
    return float(-np.sum(w * np.log(w)))


def von_neumann_entropy(rho: np.ndarray) -> float:
    return entropy_of_spectrum(herm_eigvals(rho))


def _disjoint(x: Sequence[int], y: Sequence[int]) -> None:
    if set(x) & set(y):
        raise QubitIndexError(f"subsystems {tuple(x)} and {tuple(y)} overlap")


def subsystem_entropy(rho_full: np.ndarray, qubits: Sequence[int]) -> float:
    q = num_qubits_of(rho_full)
    return von_neumann_entropy(partial_trace(rho_full, q, sorted(qubits)))


def bmi(rho_full: np.ndarray, x: Sequence[int], y: Sequence[int]) -> float:
    _disjoint(x, y)
    return (
        subsystem_entropy(rho_full, x)
        + subsystem_entropy(rho_full, y)
        - subsystem_entropy(rho_full, list(x) + list(y))
    )


def tmi(rho_full: np.ndarray, p: Partition) -> float:
    return bmi(rho_full, p.A, p.B) + bmi(rho_full, p.A, p.C) - bmi(rho_full, p.A, p.B + p.C)


def _negativity_of_joint(rho_xy: np.ndarray, num_x: int, num_y: int) -> float:
    pt = partial_transpose(rho_xy, num_x + num_y, range(num_x, num_x + num_y))
    return float(np.log2(trace_norm(pt)))


def bln(rho_full: np.ndarray, x: Sequence[int], y: Sequence[int]) -> float:
    """Logarithmic negativity between X and Y, transposing Y."""
    _disjoint(x, y)
    q = num_qubits_of(rho_full)
    rho_xy = partial_trace(rho_full, q, list(x) + list(y))
    return _negativity_of_joint(rho_xy, len(x), len(y))


def tln(rho_full: np.ndarray, p: Partition) -> float:
    return bln(rho_full, p.A, p.B) + bln(rho_full, p.A, p.C) - bln(rho_full, p.A, p.B + p.C)


def total_sz(rho_full: np.ndarray) -> float:
    """Expectation of the summed sigma^z over every register qubit."""
    q = num_qubits_of(rho_full)
    idx = np.arange(1 << q)
    ones = np.zeros(idx.shape, dtype=int)
    for k in range(q):
        ones += (idx >> k) & 1
    return float(np.real(np.diagonal(rho_full)) @ (q - 2 * ones))


@dataclass(frozen=True)
class MeasureSample:
    S_A: float
    S_B: float
    S_C: float
    S_AB: float
    S_AC: float
    S_BC: float
    S_ABC: float
    I2_AB: float
    I2_AC: float
    I2_ABC: float
    TMI: float
    E2_AB: float
    E2_AC: float
    E2_ABC: float
    TLN: float
    total_sz: float


def measure_all(rho_full: np.ndarray, p: Partition) -> MeasureSample:
    """Every diagnostic from one state, sharing the reduced density matrices."""
    q = num_qubits_of(rho_full)
    a, b, c = list(p.A), list(p.B), list(p.C)
    rho_abc = partial_trace(rho_full, q, a + b + c)
    na, nb, nc = len(a), len(b), len(c)
    qa = list(range(na))
    qb = list(range(na, na + nb))
    qc = list(range(na + nb, na + nb + nc))
    sub = na + nb + nc

    def s(keep):
        return von_neumann_entropy(partial_trace(rho_abc, sub, keep))

    S_A, S_B, S_C = s(qa), s(qb), s(qc)
    S_AB, S_AC, S_BC = s(qa + qb), s(qa + qc), s(qb + qc)
    S_ABC = von_neumann_entropy(rho_abc)
    I_ab = S_A + S_B - S_AB
    I_ac = S_A + S_C - S_AC
    I_abc = S_A + S_BC - S_ABC

    E_ab = _negativity_of_joint(partial_trace(rho_abc, sub, qa + qb), na, nb)
    E_ac = _negativity_of_joint(partial_trace(rho_abc, sub, qa + qc), na, nc)
    E_abc = _negativity_of_joint(rho_abc, na, nb + nc)
    return MeasureSample(
        S_A=S_A, S_B=S_B, S_C=S_C, S_AB=S_AB, S_AC=S_AC, S_BC=S_BC, S_ABC=S_ABC,
        I2_AB=I_ab, I2_AC=I_ac, I2_ABC=I_abc, TMI=I_ab + I_ac - I_abc,
        E2_AB=E_ab, E2_AC=E_ac, E2_ABC=E_abc, TLN=E_ab + E_ac - E_abc,
        total_sz=total_sz(rho_full),
    )
