"""Dense complex linear algebra on qubit registers.

Register convention: qubit 0 is the most significant tensor factor, so the
basis index of ``|b_0 b_1 ... b_{q-1}>`` is ``sum_i b_i 2**(q-1-i)``.
Matrices are plain ``numpy`` complex arrays.
"""

from __future__ import annotations

import math
import os
from typing import Iterable, Sequence

import numba
import numpy as np

from .errors import NumericError, QubitIndexError, ShapeError, SizeError

JACOBI_MAX_SWEEPS = 100
JACOBI_TOL = 1e-12


def max_qubits() -> int:
    return int(os.environ.get("OPENCHAIN_MAX_QUBITS", "12"))


def num_qubits_of(m: np.ndarray) -> int:
    dim = m.shape[0]
    q = dim.bit_length() - 1
    if dim < 1 or 1 << q != dim:
        raise ShapeError(f"dimension {dim} is not a power of two")
    return q


def _check_square(m: np.ndarray) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {m.shape}")


def check_qubits(indices: Iterable[int], num_qubits: int) -> tuple[int, ...]:
    """Validate a qubit index set and return it as a tuple."""
    idx = tuple(int(i) for i in indices)
    if len(set(idx)) != len(idx):
        raise QubitIndexError(f"duplicate qubit indices in {idx}")
    for i in idx:
        if not 0 <= i < num_qubits:
            raise QubitIndexError(f"qubit {i} outside register of {num_qubits}")
    return idx


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    dim = a.shape[0] * b.shape[0]
    if dim > 1 << max_qubits():
        raise SizeError(f"Kronecker product of dimension {dim} exceeds 2**{max_qubits()}")
    return np.kron(a, b)


def kron_all(factors: Sequence[np.ndarray]) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for f in factors:
        out = kron(out, f)
    return out


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    return a @ b - b @ a


def partial_trace(rho: np.ndarray, num_qubits: int, keep: Sequence[int]) -> np.ndarray:
    """Reduced operator on ``keep`` (in the given order), tracing out the rest."""
    _check_square(rho)
    if rho.shape[0] != 1 << num_qubits:
        raise ShapeError(f"matrix of dim {rho.shape[0]} is not a {num_qubits}-qubit operator")
    keep = check_qubits(keep, num_qubits)
    if not keep:
        raise QubitIndexError("keep set must be nonempty")
    traced = [i for i in range(num_qubits) if i not in keep]
    t = rho.reshape((2,) * (2 * num_qubits))
    order = list(keep) + traced
    t = t.transpose(order + [num_qubits + i for i in order])
    dk, dt = 1 << len(keep), 1 << len(traced)
    t = t.reshape(dk, dt, dk, dt)
    return np.einsum("ijkj->ik", t)


def partial_transpose(rho: np.ndarray, num_qubits: int, transposed: Iterable[int]) -> np.ndarray:
    _check_square(rho)
    if rho.shape[0] != 1 << num_qubits:
        raise ShapeError(f"matrix of dim {rho.shape[0]} is not a {num_qubits}-qubit operator")
    transposed = check_qubits(transposed, num_qubits)
    axes = list(range(2 * num_qubits))
    for i in transposed:
        axes[i], axes[num_qubits + i] = axes[num_qubits + i], axes[i]
    t = rho.reshape((2,) * (2 * num_qubits)).transpose(axes)
    return t.reshape(rho.shape).copy()


@numba.njit(cache=True)
def _jacobi(a, tol, max_sweeps):
    # Cyclic Jacobi on a Hermitian matrix, in place. Returns (V, sweeps, off).
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    scale = 0.0
    for i in range(n):
        for j in range(n):
            scale += a[i, j].real ** 2 + a[i, j].imag ** 2
    scale = max(1.0, math.sqrt(scale))
    off = 0.0
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off += 2.0 * (a[i, j].real ** 2 + a[i, j].imag ** 2)
        off = math.sqrt(off)
        if off <= tol * scale:
            return v, sweep, off
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                c = a[p, q]
                r = abs(c)
                if r == 0.0:
                    continue
                app = a[p, p].real
                aqq = a[q, q].real
                # Skip elements already negligible against both diagonals.
                if r < 1e-18 * (abs(app) + abs(aqq)) and sweep > 3:
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    continue
                e = c / r
                theta = (aqq - app) / (2.0 * r)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                cs = 1.0 / math.sqrt(t * t + 1.0)
                sn = t * cs
                ec = e.conjugate()
                # a <- a G with G = [[cs, sn], [-conj(e) sn, conj(e) cs]] on (p, q)
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = cs * akp - ec * sn * akq
                    a[k, q] = sn * akp + ec * cs * akq
                # a <- G^H a
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = cs * apk - e * sn * aqk
                    a[q, k] = sn * apk + e * cs * aqk
                a[p, p] = app - t * r
                a[q, q] = aqq + t * r
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = cs * vkp - ec * sn * vkq
                    v[k, q] = sn * vkp + ec * cs * vkq
    return v, -1, off


def herm_eig(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.

    The input is symmetrized as ``(m + m^H)/2`` first. Returns eigenvalues in
    ascending order and the matching orthonormal eigenvectors as columns.
    """
    _check_square(m)
    a = np.array(0.5 * (m + m.conj().T), dtype=np.complex128)
    v, sweeps, off = _jacobi(a, JACOBI_TOL, JACOBI_MAX_SWEEPS)
    if sweeps < 0:
        raise NumericError(
            f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps (off-diagonal norm {off:.3e})"
        )
    w = np.diag(a).real.copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def herm_eigvals(m: np.ndarray) -> np.ndarray:
    return herm_eig(m)[0]


def trace_norm(m: np.ndarray) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    return float(np.sum(np.abs(herm_eigvals(m))))
