"""Excitation-sector block integrator for chain runs.

Every operator in the chain equations has a definite excitation shift ``s``:
``H`` and ``sigma^z`` conserve the number of ``|1>`` spins (s=0),
``sigma^-`` lowers it (s=-1), and so does the memory operator it drives.
``O_j`` is therefore stored as blocks ``O_j[k]`` mapping sector ``k`` to
sector ``k + s``.

The ancilla-extended state is block diagonal in the label
``lam = k - k_a``, where ``k_a`` is the excitation number of the chain
state attached to ancilla value ``a``. Block ``lam`` couples the two branch
sectors ``k_0 + lam`` and ``k_1 + lam``, and bath jumps feed block ``lam``
from block ``lam - s``.

All blocks are packed into one flat complex vector. The right-hand side is
compiled once into a list of small strided matrix tasks (copy-scale or
multiply-accumulate) and a whole RK4 step runs inside one jitted kernel;
``rhs`` keeps the plain numpy formulation as a cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .dynamics import Bath


@dataclass
class _Branch:
    a: int  # ancilla value
    k: int  # chain sector
    rows: slice  # position inside the label block


class SectorEquation:
    """RK4 integrator for ``(rho, O_1, O_2)`` in excitation-sector blocks.

    ``H`` and the bath operators are full chain operators (``2**N``);
    ``seeds`` are the chain basis indices attached to ancilla 0 and 1.
    """

    def __init__(self, N: int, H: np.ndarray, baths: list[Bath], seeds: tuple[int, int], shift: int):
        self.N = N
        self.baths = baths
        self.s = shift
        d = 1 << N
        pop = np.array([bin(x).count("1") for x in range(d)])
        self.sector = {k: np.flatnonzero(pop == k) for k in range(N + 1)}
        self.seed_k = [int(pop[i]) for i in seeds]
        depth = max(self.seed_k) if shift else 0
        self.labels = list(range(0, -depth - 1, -1))

        self.members: dict[int, list[_Branch]] = {}
        self.reg_idx: dict[int, np.ndarray] = {}
        for lam in self.labels:
            branches, idx, off = [], [], 0
            for a, ka in enumerate(self.seed_k):
                k = ka + lam
                if 0 <= k <= N:
                    n = len(self.sector[k])
                    branches.append(_Branch(a, k, slice(off, off + n)))
                    idx.append(a * d + self.sector[k])
                    off += n
            self.members[lam] = branches
            self.reg_idx[lam] = np.concatenate(idx)
        self.dims = {lam: self.members[lam][-1].rows.stop for lam in self.labels}

        ks = sorted({b.k for lam in self.labels for b in self.members[lam]})
        self.ks = ks
        self.H = {k: H[np.ix_(self.sector[k], self.sector[k])] for k in ks}
        # Sectors whose shifted image exists carry L and O blocks.
        self.jump_ks = [k for k in ks if 0 <= k + shift <= N]
        self.L = [
            {k: b.lindblad[np.ix_(self.sector[k + shift], self.sector[k])] for k in self.jump_ks}
            for b in baths
        ]
        self.Ld = [{k: blk.conj().T for k, blk in Lj.items()} for Lj in self.L]
        self.markov = bool(baths) and all(b.markov for b in baths)
        if any(b.markov for b in baths) and not self.markov:
            raise ValueError("mixing Markov and finite-memory baths is not supported")
        self.L_diag = [
            {k: np.diagonal(blk).copy() for k, blk in Lj.items()}
            if shift == 0 and all(np.count_nonzero(blk - np.diag(np.diagonal(blk))) == 0 for blk in Lj.values())
            else None
            for Lj in self.L
        ]

        # Flat layout: rho blocks, then (unless Markov) O blocks.
        self._layout: list[tuple[int, tuple[int, int]]] = []
        off = 0
        for lam in self.labels:
            shape = (self.dims[lam], self.dims[lam])
            self._layout.append((off, shape))
            off += shape[0] * shape[1]
        self.n_rho = len(self._layout)
        self._o_keys = []
        if baths and not self.markov:
            for j in range(len(baths)):
                for k in self.jump_ks:
                    shape = self.L[j][k].shape
                    self._layout.append((off, shape))
                    self._o_keys.append((j, k))
                    off += shape[0] * shape[1]
        self.size = off
        if self.markov:
            self._fixed_O = [{k: 0.5 * b.Gamma * Lj[k] for k in self.jump_ks} for b, Lj in zip(baths, self.L)]

    # -- packing -------------------------------------------------------

    def _views(self, y: np.ndarray):
        vs = [y[off : off + r * c].reshape(r, c) for off, (r, c) in self._layout]
        rhos = dict(zip(self.labels, vs[: self.n_rho]))
        if self.markov:
            return rhos, self._fixed_O
        obars = [dict() for _ in self.baths]
        for (j, k), v in zip(self._o_keys, vs[self.n_rho :]):
            obars[j][k] = v
        return rhos, obars

    def initial_vector(self, psi_full: np.ndarray) -> np.ndarray:
        """Pack the pure register state ``psi_full`` (rho) with ``O_j = 0``."""
        y = np.zeros(self.size, dtype=complex)
        rhos, _ = self._views(y)
        for lam in self.labels:
            v = psi_full[self.reg_idx[lam]]
            rhos[lam][...] = np.outer(v, v.conj())
        return y

    def rho_blocks(self, y: np.ndarray) -> dict[int, np.ndarray]:
        return self._views(y)[0]

    def obar_blocks(self, y: np.ndarray):
        return self._views(y)[1]

    # -- right-hand side -----------------------------------------------

    def rhs(self, y: np.ndarray) -> np.ndarray:
        s = self.s
        rhos, obars = self._views(y)
        out = np.empty_like(y)
        drhos, dobars = self._views(out)

        G = {}
        for k in self.ks:
            g = -1j * self.H[k]
            for Ldj, Oj in zip(self.Ld, obars):
                if k in Oj:
                    g = g - Ldj[k] @ Oj[k]
            G[k] = g

        if not self.markov:
            for j, b in enumerate(self.baths):
                c = 0.5 * b.Gamma * b.gamma
                for k in self.jump_ks:
                    O = obars[j][k]
                    dobars[j][k][...] = c * self.L[j][k] - b.gamma * O + G[k + s] @ O - O @ G[k]

        for lam in self.labels:
            rho = rhos[lam]
            A = np.empty_like(rho)
            for br in self.members[lam]:
                A[br.rows] = G[br.k] @ rho[br.rows]
            mu = lam - s
            if mu in rhos:
                src = rhos[mu]
                src_rows = {br.a: br.rows for br in self.members[mu]}
                for j in range(len(self.baths)):
                    # X = rho_mu O^+ restricted to label lam columns, then L X.
                    X = np.zeros((src.shape[0], rho.shape[0]), dtype=complex)
                    for br in self.members[lam]:
                        kmu = br.k - s
                        if br.a in src_rows and kmu in obars[j]:
                            X[:, br.rows] = src[:, src_rows[br.a]] @ obars[j][kmu].conj().T
                    if self.L_diag[j] is not None:
                        for br in self.members[lam]:
                            A[br.rows] += self.L_diag[j][br.k][:, None] * X[br.rows]
                    else:
                        for br in self.members[lam]:
                            kmu = br.k - s
                            if br.a in src_rows and kmu in self.L[j]:
                                A[br.rows] += self.L[j][kmu] @ X[src_rows[br.a]]
            drhos[lam][...] = A + A.conj().T
        return out

    def step(self, y: np.ndarray, dt: float) -> np.ndarray:
        k1 = self.rhs(y)
        k2 = self.rhs(y + (0.5 * dt) * k1)
        k3 = self.rhs(y + (0.5 * dt) * k2)
        k4 = self.rhs(y + dt * k3)
        return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    # -- readout ---------------------------------------------------------

    def expand(self, y: np.ndarray) -> np.ndarray:
        d = 2 << self.N
        out = np.zeros((d, d), dtype=complex)
        for lam, blk in self.rho_blocks(y).items():
            idx = self.reg_idx[lam]
            out[np.ix_(idx, idx)] = blk
        return out


    # -- compiled kernel -------------------------------------------------

    def compile(self) -> "_Plan":
        """Translate ``rhs`` into a task list for ``_rk4_kernel``."""
        plan = _Plan(self.size)
        s = self.s
        lay = dict(zip(self.labels, self._layout[: self.n_rho]))
        o_lay = dict(zip(self._o_keys, self._layout[self.n_rho :]))

        def yblock(off, shape):
            return (Y, off, shape[1], 1, shape[0], shape[1])

        consts = {}

        def const(key, mat):
            if key not in consts:
                consts[key] = plan.add_const(mat)
            return consts[key]

        if self.markov:
            O = [{k: const(("O", j, k), self._fixed_O[j][k]) for k in self.jump_ks} for j in range(len(self.baths))]
        else:
            O = [{k: yblock(*o_lay[(j, k)]) for k in self.jump_ks} for j in range(len(self.baths))]
        dO = {key: (OUT,) + yblock(*v)[1:] for key, v in o_lay.items()}
        L = [{k: const(("L", j, k), self.L[j][k]) for k in self.jump_ks} for j in range(len(self.baths))]
        Ld = [{k: const(("Ld", j, k), self.Ld[j][k]) for k in self.jump_ks} for j in range(len(self.baths))]

        G = {}
        for k in self.ks:
            G[k] = plan.add_work(self.H[k].shape)
            plan.axpy(G[k], const(("H", k), self.H[k]), -1j, acc=False)
            for j in range(len(self.baths)):
                if k in O[j]:
                    plan.gemm(G[k], Ld[j][k], O[j][k], -1.0)

        if not self.markov:
            for j, b in enumerate(self.baths):
                for k in self.jump_ks:
                    d = dO[(j, k)]
                    plan.axpy(d, L[j][k], 0.5 * b.Gamma * b.gamma, acc=False)
                    plan.axpy(d, O[j][k], -b.gamma)
                    plan.gemm(d, G[k + s], O[j][k], 1.0)
                    plan.gemm(d, O[j][k], G[k], -1.0)

        x_scratch = plan.add_work((self.max_dim(), self.max_dim()))
        for lam in self.labels:
            off, shape = lay[lam]
            rho = yblock(off, shape)
            A = plan.add_work(shape)
            for br in self.members[lam]:
                plan.gemm(_rows(A, br.rows), G[br.k], _rows(rho, br.rows), 1.0, acc=False)
            mu = lam - s
            if mu in lay:
                src = yblock(*lay[mu])
                src_rows = {br.a: br.rows for br in self.members[mu]}
                for j in range(len(self.baths)):
                    for ba in self.members[lam]:
                        for bb in self.members[lam]:
                            ka, kb = ba.k - s, bb.k - s
                            if ba.a not in src_rows or bb.a not in src_rows:
                                continue
                            if ka not in self.L[j] or kb not in self.L[j]:
                                continue
                            # X = rho_mu[a, b] O_b^+, then A[a, b] += L_a X
                            blk = _cols(_rows(src, src_rows[ba.a]), src_rows[bb.a])
                            X = _sub(x_scratch, blk[4], self.L[j][kb].shape[0])
                            plan.gemm(X, blk, _dagger(O[j][kb]), 1.0, acc=False)
                            plan.gemm(_cols(_rows(A, ba.rows), bb.rows), L[j][ka], X, 1.0)
            out = (OUT,) + rho[1:]
            plan.axpy(out, A, 1.0, acc=False)
            plan.axpy(out, _dagger(A), 1.0)
        return plan.finish()

    def max_dim(self) -> int:
        return max(max(self.dims.values()), max(len(v) for v in self.sector.values()))

    def fast_step(self, y: np.ndarray, dt: float) -> np.ndarray:
        if not hasattr(self, "_plan"):
            self._plan = self.compile()
        p = self._plan
        return _rk4_kernel(y, dt, p.tasks, p.alphas, p.const, np.empty(p.work_size, dtype=np.complex128))


# Buffers addressed by the task list.
Y, OUT, CONST, WORK = 0, 1, 2, 3
# View: (buffer, offset, row stride, col stride, rows, cols, conj)


def _rows(v, sl: slice):
    return (v[0], v[1] + sl.start * v[2], v[2], v[3], sl.stop - sl.start, v[5]) + tuple(v[6:])


def _cols(v, sl: slice):
    return (v[0], v[1] + sl.start * v[3], v[2], v[3], v[4], sl.stop - sl.start) + tuple(v[6:])


def _sub(v, rows: int, cols: int):
    return (v[0], v[1], cols, 1, rows, cols)


def _dagger(v):
    conj = v[6] if len(v) > 6 else 0
    return (v[0], v[1], v[3], v[2], v[5], v[4], 1 - conj)


def _full(v):
    return tuple(v) + (0,) * (7 - len(v))


class _Plan:
    def __init__(self, size: int):
        self.size = size
        self.rows: list[list[int]] = []
        self.alpha: list[complex] = []
        self._const: list[np.ndarray] = []
        self._const_size = 0
        self.work_size = 0

    def add_const(self, mat: np.ndarray):
        mat = np.ascontiguousarray(mat, dtype=np.complex128)
        off = self._const_size
        self._const.append(mat.ravel())
        self._const_size += mat.size
        return (CONST, off, mat.shape[1], 1, mat.shape[0], mat.shape[1])

    def add_work(self, shape):
        off = self.work_size
        self.work_size += shape[0] * shape[1]
        return (WORK, off, shape[1], 1, shape[0], shape[1])

    def axpy(self, c, a, alpha, acc: bool = True):
        c, a = _full(c), _full(a)
        assert (c[4], c[5]) == (a[4], a[5]), (c, a)
        self.rows.append([0, int(acc), *c[:6], *a, *(0,) * 7])
        self.alpha.append(complex(alpha))

    def gemm(self, c, a, b, alpha, acc: bool = True):
        c, a, b = _full(c), _full(a), _full(b)
        assert c[4] == a[4] and a[5] == b[4] and b[5] == c[5], (c, a, b)
        self.rows.append([1, int(acc), *c[:6], *a, *b])
        self.alpha.append(complex(alpha))

    def finish(self) -> "_Plan":
        self.tasks = np.array(self.rows, dtype=np.int64)
        self.alphas = np.array(self.alpha, dtype=np.complex128)
        self.const = np.concatenate(self._const) if self._const else np.zeros(1, np.complex128)
        return self


@numba.njit(cache=True)
def _run_tasks(y, out, const, work, tasks, alphas):
    bufs = (y, out, const, work)
    for t in range(tasks.shape[0]):
        r = tasks[t]
        kind, acc = r[0], r[1]
        cb, co, crs, ccs, m, n = r[2], r[3], r[4], r[5], r[6], r[7]
        ab, ao, ars, acs, am, an, aconj = r[8], r[9], r[10], r[11], r[12], r[13], r[14]
        alpha = alphas[t]
        C = bufs[cb]
        A = bufs[ab]
        if kind == 0:
            for i in range(m):
                for j in range(n):
                    x = A[ao + i * ars + j * acs]
                    if aconj:
                        x = x.conjugate()
                    idx = co + i * crs + j * ccs
                    if acc:
                        C[idx] += alpha * x
                    else:
                        C[idx] = alpha * x
        else:
            bb, bo, brs, bcs, bconj = r[15], r[16], r[17], r[18], r[21]
            B = bufs[bb]
            kk = an
            a2 = _gather(A, ao, ars, acs, m, kk, aconj)
            b2 = _gather(B, bo, brs, bcs, kk, n, bconj)
            prod = np.dot(a2, b2)
            for i in range(m):
                for j in range(n):
                    idx = co + i * crs + j * ccs
                    if acc:
                        C[idx] += alpha * prod[i, j]
                    else:
                        C[idx] = alpha * prod[i, j]


@numba.njit(cache=True)
def _gather(X, off, rs, cs, m, n, conj):
    out = np.empty((m, n), dtype=np.complex128)
    for i in range(m):
        for j in range(n):
            x = X[off + i * rs + j * cs]
            out[i, j] = x.conjugate() if conj else x
    return out


@numba.njit(cache=True)
def _rk4_kernel(y, dt, tasks, alphas, const, work):
    k1 = np.empty_like(y)
    k2 = np.empty_like(y)
    k3 = np.empty_like(y)
    k4 = np.empty_like(y)
    _run_tasks(y, k1, const, work, tasks, alphas)
    _run_tasks(y + (0.5 * dt) * k1, k2, const, work, tasks, alphas)
    _run_tasks(y + (0.5 * dt) * k2, k3, const, work, tasks, alphas)
    _run_tasks(y + dt * k3, k4, const, work, tasks, alphas)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
