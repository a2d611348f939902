"""Time-local non-Markovian master equation with Ornstein-Uhlenbeck baths.

The state is ``(rho, O_1, O_2)``:

    d rho/dt = -i[H, rho] + sum_j ([L_j, rho O_j^+] - [L_j^+, O_j rho])
    d O_j/dt = (Gamma_j gamma_j / 2) L_j - gamma_j O_j + [-i H - sum_k L_k^+ O_k, O_j]

with ``O_j(0) = 0``. In the Markov limit ``O_j = (Gamma_j/2) L_j`` is constant.
Integration is fixed-step classical RK4 over the stacked state.

Chain runs never touch most of the register: the generator either conserves
the excitation number (closed, dephasing) or only lowers it (dissipation),
and the ancilla is a spectator. ``ReducedBasis`` selects the register basis
states reachable from the initial state; ``rho`` is integrated on that
invariant subspace and ``O_j`` on the matching chain subspace. Both
restrictions are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import NumericalInstabilityError, PositivityError, ShapeError
from .measures import measure_all
from .model import (
    ChainConfig,
    Channel,
    branch_states,
    build_hamiltonian,
    build_lindblad,
    make_partition,
    prepare_state_vector,
)
from .tensor import herm_eigvals

STIFFNESS_LIMIT = 0.1  # max gamma * dt
TRACE_GUARD = 1e-4

COLUMNS = (
    "t", "I2_AB", "I2_AC", "I2_ABC", "TMI", "E2_AB", "E2_AC", "E2_ABC", "TLN",
    "S_A", "total_sz", "trace_err", "herm_err", "min_eig",
)


def correlation_alpha(Gamma: float, gamma: float, t: float, s: float) -> complex:
    """Ornstein-Uhlenbeck bath correlation ``(Gamma gamma / 2) exp(-gamma |t - s|)``."""
    return complex(0.5 * Gamma * gamma * math.exp(-gamma * abs(t - s)))


def markovian_obar(L: np.ndarray, Gamma: float) -> np.ndarray:
    return 0.5 * Gamma * L


@dataclass
class Bath:
    lindblad: np.ndarray
    Gamma: float
    gamma: float  # math.inf for the Markov limit

    @property
    def markov(self) -> bool:
        return math.isinf(self.gamma)


@dataclass
class EvolutionState:
    t: float
    rho: np.ndarray
    obars: list[np.ndarray]


def _check_dims(*mats: np.ndarray) -> None:
    shape = mats[0].shape
    for m in mats:
        if m.shape != shape:
            raise ShapeError(f"shape mismatch {m.shape} vs {shape}")


def obar_rhs(
    state: EvolutionState,
    H: np.ndarray,
    lindblads: Sequence[np.ndarray],
    Gammas: Sequence[float],
    gammas: Sequence[float],
) -> list[np.ndarray]:
    """Right-hand side of the memory-operator equations, one entry per bath."""
    _check_dims(H, *lindblads, *state.obars)
    G = -1j * H
    for L, O in zip(lindblads, state.obars):
        G = G - L.conj().T @ O
    return [
        0.5 * Gam * gam * L - gam * O + G @ O - O @ G
        for L, O, Gam, gam in zip(lindblads, state.obars, Gammas, gammas)
    ]


def rho_rhs(state: EvolutionState, H: np.ndarray, lindblads: Sequence[np.ndarray]) -> np.ndarray:
    """Right-hand side of the master equation, written term by term."""
    rho = state.rho
    _check_dims(H, rho, *lindblads, *state.obars)
    out = -1j * (H @ rho - rho @ H)
    for L, O in zip(lindblads, state.obars):
        Ld = L.conj().T
        x = rho @ O.conj().T
        y = O @ rho
        out = out + (L @ x - x @ L) - (Ld @ y - y @ Ld)
    return out


class ReducedBasis:
    """Invariant register subspace reachable from the prepared state.

    ``reg_idx`` are register basis indices (ancilla most significant) that
    carry ``rho``; ``chain_idx`` are chain basis indices that carry ``O_j``.
    """

    def __init__(self, cfg: ChainConfig, full: bool = False):
        self.N = cfg.N
        d = 1 << cfg.N
        pop = np.array([bin(x).count("1") for x in range(d)])
        seeds = [pop[i] for i in branch_states(cfg)]
        members = []
        for a, k in enumerate(seeds):
            if full:
                allowed = pop >= 0
            elif cfg.channel is Channel.DISSIPATION and not cfg.is_closed:
                allowed = pop <= k
            else:
                allowed = pop == k
            members.append(np.flatnonzero(allowed))
        self.chain_idx = np.union1d(members[0], members[1])
        pos = {x: i for i, x in enumerate(self.chain_idx)}
        self.reg_idx = np.concatenate([members[0], d + members[1]])
        self.branch = np.concatenate([np.zeros(len(members[0]), int), np.ones(len(members[1]), int)])
        self.vpos = np.array([pos[x] for x in np.concatenate(members)])
        self.same_branch = self.branch[:, None] == self.branch[None, :]
        # Coherence label: rho is block diagonal in excitation number relative to the seed.
        self.label = np.concatenate([pop[m] - k for m, k in zip(members, seeds)])
        self._ix = np.ix_(self.vpos, self.vpos)

    @property
    def dim(self) -> int:
        return len(self.reg_idx)

    def chain_op(self, op: np.ndarray) -> np.ndarray:
        return op[np.ix_(self.chain_idx, self.chain_idx)]

    def embed(self, op_v: np.ndarray) -> np.ndarray:
        """Chain-subspace operator -> (identity on ancilla) restricted to ``reg_idx``."""
        out = op_v[self._ix]
        out[~self.same_branch] = 0
        return out

    def restrict_state(self, rho_full: np.ndarray) -> np.ndarray:
        return rho_full[np.ix_(self.reg_idx, self.reg_idx)]

    def expand_state(self, rho_s: np.ndarray) -> np.ndarray:
        d = 2 << self.N
        out = np.zeros((d, d), dtype=complex)
        out[np.ix_(self.reg_idx, self.reg_idx)] = rho_s
        return out

    def min_eigenvalue(self, rho_s: np.ndarray) -> float:
        lows = []
        for lab in np.unique(self.label):
            sel = np.flatnonzero(self.label == lab)
            lows.append(herm_eigvals(rho_s[np.ix_(sel, sel)])[0])
        return float(min(lows))


def _as_operator(m: np.ndarray):
    """Cheap representation for left-multiplying by a sparse site operator."""
    if np.count_nonzero(m - np.diag(np.diagonal(m))) == 0:
        diag = np.diagonal(m).copy()
        return lambda x: diag[:, None] * x
    csr = sp.csr_matrix(m)
    return lambda x: csr @ x


class MasterEquation:
    """Fast RK4 right-hand side for a Hermitian ``rho``.

    Uses ``d rho = A + A^+`` with ``A = G rho + sum_j L_j rho O_j^+`` and
    ``G = -iH - sum_j L_j^+ O_j``, which equals the term-by-term form for
    Hermitian ``rho`` and keeps the update exactly Hermitian.
    ``embed`` maps operators from the O-space to the rho-space.
    """

    def __init__(
        self,
        H_o: np.ndarray,
        baths_o: Sequence[Bath],
        embed: Callable[[np.ndarray], np.ndarray] | None = None,
    ):
        self.embed = embed or (lambda x: x)
        self.H_o = H_o
        self.baths = list(baths_o)
        self.L_o = [b.lindblad for b in self.baths]
        self.Ld_o = [_as_operator(b.lindblad.conj().T) for b in self.baths]
        self.L_s = [_as_operator(self.embed(b.lindblad)) for b in self.baths]
        self.markov = all(b.markov for b in self.baths)
        if any(b.markov for b in self.baths) and not self.markov:
            raise ValueError("mixing Markov and finite-memory baths is not supported")

    def initial_obars(self) -> list[np.ndarray]:
        if self.markov:
            return [markovian_obar(b.lindblad, b.Gamma) for b in self.baths]
        return [np.zeros_like(self.H_o) for _ in self.baths]

    def generator(self, obars: Sequence[np.ndarray]) -> np.ndarray:
        G = -1j * self.H_o
        for Ld, O in zip(self.Ld_o, obars):
            G = G - Ld(O)
        return G

    def d_obars(self, obars: Sequence[np.ndarray], G: np.ndarray) -> list[np.ndarray]:
        return [
            (0.5 * b.Gamma * b.gamma) * L - b.gamma * O + (G @ O - O @ G)
            for b, L, O in zip(self.baths, self.L_o, obars)
        ]

    def d_rho(self, rho: np.ndarray, obars_s: Sequence[np.ndarray], G_s: np.ndarray) -> np.ndarray:
        a = G_s @ rho
        for L, O in zip(self.L_s, obars_s):
            a += L(rho @ O.conj().T)
        return a + a.conj().T

    def step(self, rho: np.ndarray, obars: list[np.ndarray], dt: float):
        if self.markov:
            return self._step_markov(rho, obars, dt)
        emb = self.embed

        def f(r, os):
            G = self.generator(os)
            return self.d_rho(r, [emb(o) for o in os], emb(G)), self.d_obars(os, G)

        k1r, k1o = f(rho, obars)
        k2r, k2o = f(rho + 0.5 * dt * k1r, [o + 0.5 * dt * k for o, k in zip(obars, k1o)])
        k3r, k3o = f(rho + 0.5 * dt * k2r, [o + 0.5 * dt * k for o, k in zip(obars, k2o)])
        k4r, k4o = f(rho + dt * k3r, [o + dt * k for o, k in zip(obars, k3o)])
        rho_new = rho + (dt / 6.0) * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
        obars_new = [
            o + (dt / 6.0) * (a + 2.0 * b + 2.0 * c + d)
            for o, a, b, c, d in zip(obars, k1o, k2o, k3o, k4o)
        ]
        return rho_new, obars_new

    def _step_markov(self, rho, obars, dt):
        if not hasattr(self, "_markov_cache"):
            G = self.generator(obars)
            self._markov_cache = ([self.embed(o) for o in obars], self.embed(G))
        os_s, G_s = self._markov_cache

        def f(r):
            return self.d_rho(r, os_s, G_s)

        k1 = f(rho)
        k2 = f(rho + 0.5 * dt * k1)
        k3 = f(rho + 0.5 * dt * k2)
        k4 = f(rho + dt * k3)
        return rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), obars


def propagate(
    rho0: np.ndarray,
    H: np.ndarray,
    baths: Sequence[Bath],
    dt: float,
    n_steps: int,
    sample_every: int = 1,
    embed: Callable[[np.ndarray], np.ndarray] | None = None,
) -> Iterator[EvolutionState]:
    """Yield the state at step 0 and every ``sample_every`` steps up to ``n_steps``.

    ``H`` and the bath operators live on the O-space; ``rho0`` on the
    rho-space reached through ``embed`` (identity when omitted).
    """
    eq = MasterEquation(H, baths, embed)
    rho = np.array(rho0, dtype=complex)
    obars = eq.initial_obars()
    yield EvolutionState(0.0, rho, obars)
    for k in range(1, n_steps + 1):
        rho, obars = eq.step(rho, obars, dt)
        if k % sample_every == 0:
            yield EvolutionState(k * dt, rho, obars)


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    measures: dict[str, np.ndarray]
    config: ChainConfig | None = None
    info: dict = field(default_factory=dict)

    def __getitem__(self, column: str) -> np.ndarray:
        if column == "t":
            return self.times
        return self.measures[column]

    def __len__(self) -> int:
        return len(self.times)

    def rows(self) -> Iterator[tuple[float, ...]]:
        cols = [self[c] for c in COLUMNS]
        for i in range(len(self)):
            yield tuple(float(c[i]) for c in cols)


class _Recorder:
    def __init__(self, cfg: ChainConfig):
        self.partition = make_partition(cfg)
        self.times: list[float] = []
        self.data: dict[str, list[float]] = {c: [] for c in COLUMNS if c != "t"}
        self.data["purity"] = []

    def add(self, t: float, rho_full: np.ndarray, trace_err: float, herm_err: float, min_eig: float):
        # The finite-memory generator is not completely positive, so the
        # ancilla-extended state can carry small dt-independent negative
        # eigenvalues; those are recorded, not fatal. Blow-ups show up in the
        # trace or in the reduced states checked by the measures.
        if not trace_err <= TRACE_GUARD:
            raise NumericalInstabilityError(f"at t={t:.6g}: trace error {trace_err:.3e}; reduce dt")
        try:
            m = measure_all(rho_full, self.partition)
        except PositivityError as exc:
            raise NumericalInstabilityError(f"at t={t:.6g}: {exc}; reduce dt") from exc
        self.times.append(t)
        for c in self.data:
            if c == "trace_err":
                self.data[c].append(trace_err)
            elif c == "herm_err":
                self.data[c].append(herm_err)
            elif c == "min_eig":
                self.data[c].append(min_eig)
            elif c == "purity":
                self.data[c].append(float(np.vdot(rho_full, rho_full).real))
            else:
                self.data[c].append(getattr(m, c))

    def record(self, cfg: ChainConfig, info: dict) -> TrajectoryRecord:
        return TrajectoryRecord(
            times=np.array(self.times),
            measures={c: np.array(v) for c, v in self.data.items()},
            config=cfg,
            info=info,
        )


def resolve_step(cfg: ChainConfig) -> tuple[float, int, int]:
    """(dt, n_steps, sample_every) after the stiffness guard.

    When ``gamma * dt`` exceeds the limit, dt is divided by an integer so that
    sample times stay on the requested grid.
    """
    gamma = max((g for g in (cfg.gamma1, cfg.gamma2) if math.isfinite(g)), default=0.0)
    refine = 1
    if not cfg.is_closed and gamma * cfg.dt > STIFFNESS_LIMIT:
        refine = math.ceil(gamma * cfg.dt / STIFFNESS_LIMIT - 1e-12)
    dt = cfg.dt / refine
    n_steps = int(math.floor(cfg.t_max / cfg.dt + 1e-9)) * refine
    return dt, n_steps, cfg.sample_every * refine


def chain_baths(cfg: ChainConfig) -> list[Bath]:
    """Bath operators on the bare chain register (``2**N``)."""
    return [
        Bath(build_lindblad(cfg, j), Gam, gam)
        for j, (Gam, gam) in enumerate(((cfg.Gamma1, cfg.gamma1), (cfg.Gamma2, cfg.gamma2)), start=1)
    ]


ENGINES = ("sector", "reduced", "full")


def evolve(cfg: ChainConfig, density: bool = False, engine: str = "sector") -> TrajectoryRecord:
    """Integrate one configuration and sample every diagnostic.

    Closed runs (no channel or zero coupling) use state-vector evolution
    unless ``density`` is set. ``engine`` picks the density-matrix kernel:
    ``sector`` (excitation-sector blocks, default), ``reduced`` (dense on the
    reachable subspace) or ``full`` (dense on the whole register); all three
    integrate the same equations and serve as cross-checks of each other.
    """
    if engine not in ENGINES:
        raise ValueError(f"unknown engine {engine!r}; choose from {ENGINES}")
    dt, n_steps, every = resolve_step(cfg)
    info = {"dt": dt, "n_steps": n_steps, "sample_every": every, "engine": engine}
    rec = _Recorder(cfg)
    if cfg.is_closed and not density:
        info["mode"] = "statevector"
        H = build_hamiltonian(cfg, with_ancilla=True)
        psi = prepare_state_vector(cfg)
        for k in range(n_steps + 1):
            if k % every == 0:
                rho = np.outer(psi, psi.conj())
                norm = float(np.vdot(psi, psi).real)
                rec.add(k * dt, rho / norm, abs(norm - 1.0), 0.0, 0.0)
            if k == n_steps:
                break
            psi = _rk4_vector(H, psi, dt)
        return rec.record(cfg, info)

    baths = [] if cfg.is_closed else chain_baths(cfg)
    info["mode"] = "markov" if baths and all(b.markov for b in baths) else "memory"
    if engine == "sector":
        info["blocks"] = _evolve_sectors(cfg, baths, dt, n_steps, every, rec)
    else:
        _evolve_dense(cfg, baths, dt, n_steps, every, rec, reduce=engine == "reduced")
    return rec.record(cfg, info)


def _sample(rec: _Recorder, t: float, blocks: Sequence[np.ndarray], expand, dim: int) -> None:
    herm_err = max(float(np.max(np.abs(b - b.conj().T))) for b in blocks)
    tr = sum(np.trace(b).real for b in blocks)
    sym = [0.5 * (b + b.conj().T) / tr for b in blocks]
    min_eig = min(float(herm_eigvals(b)[0]) for b in sym)
    if sum(b.shape[0] for b in blocks) < dim:
        min_eig = min(min_eig, 0.0)  # unreachable complement carries exact zeros
    rec.add(t, expand(sym), abs(tr - 1.0), herm_err, min_eig)


def _evolve_sectors(cfg, baths, dt, n_steps, every, rec) -> list[int]:
    from .sectors import SectorEquation

    lowering = bool(baths) and cfg.channel is Channel.DISSIPATION
    eq = SectorEquation(cfg.N, build_hamiltonian(cfg), baths, branch_states(cfg), -1 if lowering else 0)
    y = eq.initial_vector(prepare_state_vector(cfg))

    def expand(sym):
        d = 2 << cfg.N
        out = np.zeros((d, d), dtype=complex)
        for lam, blk in zip(eq.labels, sym):
            idx = eq.reg_idx[lam]
            out[np.ix_(idx, idx)] = blk
        return out

    for k in range(n_steps + 1):
        if k % every == 0:
            _sample(rec, k * dt, list(eq.rho_blocks(y).values()), expand, 2 << cfg.N)
        if k == n_steps:
            break
        y = eq.fast_step(y, dt)
    return [eq.dims[lam] for lam in eq.labels]


def _evolve_dense(cfg, baths, dt, n_steps, every, rec, reduce: bool) -> None:
    basis = ReducedBasis(cfg, full=not reduce)
    H = basis.chain_op(build_hamiltonian(cfg))
    baths = [Bath(basis.chain_op(b.lindblad), b.Gamma, b.gamma) for b in baths]
    psi_s = prepare_state_vector(cfg)[basis.reg_idx]
    rho0 = np.outer(psi_s, psi_s.conj())
    for state in propagate(rho0, H, baths, dt, n_steps, every, embed=basis.embed):
        _sample(rec, state.t, [state.rho], lambda sym: basis.expand_state(sym[0]), 2 << cfg.N)


def _rk4_vector(H: np.ndarray, psi: np.ndarray, dt: float) -> np.ndarray:
    k1 = -1j * (H @ psi)
    k2 = -1j * (H @ (psi + 0.5 * dt * k1))
    k3 = -1j * (H @ (psi + 0.5 * dt * k2))
    k4 = -1j * (H @ (psi + dt * k3))
    return psi + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
