"""Physical model: chain configuration, Hamiltonian, bath operators, initial state.

The register holds ``N + 1`` qubits: the ancilla A is qubit 0 (most
significant) and chain site ``i`` (1-based) is qubit ``i``.  ``|0>`` is the
spin-up state with ``sigma^z = +1`` and ``sigma^- = |0><1|``, so ``|1>``
counts as an excitation.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields, replace

import numpy as np

from .errors import ConfigError, QubitIndexError
from .tensor import kron_all

MARKOV = math.inf

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.T.copy()
IDENTITY = np.eye(2, dtype=complex)

PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z, "-": SIGMA_MINUS, "+": SIGMA_PLUS, "i": IDENTITY}


class Channel(str, enum.Enum):
    NONE = "none"
    DEPHASING = "dephasing"
    DISSIPATION = "dissipation"


class InitialState(str, enum.Enum):
    NEEL = "neel"
    ALL_ZEROS = "zeros"


@dataclass(frozen=True)
class ChainConfig:
    """Full specification of one run.

    ``gamma1``/``gamma2`` are inverse bath memory times; ``MARKOV`` (inf)
    selects the memoryless limit. Times are in units of ``1/|J|``.
    """

    N: int = 6
    J: float = -1.0
    delta: float = 1.0
    channel: Channel = Channel.NONE
    Gamma1: float = 0.5
    Gamma2: float = 0.5
    gamma1: float = 5.0
    gamma2: float = 5.0
    init: InitialState = InitialState.NEEL
    n: int = 2
    t_max: float = 30.0
    dt: float = 1e-3
    sample_every: int = 100

    def __post_init__(self):
        object.__setattr__(self, "channel", Channel(self.channel))
        object.__setattr__(self, "init", InitialState(self.init))
        if not 2 <= self.N <= 11:
            raise ConfigError(f"N={self.N} violates 2 <= N <= 11")
        if not 1 <= self.n <= self.N - 2:
            raise ConfigError(f"n={self.n} violates 1 <= n <= N-2 (N={self.N})")
        if self.Gamma1 < 0 or self.Gamma2 < 0:
            raise ConfigError("Gamma must be >= 0")
        if not (self.gamma1 > 0 and self.gamma2 > 0):
            raise ConfigError("gamma must be > 0 (or inf for the Markov limit)")
        if not self.dt > 0:
            raise ConfigError("dt must be > 0")
        if self.t_max < self.dt:
            raise ConfigError("t_max must be >= dt")
        if self.sample_every < 1:
            raise ConfigError("sample_every must be >= 1")

    @property
    def num_qubits(self) -> int:
        return self.N + 1

    @property
    def is_closed(self) -> bool:
        return self.channel is Channel.NONE or (self.Gamma1 == 0 and self.Gamma2 == 0)

    @property
    def is_markov(self) -> bool:
        return math.isinf(self.gamma1) and math.isinf(self.gamma2)

    def with_(self, **changes) -> "ChainConfig":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = v.value if isinstance(v, enum.Enum) else v
        return out


@dataclass(frozen=True)
class Partition:
    A: tuple[int, ...]
    B: tuple[int, ...]
    C: tuple[int, ...]
    D: tuple[int, ...]


def single_site_op(op, site: int, q: int) -> np.ndarray:
    """``op`` on qubit ``site`` of a ``q``-qubit register, identity elsewhere.

    ``op`` is a 2x2 matrix or one of the keys ``x, y, z, -, +``.
    """
    if not 0 <= site < q:
        raise QubitIndexError(f"site {site} outside register of {q} qubits")
    m = PAULI[op] if isinstance(op, str) else np.asarray(op, dtype=complex)
    factors = [IDENTITY] * q
    factors[site] = m
    return kron_all(factors)


def _chain_qubits(N: int, with_ancilla: bool) -> tuple[int, int]:
    # (register size, qubit index of chain site 1)
    return (N + 1, 1) if with_ancilla else (N, 0)


def xxz_hamiltonian(N: int, J: float = -1.0, delta: float = 1.0, with_ancilla: bool = False) -> np.ndarray:
    """Open-boundary sum of ``J (XX + YY + delta ZZ)`` over nearest neighbours."""
    if N < 2:
        raise ConfigError(f"a chain needs N >= 2 sites, got {N}")
    q, first = _chain_qubits(N, with_ancilla)
    h = np.zeros((1 << q, 1 << q), dtype=complex)
    for i in range(first, first + N - 1):
        for pauli, weight in (("x", 1.0), ("y", 1.0), ("z", delta)):
            if weight == 0:
                continue
            h += J * weight * (single_site_op(pauli, i, q) @ single_site_op(pauli, i + 1, q))
    return h


def bath_operator(channel, which_bath: int, N: int, with_ancilla: bool = False) -> np.ndarray:
    """Jump operator of bath 1 (chain site 1) or bath 2 (chain site N)."""
    channel = Channel(channel)
    if channel is Channel.NONE:
        raise ConfigError("channel 'none' has no Lindblad operators")
    if which_bath not in (1, 2):
        raise ConfigError(f"bath must be 1 or 2, got {which_bath}")
    q, first = _chain_qubits(N, with_ancilla)
    site = first if which_bath == 1 else first + N - 1
    op = "z" if channel is Channel.DEPHASING else "-"
    return single_site_op(op, site, q)


def build_hamiltonian(cfg: ChainConfig, with_ancilla: bool = False) -> np.ndarray:
    return xxz_hamiltonian(cfg.N, cfg.J, cfg.delta, with_ancilla)


def build_lindblad(cfg: ChainConfig, which_bath: int, with_ancilla: bool = False) -> np.ndarray:
    return bath_operator(cfg.channel, which_bath, cfg.N, with_ancilla)


def chain_bits(init, N: int) -> list[int]:
    """Computational-basis bits of the chain state before the CNOT."""
    if InitialState(init) is InitialState.NEEL:
        return [i % 2 for i in range(N)]
    return [0] * N


def branch_indices(init, N: int) -> tuple[int, int]:
    """Chain basis indices paired with ancilla 0 and ancilla 1 after the CNOT."""
    idx0 = int("".join(map(str, chain_bits(init, N))), 2)
    idx1 = idx0 ^ (1 << (N - 1))  # CNOT target: chain site 1
    return idx0, idx1


def branch_states(cfg: ChainConfig) -> tuple[int, int]:
    return branch_indices(cfg.init, cfg.N)


def initial_state_vector(init, N: int) -> np.ndarray:
    idx0, idx1 = branch_indices(init, N)
    d = 1 << N
    psi = np.zeros(2 * d, dtype=complex)
    psi[idx0] = 1 / math.sqrt(2)
    psi[d + idx1] = 1 / math.sqrt(2)
    return psi


def prepare_state_vector(cfg: ChainConfig) -> np.ndarray:
    return initial_state_vector(cfg.init, cfg.N)


def prepare_initial_state(cfg: ChainConfig) -> np.ndarray:
    psi = prepare_state_vector(cfg)
    return np.outer(psi, psi.conj())


def make_partition(cfg: ChainConfig) -> Partition:
    if not 1 <= cfg.n <= cfg.N - 2:
        raise ConfigError(f"n={cfg.n} violates 1 <= n <= N-2")
    return Partition(
        A=(0,),
        B=(1,),
        C=tuple(range(2, 2 + cfg.n)),
        D=tuple(range(2 + cfg.n, cfg.N + 1)),
    )
