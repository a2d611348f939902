"""Independent reference solutions used to cross-check the main integrator.

Nothing here calls into the right-hand sides in ``dynamics``: the Lindblad
reference and the state-vector integrator are written from scratch on the
full register with sparse operators, and the stochastic oracle unravels the
single-qubit dephasing model into linear diffusion trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.signal import lfilter

from .dynamics import TrajectoryRecord, _Recorder, resolve_step
from .errors import ConfigError, NumericalInstabilityError
from .model import ChainConfig, Channel, build_hamiltonian, build_lindblad, prepare_state_vector

NORM_GUARD = 1e-8
RNG_ALGORITHM = "numpy.random.PCG64"
_CHUNK = 500


@dataclass
class OracleReport:
    name: str
    max_abs_deviation: float
    tolerance: float
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.max_abs_deviation <= self.tolerance)

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict} {self.name}: max deviation {self.max_abs_deviation:.3e} (tol {self.tolerance:.1e})"

    def to_csv(self) -> str:
        """``t,deviation`` rows (when per-time details exist) and a trailing ``#`` summary line."""
        lines = []
        dev = self.details.get("deviation")
        if dev is not None:
            times = self.details.get("times", np.arange(len(dev), dtype=float))
            lines.append("t,deviation")
            lines += [f"{float(t)!r},{float(d)!r}" for t, d in zip(times, dev)]
        lines.append(f"# {self.summary()}")
        return "\n".join(lines) + "\n"


def compare_series(name: str, a: np.ndarray, b: np.ndarray, tol: float, times=None) -> OracleReport:
    dev = np.abs(np.asarray(a) - np.asarray(b))
    details = {"deviation": dev}
    if times is not None:
        details["times"] = np.asarray(times)
    return OracleReport(name, float(dev.max()) if dev.size else 0.0, tol, details)


def analytic_dephasing_coherence(Gamma: float, gamma: float, t: float) -> float:
    """Normalized single-qubit coherence ``|rho_01(t) / rho_01(0)|`` under sigma^z coupling."""
    if math.isinf(gamma):
        return math.exp(-2.0 * Gamma * t)
    if not gamma > 0:
        raise ConfigError("gamma must be > 0 or inf")
    return math.exp(-2.0 * Gamma * (t - (1.0 - math.exp(-gamma * t)) / gamma))


# -- Markov-limit Lindblad reference -------------------------------------------


def _lindblad_rhs(rho, H, jumps):
    # jumps: list of (sqrt(rate) L, (rate/2) L^+ L) as sparse matrices
    out = -1j * (H @ rho - (H.T @ rho.T).T)
    for L, K in jumps:
        Lr = L @ rho
        out += (L.conj() @ Lr.T).T - K @ rho - (K.T @ rho.T).T
    return out


def lindblad_reference_propagate(
    rho0: np.ndarray,
    H,
    lindblads: Sequence,
    rates: Sequence[float],
    dt: float,
    n_steps: int,
    sample_every: int = 1,
) -> Iterator[tuple[float, np.ndarray]]:
    """RK4 on ``d rho = -i[H, rho] + sum_j rate_j (L rho L^+ - {L^+ L, rho}/2)``."""
    H = sp.csr_matrix(H)
    jumps = []
    for L, g in zip(lindblads, rates):
        L = sp.csr_matrix(L)
        jumps.append((math.sqrt(g) * L, sp.csr_matrix(0.5 * g * (L.conj().T @ L))))
    rho = np.array(rho0, dtype=complex)
    yield 0.0, rho
    for k in range(1, n_steps + 1):
        k1 = _lindblad_rhs(rho, H, jumps)
        k2 = _lindblad_rhs(rho + 0.5 * dt * k1, H, jumps)
        k3 = _lindblad_rhs(rho + 0.5 * dt * k2, H, jumps)
        k4 = _lindblad_rhs(rho + dt * k3, H, jumps)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if k % sample_every == 0:
            yield k * dt, rho


def _record_from_states(cfg: ChainConfig, states, info: dict) -> TrajectoryRecord:
    rec = _Recorder(cfg)
    for t, rho in states:
        tr = np.trace(rho).real
        herm_err = float(np.max(np.abs(rho - rho.conj().T)))
        sym = 0.5 * (rho + rho.conj().T) / tr
        min_eig = float(np.linalg.eigvalsh(sym)[0])
        rec.add(t, sym, abs(tr - 1.0), herm_err, min_eig)
    return rec.record(cfg, info)


def lindblad_reference_evolve(cfg: ChainConfig) -> TrajectoryRecord:
    """Markov-limit run on the full ancilla-extended register."""
    if not cfg.is_closed and not cfg.is_markov:
        raise ConfigError("lindblad_reference_evolve needs gamma1 = gamma2 = inf")
    dt, n_steps, every = resolve_step(cfg)
    H = build_hamiltonian(cfg, with_ancilla=True)
    Ls, rates = [], []
    if cfg.channel is not Channel.NONE:
        Ls = [build_lindblad(cfg, 1, with_ancilla=True), build_lindblad(cfg, 2, with_ancilla=True)]
        rates = [cfg.Gamma1, cfg.Gamma2]
    psi = prepare_state_vector(cfg)
    rho0 = np.outer(psi, psi.conj())
    states = lindblad_reference_propagate(rho0, H, Ls, rates, dt, n_steps, every)
    return _record_from_states(cfg, states, {"dt": dt, "mode": "lindblad-reference"})


# -- closed-system state vector --------------------------------------------------


def statevector_propagate(psi0: np.ndarray, H, dt: float, n_steps: int, sample_every: int = 1):
    """RK4 on ``d psi = -i H psi``; raises when the norm drifts by more than 1e-8."""
    H = sp.csr_matrix(H)
    psi = np.array(psi0, dtype=complex)
    n0 = float(np.vdot(psi, psi).real)
    yield 0.0, psi
    for k in range(1, n_steps + 1):
        k1 = -1j * (H @ psi)
        k2 = -1j * (H @ (psi + 0.5 * dt * k1))
        k3 = -1j * (H @ (psi + 0.5 * dt * k2))
        k4 = -1j * (H @ (psi + dt * k3))
        psi = psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if k % sample_every == 0:
            drift = abs(float(np.vdot(psi, psi).real) - n0)
            if drift > NORM_GUARD:
                raise NumericalInstabilityError(f"at t={k * dt:.6g}: norm drift {drift:.3e}; reduce dt")
            yield k * dt, psi


def statevector_unitary_evolve(cfg: ChainConfig) -> TrajectoryRecord:
    if not (cfg.Gamma1 == 0 and cfg.Gamma2 == 0) and cfg.channel is not Channel.NONE:
        raise ConfigError("statevector_unitary_evolve needs Gamma1 = Gamma2 = 0")
    dt, n_steps, every = resolve_step(cfg)
    H = build_hamiltonian(cfg, with_ancilla=True)
    states = (
        (t, np.outer(psi, psi.conj()))
        for t, psi in statevector_propagate(prepare_state_vector(cfg), H, dt, n_steps, every)
    )
    return _record_from_states(cfg, states, {"dt": dt, "mode": "statevector-reference"})


# -- stochastic trajectories -----------------------------------------------------


@dataclass
class EnsembleResult:
    times: np.ndarray
    coherence: np.ndarray  # ensemble mean of rho_01 / rho_01(0), complex
    stderr: np.ndarray  # standard error of the real part
    num_traj: int
    seed: int
    rng: str = RNG_ALGORITHM


def _ou_noise(seeds: Sequence[int], n_steps: int, Gamma: float, gamma: float, dt: float) -> np.ndarray:
    """Complex OU paths ``z_0..z_n`` (one row per seed), stationary from the start.

    Exact update ``z_{k+1} = z_k e^{-gamma dt} + sigma xi_k`` with
    ``M[z_t^* z_s] = (Gamma gamma / 2) exp(-gamma |t - s|)``.
    """
    var = 0.5 * Gamma * gamma
    decay = math.exp(-gamma * dt)
    sigma = math.sqrt(var * (1.0 - decay * decay))
    xi = np.empty((len(seeds), n_steps + 1), dtype=complex)
    for row, s in enumerate(seeds):
        g = np.random.Generator(np.random.PCG64(s)).standard_normal((2, n_steps + 1))
        xi[row] = (g[0] + 1j * g[1]) / math.sqrt(2.0)
    xi[:, 0] *= math.sqrt(var)
    xi[:, 1:] *= sigma
    return lfilter([1.0], [1.0, -decay], xi, axis=1)


def qsd_trajectory_dephasing_ensemble(
    Gamma: float,
    gamma: float,
    t_max: float,
    dt: float,
    num_traj: int,
    seed: int,
    sample_every: int = 1,
) -> EnsembleResult:
    """Linear diffusion trajectories for one qubit with ``H = 0`` and ``L = sigma^z``.

    Here the memory operator is exactly ``f(t) sigma^z`` with
    ``f = (Gamma/2)(1 - exp(-gamma t))``, so ``L^+ O = f``. Each step applies
    the exact propagator of the linear equation for piecewise-linear noise:
    ``psi <- exp(sigma^z Z* - F) psi`` with ``Z*`` the trapezoidal step
    integral of ``z*`` and ``F`` the exact step integral of ``f``.
    Trajectory ``i`` draws from ``PCG64(seed + i)``.
    """
    if num_traj < 100:
        raise ConfigError(f"num_traj={num_traj} is too small for meaningful statistics (need >= 100)")
    if not (Gamma >= 0 and gamma > 0 and math.isfinite(gamma)):
        raise ConfigError("need Gamma >= 0 and finite gamma > 0")
    n_steps = int(math.floor(t_max / dt + 1e-9))
    times = dt * np.arange(0, n_steps + 1, sample_every)
    t_grid = dt * np.arange(n_steps + 1)
    F = 0.5 * Gamma * (t_grid - (1.0 - np.exp(-gamma * t_grid)) / gamma)

    samples = np.empty((num_traj, len(times)), dtype=complex)
    for start in range(0, num_traj, _CHUNK):
        rows = range(start, min(start + _CHUNK, num_traj))
        if Gamma == 0:
            zc = np.zeros((len(rows), n_steps + 1), dtype=complex)
        else:
            zc = _ou_noise([seed + i for i in rows], n_steps, Gamma, gamma, dt).conj()
        Z = np.zeros_like(zc)
        np.cumsum(0.5 * dt * (zc[:, 1:] + zc[:, :-1]), axis=1, out=Z[:, 1:])
        # Amplitudes of |0> and |1> (sigma^z = +1, -1), both starting at 1/sqrt(2).
        a = np.exp(Z - F) / math.sqrt(2.0)
        b = np.exp(-Z - F) / math.sqrt(2.0)
        samples[start : start + len(rows)] = (2.0 * a * b.conj())[:, ::sample_every]

    # Compensated, order-independent reduction over trajectories.
    mean = np.array(
        [complex(math.fsum(col.real), math.fsum(col.imag)) / num_traj for col in samples.T]
    )
    spread = samples.real.std(axis=0, ddof=1) / math.sqrt(num_traj)
    return EnsembleResult(times, mean, spread, num_traj, seed)


def run_oracle_suite(dt: float = 1e-3) -> list[OracleReport]:
    """Fast self-checks: analytic, stochastic, Markov-limit and closed-system routes."""
    from .dynamics import Bath, propagate
    from .model import SIGMA_Z

    reports = []
    Gamma, gamma = 0.5, 5.0
    n = int(round(5.0 / dt))
    rho0 = np.full((2, 2), 0.5, dtype=complex)
    states = list(propagate(rho0, np.zeros((2, 2), complex), [Bath(SIGMA_Z, Gamma, gamma)], dt, n, 10))
    t = np.array([s.t for s in states])
    got = np.array([2 * abs(s.rho[0, 1]) for s in states])
    want = np.array([analytic_dephasing_coherence(Gamma, gamma, x) for x in t])
    reports.append(compare_series("dephasing-analytic", got, want, 1e-6, t))

    ens = qsd_trajectory_dephasing_ensemble(Gamma, gamma, 2.0, dt, 10_000, seed=1234, sample_every=500)
    want = np.array([analytic_dephasing_coherence(Gamma, gamma, x) for x in ens.times])
    z = np.abs(ens.coherence.real - want) / np.maximum(ens.stderr, 1e-300)
    z[0] = 0.0
    reports.append(OracleReport("dephasing-trajectories (in standard errors)", float(z.max()), 3.0))

    from .dynamics import evolve

    small = ChainConfig(N=4, n=1, channel="dephasing", gamma1=math.inf, gamma2=math.inf, t_max=2.0, dt=dt, sample_every=100)
    a, b = evolve(small), lindblad_reference_evolve(small)
    dev = max(float(np.max(np.abs(a[c] - b[c]))) for c in ("TMI", "TLN", "I2_AB", "I2_AC", "I2_ABC", "total_sz"))
    reports.append(OracleReport("markov-limit vs lindblad reference (N=4)", dev, 1e-6))

    closed = ChainConfig(N=4, n=1, channel="none", t_max=2.0, dt=dt, sample_every=100)
    a, b = evolve(closed, density=True), statevector_unitary_evolve(closed)
    dev = max(float(np.max(np.abs(a[c] - b[c]))) for c in ("TMI", "TLN"))
    reports.append(OracleReport("closed density path vs state vector (N=4)", dev, 1e-8))
    return reports
