import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from openchain.dynamics import Bath, evolve, propagate
from openchain.errors import ConfigError
from openchain.model import MARKOV, SIGMA_MINUS, SIGMA_Z, ChainConfig, initial_state_vector, xxz_hamiltonian
from openchain.oracles import (
    OracleReport,
    analytic_dephasing_coherence,
    compare_series,
    lindblad_reference_evolve,
    lindblad_reference_propagate,
    qsd_trajectory_dephasing_ensemble,
    statevector_propagate,
    statevector_unitary_evolve,
)

# frozen before any integrator existed: exp(-2*0.5*(1 - (1 - e^-5)/5))
COHERENCE_AT_1 = 0.44872386097500866


def test_analytic_examples():
    assert analytic_dephasing_coherence(0.5, 5.0, 0.0) == 1.0
    assert analytic_dephasing_coherence(0.5, 5.0, 1.0) == pytest.approx(COHERENCE_AT_1, abs=1e-15)
    assert analytic_dephasing_coherence(0.5, MARKOV, 1.3) == pytest.approx(math.exp(-1.3), abs=1e-15)
    assert analytic_dephasing_coherence(0.5, 1e9, 1.3) == pytest.approx(math.exp(-1.3), abs=1e-8)
    with pytest.raises(ConfigError):
        analytic_dephasing_coherence(0.5, 0.0, 1.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 2.0), st.floats(0.1, 50.0), st.floats(0.0, 10.0))
def test_analytic_bounded_by_markov(Gamma, gamma, t):
    # memory can only slow the decay relative to the memoryless limit
    c = analytic_dephasing_coherence(Gamma, gamma, t)
    assert math.exp(-2 * Gamma * t) - 1e-15 <= c <= 1.0


def test_report_semantics():
    assert OracleReport("x", 1e-7, 1e-6).passed
    assert not OracleReport("x", 2e-6, 1e-6).passed
    rep = compare_series("x", [1.0, 2.0], [1.0, 2.5], 0.1, times=[0.0, 1.0])
    assert rep.max_abs_deviation == 0.5 and not rep.passed
    text = rep.to_csv().splitlines()
    assert text[0] == "t,deviation" and text[2] == "1.0,0.5"
    assert text[-1].startswith("# FAIL x")


def test_lindblad_reference_single_qubit():
    rho0 = np.full((2, 2), 0.5, dtype=complex)
    for t, rho in lindblad_reference_propagate(rho0, np.zeros((2, 2)), [SIGMA_Z], [0.5], 1e-3, 2000, 250):
        assert 2 * abs(rho[0, 1]) == pytest.approx(analytic_dephasing_coherence(0.5, MARKOV, t), abs=1e-10)
    excited = np.diag([0.0, 1.0]).astype(complex)
    for t, rho in lindblad_reference_propagate(excited, np.zeros((2, 2)), [SIGMA_MINUS], [0.5], 1e-3, 2000, 250):
        assert rho[1, 1].real == pytest.approx(math.exp(-0.5 * t), abs=1e-10)


def test_lindblad_reference_zero_rate_is_closed():
    cfg = ChainConfig(N=4, n=1, channel="dephasing", Gamma1=0.0, Gamma2=0.0, gamma1=MARKOV, gamma2=MARKOV, t_max=1.0, dt=1e-3, sample_every=100)
    a, b = lindblad_reference_evolve(cfg), statevector_unitary_evolve(cfg)
    assert np.max(np.abs(a["TMI"] - b["TMI"])) <= 1e-8
    with pytest.raises(ConfigError):
        lindblad_reference_evolve(cfg.with_(Gamma1=0.5, gamma1=5.0, gamma2=5.0))


@pytest.mark.parametrize("channel", ["dephasing", "dissipation"])
def test_markov_mode_matches_lindblad_reference(channel):
    cfg = ChainConfig(N=5, n=2, channel=channel, gamma1=MARKOV, gamma2=MARKOV, t_max=1.5, dt=2e-3, sample_every=25)
    a, b = evolve(cfg), lindblad_reference_evolve(cfg)
    for c in ("I2_AB", "I2_AC", "I2_ABC", "TMI", "E2_AB", "E2_AC", "E2_ABC", "TLN", "S_A", "total_sz"):
        assert np.max(np.abs(a[c] - b[c])) <= 1e-6, c


def test_rabi_oscillation():
    H = xxz_hamiltonian(2, J=-1.0, delta=0.0)
    psi0 = np.zeros(4, complex)
    psi0[0b01] = 1.0
    for t, psi in statevector_propagate(psi0, H, 1e-3, 3000, 100):
        assert abs(psi[0b01]) ** 2 == pytest.approx(math.cos(2 * t) ** 2, abs=1e-10)


def test_energy_conserved():
    cfg = ChainConfig(N=6, n=2)
    H = xxz_hamiltonian(6, with_ancilla=True)
    psi0 = initial_state_vector("neel", 6)
    e0 = np.vdot(psi0, H @ psi0).real
    for _, psi in statevector_propagate(psi0, H, 1e-3, 5000, 500):
        assert abs(np.vdot(psi, H @ psi).real - e0) <= 1e-8


def test_closed_density_path_matches_statevector():
    cfg = ChainConfig(N=5, n=2, t_max=3.0, dt=1e-3, sample_every=50)
    a, b = evolve(cfg, density=True), statevector_unitary_evolve(cfg)
    for c in ("TMI", "TLN"):
        assert np.max(np.abs(a[c] - b[c])) <= 1e-8
    with pytest.raises(ConfigError):
        statevector_unitary_evolve(cfg.with_(channel="dephasing"))


def test_ensemble_examples():
    ens = qsd_trajectory_dephasing_ensemble(0.0, 5.0, 1.0, 1e-2, 100, seed=3, sample_every=10)
    assert np.max(np.abs(ens.coherence - 1.0)) <= 1e-15
    assert ens.rng == "numpy.random.PCG64"
    with pytest.raises(ConfigError):
        qsd_trajectory_dephasing_ensemble(0.5, 5.0, 1.0, 1e-2, 99, seed=3)


def test_ensemble_determinism_and_accuracy():
    a = qsd_trajectory_dephasing_ensemble(0.5, 5.0, 1.0, 1e-3, 2000, seed=11, sample_every=250)
    b = qsd_trajectory_dephasing_ensemble(0.5, 5.0, 1.0, 1e-3, 2000, seed=11, sample_every=250)
    assert np.array_equal(a.coherence, b.coherence) and np.array_equal(a.stderr, b.stderr)
    assert a.coherence[-1].real == pytest.approx(COHERENCE_AT_1, abs=0.02)
    assert np.all(np.abs(a.coherence.imag) <= 5 * a.stderr + 1e-15)
    c = qsd_trajectory_dephasing_ensemble(0.5, 5.0, 1.0, 1e-3, 2000, seed=12, sample_every=250)
    assert not np.array_equal(a.coherence, c.coherence)


def test_ensemble_order_independent():
    # trajectory i depends only on seed + i: a shifted window reproduces its rows
    a = qsd_trajectory_dephasing_ensemble(0.5, 5.0, 0.5, 1e-2, 200, seed=100, sample_every=50)
    b = qsd_trajectory_dephasing_ensemble(0.5, 5.0, 0.5, 1e-2, 100, seed=100, sample_every=50)
    c = qsd_trajectory_dephasing_ensemble(0.5, 5.0, 0.5, 1e-2, 100, seed=200, sample_every=50)
    assert np.allclose(a.coherence, 0.5 * (b.coherence + c.coherence), atol=1e-14)


def test_dynamics_propagate_matches_analytic_coherence():
    rho0 = np.full((2, 2), 0.5, dtype=complex)
    states = list(propagate(rho0, np.zeros((2, 2), complex), [Bath(SIGMA_Z, 0.5, 5.0)], 1e-3, 1000, 1000))
    assert 2 * abs(states[-1].rho[0, 1]) == pytest.approx(COHERENCE_AT_1, abs=1e-9)
