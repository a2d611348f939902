import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from openchain.errors import PositivityError, QubitIndexError
from openchain.measures import (
    POSITIVITY_TOL,
    bln,
    bmi,
    clamp_spectrum,
    measure_all,
    subsystem_entropy,
    tln,
    tmi,
    total_sz,
    von_neumann_entropy,
)
from openchain.model import ChainConfig, Partition, make_partition, prepare_initial_state
from openchain.tensor import kron, kron_all

from conftest import random_density

BELL = np.zeros((4, 4), dtype=complex)
BELL[np.ix_([0, 3], [0, 3])] = 0.5


def test_entropy_examples():
    pure = np.zeros((4, 4))
    pure[2, 2] = 1
    assert von_neumann_entropy(pure) == 0.0
    assert von_neumann_entropy(np.eye(2) / 2) == pytest.approx(math.log(2), abs=1e-14)
    assert von_neumann_entropy(np.diag([0.75, 0.25])) == pytest.approx(0.5623351446188083, abs=1e-14)


def test_positivity_policy():
    assert np.array_equal(clamp_spectrum(np.array([-1e-9, 0.5])), [0.0, 0.5])
    # roundoff-sized negatives are clamped, so only the 1+1e-7 term survives
    assert von_neumann_entropy(np.diag([1 + 1e-7, -1e-7])) == pytest.approx(0.0, abs=2e-7)
    with pytest.raises(PositivityError):
        von_neumann_entropy(np.diag([1.1, -0.1]))
    assert POSITIVITY_TOL == 1e-6


def test_bmi_examples(rng):
    a, b = random_density(rng, 1), random_density(rng, 2)
    assert bmi(kron(a, b), [0], [1, 2]) == pytest.approx(0.0, abs=1e-12)
    assert bmi(BELL, [0], [1]) == pytest.approx(2 * math.log(2), abs=1e-12)
    with pytest.raises(QubitIndexError):
        bmi(BELL, [0], [0])


def test_negativity_examples(rng):
    a, b = random_density(rng, 1), random_density(rng, 1)
    assert bln(kron(a, b), [0], [1]) == pytest.approx(0.0, abs=1e-12)
    assert bln(BELL, [0], [1]) == pytest.approx(1.0, abs=1e-12)
    werner = BELL / 3 + (1 - 1 / 3) * np.eye(4) / 4
    # PPT boundary: smallest eigenvalue of the partial transpose is exactly 0
    assert bln(werner, [0], [1]) == pytest.approx(0.0, abs=1e-12)
    entangled = 0.5 * BELL + 0.5 * np.eye(4) / 4
    # eigenvalues of the transpose: 3/8 (x3) and -1/8, trace norm 5/4
    assert bln(entangled, [0], [1]) == pytest.approx(math.log2(1.25), abs=1e-12)


def test_product_states_have_zero_tripartite_quantities(rng):
    rho = kron_all([random_density(rng, 1) for _ in range(4)])
    p = Partition(A=(0,), B=(1,), C=(2,), D=(3,))
    assert tmi(rho, p) == pytest.approx(0.0, abs=1e-12)
    assert tln(rho, p) == pytest.approx(0.0, abs=1e-12)


def test_total_sz_examples():
    zero = np.zeros((8, 8))
    zero[0, 0] = 1
    assert total_sz(zero) == 3.0
    assert total_sz(np.eye(16) / 16) == pytest.approx(0.0, abs=1e-15)


def test_prepared_state_zero_tripartite():
    for cfg in (ChainConfig(N=6, n=2), ChainConfig(N=7, n=1, init="zeros"), ChainConfig(N=5, n=3)):
        rho = prepare_initial_state(cfg)
        m = measure_all(rho, make_partition(cfg))
        assert abs(m.TMI) <= 1e-10 and abs(m.TLN) <= 1e-10
        assert m.I2_AB == pytest.approx(2 * math.log(2), abs=1e-10)
        assert m.E2_AB == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 16))
def test_measure_all_matches_direct_definitions(seed, rank):
    rng = np.random.default_rng(seed)
    rho = random_density(rng, 5, rank=rank)
    p = Partition(A=(0,), B=(1,), C=(2, 3), D=(4,))
    m = measure_all(rho, p)
    assert m.TMI == m.I2_AB + m.I2_AC - m.I2_ABC
    assert m.TLN == m.E2_AB + m.E2_AC - m.E2_ABC
    assert m.TMI == pytest.approx(tmi(rho, p), abs=1e-10)
    assert m.TLN == pytest.approx(tln(rho, p), abs=1e-10)
    assert m.S_A == pytest.approx(subsystem_entropy(rho, p.A), abs=1e-12)
    for v in (m.I2_AB, m.I2_AC, m.I2_ABC):
        assert v >= -1e-8
    for v in (m.E2_AB, m.E2_AC, m.E2_ABC):
        assert v >= -1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_pure_state_complement_symmetry(seed):
    rng = np.random.default_rng(seed)
    rho = random_density(rng, 5, rank=1)
    for sub in ([0], [0, 1], [1, 3], [0, 2, 4]):
        comp = [i for i in range(5) if i not in sub]
        assert subsystem_entropy(rho, sub) == pytest.approx(subsystem_entropy(rho, comp), abs=1e-8)
    p = Partition(A=(0,), B=(1,), C=(2, 3), D=(4,))
    m = measure_all(rho, p)
    assert m.I2_AB + m.I2_AC - m.TMI == pytest.approx(m.I2_ABC, abs=1e-12)
