import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qwire.core import (ChainConfig, CZBar, FrameLedger, HBar, HyBar, IsingEvolve, LocalRx,
                        PauliString, PulseSchedule)
from qwire.statevector import (CapExceeded, ChainState, H_GATE, fidelity, init_state,
                               materialize, product_state, run_schedule, rx, schedule_unitary,
                               unitarity_defect)


def test_fidelity_trivial_cases():
    a = product_state([np.array([1, 0])])
    b = product_state([np.array([0, 1])])
    assert fidelity(a, a) == pytest.approx(1.0)
    assert fidelity(a, b) == pytest.approx(0.0)


@given(st.floats(-10, 10, allow_nan=False), st.integers(0, 1000))
def test_fidelity_ignores_global_phase(phi, seed):
    s = init_state(ChainConfig(3, (1,)), seed=seed, junk_mode="random")
    t = ChainState(3, s.amplitudes * np.exp(1j * phi))
    assert fidelity(s, t) == pytest.approx(1.0)


def test_empty_schedule_leaves_state():
    s = init_state(ChainConfig.padded(2), seed=5)
    assert fidelity(run_schedule(s, PulseSchedule(3)), s) == pytest.approx(1.0)


def test_hbar_on_one_site_is_hadamard():
    assert np.allclose(schedule_unitary(PulseSchedule(1, (HBar(),))), H_GATE)


def test_hybar_is_quarter_x_turn():
    u = schedule_unitary(PulseSchedule(1, (HyBar(),)))
    assert np.allclose(u, rx(math.pi / 4))
    assert np.allclose(rx(math.pi / 4), (np.eye(2) - 1j * np.array([[0, 1], [1, 0]])) / math.sqrt(2))


def test_decoupled_ising_leaves_end_spin_alone():
    n = 4
    a = schedule_unitary(PulseSchedule(n, (IsingEvolve(0.7, (4,)),)))
    b = np.kron(schedule_unitary(PulseSchedule(3, (IsingEvolve(0.7),))), np.eye(2))
    assert np.allclose(a, b)


def test_pulsed_decoupling_matches_ideal():
    from qwire.compiler import decoupled_ising
    n = 4
    ideal = schedule_unitary(PulseSchedule(n, tuple(decoupled_ising(0.9, 4, n, "ideal"))))
    pulsed = schedule_unitary(PulseSchedule(n, tuple(decoupled_ising(0.9, 4, n, "pulsed"))))
    ph = np.vdot(ideal, pulsed) / abs(np.vdot(ideal, pulsed))
    assert np.allclose(pulsed, ph * ideal)


def test_ledger_materialization_order():
    # pending z first, then the Pauli frame
    sched = PulseSchedule(1, (), FrameLedger(PauliString.parse("X"), ((1, 0.3),)))
    u = schedule_unitary(sched, with_ledger=True)
    rz = np.diag([np.exp(-0.3j), np.exp(0.3j)])
    assert np.allclose(u, np.array([[0, 1], [1, 0]]) @ rz)
    s = product_state([np.array([1, 0])])
    assert np.allclose(materialize(s, sched.ledger).amplitudes, [0, np.exp(-0.3j)])


def test_caps_enforced():
    with pytest.raises(CapExceeded):
        ChainState(30, np.zeros(1))
    with pytest.raises(CapExceeded):
        schedule_unitary(PulseSchedule(11, ()))


def test_state_text_round_trip():
    s = init_state(ChainConfig.padded(2), seed=9)
    back = ChainState.from_text(s.to_text())
    assert np.array_equal(back.amplitudes, s.amplitudes)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_layers_are_unitary(n):
    layers = (CZBar(), HBar(), HyBar(), IsingEvolve(0.31), LocalRx(1, 0.2))
    u = schedule_unitary(PulseSchedule(n, layers))
    assert unitarity_defect(u) < 1e-10
