import math

import numpy as np
import pytest

from qwire.compiler import (bangbang_x_phases, compile_czbar, compile_czd, compile_mirror,
                            compile_plus_prep, compile_step_bangbang, compile_transport,
                            czbar_layers, czd_unwanted_rotation, inverse_layers,
                            step_bangbang_layers, transport_composites)
from qwire.core import (ChainConfig, CZBar, GlobalRz, HBar, IsingEvolve, LocalRz, PulseSchedule,
                        validate_schedule)
from qwire.statevector import (_czbar_diag, fidelity, haar_qubit, init_state, materialize,
                               phase_aligned_distance, product_state, rz, run_schedule,
                               schedule_unitary, unitarity_defect)

PI = math.pi


def test_czbar_on_two_sites_is_cz():
    # reference value: CZ is the pi/2 phase gate, diag(1, 1, 1, -1)
    u = schedule_unitary(compile_czbar(2))
    assert phase_aligned_distance(u, np.diag([1, 1, 1, -1])) < 1e-9


@pytest.mark.parametrize("n", range(2, 9))
def test_czbar_equals_product_of_cz(n):
    u = schedule_unitary(compile_czbar(n))
    assert phase_aligned_distance(u, np.diag(_czbar_diag(n))) < 1e-9
    assert unitarity_defect(u) < 1e-10


def test_czbar_local_angles():
    # reference value: -pi/2 on every site, an extra pi/4 on each end, R_z(t) = exp(-i t Z)
    layers = czbar_layers(5)
    assert layers[0] == IsingEvolve(PI / 4)
    assert GlobalRz(-PI / 2) in layers
    assert LocalRz(1, PI / 4) in layers and LocalRz(5, PI / 4) in layers


def test_z_layers_commute_with_ising():
    n = 4
    layers = czbar_layers(n)
    moved = layers[1:] + layers[:1]
    a = schedule_unitary(PulseSchedule(n, tuple(layers)))
    b = schedule_unitary(PulseSchedule(n, tuple(moved)))
    assert phase_aligned_distance(a, b) < 1e-9


@pytest.mark.parametrize("n", range(2, 9))
def test_bangbang_step_matches_hbar_czbar(n):
    u = schedule_unitary(compile_step_bangbang(n))
    v = schedule_unitary(PulseSchedule(n, (CZBar(), HBar())))
    assert phase_aligned_distance(u, v) < 1e-9


def test_bangbang_without_end_pulses_fails():
    # negative control: dropping the selective end pulses breaks the step
    n = 4
    bulk_only = [layer for layer in step_bangbang_layers(n) if layer.site is None]
    u = schedule_unitary(PulseSchedule(n, tuple(bulk_only)))
    v = schedule_unitary(PulseSchedule(n, (CZBar(), HBar())))
    assert phase_aligned_distance(u, v) > 0.1


def test_chi_end_minus_bulk():
    # reference value: chi = -3pi/4 on the ends and -pi/2 in the bulk, so the end sites
    # carry an extra -pi/4 relative to the bulk
    chi = bangbang_x_phases(6)
    assert chi[0] - chi[2] == pytest.approx(-PI / 4)
    assert chi[-1] - chi[2] == pytest.approx(-PI / 4)
    assert len(set(chi[1:-1])) == 1


def test_transport_composite_count():
    # reference value: CZBar.(HBar.CZBar)^(N-1) is 2N-1 global composites
    c = transport_composites(5)
    assert len(c) == 9 and c.count("CZBar") == 5 and c.count("HBar") == 4


@pytest.mark.parametrize("n", range(2, 9))
def test_transport_delivers_q1(n, rng):
    plus, zero = np.array([1, 1]) / math.sqrt(2), np.array([1, 0])
    q = haar_qubit(rng)
    rest = [plus if a % 2 == 0 else zero for a in range(2, n + 1)]
    sched = compile_transport(n)
    assert validate_schedule(sched) == []
    out = materialize(run_schedule(product_state([q] + rest), sched), sched.ledger)
    assert np.real(q.conj() @ out.reduced_density(n) @ q) >= 1 - 1e-9


def test_transport_with_random_junk_is_not_perfect():
    # the alternating |+,0,...> input matters for the plain transport circuit
    rng = np.random.default_rng(0)
    n = 5
    worst = 1.0
    for _ in range(10):
        vecs = [haar_qubit(rng) for _ in range(n)]
        sched = compile_transport(n)
        out = materialize(run_schedule(product_state(vecs), sched), sched.ledger)
        q = vecs[0]
        worst = min(worst, float(np.real(q.conj() @ out.reduced_density(n) @ q)))
    assert worst < 0.99


def test_mirror_step_count():
    # reference value: S = (HBar.CZBar)^(N+1); N = 7 gives 8 steps
    s = compile_mirror(7)
    assert len(s) == 16 and s.layers[:2] == (CZBar(), HBar())


@pytest.mark.parametrize("n", range(2, 9))
def test_mirror_reverses_random_product_state(n, rng):
    vecs = [haar_qubit(rng) for _ in range(n)]
    out = run_schedule(product_state(vecs), compile_mirror(n, lowered=True))
    assert fidelity(out, product_state(vecs[::-1])) >= 1 - 1e-9


@pytest.mark.parametrize("n", [2, 5, 8])
def test_mirror_twice_is_identity(n, rng):
    s = init_state(ChainConfig(n, (1,)), junk_mode="random", seed=int(rng.integers(1 << 30)))
    m = compile_mirror(n)
    assert fidelity(run_schedule(run_schedule(s, m), m), s) >= 1 - 1e-9


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_plus_prep(n):
    # reference value: |+,0,+,0,...> becomes |+,+,...,+>
    vecs = [np.array([1, 1]) / math.sqrt(2) if a % 2 else np.array([1, 0])
            for a in range(1, n + 1)]
    out = run_schedule(product_state(vecs), compile_plus_prep(n))
    target = product_state([np.array([1, 1]) / math.sqrt(2)] * n)
    assert fidelity(out, target) >= 1 - 1e-9


def test_plus_prep_is_not_idempotent():
    # negative control: running it on its own output does not give |+...+>
    n = 3
    plus = product_state([np.array([1, 1]) / math.sqrt(2)] * n)
    once = run_schedule(plus, compile_plus_prep(n))
    assert fidelity(once, plus) < 1 - 1e-6


@pytest.mark.parametrize("n", [3, 4, 6])
@pytest.mark.parametrize("mode", ["ideal", "pulsed"])
def test_czd_prime_undoes_czd(n, mode):
    u = schedule_unitary(compile_czd(n, mode=mode))
    v = schedule_unitary(compile_czd(n, prime=True, mode=mode))
    assert phase_aligned_distance(v @ u, np.eye(2 ** n)) < 1e-9
    # negative control: czd is not its own inverse
    assert phase_aligned_distance(u @ u, np.eye(2 ** n)) > 0.1


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_czd_unwanted_rotation(n):
    # reference value: the leftover is R_z^(N-1)(-pi/4); the decoupled end is untouched
    site, angle = czd_unwanted_rotation(n)
    assert (site, angle) == (n - 1, pytest.approx(-PI / 4))
    u = schedule_unitary(compile_czd(n))
    short = np.kron(np.diag(_czbar_diag(n - 1)), np.eye(2))
    fix = np.kron(np.kron(np.eye(2 ** (site - 1)), rz(angle)), np.eye(2 ** (n - site)))
    assert phase_aligned_distance(u, fix @ short) < 1e-9


def test_inverse_layers():
    n = 4
    layers = compile_step_bangbang(n).layers + compile_czd(n).layers
    u = schedule_unitary(PulseSchedule(n, layers))
    v = schedule_unitary(PulseSchedule(n, tuple(inverse_layers(layers, n))))
    assert phase_aligned_distance(v @ u, np.eye(2 ** n)) < 1e-9
