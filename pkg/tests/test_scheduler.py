import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qwire.compiler import compile_mirror
from qwire.core import ChainConfig, PulseSchedule, validate_schedule
from qwire.oracle import equivalence_check
from qwire.scheduler import (CPhase, GateProgram, LocalU, MultiCPhase, QFT, SchedulingError,
                             Sweep, compile_program, compile_qft, qft_cphase_counts,
                             qft_structure, schedule_cphase, schedule_local_rotations,
                             schedule_multi_target, site_unitary_layers, u_matrix, zyz_angles)
from qwire.statevector import phase_aligned_distance, schedule_unitary

PI = math.pi
TOL = 1e-9


def check(prog, compiled, cfg, trials=6, seed=0):
    rep = equivalence_check(prog, compiled, cfg, trials=trials, seed=seed)
    assert rep.min_fidelity >= 1 - TOL, rep.to_dict()
    return rep


@pytest.fixture(scope="module")
def qft_compiled():
    return {n: compile_qft(n) for n in (2, 3, 4)}


# --- single-qubit helpers ----------------------------------------------------

@given(st.floats(-PI, PI), st.floats(-PI, PI), st.floats(-PI, PI))
def test_zyz_round_trip(a, b, g):
    u = u_matrix(a, b, g)
    assert phase_aligned_distance(u_matrix(*zyz_angles(u)), u) < 1e-9


@given(st.floats(-PI, PI), st.floats(-PI, PI), st.floats(-PI, PI))
def test_site_unitary_layers(a, b, g):
    u = u_matrix(a, b, g)
    sched = PulseSchedule(3, tuple(site_unitary_layers(1, u)))
    assert validate_schedule(sched) == []
    want = np.kron(u, np.eye(4))
    assert phase_aligned_distance(schedule_unitary(sched), want) < 1e-9


# --- single-qubit gates ------------------------------------------------------

@pytest.mark.parametrize("q", [2, 3])
@pytest.mark.parametrize("correction", ["ledger", "physical"])
def test_local_rotations_match_oracle(q, correction, rng):
    cfg = ChainConfig.padded(q)
    angles = {a: tuple(rng.uniform(-PI, PI, 3)) for a in range(q)}
    compiled = schedule_local_rotations(angles, cfg, correction=correction)
    prog = GateProgram(q, tuple(LocalU(a, *angles[a]) for a in range(q)))
    check(prog, compiled, cfg)
    m = compiled.manifest
    assert m["cycle_count"] == 3 and m["ticks"] == 3 * (cfg.n_sites + 1)
    # three mirrors leave the register reversed
    assert m["final_layout"] == list(reversed(cfg.layout))
    if correction == "physical":
        assert compiled.schedule.ledger.is_empty()


def test_local_rotations_restore_order(rng):
    cfg = ChainConfig.padded(2)
    angles = {0: (0.1, 0.2, 0.3), 1: (-0.4, 1.0, 0.0)}
    compiled = schedule_local_rotations(angles, cfg, restore=True)
    assert compiled.manifest["final_layout"] == list(cfg.layout)
    check(GateProgram(2, (LocalU(0, *angles[0]), LocalU(1, *angles[1]))), compiled, cfg)


def test_local_rotations_need_plus_padding():
    with pytest.raises(ValueError):
        schedule_local_rotations({0: (0, 0, 0)}, ChainConfig(3, (1, 3), padding="zero"))


def test_dense_interior_qubit_has_no_impact_point():
    # on a dense chain of 3 the middle qubit has no buffer to hide X letters in
    from qwire.pauli import NoImpactPoint
    with pytest.raises(NoImpactPoint):
        schedule_local_rotations({1: (0.1, 0.2, 0.3)}, ChainConfig.dense(3))
    # with both qubits on end spins the dense layout works
    cfg = ChainConfig.dense(2)
    compiled = schedule_local_rotations({0: (0.1, 0.2, 0.3), 1: (0.4, 0.5, 0.6)}, cfg)
    check(GateProgram(2, (LocalU(0, 0.1, 0.2, 0.3), LocalU(1, 0.4, 0.5, 0.6))), compiled, cfg)


def test_only_end_spins_are_addressed(rng):
    cfg = ChainConfig.padded(3)
    compiled = schedule_local_rotations({1: (0.3, 0.4, 0.5)}, cfg)
    assert validate_schedule(compiled.schedule) == []


# --- controlled phases -------------------------------------------------------

PAIRS3 = [(c, t) for c in range(3) for t in range(3) if c != t]


@pytest.mark.parametrize("c,t", PAIRS3)
@pytest.mark.parametrize("mode", ["ideal", "pulsed"])
def test_cphase_residual_net(c, t, mode):
    # reference value: net R_z^t((pi - theta)/4) CZ[theta]
    theta = 1.234
    cfg = ChainConfig.padded(3)
    compiled = schedule_cphase(c, t, theta, cfg, mode=mode, net="residual")
    assert validate_schedule(compiled.schedule) == []
    check(GateProgram(3, (CPhase(c, t, theta), LocalU(t, (PI - theta) / 4, 0, 0))),
          compiled, cfg)


@pytest.mark.parametrize("theta", [0.0, PI / 4, PI / 2, PI, -2.5])
def test_cphase_clean_net(theta):
    cfg = ChainConfig.padded(2)
    compiled = schedule_cphase(0, 1, theta, cfg, net="clean")
    check(GateProgram(2, (CPhase(0, 1, theta),)), compiled, cfg)


@pytest.mark.parametrize("c,t", [(0, 1), (0, 2), (2, 1)])
def test_cphase_physical_emission(c, t):
    cfg = ChainConfig.padded(3)
    compiled = schedule_cphase(c, t, 0.8, cfg, net="clean", emit="physical")
    assert compiled.schedule.ledger.is_empty()
    check(GateProgram(3, (CPhase(c, t, 0.8),)), compiled, cfg)


def test_physical_fallback_cycles_frozen():
    # frozen value: the middle target of a 3-qubit chain is never on a free end
    # spin during the sweep, so its rotation costs two extra mirror cycles
    cfg = ChainConfig.padded(3)
    assert schedule_cphase(0, 1, 0.8, cfg, emit="physical").manifest["correction_cycles"] == 2
    assert schedule_cphase(0, 2, 0.8, cfg, emit="physical").manifest["correction_cycles"] == 0


def test_decoupling_modes_agree():
    cfg = ChainConfig.padded(3)
    u = [schedule_unitary(schedule_cphase(1, 2, 0.6, cfg, mode=m).schedule, with_ledger=True)
         for m in ("ideal", "pulsed")]
    assert phase_aligned_distance(u[0], u[1]) < 1e-9


def test_cphase_argument_checks():
    cfg = ChainConfig.padded(2)
    with pytest.raises(ValueError):
        schedule_cphase(0, 0, 1.0, cfg)
    with pytest.raises(ValueError):
        schedule_cphase(0, 1, 1.0, cfg, net="other")
    with pytest.raises(ValueError):
        schedule_cphase(0, 1, 1.0, ChainConfig.dense(2))


def test_cphase_tick_accounting_frozen():
    # frozen value: ticks for each ordered pair on the padded 3-qubit chain
    cfg = ChainConfig.padded(3)
    ticks = {(c, t): schedule_cphase(c, t, 0.5, cfg).manifest["ticks"] for c, t in PAIRS3}
    assert ticks == {(0, 1): 4, (0, 2): 8, (1, 0): 8, (1, 2): 8, (2, 0): 8, (2, 1): 4}


# --- multi-target ------------------------------------------------------------

def test_multi_target_single_target_reduces_to_cphase():
    cfg = ChainConfig.padded(2)
    a = schedule_multi_target(0, [(1, 0.7)], cfg)
    b = schedule_cphase(0, 1, 0.7, cfg, net="clean")
    ua = schedule_unitary(a.schedule, with_ledger=True)
    ub = schedule_unitary(b.schedule, with_ledger=True)
    assert phase_aligned_distance(ua, ub) < 1e-9


@pytest.mark.parametrize("c", [0, 1, 2])
def test_multi_target_matches_oracle(c, rng):
    cfg = ChainConfig.padded(3)
    targets = tuple((t, float(rng.uniform(-PI, PI))) for t in range(3) if t != c)
    compiled = schedule_multi_target(c, targets, cfg)
    check(GateProgram(3, (MultiCPhase(c, targets),)), compiled, cfg)


def test_multi_target_ticks_frozen():
    # frozen value: forward sweep plus exact reverse, in layer ticks; the budget of
    # one mirror cycle is N + 1 = 6 ticks
    cfg = ChainConfig.padded(3)
    ticks = [schedule_multi_target(c, [(t, 0.3) for t in range(3) if t != c], cfg)
             .manifest["ticks"] for c in range(3)]
    assert ticks == [10, 22, 10]


# --- QFT ---------------------------------------------------------------------

def test_qft_structure_angles():
    assert qft_structure(3) == [(0, [(1, PI / 2), (2, PI / 4)]), (1, [(2, PI / 2)]), (2, [])]


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_cphase_counts(n):
    # reference value: (N-2)(N-1)/2 controlled phases; the structure has N(N-1)/2
    c = qft_cphase_counts(n)
    assert c["closed_form"] == (n - 2) * (n - 1) // 2
    assert c["structural"] == n * (n - 1) // 2 == sum(len(t) for _, t in qft_structure(n))


@pytest.mark.parametrize("n", [2, 3, 4])
def test_qft_matches_oracle(n, qft_compiled):
    compiled = qft_compiled[n]
    assert compiled.manifest["qubit_order_reversed"] is True
    rep = check(GateProgram(n, (QFT(),)), compiled, ChainConfig.padded(n), trials=8)
    assert rep.operator_distance < 1e-6


def test_qft_cycle_counts_frozen(qft_compiled):
    # frozen value: measured cycle counts under layer accounting
    assert {n: c.manifest["cycle_count"] for n, c in qft_compiled.items()} == {2: 1, 3: 4, 4: 10}
    assert qft_compiled[2].manifest["cycle_count"] == 2 - 1


def test_qft_rejects_bad_sizes():
    with pytest.raises(ValueError):
        compile_qft(1)
    with pytest.raises(ValueError):
        compile_qft(3, ChainConfig.padded(2))


def test_qft_dense_three_is_structurally_impossible():
    with pytest.raises(SchedulingError):
        compile_qft(3, ChainConfig.dense(3))


# --- sweeps ------------------------------------------------------------------

@pytest.mark.parametrize("q", [2, 3])
def test_sweep_reversal_is_identity(q):
    # the reverse half undoes every Clifford layer of the forward half
    cfg = ChainConfig.padded(q)
    sw = Sweep(cfg, "ideal")
    for _ in range(cfg.n_sites):
        sw.half_step()
    layers = sw.finish()
    assert layers
    u = schedule_unitary(PulseSchedule(cfg.n_sites, tuple(layers)))
    assert phase_aligned_distance(u, np.eye(2 ** cfg.n_sites)) < 1e-9


# --- programs ----------------------------------------------------------------

@st.composite
def programs(draw, max_ops=3):
    q = draw(st.integers(2, 3))
    angle = st.floats(-PI, PI, allow_nan=False)
    ops = []
    for _ in range(draw(st.integers(0, max_ops))):
        kind = draw(st.sampled_from(["localu", "cphase", "multi"]))
        if kind == "localu":
            ops.append(LocalU(draw(st.integers(0, q - 1)), draw(angle), draw(angle), draw(angle)))
        else:
            c = draw(st.integers(0, q - 1))
            others = [t for t in range(q) if t != c]
            if kind == "cphase":
                ops.append(CPhase(c, draw(st.sampled_from(others)), draw(angle)))
            else:
                ops.append(MultiCPhase(c, tuple((t, draw(angle)) for t in others)))
    return GateProgram(q, tuple(ops))


@given(programs(max_ops=6))
def test_program_text_round_trip(prog):
    assert GateProgram.from_text(prog.to_text()) == prog


def test_program_text_with_qft_and_comments():
    text = "# demo\nprogram 3\nlocalu 0 0.1 0.2 0.3\ncphase 0 2 1.5  # phase\nqft\n"
    prog = GateProgram.from_text(text)
    assert isinstance(prog.ops[-1], QFT) and prog.ops[1] == CPhase(0, 2, 1.5)


@pytest.mark.parametrize("text", ["", "localu 0 1 2 3", "program 2\nfoo 1",
                                  "program 2\ncphase 0 0 1.0", "program 2\nlocalu 5 0 0 0"])
def test_program_text_rejects_bad_input(text):
    with pytest.raises(ValueError):
        GateProgram.from_text(text)


@settings(max_examples=12)
@given(programs())
def test_random_programs_match_oracle(prog):
    cfg = ChainConfig.padded(prog.n_logical)
    compiled = compile_program(prog, cfg)
    assert validate_schedule(compiled.schedule) == []
    check(prog, compiled, cfg, trials=4)


def test_program_with_qft_matches_oracle():
    prog = GateProgram(2, (LocalU(0, 0.3, 0.8, -0.2), CPhase(1, 0, 0.9), QFT(),
                           LocalU(1, 0.1, 0.0, 0.4)))
    cfg = ChainConfig.padded(2)
    check(prog, compile_program(prog, cfg), cfg)


def test_dense_demo_long_range_cphase():
    # seven data qubits on seven sites, control on one end and target on the other
    cfg = ChainConfig.dense(7)
    compiled = schedule_cphase(0, 6, PI, cfg, net="clean")
    check(GateProgram(7, (CPhase(0, 6, PI),)), compiled, cfg, trials=4)
    assert compiled.manifest["ticks"] == 16


@pytest.mark.parametrize("theta", [3.5e-150, -3.5e-150, -PI, 2 * PI, -2 * PI, 4 * PI + 1e-15])
@pytest.mark.parametrize("c,t", [(0, 1), (1, 0)])
def test_cphase_near_multiples_of_pi(theta, c, t):
    # the reduced window angle can round onto the period boundary
    prog = GateProgram(2, (CPhase(c, t, theta),))
    cfg = ChainConfig.padded(2)
    check(prog, compile_program(prog, cfg), cfg)
