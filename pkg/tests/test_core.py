import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qwire.core import (ChainConfig, CZBar, EdgeRz, FrameLedger, GlobalRy, GlobalRz, HBar,
                        HyBar, IsingEvolve, LocalRx, LocalRz, PauliString, PulseSchedule,
                        ScheduleError, ScheduleParseError, parse_schedule, serialize_schedule,
                        validate_schedule)

letters = st.text(alphabet="IXYZ", min_size=1, max_size=8)


@st.composite
def pauli_pairs(draw):
    n = draw(st.integers(1, 6))
    a = draw(st.text(alphabet="IXYZ", min_size=n, max_size=n))
    b = draw(st.text(alphabet="IXYZ", min_size=n, max_size=n))
    return (PauliString.from_letters(a, draw(st.integers(0, 3))),
            PauliString.from_letters(b, draw(st.integers(0, 3))))


@given(letters, st.integers(0, 3))
def test_pauli_text_round_trip(s, phase):
    p = PauliString.from_letters(s, phase)
    assert PauliString.parse(str(p)) == p


@given(pauli_pairs())
def test_pauli_product_matches_matrices(pair):
    a, b = pair
    assert np.allclose((a * b).to_matrix(), a.to_matrix() @ b.to_matrix())


@given(pauli_pairs())
def test_commutation_matches_matrices(pair):
    a, b = pair
    ma, mb = a.to_matrix(), b.to_matrix()
    assert a.commutes(b) == np.allclose(ma @ mb, mb @ ma)


def test_y_is_i_x_z():
    y = PauliString.parse("Y")
    assert np.allclose(y.to_matrix(), [[0, -1j], [1j, 0]])
    assert str(PauliString.parse("-iXYZ")) == "-iXYZ"


def test_pauli_is_immutable():
    p = PauliString.parse("XZ")
    with pytest.raises(ValueError):
        p.x[0] = 0


def test_chain_config_layouts():
    cfg = ChainConfig.padded(3)
    assert cfg.n_sites == 5 and cfg.layout == (1, 3, 5) and cfg.padding_sites == [2, 4]
    assert cfg.is_buffered()
    assert not ChainConfig.dense(3).is_buffered()
    with pytest.raises(ValueError):
        ChainConfig(3, (1, 1))
    with pytest.raises(ValueError):
        ChainConfig(3, (4,))


layer_st = st.one_of(
    st.just(CZBar()),
    st.builds(HBar, st.sets(st.sampled_from([1, 6]), max_size=1)),
    st.builds(HyBar),
    st.builds(IsingEvolve, st.floats(-7, 7, allow_nan=False), st.sets(st.sampled_from([1, 6]),
                                                                     max_size=1)),
    st.builds(LocalRz, st.sampled_from([1, 6]), st.floats(-7, 7, allow_nan=False)),
    st.builds(LocalRx, st.sampled_from([1, 6]), st.floats(-7, 7, allow_nan=False)),
    st.builds(GlobalRz, st.floats(-7, 7, allow_nan=False)),
    st.builds(GlobalRy, st.floats(-7, 7, allow_nan=False)),
    st.builds(EdgeRz, st.sampled_from(["left", "right"]), st.floats(-7, 7, allow_nan=False)),
)


@given(st.lists(layer_st, max_size=12),
       st.lists(st.tuples(st.integers(1, 6), st.floats(-7, 7, allow_nan=False)), max_size=3),
       st.one_of(st.none(), st.text(alphabet="IXYZ", min_size=6, max_size=6)))
def test_schedule_round_trip(layers, pending, frame):
    ledger = FrameLedger(None if frame is None else PauliString.from_letters(frame),
                         tuple(pending))
    s = PulseSchedule(6, tuple(layers), ledger)
    assert validate_schedule(s) == []
    b = serialize_schedule(s)
    back = parse_schedule(b)
    assert back == s
    assert serialize_schedule(back) == b


def test_serialization_header_frozen():
    # frozen value: canonical text of the N=2 mirror
    from qwire.compiler import compile_mirror
    text = serialize_schedule(compile_mirror(2)).decode()
    assert text.splitlines()[:3] == ["qwire-schedule 1", "sites 2", "layers 6"]
    assert text.rstrip().endswith("end")


@pytest.mark.parametrize("blob", [b"", b"not a schedule", b"qwire-schedule 1\nsites x\n",
                                  b"qwire-schedule 1\nsites 2\nlayers 1\nlayer 0 kind=Bogus\nend\n"])
def test_parse_rejects_garbage(blob):
    with pytest.raises(ScheduleParseError):
        parse_schedule(blob)


def test_validation_flags_out_of_range_site():
    s = PulseSchedule(3, (LocalRz(5, 0.1),))
    assert validate_schedule(s)


def test_validation_rejects_selective_pulse_in_the_bulk():
    # only the end spins are individually addressable
    assert validate_schedule(PulseSchedule(5, (LocalRz(3, 0.1),)))
    assert validate_schedule(PulseSchedule(5, (LocalRz(5, 0.1),))) == []


def test_concatenation_rules():
    a = PulseSchedule(2, (CZBar(),))
    b = PulseSchedule(2, (HBar(),), FrameLedger(PauliString.parse("XI")))
    assert len(a + b) == 2
    with pytest.raises(ScheduleError):
        b + a
    with pytest.raises(ScheduleError):
        a + PulseSchedule(3)
