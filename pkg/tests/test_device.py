import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from memsvm.device import (
    DeviceParams,
    LadderShape,
    MemtransistorCell,
    Polarity,
    PulseLog,
    apply_pulse,
    energy_of,
    load_ladder,
    load_params,
    params_with_ladder,
    state_ladder,
)
from memsvm.errors import ParameterError

P86 = DeviceParams()


def test_two_state_ladder_is_endpoints():
    assert state_ladder(DeviceParams(num_states=2)).tolist() == [0.0, 1.0]


def test_86_state_linear_spacing():
    ladder = state_ladder(P86)
    assert ladder.size == 86
    np.testing.assert_allclose(np.diff(ladder), 1 / 85, rtol=0, atol=1e-15)
    assert ladder[0] == 0.0 and ladder[-1] == 1.0


def test_exponential_ladder_matches_closed_form():
    params = DeviceParams(num_states=5, ladder_shape="exponential", ladder_beta=3.0)
    ladder = state_ladder(params)
    expected = [(math.exp(3.0 * k / 4) - 1) / (math.exp(3.0) - 1) for k in range(5)]
    np.testing.assert_allclose(ladder, expected, rtol=0, atol=1e-15)
    assert ladder[0] == 0.0 and ladder[-1] == 1.0
    assert all(a < b for a, b in zip(ladder, ladder[1:]))


@pytest.mark.parametrize(
    "kwargs",
    [
        {"num_states": 1},
        {"g_min": 1.0, "g_max": 1.0},
        {"g_min": 2.0, "g_max": 1.0},
        {"sigma_program": -0.1},
        {"sigma_read": -1e-3},
        {"ladder_shape": "exponential", "ladder_beta": 0.0},
    ],
)
def test_invalid_params_rejected(kwargs):
    with pytest.raises(ParameterError):
        DeviceParams(**kwargs)


def test_pulse_examples():
    cell, log = apply_pulse(MemtransistorCell(0), Polarity.NEGATIVE, P86, PulseLog())
    assert cell.state_index == 1
    assert cell.memductance(P86) > MemtransistorCell(0).memductance(P86)
    assert log == PulseLog(1, 0)

    top, log = apply_pulse(MemtransistorCell(85), "negative", P86, PulseLog())
    assert top.state_index == 85
    assert log == PulseLog(1, 0)  # saturated pulse still logged

    down, log = apply_pulse(MemtransistorCell(5), Polarity.POSITIVE, P86, PulseLog())
    assert down.state_index == 4
    assert log == PulseLog(0, 1)


def test_energy_examples():
    assert energy_of(PulseLog(0, 0), P86) == 0.0
    assert energy_of(PulseLog(1, 0), P86) == pytest.approx(0.7e-9, rel=1e-15)
    assert energy_of(PulseLog(3, 2), P86) == pytest.approx(2.101e-9, rel=1e-12)


def test_effective_memductance_clamped():
    cell = MemtransistorCell(85, programmed_offset=0.3)
    assert cell.memductance(P86) == 1.0
    assert MemtransistorCell(0, programmed_offset=-0.3).memductance(P86) == 0.0


def test_negative_pulse_log_rejected():
    with pytest.raises(ParameterError):
        PulseLog(-1, 0)


states = st.integers(min_value=0, max_value=85)


@given(states)
def test_monotone_pulse_response(k):
    ladder = state_ladder(P86)
    cell = MemtransistorCell(k)
    up, _ = apply_pulse(cell, Polarity.NEGATIVE, P86, PulseLog())
    down, _ = apply_pulse(cell, Polarity.POSITIVE, P86, PulseLog())
    g = cell.memductance(P86, ladder)
    if k < 85:
        assert up.memductance(P86, ladder) > g
    if k > 0:
        assert down.memductance(P86, ladder) < g


@given(states, st.integers(min_value=0, max_value=85))
def test_round_trip_without_saturation(start, k):
    k = min(k, 85 - start)
    cell, log = MemtransistorCell(start), PulseLog()
    for _ in range(k):
        cell, log = apply_pulse(cell, Polarity.NEGATIVE, P86, log)
    for _ in range(k):
        cell, log = apply_pulse(cell, Polarity.POSITIVE, P86, log)
    assert cell.state_index == start
    assert log == PulseLog(k, k)


@given(states, st.lists(st.sampled_from(list(Polarity)), max_size=200))
def test_state_never_leaves_ladder(start, pulses):
    cell, log = MemtransistorCell(start), PulseLog()
    for pol in pulses:
        cell, log = apply_pulse(cell, pol, P86, log)
        assert 0 <= cell.state_index <= 85
    assert log.total == len(pulses)


counts = st.integers(min_value=0, max_value=10**6)


@given(counts, counts, counts, counts)
def test_energy_additive(a, b, c, d):
    l1, l2 = PulseLog(a, b), PulseLog(c, d)
    assert energy_of(l1 + l2, P86) == pytest.approx(energy_of(l1, P86) + energy_of(l2, P86), rel=1e-12)


@settings(max_examples=25)
@given(st.integers(min_value=2, max_value=400), st.floats(min_value=0.1, max_value=8.0))
def test_exponential_ladder_strictly_increasing(n, beta):
    ladder = state_ladder(DeviceParams(num_states=n, ladder_shape="exponential", ladder_beta=beta))
    assert np.all(np.diff(ladder) > 0)
    assert ladder[0] == 0.0 and ladder[-1] == 1.0


def test_params_file_and_ladder_file(tmp_path):
    ladder = tmp_path / "ladder.txt"
    ladder.write_text("# measured levels\n0.1\n0.15\n0.4\n0.9\n")
    cfg = tmp_path / "device.cfg"
    cfg.write_text(
        "num_states = 12\nsigma_program = 0.02\nsigma_read: 0.01\ne_potentiation = 1e-9\n"
        "ladder_shape = exponential\n"
    )
    p = load_params(cfg)
    assert (p.num_states, p.sigma_program, p.sigma_read, p.e_potentiation) == (12, 0.02, 0.01, 1e-9)
    assert p.ladder_shape is LadderShape.EXPONENTIAL

    levels = load_ladder(ladder)
    custom = params_with_ladder(levels)
    assert custom.num_states == 4 and custom.g_min == 0.1 and custom.g_max == 0.9
    np.testing.assert_array_equal(state_ladder(custom), [0.1, 0.15, 0.4, 0.9])


def test_ladder_file_must_increase(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("0.0\n0.5\n0.5\n1.0\n")
    with pytest.raises(ParameterError):
        load_ladder(bad)
