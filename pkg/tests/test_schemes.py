"""Tests for scheme presets and their closed-form evaluators."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from schedchain import (
    ConstraintError,
    DimensionError,
    Distribution,
    ParameterError,
    SchemeId,
    SchemePreset,
    SchemeParams,
    build_matrix,
    closed_form,
    closed_form_trajectory,
    make_preset,
    propagate,
)

PB5 = (0.27, 0.15, 0.17, 0.18, 0.23)


# ---------------------------------------------------------------------------
# preset construction


def test_fifo_preset_pins_everything():
    preset = make_preset(SchemeId.I_A, {}, pb=PB5)
    assert (preset.params.p, preset.params.s, preset.params.q, preset.params.r) == (
        0.0, 1.0, 0.0, 0.0,
    )
    assert preset.params.m == 5


def test_mixture_preset_completes_stay_probability():
    preset = make_preset(SchemeId.III_A, {"p": 0.5}, pb=PB5)
    assert preset.params.p == 0.5
    assert preset.params.s == 0.5
    assert preset.params.q == preset.params.r == 0.0


def test_round_robin_rejects_pinned_parameter():
    with pytest.raises(ConstraintError):
        make_preset(SchemeId.II_A, {"s": 0.3}, pb=PB5)
    # consistent values are still over-determined
    with pytest.raises(ConstraintError):
        make_preset(SchemeId.II_A, {"s": 0.0}, pb=PB5)


def test_fifo_hazard_accepts_either_free_name():
    by_r = make_preset(SchemeId.I_B, {"r": 0.166}, pb=PB5)
    by_s = make_preset(SchemeId.I_B, {"s": 0.834}, pb=PB5)
    assert by_r.params.s == pytest.approx(0.834, abs=1e-15)
    assert by_s.params.r == pytest.approx(0.166, abs=1e-15)


@pytest.mark.parametrize(
    "scheme, free",
    [
        (SchemeId.I_B, {}),                      # under-determined
        (SchemeId.I_B, {"r": 0.1, "s": 0.9}),    # over-determined
        (SchemeId.III_B, {"p": 0.4}),            # needs two of p, s, r
        (SchemeId.I_B, {"q": 0.1}),              # q is never free
        (SchemeId.I_B, {"r": 1.2}),              # not a probability
        (SchemeId.III_B, {"p": 0.7, "r": 0.7}),  # implied s < 0
        (SchemeId.I_B, {"x": 0.1}),              # unknown name
    ],
)
def test_bad_free_parameters_rejected(scheme, free):
    with pytest.raises(ConstraintError):
        make_preset(scheme, free, pb=PB5)


def test_mixture_with_hazard_completes_third_parameter():
    preset = make_preset(SchemeId.III_B, {"p": 0.417, "r": 0.166}, pb=PB5)
    assert preset.params.s == pytest.approx(0.417, abs=1e-12)
    assert preset.params.q == 0.0


def test_pinned_start_preset_defaults_to_first_slot():
    preset = make_preset(SchemeId.IV, m=5)
    assert np.array_equal(preset.pb, [1, 0, 0, 0, 0])
    explicit = make_preset(SchemeId.IV, pb=(1.0, 0.0, 0.0, 0.0, 0.0))
    assert np.array_equal(explicit.pb, preset.pb)
    with pytest.raises(ConstraintError):
        make_preset(SchemeId.IV, pb=PB5)
    with pytest.raises(ParameterError):
        make_preset(SchemeId.IV)


@pytest.mark.parametrize(
    "pb, exc",
    [
        ((0.5, 0.4), ParameterError),            # mass 0.9
        ((0.5, -0.1, 0.6), ParameterError),      # negative entry
        ((1.0,), DimensionError),                # m == 1
    ],
)
def test_bad_pb_rejected(pb, exc):
    with pytest.raises(exc):
        make_preset(SchemeId.I_A, {}, pb=pb)


def test_pb_length_must_match_m():
    with pytest.raises(DimensionError):
        make_preset(SchemeId.I_A, {}, pb=PB5, m=4)


def test_preset_rejects_initial_deadlock_mass():
    params = SchemeParams(0.0, 1.0, 0.0, 0.0, 4)
    tainted = Distribution(np.array([0.5, 0.2, 0.2, 0.0, 0.1]))
    with pytest.raises(ConstraintError):
        SchemePreset(SchemeId.I_A, params, tainted)


# ---------------------------------------------------------------------------
# closed forms against frozen values


def test_closed_form_rotation_one_quantum():
    preset = make_preset(SchemeId.II_A, {}, pb=PB5)
    out = closed_form(preset, 1)
    assert np.allclose(out.processes, (0.23, 0.27, 0.15, 0.17, 0.18), atol=1e-15)
    assert out.deadlock == 0.0
    assert out.quantum == 1


def test_closed_form_pinned_start_cycles():
    preset = make_preset(SchemeId.IV, m=5)
    out = closed_form(preset, 2)
    assert np.array_equal(out.processes, [0, 0, 1, 0, 0])


def test_closed_form_rotation_with_hazard():
    preset = make_preset(SchemeId.II_B, {"p": 0.834}, pb=PB5)
    out = closed_form(preset, 1)
    assert out.probs[1] == pytest.approx(0.22518, abs=1e-12)
    assert out.deadlock == pytest.approx(0.166, abs=1e-15)


def test_closed_form_fifo_is_constant():
    preset = make_preset(SchemeId.I_A, {}, pb=PB5)
    for n in (0, 1, 7, 40):
        assert np.array_equal(closed_form(preset, n).probs, preset.init.probs)


def test_closed_form_periodicity_is_exact():
    rotating = make_preset(SchemeId.II_A, {}, pb=PB5)
    pinned = make_preset(SchemeId.IV, m=5)
    for preset in (rotating, pinned):
        m = preset.params.m
        for n in (0, 1, 3, 11):
            a = closed_form(preset, n).probs
            b = closed_form(preset, n + m).probs
            assert np.array_equal(a, b)


def test_closed_form_trajectory_matches_pointwise():
    preset = make_preset(SchemeId.III_B, {"p": 0.417, "r": 0.166}, pb=PB5)
    traj = closed_form_trajectory(preset, 8)
    assert len(traj) == 9
    for n in range(9):
        assert np.array_equal(traj[n].probs, closed_form(preset, n).probs)


def test_closed_form_rejects_negative_quantum():
    preset = make_preset(SchemeId.I_A, {}, pb=PB5)
    with pytest.raises(ParameterError):
        closed_form(preset, -1)


# ---------------------------------------------------------------------------
# mixture stabilization


def test_even_mixture_flattens_toward_uniform():
    preset = make_preset(SchemeId.III_A, {"p": 0.5}, pb=PB5)
    deviations = []
    for n in range(120):
        proc = closed_form(preset, n).processes
        deviations.append(float(np.max(np.abs(proc - 0.2))))
    # non-increasing once every slot has been reachable at least once
    m = preset.params.m
    for a, b in zip(deviations[m:], deviations[m + 1:]):
        assert b <= a + 1e-12
    assert deviations[-1] < 0.01


# ---------------------------------------------------------------------------
# dual-route equivalence (spot check; the acceptance suite runs the full grid)


@st.composite
def preset_case(draw):
    scheme = draw(st.sampled_from(list(SchemeId)))
    m = draw(st.integers(2, 8))
    if scheme is SchemeId.IV:
        pb = None
    else:
        raw = draw(st.lists(st.floats(0.01, 1.0), min_size=m, max_size=m))
        pb = tuple(np.array(raw) / sum(raw))
    unit = st.floats(0.0, 1.0)
    if scheme in (SchemeId.I_B, SchemeId.III_A):
        free = {"s": draw(unit)}
    elif scheme is SchemeId.II_B:
        free = {"p": draw(unit)}
    elif scheme is SchemeId.III_B:
        a, b = draw(unit), draw(unit)
        total = max(a + b, 1.0)
        free = {"p": a / total, "r": b / total}
    else:
        free = {}
    return make_preset(scheme, free, pb=pb, m=m)


@settings(max_examples=60, deadline=None)
@given(preset=preset_case(), n=st.integers(0, 60))
def test_closed_form_agrees_with_matrix_engine(preset, n):
    traj = propagate(preset.init, build_matrix(preset.params), n)
    analytic = closed_form(preset, n)
    assert np.max(np.abs(analytic.probs - traj[n].probs)) <= 1e-10
