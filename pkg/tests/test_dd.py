from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from staggered_dd.circuit import Circuit, find_idle_windows, schedule_alap
from staggered_dd.dd import (
    SEQUENCES,
    DDMode,
    DDPlan,
    StaggerRole,
    WindowTooShortError,
    get_sequence,
    insert_dd,
    pulse_centers,
    pulse_times,
    sequence_unitary,
    verify_identity,
    zz_algebra_deviations,
)
from staggered_dd.gates import XP, YP, equal_up_to_phase
from staggered_dd.sim import simulate, trace_distance

SYM, STAG = StaggerRole.SYMMETRIC, StaggerRole.STAGGERED


def test_sequence_definitions():
    names = {k: [g.name for g in v.gates] for k, v in SEQUENCES.items()}
    assert names["x2"] == ["xp", "xp"]
    assert names["x2pm"] == ["xp", "xm"]
    assert names["xy4"] == ["xp", "yp", "xp", "yp"]
    assert names["xy4pm"] == ["xp", "yp", "xm", "ym"]
    assert names["xy8"] == ["xp", "yp", "xp", "yp", "yp", "xp", "yp", "xp"]
    assert len(names["xy8pm"]) == 8
    with pytest.raises(ValueError, match="unknown DD sequence"):
        get_sequence("udd")


@pytest.mark.parametrize("name", sorted(SEQUENCES))
def test_every_sequence_is_identity(name):
    assert verify_identity(SEQUENCES[name])


def test_non_identity_sequence_rejected():
    assert not verify_identity([XP, YP])


def test_xy8pm_against_explicit_product():
    rx = lambda t: np.array([[np.cos(t / 2), -1j * np.sin(t / 2)], [-1j * np.sin(t / 2), np.cos(t / 2)]])
    ry = lambda t: np.array([[np.cos(t / 2), -np.sin(t / 2)], [np.sin(t / 2), np.cos(t / 2)]])
    pi = np.pi
    u = np.eye(2)
    for m in (rx(pi), ry(pi), rx(-pi), ry(-pi), ry(pi), rx(pi), ry(-pi), rx(-pi)):
        u = m @ u
    assert equal_up_to_phase(u, sequence_unitary(SEQUENCES["xy8pm"]))
    assert equal_up_to_phase(u, np.eye(2))


def test_overrotation_breaks_x2_but_not_x2pm():
    eps = 0.05
    assert not equal_up_to_phase(sequence_unitary(SEQUENCES["x2"], eps), np.eye(2), atol=1e-3)
    assert equal_up_to_phase(sequence_unitary(SEQUENCES["x2pm"], eps), np.eye(2))


def test_pulse_centers_examples():
    assert pulse_centers(1280, 2, SYM) == [320, 960]
    assert pulse_centers(1280, 2, STAG) == [640, 1280]
    assert pulse_times(1280, 2, SYM, 0) == [320, 960]
    assert pulse_times(1280, 2, STAG, 0) == [640, 1280]


def test_pulse_times_clamped_into_window():
    # last staggered pulse would straddle the window end; it is clamped to abut it
    assert pulse_times(1280, 2, STAG, 160) == [560, 1120]
    assert pulse_times(1280, 2, SYM, 160) == [240, 880]


def test_window_too_short():
    with pytest.raises(WindowTooShortError):
        pulse_times(100, 8, SYM, 20)
    with pytest.raises(WindowTooShortError):
        pulse_times(100, 8, STAG, 20)


@given(
    T=st.integers(1, 20000),
    N=st.sampled_from([2, 4, 8]),
    g=st.integers(0, 400),
    role=st.sampled_from([SYM, STAG]),
)
def test_pulse_times_properties(T, N, g, role):
    if N * g > T:
        with pytest.raises(WindowTooShortError):
            pulse_times(T, N, role, g)
        return
    starts = pulse_times(T, N, role, g)
    assert len(starts) == N
    assert starts[0] >= 0 and starts[-1] + g <= T
    assert all(b - a >= g for a, b in zip(starts, starts[1:]))
    assert all(b > a for a, b in zip(starts, starts[1:])) or g == 0
    if 2 * N * g <= T:
        # roomy windows: only the floor (and the end clamp for staggered) moves pulses
        for s, c in zip(starts, pulse_centers(T, N, role)):
            ideal = c - Fraction(g, 2)
            assert ideal - 1 < s <= ideal or s == T - g


def test_plan_roles():
    std = DDPlan.standard("x2pm", [11, 14])
    assert set(std.role_assignment.values()) == {SYM}
    stag = DDPlan.staggered("x2pm", [(14, 11), (12, 13)])
    assert stag.role_assignment == {11: SYM, 14: STAG, 12: SYM, 13: STAG}
    inv = DDPlan.build("x2pm", "staggered-inv", [(11, 14)])
    assert inv.mode is DDMode.STAGGERED_INV
    assert inv.role_assignment == {11: STAG, 14: SYM}
    assert stag.inverted().inverted() == stag
    assert stag.label == "X2pm-stag"
    with pytest.raises(ValueError, match="both roles"):
        DDPlan.staggered("x2", [(11, 14), (14, 15)])


def _fig3_circuit():
    c = Circuit((11, 14)).h(11).h(14).barrier().delay(1280).barrier().h(11).h(14)
    return c


def test_insert_standard_x2pm_centres(zero_width):
    s = schedule_alap(_fig3_circuit(), zero_width)
    out, report = insert_dd(s, DDPlan.standard("x2pm", [11, 14]), zero_width)
    assert report.n_inserted == 2 and report.n_skipped == 0
    w = find_idle_windows(s)[0]
    for q in (11, 14):
        pulses = [i.start - w.start for i in out.on_qubit(q) if i.name in ("xp", "xm")]
        assert pulses == [320, 960]
    assert out.total_duration == s.total_duration


def test_insert_staggered_x2pm_centres(zero_width):
    s = schedule_alap(_fig3_circuit(), zero_width)
    out, _ = insert_dd(s, DDPlan.staggered("x2pm", [(11, 14)]), zero_width)
    w = find_idle_windows(s)[0]
    pulses = {q: [i.start - w.start for i in out.on_qubit(q) if i.name in ("xp", "xm")] for q in (11, 14)}
    assert pulses == {11: [320, 960], 14: [640, 1280]}
    # the abutting pulse must still precede the closing barrier
    names = [i.name for i in out.on_qubit(14)]
    assert names.index("xm") < len(names) - names[::-1].index("barrier") - 1


def test_insert_no_windows(device):
    c = Circuit((11,)).xp(11).xp(11)
    s = schedule_alap(c, device)
    out, report = insert_dd(s, DDPlan.standard("xy4", [11]), device)
    assert out == s and report.n_inserted == 0


def test_short_windows_skipped(device):
    c = Circuit((11,)).xp(11).delay(300).xp(11).delay(2000).xp(11)
    s = schedule_alap(c, device)
    out, report = insert_dd(s, DDPlan.standard("xy4", [11]), device)
    assert report.n_skipped == 1 and report.n_inserted == 1
    assert out.total_duration == s.total_duration
    assert report.max_placement_error < 1


@pytest.mark.parametrize("name", sorted(SEQUENCES))
@pytest.mark.parametrize("mode", ["standard", "staggered", "staggered-inv"])
def test_insertion_preserves_noiseless_semantics(device, name, mode):
    c = Circuit((11, 14)).h(11).sx(14).cx(11, 14).barrier().delay(3000).barrier().h(14).cx(11, 14)
    s = schedule_alap(c, device)
    out, report = insert_dd(s, DDPlan.build(name, mode, [(11, 14)]), device)
    assert report.n_inserted == 2
    assert trace_distance(simulate(out, device), simulate(s, device)) < 1e-12


def test_min_window(device):
    c = Circuit((11,)).xp(11).delay(1000).xp(11)
    s = schedule_alap(c, device)
    _, report = insert_dd(s, DDPlan.standard("x2", [11]), device, min_window=1001)
    assert report.n_inserted == 0 and report.n_skipped == 1


def test_zz_algebra():
    worst = zz_algebra_deviations(n_draws=200, seed=1)
    assert set(worst) == {"commute", "invert", "accumulate", "stagger", "stagger_cancel", "stagger_inverse_cancel"}
    assert max(worst.values()) < 1e-10
