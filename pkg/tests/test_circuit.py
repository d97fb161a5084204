import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from staggered_dd.circuit import (
    Circuit,
    IdleWindow,
    Instruction,
    ScheduledCircuit,
    ScheduleError,
    dumps,
    find_idle_windows,
    gate_duration,
    loads,
    schedule_alap,
    schedule_asap,
)
from staggered_dd.gates import CX, DELAY, XP, Gate, RZ, Unitary
from staggered_dd.sim import simulate, trace_distance


def _mirror_oracle(circ, device):
    """ALAP = ASAP of the reversed program, mirrored in time."""
    rev = Circuit(circ.qubits, list(reversed(circ.instructions)))
    asap = schedule_asap(rev, device)
    total = asap.total_duration
    return total, sorted((total - i.end, i.name, i.qubits) for i in asap.instructions)


def test_alap_single_qubit(device):
    c = Circuit((11,)).xp(11).delay(100).xp(11)
    s = schedule_alap(c, device)
    starts = [(i.name, i.start) for i in s.instructions]
    assert starts == [("xp", 0), ("delay", 160), ("xp", 260)]
    assert s.total_duration == 420


def test_alap_pushes_short_program_late(device):
    c = Circuit((11, 14)).xp(11).xp(11).xp(11).h(14)
    s = schedule_alap(c, device)
    h = next(i for i in s.instructions if i.name == "h")
    assert h.start == 320 and h.end == s.total_duration == 480


def test_empty_circuit(device):
    s = schedule_alap(Circuit((0,)), device)
    assert s.total_duration == 0 and len(s) == 0
    assert find_idle_windows(s) == []


def test_gate_durations(device):
    assert gate_duration(CX, (11, 14), device) == 848
    assert gate_duration(CX, (14, 11), device) == 848 + 320
    assert gate_duration(RZ(0.3), (11,), device) == 0
    assert gate_duration(Unitary(np.eye(4)), (12, 13), device) == 3 * 1760 + 4 * 160
    with pytest.raises(ScheduleError, match="no coupling"):
        gate_duration(CX, (11, 12), device)


def test_unresolvable_duration_without_device():
    with pytest.raises(ScheduleError):
        schedule_alap(Circuit((0,)).xp(0))


def test_measure_is_terminal(device):
    c = Circuit((11,)).measure(11).xp(11)
    with pytest.raises(ScheduleError, match="terminal"):
        schedule_alap(c, device)


def test_scheduled_circuit_rejects_overlap():
    a = Instruction(XP, (0,), 0, 160)
    b = Instruction(XP, (0,), 100, 160)
    with pytest.raises(ScheduleError, match="overlapping"):
        ScheduledCircuit((0,), (a, b), 260)
    with pytest.raises(ScheduleError, match="total_duration"):
        ScheduledCircuit((0,), (a,), 999)


def test_instruction_validation():
    with pytest.raises(ScheduleError):
        Instruction(CX, (0, 0))
    with pytest.raises(ScheduleError):
        Instruction(DELAY, (0,), duration=-1)
    with pytest.raises(ScheduleError):
        Instruction(CX, (0,))
    with pytest.raises(ValueError):
        Unitary(np.ones((2, 2)))


def test_idle_windows_gap_arithmetic():
    s = ScheduledCircuit((0,), (Instruction(XP, (0,), 0, 160), Instruction(XP, (0,), 1440, 160)), 1600)
    assert find_idle_windows(s) == [IdleWindow(0, 160, 1280)]
    tight = ScheduledCircuit((0,), (Instruction(XP, (0,), 0, 160), Instruction(XP, (0,), 160, 160)), 320)
    assert find_idle_windows(tight) == []


def test_delays_count_as_idle_and_barriers_split(device):
    c = Circuit((11, 14)).h(11).h(14).barrier().delay(1280).barrier().h(11).h(14).delay(500, 11).h(11)
    s = schedule_alap(c, device)
    wins = find_idle_windows(s)
    # ALAP leaves qubit 14 idle from the barrier until its late H
    assert [(w.qubit, w.duration) for w in wins] == [(11, 1280), (14, 1280), (14, 660), (11, 500)]
    assert wins[0].start == wins[1].start == 160


def _occupancy_windows(s):
    """Brute-force scan of every dt slot."""
    out = []
    for q in s.qubits:
        busy = np.zeros(s.total_duration + 1, bool)
        cuts = set()
        insts = [i for i in s.instructions if q in i.qubits and i.name != "delay"]
        if not insts:
            continue
        for i in insts:
            busy[i.start:i.end] = True
            if i.duration == 0:
                cuts.add(i.start)
        first = min(i.start for i in insts)
        last = max(i.end for i in insts)
        t = first
        while t < last:
            if busy[t]:
                t += 1
                continue
            u = t
            while u < last and not busy[u] and (u == t or u not in cuts):
                u += 1
            if t > first or busy[:t].any() or any(c <= t for c in cuts):
                out.append(IdleWindow(q, t, u - t))
            t = u
    pos = {q: k for k, q in enumerate(s.qubits)}
    return sorted(out, key=lambda w: (w.start, pos[w.qubit]))


GATES = st.sampled_from(["xp", "h", "rz", "delay", "cx", "barrier"])


@st.composite
def random_circuits(draw):
    qubits = (11, 14)
    c = Circuit(qubits)
    for _ in range(draw(st.integers(0, 10))):
        kind = draw(GATES)
        q = draw(st.sampled_from(qubits))
        if kind == "cx":
            c.cx(11, 14)
        elif kind == "barrier":
            c.barrier()
        elif kind == "delay":
            c.delay(draw(st.integers(0, 900)), q)
        elif kind == "rz":
            c.rz(draw(st.floats(-3, 3)), q)
        else:
            c.append(Gate(kind), (q,))
    return c


@settings(max_examples=60, deadline=None)
@given(random_circuits())
def test_alap_matches_mirrored_asap(device, circ):
    s = schedule_alap(circ, device)
    total, expected = _mirror_oracle(circ, device)
    assert s.total_duration == total
    assert sorted((i.start, i.name, i.qubits) for i in s.instructions) == expected
    # idempotent
    assert schedule_alap(s, device) == s


@settings(max_examples=60, deadline=None)
@given(random_circuits())
def test_idle_windows_match_occupancy_scan(device, circ):
    s = schedule_alap(circ, device)
    wins = find_idle_windows(s)
    assert wins == _occupancy_windows(s)
    for w in wins:
        assert w.duration > 0
        for i in s.on_qubit(w.qubit):
            if i.name != "delay" and i.duration:
                assert i.end <= w.start or i.start >= w.end


@settings(max_examples=25, deadline=None)
@given(random_circuits())
def test_asap_and_alap_agree_noiselessly(device, circ):
    a = simulate(schedule_alap(circ, device), device)
    b = simulate(schedule_asap(circ, device), device)
    assert trace_distance(a, b) < 1e-9


def test_text_round_trip(device):
    c = Circuit((11, 14)).h(11).rz(0.25, 14).cx(11, 14).unitary(np.diag([1, 1j]), 14).delay(64).barrier().measure()
    assert loads(dumps(c)).instructions == c.instructions
    s = schedule_alap(c, device)
    back = loads(dumps(s))
    assert isinstance(back, ScheduledCircuit)
    assert back == s


def test_text_parse_errors():
    with pytest.raises(ScheduleError, match="line 2"):
        loads("QUBITS 0\nFOO 0\n")
    with pytest.raises(ScheduleError, match="every instruction"):
        loads("XP 0 @0 #160\nXP 0\n")
    with pytest.raises(ScheduleError, match="line 1"):
        loads("XP 0 ~5\n")
