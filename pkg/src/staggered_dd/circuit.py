"""Circuits on the integer dt grid: building, ALAP/ASAP scheduling, idle windows.

Times are integers in units of the device ``dt``. An unscheduled
:class:`Circuit` is a program-ordered instruction list; scheduling fixes a
start time for every instruction and returns a :class:`ScheduledCircuit`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Sequence

import numpy as np

from .device import DeviceModel
from .gates import BARRIER, CX, DELAY, MEASURE, SX, H, Gate, RZ, Unitary, XM, XP, YM, YP


class ScheduleError(ValueError):
    """Bad circuit structure or a gate whose duration cannot be resolved."""


@dataclass(frozen=True)
class Instruction:
    gate: Gate
    qubits: tuple[int, ...]
    start: int | None = None
    duration: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(self.qubits))
        if len(set(self.qubits)) != len(self.qubits):
            raise ScheduleError(f"{self.gate.name}: repeated qubit in {self.qubits}")
        if not self.qubits:
            raise ScheduleError(f"{self.gate.name}: needs at least one qubit")
        arity = self.gate.num_qubits
        if arity is not None and arity != len(self.qubits):
            raise ScheduleError(f"{self.gate.name} acts on {arity} qubit(s), got {self.qubits}")
        if self.gate.name == "delay" and (self.duration is None or self.duration < 0):
            raise ScheduleError(f"delay needs a non-negative duration, got {self.duration}")
        if self.gate.name in ("rz", "barrier") and self.duration not in (None, 0):
            raise ScheduleError(f"{self.gate.name} has zero duration, got {self.duration}")

    @property
    def end(self) -> int:
        return self.start + self.duration

    @property
    def name(self) -> str:
        return self.gate.name


@dataclass(frozen=True)
class IdleWindow:
    qubit: int
    start: int
    duration: int

    @property
    def end(self) -> int:
        return self.start + self.duration


@dataclass
class Circuit:
    """Unscheduled, program-ordered circuit over physical qubit ids."""

    qubits: tuple[int, ...]
    instructions: list[Instruction] = field(default_factory=list)

    def __post_init__(self):
        self.qubits = tuple(self.qubits)
        if len(set(self.qubits)) != len(self.qubits):
            raise ScheduleError(f"duplicate qubits in {self.qubits}")

    def append(self, gate: Gate, qubits: Sequence[int], duration: int | None = None) -> Circuit:
        for q in qubits:
            if q not in self.qubits:
                raise ScheduleError(f"qubit {q} is not part of this circuit {self.qubits}")
        self.instructions.append(Instruction(gate, tuple(qubits), None, duration))
        return self

    def xp(self, q):
        return self.append(XP, (q,))

    def xm(self, q):
        return self.append(XM, (q,))

    def yp(self, q):
        return self.append(YP, (q,))

    def ym(self, q):
        return self.append(YM, (q,))

    def sx(self, q):
        return self.append(SX, (q,))

    def h(self, q):
        return self.append(H, (q,))

    def rz(self, angle, q):
        return self.append(RZ(angle), (q,))

    def cx(self, control, target):
        return self.append(CX, (control, target))

    def unitary(self, matrix, *qubits):
        return self.append(Unitary(matrix), qubits)

    def delay(self, duration: int, *qubits):
        for q in qubits or self.qubits:
            self.append(DELAY, (q,), int(duration))
        return self

    def barrier(self, *qubits):
        return self.append(BARRIER, qubits or self.qubits)

    def measure(self, *qubits):
        return self.append(MEASURE, qubits or self.qubits)

    def extend(self, other: Circuit) -> Circuit:
        """Append ``other``'s instructions, widening the qubit set if needed."""
        extra = tuple(q for q in other.qubits if q not in self.qubits)
        self.qubits = self.qubits + extra
        self.instructions.extend(replace(i, start=None) for i in other.instructions)
        return self

    def __iter__(self) -> Iterator[Instruction]:
        return iter(self.instructions)

    def __len__(self):
        return len(self.instructions)


@dataclass(frozen=True)
class ScheduledCircuit:
    """Instructions with fixed starts, ordered by (start, program order)."""

    qubits: tuple[int, ...]
    instructions: tuple[Instruction, ...]
    total_duration: int

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(self.qubits))
        object.__setattr__(self, "instructions", tuple(self.instructions))
        latest = 0
        busy: dict[int, list[tuple[int, int]]] = {q: [] for q in self.qubits}
        measured = set()
        for inst in self.instructions:
            if inst.start is None or inst.duration is None:
                raise ScheduleError(f"{inst.name} on {inst.qubits} is not scheduled")
            if inst.start < 0 or inst.duration < 0:
                raise ScheduleError(f"{inst.name} on {inst.qubits} has negative timing")
            for q in inst.qubits:
                if q not in busy:
                    raise ScheduleError(f"qubit {q} is not part of this circuit")
                if q in measured and inst.name not in ("measure", "barrier"):
                    raise ScheduleError(f"{inst.name} on qubit {q} after measurement (measure is terminal-only)")
                if inst.duration:
                    busy[q].append((inst.start, inst.end))
            if inst.name == "measure":
                measured.update(inst.qubits)
            latest = max(latest, inst.end)
        for q, spans in busy.items():
            spans.sort()
            for (s0, e0), (s1, _) in zip(spans, spans[1:]):
                if s1 < e0:
                    raise ScheduleError(f"overlapping instructions on qubit {q} at [{s0},{e0}) and start {s1}")
        if self.total_duration != latest:
            raise ScheduleError(f"total_duration {self.total_duration} != last instruction end {latest}")

    @property
    def num_qubits(self) -> int:
        return len(self.qubits)

    def __iter__(self) -> Iterator[Instruction]:
        return iter(self.instructions)

    def __len__(self):
        return len(self.instructions)

    def on_qubit(self, q: int) -> list[Instruction]:
        return [i for i in self.instructions if q in i.qubits]

    def to_circuit(self) -> Circuit:
        return Circuit(self.qubits, [replace(i, start=None) for i in self.instructions])


def gate_duration(gate: Gate, qubits: Sequence[int], device: DeviceModel) -> int:
    """Duration in dt of ``gate`` on ``qubits`` under ``device``.

    A CX against the native direction costs two extra single-qubit layers, and
    a generic two-qubit unitary is costed as three CX plus four SX layers.
    """
    name = gate.name
    if name in ("rz", "barrier", "measure"):
        return 0
    if name == "delay":
        raise ScheduleError("delay duration must be given explicitly")
    try:
        props = [device.qubit(q) for q in qubits]
    except KeyError as exc:
        raise ScheduleError(f"{name}: {exc.args[0]}") from None
    sx = max(p.sx_duration for p in props)
    if name in ("xp", "xm", "yp", "ym"):
        return props[0].x_duration
    if name in ("sx", "h"):
        return sx
    if name == "unitary" and len(qubits) == 1:
        return 2 * sx
    coupling = device.coupling(*qubits)
    if coupling is None:
        raise ScheduleError(f"{name}: no coupling between qubits {qubits[0]} and {qubits[1]} in device")
    if name == "cx":
        if (coupling.control, coupling.target) == tuple(qubits):
            return coupling.cx_duration
        return coupling.cx_duration + 2 * sx
    if name == "unitary":
        return 3 * coupling.cx_duration + 4 * sx
    raise ScheduleError(f"no duration rule for {name}")


def _resolved(circuit: Circuit | ScheduledCircuit, device: DeviceModel | None) -> list[Instruction]:
    out = []
    for inst in circuit.instructions:
        if inst.duration is None:
            if device is None:
                raise ScheduleError(f"{inst.name} has no duration and no device was given")
            inst = replace(inst, duration=gate_duration(inst.gate, inst.qubits, device))
        out.append(inst)
    return out


def _check_terminal_measure(insts: Sequence[Instruction]) -> None:
    measured = set()
    for inst in insts:
        for q in inst.qubits:
            if q in measured and inst.name not in ("measure", "barrier"):
                raise ScheduleError(f"{inst.name} on qubit {q} after measurement (measure is terminal-only)")
        if inst.name == "measure":
            measured.update(inst.qubits)


def _finish(qubits, insts, starts) -> ScheduledCircuit:
    placed = [replace(inst, start=int(s)) for inst, s in zip(insts, starts)]
    order = sorted(range(len(placed)), key=lambda k: (placed[k].start, k))
    total = max((p.end for p in placed), default=0)
    return ScheduledCircuit(qubits, tuple(placed[k] for k in order), total)


def schedule_alap(circuit: Circuit | ScheduledCircuit, device: DeviceModel | None = None) -> ScheduledCircuit:
    """Schedule every instruction as late as its successors allow.

    Per-qubit program order is the only dependency; barriers synchronise their
    qubits. A scheduled input is re-scheduled from its instruction order.
    """
    insts = _resolved(circuit, device)
    _check_terminal_measure(insts)
    free = {q: 0 for q in circuit.qubits}
    rev = [0] * len(insts)
    for k in range(len(insts) - 1, -1, -1):
        inst = insts[k]
        t = max(free[q] for q in inst.qubits)
        rev[k] = t
        for q in inst.qubits:
            free[q] = t + inst.duration
    total = max(free.values(), default=0)
    starts = [total - (r + inst.duration) for r, inst in zip(rev, insts)]
    return _finish(circuit.qubits, insts, starts)


def schedule_asap(circuit: Circuit | ScheduledCircuit, device: DeviceModel | None = None) -> ScheduledCircuit:
    insts = _resolved(circuit, device)
    _check_terminal_measure(insts)
    free = {q: 0 for q in circuit.qubits}
    starts = []
    for inst in insts:
        t = max(free[q] for q in inst.qubits)
        starts.append(t)
        for q in inst.qubits:
            free[q] = t + inst.duration
    return _finish(circuit.qubits, insts, starts)


def find_idle_windows(circuit: ScheduledCircuit) -> list[IdleWindow]:
    """Maximal interior gaps per qubit, sorted by start then qubit.

    Delays count as idle time. Barriers and zero-length gates (RZ) split
    windows. Time before a qubit's first and after its last instruction is
    not returned.
    """
    windows = []
    for q in circuit.qubits:
        cursor = None
        for inst in circuit.instructions:
            if q not in inst.qubits or inst.name == "delay":
                continue
            if cursor is not None and inst.start > cursor:
                windows.append(IdleWindow(q, cursor, inst.start - cursor))
            cursor = inst.end if cursor is None else max(cursor, inst.end)
    pos = {q: i for i, q in enumerate(circuit.qubits)}
    windows.sort(key=lambda w: (w.start, pos[w.qubit]))
    return windows


# -- text interchange --------------------------------------------------------

def _format_gate(gate: Gate) -> str:
    if gate.name == "rz":
        return f"RZ({gate.angle!r})"
    if gate.name == "unitary":
        entries = ";".join(repr(complex(z)).strip("()") for z in gate.matrix.ravel())
        return f"UNITARY[{entries}]"
    return gate.name.upper()


def dumps(circuit: Circuit | ScheduledCircuit) -> str:
    """Serialise as ``GATE q0[,q1] [@start] [#duration]`` lines."""
    lines = ["QUBITS " + ",".join(str(q) for q in circuit.qubits)]
    for inst in circuit.instructions:
        parts = [_format_gate(inst.gate), ",".join(str(q) for q in inst.qubits)]
        if inst.start is not None:
            parts.append(f"@{inst.start}")
        if inst.duration is not None:
            parts.append(f"#{inst.duration}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def _parse_gate(token: str, lineno: int) -> Gate:
    upper = token.upper()
    try:
        if upper.startswith("RZ(") and upper.endswith(")"):
            return RZ(float(token[3:-1]))
        if upper.startswith("UNITARY[") and upper.endswith("]"):
            values = [complex(v) for v in token[8:-1].split(";")]
            dim = int(round(len(values) ** 0.5))
            return Unitary(np.array(values).reshape(dim, dim))
        return Gate(token.lower())
    except ValueError as exc:
        raise ScheduleError(f"line {lineno}: bad gate {token!r}: {exc}") from None


def loads(text: str) -> Circuit | ScheduledCircuit:
    """Parse the text format; fully timed input yields a ScheduledCircuit."""
    qubits = None
    insts = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if tokens[0].upper() == "QUBITS":
            qubits = tuple(int(q) for q in tokens[1].split(","))
            continue
        if len(tokens) < 2:
            raise ScheduleError(f"line {lineno}: expected 'GATE qubits', got {line!r}")
        gate = _parse_gate(tokens[0], lineno)
        try:
            qs = tuple(int(q) for q in tokens[1].split(","))
            start = duration = None
            for tok in tokens[2:]:
                if tok.startswith("@"):
                    start = int(tok[1:])
                elif tok.startswith("#"):
                    duration = int(tok[1:])
                else:
                    raise ValueError(f"unexpected token {tok!r}")
        except ValueError as exc:
            raise ScheduleError(f"line {lineno}: {exc}") from None
        insts.append(Instruction(gate, qs, start, duration))
    if qubits is None:
        seen = []
        for inst in insts:
            seen.extend(q for q in inst.qubits if q not in seen)
        qubits = tuple(seen)
    timed = [i.start is not None for i in insts]
    if insts and all(timed):
        total = max((i.end for i in insts), default=0)
        return ScheduledCircuit(qubits, tuple(insts), total)
    if any(timed):
        raise ScheduleError("either every instruction has @start or none does")
    return Circuit(qubits, insts)


def compose_scheduled(parts: Iterable[ScheduledCircuit]) -> ScheduledCircuit:
    """Run scheduled circuits on disjoint qubits side by side from t=0."""
    qubits: tuple[int, ...] = ()
    insts: list[Instruction] = []
    for part in parts:
        if set(qubits) & set(part.qubits):
            raise ScheduleError("compose_scheduled needs disjoint qubit sets")
        qubits += part.qubits
        insts.extend(part.instructions)
    order = sorted(range(len(insts)), key=lambda k: (insts[k].start, k))
    total = max((i.end for i in insts), default=0)
    return ScheduledCircuit(qubits, tuple(insts[k] for k in order), total)
