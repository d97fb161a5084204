"""Dynamical-decoupling sequences and their insertion into idle windows.

Standard DD places the N pulses of a sequence symmetrically in a window of
length T, with centres at ``(2k-1) T / 2N``. Staggered DD keeps that timing on
one qubit of a coupled pair and moves the other qubit's pulses to ``k T / N``,
halfway between its partner's pulses, so that the sign of the ZZ rotation
alternates between sub-intervals and the accumulated phase cancels.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Iterable, Mapping, Sequence

import numpy as np

from .circuit import IdleWindow, Instruction, ScheduledCircuit, find_idle_windows
from .device import DeviceModel
from .gates import DELAY, XM, XP, YM, YP, X, I2, Gate, phase_distance, zz_unitary


class WindowTooShortError(ValueError):
    pass


class StaggerRole(enum.Enum):
    SYMMETRIC = "symmetric"
    STAGGERED = "staggered"

    def swapped(self) -> StaggerRole:
        return StaggerRole.STAGGERED if self is StaggerRole.SYMMETRIC else StaggerRole.SYMMETRIC


class DDMode(str, enum.Enum):
    STANDARD = "standard"
    STAGGERED = "staggered"
    STAGGERED_INV = "staggered-inv"


@dataclass(frozen=True)
class DDSequence:
    name: str
    gates: tuple[Gate, ...]

    def __len__(self):
        return len(self.gates)


SEQUENCES = {
    "x2": DDSequence("X2", (XP, XP)),
    "x2pm": DDSequence("X2pm", (XP, XM)),
    "xy4": DDSequence("XY4", (XP, YP, XP, YP)),
    "xy4pm": DDSequence("XY4pm", (XP, YP, XM, YM)),
    "xy8": DDSequence("XY8", (XP, YP, XP, YP, YP, XP, YP, XP)),
    "xy8pm": DDSequence("XY8pm", (XP, YP, XM, YM, YP, XP, YM, XM)),
}


def get_sequence(name: str) -> DDSequence:
    try:
        return SEQUENCES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown DD sequence {name!r}; choose from {sorted(SEQUENCES)}") from None


def sequence_unitary(sequence: DDSequence | Sequence[Gate], epsilon: float = 0.0) -> np.ndarray:
    gates = sequence.gates if isinstance(sequence, DDSequence) else tuple(sequence)
    # later gates multiply from the left
    return reduce(lambda acc, g: g.unitary(epsilon) @ acc, gates, I2)


def verify_identity(sequence: DDSequence | Sequence[Gate], atol: float = 1e-12) -> bool:
    """True iff the pulses compose to the identity up to a global phase."""
    return phase_distance(sequence_unitary(sequence), I2) < atol


@dataclass(frozen=True)
class DDPlan:
    sequence: DDSequence
    mode: DDMode
    role_assignment: Mapping[int, StaggerRole] = field(default_factory=dict)

    @classmethod
    def standard(cls, sequence: DDSequence | str, qubits: Iterable[int]) -> DDPlan:
        seq = get_sequence(sequence) if isinstance(sequence, str) else sequence
        return cls(seq, DDMode.STANDARD, {q: StaggerRole.SYMMETRIC for q in qubits})

    @classmethod
    def staggered(
        cls, sequence: DDSequence | str, pairs: Iterable[tuple[int, int]], inverse: bool = False
    ) -> DDPlan:
        """Within each pair the lower-indexed qubit keeps symmetric timing
        (the other one when ``inverse``)."""
        seq = get_sequence(sequence) if isinstance(sequence, str) else sequence
        roles: dict[int, StaggerRole] = {}
        for a, b in pairs:
            lo, hi = sorted((a, b))
            wanted = {lo: StaggerRole.SYMMETRIC, hi: StaggerRole.STAGGERED}
            for q, role in wanted.items():
                role = role.swapped() if inverse else role
                if roles.setdefault(q, role) is not role:
                    raise ValueError(f"qubit {q} would need both roles; give disjoint pairs")
        mode = DDMode.STAGGERED_INV if inverse else DDMode.STAGGERED
        return cls(seq, mode, roles)

    @classmethod
    def build(cls, sequence: DDSequence | str, mode: DDMode | str, pairs: Sequence[tuple[int, int]]) -> DDPlan:
        mode = DDMode(mode)
        if mode is DDMode.STANDARD:
            return cls.standard(sequence, [q for p in pairs for q in p])
        return cls.staggered(sequence, pairs, inverse=mode is DDMode.STAGGERED_INV)

    def inverted(self) -> DDPlan:
        if self.mode is DDMode.STANDARD:
            return self
        mode = DDMode.STAGGERED if self.mode is DDMode.STAGGERED_INV else DDMode.STAGGERED_INV
        return DDPlan(self.sequence, mode, {q: r.swapped() for q, r in self.role_assignment.items()})

    @property
    def label(self) -> str:
        suffix = {DDMode.STANDARD: "", DDMode.STAGGERED: "-stag", DDMode.STAGGERED_INV: "-stag-inv"}
        return self.sequence.name + suffix[self.mode]


def pulse_centers(window_duration: int, n_pulses: int, role: StaggerRole) -> list[Fraction]:
    T, N = window_duration, n_pulses
    if role is StaggerRole.SYMMETRIC:
        return [Fraction((2 * k - 1) * T, 2 * N) for k in range(1, N + 1)]
    return [Fraction(k * T, N) for k in range(1, N + 1)]


def pulse_times(window_duration: int, n_pulses: int, role: StaggerRole, gate_duration: int) -> list[int]:
    """Start offsets (dt) of the pulses inside a window.

    Starts are ``floor(centre - gate_duration/2)``, clamped into the window,
    then pulled earlier where a clamp would make neighbours overlap.

    Raises:
        WindowTooShortError: if ``n_pulses * gate_duration > window_duration``.
    """
    T, N, g = window_duration, n_pulses, gate_duration
    if N * g > T:
        raise WindowTooShortError(f"{N} pulses of {g} dt do not fit in a {T} dt window")
    starts = [max(0, min(T - g, math.floor(c - Fraction(g, 2)))) for c in pulse_centers(T, N, role)]
    for k in range(N - 2, -1, -1):
        starts[k] = min(starts[k], starts[k + 1] - g)
    for k in range(1, N):
        starts[k] = max(starts[k], starts[k - 1] + g)
    if starts and (starts[0] < 0 or starts[-1] + g > T):
        raise WindowTooShortError(f"{N} pulses of {g} dt do not fit in a {T} dt window")
    return starts


@dataclass
class InsertionReport:
    inserted: list[IdleWindow] = field(default_factory=list)
    skipped: list[IdleWindow] = field(default_factory=list)
    # largest |achieved centre - ideal centre| over all placed pulses, in dt
    max_placement_error: Fraction = Fraction(0)

    @property
    def n_inserted(self) -> int:
        return len(self.inserted)

    @property
    def n_skipped(self) -> int:
        return len(self.skipped)


def insert_dd(
    circuit: ScheduledCircuit,
    plan: DDPlan,
    device: DeviceModel,
    min_window: int = 0,
) -> tuple[ScheduledCircuit, InsertionReport]:
    """Fill idle windows of the plan's qubits with the plan's DD sequence.

    Windows shorter than ``min_window`` or too short for the pulses are left
    alone and listed in the report. Delays inside a filled window are replaced
    by delay/pulse/delay segments, so the total duration is unchanged.
    """
    report = InsertionReport()
    n = len(plan.sequence)
    order = {id(inst): k for k, inst in enumerate(circuit.instructions)}
    keyed: list[tuple[int, int, int, Instruction]] = []
    dropped: set[int] = set()

    for w in find_idle_windows(circuit):
        role = plan.role_assignment.get(w.qubit)
        if role is None or n == 0:
            continue
        if w.duration < min_window:
            report.skipped.append(w)
            continue
        g = device.qubit(w.qubit).x_duration
        try:
            starts = pulse_times(w.duration, n, role, g)
        except WindowTooShortError:
            report.skipped.append(w)
            continue
        closer = next(
            k for k, inst in enumerate(circuit.instructions)
            if w.qubit in inst.qubits and inst.name != "delay" and inst.start == w.end
        )
        for inst in circuit.instructions:
            if inst.name == "delay" and inst.qubits == (w.qubit,) and w.start <= inst.start < w.end:
                dropped.add(id(inst))
        for s, c in zip(starts, pulse_centers(w.duration, n, role)):
            report.max_placement_error = max(report.max_placement_error, abs(s + Fraction(g, 2) - c))
        segments = []
        cursor = 0
        for s, gate in zip(starts, plan.sequence.gates):
            if s > cursor:
                segments.append(Instruction(DELAY, (w.qubit,), w.start + cursor, s - cursor))
            segments.append(Instruction(gate, (w.qubit,), w.start + s, g))
            cursor = s + g
        if cursor < w.duration:
            segments.append(Instruction(DELAY, (w.qubit,), w.start + cursor, w.duration - cursor))
        for j, seg in enumerate(segments):
            keyed.append((seg.start, closer, j - len(segments), seg))
        report.inserted.append(w)

    for inst in circuit.instructions:
        if id(inst) not in dropped:
            keyed.append((inst.start, order[id(inst)], 0, inst))
    keyed.sort(key=lambda t: t[:3])
    out = ScheduledCircuit(circuit.qubits, tuple(t[3] for t in keyed), circuit.total_duration)
    return out, report


# -- ZZ algebra checks -------------------------------------------------------

XX = np.kron(X, X)
XI = np.kron(X, I2)
IX = np.kron(I2, X)


def zz_algebra_deviations(n_draws: int = 1000, seed: int = 0) -> dict[str, float]:
    """Largest matrix deviation of each ZZ/Pauli identity over random angles.

    Keys:
        ``commute``: XX ZZ(t) XX = ZZ(t).
        ``invert``: XI ZZ(t) XI = IX ZZ(t) IX = ZZ(-t).
        ``accumulate``: simultaneous flips give ZZ(t1+t2+t3+t4).
        ``stagger``: alternating single flips give ZZ(t1-t2+t3-t4).
        ``stagger_cancel`` / ``stagger_inverse_cancel``: with equal angles the
        staggered product (either role assignment) is the identity.
    """
    rng = np.random.default_rng(seed)
    worst = dict.fromkeys(
        ("commute", "invert", "accumulate", "stagger", "stagger_cancel", "stagger_inverse_cancel"), 0.0
    )

    def bump(key, value):
        worst[key] = max(worst[key], float(value))

    I4 = np.eye(4)
    for _ in range(n_draws):
        t1, t2, t3, t4 = rng.uniform(-2 * np.pi, 2 * np.pi, size=4)
        zz = zz_unitary
        bump("commute", np.max(np.abs(XX @ zz(t1) @ XX - zz(t1))))
        bump("invert", np.max(np.abs(XI @ zz(t1) @ XI - zz(-t1))))
        bump("invert", np.max(np.abs(IX @ zz(t1) @ IX - zz(-t1))))
        standard = zz(t4) @ XX @ zz(t3 + t2) @ XX @ zz(t1)
        bump("accumulate", np.max(np.abs(standard - zz(t1 + t2 + t3 + t4))))
        staggered = IX @ zz(t4) @ XI @ zz(t3) @ IX @ zz(t2) @ XI @ zz(t1)
        bump("stagger", phase_distance(staggered, zz(t1 - t2 + t3 - t4)))
        equal = IX @ zz(t1) @ XI @ zz(t1) @ IX @ zz(t1) @ XI @ zz(t1)
        bump("stagger_cancel", phase_distance(equal, I4))
        swapped = XI @ zz(t1) @ IX @ zz(t1) @ XI @ zz(t1) @ IX @ zz(t1)
        bump("stagger_inverse_cancel", phase_distance(swapped, I4))
    return worst
