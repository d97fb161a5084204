"""Gate kinds and their ideal unitaries."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H_MAT = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
CX_MAT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)

# Gates that run on the single-qubit drive line; used for duration lookup.
NAMES = frozenset({"xp", "xm", "yp", "ym", "sx", "rz", "h", "cx", "barrier", "delay", "unitary", "measure"})


def rx(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def ry(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(theta: float) -> np.ndarray:
    return np.diag([cmath.exp(-0.5j * theta), cmath.exp(0.5j * theta)])


def is_unitary(m: np.ndarray, atol: float = 1e-10) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.allclose(m.conj().T @ m, np.eye(len(m)), atol=atol)


def phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Max-entry distance between ``a`` and ``b`` after removing the best global phase."""
    overlap = np.vdot(b, a)
    phase = overlap / abs(overlap) if abs(overlap) > 1e-15 else 1.0
    return float(np.max(np.abs(a - phase * b)))


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, atol: float = 1e-12) -> bool:
    return phase_distance(a, b) < atol


@dataclass(frozen=True)
class Gate:
    """A gate kind. ``angle`` is used by RZ, ``matrix`` by Unitary.

    Delay carries its duration on the instruction, not here.
    """

    name: str
    angle: float | None = None
    matrix: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.name not in NAMES:
            raise ValueError(f"unknown gate {self.name!r}")
        if self.name == "rz" and self.angle is None:
            raise ValueError("rz needs an angle")
        if self.name == "unitary":
            m = np.asarray(self.matrix, dtype=complex)
            if m.shape not in ((2, 2), (4, 4)):
                raise ValueError(f"unitary must be 2x2 or 4x4, got shape {m.shape}")
            if not is_unitary(m):
                raise ValueError("unitary matrix is not unitary within 1e-10")
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)

    def __eq__(self, other):
        if not isinstance(other, Gate):
            return NotImplemented
        if (self.name, self.angle) != (other.name, other.angle):
            return False
        if self.name == "unitary":
            return np.array_equal(self.matrix, other.matrix)
        return True

    def __hash__(self):
        return hash((self.name, self.angle))

    @property
    def num_qubits(self) -> int | None:
        """Fixed arity, or None for gates that span any number of qubits."""
        if self.name in ("barrier", "measure"):
            return None
        if self.name == "cx":
            return 2
        if self.name == "unitary":
            return 1 if self.matrix.shape == (2, 2) else 2
        return 1

    @property
    def is_physical(self) -> bool:
        """True for gates that act on the state (not delay/barrier/measure)."""
        return self.name not in ("delay", "barrier", "measure")

    def unitary(self, epsilon: float = 0.0) -> np.ndarray:
        """Ideal matrix; ``epsilon`` over-rotates the four pi pulses."""
        name = self.name
        if name == "xp":
            return rx(math.pi + epsilon)
        if name == "xm":
            return rx(-math.pi - epsilon)
        if name == "yp":
            return ry(math.pi + epsilon)
        if name == "ym":
            return ry(-math.pi - epsilon)
        if name == "sx":
            return rx(math.pi / 2)
        if name == "rz":
            return rz(self.angle)
        if name == "h":
            return H_MAT
        if name == "cx":
            return CX_MAT
        if name == "unitary":
            return np.array(self.matrix)
        raise ValueError(f"{name} has no unitary")

    def __repr__(self):
        if self.name == "rz":
            return f"Gate('rz', {self.angle!r})"
        return f"Gate({self.name!r})"


XP, XM, YP, YM = Gate("xp"), Gate("xm"), Gate("yp"), Gate("ym")
SX, H, CX = Gate("sx"), Gate("h"), Gate("cx")
BARRIER, DELAY, MEASURE = Gate("barrier"), Gate("delay"), Gate("measure")


def RZ(angle: float) -> Gate:
    return Gate("rz", angle=float(angle))


def Unitary(matrix) -> Gate:
    return Gate("unitary", matrix=np.asarray(matrix, dtype=complex))


def zz_unitary(theta: float) -> np.ndarray:
    """``exp(-i theta/2 Z⊗Z)``."""
    a, b = cmath.exp(-0.5j * theta), cmath.exp(0.5j * theta)
    return np.diag([a, b, b, a])
