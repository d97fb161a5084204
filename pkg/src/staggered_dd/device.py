"""Hardware description: per-qubit coherence data, couplings and static ZZ."""

from __future__ import annotations

import dataclasses
import enum
import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Iterable

DEFAULT_DT_NS = Fraction(2, 9)
DEVICE_ENV_VAR = "STAGGERED_DD_DEVICE"
BUNDLED_DEVICE = "ibm_cairo_10q.json"


class DeviceError(ValueError):
    """Raised when a device description cannot be parsed or fails validation."""


class CXType(str, enum.Enum):
    ECR = "ECR"
    DCX = "DCX"


@dataclass(frozen=True)
class QubitProps:
    """Single-qubit properties. Times in microseconds, frequencies in GHz."""

    index: int
    t1: float
    t2: float
    frequency: float
    anharmonicity: float
    sx_duration: int
    x_duration: int
    error_rate: float | None = None

    def __post_init__(self):
        where = f"qubit {self.index}"
        if not self.t1 > 0:
            raise DeviceError(f"{where}: t1 must be positive, got {self.t1}")
        if not 0 < self.t2 <= 2 * self.t1:
            raise DeviceError(f"{where}: t2 must satisfy 0 < t2 <= 2*t1, got t2={self.t2}, t1={self.t1}")
        if not self.frequency > 0:
            raise DeviceError(f"{where}: frequency must be positive, got {self.frequency}")
        if not self.anharmonicity > 0:
            raise DeviceError(
                f"{where}: anharmonicity is stored as a positive magnitude, got {self.anharmonicity}"
            )
        for name in ("sx_duration", "x_duration"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                raise DeviceError(f"{where}: {name} must be a non-negative integer number of dt, got {value!r}")


@dataclass(frozen=True)
class CouplingProps:
    """A directed CX coupling. ``j_coupling`` in MHz, ``zz_strength`` in kHz."""

    control: int
    target: int
    j_coupling: float
    cx_duration: int
    cx_type: CXType = CXType.ECR
    zz_strength: float | None = None
    amplitude: float | None = None
    error_rate: float | None = None

    def __post_init__(self):
        where = f"coupling ({self.control}, {self.target})"
        if self.control == self.target:
            raise DeviceError(f"{where}: control and target must differ")
        if not isinstance(self.cx_duration, int) or isinstance(self.cx_duration, bool) or self.cx_duration <= 0:
            raise DeviceError(f"{where}: cx_duration must be a positive integer number of dt, got {self.cx_duration!r}")
        if not isinstance(self.cx_type, CXType):
            try:
                object.__setattr__(self, "cx_type", CXType(self.cx_type))
            except ValueError:
                raise DeviceError(f"{where}: cx_type must be one of ECR, DCX, got {self.cx_type!r}") from None

    @property
    def pair(self) -> frozenset[int]:
        return frozenset((self.control, self.target))


def compute_zz(j: float, delta0: float, delta1: float, detuning: float) -> float:
    """Perturbative static ZZ strength between two coupled transmons.

    All inputs in GHz: ``j`` is the coupling rate, ``delta0``/``delta1`` the
    anharmonicity magnitudes of control and target, and ``detuning`` the
    frequency difference ``omega_control - omega_target``.

    Returns:
        ZZ strength in kHz, ``2 J^2 (d0 + d1) / ((d1 - D)(d0 + D))``.

    Raises:
        ValueError: if either denominator factor is not positive, i.e. the
            qubits are outside the straddling regime where the expansion holds.
    """
    if delta0 <= 0 or delta1 <= 0:
        raise ValueError(f"anharmonicities must be positive magnitudes, got {delta0}, {delta1}")
    lower = delta1 - detuning
    upper = delta0 + detuning
    if lower <= 0 or upper <= 0:
        raise ValueError(
            f"perturbative ZZ undefined: |detuning|={abs(detuning)} GHz is not below both anharmonicities"
        )
    return 2.0 * j * j * (delta0 + delta1) / (lower * upper) * 1e6


@dataclass(frozen=True)
class DeviceModel:
    dt_ns: Fraction
    qubits: tuple[QubitProps, ...]
    couplings: tuple[CouplingProps, ...] = ()
    name: str = ""
    _by_index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "dt_ns", Fraction(self.dt_ns))
        object.__setattr__(self, "qubits", tuple(self.qubits))
        object.__setattr__(self, "couplings", tuple(self.couplings))
        if self.dt_ns <= 0:
            raise DeviceError(f"dt_ns must be positive, got {self.dt_ns}")
        if not self.qubits:
            raise DeviceError("qubits: at least one qubit is required")
        by_index = {}
        for q in self.qubits:
            if q.index in by_index:
                raise DeviceError(f"qubits: duplicate qubit index {q.index}")
            by_index[q.index] = q
        object.__setattr__(self, "_by_index", by_index)
        seen = set()
        for c in self.couplings:
            for end in (c.control, c.target):
                if end not in by_index:
                    raise DeviceError(f"couplings: ({c.control}, {c.target}) references unknown qubit {end}")
            if c.pair in seen:
                raise DeviceError(f"couplings: duplicate coupling between {c.control} and {c.target}")
            seen.add(c.pair)

    def qubit(self, index: int) -> QubitProps:
        try:
            return self._by_index[index]
        except KeyError:
            raise KeyError(f"device has no qubit {index}") from None

    def coupling(self, a: int, b: int) -> CouplingProps | None:
        """The coupling between ``a`` and ``b`` in either direction, or None."""
        key = frozenset((a, b))
        for c in self.couplings:
            if c.pair == key:
                return c
        return None

    def zz_khz(self, a: int, b: int) -> float:
        """Static ZZ for a coupled pair; tabulated value wins over the formula."""
        c = self.coupling(a, b)
        if c is None:
            raise KeyError(f"qubits {a} and {b} are not coupled")
        if c.zz_strength is not None:
            return c.zz_strength
        return self.derived_zz_khz(c)

    def derived_zz_khz(self, c: CouplingProps) -> float:
        qc, qt = self.qubit(c.control), self.qubit(c.target)
        return compute_zz(
            c.j_coupling * 1e-3, qc.anharmonicity, qt.anharmonicity, qc.frequency - qt.frequency
        )

    def zz_map(self, qubits: Iterable[int]) -> dict[frozenset[int], float]:
        """ZZ strengths (kHz) of every coupling with both ends in ``qubits``."""
        qs = set(qubits)
        return {c.pair: self.zz_khz(c.control, c.target) for c in self.couplings if c.pair <= qs}

    def ns_to_dt(self, ns: float | Fraction | str) -> int:
        """Convert a duration in ns to dt, rejecting values off the grid.

        Inputs are rounded to 0.1 ns before the check so that printed values
        such as ``3128.9`` map onto ``14080``.
        """
        exact = Fraction(ns) / self.dt_ns
        n = round(exact)
        if abs(Fraction(ns) - n * self.dt_ns) > Fraction(1, 20):
            raise ValueError(f"{ns} ns is not an integer multiple of dt={self.dt_ns} ns")
        return int(n)

    def dt_to_ns(self, n: int) -> float:
        return float(n * self.dt_ns)

    def dt_seconds(self) -> float:
        return float(self.dt_ns) * 1e-9

    def with_gate_durations(self, *, x: int | None = None, sx: int | None = None) -> DeviceModel:
        """Copy of the device with every qubit's 1q gate durations overridden."""
        changes = {}
        if x is not None:
            changes["x_duration"] = x
        if sx is not None:
            changes["sx_duration"] = sx
        qubits = tuple(dataclasses.replace(q, **changes) for q in self.qubits)
        return dataclasses.replace(self, qubits=qubits)


_QUBIT_FIELDS = {f.name for f in dataclasses.fields(QubitProps)}
_COUPLING_FIELDS = {f.name for f in dataclasses.fields(CouplingProps)}


def _build(cls, fields: set[str], record: Any, where: str):
    if not isinstance(record, dict):
        raise DeviceError(f"{where}: expected an object, got {type(record).__name__}")
    unknown = set(record) - fields
    if unknown:
        raise DeviceError(f"{where}: unknown field(s) {sorted(unknown)}")
    try:
        return cls(**record)
    except TypeError as exc:
        raise DeviceError(f"{where}: {exc}") from None


def device_from_dict(doc: dict) -> DeviceModel:
    if not isinstance(doc, dict):
        raise DeviceError("device document must be an object at top level")
    for key in ("qubits", "couplings"):
        if key in doc and not isinstance(doc[key], list):
            raise DeviceError(f"{key}: expected an array")
    if "qubits" not in doc:
        raise DeviceError("qubits: missing required field")
    try:
        dt_ns = Fraction(str(doc.get("dt_ns", DEFAULT_DT_NS)))
    except (ValueError, ZeroDivisionError):
        raise DeviceError(f"dt_ns: cannot parse {doc.get('dt_ns')!r} as a number or ratio") from None
    qubits = [_build(QubitProps, _QUBIT_FIELDS, r, f"qubits[{i}]") for i, r in enumerate(doc["qubits"])]
    couplings = [
        _build(CouplingProps, _COUPLING_FIELDS, r, f"couplings[{i}]")
        for i, r in enumerate(doc.get("couplings", []))
    ]
    return DeviceModel(dt_ns=dt_ns, qubits=qubits, couplings=couplings, name=str(doc.get("name", "")))


def load_device(source: str | os.PathLike | None = None) -> DeviceModel:
    """Load and validate a device file.

    ``source`` may be a path, a JSON document string, or None. None falls back
    to ``$STAGGERED_DD_DEVICE`` and then to the bundled ten-qubit fixture.
    """
    if source is None:
        source = os.environ.get(DEVICE_ENV_VAR)
    if source is None:
        text = resources.files("staggered_dd.data").joinpath(BUNDLED_DEVICE).read_text()
        label = BUNDLED_DEVICE
    elif isinstance(source, str) and source.lstrip().startswith("{"):
        text, label = source, "<string>"
    else:
        path = Path(source)
        try:
            text = path.read_text()
        except OSError as exc:
            raise DeviceError(f"cannot read device file {path}: {exc.strerror}") from None
        label = str(path)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DeviceError(f"{label}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return device_from_dict(doc)
