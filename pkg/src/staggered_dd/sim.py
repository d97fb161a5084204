"""Exact density-matrix simulation of scheduled circuits (up to four qubits).

Gates are applied as instantaneous unitaries at their scheduled start. Between
consecutive gate starts the state evolves under always-on ZZ coupling, optional
static detunings, and per-qubit thermal relaxation (amplitude damping plus pure
dephasing). In the default mode that drift is integrated exactly in closed form
(see :func:`lindblad_step`). Qubit ``circuit.qubits[0]`` is the most
significant bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import linalg

from .circuit import ScheduledCircuit
from .device import DeviceModel
from .gates import zz_unitary  # noqa: F401  (re-exported)

MAX_QUBITS = 4
ZZ_MODES = ("continuous", "pre_delay")


class SimulationError(RuntimeError):
    pass


def _pair(key) -> frozenset[int]:
    pair = frozenset(key)
    if len(pair) != 2:
        raise ValueError(f"ZZ pair needs two distinct qubits, got {key!r}")
    return pair


@dataclass(frozen=True)
class NoiseConfig:
    """Noise sources for :func:`simulate`.

    Attributes:
        zz_pairs: ZZ strength in kHz per unordered qubit pair.
        relaxation_enabled: apply T1/T2 from the device to every qubit.
        detunings: static frequency offset in kHz per qubit, applied as a
            physical Z drift (so DD echoes it).
        overrotation_epsilon: pi pulses become rotations by ``±(pi + eps)``.
        zz_mode: ``"continuous"`` integrates ZZ, detuning and relaxation
            jointly and exactly over each slice; ``"pre_delay"`` applies each
            slice's ZZ as a discrete R_ZZ gate ahead of that slice's relaxation.
            The two agree when relaxation is off.
        rotary_echo: suppress a pair's ZZ while a CX acts on that same pair.
    """

    zz_pairs: Mapping[frozenset[int], float] = field(default_factory=dict)
    relaxation_enabled: bool = False
    detunings: Mapping[int, float] = field(default_factory=dict)
    overrotation_epsilon: float = 0.0
    zz_mode: str = "continuous"
    rotary_echo: bool = False

    def __post_init__(self):
        pairs = {_pair(k): float(v) for k, v in dict(self.zz_pairs).items()}
        for k, v in pairs.items():
            if not math.isfinite(v):
                raise ValueError(f"ZZ strength for {sorted(k)} must be finite")
        object.__setattr__(self, "zz_pairs", pairs)
        object.__setattr__(self, "detunings", {int(q): float(f) for q, f in dict(self.detunings).items()})
        if not abs(self.overrotation_epsilon) < math.pi / 2:
            raise ValueError("|overrotation_epsilon| must be below pi/2")
        if self.zz_mode not in ZZ_MODES:
            raise ValueError(f"zz_mode must be one of {ZZ_MODES}, got {self.zz_mode!r}")

    @classmethod
    def from_device(cls, device: DeviceModel, qubits: Sequence[int], **kwargs) -> NoiseConfig:
        """ZZ on every device coupling inside ``qubits``; other fields from kwargs."""
        return cls(zz_pairs=device.zz_map(qubits), **kwargs)


# -- density-matrix helpers --------------------------------------------------

def basis_state(bitstring: str) -> np.ndarray:
    dim = 2 ** len(bitstring)
    rho = np.zeros((dim, dim), dtype=complex)
    k = int(bitstring, 2)
    rho[k, k] = 1.0
    return rho


def pure_state(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def check_density_matrix(rho: np.ndarray, atol: float = 1e-9, psd_tol: float = 1e-8) -> None:
    """Raise SimulationError unless ``rho`` is Hermitian, unit-trace and PSD."""
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] & (rho.shape[0] - 1):
        raise SimulationError(f"not a 2^n x 2^n matrix: shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > atol:
        raise SimulationError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > atol:
        raise SimulationError(f"density matrix trace is {np.trace(rho).real:.12f}")
    if np.min(np.linalg.eigvalsh(rho)) < -psd_tol:
        raise SimulationError("density matrix has a negative eigenvalue")


def expectation_population(rho: np.ndarray, bitstring: str) -> float:
    """``<b|rho|b>`` for a computational-basis label (first character = first qubit)."""
    n = int(math.log2(rho.shape[0]))
    if len(bitstring) != n:
        raise ValueError(f"bitstring {bitstring!r} has length {len(bitstring)}, state has {n} qubits")
    return float(rho[int(bitstring, 2), int(bitstring, 2)].real)


def marginal_population(rho: np.ndarray, positions: Sequence[int], bits: str) -> float:
    """Probability that the qubits at ``positions`` read ``bits``."""
    n = int(math.log2(rho.shape[0]))
    probs = np.real(np.diag(rho)).reshape((2,) * n)
    rest = tuple(a for a in range(n) if a not in positions)
    marg = probs.sum(axis=rest) if rest else probs
    # summed-out axes vanish; remaining axes keep ascending order
    order = sorted(positions)
    idx = tuple(int(bits[list(positions).index(p)]) for p in order)
    return float(marg[idx])


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(rho - sigma))))


def state_fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity ``(tr sqrt(sqrt(rho) sigma sqrt(rho)))^2``."""
    root = linalg.sqrtm(rho)
    inner = linalg.sqrtm(root @ sigma @ root)
    return float(np.real(np.trace(inner)) ** 2)


def apply_unitary(rho: np.ndarray, u: np.ndarray, positions: Sequence[int]) -> np.ndarray:
    """``U rho U^dagger`` with ``U`` acting on the qubits at ``positions``."""
    n = int(math.log2(rho.shape[0]))
    k = len(positions)
    t = rho.reshape((2,) * (2 * n))
    ut = u.reshape((2,) * (2 * k))
    rows = list(positions)
    t = np.tensordot(ut, t, axes=(list(range(k, 2 * k)), rows))
    t = np.moveaxis(t, list(range(k)), rows)
    cols = [n + p for p in positions]
    t = np.tensordot(t, ut.conj(), axes=(cols, list(range(k, 2 * k))))
    t = np.moveaxis(t, list(range(2 * n - k, 2 * n)), cols)
    return t.reshape(rho.shape)


def relaxation_channel(rho: np.ndarray, qubit: int, dt_elapsed: float, t1: float, t2: float) -> np.ndarray:
    """Amplitude damping then pure dephasing on the qubit at position ``qubit``.

    ``dt_elapsed``, ``t1`` and ``t2`` share one time unit; ``t1`` may be inf.
    Populations relax with ``exp(-t/T1)`` and coherences with ``exp(-t/T2)``.
    """
    if t2 > 2 * t1:
        raise ValueError(f"invalid coherence times: t2={t2} exceeds 2*t1={2 * t1}")
    if dt_elapsed < 0:
        raise ValueError("dt_elapsed must be non-negative")
    if dt_elapsed == 0:
        return rho
    n = int(math.log2(rho.shape[0]))
    p = -math.expm1(-dt_elapsed / t1) if math.isfinite(t1) else 0.0
    coherence = math.exp(-dt_elapsed / t2)
    lo, hi = 2 ** qubit, 2 ** (n - qubit - 1)
    t = rho.reshape(lo, 2, hi, lo, 2, hi).copy()
    excited = t[:, 1, :, :, 1, :].copy()
    t[:, 0, :, :, 0, :] += p * excited
    t[:, 1, :, :, 1, :] = (1 - p) * excited
    t[:, 0, :, :, 1, :] *= coherence
    t[:, 1, :, :, 0, :] *= coherence
    return t.reshape(rho.shape)


def _z_signs(n: int) -> np.ndarray:
    """``z[q, k]`` = +1/-1 eigenvalue of Z on qubit position q in basis state k."""
    k = np.arange(2 ** n)
    return np.array([1 - 2 * ((k >> (n - 1 - q)) & 1) for q in range(n)], dtype=float)


def _initial_state(initial, n: int) -> np.ndarray:
    if initial is None:
        return basis_state("0" * n)
    if isinstance(initial, str):
        if len(initial) != n:
            raise SimulationError(f"initial bitstring {initial!r} does not match {n} qubits")
        return basis_state(initial)
    arr = np.asarray(initial, dtype=complex)
    if arr.ndim == 1:
        arr = pure_state(arr)
    if arr.shape != (2 ** n, 2 ** n):
        raise SimulationError(f"initial state has shape {arr.shape}, expected {(2 ** n, 2 ** n)}")
    return arr.copy()


def simulate(
    circuit: ScheduledCircuit,
    device: DeviceModel,
    noise: NoiseConfig | None = None,
    initial=None,
) -> np.ndarray:
    """Evolve ``initial`` (default ``|0...0>``) through a scheduled circuit.

    ``initial`` may be a bitstring, a state vector or a density matrix over
    ``circuit.qubits``. Returns the final density matrix.
    """
    if not isinstance(circuit, ScheduledCircuit):
        raise SimulationError("simulate needs a ScheduledCircuit; schedule the circuit first")
    noise = noise or NoiseConfig()
    n = circuit.num_qubits
    if n > MAX_QUBITS:
        raise SimulationError(f"at most {MAX_QUBITS} qubits are supported, got {n}")
    rho = _initial_state(initial, n)
    pos = {q: i for i, q in enumerate(circuit.qubits)}
    z = _z_signs(n)
    dt_s = device.dt_seconds()
    dt_us = dt_s * 1e6

    zz_terms = [(tuple(sorted(p)), nu) for p, nu in noise.zz_pairs.items() if p <= set(pos) and nu != 0.0]
    # angle accumulated per dt; theta = 2 pi nu t
    zz_rate = {pair: 2 * math.pi * nu * 1e3 * dt_s for pair, nu in zz_terms}
    zz_vecs = {pair: z[pos[pair[0]]] * z[pos[pair[1]]] for pair, _ in zz_terms}
    det_vec = np.zeros(2 ** n)
    for q, f in noise.detunings.items():
        if q in pos and f:
            det_vec += 2 * math.pi * f * 1e3 * dt_s * z[pos[q]]
    relax = []
    if noise.relaxation_enabled:
        for q in circuit.qubits:
            props = device.qubit(q)
            relax.append((pos[q], props.t1, props.t2))

    gates = [inst for inst in circuit.instructions if inst.gate.is_physical]
    cx_spans = []
    if noise.rotary_echo:
        cx_spans = [
            (inst.start, inst.end, tuple(sorted(inst.qubits)))
            for inst in gates
            if len(inst.qubits) == 2 and inst.duration > 0 and tuple(sorted(inst.qubits)) in zz_rate
        ]
    bounds = {0, circuit.total_duration}
    bounds.update(inst.start for inst in gates)
    for s, e, _ in cx_spans:
        bounds.update((s, e))
    bounds = sorted(bounds)
    by_start: dict[int, list] = {}
    for inst in gates:
        by_start.setdefault(inst.start, []).append(inst)

    eps = noise.overrotation_epsilon
    for t0, t1 in zip(bounds, bounds[1:] + [None]):
        for inst in by_start.get(t0, ()):
            u = inst.gate.unitary(eps)
            rho = apply_unitary(rho, u, [pos[q] for q in inst.qubits])
        if t1 is None or t1 == t0:
            continue
        span = t1 - t0
        silenced = {pair for s, e, pair in cx_spans if s <= t0 < e}
        zz_phase = np.zeros(2 ** n)
        for pair, rate in zz_rate.items():
            if pair not in silenced:
                zz_phase += rate * span * zz_vecs[pair]
        det_phase = det_vec * span
        if noise.zz_mode == "pre_delay":
            rho = _diag_evolve(rho, zz_phase + det_phase)
            rho = _relax_all(rho, relax, span * dt_us)
        elif relax:
            rho = lindblad_step(rho, 0.5 * (zz_phase + det_phase), relax, span * dt_us)
        else:
            rho = _diag_evolve(rho, zz_phase + det_phase)
    check_density_matrix(rho)
    return rho


def _diag_evolve(rho: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """Conjugate by ``diag(exp(-i angles / 2))``."""
    if not np.any(angles):
        return rho
    d = np.exp(-0.5j * angles)
    return rho * np.outer(d, d.conj())


def _relax_all(rho, relax, duration_us):
    for p, t1, t2 in relax:
        rho = relaxation_channel(rho, p, duration_us, t1, t2)
    return rho


def _phi1(x: np.ndarray) -> np.ndarray:
    """``(exp(x) - 1) / x`` with the removable singularity filled in."""
    small = np.abs(x) < 1e-8
    safe = np.where(small, 1.0, x)
    return np.where(small, 1 + 0.5 * x, np.expm1(safe) / safe)


def lindblad_step(rho: np.ndarray, phases: np.ndarray, relax, duration_us: float) -> np.ndarray:
    """Exact joint evolution under a diagonal Hamiltonian and local T1/T2.

    ``phases[k]`` is the phase ``E_k t`` accumulated by basis state ``k`` over
    the step and ``relax`` lists ``(position, t1, t2)``. Entry rho[j, k] only
    feeds rho[j - e_q, k - e_q] through decay of a shared excitation, and for a
    Hamiltonian made of Z and ZZ terms the phase difference is linear in the
    shared bits. The generator is then a sum of commuting per-qubit 2x2 maps
    plus one common diagonal term, each exponentiated in closed form.
    """
    n = int(math.log2(rho.shape[0]))
    dim = 2 ** n
    e = np.asarray(phases, dtype=float)
    j, k = np.indices((dim, dim))
    common = j & k
    flip = j ^ k
    base = -1j * (e[j ^ common] - e[k ^ common])
    out = rho.astype(complex, copy=True)
    ediff = e[:, None] - e[None, :]
    rates = {p: (t1, t2) for p, t1, t2 in relax}
    for p in range(n):
        t1, t2 = rates.get(p, (math.inf, math.inf))
        if t2 > 2 * t1:
            raise ValueError(f"invalid coherence times: t2={t2} exceeds 2*t1={2 * t1}")
        if math.isfinite(t2):
            base = base - duration_us / t2 * ((flip >> (n - 1 - p)) & 1)
        g1 = duration_us / t1 if math.isfinite(t1) else 0.0
        lo, hi = 2 ** p, 2 ** (n - p - 1)
        t = out.reshape(lo, 2, hi, lo, 2, hi)
        ed = ediff.reshape(lo, 2, hi, lo, 2, hi)
        delta = -1j * (ed[:, 1, :, :, 1, :] - ed[:, 0, :, :, 0, :]) - g1
        x = t[:, 1, :, :, 1, :].copy()
        if g1:
            t[:, 0, :, :, 0, :] += g1 * _phi1(delta) * x
        t[:, 1, :, :, 1, :] = np.exp(delta) * x
    return out * np.exp(base)
