"""Benchmark protocols: RB with swept idle delays, idle-idle SRB, driven-idle, Ramsey.

Every run draws its randomness from one integer seed. Independent streams are
derived as ``default_rng([seed, stream])`` so Clifford sequences, SU(4) blocks
and shot noise never share state.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import partial
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import brentq

from .circuit import Circuit, ScheduledCircuit, gate_duration, schedule_alap
from .clifford import IDENTITY, clifford_table, sample_indices
from .dd import DDPlan, insert_dd
from .device import DeviceModel
from .fitting import FitModel, FitResult, fit_curve
from .gates import CX, H, RZ, Unitary
from .sim import NoiseConfig, marginal_population, simulate, trace_distance

DEFAULT_DELAYS = tuple(range(1280, 14081, 1280))
CLIFFORD_STREAM, SU4_STREAM, SHOT_STREAM = 0, 1, 2

RESULT_HEADER = ("experiment", "sequence", "mode", "pair", "delay_dt", "delay_ns", "fidelity", "seed")
FIT_HEADER = ("experiment", "model", "amplitude", "rate_or_freq", "phase", "offset", "residual_rms")


def stream(seed: int, which: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), which])


@dataclass(frozen=True)
class RBConfig:
    qubit_pair: tuple[int, int]
    n_cliffords: int = 8
    delays_2tau: tuple[int, ...] = DEFAULT_DELAYS
    seed: int = 0
    # independent random sequences averaged per delay point
    n_sequences: int = 1

    def __post_init__(self):
        object.__setattr__(self, "qubit_pair", tuple(self.qubit_pair))
        object.__setattr__(self, "delays_2tau", tuple(int(d) for d in self.delays_2tau))
        if len(self.qubit_pair) != 2 or self.qubit_pair[0] == self.qubit_pair[1]:
            raise ValueError(f"qubit_pair must be two distinct qubits, got {self.qubit_pair}")
        if self.n_cliffords < 1:
            raise ValueError("n_cliffords must be at least 1")
        if self.n_sequences < 1:
            raise ValueError("n_sequences must be at least 1")
        if not self.delays_2tau:
            raise ValueError("delays_2tau must not be empty")
        if list(self.delays_2tau) != sorted(self.delays_2tau) or min(self.delays_2tau) < 0:
            raise ValueError("delays_2tau must be non-negative and ascending")


@dataclass(frozen=True)
class ExperimentResult:
    experiment: str
    delays: tuple[int, ...]
    fidelity: tuple[float, ...]
    pair: tuple[int, ...] = ()
    sequence: str = "none"
    mode: str = "none"
    seed: int = 0
    dt_ns: Fraction = Fraction(2, 9)
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "delays", tuple(int(d) for d in self.delays))
        object.__setattr__(self, "fidelity", tuple(float(f) for f in self.fidelity))
        if len(self.delays) != len(self.fidelity):
            raise ValueError("delays and fidelity must have equal length")
        for f in self.fidelity:
            if not -1e-9 <= f <= 1 + 1e-9:
                raise ValueError(f"fidelity {f} outside [0, 1]")

    @property
    def delays_ns(self) -> list[float]:
        return [float(d * self.dt_ns) for d in self.delays]


def time_avg_fidelity(result: ExperimentResult) -> float:
    """Trapezoidal mean of F(t)/F(t0) over the sampled delay range."""
    if len(result.delays) < 2:
        raise ValueError("time-averaged fidelity needs at least two delay points")
    f0 = result.fidelity[0]
    if f0 <= 0:
        raise ValueError("time-averaged fidelity is undefined when F(0) = 0")
    t = np.asarray(result.delays, float)
    span = t[-1] - t[0]
    if span <= 0:
        raise ValueError("delays must span a positive interval")
    return float(trapezoid(np.asarray(result.fidelity) / f0, t) / span)


# -- circuit generation ------------------------------------------------------

def _native_order(pair: Sequence[int], device: DeviceModel) -> tuple[int, int]:
    coupling = device.coupling(*pair)
    if coupling is None:
        raise ValueError(f"qubits {pair[0]} and {pair[1]} are not coupled in the device")
    return coupling.control, coupling.target


def _append_word(circ: Circuit, word, local: tuple[int, int]) -> None:
    for name, qs in word:
        if name == "h":
            circ.append(H, (local[qs[0]],))
        elif name == "s":
            circ.append(RZ(math.pi / 2), (local[qs[0]],))
        else:
            circ.append(CX, (local[qs[0]], local[qs[1]]))


def sample_rb_cliffords(config: RBConfig) -> list[list[int]]:
    """Clifford indices for each of the config's random sequences."""
    rng = stream(config.seed, CLIFFORD_STREAM)
    return [sample_indices(rng, config.n_cliffords) for _ in range(config.n_sequences)]


def rb_circuit(
    config: RBConfig, device: DeviceModel, delay: int, cliffords: Sequence[int] | None = None
) -> Circuit:
    """Unscheduled RB circuit: each Clifford followed by a barrier-fenced delay, then the inverse."""
    local = _native_order(config.qubit_pair, device)
    table = clifford_table()
    if cliffords is None:
        cliffords = sample_rb_cliffords(config)[0]
    circ = Circuit(config.qubit_pair)
    total = IDENTITY
    for idx in cliffords:
        _append_word(circ, table.words[idx], local)
        total = total.then(table.elements[idx])
        circ.barrier()
        circ.delay(delay)
        circ.barrier()
    _append_word(circ, table.words[table.lookup(total.inverse())], local)
    circ.measure()
    return circ


def gen_rb_circuit(
    config: RBConfig, device: DeviceModel, delay: int | None = None, cliffords: Sequence[int] | None = None
) -> ScheduledCircuit:
    """ALAP-scheduled RB circuit for one delay (default: the first configured delay)."""
    delay = config.delays_2tau[0] if delay is None else delay
    return schedule_alap(rb_circuit(config, device, delay, cliffords), device)


def haar_unitary(rng: np.random.Generator, dim: int = 4) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a complex Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    q = q * (d / np.abs(d))
    return q / np.linalg.det(q) ** (1 / dim)


def su4_block_duration(pair: Sequence[int], device: DeviceModel) -> int:
    return gate_duration(Unitary(np.eye(4)), tuple(pair), device)


# -- running -----------------------------------------------------------------

def _plan_for(plan: DDPlan | None, qubits: Iterable[int]) -> DDPlan | None:
    if plan is None:
        return None
    keep = set(qubits)
    return DDPlan(plan.sequence, plan.mode, {q: r for q, r in plan.role_assignment.items() if q in keep})


def _with_dd(sched: ScheduledCircuit, plan: DDPlan | None, device: DeviceModel, min_window: int):
    if plan is None:
        return sched
    return insert_dd(sched, plan, device, min_window=min_window)[0]


def _readout(rho, positions, bits, shots, rng) -> float:
    p = marginal_population(rho, positions, bits)
    if not shots:
        return p
    return rng.binomial(shots, min(max(p, 0.0), 1.0)) / shots


def _map(fn: Callable, items: Sequence, workers: int | None) -> list:
    if workers and workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _label(plan: DDPlan | None) -> tuple[str, str]:
    if plan is None:
        return "none", "none"
    return plan.sequence.name, plan.mode.value


def _rb_point(delay, *, configs, cliffords, plan, device, noise, extra=None):
    """Return probabilities of ``|00>`` per config, averaged over the random sequences."""
    totals = np.zeros(len(configs))
    n_seq = len(cliffords[0])
    for k in range(n_seq):
        circ = None
        for cfg, cl in zip(configs, cliffords):
            part = rb_circuit(cfg, device, delay, cl[k])
            circ = part if circ is None else circ.extend(part)
        if extra is not None:
            circ.extend(extra(delay, k))
        sched = _with_dd(schedule_alap(circ, device), plan, device, min_window=delay)
        rho = simulate(sched, device, noise)
        pos = {q: i for i, q in enumerate(sched.qubits)}
        totals += [marginal_population(rho, [pos[q] for q in cfg.qubit_pair], "00") for cfg in configs]
    return list(totals / n_seq)


def _result(experiment, cfg, delays, probs, plan, device, shots, **meta) -> ExperimentResult:
    sequence, mode = _label(plan)
    rng = stream(cfg.seed, SHOT_STREAM)
    fid = [p if not shots else rng.binomial(shots, min(max(p, 0.0), 1.0)) / shots for p in probs]
    return ExperimentResult(
        experiment, delays, fid, tuple(cfg.qubit_pair), sequence, mode, cfg.seed, device.dt_ns,
        {"n_cliffords": cfg.n_cliffords, "n_sequences": cfg.n_sequences, "shots": shots, **meta},
    )


def run_rb(
    config: RBConfig,
    plan: DDPlan | None,
    device: DeviceModel,
    noise: NoiseConfig,
    *,
    shots: int | None = None,
    workers: int | None = None,
) -> ExperimentResult:
    """Isolated two-qubit RB, the baseline for both multi-pair experiments."""
    fn = partial(
        _rb_point, configs=(config,), cliffords=(sample_rb_cliffords(config),),
        plan=_plan_for(plan, config.qubit_pair), device=device, noise=noise,
    )
    probs = [p[0] for p in _map(fn, config.delays_2tau, workers)]
    return _result("rb", config, config.delays_2tau, probs, plan, device, shots)


def run_idle_idle(
    pair_a: RBConfig,
    pair_b: RBConfig,
    plan: DDPlan | None,
    device: DeviceModel,
    noise: NoiseConfig,
    *,
    shots: int | None = None,
    workers: int | None = None,
) -> tuple[ExperimentResult, ExperimentResult]:
    """Simultaneous RB on two adjacent pairs; DD (if any) goes on both pairs."""
    a, b = set(pair_a.qubit_pair), set(pair_b.qubit_pair)
    if a & b:
        raise ValueError(f"pairs {pair_a.qubit_pair} and {pair_b.qubit_pair} overlap")
    if not any(len(p & a) == 1 and len(p & b) == 1 for p in noise.zz_pairs):
        raise ValueError("idle-idle needs at least one ZZ coupling between the two pairs")
    if pair_a.delays_2tau != pair_b.delays_2tau:
        raise ValueError("both pairs must sweep the same delays")
    if pair_a.n_sequences != pair_b.n_sequences:
        raise ValueError("both pairs must use the same number of random sequences")
    fn = partial(
        _rb_point, configs=(pair_a, pair_b),
        cliffords=(sample_rb_cliffords(pair_a), sample_rb_cliffords(pair_b)),
        plan=_plan_for(plan, a | b), device=device, noise=noise,
    )
    probs = _map(fn, pair_a.delays_2tau, workers)
    return (
        _result("idle_idle", pair_a, pair_a.delays_2tau, [p[0] for p in probs], plan, device, shots),
        _result("idle_idle", pair_b, pair_b.delays_2tau, [p[1] for p in probs], plan, device, shots),
    )


def _driven_circuit(delay, k, *, rb, cliffords, driven_pair, blocks, device) -> Circuit:
    rb_len = schedule_alap(rb_circuit(rb, device, delay, cliffords[k]), device).total_duration
    block = su4_block_duration(driven_pair, device)
    count = rb_len // block
    circ = Circuit(tuple(driven_pair))
    for u in blocks[k][:count]:
        circ.unitary(u, *driven_pair)
    if rb_len - count * block:
        circ.delay(rb_len - count * block)
    return circ


def run_driven_idle(
    rb: RBConfig,
    driven_pair: tuple[int, int],
    plan: DDPlan | None,
    device: DeviceModel,
    noise: NoiseConfig,
    *,
    shots: int | None = None,
    workers: int | None = None,
) -> ExperimentResult:
    """RB on one pair while the neighbour runs back-to-back Haar SU(4) blocks.

    The block count is ``floor(RB duration / block duration)`` with the
    remainder padded by a delay; DD is applied to the RB pair only.
    """
    driven_pair = tuple(driven_pair)
    if set(driven_pair) & set(rb.qubit_pair):
        raise ValueError(f"pairs {rb.qubit_pair} and {driven_pair} overlap")
    block = su4_block_duration(driven_pair, device)
    if block <= 0:
        raise ValueError("SU(4) block duration must be positive")
    a, b = set(rb.qubit_pair), set(driven_pair)
    if not any(len(p & a) == 1 and len(p & b) == 1 for p in noise.zz_pairs):
        raise ValueError("driven-idle needs a ZZ coupling between the RB pair and the driven pair")
    cliffords = sample_rb_cliffords(rb)
    su4_rng = stream(rb.seed, SU4_STREAM)
    blocks = []
    for cl in cliffords:
        longest = schedule_alap(rb_circuit(rb, device, rb.delays_2tau[-1], cl), device).total_duration
        blocks.append([haar_unitary(su4_rng) for _ in range(longest // block)])
    extra = partial(_driven_circuit, rb=rb, cliffords=cliffords, driven_pair=driven_pair, blocks=blocks, device=device)
    fn = partial(
        _rb_point, configs=(rb,), cliffords=(cliffords,), plan=_plan_for(plan, rb.qubit_pair),
        device=device, noise=noise, extra=extra,
    )
    probs = [p[0] for p in _map(fn, rb.delays_2tau, workers)]
    return _result("driven_idle", rb, rb.delays_2tau, probs, plan, device, shots,
                   driven_pair=list(driven_pair), block_duration=block)


def ramsey_circuit(
    qubit: int, spectator: int, delay: int, detuning_khz: float, device: DeviceModel, virtual: bool = True
) -> Circuit:
    circ = Circuit((qubit, spectator))
    circ.h(qubit)
    circ.barrier()
    circ.delay(delay)
    circ.barrier()
    if virtual:
        # frame ramp sign chosen so a positive ZZ (spectator in |0>) lowers the fringe frequency
        circ.rz(-2 * math.pi * detuning_khz * 1e3 * delay * device.dt_seconds(), qubit)
    circ.h(qubit)
    circ.measure()
    return circ


def _ramsey_point(delay, *, qubit, spectator, detuning_khz, plan, device, noise, virtual):
    circ = ramsey_circuit(qubit, spectator, delay, detuning_khz, device, virtual)
    sched = _with_dd(schedule_alap(circ, device), plan, device, min_window=0)
    rho = simulate(sched, device, noise)
    return marginal_population(rho, [0], "0")


def run_ramsey(
    qubit: int,
    spectator: int,
    detuning: float,
    plan: DDPlan | None,
    delays: Sequence[int],
    device: DeviceModel,
    noise: NoiseConfig,
    zz_mode: str = "continuous",
    *,
    detuning_mode: str = "virtual",
    seed: int = 0,
    shots: int | None = None,
    workers: int | None = None,
) -> ExperimentResult:
    """Ramsey fringe of ``qubit`` with ``spectator`` held in ``|0>``.

    ``detuning`` (kHz) is applied as a frame ramp before the final pulse by
    default, so DD on the qubit does not echo it away. DD pulses go on both
    the qubit and the spectator.
    """
    delays = tuple(int(d) for d in delays)
    if not delays:
        raise ValueError("run_ramsey needs at least one delay")
    if list(delays) != sorted(delays):
        raise ValueError("delays must be ascending")
    if not detuning > 0:
        raise ValueError("detuning must be positive")
    if detuning_mode not in ("virtual", "physical"):
        raise ValueError(f"detuning_mode must be 'virtual' or 'physical', got {detuning_mode!r}")
    virtual = detuning_mode == "virtual"
    noise = replace(noise, zz_mode=zz_mode)
    if not virtual:
        noise = replace(noise, detunings={**noise.detunings, qubit: detuning})
    fn = partial(
        _ramsey_point, qubit=qubit, spectator=spectator, detuning_khz=detuning,
        plan=_plan_for(plan, (qubit, spectator)), device=device, noise=noise, virtual=virtual,
    )
    probs = _map(fn, delays, workers)
    cfg = RBConfig((qubit, spectator), delays_2tau=delays, seed=seed)
    return _result("ramsey", cfg, delays, probs, plan, device, shots,
                   detuning_khz=detuning, zz_mode=zz_mode, detuning_mode=detuning_mode)


def ramsey_frequency(zz_khz: float, *, qubit, spectator, detuning, plan, delays, device, noise, **kwargs) -> float:
    """Fitted Ramsey frequency (kHz) with the qubit-spectator ZZ set to ``zz_khz``."""
    pairs = {**noise.zz_pairs, frozenset((qubit, spectator)): zz_khz}
    res = run_ramsey(qubit, spectator, detuning, plan, delays, device, replace(noise, zz_pairs=pairs), **kwargs)
    return fit_curve(res, FitModel.DAMPED_COSINE).rate_or_freq


def tune_zz_for_frequency(target_khz: float, *, bracket: tuple[float, float], **kwargs) -> float:
    """ZZ strength (kHz) inside ``bracket`` at which the fitted Ramsey
    frequency equals ``target_khz``."""
    return brentq(lambda nu: ramsey_frequency(nu, **kwargs) - target_khz, *bracket, xtol=1e-6)


# -- CSV ---------------------------------------------------------------------

def _pair_label(pair) -> str:
    return "-".join(str(q) for q in pair)


def results_csv(results: Iterable[ExperimentResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_HEADER)
    for r in results:
        for d, ns, f in zip(r.delays, r.delays_ns, r.fidelity):
            w.writerow((r.experiment, r.sequence, r.mode, _pair_label(r.pair), d, repr(ns), repr(f), r.seed))
    return buf.getvalue()


def fits_csv(rows: Iterable[tuple[str, FitResult]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIT_HEADER)
    for experiment, fit in rows:
        w.writerow((experiment, fit.model.value, repr(fit.amplitude), repr(fit.rate_or_freq),
                    repr(fit.phase), repr(fit.offset), repr(fit.residual_rms)))
    return buf.getvalue()


# -- single-qubit DD error under a static ZZ neighbour -----------------------

CARDINAL_STATES = {
    "0": np.array([1, 0], complex),
    "1": np.array([0, 1], complex),
    "+": np.array([1, 1], complex) / math.sqrt(2),
    "-": np.array([1, -1], complex) / math.sqrt(2),
    "+i": np.array([1, 1j], complex) / math.sqrt(2),
    "-i": np.array([1, -1j], complex) / math.sqrt(2),
}


def idle_dd_error(
    sequence: str,
    device: DeviceModel,
    qubit: int,
    spectator: int,
    zz_khz: float,
    epsilon: float = 0.0,
    window: int = 1280,
    repetitions: int = 4,
    state: str = "+",
) -> float:
    """Trace distance between the noisy and ideal final states after
    ``repetitions`` DD windows on ``qubit`` while ``spectator`` idles in ``|0>``.

    ``state`` names the qubit's initial cardinal state (see CARDINAL_STATES).
    """
    circ = Circuit((qubit, spectator))
    for _ in range(repetitions):
        circ.barrier()
        circ.delay(window)
    circ.barrier()
    sched = schedule_alap(circ, device)
    with_dd, _ = insert_dd(sched, DDPlan.standard(sequence, (qubit,)), device)
    psi = np.kron(CARDINAL_STATES[state], [1, 0])
    rho0 = np.outer(psi, psi.conj())
    ideal = simulate(sched, device, None, rho0)
    noisy = simulate(with_dd, device, NoiseConfig(zz_pairs={(qubit, spectator): zz_khz},
                                                  overrotation_epsilon=epsilon), rho0)
    return trace_distance(noisy, ideal)


def mean_idle_dd_error(sequence: str, device: DeviceModel, qubit: int, spectator: int, zz_khz: float, **kwargs) -> float:
    """``idle_dd_error`` averaged over the six cardinal input states."""
    return float(np.mean([
        idle_dd_error(sequence, device, qubit, spectator, zz_khz, state=s, **kwargs) for s in CARDINAL_STATES
    ]))
