"""Least-squares fits of decay and Ramsey curves."""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

MAX_EVALS = 20000


class FitError(RuntimeError):
    pass


class FitModel(str, enum.Enum):
    EXP_DECAY = "exp_decay"
    DAMPED_COSINE = "damped_cosine"


@dataclass(frozen=True)
class FitResult:
    """Fitted parameters.

    ``rate_or_freq`` is a decay rate in 1/us for EXP_DECAY and an oscillation
    frequency in kHz for DAMPED_COSINE. ``decay_time_us`` is the envelope time
    constant (inf when the fit found no decay).
    """

    model: FitModel
    amplitude: float
    rate_or_freq: float
    phase: float
    offset: float
    residual_rms: float
    decay_time_us: float = math.inf


def exp_decay(t, amplitude, rate, offset):
    return amplitude * np.exp(-rate * t) + offset


def damped_cosine(t, amplitude, inv_decay, freq, phase, offset):
    return amplitude * np.exp(-inv_decay * t) * np.cos(2 * np.pi * freq * t + phase) + offset


def peak_frequency(t: np.ndarray, y: np.ndarray) -> float:
    """Frequency (1/unit of ``t``) of the largest periodogram peak, DC excluded.

    Works on non-uniform grids by evaluating the transform directly.
    """
    t = np.asarray(t, float)
    y = np.asarray(y, float) - np.mean(y)
    span = t[-1] - t[0]
    step = np.min(np.diff(t))
    nyquist = 0.5 / step
    freqs = np.linspace(0, nyquist, max(64, int(8 * nyquist * span)))[1:]
    power = np.abs(np.exp(-2j * np.pi * np.outer(freqs, t)) @ y) ** 2
    return float(freqs[np.argmax(power)])


def _curve_fit(f, t, y, p0, bounds):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OptimizeWarning)
        try:
            popt, _ = curve_fit(f, t, y, p0=p0, bounds=bounds, maxfev=MAX_EVALS)
        except (RuntimeError, ValueError) as exc:
            raise FitError(f"{f.__name__} fit did not converge: {exc}") from None
    if not np.all(np.isfinite(popt)):
        raise FitError(f"{f.__name__} fit returned non-finite parameters {popt}")
    return popt


def fit_exp_decay(t_us, y) -> FitResult:
    t = np.asarray(t_us, float)
    y = np.asarray(y, float)
    if len(t) < 5:
        raise FitError(f"exponential fit needs at least 5 points, got {len(t)}")
    if np.ptp(y) < 1e-12:
        raise FitError("degenerate data: constant values carry no decay rate")
    offset0 = y[-1] - 0.1 * (y[0] - y[-1])
    amp0 = y[0] - offset0
    rate0 = 1.0 / max(t[-1] - t[0], 1e-12)
    p = _curve_fit(exp_decay, t, y, [amp0, rate0, offset0], ([-np.inf, 0, -np.inf], [np.inf, np.inf, np.inf]))
    rms = float(np.sqrt(np.mean((exp_decay(t, *p) - y) ** 2)))
    return FitResult(FitModel.EXP_DECAY, float(p[0]), float(p[1]), 0.0, float(p[2]), rms,
                     1.0 / p[1] if p[1] > 0 else math.inf)


def fit_damped_cosine(t_us, y) -> FitResult:
    t = np.asarray(t_us, float)
    y = np.asarray(y, float)
    if len(t) < 8:
        raise FitError(f"damped-cosine fit needs at least 8 points, got {len(t)}")
    if np.ptp(y) < 1e-12:
        raise FitError("degenerate data: constant values have no oscillation frequency")
    f0 = peak_frequency(t, y)
    offset0 = float(np.mean(y))
    amp0 = 0.5 * float(np.ptp(y))
    # phase guess from projecting onto the guessed tone
    z = np.sum((y - offset0) * np.exp(-2j * np.pi * f0 * t))
    phase0 = float(np.angle(z))
    p0 = [amp0, 0.1 / max(t[-1], 1e-12), f0, phase0, offset0]
    bounds = ([0, 0, 0, -np.inf, -np.inf], [np.inf, np.inf, np.inf, np.inf, np.inf])
    p = _curve_fit(damped_cosine, t, y, p0, bounds)
    amp, inv_decay, freq, phase, offset = (float(v) for v in p)
    phase = math.remainder(phase, 2 * math.pi)
    rms = float(np.sqrt(np.mean((damped_cosine(t, *p) - y) ** 2)))
    # frequency reported in kHz for t in us
    return FitResult(FitModel.DAMPED_COSINE, amp, freq * 1e3, phase, offset, rms,
                     1.0 / inv_decay if inv_decay > 0 else math.inf)


def fit_curve(result, model: FitModel | str) -> FitResult:
    """Fit an ExperimentResult's fidelity-vs-delay data."""
    model = FitModel(model)
    t_us = np.asarray(result.delays_ns, float) * 1e-3
    if model is FitModel.EXP_DECAY:
        return fit_exp_decay(t_us, result.fidelity)
    return fit_damped_cosine(t_us, result.fidelity)
