import math

import numpy as np
import pytest

from staggered_dd.experiments import ExperimentResult
from staggered_dd.fitting import FitError, FitModel, fit_curve, fit_damped_cosine, fit_exp_decay, peak_frequency


def test_damped_cosine_recovers_100khz():
    t = np.arange(1, 61) * 0.5  # us
    y = 0.5 + 0.5 * np.exp(-t / 40) * np.cos(2 * np.pi * 0.1 * t)
    fit = fit_damped_cosine(t, y)
    assert fit.model is FitModel.DAMPED_COSINE
    assert fit.rate_or_freq == pytest.approx(100, abs=0.1)
    assert fit.decay_time_us == pytest.approx(40, rel=1e-3)
    assert fit.residual_rms < 1e-8


def test_damped_cosine_with_noise_and_phase():
    rng = np.random.default_rng(2)
    t = np.linspace(0.2, 30, 80)
    y = 0.45 + 0.4 * np.exp(-t / 25) * np.cos(2 * np.pi * 0.0917 * t + 0.6) + rng.normal(0, 0.005, t.size)
    fit = fit_damped_cosine(t, y)
    assert fit.rate_or_freq == pytest.approx(91.7, abs=0.5)
    assert fit.phase == pytest.approx(0.6, abs=0.1)


def test_exp_decay_rate():
    t = np.linspace(0, 3, 11)
    y = 0.7 * np.exp(-0.8 * t) + 0.25
    fit = fit_exp_decay(t, y)
    assert fit.rate_or_freq == pytest.approx(0.8, rel=0.01)
    assert fit.offset == pytest.approx(0.25, abs=1e-4)


def test_peak_frequency():
    t = np.linspace(0, 10, 200)
    assert peak_frequency(t, np.cos(2 * np.pi * 1.3 * t)) == pytest.approx(1.3, abs=0.05)


def test_degenerate_and_short_inputs():
    t = np.linspace(0, 1, 10)
    with pytest.raises(FitError, match="degenerate"):
        fit_exp_decay(t, np.ones(10))
    with pytest.raises(FitError, match="degenerate"):
        fit_damped_cosine(t, np.full(10, 0.3))
    with pytest.raises(FitError, match="at least 5"):
        fit_exp_decay(t[:4], t[:4])
    with pytest.raises(FitError, match="at least 8"):
        fit_damped_cosine(t[:7], np.cos(t[:7]))


def test_fit_curve_on_result():
    delays = [2250 * k for k in range(1, 61)]  # 0.5 us steps
    t_us = np.array(delays) * 2 / 9 * 1e-3
    fid = 0.5 + 0.5 * np.cos(2 * np.pi * 0.1 * t_us)
    res = ExperimentResult("ramsey", delays, fid)
    assert fit_curve(res, "damped_cosine").rate_or_freq == pytest.approx(100, abs=0.1)
    assert math.isinf(fit_curve(res, FitModel.DAMPED_COSINE).decay_time_us) or \
        fit_curve(res, FitModel.DAMPED_COSINE).decay_time_us > 1e3
    with pytest.raises(ValueError):
        fit_curve(res, "gaussian")
