"""Staggered dynamical decoupling against ZZ crosstalk: device model, circuit
scheduling, DD insertion, density-matrix simulation and benchmark protocols."""

from .circuit import Circuit, ScheduledCircuit, find_idle_windows, schedule_alap, schedule_asap
from .dd import SEQUENCES, DDMode, DDPlan, StaggerRole, insert_dd, pulse_times, verify_identity
from .device import DeviceModel, compute_zz, load_device
from .experiments import (
    ExperimentResult,
    RBConfig,
    gen_rb_circuit,
    run_driven_idle,
    run_idle_idle,
    run_ramsey,
    run_rb,
    time_avg_fidelity,
)
from .fitting import FitModel, FitResult, fit_curve
from .sim import NoiseConfig, simulate

__version__ = "0.1.0"

__all__ = [
    "Circuit", "ScheduledCircuit", "find_idle_windows", "schedule_alap", "schedule_asap",
    "SEQUENCES", "DDMode", "DDPlan", "StaggerRole", "insert_dd", "pulse_times", "verify_identity",
    "DeviceModel", "compute_zz", "load_device",
    "ExperimentResult", "RBConfig", "gen_rb_circuit", "run_driven_idle", "run_idle_idle", "run_ramsey",
    "run_rb", "time_avg_fidelity",
    "FitModel", "FitResult", "fit_curve",
    "NoiseConfig", "simulate",
]
