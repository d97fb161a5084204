"""Command-line entry point.

    staggered-dd zz-calc --j 1.93e-3 --d0 0.34 --d1 0.34 --detuning 0.09
    staggered-dd run idle-idle --seed 7 --sequence x2pm --mode staggered --output-dir out/
    staggered-dd run ramsey --detuning 100 --output-dir out/
    staggered-dd verify

Exit status is 0 on success, 1 on invalid input and 2 when a simulation or
fit fails.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .circuit import ScheduleError, dumps, loads, schedule_alap
from .dd import SEQUENCES, DDPlan, insert_dd, verify_identity, zz_algebra_deviations
from .device import DEVICE_ENV_VAR, DeviceError, compute_zz, load_device
from .experiments import (
    DEFAULT_DELAYS,
    RBConfig,
    fits_csv,
    results_csv,
    run_driven_idle,
    run_idle_idle,
    run_ramsey,
)
from .fitting import FitError, FitModel, fit_curve
from .sim import NoiseConfig, SimulationError

log = logging.getLogger("staggered_dd")

ALGEBRA_TOL = 1e-10
OUTPUT_FILES = ("results.csv", "fits.csv", "manifest.json")
MIN_FIT_POINTS = {FitModel.EXP_DECAY: 5, FitModel.DAMPED_COSINE: 8}


class UsageError(Exception):
    """Invalid command-line input (exit status 1)."""


# -- argument parsing --------------------------------------------------------

def parse_delays(text: str) -> tuple[int, ...]:
    """``start:stop:step`` in dt, stop inclusive, or a comma list."""
    try:
        if ":" in text:
            start, stop, step = (int(v) for v in text.split(":"))
            if step <= 0:
                raise UsageError("--delays step must be positive")
            values = tuple(range(start, stop + 1, step))
        else:
            values = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"--delays: cannot parse {text!r}; use start:stop:step") from None
    if not values:
        raise UsageError(f"--delays {text!r} is empty")
    return values


def parse_pairs(text: str) -> list[tuple[int, int]]:
    pairs = []
    for chunk in text.split("/"):
        try:
            a, b = (int(v) for v in chunk.split(","))
        except ValueError:
            raise UsageError(f"--pairs: cannot parse {chunk!r}; use a,b/c,d") from None
        pairs.append((a, b))
    return pairs


def _on_off(text: str) -> bool:
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return text == "on"


def _add_run_flags(p: argparse.ArgumentParser, experiment: str) -> None:
    p.add_argument("--config", help="JSON file of option values; explicit flags take precedence")
    p.add_argument("--device", help=f"device JSON file (default: ${DEVICE_ENV_VAR} or the bundled device)")
    p.add_argument("--sequence", default="x2pm", choices=sorted(SEQUENCES))
    p.add_argument("--mode", default="staggered", choices=["standard", "staggered", "staggered-inv", "none"])
    p.add_argument("--epsilon", type=float, default=0.0, help="pi-pulse over-rotation in radians")
    p.add_argument("--zz-mode", default="continuous", choices=["continuous", "pre-delay"])
    p.add_argument("--relaxation", type=_on_off, default=True, metavar="{on,off}")
    p.add_argument("--rotary-echo", type=_on_off, default=True, metavar="{on,off}",
                   help="suppress a pair's ZZ while a CX drives that pair")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--shots", type=int, default=None, help="binomial shot sampling (default: exact)")
    p.add_argument("--workers", type=int, default=None, help="parallel processes over delay points")
    p.add_argument("--output-dir", default=None)
    p.add_argument("--force", action="store_true", help="overwrite existing output files")
    if experiment == "ramsey":
        p.add_argument("--detuning", type=float, default=None, help="frame detuning in kHz (required)")
        p.add_argument("--qubit", type=int, default=14)
        p.add_argument("--spectator", type=int, default=13)
        p.add_argument("--zz", type=float, default=None,
                       help="override the qubit-spectator ZZ strength in kHz")
        p.add_argument("--delays", default="2250:135000:2250", help="start:stop:step in dt, stop inclusive")
    else:
        p.add_argument("--pairs", default="11,14/12,13", help="RB pair / neighbour pair, as a,b/c,d")
        p.add_argument("--n-cliffords", type=int, default=8)
        p.add_argument("--n-sequences", type=int, default=1, help="random sequences averaged per point")
        p.add_argument("--delays", default=f"{DEFAULT_DELAYS[0]}:{DEFAULT_DELAYS[-1]}:{DEFAULT_DELAYS[1] - DEFAULT_DELAYS[0]}",
                       help="start:stop:step in dt, stop inclusive")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="staggered-dd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    zz = sub.add_parser("zz-calc", help="static ZZ strength from the perturbative formula")
    zz.add_argument("--j", type=float, help="coupling J in GHz")
    zz.add_argument("--d0", type=float, help="anharmonicity magnitude of qubit 0 in GHz")
    zz.add_argument("--d1", type=float, help="anharmonicity magnitude of qubit 1 in GHz")
    zz.add_argument("--detuning", type=float, help="qubit frequency difference in GHz")
    zz.add_argument("--device", help="device JSON file, used with --pair")
    zz.add_argument("--pair", help="coupled pair a,b taken from the device")

    run = sub.add_parser("run", help="simulate an experiment and write CSV output")
    run_sub = run.add_subparsers(dest="experiment", required=True)
    parser.run_parsers = {}
    for name in ("idle-idle", "driven-idle", "ramsey"):
        parser.run_parsers[name] = run_sub.add_parser(name)
        _add_run_flags(parser.run_parsers[name], name)

    sub.add_parser("verify", help="check the ZZ/Pauli algebra and DD identity compositions")

    sched = sub.add_parser("schedule", help="ALAP-schedule a text-format circuit, optionally inserting DD")
    sched.add_argument("circuit", help="circuit file in the GATE q0[,q1] [@start] [#duration] format, or -")
    sched.add_argument("--device", help="device JSON file")
    sched.add_argument("--sequence", default="x2pm", choices=sorted(SEQUENCES))
    sched.add_argument("--mode", default="none", choices=["standard", "staggered", "staggered-inv", "none"])
    sched.add_argument("--pairs", help="coupled pairs a,b/c,d for staggered roles (default: the circuit qubits)")
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    path = getattr(args, "config", None)
    if not path:
        return args
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"--config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"--config {path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise UsageError("--config must hold a JSON object")
    defaults = {}
    for key, value in doc.items():
        dest = key.replace("-", "_")
        if dest in ("command", "experiment", "config") or not hasattr(args, dest):
            raise UsageError(f"--config: unknown option {key!r}")
        defaults[dest] = value
    # file values become defaults, so explicit flags still win on re-parse
    parser.run_parsers[args.experiment].set_defaults(**defaults)
    return parser.parse_args(argv)


# -- commands ----------------------------------------------------------------

def cmd_zz_calc(args) -> int:
    if args.pair:
        device = load_device(args.device)
        a, b = parse_pairs(args.pair)[0]
        c = device.coupling(a, b)
        if c is None:
            raise UsageError(f"qubits {a} and {b} are not coupled in {device.name or 'the device'}")
        derived = device.derived_zz_khz(c)
        print(f"pair {c.control},{c.target}: formula {derived:.2f} kHz", end="")
        if c.zz_strength is not None:
            print(f", tabulated {c.zz_strength:.2f} kHz", end="")
        print()
        return 0
    missing = [f"--{n}" for n in ("j", "d0", "d1", "detuning") if getattr(args, n) is None]
    if missing:
        raise UsageError(f"zz-calc needs {', '.join(missing)} (or --pair)")
    print(f"{compute_zz(args.j, args.d0, args.d1, args.detuning):.2f} kHz")
    return 0


def cmd_verify(args) -> int:
    ok = True
    for key, dev in zz_algebra_deviations().items():
        passed = dev < ALGEBRA_TOL
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'} algebra {key}: max deviation {dev:.2e}")
    for name, seq in SEQUENCES.items():
        passed = verify_identity(seq)
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'} identity {seq.name}")
    return 0 if ok else 1


def cmd_schedule(args) -> int:
    try:
        text = sys.stdin.read() if args.circuit == "-" else Path(args.circuit).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {args.circuit}: {exc.strerror}") from None
    device = load_device(args.device)
    sched = schedule_alap(loads(text), device)
    if args.mode != "none":
        if args.pairs:
            pairs = parse_pairs(args.pairs)
        elif args.mode == "standard":
            pairs = [(q,) for q in sched.qubits]
        else:
            raise UsageError("--pairs is required for staggered modes")
        sched, report = insert_dd(sched, _plan(args, pairs), device)
        print(f"# DD windows filled: {report.n_inserted}, skipped: {report.n_skipped}")
    sys.stdout.write(dumps(sched))
    return 0


def _plan(args, pairs):
    if args.mode == "none":
        return None
    return DDPlan.build(args.sequence, args.mode, pairs)


def _noise(args, device, qubits, **extra) -> NoiseConfig:
    return NoiseConfig.from_device(
        device, qubits,
        relaxation_enabled=args.relaxation,
        overrotation_epsilon=args.epsilon,
        zz_mode=args.zz_mode.replace("-", "_"),
        rotary_echo=args.rotary_echo,
        **extra,
    )


def _check_output(args) -> Path:
    if not args.output_dir:
        raise UsageError("--output-dir is required")
    out = Path(args.output_dir)
    if out.exists() and not out.is_dir():
        raise UsageError(f"--output-dir {out} is not a directory")
    existing = [f for f in OUTPUT_FILES if (out / f).exists()]
    if existing and not args.force:
        raise UsageError(f"{out} already holds {', '.join(existing)}; pass --force to overwrite")
    return out


def _manifest(args, device) -> dict:
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("force", "verbose", "workers", "config")}
    return {
        "tool": "staggered-dd",
        "version": __version__,
        "command": "run",
        "experiment": args.experiment,
        "seed": args.seed,
        "device": device.name,
        "config": config,
    }


def _fits(results, model: FitModel) -> list:
    need = MIN_FIT_POINTS[model]
    if len(results[0].delays) < need:
        print(f"warning: {model.value} fit needs {need} delay points; fits.csv left empty", file=sys.stderr)
        return []
    return [(r.experiment, fit_curve(r, model)) for r in results]


def cmd_run(args) -> int:
    out = _check_output(args)
    if args.shots is not None and args.shots <= 0:
        raise UsageError("--shots must be positive")
    device = load_device(args.device)
    delays = parse_delays(args.delays)

    if args.experiment == "ramsey":
        if args.detuning is None:
            raise UsageError("run ramsey requires --detuning (kHz)")
        if args.detuning <= 0:
            raise UsageError("--detuning must be positive")
        if args.shots and args.seed is None:
            raise UsageError("--shots needs --seed")
        qubits = (args.qubit, args.spectator)
        noise = _noise(args, device, qubits)
        if args.zz is not None:
            noise = replace(noise, zz_pairs={**noise.zz_pairs, frozenset(qubits): args.zz})
        plan = _plan(args, [qubits])
        result = run_ramsey(args.qubit, args.spectator, args.detuning, plan, delays, device, noise,
                            noise.zz_mode, seed=args.seed or 0, shots=args.shots, workers=args.workers)
        results = [result]
        fits = _fits(results, FitModel.DAMPED_COSINE)
    else:
        if args.seed is None:
            raise UsageError(f"run {args.experiment} requires --seed")
        pairs = parse_pairs(args.pairs)
        if len(pairs) != 2:
            raise UsageError("--pairs needs exactly two pairs, e.g. 11,14/12,13")
        qubits = tuple(q for p in pairs for q in p)
        noise = _noise(args, device, qubits)
        cfg_a = RBConfig(pairs[0], args.n_cliffords, delays, args.seed, args.n_sequences)
        if args.experiment == "idle-idle":
            cfg_b = RBConfig(pairs[1], args.n_cliffords, delays, args.seed + 1, args.n_sequences)
            results = list(run_idle_idle(cfg_a, cfg_b, _plan(args, pairs), device, noise,
                                         shots=args.shots, workers=args.workers))
        else:
            results = [run_driven_idle(cfg_a, pairs[1], _plan(args, pairs[:1]), device, noise,
                                       shots=args.shots, workers=args.workers)]
        fits = _fits(results, FitModel.EXP_DECAY)

    out.mkdir(parents=True, exist_ok=True)
    (out / "results.csv").write_text(results_csv(results))
    (out / "fits.csv").write_text(fits_csv(fits))
    (out / "manifest.json").write_text(json.dumps(_manifest(args, device), indent=2, sort_keys=True) + "\n")
    for r in results:
        log.info("%s pair %s: %d points", r.experiment, r.pair, len(r.delays))
    print(f"wrote {', '.join(OUTPUT_FILES)} to {out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        # argparse reports usage problems with status 2; map them to 1
        return 0 if exc.code in (0, None) else 1
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    commands = {"zz-calc": cmd_zz_calc, "run": cmd_run, "verify": cmd_verify, "schedule": cmd_schedule}
    try:
        return commands[args.command](args)
    except (UsageError, DeviceError, ScheduleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SimulationError, FitError, np.linalg.LinAlgError) as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
