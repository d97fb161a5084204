import json
import subprocess
import sys

import pytest

from staggered_dd.cli import main, parse_delays, parse_pairs, UsageError

FAST = ["--delays", "0:2560:1280", "--n-cliffords", "2"]


def test_zz_calc(capsys):
    assert main(["zz-calc", "--j", "1.93e-3", "--d0", "0.34", "--d1", "0.34", "--detuning", "0.09"]) == 0
    assert capsys.readouterr().out.strip() == "47.12 kHz"
    assert main(["zz-calc", "--pair", "11,14"]) == 0
    assert "tabulated" in capsys.readouterr().out
    assert main(["zz-calc", "--j", "0.002"]) == 1
    assert main(["zz-calc", "--pair", "11,12"]) == 1


def test_verify(capsys):
    assert main(["verify"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") >= 4


def test_parsers():
    assert parse_delays("1280:14080:1280")[-1] == 14080
    assert parse_delays("5,7") == (5, 7)
    assert parse_pairs("11,14/12,13") == [(11, 14), (12, 13)]
    for bad in ("1:2:0", "a:b:c", "10:5:1"):
        with pytest.raises(UsageError):
            parse_delays(bad)
    with pytest.raises(UsageError):
        parse_pairs("11/12")


def test_ramsey_requires_detuning(tmp_path, capsys):
    assert main(["run", "ramsey", "--output-dir", str(tmp_path)]) == 1
    assert "--detuning" in capsys.readouterr().err


def test_bad_flags_exit_one(tmp_path):
    assert main(["run", "idle-idle", "--mode", "sideways"]) == 1
    assert main(["run", "idle-idle", "--output-dir", str(tmp_path)]) == 1  # no seed
    assert main(["run", "idle-idle", "--seed", "1", "--pairs", "11,14", "--output-dir", str(tmp_path)]) == 1


def test_idle_idle_outputs_are_reproducible(tmp_path):
    args = ["run", "idle-idle", "--seed", "3", "--relaxation", "off", *FAST]
    assert main([*args, "--output-dir", str(tmp_path / "a")]) == 0
    assert main([*args, "--output-dir", str(tmp_path / "b")]) == 0
    for name in ("results.csv", "fits.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    first = (tmp_path / "a" / "manifest.json").read_bytes()
    assert main([*args, "--output-dir", str(tmp_path / "a"), "--force"]) == 0
    assert (tmp_path / "a" / "manifest.json").read_bytes() == first
    rows = (tmp_path / "a" / "results.csv").read_text().splitlines()
    assert rows[0].startswith("experiment,sequence,mode,pair")
    assert len(rows) == 1 + 2 * 3
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["seed"] == 3 and manifest["experiment"] == "idle-idle"


def test_force_guard(tmp_path, capsys):
    args = ["run", "driven-idle", "--seed", "1", *FAST, "--output-dir", str(tmp_path)]
    assert main(args) == 0
    assert main(args) == 1
    assert "--force" in capsys.readouterr().err
    assert main([*args, "--force"]) == 0


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 5, "mode": "standard", "delays": "0:1280:1280", "n_cliffords": 1}))
    out = tmp_path / "out"
    assert main(["run", "idle-idle", "--config", str(cfg), "--mode", "none", "--output-dir", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 5
    assert manifest["config"]["mode"] == "none"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"colour": "red"}))
    assert main(["run", "idle-idle", "--config", str(bad), "--output-dir", str(out)]) == 1


def _ramsey_freq(out, *extra):
    assert main(["run", "ramsey", "--detuning", "100", "--relaxation", "off", "--mode", "none",
                 "--delays", "2250:90000:2250", "--output-dir", str(out), *extra]) == 0
    fits = (out / "fits.csv").read_text().splitlines()
    return float(fits[1].split(",")[3])


def test_ramsey_run(tmp_path):
    assert _ramsey_freq(tmp_path / "a", "--zz", "0") == pytest.approx(100, abs=0.5)
    # the device's ~103 kHz ZZ on 13-14 pulls the fringe down to about 3 kHz
    assert _ramsey_freq(tmp_path / "b", "--zz", "20") == pytest.approx(80, abs=0.5)


def test_schedule_command(tmp_path, capsys):
    f = tmp_path / "c.txt"
    f.write_text("QUBITS 11,14\nH 11\nCX 11,14\nDELAY 11 #1000\n")
    assert main(["schedule", str(f)]) == 0
    assert "CX 11,14 @160" in capsys.readouterr().out
    f.write_text("QUBITS 11,14\nH 11\nDELAY 11 #2000\nCX 11,14\n")
    assert main(["schedule", str(f), "--mode", "standard"]) == 0
    out = capsys.readouterr().out
    assert "DD windows filled: 1" in out and "XP 11" in out
    assert main(["schedule", str(tmp_path / "missing.txt")]) == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "staggered_dd.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "staggered-dd" in proc.stdout
