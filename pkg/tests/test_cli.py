import json
import os
import subprocess
import sys

import pytest

from topoqubit import __version__
from topoqubit.cli import main
from topoqubit.config import SCHEMAS, ConfigError, parse_config


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_spectrum_pass_and_artifacts(tmp_path, capsys):
    code, out, _ = run(capsys, "spectrum", "--out", str(tmp_path))
    assert code == 0
    assert out.startswith("PASS spectrum") and len(out.strip().splitlines()) == 1
    doc = json.loads((tmp_path / "spectrum.json").read_text())
    assert doc["tool_version"] == __version__ and len(doc["config_hash"]) == 64
    assert [r["ground_degeneracy"] for r in doc["result"]["runs"]] == [2, 2]
    csv_text = (tmp_path / "spectrum_eigenvalues.csv").read_text()
    assert csv_text.startswith(f"# tool_version={__version__} config_hash={doc['config_hash']}")
    assert csv_text.splitlines()[1] == "M,index,eigenvalue_rad_per_s"


@pytest.mark.parametrize("command", ["spectrum", "trotter", "feasibility"])
def test_outputs_are_byte_identical(tmp_path, capsys, command):
    cfg = write(tmp_path / "c.json", {"experiment": command})
    for d in ("a", "b"):
        assert run(capsys, command, "--config", cfg, "--out", str(tmp_path / d))[0] == 0
    files = sorted(os.listdir(tmp_path / "a"))
    assert files == sorted(os.listdir(tmp_path / "b"))
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_feasibility_reproduces_benchmark_numbers(tmp_path, capsys):
    code, out, _ = run(capsys, "feasibility", "--out", str(tmp_path))
    assert code == 0 and "tau_c 3.183 us" in out and "48.36 MHz" in out
    doc = json.loads((tmp_path / "feasibility.json").read_text())
    assert doc["result"]["checks"] == {"tau_c": True, "beta": True, "infidelity": True}


def test_trotter_reports_ratio_near_four(tmp_path, capsys):
    code, out, _ = run(capsys, "trotter", "--out", str(tmp_path))
    assert code == 0
    ratios = json.loads((tmp_path / "trotter.json").read_text())["result"]["halving_ratios"]
    assert all(3 <= r <= 5 for r in ratios)


def test_threshold_failure_exits_one(tmp_path, capsys):
    cfg = write(tmp_path / "c.json", {"params": {"ratio_min": 4.5}})
    code, out, _ = run(capsys, "trotter", "--config", cfg, "--out", str(tmp_path))
    assert code == 1 and out.startswith("FAIL trotter")


def test_single_cell_lattice_warns_and_reports_zero_gap(tmp_path, capsys):
    cfg = write(tmp_path / "c.json", {"params": {"M_values": [1]}})
    code, out, err = run(capsys, "spectrum", "--config", cfg, "--out", str(tmp_path))
    assert code == 1 and "warning" in err
    doc = json.loads((tmp_path / "spectrum.json").read_text())
    assert doc["result"]["runs"][0]["gap"] == 0.0 and doc["warnings"]


@pytest.mark.parametrize("content,key", [
    ({"params": {"bogus_key": 1}}, "params.bogus_key"),
    ({"params": {"M_values": "two"}}, "params.M_values"),
    ({"params": {"chi_x_rad_per_s": -1.0}}, "params.chi_x_rad_per_s"),
    ({"params": {"expected_degeneracy": 2.5}}, "params.expected_degeneracy"),
    ({"experiment": "gate"}, "experiment"),
    ({"extra": {}}, "extra"),
])
def test_config_errors_exit_two_and_name_the_key(tmp_path, capsys, content, key):
    cfg = write(tmp_path / "c.json", content)
    code, _, err = run(capsys, "spectrum", "--config", cfg, "--out", str(tmp_path))
    assert code == 2 and f"'{key}'" in err


def test_invalid_json_and_missing_file_exit_two(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    assert run(capsys, "spectrum", "--config", str(bad))[0] == 2
    assert run(capsys, "spectrum", "--config", str(tmp_path / "missing.json"))[0] == 2


def test_guard_violation_exits_three(tmp_path, capsys):
    cfg = write(tmp_path / "c.json", {"params": {"M_values": [4]}})
    code, _, err = run(capsys, "spectrum", "--config", cfg, "--out", str(tmp_path))
    assert code == 3 and "DimensionGuardError" in err
    cfg = write(tmp_path / "t.json", {"params": {"tau_chi_start": 0.2}})
    assert run(capsys, "trotter", "--config", cfg, "--out", str(tmp_path))[0] == 3


def schedule_spec(**params):
    base = {"kind": "trotter", "M": 2, "beta_rad_per_s": 0.1, "delta_rad_per_s": 100.0,
            "tau_s": 0.06283185307179587, "cycles": 2}
    base.update(params)
    return {"params": base}


def test_schedule_compile_and_validate(tmp_path, capsys):
    spec = write(tmp_path / "s.json", schedule_spec())
    out = str(tmp_path / "sched.json")
    code, line, _ = run(capsys, "schedule", "compile", "--spec", spec, "--out", out)
    assert code == 0 and line.startswith("PASS schedule compile")
    doc = json.loads(open(out).read())
    assert doc["metadata"]["tool_version"] == __version__ and "config_hash" in doc["metadata"]
    assert run(capsys, "schedule", "validate", out)[0] == 0


def test_schedule_compile_prep(tmp_path, capsys):
    spec = write(tmp_path / "s.json", schedule_spec(kind="prep", T_ramp_s=0.6283185307179586, steps=10))
    out = str(tmp_path / "prep.json")
    assert run(capsys, "schedule", "compile", "--spec", spec, "--out", out)[0] == 0
    assert run(capsys, "schedule", "validate", out)[0] == 0


def test_schedule_validate_failures(tmp_path, capsys):
    spec = write(tmp_path / "s.json", schedule_spec())
    out = tmp_path / "sched.json"
    run(capsys, "schedule", "compile", "--spec", spec, "--out", str(out))
    doc = json.loads(out.read_text())
    doc["slices"][0]["duration_s"] *= 1.5
    tampered = write(tmp_path / "tampered.json", doc)
    code, line, _ = run(capsys, "schedule", "validate", tampered)
    assert code == 1 and "geometric closure" in line
    doc["version"] = 2
    assert run(capsys, "schedule", "validate", write(tmp_path / "v2.json", doc))[0] == 2
    assert run(capsys, "schedule", "validate", str(tmp_path / "none.json"))[0] == 2


def test_schedule_compile_errors(tmp_path, capsys):
    missing_doc = schedule_spec()
    del missing_doc["params"]["tau_s"]
    code, _, err = run(capsys, "schedule", "compile", "--spec", write(tmp_path / "m2.json", missing_doc),
                       "--out", str(tmp_path / "x.json"))
    assert code == 2 and "params.tau_s" in err
    # beta = 1, delta = 100 gives chi = 0.04, so tau = 2 pi means tau * chi = 0.25 > 0.05
    big = write(tmp_path / "g.json", schedule_spec(beta_rad_per_s=1.0, tau_s=2 * 3.141592653589793))
    assert run(capsys, "schedule", "compile", "--spec", big, "--out", str(tmp_path / "y.json"))[0] == 3
    # 1.43 loops cannot be snapped to a closed loop
    off = write(tmp_path / "o.json", schedule_spec(tau_s=0.09))
    assert run(capsys, "schedule", "compile", "--spec", off, "--out", str(tmp_path / "z.json"))[0] == 3


def test_config_hash_tracks_resolved_parameters():
    a = parse_config({}, "gate")
    b = parse_config({"params": {"n_max": 15}}, "gate")
    c = parse_config({"params": {"n_max": 20}}, "gate")
    assert a.config_hash() == b.config_hash() != c.config_hash()
    assert set(a.params) == set(SCHEMAS["gate"])
    with pytest.raises(ConfigError):
        parse_config({}, "unknown")


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "topoqubit.cli", "feasibility", "--out", str(tmp_path)],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.startswith("PASS feasibility")
