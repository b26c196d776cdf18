import csv
import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from rssm.cli import EXIT_BUDGET, EXIT_OK, EXIT_VALIDATION, main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def read_table(path):
    lines = Path(path).read_text().splitlines()
    assert lines[0].startswith("# config_sha256=")
    return {row[0]: row[1] for row in csv.reader(lines[2:])}


def test_dims_reports_unit_dimension(tmp_path):
    assert main(["dims", "--config", str(CONFIGS / "thirds.yaml"), "--out", str(tmp_path)]) == EXIT_OK
    report = read_table(tmp_path / "dims.csv")
    assert float(report["similarity_dimension"]) == pytest.approx(1.0, abs=1e-12)
    resolved = json.loads((tmp_path / "config.resolved.json").read_text())
    assert resolved["perturbation"]["kind"] == "spline"  # defaults materialized


def test_check_flags_uniform_as_inadmissible(tmp_path):
    assert main(["check", "--config", str(CONFIGS / "uniform.yaml"), "--out", str(tmp_path)]) == EXIT_OK
    report = read_table(tmp_path / "check.csv")
    assert float(report["s_prime"]) > 1
    assert report["fourier_decay_admissible"] == "false"
    main(["check", "--config", str(CONFIGS / "positive.yaml"), "--out", str(tmp_path)])
    assert read_table(tmp_path / "check.csv")["fourier_decay_admissible"] == "true"


@pytest.mark.parametrize("command", ["spectrum", "interior", "density"])
def test_reruns_are_byte_identical(tmp_path, command):
    args = [command, "--config", str(CONFIGS / "smoke.yaml"), "--trials", "100", "--seed", "12"]
    assert main(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "b"), "--threads", "3"]) == EXIT_OK
    files = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
    assert files
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seed_changes_output(tmp_path):
    base = ["interior", "--config", str(CONFIGS / "smoke.yaml"), "--trials", "2"]
    main(base + ["--seed", "1", "--out", str(tmp_path / "a")])
    main(base + ["--seed", "2", "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "interior.csv").read_bytes() != (tmp_path / "b" / "interior.csv").read_bytes()


def test_validation_error_exit(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("ifs:\n  ratios: [0.5, 1.5]\n  translations: [0, 1]\n")
    out = tmp_path / "out"
    assert main(["dims", "--config", str(bad), "--out", str(out)]) == EXIT_VALIDATION
    record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert record["error"] == "validation" and record["exit_code"] == EXIT_VALIDATION
    assert json.loads((out / "error.json").read_text()) == record
    typo = tmp_path / "typo.yaml"
    typo.write_text("dpeth: 4\n")
    assert main(["dims", "--config", str(typo), "--out", str(out)]) == EXIT_VALIDATION
    assert main(["dims", "--config", str(tmp_path / "missing.yaml")]) == EXIT_VALIDATION


def test_budget_exit(tmp_path):
    args = ["density", "--config", str(CONFIGS / "smoke.yaml"), "--depth", "30", "--out", str(tmp_path)]
    assert main(args) == EXIT_BUDGET
    assert json.loads((tmp_path / "error.json").read_text())["error"] == "budget_exceeded"


def test_plot_data(tmp_path):
    smoke = ["--config", str(CONFIGS / "smoke.yaml"), "--out", str(tmp_path)]
    for command in ("density", "spectrum", "moments"):
        assert main([command] + smoke) == EXIT_OK
    assert main(["plot-data", "--out", str(tmp_path)]) == EXIT_OK
    rows = [list(map(float, line.split())) for line in
            (tmp_path / "density_ball.dat").read_text().splitlines()[1:]]
    xs = [r[0] for r in rows]
    assert xs == sorted(xs) and all(len(r) == 2 for r in rows)
    spectrum = (tmp_path / "spectrum_oracle.dat").read_text().splitlines()
    xi, modulus = map(float, spectrum[1].split())
    assert xi == 1.0 and 0 < modulus <= 1
    moments = (tmp_path / "moments.dat").read_text().splitlines()
    assert "alpha=" in moments[0] and "intercept=" in moments[0]
    assert all(math.isfinite(float(v)) for line in moments[1:] for v in line.split())
    assert main(["plot-data", "--out", str(tmp_path / "nothing")]) == EXIT_VALIDATION


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "rssm.cli", "dims", "--config",
                           str(CONFIGS / "thirds.yaml"), "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "dims.csv").exists()
