import csv
import io
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from scipy import special

from robinlab.cli import main

DATA = Path(__file__).resolve().parent.parent / "data" / "polygons"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, list(csv.DictReader(io.StringIO(out)))


def test_curve_passes_through_zero_points(capsys):
    code, rows = run(capsys, "curve", "--n", 2, "--kappa", 0, 1, "--alpha-min", -4,
                     "--alpha-max", 2, "--alpha-steps", 40)
    assert code == 0
    pts = {(r["kappa"], float(r["alpha"])): float(r["lambda"]) for r in rows}
    assert pts[("0", 0.0)] == 0.0
    assert pts[("1", -1.0)] == 0.0
    assert pts[("1", 0.0)] == pytest.approx(3.38995771667, abs=1e-10)
    for k in ("0", "1"):
        branch = sorted((float(r["alpha"]), float(r["lambda"])) for r in rows if r["kappa"] == k)
        assert np.all(np.diff([b[1] for b in branch]) > 0)
        assert branch[0][0] == -4.0 and branch[-1][0] == 2.0


@pytest.mark.parametrize("argv", [
    ["curve", "--alpha-min", "1", "--alpha-max", "1"],
    ["curve", "--alpha-min", "1"],
    ["spectrum"],
    ["eigenfunction"],
    ["verify", "--alpha", "0"],
    ["nonsense"],
    ["spectrum", "--alpha", "abc"],
])
def test_usage_errors(capsys, argv):
    assert main(argv) == 2


def test_eigenfunction_straight_line(capsys):
    code, rows = run(capsys, "eigenfunction", "--n", 2, "--kappa", 1, "--alpha", -1)
    assert code == 0 and len(rows) == 101
    for r in rows:
        assert float(r["g"]) == pytest.approx(float(r["r"]), abs=1e-12)


def test_eigenfunction_constant(capsys):
    code, rows = run(capsys, "eigenfunction", "--kappa", 0, "--alpha", 0, "--r-max", 2)
    assert code == 0
    assert all(float(r["g"]) == 1.0 for r in rows)


def test_eigenfunction_dirichlet_limit(capsys):
    code, rows = run(capsys, "eigenfunction", "--kappa", 0, "--alpha", 1e6)
    assert code == 0
    j01 = 2.4048255576957727686
    for r in rows:
        x = float(r["r"])
        assert float(r["g"]) == pytest.approx(special.j0(j01 * x), abs=1e-3)


def test_spectrum_ball_and_fem(capsys):
    code, rows = run(capsys, "spectrum", "--n", 3, "--alpha", 0, "--count", 4)
    assert code == 0
    lam = [float(r["lambda"]) for r in rows]
    assert lam[1] == lam[2] == lam[3] == pytest.approx(4.33295855143, rel=1e-11)
    code, rows = run(capsys, "spectrum", "--domain", DATA / "square.json", "--mesh-h", 0.08,
                     "--alpha", 0, "--count", 2)
    assert code == 0 and float(rows[1]["lambda"]) == pytest.approx(math.pi**2, rel=1e-2)


def test_bounds(capsys):
    code, rows = run(capsys, "bounds", "--n", 2, "--alpha-steps", 21)
    assert code == 0 and len(rows) == 21
    assert all(r["within"] == "1" for r in rows)


def test_output_is_deterministic(tmp_path):
    outs = []
    for i in range(2):
        p = tmp_path / f"out{i}.csv"
        assert main(["spectrum", "--domain", str(DATA / "l_shape.json"), "--mesh-h", "0.1",
                     "--alpha-min", "-2", "--alpha-max", "0", "--alpha-steps", "3",
                     "--count", "3", "--out", str(p)]) == 0
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]
    assert not list(tmp_path.glob(".robinlab-*"))


def test_verify_square_passes(capsys):
    code, rows = run(capsys, "verify", "--domain", DATA / "square.json", "--mesh-h", 0.08,
                     "--alpha-steps", 4)
    assert code == 0
    assert len(rows) == 4
    assert all(r["pass"] == "1" and r["chain_ok"] == "1" for r in rows)
    assert all(float(r["margin"]) > 0 for r in rows)
    assert all(float(r["lambda2_fem"]) <= float(r["weinberger_bound"]) + 1e-8 for r in rows)


def test_verify_disk_has_small_margins(capsys):
    code, rows = run(capsys, "verify", "--domain", DATA / "disk.json", "--mesh-h", 0.06,
                     "--alpha-steps", 3)
    assert code == 0
    assert max(abs(float(r["margin"])) for r in rows) < 1e-2


def test_verify_failure_exit_code(capsys):
    # a negative tolerance demands a margin the square cannot supply
    code = main(["verify", "--domain", str(DATA / "square.json"), "--mesh-h", "0.1",
                 "--alpha", "0", "--tol", "-100"])
    assert code == 5


def test_parse_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{vertices: oops")
    assert main(["verify", "--domain", str(bad)]) == 3
    assert main(["steklov", "--domain", str(tmp_path / "missing.json")]) == 3
    line = tmp_path / "line.json"
    line.write_text('{"vertices": [[0, 0], [1, 0], [2, 0]]}')
    assert main(["spectrum", "--domain", str(line), "--alpha", "0"]) == 3


def test_solver_error_exit_code():
    # no negative shell eigenvalues exist for alpha > 0
    assert main(["oracle", "--alpha", "0.5", "--r-in", "0.2", "--points", "2000"]) == 4


def test_oracle_agreement(capsys):
    code, rows = run(capsys, "oracle", "--n", 2, "--alpha", -7, "--which", "lambda2",
                     "--r-in", 0.1, 0.2)
    assert code == 0
    for r in rows:
        assert abs(float(r["det_minus_fd"])) < 1e-4
        assert float(r["advantage_det"]) == pytest.approx(float(r["advantage_fd"]), abs=1e-4)


def test_transition_lambda1_two_dimensions(capsys):
    code, rows = run(capsys, "transition", "--n", 2, "--which", "lambda1")
    assert code == 0
    assert float(rows[0]["alpha_star"]) == pytest.approx(-7.2875, abs=1e-2)
    assert rows[0]["degenerate"] == "0"


def test_steklov_square(capsys):
    code, rows = run(capsys, "steklov", "--domain", DATA / "square.json", "--mesh-h", 0.08)
    assert code == 0
    assert rows[0]["sigma_ok"] == "1" and rows[0]["mu_ok"] == "1"
    assert float(rows[0]["sigma1_disk"]) == pytest.approx(math.sqrt(math.pi), rel=1e-11)


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "robinlab.cli", "--help"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "transition" in res.stdout
