import json
from pathlib import Path

import numpy as np
import pytest

from schouten_lab import cli, grid
from schouten_lab.errors import ArgumentError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def summary(out):
    return json.loads((Path(out) / "summary.json").read_text())


def test_certify_small(tmp_path):
    code = cli.main(["certify", "--suite", "concavity,derivatives,positivity",
                     "--trials", "300", "--out", str(tmp_path)])
    assert code == cli.EXIT_OK
    doc = summary(tmp_path)
    assert doc["passed"] and len(doc["assertions"]) >= 4
    assert {"timestamp", "host", "runtimes"} <= set(doc["metadata"])
    assert (tmp_path / "concavity.csv").exists()


def test_certify_deterministic_across_workers(tmp_path):
    docs = []
    for w in (1, 3):
        out = tmp_path / f"w{w}"
        assert cli.main(["certify", "--suite", "concavity,convexity,lorentz", "--trials", "400",
                         "--seed", "9", "--workers", str(w), "--out", str(out)]) == 0
        doc = summary(out)
        docs.append((doc["assertions"], doc["statistics"]))
        csv = (out / "convexity.csv").read_text()
        docs[-1] += (csv,)
    assert docs[0] == docs[1]


def test_conjecture_candidates_are_not_failures(tmp_path):
    code = cli.main(["certify", "--suite", "conjecture", "--n", "5", "--k", "3",
                     "--trials", "500", "--out", str(tmp_path)])
    assert code == 0
    assert "conjecture" in summary(tmp_path)["statistics"]


def test_solve_homogeneous(tmp_path):
    code = cli.main(["solve", "--config", str(CONFIGS / "homogeneous.json"),
                     "--out", str(tmp_path)])
    assert code == 0
    doc = summary(tmp_path)
    assert doc["statistics"]["closed_form_error"] <= 1e-10
    u, bg = grid.load_field(tmp_path / "fields" / "solution.bin")
    assert u.Nt == 64 and bg.n == 4


def test_geodesic_short_schedule(tmp_path):
    cfg = json.loads((CONFIGS / "geodesic.json").read_text())
    cfg["solver"] = {"s_schedule": [1.0, 0.5, 0.25, 0.125]}
    cfg["grid"] = {"Nt": 32, "Nx": 16}
    p = tmp_path / "g.json"
    p.write_text(json.dumps(cfg))
    assert cli.main(["geodesic", "--config", str(p), "--out", str(tmp_path / "o")]) == 0
    doc = summary(tmp_path / "o")
    assert doc["statistics"]["schedule_reached"] == [1.0, 0.5, 0.25, 0.125]
    assert (tmp_path / "o" / "geodesic.csv").exists()


def test_report_aggregates(tmp_path):
    assert cli.main(["certify", "--suite", "derivatives", "--trials", "50",
                     "--out", str(tmp_path / "a")]) == 0
    assert cli.main(["report", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "report.csv").read_text().count("\n") >= 2


def test_failed_solve_exits_1(tmp_path):
    cfg = json.loads((CONFIGS / "nonhomogeneous.json").read_text())
    cfg["solver"] = {"max_newton": 1, "homotopy_steps": 1}
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    assert cli.main(["solve", "--config", str(p), "--out", str(tmp_path / "o")]) == cli.EXIT_FAIL
    assert summary(tmp_path / "o")["passed"] is False


@pytest.mark.parametrize("argv", [
    ["bogus"],
    ["certify", "--suite", "nope", "--trials", "10"],
    ["certify", "--trials", "0"],
    ["certify", "--n", "40"],
])
def test_config_errors_exit_2(tmp_path, argv):
    assert cli.main(argv + ["--out", str(tmp_path)]) == cli.EXIT_CONFIG


def test_unknown_config_key(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"mystery": 1}))
    assert cli.main(["solve", "--config", str(p), "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    with pytest.raises(ArgumentError):
        cli.RunConfig.load("solve", p)


def test_field_from_spec():
    bg = grid.Background.synthetic(4, d=1)
    x = bg.coords(8)[0]
    f = cli.field_from_spec({"constant": 0.5, "modes": [
        {"amplitude": 0.1, "wavevector": [2], "phase": 0.3}]}, bg, 8)
    np.testing.assert_allclose(f, 0.5 + 0.1 * np.cos(2 * x + 0.3))
    assert np.all(cli.field_from_spec(1.5, bg, 8) == 1.5)
