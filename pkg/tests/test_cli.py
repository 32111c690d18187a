import csv
import json
import subprocess
import sys

import pytest

from translab.cli import main, parse_grid


def _csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_parse_grid():
    assert parse_grid("16,32") == [16, 32]
    assert parse_grid("2^4..2^6") == [16, 32, 64]
    assert parse_grid("0.3,2^1..2^2") == [0.3, 2, 4]


def test_sample_then_transport(tmp_path):
    pts = tmp_path / "pts.csv"
    assert main(["sample", "--model", "poisson", "--n", "16", "--replicas", "3", "--seed", "4", "--out", str(pts)]) == 0
    rows = _csv(pts)
    assert rows[0] == ["replica", "point"]
    side = json.loads((tmp_path / "pts.csv.json").read_text())
    assert side["model"] == "poisson" and side["n"] == 16 and len(side["counts"]) == 3
    plan = tmp_path / "plan.json"
    assert main(["transport", "--points", str(pts), "--p", "0.5", "--delta", "0.125", "--out", str(plan)]) == 0
    d = json.loads(plan.read_text())
    assert {"cost", "l", "r", "a", "b", "assignments"} <= set(d)
    assert sum(a["mass"] for a in d["assignments"]) == pytest.approx(side["counts"][0])


def test_sample_is_reproducible(tmp_path):
    for name in ("a.csv", "b.csv"):
        main(["sample", "--model", "cbe:beta=2", "--n", "32", "--seed", "9", "--out", str(tmp_path / name)])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_transport_needs_window(tmp_path, capsys):
    pts = tmp_path / "p.csv"
    pts.write_text("point\n0.5\n")
    assert main(["transport", "--points", str(pts), "--p", "0.5", "--out", str(tmp_path / "o.json")]) == 2
    assert "window length unknown" in capsys.readouterr().err


def test_dyadic(tmp_path):
    out = tmp_path / "d.csv"
    assert main(["dyadic", "--model", "poisson", "--K", "3", "--p", "0.3", "--replicas", "5", "--seed", "1",
                 "--delta", "0.125", "--out", str(out)]) == 0
    rows = _csv(out)
    assert rows[0] == ["level", "mean_cbar", "se_cbar", "mean_increment", "bound_term"] and len(rows) == 5


def test_curve_variance(tmp_path):
    out = tmp_path / "v.csv"
    assert main(["curve", "--stat", "variance", "--model", "poisson", "--ngrid", "2^3..2^5", "--replicas", "200",
                 "--seed", "1", "--out", str(out)]) == 0
    rows = _csv(out)
    assert rows[0] == ["n", "mean", "se", "R"] and [r[0] for r in rows[1:]] == ["8", "16", "32"]
    assert json.loads((tmp_path / "v.csv.json").read_text())["R"] == 200


def test_curve_cost_requires_p(tmp_path, capsys):
    assert main(["curve", "--stat", "cost", "--model", "poisson", "--seed", "1", "--out",
                 str(tmp_path / "c.csv")]) == 2
    assert "--p is required" in capsys.readouterr().err


def test_threshold(tmp_path):
    out = tmp_path / "t.json"
    assert main(["threshold", "--model", "lattice:sigma=0.5", "--pgrid", "0.5", "--ngrid", "8,16,32",
                 "--replicas", "100", "--seed", "1", "--out", str(out)]) == 0
    d = json.loads(out.read_text())
    assert d["growth_model"] == "bounded" and d["p_star_variance"] == 1.0


def test_shiftcoupling(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["shiftcoupling", "--model", "cpoisson", "--N", "64", "--tgrid", "4,8,16", "--replicas", "10",
                 "--seed", "1", "--out", str(out)]) == 0
    assert _csv(out)[0] == ["t", "lhs_mean", "lhs_se", "rhs_mean", "rhs_se", "margin"]
    meta = json.loads((tmp_path / "s.csv.json").read_text())
    assert meta["instance_violations"] == 0


def test_validate_and_run(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"models": ["poisson"], "seed": 2, "tasks": ["variance"], "n_grid": [8, 16],
                               "replicas": 100, "output_dir": str(tmp_path / "out")}))
    assert main(["validate", "--config", str(cfg)]) == 0
    assert json.loads(capsys.readouterr().out)["seed"] == 2
    assert main(["run", "--config", str(cfg)]) == 0
    assert (tmp_path / "out" / "manifest.json").exists()


def test_validate_reports_every_error(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"models": ["poisson"], "p_grid": [1.5]}))
    assert main(["validate", "--config", str(cfg)]) == 1
    err = capsys.readouterr().err
    assert "seed required" in err and "p=1.5 outside the supported range (0, 1]" in err
    assert main(["run", "--config", str(cfg)]) == 1


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "translab.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("sample", "transport", "dyadic", "curve", "threshold", "shiftcoupling", "run", "validate"):
        assert cmd in res.stdout
