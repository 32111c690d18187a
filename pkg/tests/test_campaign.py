import json

import pytest

from translab import campaign as cp


def _tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_defaults_filled():
    cfg = cp.normalize_config({"models": ["poisson"], "seed": 1})
    for key in ("n_grid", "p_grid", "replicas", "delta", "K", "N", "t_grid", "certify"):
        assert getattr(cfg, key) == cp.DEFAULTS[key]
    assert cfg.tasks == [] and cfg.workers >= 1


def test_missing_seed():
    with pytest.raises(cp.ConfigError) as exc:
        cp.normalize_config({"models": ["poisson"]})
    assert "seed required" in exc.value.errors


def test_all_errors_reported_together():
    with pytest.raises(cp.ConfigError) as exc:
        cp.normalize_config({"models": ["poisson"], "p_grid": [1.5], "colour": "blue"})
    errs = exc.value.errors
    assert "seed required" in errs
    assert "unknown key 'colour'" in errs
    assert "p=1.5 outside the supported range (0, 1]" in errs


def test_topology_mismatch():
    with pytest.raises(cp.ConfigError) as exc:
        cp.normalize_config({"models": ["cbe:beta=2", "sine:m=32"], "seed": 1, "tasks": ["dyadic", "shiftcoupling"]})
    text = " ".join(exc.value.errors)
    assert "'dyadic' needs the interval topology" in text
    assert "'shiftcoupling' needs the torus topology" in text


@pytest.mark.parametrize("bad", [{"delta": 0.3}, {"replicas": 1}, {"K": 0}, {"tasks": ["dance"]},
                                 {"n_grid": [32, 16]}, {"models": []}, {"seed": -1}, {"certify": "yes"}])
def test_field_validation(bad):
    with pytest.raises(cp.ConfigError):
        cp.normalize_config({"models": ["poisson"], "seed": 1, **bad})


def test_validate_config_file_errors(tmp_path):
    with pytest.raises(cp.ConfigError, match="not found"):
        cp.validate_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(cp.ConfigError, match="invalid JSON"):
        cp.validate_config(bad)


def test_env_overrides_output_dir(monkeypatch, tmp_path):
    monkeypatch.setenv(cp.OUTPUT_ENV, str(tmp_path / "elsewhere"))
    cfg = cp.normalize_config({"models": ["poisson"], "seed": 1, "output_dir": "ignored"})
    assert cfg.output_dir == str(tmp_path / "elsewhere")


def test_digest_ignores_output_location():
    a = cp.normalize_config({"models": ["poisson"], "seed": 1, "output_dir": "a", "workers": 1})
    b = cp.normalize_config({"models": ["poisson"], "seed": 1, "output_dir": "b", "workers": 3})
    c = cp.normalize_config({"models": ["poisson"], "seed": 2})
    assert a.digest() == b.digest() != c.digest()


def test_empty_task_list(tmp_path):
    cfg = cp.normalize_config({"models": ["poisson"], "seed": 1, "output_dir": str(tmp_path / "o")})
    status, out = cp.run_campaign(cfg)
    assert status == cp.EXIT_OK
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["tasks"] == [] and manifest["status"] == 0


SMALL = {
    "models": ["poisson", "lattice:sigma=0.5"],
    "seed": 7,
    "n_grid": [8, 16, 32],
    "p_grid": [0.3, 0.7],
    "replicas": 100,
    "K": 3,
    "tasks": ["variance", "absdev", "cost", "dyadic"],
}


def test_rerun_is_byte_identical(tmp_path):
    a = cp.normalize_config({**SMALL, "output_dir": str(tmp_path / "a")})
    b = cp.normalize_config({**SMALL, "output_dir": str(tmp_path / "b")})
    sa, oa = cp.run_campaign(a)
    sb, ob = cp.run_campaign(b)
    assert sa == sb == cp.EXIT_OK
    ta, tb = _tree(oa), _tree(ob)
    assert ta == tb
    assert any(k.endswith(".csv") for k in ta) and "manifest.json" in ta


def test_csv_format(tmp_path):
    cfg = cp.normalize_config({**SMALL, "tasks": ["variance"], "models": ["poisson"],
                               "output_dir": str(tmp_path)})
    cp.run_campaign(cfg)
    csvs = sorted(tmp_path.glob("*.csv"))
    assert csvs
    raw = csvs[0].read_bytes()
    assert b"\r" not in raw
    assert raw.splitlines()[0] == b"n,mean,se,R"


def test_torus_campaign(tmp_path):
    cfg = cp.normalize_config({"models": ["cpoisson"], "seed": 3, "N": 64, "t_grid": [4, 8, 16], "replicas": 10,
                               "tasks": ["shiftcoupling"], "output_dir": str(tmp_path)})
    status, out = cp.run_campaign(cfg)
    assert status == cp.EXIT_OK
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["tasks"][0]["status"] == "ok"


def test_failed_task_gives_exit_2(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("solver exploded")

    monkeypatch.setattr(cp, "_task_cost", boom)
    cfg = cp.normalize_config({**SMALL, "tasks": ["cost", "variance"], "models": ["poisson"],
                               "output_dir": str(tmp_path)})
    status, out = cp.run_campaign(cfg)
    assert status == cp.EXIT_TASK_FAILED
    entries = json.loads((out / "manifest.json").read_text())["tasks"]
    assert entries[0]["status"] == "failed" and "solver exploded" in entries[0]["error"]
    assert entries[1]["status"] == "ok"


def test_fmt_and_slug():
    assert [cp.fmt(v) for v in (0.1, 3, 2.0, float("nan"), True)] == ["0.1", "3", "2", "nan", "1"]
    # shortest round-trip representation
    assert float(cp.fmt(1 / 3)) == 1 / 3
    assert "/" not in cp.slug("renewal:law=gamma,shape=4")
