"""Config-driven experiment campaigns with deterministic, provenance-stamped outputs."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .samplers import INTERVAL, TORUS, ProcessModel

log = logging.getLogger(__name__)

OUTPUT_ENV = "LAB_OUTPUT_DIR"
TASKS = ("variance", "absdev", "cost", "dyadic", "threshold", "shiftcoupling")
INTERVAL_TASKS = {"cost", "dyadic", "threshold"}
TORUS_TASKS = {"shiftcoupling"}

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_TASK_FAILED = 2

DEFAULTS = {
    "n_grid": [16, 32, 64, 128, 256],
    "p_grid": [0.3],
    "replicas": 200,
    "delta": 0.125,
    "output_dir": "lab_output",
    "tasks": [],
    "K": 8,
    "N": 512,
    "t_grid": [8, 16, 32, 64, 128],
    "workers": None,
    "certify": False,
}
REQUIRED = ("models", "seed")


@dataclass
class CampaignConfig:
    models: list
    seed: int
    n_grid: list = field(default_factory=lambda: list(DEFAULTS["n_grid"]))
    p_grid: list = field(default_factory=lambda: list(DEFAULTS["p_grid"]))
    replicas: int = DEFAULTS["replicas"]
    delta: float = DEFAULTS["delta"]
    output_dir: str = DEFAULTS["output_dir"]
    tasks: list = field(default_factory=list)
    K: int = DEFAULTS["K"]
    N: int = DEFAULTS["N"]
    t_grid: list = field(default_factory=lambda: list(DEFAULTS["t_grid"]))
    workers: int | None = None
    certify: bool = False

    def canonical(self) -> dict:
        d = asdict(self)
        d.pop("output_dir")
        d.pop("workers")
        return d

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def _is_int(x):
    return isinstance(x, int) and not isinstance(x, bool)


def _is_num(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _check_grid(name, g, errors, integer=False):
    if not isinstance(g, list) or not g:
        errors.append(f"{name} must be a non-empty list")
        return
    if not all(_is_num(v) for v in g):
        errors.append(f"{name} entries must be finite numbers")
        return
    if any(v <= 0 for v in g) or any(b <= a for a, b in zip(g, g[1:])):
        errors.append(f"{name} must be positive and strictly increasing")
    if integer and any(v != int(v) for v in g):
        errors.append(f"{name} entries must be integers")


def normalize_config(raw: dict) -> CampaignConfig:
    """Fill defaults and check the config; every problem is reported in one :class:`ConfigError`."""
    errors = []
    if not isinstance(raw, dict):
        raise ConfigError(["config must be a JSON object"])
    known = set(DEFAULTS) | set(REQUIRED)
    for k in sorted(set(raw) - known):
        errors.append(f"unknown key {k!r}")
    if "seed" not in raw or raw["seed"] is None:
        errors.append("seed required")
    elif not _is_int(raw["seed"]) or not 0 <= raw["seed"] < 2**64:
        errors.append("seed must be an integer in [0, 2**64)")
    vals = {**DEFAULTS, **{k: v for k, v in raw.items() if k in known}}
    models = []
    if "models" not in raw:
        errors.append("models required")
    elif not isinstance(raw["models"], list) or not raw["models"]:
        errors.append("models must be a non-empty list of model specs")
    else:
        for spec in raw["models"]:
            try:
                models.append(ProcessModel.parse(spec))
            except (ValueError, TypeError) as exc:
                errors.append(f"model {spec!r}: {exc}")
    tasks = vals["tasks"]
    if not isinstance(tasks, list) or any(t not in TASKS for t in tasks):
        errors.append(f"tasks must be a list drawn from {list(TASKS)}")
        tasks = []
    if len(set(tasks)) != len(tasks):
        errors.append("tasks must not repeat")
    _check_grid("n_grid", vals["n_grid"], errors)
    _check_grid("p_grid", vals["p_grid"], errors)
    _check_grid("t_grid", vals["t_grid"], errors)
    if isinstance(vals["p_grid"], list) and all(_is_num(p) for p in vals["p_grid"]):
        for p in vals["p_grid"]:
            if not 0 < p <= 1:
                errors.append(f"p={p} outside the supported range (0, 1]")
        if "dyadic" in tasks and any(p >= 1 for p in vals["p_grid"]):
            errors.append("dyadic task needs every p in (0, 1)")
        if "threshold" in tasks and any(p >= 1 for p in vals["p_grid"]):
            errors.append("threshold task needs every p in (0, 1)")
    if not _is_int(vals["replicas"]) or vals["replicas"] < 2:
        errors.append("replicas must be an integer >= 2")
    elif {"variance", "absdev", "threshold"} & set(tasks) and vals["replicas"] < 100:
        errors.append("variance, absdev and threshold tasks need replicas >= 100")
    if not _is_num(vals["delta"]) or vals["delta"] <= 0 or abs(1 / vals["delta"] - round(1 / vals["delta"])) > 1e-9:
        errors.append("delta must be positive with 1/delta an integer")
    if not _is_int(vals["K"]) or vals["K"] < 1:
        errors.append("K must be an integer >= 1")
    if not _is_int(vals["N"]) or vals["N"] < 2:
        errors.append("N must be an integer >= 2")
    elif isinstance(vals["t_grid"], list) and all(_is_num(t) for t in vals["t_grid"]):
        if "shiftcoupling" in tasks and any(t > vals["N"] / 2 for t in vals["t_grid"]):
            errors.append("t_grid must lie in (0, N/2]")
    if vals["workers"] is not None and (not _is_int(vals["workers"]) or vals["workers"] < 1):
        errors.append("workers must be a positive integer")
    if not isinstance(vals["certify"], bool):
        errors.append("certify must be true or false")
    if not isinstance(vals["output_dir"], str) or not vals["output_dir"]:
        errors.append("output_dir must be a non-empty string")
    for m in models:
        for t in tasks:
            if t in INTERVAL_TASKS and INTERVAL not in m.topologies:
                errors.append(f"task {t!r} needs the interval topology but model {m.spec!r} is torus-only")
            if t in TORUS_TASKS and TORUS not in m.topologies:
                errors.append(f"task {t!r} needs the torus topology but model {m.spec!r} is interval-only")
            if t in ("variance", "absdev") and INTERVAL not in m.topologies:
                if isinstance(vals["n_grid"], list) and vals["n_grid"] and _is_num(vals["n_grid"][-1]) \
                        and _is_int(vals["N"]) and vals["n_grid"][-1] > vals["N"]:
                    errors.append(f"arc lengths in n_grid exceed the torus size N for model {m.spec!r}")
    if errors:
        raise ConfigError(errors)
    return CampaignConfig(
        models=[m.spec for m in models],
        seed=int(raw["seed"]),
        n_grid=[float(v) if not float(v).is_integer() else int(v) for v in vals["n_grid"]],
        p_grid=[float(p) for p in vals["p_grid"]],
        replicas=int(vals["replicas"]),
        delta=float(vals["delta"]),
        output_dir=os.environ.get(OUTPUT_ENV) or vals["output_dir"],
        tasks=list(tasks),
        K=int(vals["K"]),
        N=int(vals["N"]),
        t_grid=[float(t) if not float(t).is_integer() else int(t) for t in vals["t_grid"]],
        workers=vals["workers"] if vals["workers"] is not None else (os.cpu_count() or 1),
        certify=bool(vals["certify"]),
    )


def validate_config(path) -> CampaignConfig:
    """Load and normalize a JSON config file; raises :class:`ConfigError` listing all problems."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError([f"config file {path} not found"]) from None
    except json.JSONDecodeError as exc:
        raise ConfigError([f"invalid JSON: {exc}"]) from None
    return normalize_config(raw)


# output helpers


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        json.dump(_jsonable(obj), fh, indent=1, sort_keys=True)
        fh.write("\n")


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return [_jsonable(v) for v in o.tolist()]
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, (float, np.floating)):
        f = float(o)
        return f if math.isfinite(f) else str(f)
    return o


def write_plot_script(path, data_file, title, xlabel, ylabel, logx=True, logy=False, using="1:2:3"):
    lines = [
        "set datafile separator ','",
        f"set title '{title}'",
        f"set xlabel '{xlabel}'",
        f"set ylabel '{ylabel}'",
    ]
    if logx:
        lines.append("set logscale x 2")
    if logy:
        lines.append("set logscale y")
    lines.append(f"plot '{Path(data_file).name}' every ::1 using {using} with yerrorlines title '{ylabel}'")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def slug(s: str) -> str:
    return re.sub(r"[^A-Za-z0-9.]+", "_", s).strip("_")


class _Base:
    """Artifact path stem; ``with_suffix`` appends instead of replacing dotted parts."""

    def __init__(self, path):
        self.path = Path(path)

    def with_suffix(self, suffix):
        return self.path.parent / (self.path.name + suffix)


def versions() -> dict:
    import scipy

    from . import __version__

    return {"translab": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


# tasks


def _task_variance(cfg, model, out, stat):
    from .estimators import central_moment_curve, variance_curve

    fn = variance_curve if stat == "variance" else central_moment_curve
    curve = fn(model, cfg.n_grid, cfg.replicas, cfg.seed, torus_size=cfg.N)
    base = _Base(out / f"{stat}__{slug(model)}")
    write_csv(base.with_suffix(".csv"), ["n", "mean", "se", "R"], curve.rows())
    write_json(base.with_suffix(".json"), curve.provenance())
    write_plot_script(base.with_suffix(".gp"), base.with_suffix(".csv"), f"{stat} {model}", "n", stat)
    return [base.with_suffix(s).name for s in (".csv", ".json", ".gp")]


def _task_cost(cfg, model, out):
    from .estimators import CostCurve, cost_samples

    S = cost_samples(model, cfg.p_grid, cfg.n_grid, cfg.replicas, cfg.seed, cfg.delta, cfg.certify)
    files = []
    for i, p in enumerate(cfg.p_grid):
        c = S[i]
        curve = CostCurve(cfg.n_grid, c.mean(1), c.std(1, ddof=1) / math.sqrt(cfg.replicas), cfg.replicas, "cost",
                          model, cfg.seed, cfg.delta, p, {"certify": cfg.certify})
        base = _Base(out / f"cost__{slug(model)}__p{fmt(p)}")
        write_csv(base.with_suffix(".csv"), ["n", "mean", "se", "R"], curve.rows())
        write_json(base.with_suffix(".json"), curve.provenance())
        write_plot_script(base.with_suffix(".gp"), base.with_suffix(".csv"), f"cost p={fmt(p)} {model}", "n",
                          "c_n(p)", logy=True)
        files += [base.with_suffix(s).name for s in (".csv", ".json", ".gp")]
    return files


def dyadic_rows(ledger):
    return ledger.rows()


DYADIC_HEADER = ["level", "mean_cbar", "se_cbar", "mean_increment", "bound_term"]
SHIFT_HEADER = ["t", "lhs_mean", "lhs_se", "rhs_mean", "rhs_se", "margin"]
CURVE_HEADER = ["n", "mean", "se", "R"]


def _task_dyadic(cfg, model, out):
    from .dyadic import run_dyadic

    files = []
    for p in cfg.p_grid:
        led = run_dyadic(model, cfg.K, p, cfg.replicas, cfg.seed, cfg.delta)
        base = _Base(out / f"dyadic__{slug(model)}__p{fmt(p)}")
        write_csv(base.with_suffix(".csv"), DYADIC_HEADER, led.rows())
        write_json(base.with_suffix(".json"), {**led.meta, "K": cfg.K, "p": p, "var_Z": led.var_Z,
                                               "bound_holds": led.bound_holds()})
        write_plot_script(base.with_suffix(".gp"), base.with_suffix(".csv"), f"dyadic p={fmt(p)} {model}", "level",
                          "mean cbar", logx=False)
        files += [base.with_suffix(s).name for s in (".csv", ".json", ".gp")]
    return files


def _task_threshold(cfg, model, out):
    from .estimators import threshold_estimate

    rep = threshold_estimate(model, cfg.p_grid, cfg.n_grid, cfg.replicas, cfg.seed, cfg.delta, certify=cfg.certify)
    path = out / f"threshold__{slug(model)}.json"
    write_json(path, rep.to_dict())
    return [path.name]


def _task_shift(cfg, model, out):
    from .torus import shift_coupling_check, theorem_p1_witness

    rep = shift_coupling_check(model, cfg.N, cfg.t_grid, cfg.replicas, cfg.seed)
    wit = theorem_p1_witness(report=rep)
    base = _Base(out / f"shiftcoupling__{slug(model)}")
    write_csv(base.with_suffix(".csv"), SHIFT_HEADER, rep.rows())
    write_json(base.with_suffix(".json"), {**rep.meta, "holds": rep.holds(), "instance_violations":
                                           rep.instance_violations, "witness": {
                                               "lower_bound": wit.lower_bound, "slope": wit.slope,
                                               "slope_ci": wit.slope_ci, "verdict": wit.verdict}})
    write_plot_script(base.with_suffix(".gp"), base.with_suffix(".csv"), f"shift coupling {model}", "t", "lhs")
    return [base.with_suffix(s).name for s in (".csv", ".json", ".gp")]


def run_task(cfg: CampaignConfig, task: str, model: str, out: Path) -> list:
    if task in ("variance", "absdev"):
        return _task_variance(cfg, model, out, task)
    if task == "cost":
        return _task_cost(cfg, model, out)
    if task == "dyadic":
        return _task_dyadic(cfg, model, out)
    if task == "threshold":
        return _task_threshold(cfg, model, out)
    if task == "shiftcoupling":
        return _task_shift(cfg, model, out)
    raise ValueError(f"unknown task {task!r}")


def run_campaign(cfg: CampaignConfig) -> tuple[int, Path]:
    """Run every (task, model) pair; returns the exit status and the artifact directory.

    Outputs depend only on the normalized config, so reruns reproduce them
    byte for byte.  A failing task is recorded in the manifest and turns the
    exit status to 2 without stopping the remaining tasks.
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = []
    status = EXIT_OK
    for task in cfg.tasks:
        for model in cfg.models:
            entry = {"task": task, "model": model}
            try:
                entry["files"] = run_task(cfg, task, model, out)
                entry["status"] = "ok"
            except Exception as exc:  # recorded, campaign continues
                log.exception("task %s on %s failed", task, model)
                entry["status"] = "failed"
                entry["error"] = f"{type(exc).__name__}: {exc}"
                status = EXIT_TASK_FAILED
            results.append(entry)
    manifest = {
        "config": cfg.canonical(),
        "config_sha256": cfg.digest(),
        "versions": versions(),
        "seeding": "numpy SeedSequence([seed, replica, ...]) per replica",
        "tasks": results,
        "status": status,
    }
    write_json(out / "manifest.json", manifest)
    return status, out
