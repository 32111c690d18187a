"""Command-line entry point ``lab``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import re
import sys
from pathlib import Path

import numpy as np

from . import campaign as cp

log = logging.getLogger("translab")


def parse_grid(text: str) -> list:
    """``16,32,64``, ``2^4..2^8`` (powers of two) or a mix of both."""
    out = []
    for part in filter(None, (s.strip() for s in text.split(","))):
        m = re.fullmatch(r"2\^(\d+)\.\.2\^(\d+)", part)
        if m:
            out += [2**k for k in range(int(m.group(1)), int(m.group(2)) + 1)]
        else:
            v = float(part)
            out.append(int(v) if v.is_integer() else v)
    if not out:
        raise argparse.ArgumentTypeError("empty grid")
    return out


def _seed(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def cmd_sample(args):
    from .samplers import ProcessModel, WindowSpec, sample

    model = ProcessModel.parse(args.model)
    topo = args.topology or model.default_topology()
    window = WindowSpec(float(args.n), topo)
    rows = []
    counts = []
    for r in range(args.replicas):
        cfg = sample(model, window, args.seed, r)
        rows += [(r, x) for x in cfg.points]
        counts.append(len(cfg))
    cp.write_csv(args.out, ["replica", "point"], rows)
    cp.write_json(str(args.out) + ".json", {
        "model": model.spec, "params": dict(model.params), "n": args.n, "topology": topo,
        "seed": args.seed, "replicas": args.replicas, "counts": counts,
        "seeding": "SeedSequence([seed, replica])",
    })
    return 0


def _read_points(path, replica):
    with open(path, newline="", encoding="utf-8") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        pts = []
        if header == ["replica", "point"]:
            for r, x in rd:
                if int(r) == replica:
                    pts.append(float(x))
        elif header == ["point"]:
            pts = [float(row[0]) for row in rd if row]
        else:
            raise ValueError("points CSV needs the header 'replica,point' or 'point'")
    return np.array(pts)


def cmd_transport(args):
    from .transport import adaptive_padding, boundary_diagnostics, solve_semicoupling

    pts = _read_points(args.points, args.replica)
    n = args.n
    side = Path(str(args.points) + ".json")
    if n is None and side.exists():
        n = json.loads(side.read_text())["n"]
    if n is None:
        raise ValueError("window length unknown: pass --n or keep the sample sidecar JSON next to the CSV")
    if args.L is None:
        plan = adaptive_padding(pts, args.p, delta=args.delta, n=float(n), certify=not args.fast)
    else:
        plan = solve_semicoupling(pts, args.p, delta=args.delta, L=args.L, n=float(n), certify=not args.fast)
    diag = boundary_diagnostics(plan)
    cp.write_json(args.out, plan.to_dict(diagnostics=diag))
    return 0


def cmd_dyadic(args):
    from .dyadic import run_dyadic

    led = run_dyadic(args.model, args.K, args.p, args.replicas, args.seed, args.delta)
    cp.write_csv(args.out, cp.DYADIC_HEADER, led.rows())
    cp.write_json(str(args.out) + ".json", {**led.meta, "K": args.K, "p": args.p, "var_Z": led.var_Z,
                                            "bound_holds": led.bound_holds(),
                                            "flattening_ratio": led.flattening_ratio()})
    return 0


def cmd_curve(args):
    from .estimators import central_moment_curve, cost_curve, variance_curve

    if args.stat == "variance":
        curve = variance_curve(args.model, args.ngrid, args.replicas, args.seed, torus_size=args.N)
    elif args.stat == "absdev":
        curve = central_moment_curve(args.model, args.ngrid, args.replicas, args.seed, torus_size=args.N)
    else:
        if args.p is None:
            raise ValueError("--p is required for the cost statistic")
        curve = cost_curve(args.model, args.p, args.ngrid, args.replicas, args.seed, args.delta, certify=args.certify)
    cp.write_csv(args.out, cp.CURVE_HEADER, curve.rows())
    cp.write_json(str(args.out) + ".json", curve.provenance())
    return 0


def cmd_threshold(args):
    from .estimators import threshold_estimate

    rep = threshold_estimate(args.model, args.pgrid, args.ngrid, args.replicas, args.seed, args.delta,
                             variance_R=args.variance_replicas, cost_route=not args.no_cost_route,
                             certify=args.certify)
    cp.write_json(args.out, rep.to_dict())
    return 0


def cmd_shift(args):
    from .torus import shift_coupling_check, theorem_p1_witness

    rep = shift_coupling_check(args.model, args.N, args.tgrid, args.replicas, args.seed, p=args.p, delta=args.delta)
    wit = theorem_p1_witness(report=rep)
    cp.write_csv(args.out, cp.SHIFT_HEADER, rep.rows())
    cp.write_json(str(args.out) + ".json", {**rep.meta, "holds": rep.holds(),
                                            "instance_violations": rep.instance_violations,
                                            "witness_verdict": wit.verdict, "witness_slope": wit.slope})
    return 0


def cmd_validate(args):
    try:
        cfg = cp.validate_config(args.config)
    except cp.ConfigError as exc:
        for e in exc.errors:
            print(f"error: {e}", file=sys.stderr)
        return cp.EXIT_INVALID
    print(json.dumps({**cfg.canonical(), "output_dir": cfg.output_dir, "workers": cfg.workers}, indent=1))
    return cp.EXIT_OK


def cmd_run(args):
    try:
        cfg = cp.validate_config(args.config)
    except cp.ConfigError as exc:
        for e in exc.errors:
            print(f"error: {e}", file=sys.stderr)
        return cp.EXIT_INVALID
    status, out = cp.run_campaign(cfg)
    print(f"artifacts in {out} (status {status})")
    return status


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lab", description="Transport-cost laboratory for stationary point processes.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="sample point configurations")
    p.add_argument("--model", required=True, help="model spec, e.g. poisson, lattice:sigma=0.5, cbe:beta=2")
    p.add_argument("--n", type=float, required=True, help="window length (torus size for torus models)")
    p.add_argument("--replicas", type=int, default=1)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--topology", choices=["interval", "torus"])
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("transport", help="optimal semicoupling of Lebesgue measure to a configuration")
    p.add_argument("--points", type=Path, required=True, help="CSV with header 'replica,point' or 'point'")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--delta", type=float, default=1.0 / 64)
    p.add_argument("--n", type=float, help="window length (default: from the sample sidecar)")
    p.add_argument("--L", type=float, help="fixed padding (default: adaptive doubling)")
    p.add_argument("--replica", type=int, default=0)
    p.add_argument("--fast", action="store_true", help="skip the global optimality certificate")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_transport)

    p = sub.add_parser("dyadic", help="dyadic coupling ledger")
    p.add_argument("--model", required=True)
    p.add_argument("--K", type=int, default=8)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--replicas", type=int, default=1000)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--delta", type=float, default=1.0 / 64)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_dyadic)

    p = sub.add_parser("curve", help="variance, mean absolute deviation or cost curve")
    p.add_argument("--stat", choices=["variance", "absdev", "cost"], required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--ngrid", type=parse_grid, default=[16, 32, 64, 128, 256])
    p.add_argument("--replicas", type=int, default=1000)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--p", type=float)
    p.add_argument("--delta", type=float, default=0.125)
    p.add_argument("--N", type=int, help="torus size for torus models")
    p.add_argument("--certify", action="store_true")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("threshold", help="estimate the critical exponent p*")
    p.add_argument("--model", required=True)
    p.add_argument("--pgrid", type=parse_grid, default=[0.2, 0.3, 0.4, 0.6, 0.7, 0.8])
    p.add_argument("--ngrid", type=parse_grid, default=[32, 64, 128, 256, 512, 1024])
    p.add_argument("--replicas", type=int, default=500)
    p.add_argument("--variance-replicas", type=int)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--delta", type=float, default=0.125)
    p.add_argument("--no-cost-route", action="store_true")
    p.add_argument("--certify", action="store_true")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("shiftcoupling", help="shift-coupling inequality on the torus")
    p.add_argument("--model", required=True)
    p.add_argument("--N", type=int, default=512)
    p.add_argument("--tgrid", type=parse_grid, default=[8, 16, 32, 64, 128])
    p.add_argument("--replicas", type=int, default=1000)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=1.0 / 64)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_shift)

    p = sub.add_parser("run", help="run a campaign config")
    p.add_argument("--config", type=Path, required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="check a campaign config")
    p.add_argument("--config", type=Path, required=True)
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command in ("run", "validate"):
        return args.func(args)
    try:
        return args.func(args)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return cp.EXIT_TASK_FAILED


if __name__ == "__main__":
    sys.exit(main())
