"""riesz-lab command line: kernel, operator, weights, norms, atom, verify."""

from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from pathlib import Path
from typing import Sequence

import numpy as np

from .atoms import make_atom
from .config import ExperimentConfig
from .grid import Box, Cube, load_grid_csv, save_grid_csv
from .kernel import BRParams, decay_envelope_estimate, envelope_profile
from .operators import br_apply_convolution, br_apply_spectral, br_maximal, dyadic_half_grid
from .report import dumps, emit_report
from .spaces import lp_w_norm, moment_index, weak_lp_w_norm
from .verify import CLI_CHECKS, estimate_q_w, run_checks
from .weights import Weight, ap_report


def _emit(payload, out: Path | None) -> None:
    text = dumps(payload)
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")


def _weight_arg(text: str) -> dict:
    """'constant', 'constant:2', 'power:-0.5' or a JSON object."""
    text = text.strip()
    if text.startswith("{"):
        spec = json.loads(text)
        if not isinstance(spec, dict):
            raise argparse.ArgumentTypeError("weight JSON must be an object")
        return spec
    kind, _, val = text.partition(":")
    if kind == "constant":
        return {"kind": "constant", "c": float(val or 1.0)}
    if kind == "power":
        if not val:
            raise argparse.ArgumentTypeError("power weights need an exponent, e.g. power:-0.5")
        return {"kind": "power", "a": float(val)}
    raise argparse.ArgumentTypeError(f"unknown weight {text!r}")


def cmd_kernel(args: argparse.Namespace) -> int:
    params = BRParams.at_critical_index(args.n, args.p, R=args.R, strict=not args.allow_integer)
    rho, phi_vals, env = envelope_profile(params, args.alpha_max, args.radius)
    c_hat = float(env.max())
    half = decay_envelope_estimate(params, args.alpha_max, args.radius / 2)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "kernel.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["abs_x", "phi", "envelope"])
        for row in zip(rho, phi_vals, env):
            w.writerow([repr(float(v)) for v in row])
    summary = {
        "n": args.n,
        "p": args.p,
        "delta": params.delta,
        "R": args.R,
        "radius": args.radius,
        "alpha_max": args.alpha_max,
        "C_hat": c_hat,
        "C_hat_half_radius": half,
        "saturation_ratio": c_hat / half,
    }
    _emit(summary, out / "kernel.json")
    _emit(summary, None)
    return 0


def cmd_operator(args: argparse.Namespace) -> int:
    f = load_grid_csv(args.input)
    params = BRParams(dim=f.dim, delta=args.delta, R=args.R)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if args.route == "spectral":
            g = br_apply_spectral(f, params)
        elif args.route == "convolution":
            g = br_apply_convolution(f, params, args.window)
        else:
            R_grid = dyadic_half_grid(args.R_min or args.R / 4, args.R, args.R_points)
            g = br_maximal(f, args.delta, R_grid)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_grid_csv(g, out / "output.csv")
    meta = dict(g.meta)
    meta["warnings"] = [str(w.message) for w in caught]
    _emit(meta, out / "meta.json")
    _emit(meta, None)
    return 0


def cmd_weights(args: argparse.Namespace) -> int:
    spec = {"kind": args.kind, "a": args.a} if args.kind == "power" else {"kind": "constant", "c": args.c}
    w = Weight.from_spec(spec, Box(args.n, args.L), args.M)
    rep = ap_report(w, args.q, refine=args.refine)
    _emit(rep, Path(args.out) if args.out else None)
    return 0


def cmd_norms(args: argparse.Namespace) -> int:
    f = load_grid_csv(args.input)
    w = Weight.from_spec(args.weight, f.box, f.points_per_axis)
    payload = weak_lp_w_norm(f, args.p, w).to_dict()
    payload["strong_value"] = lp_w_norm(f, args.p, w)
    payload["weight"] = w.spec()
    _emit(payload, Path(args.out) if args.out else None)
    return 0


def cmd_atom(args: argparse.Namespace) -> int:
    box = Box(args.n, args.L)
    w = Weight.from_spec(args.weight, box, args.M)
    q_w = estimate_q_w(w) if args.q_w is None else args.q_w
    s = moment_index(args.n, args.p, q_w) if args.s is None else args.s
    center = tuple(args.center) if args.center else (0.0,) * args.n
    a = make_atom(Cube(center, args.r), w, args.p, args.q, s, seed=args.seed, q_w=q_w)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_grid_csv(a.samples, out / "atom.csv")
    payload = {
        "center": list(a.center),
        "side": a.side,
        "p": a.p,
        "q": a.q,
        "s": a.s,
        "seed": a.seed,
        "q_w": q_w,
        "weight": w.spec(),
        "validation": a.validation.to_dict(),
    }
    _emit(payload, out / "validation.json")
    _emit(payload, None)
    return 0 if a.validation.passed else 1


def cmd_verify(args: argparse.Namespace) -> int:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if args.out:
        cfg.output = args.out
    report = run_checks(cfg, [args.check], threads=args.threads)
    emit_report(report, cfg.output)
    for name, entry in report.checks.items():
        const = entry.get("constant")
        shown = f"{const:.6g}" if isinstance(const, (int, float)) else "-"
        print(f"{name:<12} {entry['status']:<13} constant={shown}")
    print(f"overall: {report.status} -> {cfg.output}")
    return report.exit_code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="riesz-lab", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    k = sub.add_parser("kernel", help="kernel profile and decay envelope")
    k.add_argument("--n", type=int, default=1)
    k.add_argument("--p", type=float, default=2.0 / 3.0)
    k.add_argument("--R", type=float, default=1.0)
    k.add_argument("--radius", type=float, default=100.0)
    k.add_argument("--alpha-max", type=int, default=2, choices=[0, 1, 2])
    k.add_argument("--allow-integer", action="store_true", help="allow n(1/p - 1) in Z_+")
    k.add_argument("--out", default="kernel_out")
    k.set_defaults(func=cmd_kernel)

    o = sub.add_parser("operator", help="apply T^delta_R to a grid CSV")
    o.add_argument("--input", required=True, type=Path)
    o.add_argument("--R", type=float, required=True)
    o.add_argument("--delta", type=float, required=True)
    o.add_argument("--route", choices=["spectral", "convolution", "maximal"], default="spectral")
    o.add_argument("--window", type=float, default=None, help="kernel truncation radius (convolution)")
    o.add_argument("--R-min", type=float, default=None, help="smallest R of the maximal grid")
    o.add_argument("--R-points", type=int, default=16)
    o.add_argument("--out", default="operator_out")
    o.set_defaults(func=cmd_operator)

    w = sub.add_parser("weights", help="A_q estimates for a weight")
    w.add_argument("--kind", choices=["power", "constant"], default="power")
    w.add_argument("--a", type=float, default=-0.5)
    w.add_argument("--c", type=float, default=1.0)
    w.add_argument("--q", type=float, default=None, help="A_q index (omit for A_1)")
    w.add_argument("--n", type=int, default=1)
    w.add_argument("--L", type=float, default=1.0)
    w.add_argument("--M", type=int, default=256)
    w.add_argument("--refine", type=int, default=16)
    w.add_argument("--out", default=None)
    w.set_defaults(func=cmd_weights)

    nm = sub.add_parser("norms", help="weighted L^p and weak-L^p norms of a grid CSV")
    nm.add_argument("--input", required=True, type=Path)
    nm.add_argument("--p", type=float, required=True)
    nm.add_argument("--weight", type=_weight_arg, default={"kind": "constant", "c": 1.0})
    nm.add_argument("--out", default=None)
    nm.set_defaults(func=cmd_norms)

    at = sub.add_parser("atom", help="construct and validate a w-(p,q,s)-atom")
    at.add_argument("--n", type=int, default=1)
    at.add_argument("--p", type=float, default=2.0 / 3.0)
    at.add_argument("--q", type=float, default=2.0)
    at.add_argument("--s", type=int, default=None)
    at.add_argument("--r", type=float, default=1.0)
    at.add_argument("--center", type=float, nargs="*", default=None)
    at.add_argument("--seed", type=int, default=0)
    at.add_argument("--weight", type=_weight_arg, default={"kind": "constant", "c": 1.0})
    at.add_argument("--q-w", type=float, default=None)
    at.add_argument("--L", type=float, default=16.0)
    at.add_argument("--M", type=int, default=4096)
    at.add_argument("--out", default="atom_out")
    at.set_defaults(func=cmd_atom)

    v = sub.add_parser("verify", help="run the verification harness")
    v.add_argument("--config", type=Path, default=None)
    v.add_argument("--check", choices=CLI_CHECKS, default="all")
    v.add_argument("--out", default=None, help="override the config's output directory")
    v.add_argument("--threads", type=int, default=None, help="defaults to RIESZ_LAB_THREADS or 1")
    v.set_defaults(func=cmd_verify)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return int(args.func(args))
    except (ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"riesz-lab {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
