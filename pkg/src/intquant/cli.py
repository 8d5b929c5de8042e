"""Command-line interface: ``intquant <subcommand> [flags]``.

Exit codes: 0 success, 1 domain/numerical error (or a failed verification),
2 usage error.  ``--config FILE`` supplies a JSON object of flag values;
flags given on the command line take precedence.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import lfunc, montecarlo, risk, timeseries
from .dist import Distribution, Sample, make_dist
from .errors import IntQuantError
from .layers import LayerSpec, cdf_difference_integral, fuzz_identities, layer_integral

# real defaults, applied after the config file so that "flag absent" is detectable
DEFAULTS = {
    "estimate": {"p": 0.5, "confidence": 0.95, "variance": "plugin", "B": 1000, "seed": 0, "format": "json"},
    "lfunc": {"method": "both", "dist": "uniform:0,1"},
    "simulate": {"format": "json"},
    "vervaat": {"n": [10_000], "m": 20, "grid": 101, "seed": 0, "format": "json"},
    "timeseries": {"phi": 0.5, "innovation": "normal:0,1", "n": [20_000], "m": 200, "burn_in": 1000,
                   "seed": 0, "confidence": 0.95, "bounds": 10,
                   "a": 1.0, "moment": 2.0},
    "verify": {"fuzz": 1000, "seed": 7, "tol": 1e-10},
}


class UsageError(Exception):
    pass


# ------------------------------------------------------------------ helpers
def _n_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def read_data(path: str) -> np.ndarray:
    """Numbers separated by whitespace, commas or newlines; ``-`` reads stdin."""
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    try:
        return np.array(text.replace(",", " ").split(), dtype=float)
    except ValueError as exc:
        raise UsageError(f"could not parse numeric data in {path}: {exc}") from None


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _dict_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _dump(obj: dict, fmt: str, out: str | None) -> None:
    if fmt == "csv":
        _emit(_dict_csv([obj]), out)
    else:
        _emit(json.dumps(obj, indent=2, sort_keys=True), out)


def _layer(args) -> LayerSpec:
    if getattr(args, "layer", None):
        return LayerSpec.parse(args.layer)
    if (args.p1 is None) != (args.p2 is None):
        raise UsageError("give both --p1 and --p2")
    if args.p1 is not None:
        return LayerSpec.middle(args.p1, args.p2)
    return LayerSpec.middle(0.25, 0.75)


# -------------------------------------------------------------- subcommands
def cmd_estimate(args) -> int:
    fn = {"tvar-up": risk.tvar_up, "tvar-down": risk.tvar_down,
          "lorenz": risk.lorenz, "gini": risk.gini_curve}[args.measure]
    if args.data is not None:
        est = fn(read_data(args.data), args.p, confidence=args.confidence, variance=args.variance,
                 B=args.B, seed=args.seed, threads=args.threads)
        _dump(est.to_dict(), args.format, args.out)
    elif args.dist is not None:
        value = fn(make_dist(args.dist), args.p)
        _dump({"measure": args.measure, "p": args.p, "value": value, "dist": make_dist(args.dist).describe()},
              args.format, args.out)
    else:
        raise UsageError("estimate needs --data or --dist")
    return 0


def _weight(args) -> lfunc.WeightFunction:
    params = {}
    if args.weight in ("tail-gini", "gini-shortfall"):
        if args.p is None:
            raise UsageError(f"{args.weight} needs --p")
        params["p"] = args.p
    if args.weight == "gini-shortfall":
        params["lam"] = 0.0 if args.lam is None else args.lam
    if args.weight == "constant" and args.c is not None:
        params["c"] = args.c
    return lfunc.builtin(args.weight, **params)


def cmd_lfunc(args) -> int:
    w = _weight(args)
    target: Distribution | Sample = Sample(read_data(args.data)) if args.data else make_dist(args.dist)
    out = {"weight": w.name, "K": w.K}
    if args.method in ("direct", "both"):
        out["direct"] = lfunc.l_integral_direct(target, w)
    if args.method in ("layered", "both"):
        out["layered"] = lfunc.l_integral_layered(target, w)
    if args.method == "both":
        scale = max(abs(out["direct"]), 1e-300)
        out["rel_diff"] = abs(out["direct"] - out["layered"]) / scale
    _emit(json.dumps(out, indent=2, sort_keys=True), args.out)
    return 0


def cmd_simulate(args) -> int:
    if args.preset:
        cfg = montecarlo.preset(args.preset)
    elif args.experiment:
        cfg = montecarlo.ExperimentConfig(args.experiment)
    else:
        raise UsageError("simulate needs --experiment or --preset")
    if args.experiment and args.experiment != cfg.experiment:
        cfg = montecarlo.ExperimentConfig(args.experiment, cfg.dist, cfg.p, cfg.n, cfg.m, cfg.seed)
    dist = args.dist
    if args.a is not None:
        dist = f"gapped:{args.a}"
    cfg = cfg.with_overrides(dist=make_dist(dist).describe() if dist else None, p=args.p,
                             n=tuple(args.n) if args.n else None, m=args.m, seed=args.seed,
                             keep_replicates=True if args.format == "dat" or args.keep_replicates else None,
                             out=args.out)
    report = montecarlo.run_experiment(cfg, threads=args.threads)
    text = {"json": report.to_json, "csv": report.to_csv, "dat": report.to_dat}[args.format]()
    _emit(text, args.out)
    return 0


def cmd_vervaat(args) -> int:
    grid = np.linspace(0.0, 1.0, args.grid)
    n = args.n[0]
    paths, summary = montecarlo.vervaat_paths(n, grid, args.m, args.seed, args.threads)
    summary["boundary_max_abs"] = float(np.max(np.abs(paths[:, [0, -1]])))
    summary["nonnegative"] = bool(summary["min_value"] >= -1e-12)
    summary["grid"] = grid.tolist()
    if args.format == "dat":
        # one block per path, blank-line separated
        blocks = ["".join(f"{g:.10g} {v:.10g}\n" for g, v in zip(grid, path)) for path in paths]
        _emit("\n".join(blocks), args.out)
    elif args.format == "csv":
        header = "p," + ",".join(f"path{r}" for r in range(args.m)) + "\n"
        body = "".join(f"{g:.10g}," + ",".join(f"{v:.10g}" for v in paths[:, i]) + "\n"
                       for i, g in enumerate(grid))
        _emit(header + body, args.out)
    else:
        _emit(json.dumps(summary, indent=2, sort_keys=True), args.out)
    return 0


def cmd_timeseries(args) -> int:
    cfg = timeseries.AR1Config(args.phi, make_dist(args.innovation), args.burn_in, args.seed)
    spec = _layer(args)
    report = timeseries.ts_layer_clt_report(cfg, args.n[0], spec, args.m, bandwidth=args.bandwidth,
                                            confidence=args.confidence, threads=args.threads)
    out = report.to_dict()
    ms = np.arange(1, args.bounds + 1)
    out["s_mixing_bounds"] = timeseries.mixing_bounds(cfg, ms, "s_mixing", a=args.a).tolist()
    out["m_mixing_bounds"] = timeseries.mixing_bounds(cfg, ms, "m_mixing", p=args.moment).tolist()
    if args.replicates_csv:
        rows = [{"replicate": r, "stat": s, "nu2": v} for r, (s, v) in enumerate(zip(report.stats, report.nu2))]
        Path(args.replicates_csv).write_text(_dict_csv(rows))
    _emit(json.dumps(out, indent=2, sort_keys=True), args.out)
    return 0


def cmd_verify(args) -> int:
    summary = fuzz_identities(args.fuzz, seed=args.seed)
    out = summary.to_dict()
    # counterexample: F = U(0,1), G = U(0,2); the truncated cdf-side integral misses half
    F, G = make_dist("uniform:0,1"), make_dist("uniform:0,2")
    full = layer_integral(G, LayerSpec.full()) - layer_integral(F, LayerSpec.full())
    out["counterexample"] = {
        "quantile_side": full,
        "cdf_side": cdf_difference_integral(F, G, -math.inf, math.inf),
        "truncated_cdf_side": cdf_difference_integral(F, G, 0.0, 1.0),
    }
    out["tolerance"] = args.tol
    out["ok"] = summary.ok(args.tol)
    _emit(json.dumps(out, indent=2, sort_keys=True), args.out)
    return 0 if out["ok"] else 1


# ------------------------------------------------------------------ parser
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of flag values (flags override)")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int, help="max concurrent replicates (default: all cores)")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--error-json", action="store_true", help="report errors as JSON on stdout")

    ap = argparse.ArgumentParser(prog="intquant", description="Integrated-quantile estimation and experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", parents=[common], help="TVaR, Lorenz or Gini estimate with CI")
    p.add_argument("--measure", choices=risk.MEASURES, required=False)
    p.add_argument("--data", help="file of numbers, or - for stdin")
    p.add_argument("--dist", help="population, e.g. uniform:0,2 (returns the exact value)")
    p.add_argument("--p", type=float)
    p.add_argument("--confidence", type=float)
    p.add_argument("--variance", choices=("plugin", "bootstrap"))
    p.add_argument("--B", type=int)
    p.add_argument("--format", choices=("json", "csv"))
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("lfunc", parents=[common], help="L-functional by direct and layered integration")
    p.add_argument("--weight", choices=sorted(lfunc.BUILTINS))
    p.add_argument("--dist")
    p.add_argument("--data")
    p.add_argument("--p", type=float)
    p.add_argument("--lam", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--method", choices=("direct", "layered", "both"))
    p.set_defaults(func=cmd_lfunc)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo experiments")
    p.add_argument("--experiment", choices=montecarlo.EXPERIMENTS)
    p.add_argument("--preset", choices=sorted(montecarlo.PRESETS))
    p.add_argument("--dist")
    p.add_argument("--p", type=float)
    p.add_argument("--a", type=float, help="gap half-width (selects the gapped uniform)")
    p.add_argument("--n", type=_n_list, help="comma-separated sample sizes")
    p.add_argument("--m", type=int)
    p.add_argument("--keep-replicates", action="store_true", default=None)
    p.add_argument("--format", choices=("json", "csv", "dat"))
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("vervaat", parents=[common], help="uniform Vervaat process paths")
    p.add_argument("--n", type=_n_list)
    p.add_argument("--m", type=int)
    p.add_argument("--grid", type=int, help="number of equally spaced grid points on [0, 1]")
    p.add_argument("--format", choices=("json", "csv", "dat"))
    p.set_defaults(func=cmd_vervaat)

    p = sub.add_parser("timeseries", parents=[common], help="AR(1) layer-integral CLT harness")
    p.add_argument("--phi", type=float)
    p.add_argument("--innovation", help="innovation law, e.g. normal:0,1")
    p.add_argument("--burn-in", type=int)
    p.add_argument("--n", type=_n_list)
    p.add_argument("--m", type=int)
    p.add_argument("--layer", help="upper:P, lower:P or middle:P1,P2")
    p.add_argument("--p1", type=float)
    p.add_argument("--p2", type=float)
    p.add_argument("--bandwidth", type=int)
    p.add_argument("--confidence", type=float)
    p.add_argument("--bounds", type=int, help="number of mixing-bound terms to report")
    p.add_argument("--a", type=float, help="gamma_m = m^-a for the s-mixing bound")
    p.add_argument("--moment", type=float, help="moment order for the m-mixing bound")
    p.add_argument("--replicates-csv", help="write per-replicate statistics here")
    p.set_defaults(func=cmd_timeseries)

    p = sub.add_parser("verify", parents=[common], help="fuzz the exact layer identities")
    p.add_argument("--identities", action="store_true", default=None)
    p.add_argument("--fuzz", type=int, help="number of random step-cdf pairs")
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_verify)
    return ap


def _merge(args, parser: argparse.ArgumentParser) -> None:
    if args.config:
        try:
            conf = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(conf, dict):
            raise UsageError("config must be a JSON object")
        for key, value in conf.items():
            dest = key.replace("-", "_")
            if not hasattr(args, dest) or dest in ("func", "command", "config"):
                raise UsageError(f"unknown config key {key!r} for {args.command}")
            if getattr(args, dest) is None:
                if dest == "n" and not isinstance(value, list):
                    value = [int(value)]
                setattr(args, dest, value)
    for key, value in DEFAULTS.get(args.command, {}).items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    if args.threads is None:
        args.threads = os.cpu_count() or 1


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        _merge(args, parser)
        if args.command == "estimate" and args.measure is None:
            raise UsageError("estimate needs --measure")
        if args.command == "lfunc" and args.weight is None:
            raise UsageError("lfunc needs --weight")
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        _report_error(args, "UsageError", str(exc))
        return 2
    except (IntQuantError, ValueError, ArithmeticError) as exc:
        _report_error(args, type(exc).__name__, str(exc))
        return 1


def _report_error(args, kind: str, message: str) -> None:
    if getattr(args, "error_json", False):
        sys.stdout.write(json.dumps({"error": kind, "message": message}) + "\n")
    else:
        sys.stderr.write(f"intquant: error: {message}\n")


def main() -> None:
    sys.exit(run())
