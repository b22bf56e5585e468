"""Command-line interface.

Usage:
    crlbstat sample  --modality rss --r0 1 --r 10 --n 8 --seed 7
    crlbstat eval    anchors.csv --modality toa --sigma-tc 1
    crlbstat moments --modality rss --r0 1 --r 6 --n-range 5..20
    crlbstat compare --modality toa --r 10 --n 6 --trials 1000000
    crlbstat plan    --modality toa --threshold 1.0 --confidence 0.5

Angles are radians everywhere. Data goes to stdout (or ``--out``); warnings
and diagnostics go to stderr. Exit codes: 0 success, 1 error, 2 singular or
empty result.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import asymptotics as asym
from .crlb import RSS, TOA, Bearing, trace_crlb
from .geometry import AnchorSet, Annulus, Disk, GeometryError, sample_anchors
from .montecarlo import DEFAULT_TRIALS, default_workers, error_report, paired_cdf_table, run_sweep

EXIT_OK, EXIT_ERROR, EXIT_SINGULAR = 0, 1, 2

DEFAULTS = {
    "modality": "rss",
    "alpha": 2.3,
    "sigma_db": 3.92,
    "sigma_alpha": None,
    "sigma_tc": 1.0,
    "r0": None,
    "r": 10.0,
    "n": None,
    "n_range": None,
    "trials": DEFAULT_TRIALS,
    "seed": 0,
    "format": None,
    "out": None,
    "workers": None,
}


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def parse_n_range(text: str) -> list[int]:
    """``A..B`` or ``A..B:step``, inclusive."""
    m = re.fullmatch(r"\s*(\d+)\s*\.\.\s*(\d+)\s*(?::\s*(\d+)\s*)?", text)
    if not m:
        raise CliError(f"bad n-range {text!r}; expected A..B or A..B:step")
    lo, hi = int(m.group(1)), int(m.group(2))
    step = int(m.group(3) or 1)
    if step <= 0:
        raise CliError("n-range step must be positive")
    if hi < lo:
        raise CliError(f"empty n-range {text!r}")
    return list(range(lo, hi + 1, step))


@dataclass
class RunConfig:
    modality: object
    model: object
    n_values: list[int] | None
    trials: int
    seed: int
    format: str
    out: str | None
    workers: int


def _merge(args: argparse.Namespace) -> dict:
    merged = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise CliError("config file must hold a JSON object")
        unknown = set(data) - set(DEFAULTS) - {"threshold", "confidence", "trial"}
        if unknown:
            raise CliError(f"unknown config keys: {', '.join(sorted(unknown))}")
        merged.update({k.replace("-", "_"): v for k, v in data.items()})
    for key, value in vars(args).items():
        if value is not None and key not in ("command", "config", "func"):
            merged[key] = value
    return merged


def build_config(args: argparse.Namespace, default_format: str = "csv") -> tuple[RunConfig, dict]:
    c = _merge(args)
    name = str(c["modality"]).lower()
    try:
        if name == "rss":
            modality = RSS(float(c["alpha"]), float(c["sigma_db"]))
        elif name == "bearing":
            if c["sigma_alpha"] is None:
                raise CliError("bearing needs --sigma-alpha (radians)")
            modality = Bearing(float(c["sigma_alpha"]))
        elif name == "toa":
            modality = TOA(float(c["sigma_tc"]))
        else:
            raise CliError(f"unknown modality {name!r}")
        r0 = c["r0"]
        if r0 is None and name in ("rss", "bearing"):
            r0 = 1.0
        model = Annulus(float(r0), float(c["r"])) if r0 is not None else Disk(float(c["r"]))
    except (ValueError, TypeError) as exc:
        raise CliError(str(exc)) from None

    n_values = None
    if c["n_range"] is not None:
        n_values = parse_n_range(str(c["n_range"]))
    elif c["n"] is not None:
        n_values = [int(c["n"])]
    if n_values and n_values[0] < 1:
        raise CliError("n must be positive")

    trials, seed = int(c["trials"]), int(c["seed"])
    if trials < 1:
        raise CliError("trials must be at least 1")
    if not 0 <= seed < 2**64:
        raise CliError("seed must be an unsigned 64-bit integer")
    fmt = c["format"] or default_format
    if fmt not in ("csv", "json"):
        raise CliError(f"format must be csv or json, got {fmt!r}")
    workers = int(c["workers"]) if c["workers"] is not None else default_workers()
    cfg = RunConfig(modality, model, n_values, trials, seed, fmt, c["out"], max(1, workers))
    return cfg, c


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


def _warn(message: str) -> None:
    print(f"warning: {message}", file=sys.stderr)


def _need_n(cfg: RunConfig) -> list[int]:
    if not cfg.n_values:
        raise CliError("need --n or --n-range")
    return cfg.n_values


def _g(x: float) -> str:
    return f"{x:.17g}"


def cmd_sample(args) -> int:
    cfg, c = build_config(args)
    n = _need_n(cfg)[0]
    anchors = sample_anchors(cfg.model, n, cfg.seed, int(c.get("trial") or 0))
    _emit(cfg, anchors.to_csv() if cfg.format == "csv" else anchors.to_json() + "\n")
    return EXIT_OK


def _read_anchors(path: str) -> AnchorSet:
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None
    if text.lstrip().startswith("["):
        return AnchorSet.from_json(text)
    return AnchorSet.from_csv(text)


def cmd_eval(args) -> int:
    cfg, _ = build_config(args)
    anchors = _read_anchors(args.anchors)
    value = trace_crlb(cfg.modality, anchors)
    singular = math.isinf(value)
    if cfg.format == "json":
        _emit(cfg, json.dumps({"trace": None if singular else value, "singular": singular, "n": anchors.n}) + "\n")
    else:
        _emit(cfg, "SINGULAR\n" if singular else f"{value!r}\n")
    return EXIT_SINGULAR if singular else EXIT_OK


def cmd_moments(args) -> int:
    cfg, _ = build_config(args)
    rows = []
    for n in _need_n(cfg):
        dist = asym.approx_distribution(cfg.modality, cfg.model, n)
        if n < asym.SMALL_N_WARNING:
            _warn(f"n={n} is below {asym.SMALL_N_WARNING}; the asymptotic formulas may be inaccurate")
        rows.append((n, dist.mean, dist.std))
    if cfg.format == "json":
        text = json.dumps([{"n": n, "formula_mean": m, "formula_std": s} for n, m, s in rows], indent=2) + "\n"
    else:
        text = "n,formula_mean,formula_std\n" + "".join(f"{n},{_g(m)},{_g(s)}\n" for n, m, s in rows)
    _emit(cfg, text)
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg, _ = build_config(args, default_format="json")
    ns = _need_n(cfg)
    for n in ns:
        if n < asym.SMALL_N_WARNING:
            _warn(f"n={n} is below {asym.SMALL_N_WARNING}; the asymptotic formulas may be inaccurate")
    batches = run_sweep(cfg.modality, cfg.model, ns, cfg.trials, cfg.seed, workers=cfg.workers)
    reports, tables = [], []
    for n in ns:
        batch = batches[n]
        if batch.finite_count < 2:
            print(f"error: n={n}: {batch.singular_count} of {batch.trials} trials singular; nothing to compare",
                  file=sys.stderr)
            return EXIT_SINGULAR
        dist = asym.approx_distribution(cfg.modality, cfg.model, n)
        entry = batch.summary()
        entry["report"] = error_report(batch, dist).as_dict()
        reports.append(entry)
        table = paired_cdf_table(batch, dist, points=args.ecdf_points)
        tables.append(np.column_stack([np.full(len(table), n), table]))
    csv_text = "n,x,ecdf,formula_cdf\n" + "".join(
        f"{int(r[0])},{_g(r[1])},{_g(r[2])},{_g(r[3])}\n" for t in tables for r in t
    )
    if args.ecdf:
        Path(args.ecdf).write_text(csv_text)
    if cfg.format == "csv":
        _emit(cfg, csv_text)
    else:
        payload = reports[0] if len(reports) == 1 else reports
        _emit(cfg, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_plan(args) -> int:
    cfg, c = build_config(args)
    if c.get("threshold") is None or c.get("confidence") is None:
        raise CliError("plan needs --threshold and --confidence")
    try:
        n, prob = asym.min_anchors(cfg.modality, cfg.model, float(c["threshold"]), float(c["confidence"]))
    except asym.UnsatisfiablePlanError as exc:
        print(f"error: unsatisfiable plan: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if n < asym.SMALL_N_WARNING:
        _warn(f"n={n} is below {asym.SMALL_N_WARNING}; the asymptotic law tends to under-cover there")
    if cfg.format == "json":
        _emit(cfg, json.dumps({"n": n, "probability": prob}) + "\n")
    else:
        _emit(cfg, f"n,probability\n{n},{_g(prob)}\n")
    return EXIT_OK


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--config", help="JSON file with any of the flags below; flags win")
    g.add_argument("--modality", choices=["rss", "bearing", "toa"])
    g.add_argument("--alpha", type=float, help="path-loss exponent (rss, default 2.3)")
    g.add_argument("--sigma-db", type=float, help="shadowing std in dB (rss, default 3.92)")
    g.add_argument("--sigma-alpha", type=float, help="bearing noise std in radians")
    g.add_argument("--sigma-tc", type=float, help="TOA range std sigma_T*c in meters (default 1)")
    g.add_argument("--r0", type=float, help="inner radius; omit for a disk (toa only)")
    g.add_argument("--r", type=float, help="outer radius in meters (default 10)")
    g.add_argument("--n", type=int)
    g.add_argument("--n-range", help="inclusive range A..B[:step]")
    g.add_argument("--trials", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--format", choices=["csv", "json"])
    g.add_argument("--out", help="write data here instead of stdout")
    g.add_argument("--workers", type=int, help="worker processes (default: available CPUs)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="crlbstat", description="CRLB limits for single-hop localization under random anchors.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample", help="draw one random anchor set")
    _common(p)
    p.add_argument("--trial", type=int, help="trial index (default 0)")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("eval", help="exact CRLB trace for an anchor file")
    _common(p)
    p.add_argument("anchors", help="CSV with header d,alpha (or JSON pairs); '-' for stdin")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("moments", help="formula mean and std over n")
    _common(p)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("compare", help="Monte Carlo vs formula report")
    _common(p)
    p.add_argument("--ecdf", help="also write x,ecdf,formula_cdf pairs to this CSV")
    p.add_argument("--ecdf-points", type=int, default=1000)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("plan", help="minimum anchors for a threshold at a confidence")
    _common(p)
    p.add_argument("--threshold", type=float, help="trace threshold in m^2")
    p.add_argument("--confidence", type=float, help="target probability in (0, 1)")
    p.set_defaults(func=cmd_plan)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, GeometryError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
