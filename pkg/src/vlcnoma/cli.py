"""Command-line front end: simulate | analytic | validate | plot.

Runs are driven by a preset and/or an INI config file with ``--set`` overrides
on top.  Every simulate/analytic run writes a CSV (fixed column order) plus a
JSON manifest holding the fully resolved configuration and seed; re-running
from the manifest's configuration reproduces the CSV byte for byte.

Exit codes: 0 success, 1 usage/config error, 2 validation failure,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .analytic import AnalyticModel, sum_rate_sweep
from .config import (
    ConfigError,
    build_experiment,
    build_quadrature,
    parse_overrides,
    read_config_file,
    resolve_groups,
)
from .link import InfeasibleAllocationError
from .quadrature import QuadratureError
from .scheduling import FeedbackKind
from .simulate import CurvePoint, run_sweep
from .validation import run_validation

CSV_COLUMNS = ["scheme", "gamma_db", "sum_rate", "ci_halfwidth", "outage_weak", "outage_strong", "conditioning_rate"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

_ANALYTIC_STRATEGY = {
    FeedbackKind.FULL_CSI: "individual",
    FeedbackKind.TWO_BIT_INSTANT: "group-instant",
    FeedbackKind.TWO_BIT_MEAN: "group-mean",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors must exit 1, not argparse's 2
        raise ConfigError(message)


def _add_common(sub):
    sub.add_argument("--config", help="INI configuration file")
    sub.add_argument("--preset", help="bundled experiment preset (fig2, fig3, fig4)")
    sub.add_argument("--set", dest="overrides", action="append", metavar="SECTION.KEY=VALUE",
                     help="override one configuration value (repeatable)")
    sub.add_argument("--seed", type=int, help="root random seed")
    sub.add_argument("--trials", type=int, help="Monte Carlo trials per run group")
    sub.add_argument("--out", help="output CSV/report path")
    sub.add_argument("--quick", action="store_true", help="reduced sizes for a fast pass")


def build_parser():
    parser = _Parser(prog="vlcnoma", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)
    for name, doc in (
        ("simulate", "Monte Carlo sum-rate sweep"),
        ("analytic", "closed-form sum-rate sweep"),
        ("validate", "analytic-vs-sampling cross validation"),
    ):
        sub = subs.add_parser(name, help=doc)
        _add_common(sub)
    plot = subs.add_parser("plot", help="emit a plotting script for sweep CSVs")
    plot.add_argument("csv", nargs="+", help="CSV files produced by simulate/analytic")
    plot.add_argument("--out", help="path of the generated plot script")
    return parser


def _resolved_groups(args):
    file_flat = read_config_file(args.config) if args.config else {}
    set_flat = parse_overrides(args.overrides)
    if args.seed is not None:
        set_flat["sweep.seed"] = str(args.seed)
    if args.trials is not None:
        set_flat["sweep.trials"] = str(args.trials)
    if args.quick:
        set_flat.setdefault("sweep.trials", "5000")
    return resolve_groups(args.preset, file_flat, set_flat)


def _label(curve_label, suffix):
    return f"{curve_label}|{suffix}" if suffix else curve_label


def _rows_from_curves(curves, suffix):
    rows = []
    for curve_label in sorted(curves):
        for pt in curves[curve_label]:
            rows.append(
                {
                    "scheme": _label(curve_label, suffix),
                    "gamma_db": pt.gamma_db,
                    "sum_rate": pt.sum_rate,
                    "ci_halfwidth": pt.ci_halfwidth,
                    "outage_weak": pt.outage_weak,
                    "outage_strong": pt.outage_strong,
                    "conditioning_rate": pt.conditioning_rate,
                }
            )
    return rows


def _write_csv(path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: str(row[k]) for k in CSV_COLUMNS})


def _write_manifest(path, command, args, groups, outputs, started, duration):
    manifest = {
        "tool": "vlcnoma",
        "version": __version__,
        "command": command,
        "preset": args.preset,
        "started_utc": started,
        "duration_s": round(duration, 3),
        "groups": [{"suffix": suffix, "config": flat} for suffix, flat in groups],
        "outputs": [str(p) for p in outputs],
        "csv_sha256": {str(p): hashlib.sha256(p.read_bytes()).hexdigest() for p in outputs if p.suffix == ".csv"},
    }
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_simulate(args):
    groups = _resolved_groups(args)
    out = Path(args.out or f"{args.preset or 'run'}-simulate.csv")
    started = datetime.now(timezone.utc).isoformat()
    t0 = time.perf_counter()
    rows = []
    for suffix, flat in groups:
        config = build_experiment(flat)
        workers = int(flat["sweep.workers"])
        curves = run_sweep(config, n_workers=workers)
        rows.extend(_rows_from_curves(curves, suffix))
    _write_csv(out, rows)
    _write_manifest(out.with_suffix(".manifest.json"), "simulate", args, groups, [out], started, time.perf_counter() - t0)
    print(f"wrote {out} ({len(rows)} rows) and {out.with_suffix('.manifest.json')}")
    return EXIT_OK


def cmd_analytic(args):
    groups = _resolved_groups(args)
    out = Path(args.out or f"{args.preset or 'run'}-analytic.csv")
    started = datetime.now(timezone.utc).isoformat()
    t0 = time.perf_counter()
    rows = []
    failures = 0
    for suffix, flat in groups:
        config = build_experiment(flat)
        quad = build_quadrature(flat)
        oma_pending = config.include_oma
        for scheme in config.schemes:
            strategy = _ANALYTIC_STRATEGY.get(scheme.kind)
            if strategy is None:
                print(f"note: no closed-form route for scheme {scheme.kind.value!r}; skipped", file=sys.stderr)
                continue
            model = AnalyticModel(geom=config.geom, mobility=config.mobility,
                                  scheme=scheme if scheme.is_group else None, quad=quad)
            base = config.oma_base or config.schemes[0].kind
            include_oma = oma_pending and scheme.kind is base
            try:
                curves = sum_rate_sweep(
                    model,
                    config.noma,
                    config.gamma_db_grid,
                    strategy,
                    rank_weak=config.rank_weak,
                    rank_strong=config.rank_strong,
                    include_oma=include_oma,
                    oma_time_share=config.oma_time_share,
                )
            except QuadratureError as exc:
                failures += 1
                print(f"numerical failure for {scheme.kind.value}: {exc}", file=sys.stderr)
                nan = float("nan")
                curves = {
                    f"noma-{scheme.kind.value}": [
                        CurvePoint(g, nan, nan, nan, nan, nan) for g in config.gamma_db_grid
                    ]
                }
            if include_oma and "oma" in curves:
                oma_pending = False
            rows.extend(_rows_from_curves(curves, suffix))
    _write_csv(out, rows)
    _write_manifest(out.with_suffix(".manifest.json"), "analytic", args, groups, [out], started, time.perf_counter() - t0)
    print(f"wrote {out} ({len(rows)} rows) and {out.with_suffix('.manifest.json')}")
    return EXIT_NUMERICAL if failures else EXIT_OK


def cmd_validate(args):
    results = run_validation(quick=args.quick)
    for result in results:
        print(result.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    if args.out:
        report = [
            {"name": r.name, "passed": r.passed, "measured": r.measured, "bound": r.bound, "detail": r.detail}
            for r in results
        ]
        with open(args.out, "w") as fh:
            json.dump({"passed": not failed, "checks": report}, fh, indent=2)
            fh.write("\n")
        print(f"wrote {args.out}")
    return EXIT_VALIDATION if failed else EXIT_OK


PLOT_TEMPLATE = '''#!/usr/bin/env python3
"""Render sum-rate-versus-SNR curves from sweep CSVs (auto-generated)."""

import csv
from collections import defaultdict

import matplotlib.pyplot as plt

CSV_FILES = {csv_files!r}

curves = defaultdict(list)
for path in CSV_FILES:
    with open(path) as fh:
        for row in csv.DictReader(fh):
            curves[(path, row["scheme"])].append((float(row["gamma_db"]), float(row["sum_rate"]),
                                                  float(row["ci_halfwidth"])))

fig, ax = plt.subplots(figsize=(7.0, 4.8))
for (path, scheme), pts in sorted(curves.items()):
    pts.sort()
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    style = "--" if "analytic" in path else "-"
    marker = "" if "analytic" in path else "o"
    ax.plot(xs, ys, style, marker=marker, markersize=3.5, linewidth=1.2, label=scheme)

ax.set_xlabel("transmit SNR [dB]")
ax.set_ylabel("sum rate [bit/s/Hz]")
ax.grid(True, alpha=0.3)
ax.legend(fontsize=8)
fig.tight_layout()
fig.savefig({out_png!r}, dpi=200)
print("wrote", {out_png!r})
'''


def cmd_plot(args):
    paths = [Path(p) for p in args.csv]
    for path in paths:
        try:
            with open(path) as fh:
                reader = csv.reader(fh)
                header = next(reader, None)
                first = next(reader, None)
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
        if header != CSV_COLUMNS:
            offending = set(header or []) ^ set(CSV_COLUMNS)
            raise ConfigError(f"{path}: unexpected CSV schema (column mismatch: {sorted(offending)})")
        if first is None:
            raise ConfigError(f"{path}: CSV has no data rows")
    out = Path(args.out or "plot_sum_rates.py")
    png = str(out.with_suffix(".png"))
    script = PLOT_TEMPLATE.format(csv_files=[str(p) for p in paths], out_png=png)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(script)
    print(f"wrote {out}; run it with python to render {png}")
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "analytic":
            return cmd_analytic(args)
        if args.command == "validate":
            return cmd_validate(args)
        if args.command == "plot":
            return cmd_plot(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, InfeasibleAllocationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QuadratureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
