"""Command-line entry points.

Subcommands: sweep | alpha-scan | switch-compare | fit.  Every run is fully
determined by the config file plus the master seed; outputs are CSV with a
JSON metadata sidecar.  Exit codes: 0 ok, 2 config/validation error, 3 I/O
error, 4 fit failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import io as serio
from .analysis import (FitFailedError, fit_fringe, phase_shift_between,
                       alpha_scan, simulate_reference_records, wrap_angle)
from .config import ConfigError, RunConfig
from .core import DomainError
from .protocols import run_sweep, run_switch_rate_comparison

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_FIT = 4


def _load_config(args) -> RunConfig:
    try:
        with open(args.config) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise _IOFailure(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if "config" in data and "schema" in data:
        data = data["config"]
    cfg = RunConfig.from_dict(data)
    if args.seed is not None:
        data["master_seed"] = args.seed
        cfg = RunConfig.from_dict(data)
    if getattr(args, "threads", None):
        data["threads"] = args.threads
        cfg = RunConfig.from_dict(data)
    return cfg


class _IOFailure(OSError):
    pass


def _write(path, content, cfg, schema, extra=None):
    try:
        serio.write_with_metadata(path, content, cfg, schema, extra)
    except OSError as exc:
        raise _IOFailure(f"cannot write output: {exc}") from exc


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    records = run_sweep(cfg)
    _write(args.out, serio.render_sweep_csv(records), cfg, serio.SWEEP_SCHEMA)
    print(f"sweep: {len(records)} records -> {args.out}")
    return EXIT_OK


def cmd_alpha_scan(args) -> int:
    cfg = _load_config(args)
    if not cfg.alpha_grid:
        raise ConfigError("invalid value for alpha_grid: empty")
    reference = simulate_reference_records(cfg)
    entries = alpha_scan(cfg, cfg.alpha_grid, reference)
    _write(args.out, serio.render_scan_csv(entries), cfg, serio.SCAN_SCHEMA)
    worst = min(e.report.reduced_chi2 for e in entries if e.alpha is not None)
    print(f"alpha-scan: {len(entries)} rows -> {args.out} "
          f"(min EBCM reduced chi2 = {worst:.1f})")
    return EXIT_OK


def cmd_switch_compare(args) -> int:
    cfg = _load_config(args)
    per1, per10 = run_switch_rate_comparison(cfg)
    fringes = per1.records + per1.by_context + per10.records + per10.by_context
    summaries = []
    failure = None
    shifts = []
    for ctx in ("x=-1", "x=+1"):
        try:
            f1 = fit_fringe([r for r in per1.by_context if r.context == ctx],
                            frequency=1.0 + cfg.beta)
            f10 = fit_fringe([r for r in per10.by_context if r.context == ctx],
                             frequency=1.0 + cfg.beta)
            shift, sigma = phase_shift_between(f1, f10)
            summaries.append((ctx, shift, sigma))
            shifts.append((shift, sigma))
        except FitFailedError as exc:
            failure = exc
            summaries.append((ctx, None, None))
    if shifts:
        # contexts shift symmetrically; combine magnitudes for the headline
        mags = [abs(s) for s, _ in shifts]
        comb = sum(mags) / len(mags)
        sig = (sum(sg ** 2 for _, sg in shifts) ** 0.5) / len(shifts)
        summaries.append(("combined", comb, sig))
    _write(args.out, serio.render_switch_csv(fringes, summaries), cfg,
           serio.SWITCH_SCHEMA)
    if failure is not None:
        print(f"switch-compare: fit failure ({failure}); partial output "
              f"-> {args.out}", file=sys.stderr)
        return EXIT_FIT
    comb = summaries[-1][1]
    print(f"switch-compare: |shift| = {comb:.3f} rad -> {args.out}")
    return EXIT_OK


def cmd_fit(args) -> int:
    try:
        records = serio.read_records_csv(args.records)
    except OSError as exc:
        raise _IOFailure(f"cannot read records: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    groups = sorted({(r.protocol, r.context) for r in records},
                    key=lambda g: (g[0], g[1] or ""))
    fits = []
    any_failed = False
    for proto, ctx in groups:
        sub = [r for r in records if (r.protocol, r.context) == (proto, ctx)]
        fit = fit_fringe(sub)
        any_failed = any_failed or not fit.converged
        fits.append((proto, ctx, fit))
    content = serio.render_fit_csv(fits)
    try:
        with open(args.out, "w") as fh:
            fh.write(content)
    except OSError as exc:
        raise _IOFailure(f"cannot write output: {exc}") from exc
    print(f"fit: {len(fits)} fringes -> {args.out}")
    return EXIT_FIT if any_failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ebcm-mzi",
        description="Event-based corpuscular model of a two-phase "
                    "Mach-Zehnder interferometer: acquisition, fitting, and "
                    "chi-square model discrimination.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", required=True, help="output CSV path")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config master seed")
        p.add_argument("--threads", type=int, default=None,
                       help="replica-level parallelism (output is "
                            "order-deterministic regardless)")

    p = sub.add_parser("sweep", help="full acquisition over the phi0 grid")
    add_common(p)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("alpha-scan",
                       help="reduced chi2 of reference data vs model per alpha")
    add_common(p)
    p.set_defaults(fn=cmd_alpha_scan)

    p = sub.add_parser("switch-compare",
                       help="per-photon vs per-10 switching comparison")
    add_common(p)
    p.set_defaults(fn=cmd_switch_compare)

    p = sub.add_parser("fit", help="fit fringes from a records CSV")
    p.add_argument("--records", required=True, help="input records CSV")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(fn=cmd_fit)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _IOFailure as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except FitFailedError as exc:
        print(f"fit failure: {exc}", file=sys.stderr)
        return EXIT_FIT


if __name__ == "__main__":
    sys.exit(main())
