"""CSV serialization with versioned headers and a JSON metadata sidecar.

Output files start with a comment line ``# schema: ebcm-mzi/<kind>/v1``
followed by a column header row.  Floats are written with ``repr`` so that
identical runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import io as _io
import json
from pathlib import Path

from . import __version__
from .config import RunConfig
from .protocols import FringeRecord

SWEEP_SCHEMA = "ebcm-mzi/sweep/v1"
SWEEP_COLUMNS = ("phi0_rad", "protocol", "set_index", "counts_port0",
                 "counts_port1", "darks", "trials", "sub_seed")

SWITCH_SCHEMA = "ebcm-mzi/switch-compare/v1"
SWITCH_COLUMNS = ("row_type", "protocol", "context", "phi0_rad", "set_index",
                  "counts_port0", "counts_port1", "darks", "trials",
                  "shift_rad", "shift_sigma")

SCAN_SCHEMA = "ebcm-mzi/alpha-scan/v1"
SCAN_COLUMNS = ("model", "alpha", "context", "chi2", "dof", "reduced_chi2")

FIT_SCHEMA = "ebcm-mzi/fit/v1"
FIT_COLUMNS = ("protocol", "context", "A", "V", "phase_offset_rad", "sigma_A",
               "sigma_V", "sigma_phase", "residual_sum", "n_points",
               "converged", "flags")


def _num(x):
    """Compact exact formatting: ints stay ints, floats use repr."""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    f = float(x)
    return str(int(f)) if f.is_integer() else repr(f)


def _render(schema, columns, rows) -> str:
    buf = _io.StringIO()
    buf.write(f"# schema: {schema}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(["" if v is None else (_num(v) if isinstance(v, (int, float, bool)) else str(v))
                         for v in row])
    return buf.getvalue()


def render_sweep_csv(records: list[FringeRecord]) -> str:
    rows = [(r.phi0, r.protocol, r.set_index, r.counts_port0, r.counts_port1,
             r.darks_recorded, r.trials, r.seed) for r in records]
    return _render(SWEEP_SCHEMA, SWEEP_COLUMNS, rows)


def render_switch_csv(fringes, summaries) -> str:
    """``fringes``: iterable of FringeRecord (whole and per-context).
    ``summaries``: iterable of (context, shift, sigma) with context "combined"
    for the headline number."""
    rows = []
    for r in fringes:
        rows.append(("fringe", r.protocol, r.context or "all", r.phi0,
                     r.set_index, r.counts_port0, r.counts_port1,
                     r.darks_recorded, r.trials, None, None))
    for context, shift, sigma in summaries:
        rows.append(("summary", "random/1-random/10", context, None, None,
                     None, None, None, None, shift, sigma))
    return _render(SWITCH_SCHEMA, SWITCH_COLUMNS, rows)


def render_scan_csv(entries) -> str:
    rows = [("QM" if e.alpha is None else "EBCM",
             "" if e.alpha is None else e.alpha,
             e.context, e.report.chi2, e.report.dof, e.report.reduced_chi2)
            for e in entries]
    return _render(SCAN_SCHEMA, SCAN_COLUMNS, rows)


def render_fit_csv(fits) -> str:
    """``fits``: iterable of (protocol, context, FitResult)."""
    rows = [(proto, ctx or "all", f.A, f.V, f.phase_offset, f.sigma_A,
             f.sigma_V, f.sigma_phase, f.residual_sum, f.n_points,
             f.converged, "|".join(f.flags)) for proto, ctx, f in fits]
    return _render(FIT_SCHEMA, FIT_COLUMNS, rows)


def write_with_metadata(out_path, content: str, cfg: RunConfig, schema: str,
                        extra: dict | None = None):
    """Write the CSV plus a ``<out>.meta.json`` sidecar capturing the full
    configuration, so loading the sidecar reproduces the identical run."""
    out_path = Path(out_path)
    out_path.write_text(content)
    meta = {
        "schema": schema,
        "generator": f"ebcm-mzi {__version__}",
        "master_seed": cfg.master_seed,
        "config": cfg.to_dict(),
    }
    if extra:
        meta.update(extra)
    out_path.with_name(out_path.name + ".meta.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n")


def read_records_csv(path) -> list[FringeRecord]:
    """Read a sweep CSV (or the fringe rows of a switch-compare CSV)."""
    records = []
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("# schema: "):
            raise ValueError(f"{path}: missing schema header")
        schema = header.split(": ", 1)[1].strip()
        reader = csv.DictReader(fh)
        for row in reader:
            if schema == SWITCH_SCHEMA:
                if row["row_type"] != "fringe":
                    continue
                ctx = None if row["context"] == "all" else row["context"]
            else:
                ctx = None
            records.append(FringeRecord(
                phi0=float(row["phi0_rad"]),
                protocol=row["protocol"],
                counts_port0=float(row["counts_port0"]),
                counts_port1=float(row["counts_port1"]),
                darks_recorded=int(row["darks"]),
                trials=int(row["trials"]),
                seed=int(row.get("sub_seed") or 0),
                set_index=int(row.get("set_index") or 0),
                context=ctx,
            ))
    return records
