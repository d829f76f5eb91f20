"""CSV series and JSON summaries for metric reports."""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Dict, Iterable, List, Sequence, TextIO

import numpy as np

from .metrics import MetricsReport

SCHEMA_VERSION = 1
REPORT_COLUMNS = ("t", "faulty", "wasted", "waste_ratio", "max_job_scale", "cross_tor_fraction")
_INT_COLUMNS = {"faulty", "wasted", "max_job_scale"}


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def write_report_csv(rows: Iterable[MetricsReport], out: TextIO, kind: str = "report") -> None:
    out.write(f"# khopsim {kind} v{SCHEMA_VERSION}\n")
    out.write(",".join(REPORT_COLUMNS) + "\n")
    for r in rows:
        out.write(",".join(_fmt(getattr(r, c)) for c in REPORT_COLUMNS) + "\n")


def read_report_csv(source: TextIO | str) -> List[MetricsReport]:
    if isinstance(source, str):
        source = io.StringIO(source)
    lines = [ln for ln in source if ln.strip()]
    version_line = next((ln for ln in lines if ln.startswith("#")), None)
    if version_line is not None and f"v{SCHEMA_VERSION}" not in version_line.split():
        raise ValueError(f"unsupported report schema: {version_line.strip()}")
    reader = csv.DictReader(ln for ln in lines if not ln.startswith("#"))
    if tuple(reader.fieldnames or ()) != REPORT_COLUMNS:
        raise ValueError(f"unexpected report columns {reader.fieldnames}")
    out = []
    for row in reader:
        vals = {c: (int(row[c]) if c in _INT_COLUMNS else float(row[c])) for c in REPORT_COLUMNS}
        out.append(MetricsReport(**vals))
    return out


def write_table_csv(rows: Sequence[Dict[str, object]], out: TextIO, kind: str) -> None:
    """Generic versioned CSV for sweep tables (bound grid, cost rows, ...)."""
    out.write(f"# khopsim {kind} v{SCHEMA_VERSION}\n")
    if not rows:
        return
    cols = list(rows[0])
    out.write(",".join(cols) + "\n")
    for r in rows:
        out.write(",".join(_fmt(r[c]) if isinstance(r[c], (int, float, np.number)) else str(r[c])
                           for c in cols) + "\n")


def read_table_csv(source: TextIO | str) -> List[Dict[str, str]]:
    if isinstance(source, str):
        source = io.StringIO(source)
    return list(csv.DictReader(ln for ln in source if ln.strip() and not ln.startswith("#")))


def _weighted_quantile(values: np.ndarray, weights: np.ndarray, q: float) -> float:
    order = np.argsort(values)
    cdf = np.cumsum(weights[order]) / weights.sum()
    return float(values[order][min(np.searchsorted(cdf, q), len(cdf) - 1)])


def summarize(rows: Sequence[MetricsReport], horizon: float | None = None,
              extra: Dict[str, object] | None = None) -> Dict[str, object]:
    """Mean/P50/P99 per numeric column, time-weighted when rows carry segment start times."""
    summary: Dict[str, object] = {"schema": f"khopsim summary v{SCHEMA_VERSION}", "rows": len(rows)}
    if rows:
        ts = np.array([r.t for r in rows], dtype=float)
        end = horizon if horizon is not None else ts[-1] + (ts[-1] - ts[-2] if len(ts) > 1 else 1.0)
        w = np.diff(np.append(ts, end))
        if w.sum() <= 0 or (w < 0).any():
            w = np.ones(len(rows))
        for col in REPORT_COLUMNS[1:]:
            vals = np.array([getattr(r, col) for r in rows], dtype=float)
            ok = ~np.isnan(vals)
            if not ok.any():
                summary[col] = {"mean": None, "p50": None, "p99": None}
                continue
            v, ww = vals[ok], w[ok]
            if ww.sum() <= 0:
                ww = np.ones(len(v))
            summary[col] = {
                "mean": float(np.average(v, weights=ww)),
                "p50": _weighted_quantile(v, ww, 0.50),
                "p99": _weighted_quantile(v, ww, 0.99),
            }
    if extra:
        summary.update(extra)
    return summary


def dump_json(obj, out: TextIO) -> None:
    json.dump(obj, out, indent=2, sort_keys=True, default=_json_default)
    out.write("\n")


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    raise TypeError(f"not JSON serializable: {type(o)}")
