"""CSV and JSON report emission.

CSV columns: layer, method, variant, snr_db, gain_db, objective,
params_added, seed.  After the data rows one aggregate row per
(method, variant) group is appended with layer name ``average``, holding
the arithmetic mean across layers; infinite values are excluded from the
means (the JSON aggregates carry the excluded count).  Infinities are
written as the literal string ``inf`` in both formats.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from arhq.errors import ParameterError
from arhq.pipeline import LayerReport

__all__ = ["write_report", "report_rows"]

CSV_COLUMNS = ("layer", "method", "variant", "snr_db", "gain_db", "objective", "params_added", "seed")


def _encode(value):
    """JSON-safe scalar; infinities become strings, None passes through."""
    if value is None:
        return None
    if isinstance(value, float) and math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def _cell(value) -> str:
    enc = _encode(value)
    return "" if enc is None else str(enc)


def _mean(values):
    """Mean of the finite entries; 'inf' when every entry is infinite."""
    finite = [v for v in values if v is not None and math.isfinite(v)]
    infinite = sum(1 for v in values if v is not None and math.isinf(v))
    if finite:
        return sum(finite) / len(finite), infinite
    if infinite:
        return math.inf, infinite
    return None, 0


def report_rows(reports):
    """Flatten reports into (data_rows, aggregate_rows) of plain dicts."""
    if not reports:
        raise ParameterError("report list must be non-empty")
    data = []
    for rep in reports:
        for row in rep.rows:
            data.append(
                {
                    "layer": rep.layer,
                    "method": row.method,
                    "variant": row.variant,
                    "snr_db": row.snr_db,
                    "gain_db": row.gain_db,
                    "objective": row.objective,
                    "params_added": row.params_added,
                    "overhead_ratio": row.overhead_ratio,
                    "factor_absmax": row.factor_absmax,
                    "seed": rep.seed,
                }
            )
    groups = {}
    for row in data:
        groups.setdefault((row["method"], row["variant"]), []).append(row)
    aggregates = []
    for (method, variant), rows in groups.items():
        snr_mean, snr_inf = _mean([r["snr_db"] for r in rows])
        gain_mean, gain_inf = _mean([r["gain_db"] for r in rows])
        obj_mean, _ = _mean([r["objective"] for r in rows])
        aggregates.append(
            {
                "layer": "average",
                "method": method,
                "variant": variant,
                "snr_db": snr_mean,
                "gain_db": gain_mean,
                "objective": obj_mean,
                "params_added": sum(r["params_added"] for r in rows) / len(rows),
                "seed": None,
                "excluded_infinite": snr_inf + gain_inf,
            }
        )
    return data, aggregates


def write_report(reports, path, format: str = "csv") -> None:
    """Write reports to ``path`` as ``csv`` or ``json``."""
    reports = list(reports)
    for rep in reports:
        if not isinstance(rep, LayerReport):
            raise ParameterError(f"expected LayerReport, got {type(rep).__name__}")
    data, aggregates = report_rows(reports)
    path = Path(path)
    if format == "csv":
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for row in data + aggregates:
                writer.writerow([_cell(row[c]) for c in CSV_COLUMNS])
    elif format == "json":
        doc = {
            "reports": [
                {"layer": rep.layer, "seed": rep.seed, "config": rep.config}
                for rep in reports
            ],
            "rows": [{k: _encode(v) for k, v in row.items()} for row in data],
            "aggregates": [{k: _encode(v) for k, v in row.items()} for row in aggregates],
        }
        path.write_text(json.dumps(doc, indent=2) + "\n")
    else:
        raise ParameterError(f"unknown report format {format!r}, expected csv or json")
