"""Gap-summary table rendering from the harness summary CSV.

The summary file has one row per (factor, level, policy) with min/max/avg
percentage gaps versus the PIL policy.  Rendering pivots this into the
familiar benchmark layout: one block of rows per factor (demand cv, lead
time, penalty cost) and a Total row, with a min/max/avg column triple per
policy.
"""

from __future__ import annotations

import csv
from pathlib import Path

from .figures import SchemaError

SUMMARY_COLUMNS = ("factor", "level", "policy", "min_gap_pct", "max_gap_pct", "avg_gap_pct")

POLICY_LABELS = {
    "bs": "base-stock",
    "cop": "constant order",
    "cbs": "capped base-stock",
    "myopic": "myopic",
    "optimal": "optimal",
}

FACTOR_LABELS = {"cv": "cv of demand", "tau": "lead time", "p": "penalty cost", "total": "Total"}


def read_summary(path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in SUMMARY_COLUMNS:
            if col not in header:
                raise SchemaError(f"{path}: missing required column {col!r}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def render_gap_table(summary_csv, fmt: str = "text") -> str:
    """Render the per-factor gap table as plain text or HTML."""
    rows = read_summary(summary_csv)
    policies = sorted({r["policy"] for r in rows}, key=lambda x: list(POLICY_LABELS).index(x)
                      if x in POLICY_LABELS else 99)
    cells = {(r["factor"], r["level"], r["policy"]): r for r in rows}
    order = []
    for factor in ("cv", "tau", "p", "total"):
        levels = sorted({r["level"] for r in rows if r["factor"] == factor},
                        key=lambda v: float(v) if v not in ("all",) else 0.0)
        for level in levels:
            order.append((factor, level))
    if fmt == "html":
        return _render_html(order, policies, cells)
    return _render_text(order, policies, cells)


def _triple(cells, key, policy):
    r = cells.get((key[0], key[1], policy))
    if r is None:
        return ("-", "-", "-")
    return (r["min_gap_pct"], r["max_gap_pct"], r["avg_gap_pct"])


def _render_text(order, policies, cells) -> str:
    headers = ["factor", "level"]
    for pol in policies:
        label = POLICY_LABELS.get(pol, pol)
        headers += [f"{label} min", f"{label} max", f"{label} avg"]
    lines = []
    body = []
    for key in order:
        row = [FACTOR_LABELS.get(key[0], key[0]), key[1]]
        for pol in policies:
            row += list(_triple(cells, key, pol))
        body.append(row)
    widths = [max(len(str(r[i])) for r in [headers] + body) for i in range(len(headers))]
    lines.append("  ".join(str(h).ljust(w) for h, w in zip(headers, widths)))
    lines.append("  ".join("-" * w for w in widths))
    prev_factor = None
    for key, row in zip(order, body):
        if prev_factor is not None and key[0] != prev_factor:
            lines.append("")
        prev_factor = key[0]
        lines.append("  ".join(str(v).ljust(w) for v, w in zip(row, widths)))
    return "\n".join(lines) + "\n"


def _render_html(order, policies, cells) -> str:
    parts = ["<table>", "<thead><tr><th>factor</th><th>level</th>"]
    for pol in policies:
        label = POLICY_LABELS.get(pol, pol)
        parts.append(f'<th colspan="3">{label} (min/max/avg)</th>')
    parts.append("</tr></thead>")
    parts.append("<tbody>")
    for key in order:
        parts.append(f"<tr><td>{FACTOR_LABELS.get(key[0], key[0])}</td><td>{key[1]}</td>")
        for pol in policies:
            for v in _triple(cells, key, pol):
                parts.append(f"<td>{v}</td>")
        parts.append("</tr>")
    parts.append("</tbody></table>")
    return "".join(parts) + "\n"


def write_gap_table(summary_csv, out_path, fmt: str = "text") -> Path:
    out = Path(out_path)
    out.write_text(render_gap_table(summary_csv, fmt))
    return out
