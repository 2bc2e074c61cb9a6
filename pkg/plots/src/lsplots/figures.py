"""Lead-time cost-curve panels from the harness curve CSVs.

Each input file holds one panel: columns ``tau, CBS, CPIL, COP`` with the
optimized cost rates of the base-stock, projected-inventory-level, and
constant-order policies.  Files are named ``leadtime_cv{cv}_p{p}.csv`` by
the harness; the cv and penalty are recovered from the name for the panel
title.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# deterministic SVG element ids and no embedded creation date
matplotlib.rcParams["svg.hashsalt"] = "lsplots"

REQUIRED_COLUMNS = ("tau", "CBS", "CPIL", "COP")

SERIES = (
    ("CBS", "Base-stock policy", "tab:blue", "*"),
    ("CPIL", "Projected inventory level policy", "tab:red", "D"),
    ("COP", "Constant order policy", "tab:green", "^"),
)

_NAME_RE = re.compile(r"leadtime_cv(?P<cv>[0-9.]+)_p(?P<p>[0-9.]+)\.csv$")


class SchemaError(ValueError):
    """An input CSV does not match the harness curve schema."""


@dataclass(frozen=True)
class FigureSpec:
    csv_paths: tuple
    out_dir: Path
    fmt: str = "svg"

    def __post_init__(self):
        if self.fmt not in ("svg", "png"):
            raise SchemaError(f"unsupported format {self.fmt!r}; use svg or png")
        missing = [str(p) for p in self.csv_paths if not Path(p).exists()]
        if missing:
            raise SchemaError(f"input CSVs not found: {', '.join(missing)}")
        if not self.csv_paths:
            raise SchemaError("no input CSVs given")

    @classmethod
    def from_directory(cls, in_dir, out_dir, fmt: str = "svg") -> "FigureSpec":
        paths = tuple(sorted(Path(in_dir).glob("leadtime_cv*_p*.csv")))
        if not paths:
            raise SchemaError(f"no leadtime curve CSVs found in {in_dir}")
        return cls(paths, Path(out_dir), fmt)


def read_panel(path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in REQUIRED_COLUMNS:
            if col not in header:
                raise SchemaError(f"{path}: missing required column {col!r}")
        rows = [
            {col: float(rec[col]) for col in REQUIRED_COLUMNS}
            for rec in reader
        ]
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return sorted(rows, key=lambda r: r["tau"])


def panel_label(path) -> str:
    m = _NAME_RE.search(str(path))
    if m:
        return f"cv = {m.group('cv')}, p = {m.group('p')}"
    return Path(path).stem


def render_leadtime_figure(spec: FigureSpec) -> list[Path]:
    """Render one chart per panel CSV; returns the written image paths."""
    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for path in spec.csv_paths:
        rows = read_panel(path)
        taus = [r["tau"] for r in rows]
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        for col, label, color, marker in SERIES:
            ax.plot(taus, [r[col] for r in rows], label=label, color=color,
                    marker=marker, markersize=5, linewidth=0.9)
        ax.set_xlabel("Lead time (τ)")
        ax.set_ylabel("Optimized cost rate")
        ax.set_title(panel_label(path))
        ax.legend(loc="lower right", fontsize=8)
        target = out_dir / (Path(path).stem + f".{spec.fmt}")
        fig.savefig(target, metadata=_deterministic_metadata(spec.fmt), dpi=120)
        plt.close(fig)
        written.append(target)
    return written


def _deterministic_metadata(fmt: str) -> dict:
    if fmt == "svg":
        return {"Date": None}
    return {"Software": "lsplots"}
