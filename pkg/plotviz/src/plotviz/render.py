"""Render the two goodput figures from the frozen sweep CSV schemas.

Analytic series are drawn as lines, empirical series as markers.  Next to
each image a small JSON sidecar lists the plotted series and data ranges
so figure content stays testable without image diffing.  Rendering is
read-only over its inputs and deterministic for identical CSV and spec.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

DISTANCE_COLUMNS = [
    "entity_type",
    "bin_center_m",
    "analytic_goodput_bits",
    "empirical_goodput_bits",
    "n_samples",
    "rel_gap",
]
D2D_COLUMNS = [
    "d2d_per_cell",
    "overall_goodput_bits",
    "downlink_sum_bits",
    "d2d_sum_bits",
    "source",
]

KINDS = ("distance", "d2d-count")


class SchemaError(ValueError):
    """The input CSV does not match the expected frozen schema."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str                  # "distance" or "d2d-count"
    csv_path: Path
    image_path: Path

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")


def _read_rows(path: Path, expected_columns: list[str]) -> list[dict]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != expected_columns:
            raise SchemaError(
                f"{path}: header {reader.fieldnames} does not match the frozen schema {expected_columns}"
            )
        return list(reader)


def _render_distance(rows: list[dict], ax) -> list[str]:
    series = []
    for entity, color in (("downlink", "tab:blue"), ("d2d", "tab:red")):
        sel = sorted(
            (r for r in rows if r["entity_type"] == entity),
            key=lambda r: float(r["bin_center_m"]),
        )
        if not sel:
            continue
        x = [float(r["bin_center_m"]) for r in sel]
        ax.plot(
            x,
            [float(r["analytic_goodput_bits"]) for r in sel],
            color=color,
            label=f"{entity} analytic",
        )
        series.append(f"{entity}:analytic")
        ax.plot(
            x,
            [float(r["empirical_goodput_bits"]) for r in sel],
            "o",
            color=color,
            markerfacecolor="none",
            label=f"{entity} empirical",
        )
        series.append(f"{entity}:empirical")
    ax.set_yscale("log")
    ax.set_xlabel("distance to BS (m)")
    ax.set_ylabel("average goodput (bits)")
    return series


def _render_d2d(rows: list[dict], ax) -> list[str]:
    series = []
    styles = {
        "overall_goodput_bits": ("overall", "tab:green"),
        "downlink_sum_bits": ("downlink sum", "tab:blue"),
        "d2d_sum_bits": ("d2d sum", "tab:red"),
    }
    for source, as_line in (("analytic", True), ("empirical", False)):
        sel = sorted(
            (r for r in rows if r["source"] == source),
            key=lambda r: int(r["d2d_per_cell"]),
        )
        if not sel:
            continue
        x = [int(r["d2d_per_cell"]) for r in sel]
        for column, (label, color) in styles.items():
            y = [float(r[column]) for r in sel]
            if as_line:
                ax.plot(x, y, color=color, label=f"{label} analytic")
            else:
                ax.plot(x, y, "s", color=color, markerfacecolor="none", label=f"{label} empirical")
            series.append(f"{label.replace(' ', '_')}:{source}")
    ax.set_xlabel("D2D links per cell")
    ax.set_ylabel("average goodput (bits)")
    return series


def render(spec: FigureSpec) -> Path:
    """Render one figure and its JSON sidecar; returns the image path."""
    columns = DISTANCE_COLUMNS if spec.kind == "distance" else D2D_COLUMNS
    rows = _read_rows(spec.csv_path, columns)

    fig, ax = plt.subplots(figsize=(6.0, 4.2), dpi=140)
    if spec.kind == "distance":
        series = _render_distance(rows, ax)
        x_values = [float(r["bin_center_m"]) for r in rows]
        y_values = [
            float(r[c]) for r in rows for c in ("analytic_goodput_bits", "empirical_goodput_bits")
        ]
    else:
        series = _render_d2d(rows, ax)
        x_values = [int(r["d2d_per_cell"]) for r in rows]
        y_values = [
            float(r[c])
            for r in rows
            for c in ("overall_goodput_bits", "downlink_sum_bits", "d2d_sum_bits")
        ]
    ax.grid(True, linestyle=":", linewidth=0.6)
    if series:
        ax.legend(fontsize=8)
    spec.image_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(spec.image_path)
    plt.close(fig)

    sidecar = {
        "kind": spec.kind,
        "input": spec.csv_path.name,
        "series": series,
        "n_rows": len(rows),
        "x_range": [min(x_values), max(x_values)] if x_values else None,
        "y_range": [min(y_values), max(y_values)] if y_values else None,
    }
    sidecar_path = spec.image_path.with_suffix(spec.image_path.suffix + ".json")
    with open(sidecar_path, "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")
    return spec.image_path
