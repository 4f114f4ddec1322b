"""Serialization of benchmark results: CSV, JSON, and rendered figures.

The report path always writes the delimited rows and a JSON mirror; when
matplotlib renders, it additionally drops per-case speedup and
compilability charts next to them.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .bench import BenchReport

CSV_COLUMNS = (
    "case",
    "prompt_setting",
    "model",
    "compiled",
    "t_cpu",
    "t_gpu",
    "speedup",
    "output_match",
)

_BOOL_COLUMNS = ("compiled", "output_match")
_FLOAT_COLUMNS = ("t_cpu", "t_gpu", "speedup")


def _encode(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def write_rows_csv(rows: list[dict], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({col: _encode(row.get(col)) for col in CSV_COLUMNS})


def read_rows_csv(path: str | Path) -> list[dict]:
    rows: list[dict] = []
    with open(path, newline="", encoding="utf-8") as fh:
        for raw in csv.DictReader(fh):
            row: dict = dict(raw)
            for col in _BOOL_COLUMNS:
                row[col] = None if raw.get(col, "") == "" else raw[col] == "true"
            for col in _FLOAT_COLUMNS:
                row[col] = None if raw.get(col, "") == "" else float(raw[col])
            row["compiled"] = bool(row["compiled"])
            rows.append(row)
    return rows


def write_report_json(report: BenchReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def render_report_text(report: BenchReport) -> str:
    """Human-readable summary, one line per setting plus the comparison."""
    lines = []
    for name, stats in report.settings.items():
        lines.append(
            f"{name}: compiled {stats['compiled']}/{stats['total']} "
            f"({stats['rate_text']}), speedup>1 count {stats['speedup_gt1']}"
        )
    if report.comparison:
        cmp = report.comparison
        lines.append(
            f"rescued {len(cmp['rescued'])}, regressed {len(cmp['regressed'])} "
            f"({cmp['baseline']} -> {cmp['optimized']})"
        )
        for name, value in cmp["mean_speedup"].items():
            if value is not None:
                lines.append(f"mean speedup on common compiled set, {name}: {value:.3f}")
    return "\n".join(lines)


def render_figures(report: BenchReport, out_dir: str | Path, stem: str = "bench") -> list[Path]:
    """Render speedup and compilability charts as PNG files.

    Returns the written paths.  Cases without a measured speedup are shown
    at zero height in the speedup chart.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    settings = sorted(report.settings)
    cases = sorted({(r["case"], r["model"]) for r in report.rows})
    labels = [f"{c}/{m}" if m else c for c, m in cases]

    by_key = {
        (r["case"], r["model"], str(r["prompt_setting"])): r.get("speedup") for r in report.rows
    }
    fig, ax = plt.subplots(figsize=(max(6.0, 0.5 * len(cases) + 2.0), 4.0))
    width = 0.8 / max(1, len(settings))
    for si, setting in enumerate(settings):
        values = [by_key.get((c, m, setting)) or 0.0 for c, m in cases]
        positions = [i + si * width for i in range(len(cases))]
        ax.bar(positions, values, width=width, label=setting)
    ax.axhline(1.0, color="gray", linestyle="--", linewidth=0.8)
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(cases))])
    ax.set_xticklabels(labels, rotation=60, ha="right", fontsize=7)
    ax.set_ylabel("Speedup over CPU baseline")
    ax.set_title("Best-of-N speedup per case")
    if settings:
        ax.legend()
    fig.tight_layout()
    speedup_path = out_dir / f"{stem}_speedup.png"
    fig.savefig(speedup_path, dpi=150)
    plt.close(fig)
    written.append(speedup_path)

    fig, ax = plt.subplots(figsize=(4.0 + 0.8 * len(settings), 3.5))
    rates = [100.0 * report.settings[s]["rate"] for s in settings]
    ax.bar(range(len(settings)), rates, color="tab:blue")
    for i, (setting, rate) in enumerate(zip(settings, rates)):
        ax.text(i, rate + 1.0, report.settings[setting]["rate_text"], ha="center", fontsize=9)
    ax.set_xticks(range(len(settings)))
    ax.set_xticklabels(settings)
    ax.set_ylim(0, 110)
    ax.set_ylabel("Compilability rate (%)")
    ax.set_title("Compilation success rate per prompt setting")
    fig.tight_layout()
    rate_path = out_dir / f"{stem}_compilability.png"
    fig.savefig(rate_path, dpi=150)
    plt.close(fig)
    written.append(rate_path)
    return written
