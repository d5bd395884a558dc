"""Report tables, metrics files and delimited plot data."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import NDArray

from rdal.core.errors import RdalError
from rdal.privacy_eval.metrics import DensityCurves
from rdal.schemas.metrics import METRIC_FIELDS
from rdal.schemas.metrics import AggregateReport
from rdal.schemas.metrics import MetricsRecord

METRICS_FILE = "metrics.csv"
REPORT_FILE = "report.json"
PROJECTION_FILE = "projection.csv"
METHOD_LABELS = {
    "baseline": "Baseline",
    "naive_adv": "NaiveAdv",
    "rdal": "RDAL",
    "rdal_m": "RDAL+M",
    "lower_bound": "Lower bound",
}
_COLUMNS = (
    ("SED acc", "sed_accuracy"),
    ("SAD acc", "sad_accuracy"),
    ("SAD AUC", "sad_auc"),
    ("GD acc", "gd_accuracy"),
    ("GD AUC", "gd_auc"),
    ("Overlap", "sad_density_overlap"),
    ("Uncert.", "sad_uncertainty"),
)


def _write_csv(path: Path, headers: list[str], rows: list[dict[str, Any]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=headers)
        writer.writeheader()
        writer.writerows(rows)
    return path


def write_metrics_csv(path: Path, runs: list[MetricsRecord]) -> Path:
    """One record per evaluation run."""
    headers = ["run_seed", *METRIC_FIELDS]
    return _write_csv(path, headers, [run.model_dump() for run in runs])


def read_metrics_csv(path: Path) -> list[MetricsRecord]:
    with path.open(encoding="utf-8", newline="") as handle:
        return [MetricsRecord.model_validate(row) for row in csv.DictReader(handle)]


def write_report(path: Path, report: AggregateReport) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path


def load_report(path: Path) -> AggregateReport:
    return AggregateReport.model_validate_json(path.read_text(encoding="utf-8"))


def method_label(report: AggregateReport) -> str:
    label = METHOD_LABELS.get(report.method, report.method)
    if report.method in {"rdal", "rdal_m"} and report.tau is not None:
        label = f"{label} (tau={report.tau})"
    return label


def render_table(reports: list[AggregateReport], *, criterion: str | None = None) -> str:
    """Fixed-width mean +- std table, one row per method."""
    headers = ["Method", *(title for title, _ in _COLUMNS), "Runs"]
    rows = []
    for report in reports:
        cells = [method_label(report)]
        for _, name in _COLUMNS:
            summary = report.metrics.get(name)
            cells.append("-" if summary is None else f"{summary.mean:.2f}±{summary.std:.2f}")
        cells.append(str(report.run_count))
        rows.append(cells)

    widths = [max(len(row[index]) for row in [headers, *rows]) for index in range(len(headers))]
    lines = []
    if criterion:
        lines.append(f"tau selection: {criterion}")
    lines.append("  ".join(header.ljust(width) for header, width in zip(headers, widths)))
    lines.append("  ".join("-" * width for width in widths))
    lines.extend("  ".join(cell.ljust(width) for cell, width in zip(row, widths)) for row in rows)
    return "\n".join(lines) + "\n"


def write_roc_csv(path: Path, points: list[tuple[float, float]]) -> Path:
    return _write_csv(path, ["fpr", "tpr"], [{"fpr": fpr, "tpr": tpr} for fpr, tpr in points])


def write_density_csv(path: Path, curves: DensityCurves) -> Path:
    rows = [
        {"probability": x, "speech": speech, "non_speech": non_speech}
        for x, speech, non_speech in zip(curves.grid, curves.positive, curves.negative)
    ]
    return _write_csv(path, ["probability", "speech", "non_speech"], rows)


def write_projection_csv(
    path: Path,
    coordinates: NDArray[np.float64],
    *,
    example_ids: NDArray[np.str_],
    event_labels: NDArray[np.int64],
    speech_labels: NDArray[np.float32],
) -> Path:
    rows = [
        {"example_id": example_id, "x": float(x), "y": float(y), "event_class": int(event), "has_speech": int(speech)}
        for example_id, (x, y), event, speech in zip(example_ids, coordinates, event_labels, speech_labels)
    ]
    return _write_csv(path, ["example_id", "x", "y", "event_class", "has_speech"], rows)


def _read_columns(path: Path) -> dict[str, list[float]]:
    with path.open(encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        columns: dict[str, list[float]] = {name: [] for name in reader.fieldnames or []}
        for row in reader:
            for name in columns:
                try:
                    columns[name].append(float(row[name]))
                except ValueError:
                    columns[name].append(float("nan"))
    return columns


def render_plots(plot_dir: Path, out_dir: Path | None = None) -> list[Path]:
    """Render every ROC, density and projection CSV under ``plot_dir`` to PNG."""
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:
        raise RdalError(
            "Plot rendering needs the optional 'plots' extra (matplotlib)",
            code="missing_optional_dependency",
        ) from exc

    out_dir = out_dir or plot_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for source in sorted(plot_dir.rglob("*.csv")):
        columns = _read_columns(source)
        figure, axis = plt.subplots(figsize=(4, 4))
        if {"fpr", "tpr"} <= columns.keys():
            axis.plot(columns["fpr"], columns["tpr"])
            axis.plot([0, 1], [0, 1], linestyle="--", color="grey")
            axis.set_xlabel("False positive rate")
            axis.set_ylabel("True positive rate")
        elif {"probability", "speech", "non_speech"} <= columns.keys():
            axis.plot(columns["probability"], columns["speech"], label="speech")
            axis.plot(columns["probability"], columns["non_speech"], label="no speech")
            axis.set_xlabel("Attacker probability")
            axis.legend()
        elif {"x", "y", "has_speech"} <= columns.keys():
            axis.scatter(columns["x"], columns["y"], c=columns["has_speech"], s=4, cmap="coolwarm")
        else:
            plt.close(figure)
            continue
        axis.set_title(source.stem)
        target = out_dir / source.relative_to(plot_dir).with_suffix(".png")
        target.parent.mkdir(parents=True, exist_ok=True)
        figure.tight_layout()
        figure.savefig(target, dpi=120)
        plt.close(figure)
        written.append(target)
    return written
