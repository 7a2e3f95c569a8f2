# src/draftlab/analytics/report.py
import csv
import json
from pathlib import Path

import numpy as np

from draftlab.analytics.metrics import Metrics
from draftlab.analytics.speedup import tau_speedup_ratio

RUN_COLUMNS = ("label", "tau", "speedup_measured", "activated_fraction", "tau_sr_ratio")
UNDEFINED = "-"


def write_metrics_report(
    metrics: Metrics, out_dir: str | Path, label: str = "run"
) -> Path:
    """Writes metrics.json and alpha.csv and appends a row to runs.csv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = out / "metrics.json"
    report.write_text(json.dumps(metrics.to_dict(), indent=2, sort_keys=True) + "\n")

    with (out / "alpha.csv").open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["depth", "alpha", "reached"])
        for depth, rate in metrics.alpha.items():
            writer.writerow([depth, rate, metrics.reached[depth]])

    runs = out / "runs.csv"
    fresh = not runs.exists()
    ratio = (
        tau_speedup_ratio(metrics.tau, metrics.speedup_measured)
        if metrics.speedup_measured > 0
        else UNDEFINED
    )
    with runs.open("a", newline="") as handle:
        writer = csv.writer(handle)
        if fresh:
            writer.writerow(RUN_COLUMNS)
        writer.writerow(
            [
                label,
                metrics.tau,
                metrics.speedup_measured,
                metrics.activated_fraction,
                ratio,
            ]
        )
    return report


def write_infonce_csv(matrix: np.ndarray, path: str | Path) -> None:
    """
    Rows are the candidate step i, columns the query step j; undefined
    cells are '-'.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["step", *range(matrix.shape[1])])
        for i, row in enumerate(matrix):
            cells = (UNDEFINED if np.isnan(v) else repr(float(v)) for v in row)
            writer.writerow([i, *cells])
