"""Evaluation metrics over per-case aggregated predictions.

All statistics are population (1/K) forms. The unbiased RMSE satisfies
RMSE^2 = Bias^2 + ubRMSE^2 exactly; the radicand is clamped at zero with a
warning if floating-point noise pushes it below.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from gprda.errors import ConfigError, UndefinedMetricError
from gprda.svgplot import scatter_plot

log = logging.getLogger("gprda.metrics")


@dataclass
class EvalRow:
    approach: str
    case: str
    parameter: str
    measured: float
    predicted: float  # mean over the case's scans
    scan_std: float  # population std over the case's scans


def aggregate(per_scan_estimates) -> tuple[float, float]:
    """Mean and population standard deviation of per-scan estimates."""
    values = np.asarray(per_scan_estimates, dtype=np.float64)
    if values.size == 0:
        raise ConfigError("cannot aggregate an empty estimate list")
    return float(values.mean()), float(values.std())


def pearson_r(measured, predicted) -> float:
    y = np.asarray(measured, dtype=np.float64)
    p = np.asarray(predicted, dtype=np.float64)
    if y.shape != p.shape or y.size < 2:
        raise UndefinedMetricError("correlation needs two equal-length series of >= 2 points")
    dy = y - y.mean()
    dp = p - p.mean()
    denom = np.sqrt(np.sum(dy * dy) * np.sum(dp * dp))
    if denom == 0.0:
        raise UndefinedMetricError("correlation undefined for a constant series")
    return float(np.sum(dy * dp) / denom)


def bias(measured, predicted) -> float:
    y = np.asarray(measured, dtype=np.float64)
    p = np.asarray(predicted, dtype=np.float64)
    return float(np.mean(p - y))


def rmse(measured, predicted) -> float:
    y = np.asarray(measured, dtype=np.float64)
    p = np.asarray(predicted, dtype=np.float64)
    return float(np.sqrt(np.mean((y - p) ** 2)))


def ubrmse(measured, predicted) -> float:
    r = rmse(measured, predicted)
    b = bias(measured, predicted)
    radicand = r * r - b * b
    if radicand < 0.0:
        log.warning("ubRMSE radicand %.3e below zero; clamping", radicand)
        radicand = 0.0
    return float(np.sqrt(radicand))


CSV_COLUMNS = ("approach", "parameter", "R", "bias", "rmse", "ubrmse", "n_cases")


def metric_row(approach: str, parameter: str, measured, predicted) -> dict:
    """One comparison-table row; R is empty when mathematically undefined."""
    try:
        r = pearson_r(measured, predicted)
    except UndefinedMetricError:
        r = None
    return {
        "approach": approach,
        "parameter": parameter,
        "R": r,
        "bias": bias(measured, predicted),
        "rmse": rmse(measured, predicted),
        "ubrmse": ubrmse(measured, predicted),
        "n_cases": len(np.asarray(measured)),
    }


def emit_report(rows: list[EvalRow], metric_rows: list[dict], out_dir) -> list[Path]:
    """Write one metrics CSV per parameter plus measured-vs-predicted scatters.

    CSVs carry the fixed column set and one row per approach; scatters show
    the per-case points with a 1:1 line, one file per (parameter, approach).
    Fails without writing anything when there is nothing to report.
    """
    if not rows or not metric_rows:
        raise ConfigError("nothing to report")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    for parameter in sorted({m["parameter"] for m in metric_rows}):
        path = out_dir / f"metrics_{parameter}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for m in metric_rows:
                if m["parameter"] != parameter:
                    continue
                writer.writerow([
                    m["approach"], m["parameter"],
                    "" if m["R"] is None else repr(float(m["R"])),
                    repr(float(m["bias"])), repr(float(m["rmse"])),
                    repr(float(m["ubrmse"])), m["n_cases"],
                ])
        written.append(path)

    groups: dict[tuple[str, str], list[EvalRow]] = {}
    for row in rows:
        groups.setdefault((row.parameter, row.approach), []).append(row)
    for (parameter, approach), members in sorted(groups.items()):
        points = [(r.measured, r.predicted) for r in members]
        path = out_dir / f"scatter_{parameter}_{approach}.svg"
        scatter_plot(points, path,
                     title=f"{parameter}: measured vs predicted ({approach})",
                     xlabel="measured", ylabel="predicted", identity_line=True)
        written.append(path)
    return written
