"""Delimited report files and the figures rendered alongside them.

All CSV output is deterministic: fixed column order, sorted rows, fixed float
formatting.  Every table writer has a figure twin that drops a PNG next to
the data so a run directory is browsable at a glance.
"""
from __future__ import annotations

import csv
from pathlib import Path
from statistics import mean, stdev
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .constraints import STRUCTURAL_IDS
from .evaluation import SWEEP_THRESHOLDS, MetricReport, StatTestResult

_FLOAT = "{:.6f}"


def _fmt(value: float) -> str:
    return _FLOAT.format(value)


def threshold_key(threshold: float | None) -> str:
    return "none" if threshold is None else f"{threshold:.1f}"


def _save_figure(fig, path: Path) -> None:
    fig.savefig(path, format="png", dpi=100, metadata={"Software": None})
    plt.close(fig)


def _threshold_axis(keys: Sequence[str]):
    return range(len(keys)), list(keys)


# -- per-comparison threshold sweep -------------------------------------------

def write_sweep_csv(path: str | Path, reports: Sequence[MetricReport]) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["threshold", "correctness", "completeness"])
        for report in reports:
            writer.writerow(
                [
                    threshold_key(report.threshold),
                    _fmt(report.correctness),
                    _fmt(report.completeness),
                ]
            )
    return path


def plot_sweep(path: str | Path, reports: Sequence[MetricReport]) -> Path:
    path = Path(path)
    keys = [threshold_key(r.threshold) for r in reports]
    xs, labels = _threshold_axis(keys)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(xs, [r.correctness for r in reports], marker="o", label="correctness")
    ax.plot(xs, [r.completeness for r in reports], marker="s", label="completeness")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(labels)
    ax.set_xlabel("threshold")
    ax.set_ylabel("score")
    ax.set_ylim(-0.02, 1.02)
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save_figure(fig, path)
    return path


# -- batch aggregates ----------------------------------------------------------

def write_violation_counts(
    path: str | Path, counts: dict[str, int], diagrams_total: int, unsound: int
) -> Path:
    """Constraint-by-constraint violation tallies over a batch of diagrams."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(list(STRUCTURAL_IDS) + ["total", "diagrams", "violating_pct"])
        total = sum(counts.get(cid, 0) for cid in STRUCTURAL_IDS)
        pct = 100.0 * unsound / diagrams_total if diagrams_total else 0.0
        writer.writerow(
            [counts.get(cid, 0) for cid in STRUCTURAL_IDS]
            + [total, diagrams_total, _fmt(pct)]
        )
    return path


def aggregate_metrics(
    sweeps: Sequence[Sequence[MetricReport]],
) -> list[dict[str, object]]:
    """Mean and standard deviation per threshold across many sweeps."""
    rows = []
    for index, threshold in enumerate(SWEEP_THRESHOLDS):
        cors = [sweep[index].correctness for sweep in sweeps]
        coms = [sweep[index].completeness for sweep in sweeps]
        rows.append(
            {
                "threshold": threshold_key(threshold),
                "correctness_mean": mean(cors),
                "correctness_sd": stdev(cors) if len(cors) > 1 else 0.0,
                "completeness_mean": mean(coms),
                "completeness_sd": stdev(coms) if len(coms) > 1 else 0.0,
            }
        )
    return rows


def write_metric_aggregate(path: str | Path, rows: list[dict[str, object]]) -> Path:
    path = Path(path)
    columns = [
        "threshold",
        "correctness_mean",
        "correctness_sd",
        "completeness_mean",
        "completeness_sd",
    ]
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in rows:
            writer.writerow(
                [row["threshold"]] + [_fmt(float(row[c])) for c in columns[1:]]
            )
    return path


def plot_metric_aggregate(path: str | Path, rows: list[dict[str, object]]) -> Path:
    path = Path(path)
    xs, labels = _threshold_axis([str(r["threshold"]) for r in rows])
    fig, ax = plt.subplots(figsize=(6, 4))
    for metric, marker in (("correctness", "o"), ("completeness", "s")):
        means = [float(r[f"{metric}_mean"]) for r in rows]
        sds = [float(r[f"{metric}_sd"]) for r in rows]
        ax.errorbar(list(xs), means, yerr=sds, marker=marker, capsize=3, label=metric)
    ax.set_xticks(list(xs))
    ax.set_xticklabels(labels)
    ax.set_xlabel("threshold")
    ax.set_ylabel("score")
    ax.set_ylim(-0.02, 1.02)
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save_figure(fig, path)
    return path


def write_cost(
    path: str | Path,
    calls_mean: float,
    input_mean: float,
    output_mean: float,
    reasoning_mean: float,
    runs: int,
) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["input_tokens_mean", "output_tokens_mean", "reasoning_tokens_mean",
             "calls_mean", "runs"]
        )
        writer.writerow(
            [_fmt(input_mean), _fmt(output_mean), _fmt(reasoning_mean),
             _fmt(calls_mean), runs]
        )
    return path


# -- pairwise statistical comparison -------------------------------------------

def write_comparison(
    path: str | Path,
    rows: list[tuple[str, str, str, str, StatTestResult]],
) -> Path:
    """Rows of (variant_a, variant_b, metric, threshold, test result)."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["variant_a", "variant_b", "metric", "threshold", "p_value", "a12",
             "magnitude"]
        )
        for variant_a, variant_b, metric, threshold, result in rows:
            writer.writerow(
                [
                    variant_a,
                    variant_b,
                    metric,
                    threshold,
                    _fmt(result.p_value),
                    _fmt(result.effect.a12),
                    result.effect.magnitude,
                ]
            )
    return path


def plot_comparison(
    path: str | Path,
    rows: list[tuple[str, str, str, str, StatTestResult]],
) -> Path:
    path = Path(path)
    by_metric: dict[str, list[tuple[str, StatTestResult]]] = {}
    for _, _, metric, threshold, result in rows:
        by_metric.setdefault(metric, []).append((threshold, result))
    fig, axes = plt.subplots(
        1, max(len(by_metric), 1), figsize=(5 * max(len(by_metric), 1), 4),
        squeeze=False,
    )
    for ax, (metric, points) in zip(axes[0], sorted(by_metric.items())):
        xs, labels = _threshold_axis([t for t, _ in points])
        ax.axhline(0.5, color="grey", linewidth=0.8, linestyle="--")
        ax.plot(list(xs), [r.effect.a12 for _, r in points], marker="o", label="A12")
        ax.plot(list(xs), [r.p_value for _, r in points], marker="x", label="p-value")
        ax.set_xticks(list(xs))
        ax.set_xticklabels(labels)
        ax.set_title(metric)
        ax.set_xlabel("threshold")
        ax.set_ylim(-0.02, 1.02)
        ax.legend()
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save_figure(fig, path)
    return path
