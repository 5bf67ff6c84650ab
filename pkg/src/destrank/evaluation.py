"""Run-level evaluation: per-query metrics with confidence intervals,
method-vs-baseline significance, hyperparameter sweeps, and report output.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

from .corpus import Dataset
from .errors import MissingRanking, TooFewValues, ZeroVariance
from .metrics import compute_metric
from .stats import SignificanceResult, mean_and_ci, paired_t_test


@dataclass(frozen=True)
class MetricReport:
    metric: str
    per_query: dict[str, float]
    mean: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class SweepResult:
    parameter: str
    values: tuple[int, ...]
    metrics: dict[str, tuple[float, ...]]


def evaluate_run(
    rankings: Mapping[str, Sequence[str]],
    dataset: Dataset,
    metrics: Sequence[str],
) -> list[MetricReport]:
    """Score every dataset query under every requested metric.

    ``rankings`` maps qid to a ranked list of destination ids (best first).
    With a single query the CI cannot be computed and collapses to the mean.
    """
    reports = []
    for spec in metrics:
        per_query: dict[str, float] = {}
        for query in dataset.queries:
            if query.qid not in rankings:
                raise MissingRanking(query.qid)
            relevant = set(dataset.qrels[query.qid].relevant)
            per_query[query.qid] = compute_metric(spec, rankings[query.qid], relevant)
        values = list(per_query.values())
        try:
            mean, lo, hi = mean_and_ci(values)
        except TooFewValues:
            mean = sum(values) / len(values)
            lo = hi = mean
        reports.append(
            MetricReport(metric=spec, per_query=per_query, mean=mean, ci_low=lo, ci_high=hi)
        )
    return reports


def sweep(
    parameter: str,
    values: Sequence[int],
    run_fn: Callable[[int], Mapping[str, Sequence[str]]],
    dataset: Dataset,
    metrics: Sequence[str],
) -> SweepResult:
    """Re-run scoring and evaluation for each parameter value.

    ``run_fn`` maps one parameter value (a top_n or a subtopic count) to a
    full set of rankings.
    """
    if not values:
        raise ValueError("sweep value range is empty")
    columns: dict[str, list[float]] = {m: [] for m in metrics}
    for value in values:
        rankings = run_fn(value)
        for report in evaluate_run(rankings, dataset, metrics):
            columns[report.metric].append(report.mean)
    return SweepResult(
        parameter=parameter,
        values=tuple(values),
        metrics={m: tuple(col) for m, col in columns.items()},
    )


def save_sweep_csv(result: SweepResult, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([result.parameter] + list(result.metrics.keys()))
        for i, value in enumerate(result.values):
            writer.writerow([value] + [f"{col[i]:.6f}" for col in result.metrics.values()])


@dataclass(frozen=True)
class MethodRow:
    method: str
    reports: list[MetricReport]
    significance: dict[str, Optional[SignificanceResult]] = field(default_factory=dict)


def compare_to_baseline(
    candidate: Sequence[MetricReport], baseline: Sequence[MetricReport]
) -> dict[str, Optional[SignificanceResult]]:
    """Per-metric paired t-tests of a candidate run against a baseline run.

    Identical per-query values yield no test result (zero variance).
    """
    baseline_by_metric = {r.metric: r for r in baseline}
    out: dict[str, Optional[SignificanceResult]] = {}
    for report in candidate:
        base = baseline_by_metric.get(report.metric)
        if base is None:
            continue
        try:
            out[report.metric] = paired_t_test(report.per_query, base.per_query)
        except ZeroVariance:
            out[report.metric] = None
    return out


def _cell(report: MetricReport, sig: Optional[SignificanceResult], baseline_mean: float) -> str:
    half = (report.ci_high - report.ci_low) / 2.0
    star = ""
    if sig is not None and sig.significant_at_01 and report.mean > baseline_mean:
        star = "*"
    return f"{report.mean:.3f}±{half:.3f}{star}"


def write_report(
    rows: Sequence[MethodRow],
    metrics: Sequence[str],
    md_path,
    csv_path,
    baseline_method: Optional[str] = None,
) -> None:
    """Emit report.md and report.csv: one row per method, one column per
    metric, cells "mean±halfwidth" with an asterisk for a significant
    improvement (p < 0.01) over the named baseline."""
    baseline = next((r for r in rows if r.method == baseline_method), None)
    table: list[list[str]] = []
    for row in rows:
        by_metric = {r.metric: r for r in row.reports}
        cells = [row.method]
        for metric in metrics:
            report = by_metric[metric]
            sig = row.significance.get(metric)
            base_mean = 0.0
            if baseline is not None:
                base_mean = next(
                    (r.mean for r in baseline.reports if r.metric == metric), 0.0
                )
            cells.append(_cell(report, sig, base_mean))
        table.append(cells)

    header = ["method"] + list(metrics)
    with Path(csv_path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(table)

    lines = ["| " + " | ".join(header) + " |",
             "|" + "|".join("---" for _ in header) + "|"]
    for cells in table:
        lines.append("| " + " | ".join(cells) + " |")
    if baseline_method:
        lines.append("")
        lines.append(
            f"`*` = significant improvement over `{baseline_method}` "
            "(paired t-test, p < 0.01)."
        )
    Path(md_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
