"""Report writers: machine-readable JSON/CSV, aligned-column text, and
matplotlib figures rendered to files next to the delimited output.

Writers are deterministic for deterministic inputs: no timestamps, times
rounded to report precision at write, money serialized as exact decimal
strings. Two replayed evaluation runs must produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
from decimal import Decimal
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .costing import ResourceMetrics
from .datastore import DatasetManifest
from .evaluation import EvaluationResult, MetricSet, VendorRow

ACCURACY_NOTE = (
    "Accuracy for this system is computed over every record it scanned; excluded "
    "records are scans that errored. Vendor accuracies are computed only over "
    "records that vendor rated."
)


def _fmt_metric(x: float) -> str:
    return f"{x:.3f}"


def _fmt_time(d: Decimal) -> str:
    return f"{d:.2f}"


def _fmt_cost(d: Decimal) -> str:
    return f"{d:.8f}"


def _metrics_dict(m: MetricSet) -> dict:
    return {
        "accuracy": round(m.accuracy, 6),
        "precision": round(m.precision, 6),
        "recall": round(m.recall, 6),
        "f1": round(m.f1, 6),
    }


def _resources_dict(r: ResourceMetrics | None) -> dict | None:
    if r is None:
        return None
    return {
        "avg_time_per_site_s": _fmt_time(r.avg_time_per_site),
        "avg_cost_per_site_usd": _fmt_cost(r.avg_cost_per_site),
        "price_per_1k_usd": _fmt_cost(r.price_per_1k),
    }


def _write_json(path: Path, payload) -> None:
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


# ---------------------------------------------------------------------------
# Strategy evaluation report


def write_eval_report(
    out_dir: str | Path,
    result: EvaluationResult,
    manifest: DatasetManifest,
    *,
    figures: bool = True,
) -> Path:
    """Write report.json, report.txt, metrics.csv, records.jsonl and figures."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    legitimate, phishing = manifest.counts

    payload = {
        "strategy": result.strategy_id,
        "model": result.model_id,
        "dataset": {
            "checksum": result.manifest_checksum,
            "records": len(manifest.records),
            "legitimate": legitimate,
            "phishing": phishing,
        },
        "confusion": {
            "tp": result.counts.tp,
            "fp": result.counts.fp,
            "fn": result.counts.fn,
            "tn": result.counts.tn,
            "excluded": result.counts.excluded,
        },
        "metrics": _metrics_dict(result.metrics),
        "resources": _resources_dict(result.resources),
        "notes": [ACCURACY_NOTE],
    }
    _write_json(out / "report.json", payload)

    with open(out / "records.jsonl", "w", encoding="utf-8") as f:
        for record in result.records:
            f.write(json.dumps(record.to_dict(), sort_keys=True, ensure_ascii=False) + "\n")

    with open(out / "metrics.csv", "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(
            [
                "strategy", "model", "accuracy", "precision", "recall", "f1",
                "tp", "fp", "fn", "tn", "excluded",
                "avg_time_s", "avg_cost_usd", "price_per_1k_usd",
            ]
        )
        r = result.resources
        writer.writerow(
            [
                result.strategy_id,
                result.model_id,
                _fmt_metric(result.metrics.accuracy),
                _fmt_metric(result.metrics.precision),
                _fmt_metric(result.metrics.recall),
                _fmt_metric(result.metrics.f1),
                result.counts.tp,
                result.counts.fp,
                result.counts.fn,
                result.counts.tn,
                result.counts.excluded,
                _fmt_time(r.avg_time_per_site) if r else "",
                _fmt_cost(r.avg_cost_per_site) if r else "",
                _fmt_cost(r.price_per_1k) if r else "",
            ]
        )

    (out / "report.txt").write_text(render_eval_text(result, manifest), encoding="utf-8")

    if figures:
        fig_dir = out / "figures"
        fig_dir.mkdir(exist_ok=True)
        _plot_metrics(fig_dir / "detection_metrics.png", result)
        if result.resources is not None:
            _plot_resources(fig_dir / "resource_metrics.png", result)
    return out


def render_eval_text(result: EvaluationResult, manifest: DatasetManifest) -> str:
    legitimate, phishing = manifest.counts
    c = result.counts
    m = result.metrics
    lines = [
        f"Detection metrics: {result.strategy_id} (model {result.model_id})",
        f"dataset: {len(manifest.records)} records "
        f"({legitimate} legitimate, {phishing} phishing), "
        f"checksum {result.manifest_checksum[:12]}",
        "",
        f"{'':24}{'Accuracy':>10}{'Precision':>11}{'Recall':>8}{'F1':>7}",
        f"{result.strategy_id:24}"
        f"{_fmt_metric(m.accuracy):>10}{_fmt_metric(m.precision):>11}"
        f"{_fmt_metric(m.recall):>8}{_fmt_metric(m.f1):>7}",
        "",
        f"confusion: tp={c.tp} fp={c.fp} fn={c.fn} tn={c.tn} excluded={c.excluded}",
        "",
    ]
    if result.resources is not None:
        r = result.resources
        lines += [
            "Resource usage (analysis phase only)",
            f"{'':24}{'Avg time (s)':>13}{'Avg cost ($)':>14}{'Per 1k ($)':>12}",
            f"{result.strategy_id:24}"
            f"{_fmt_time(r.avg_time_per_site):>13}"
            f"{_fmt_cost(r.avg_cost_per_site):>14}"
            f"{_fmt_cost(r.price_per_1k):>12}",
            "",
        ]
    lines.append(ACCURACY_NOTE)
    lines.append("")
    return "\n".join(lines)


def _plot_metrics(path: Path, result: EvaluationResult) -> None:
    m = result.metrics
    names = ["accuracy", "precision", "recall", "f1"]
    values = [m.accuracy, m.precision, m.recall, m.f1]
    fig, ax = plt.subplots(figsize=(5.5, 3.2))
    bars = ax.bar(names, values, color="#4878cf")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("score")
    ax.set_title(f"{result.strategy_id}: detection metrics")
    ax.bar_label(bars, fmt="%.3f", padding=2, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _plot_resources(path: Path, result: EvaluationResult) -> None:
    r = result.resources
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(7, 3.2))
    ax1.bar([result.strategy_id], [float(r.avg_time_per_site)], color="#6acc64")
    ax1.set_ylabel("avg time per site (s)")
    ax2.bar([result.strategy_id], [float(r.price_per_1k)], color="#d65f5f")
    ax2.set_ylabel("price per 1k sites ($)")
    for ax in (ax1, ax2):
        ax.tick_params(axis="x", labelrotation=15)
    fig.suptitle("resource usage")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


# ---------------------------------------------------------------------------
# Vendor comparison report


def write_vendor_report(
    out_dir: str | Path,
    rows: list[VendorRow],
    manifest: DatasetManifest,
    *,
    figures: bool = True,
) -> Path:
    """Write vendors.json, vendors.txt, vendors.csv and the ranking figure."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    legitimate, phishing = manifest.counts

    payload = {
        "dataset": {
            "checksum": manifest.checksum,
            "records": len(manifest.records),
            "legitimate": legitimate,
            "phishing": phishing,
        },
        "rows": [
            {
                "vendor": row.name,
                "is_ours": row.is_ours,
                "metrics": _metrics_dict(row.metrics),
                "rated": row.counts.classified if row.counts else None,
                "excluded": row.counts.excluded if row.counts else None,
            }
            for row in rows
        ],
        "notes": [ACCURACY_NOTE],
    }
    _write_json(out / "vendors.json", payload)

    with open(out / "vendors.csv", "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(
            ["vendor", "accuracy", "precision", "recall", "f1", "rated", "excluded", "is_ours"]
        )
        for row in rows:
            writer.writerow(
                [
                    row.name,
                    _fmt_metric(row.metrics.accuracy),
                    _fmt_metric(row.metrics.precision),
                    _fmt_metric(row.metrics.recall),
                    _fmt_metric(row.metrics.f1),
                    row.counts.classified if row.counts else "",
                    row.counts.excluded if row.counts else "",
                    "yes" if row.is_ours else "no",
                ]
            )

    (out / "vendors.txt").write_text(render_vendor_text(rows, manifest), encoding="utf-8")

    if figures:
        fig_dir = out / "figures"
        fig_dir.mkdir(exist_ok=True)
        _plot_vendor_f1(fig_dir / "vendor_f1.png", rows)
    return out


def render_vendor_text(rows: list[VendorRow], manifest: DatasetManifest) -> str:
    legitimate, phishing = manifest.counts
    width = max([len("Vendor")] + [len(r.name) for r in rows]) + 2
    lines = [
        "Vendor comparison",
        f"dataset: {len(manifest.records)} records "
        f"({legitimate} legitimate, {phishing} phishing)",
        "",
        f"{'Vendor':{width}}{'Accuracy':>10}{'Precision':>11}{'Recall':>8}{'F1':>7}"
        f"{'Rated':>8}{'Excl.':>7}",
    ]
    for row in rows:
        name = row.name + (" *" if row.is_ours else "")
        lines.append(
            f"{name:{width}}"
            f"{_fmt_metric(row.metrics.accuracy):>10}"
            f"{_fmt_metric(row.metrics.precision):>11}"
            f"{_fmt_metric(row.metrics.recall):>8}"
            f"{_fmt_metric(row.metrics.f1):>7}"
            f"{row.counts.classified if row.counts else '-':>8}"
            f"{row.counts.excluded if row.counts else '-':>7}"
        )
    if any(r.is_ours for r in rows):
        lines += ["", "* this system"]
    lines.append("")
    return "\n".join(lines)


def _plot_vendor_f1(path: Path, rows: list[VendorRow]) -> None:
    ranked = list(reversed(rows))
    names = [r.name for r in ranked]
    values = [r.metrics.f1 for r in ranked]
    colors = ["#d65f5f" if r.is_ours else "#4878cf" for r in ranked]
    fig, ax = plt.subplots(figsize=(6.5, 0.35 * len(rows) + 1.4))
    bars = ax.barh(names, values, color=colors)
    ax.set_xlim(0, 1.05)
    ax.set_xlabel("F1 score")
    ax.set_title("phishing detection F1 by vendor")
    ax.bar_label(bars, fmt="%.3f", padding=2, fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
