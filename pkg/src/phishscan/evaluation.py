"""Dataset-scale evaluation and vendor comparison.

Phishing is the positive class everywhere. Records a classifier did not
rate (vendor "unrated", or an agent error during our own runs) are
excluded from that classifier's denominators and surfaced as an explicit
count so exclusion can never hide silently.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path
from typing import Iterable, Sequence

from .agents import ModelBackend, PromptOptions
from .acquisition import FixtureCaptureProvider
from .core import Label, ScanOutcome, report_to_dict
from .costing import PriceBook, ResourceMetrics
from .datastore import DatasetManifest
from .errors import NoClassifiedRecords, PhishscanError, UnknownUrlInReport
from .strategies import ScanDeps, run_scan

logger = logging.getLogger(__name__)

VENDOR_VERDICTS = ("phishing-like", "clean-like", "unrated")


@dataclass(frozen=True)
class ConfusionCounts:
    """TP/FP/FN/TN with phishing positive, plus unrated/errored records."""

    tp: int
    fp: int
    fn: int
    tn: int
    excluded: int = 0

    def __post_init__(self):
        for name in ("tp", "fp", "fn", "tn", "excluded"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def classified(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def total(self) -> int:
        return self.classified + self.excluded


@dataclass(frozen=True)
class MetricSet:
    accuracy: float
    precision: float
    recall: float
    f1: float


def f1_from(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall; 0 when both are 0."""
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def compute_metrics(counts: ConfusionCounts) -> MetricSet:
    """Standard binary metrics over the classified records only."""
    if counts.classified == 0:
        raise NoClassifiedRecords("no classified records to score")
    accuracy = (counts.tp + counts.tn) / counts.classified
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 0.0
    recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else 0.0
    return MetricSet(
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f1=f1_from(precision, recall),
    )


# ---------------------------------------------------------------------------
# Strategy evaluation over a dataset


def reports_digest(outcome: ScanOutcome) -> str:
    """Digest of the semantic report content.

    Latency is excluded on purpose: it is wall-clock noise, and the digest
    must be stable across replayed runs for diffing.
    """
    stripped = []
    for rep in outcome.reports:
        d = report_to_dict(rep)
        d.pop("latency")
        stripped.append(d)
    blob = json.dumps(stripped, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class RecordResult:
    """Per-record evaluation audit row."""

    url: str
    true_label: Label
    final_label: Label | None
    error: str | None
    strategy_id: str
    reports_digest: str | None
    report_count: int
    cost: Decimal | None

    def to_dict(self) -> dict:
        return {
            "url": self.url,
            "true_label": self.true_label.value,
            "final_label": self.final_label.value if self.final_label else None,
            "error": self.error,
            "strategy": self.strategy_id,
            "reports_digest": self.reports_digest,
            "report_count": self.report_count,
            "cost": str(self.cost) if self.cost is not None else None,
        }


@dataclass(frozen=True)
class EvaluationResult:
    strategy_id: str
    model_id: str
    manifest_checksum: str
    counts: ConfusionCounts
    metrics: MetricSet
    resources: ResourceMetrics | None
    records: tuple[RecordResult, ...]


def evaluate_strategy(
    strategy_id: str,
    manifest: DatasetManifest,
    backend: ModelBackend,
    price_book: PriceBook,
    *,
    jobs: int = 8,
    prompt_options: PromptOptions = PromptOptions(),
    max_cost: Decimal | None = None,
) -> EvaluationResult:
    """Run a strategy over every manifest record using stored artifacts.

    No live capture happens: screenshots and HTML come from the dataset.
    Per-record pipeline errors mark that record excluded and the run
    continues; results keep manifest order regardless of completion order.
    """
    deps = ScanDeps(
        backend=backend,
        price_book=price_book,
        capture=FixtureCaptureProvider(manifest),
        prompt_options=prompt_options,
        max_cost=max_cost,
    )

    def scan_one(record):
        try:
            return run_scan(strategy_id, record.url, deps), None
        except PhishscanError as exc:
            return None, f"{type(exc).__name__}: {exc}"

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        outcomes = list(pool.map(scan_one, manifest.records))

    tp = fp = fn = tn = excluded = 0
    time_sum = Decimal("0")
    cost_sum = Decimal("0")
    scanned = 0
    results: list[RecordResult] = []
    for record, (outcome, error) in zip(manifest.records, outcomes):
        if outcome is None:
            excluded += 1
            logger.warning("record excluded (%s): %s", record.url, error)
            results.append(
                RecordResult(
                    url=record.url,
                    true_label=record.true_label,
                    final_label=None,
                    error=error,
                    strategy_id=strategy_id,
                    reports_digest=None,
                    report_count=0,
                    cost=None,
                )
            )
            continue
        predicted = outcome.final_label
        truth = record.true_label
        if truth is Label.PHISHING:
            if predicted is Label.PHISHING:
                tp += 1
            else:
                fn += 1
        else:
            if predicted is Label.PHISHING:
                fp += 1
            else:
                tn += 1
        scanned += 1
        cost_sum += outcome.total_cost
        for rep in outcome.reports:
            time_sum += Decimal(str(rep.latency))
        results.append(
            RecordResult(
                url=record.url,
                true_label=truth,
                final_label=predicted,
                error=None,
                strategy_id=strategy_id,
                reports_digest=reports_digest(outcome),
                report_count=len(outcome.reports),
                cost=outcome.total_cost,
            )
        )

    counts = ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn, excluded=excluded)
    resources = None
    if scanned:
        avg_cost = cost_sum / Decimal(scanned)
        resources = ResourceMetrics(
            avg_time_per_site=time_sum / Decimal(scanned),
            avg_cost_per_site=avg_cost,
            price_per_1k=avg_cost * 1000,
        )
    return EvaluationResult(
        strategy_id=strategy_id,
        model_id=backend.model_id,
        manifest_checksum=manifest.checksum,
        counts=counts,
        metrics=compute_metrics(counts),
        resources=resources,
        records=tuple(results),
    )


# ---------------------------------------------------------------------------
# Vendor comparison


@dataclass(frozen=True)
class VendorReport:
    """One commercial scanner's per-URL verdicts.

    URLs absent from the mapping are treated as unrated: the vendor never
    saw them, so they are excluded from that vendor's denominators.
    """

    vendor_name: str
    verdicts: dict[str, str]

    def __post_init__(self):
        bad = {v for v in self.verdicts.values() if v not in VENDOR_VERDICTS}
        if bad:
            raise ValueError(f"unknown vendor verdicts: {sorted(bad)}")


def load_vendor_report(path: str | Path) -> VendorReport:
    """Read one vendor report file (schema: {"vendor": str, "verdicts": {url: verdict}})."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return VendorReport(vendor_name=data["vendor"], verdicts=dict(data["verdicts"]))


def vendor_confusion(report: VendorReport, manifest: DatasetManifest) -> ConfusionCounts:
    known = manifest.by_url()
    for url in report.verdicts:
        if url not in known:
            raise UnknownUrlInReport(report.vendor_name, url)
    tp = fp = fn = tn = excluded = 0
    for record in manifest.records:
        verdict = report.verdicts.get(record.url, "unrated")
        if verdict == "unrated":
            excluded += 1
            continue
        flagged = verdict == "phishing-like"
        if record.true_label is Label.PHISHING:
            if flagged:
                tp += 1
            else:
                fn += 1
        else:
            if flagged:
                fp += 1
            else:
                tn += 1
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn, excluded=excluded)


@dataclass(frozen=True)
class VendorRow:
    name: str
    counts: ConfusionCounts | None
    metrics: MetricSet
    is_ours: bool = False


def compare_vendors(
    reports: Sequence[VendorReport],
    manifest: DatasetManifest,
    ours: tuple[str, MetricSet] | None = None,
) -> list[VendorRow]:
    """Score every vendor against the manifest, ranked by F1 descending.

    When ``ours`` is supplied (name plus this system's metrics from an
    evaluation run), its row participates in the ranking for side-by-side
    presentation.
    """
    rows = []
    for report in reports:
        counts = vendor_confusion(report, manifest)
        rows.append(VendorRow(name=report.vendor_name, counts=counts, metrics=compute_metrics(counts)))
    if ours is not None:
        rows.append(VendorRow(name=ours[0], counts=None, metrics=ours[1], is_ours=True))
    rows.sort(key=lambda r: (-r.metrics.f1, r.name))
    return rows


# ---------------------------------------------------------------------------
# VirusTotal v3 conversion

_VT_CATEGORY_MAP = {
    "malicious": "phishing-like",
    "suspicious": "phishing-like",
    "harmless": "clean-like",
    "undetected": "unrated",
    "timeout": "unrated",
    "type-unsupported": "unrated",
}


def vendor_reports_from_virustotal(paths: Iterable[str | Path]) -> list[VendorReport]:
    """Distill raw VirusTotal v3 URL-analysis JSON files into vendor reports.

    Each input file must carry ``data.attributes.url`` and
    ``data.attributes.last_analysis_results`` (the per-engine verdict map).
    Unknown categories map to unrated.
    """
    per_vendor: dict[str, dict[str, str]] = {}
    for path in paths:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        try:
            attrs = data["data"]["attributes"]
            url = attrs["url"]
            engines = attrs["last_analysis_results"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"{path}: not a VirusTotal v3 URL analysis payload") from exc
        for engine_name, entry in engines.items():
            category = str(entry.get("category", "undetected"))
            verdict = _VT_CATEGORY_MAP.get(category, "unrated")
            per_vendor.setdefault(engine_name, {})[url] = verdict
    return [
        VendorReport(vendor_name=name, verdicts=verdicts)
        for name, verdicts in sorted(per_vendor.items())
    ]
