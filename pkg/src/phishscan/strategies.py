"""Combination strategies composing agent verdicts into a final label.

Three schemes are supported: single-agent baselines, majority voting
(all three agents, phishing on a 2-of-3 vote), and progressive analysis
(URL agent first, escalating to screenshot and then HTML only while no
agent has flagged phishing). Artifact capture happens lazily: progressive
performs zero captures when the URL agent already flags the site.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import Decimal

from .acquisition import CaptureOptions, CaptureProvider, extend_resource
from .agents import ModelBackend, PromptOptions, classify
from .core import (
    AgentKind,
    AgentReport,
    Label,
    ScanOutcome,
    Source,
    WebResource,
    required_inputs,
    utcnow,
)
from .costing import BudgetGuard, PriceBook
from .errors import CaptureFailed

AGENT_ORDER = (AgentKind.URL, AgentKind.SCREENSHOT, AgentKind.HTML)

SINGLE_STRATEGY_KINDS = {
    "single-url": AgentKind.URL,
    "single-screenshot": AgentKind.SCREENSHOT,
    "single-html": AgentKind.HTML,
}

DEFAULT_STRATEGY = "progressive"


@dataclass
class ScanDeps:
    """Everything a strategy needs to run one scan."""

    backend: ModelBackend
    price_book: PriceBook
    capture: CaptureProvider
    capture_options: CaptureOptions = field(default_factory=CaptureOptions)
    prompt_options: PromptOptions = field(default_factory=PromptOptions)
    max_cost: Decimal | None = None

    def budget(self) -> BudgetGuard | None:
        return BudgetGuard(self.max_cost) if self.max_cost is not None else None


def run_scan(
    strategy_id: str,
    url: str,
    deps: ScanDeps,
    source: Source = Source.DIRECT_URL,
) -> ScanOutcome:
    """Dispatch on the external strategy vocabulary."""
    if strategy_id in SINGLE_STRATEGY_KINDS:
        return run_single(SINGLE_STRATEGY_KINDS[strategy_id], url, deps, source)
    if strategy_id == "majority":
        return run_majority(url, deps, source)
    if strategy_id == "progressive":
        return run_progressive(url, deps, source)
    raise ValueError(f"unknown strategy {strategy_id!r}")


def _classify(
    kind: AgentKind, resource: WebResource, deps: ScanDeps, budget: BudgetGuard | None
) -> AgentReport:
    return classify(
        kind,
        resource,
        deps.backend,
        deps.price_book,
        prompt_options=deps.prompt_options,
        budget=budget,
    )


def _outcome(
    resource: WebResource,
    strategy_id: str,
    final_label: Label,
    reports: list[AgentReport],
    started: float,
) -> ScanOutcome:
    return ScanOutcome(
        resource=resource,
        strategy_id=strategy_id,
        final_label=final_label,
        reports=tuple(reports),
        total_latency=time.perf_counter() - started,
        total_cost=sum((r.cost for r in reports), Decimal("0")),
        created_at=utcnow(),
    )


def run_single(
    kind: AgentKind,
    url: str,
    deps: ScanDeps,
    source: Source = Source.DIRECT_URL,
) -> ScanOutcome:
    """One agent, acquiring only the inputs that agent needs."""
    started = time.perf_counter()
    need = required_inputs(kind) - {"url"}
    resource = extend_resource(
        WebResource(url=url, source=source), need, deps.capture, deps.capture_options
    )
    report = _classify(kind, resource, deps, deps.budget())
    strategy_id = f"single-{kind.value}"
    return _outcome(resource, strategy_id, report.label, [report], started)


def run_majority(
    url: str,
    deps: ScanDeps,
    source: Source = Source.DIRECT_URL,
) -> ScanOutcome:
    """All three agents over all three artifacts; phishing on a 2-of-3 vote.

    Screenshot and HTML are captured up front in one navigation. Agents
    run concurrently (they are independent) but reports keep the fixed
    URL, screenshot, HTML order. Any agent failure fails the scan: the
    vote is defined over exactly three verdicts.
    """
    started = time.perf_counter()
    resource = extend_resource(
        WebResource(url=url, source=source),
        {"screenshot", "html"},
        deps.capture,
        deps.capture_options,
    )
    budget = deps.budget()
    with ThreadPoolExecutor(max_workers=len(AGENT_ORDER)) as pool:
        futures = [pool.submit(_classify, kind, resource, deps, budget) for kind in AGENT_ORDER]
        reports = [f.result() for f in futures]
    phishing_votes = sum(1 for r in reports if r.label is Label.PHISHING)
    final = Label.PHISHING if phishing_votes >= 2 else Label.LEGITIMATE
    return _outcome(resource, "majority", final, reports, started)


def run_progressive(
    url: str,
    deps: ScanDeps,
    source: Source = Source.DIRECT_URL,
) -> ScanOutcome:
    """Staged scan: URL agent, then screenshot, then HTML.

    The first phishing verdict ends the scan immediately; later stages are
    neither captured nor analyzed. The final label is legitimate only when
    every invoked agent said legitimate.
    """
    started = time.perf_counter()
    resource = WebResource(url=url, source=source)
    budget = deps.budget()
    reports: list[AgentReport] = []

    stages: tuple[tuple[AgentKind, frozenset[str]], ...] = (
        (AgentKind.URL, frozenset()),
        (AgentKind.SCREENSHOT, frozenset({"screenshot"})),
        (AgentKind.HTML, frozenset({"html"})),
    )
    for kind, need in stages:
        try:
            resource = extend_resource(resource, need, deps.capture, deps.capture_options)
        except CaptureFailed as exc:
            raise CaptureFailed(url, exc.cause, partial_reports=reports) from exc
        report = _classify(kind, resource, deps, budget)
        reports.append(report)
        if report.label is Label.PHISHING:
            break

    return _outcome(resource, "progressive", reports[-1].label, reports, started)
