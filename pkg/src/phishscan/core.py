"""Core domain types shared by every part of the scanner.

All types here are immutable values: construct once, share freely across
threads. Canonical JSON serialization uses snake_case field names, labels
spelled exactly "Phishing"/"Legitimate", base64 for image bytes, and
decimal strings for money so ledgers round-trip without float loss.
"""

from __future__ import annotations

import base64
import enum
import io
from dataclasses import dataclass
from datetime import datetime, timezone
from decimal import Decimal
from pathlib import Path
from urllib.parse import urlsplit

from PIL import Image

STRATEGY_IDS = (
    "single-url",
    "single-screenshot",
    "single-html",
    "majority",
    "progressive",
)

# Report-count contract per strategy: (min, max) invoked agents.
_REPORT_BOUNDS = {
    "single-url": (1, 1),
    "single-screenshot": (1, 1),
    "single-html": (1, 1),
    "majority": (3, 3),
    "progressive": (1, 3),
}


class Label(enum.Enum):
    """Binary scan verdict. There is deliberately no third value: model
    output that commits to neither label is a parse error upstream."""

    PHISHING = "Phishing"
    LEGITIMATE = "Legitimate"

    @classmethod
    def parse(cls, text: str) -> "Label":
        low = text.strip().lower()
        if low == "phishing":
            return cls.PHISHING
        if low == "legitimate":
            return cls.LEGITIMATE
        raise ValueError(f"not a label: {text!r}")


class Source(enum.Enum):
    """How the scanned URL entered the system."""

    DIRECT_URL = "direct-url"
    QR_DECODED = "qr-decoded"


class AgentKind(enum.Enum):
    URL = "url"
    SCREENSHOT = "screenshot"
    HTML = "html"


def required_inputs(agent: AgentKind) -> frozenset[str]:
    """Resource fields an agent kind needs before it can run."""
    return _REQUIRED_INPUTS[agent]


_REQUIRED_INPUTS = {
    AgentKind.URL: frozenset({"url"}),
    AgentKind.SCREENSHOT: frozenset({"screenshot"}),
    AgentKind.HTML: frozenset({"html"}),
}


def _check_absolute_http_url(url: str) -> None:
    parts = urlsplit(url)
    if parts.scheme not in ("http", "https") or not parts.netloc:
        raise ValueError(f"not an absolute http(s) URL: {url!r}")


def _check_png(data: bytes) -> None:
    try:
        with Image.open(io.BytesIO(data)) as img:
            if img.format != "PNG":
                raise ValueError(f"screenshot is {img.format}, expected PNG")
            w, h = img.size
    except ValueError:
        raise
    except Exception as exc:
        raise ValueError(f"screenshot bytes are not a decodable image: {exc}") from exc
    if w < 1 or h < 1:
        raise ValueError(f"screenshot has degenerate size {w}x{h}")


@dataclass(frozen=True)
class WebResource:
    """A scan subject: the URL plus whatever artifacts have been captured."""

    url: str
    source: Source = Source.DIRECT_URL
    screenshot: bytes | None = None
    html: str | None = None
    capture_timestamp: datetime | None = None

    def __post_init__(self):
        _check_absolute_http_url(self.url)
        if self.screenshot is not None:
            _check_png(self.screenshot)

    def has(self, field_name: str) -> bool:
        return getattr(self, field_name) is not None

    def missing_for(self, agent: AgentKind) -> frozenset[str]:
        """Required fields the resource does not yet carry."""
        return frozenset(f for f in required_inputs(agent) if not self.has(f))


@dataclass(frozen=True)
class AgentReport:
    """One agent's verdict with full usage accounting."""

    agent: AgentKind
    label: Label
    reasoning: str
    model_id: str
    input_tokens: int
    output_tokens: int
    image_count: int
    latency: float
    cost: Decimal

    def __post_init__(self):
        if not self.reasoning:
            raise ValueError("reasoning must be non-empty")
        for name in ("input_tokens", "output_tokens", "image_count"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.latency < 0:
            raise ValueError("latency must be >= 0")
        if self.cost < 0:
            raise ValueError("cost must be >= 0")
        if not isinstance(self.cost, Decimal):
            raise ValueError("cost must be a Decimal (floats are forbidden in ledgers)")


@dataclass(frozen=True)
class ScanOutcome:
    """Final result of one scan: verdict, the reports that produced it in
    invocation order, and the cost/latency ledger."""

    resource: WebResource
    strategy_id: str
    final_label: Label
    reports: tuple[AgentReport, ...]
    total_latency: float
    total_cost: Decimal
    created_at: datetime

    def __post_init__(self):
        if self.strategy_id not in STRATEGY_IDS:
            raise ValueError(f"unknown strategy_id {self.strategy_id!r}")
        lo, hi = _REPORT_BOUNDS[self.strategy_id]
        if not (lo <= len(self.reports) <= hi):
            raise ValueError(
                f"{self.strategy_id} must carry {lo}..{hi} reports, got {len(self.reports)}"
            )
        if self.total_latency < 0:
            raise ValueError("total_latency must be >= 0")
        ledger = sum((r.cost for r in self.reports), Decimal("0"))
        if self.total_cost != ledger:
            raise ValueError(f"total_cost {self.total_cost} != sum of report costs {ledger}")

    @property
    def analysis_latency(self) -> float:
        """Model-call time only; excludes capture and orchestration."""
        return sum(r.latency for r in self.reports)


@dataclass(frozen=True)
class GroundTruthRecord:
    """One labeled dataset row with paths to its stored artifacts."""

    url: str
    true_label: Label
    screenshot_path: Path
    html_path: Path


# ---------------------------------------------------------------------------
# Canonical JSON serialization


def _dt_to_json(dt: datetime | None) -> str | None:
    if dt is None:
        return None
    return dt.astimezone(timezone.utc).isoformat()


def _dt_from_json(value: str | None) -> datetime | None:
    if value is None:
        return None
    return datetime.fromisoformat(value)


def resource_to_dict(res: WebResource) -> dict:
    return {
        "url": res.url,
        "source": res.source.value,
        "screenshot": base64.b64encode(res.screenshot).decode("ascii")
        if res.screenshot is not None
        else None,
        "html": res.html,
        "capture_timestamp": _dt_to_json(res.capture_timestamp),
    }


def resource_from_dict(data: dict) -> WebResource:
    shot = data.get("screenshot")
    return WebResource(
        url=data["url"],
        source=Source(data["source"]),
        screenshot=base64.b64decode(shot) if shot is not None else None,
        html=data.get("html"),
        capture_timestamp=_dt_from_json(data.get("capture_timestamp")),
    )


def report_to_dict(rep: AgentReport) -> dict:
    return {
        "agent": rep.agent.value,
        "label": rep.label.value,
        "reasoning": rep.reasoning,
        "model_id": rep.model_id,
        "input_tokens": rep.input_tokens,
        "output_tokens": rep.output_tokens,
        "image_count": rep.image_count,
        "latency": rep.latency,
        "cost": str(rep.cost),
    }


def report_from_dict(data: dict) -> AgentReport:
    return AgentReport(
        agent=AgentKind(data["agent"]),
        label=Label(data["label"]),
        reasoning=data["reasoning"],
        model_id=data["model_id"],
        input_tokens=data["input_tokens"],
        output_tokens=data["output_tokens"],
        image_count=data["image_count"],
        latency=data["latency"],
        cost=Decimal(data["cost"]),
    )


def outcome_to_dict(out: ScanOutcome) -> dict:
    return {
        "resource": resource_to_dict(out.resource),
        "strategy_id": out.strategy_id,
        "final_label": out.final_label.value,
        "reports": [report_to_dict(r) for r in out.reports],
        "total_latency": out.total_latency,
        "analysis_latency": out.analysis_latency,
        "total_cost": str(out.total_cost),
        "created_at": _dt_to_json(out.created_at),
    }


def outcome_from_dict(data: dict) -> ScanOutcome:
    return ScanOutcome(
        resource=resource_from_dict(data["resource"]),
        strategy_id=data["strategy_id"],
        final_label=Label(data["final_label"]),
        reports=tuple(report_from_dict(r) for r in data["reports"]),
        total_latency=data["total_latency"],
        total_cost=Decimal(data["total_cost"]),
        created_at=_dt_from_json(data["created_at"]),
    )


def utcnow() -> datetime:
    return datetime.now(timezone.utc)
