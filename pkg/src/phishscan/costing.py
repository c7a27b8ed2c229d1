"""Token- and image-based pricing plus aggregate resource metrics.

All money math runs in decimal.Decimal. Floats never enter a ledger:
latencies measured as floats are converted through str() so the decimal
value matches the printed seconds exactly.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from datetime import date
from decimal import Decimal
from pathlib import Path
from typing import Iterable, Sequence

import yaml

from .core import ScanOutcome
from .errors import BudgetExceeded, EmptyInput, UnknownModel

_MILLION = Decimal(1_000_000)


@dataclass(frozen=True)
class PriceSheet:
    """Per-model rates used by the cost ledger."""

    model_id: str
    usd_per_million_input_tokens: Decimal
    usd_per_million_output_tokens: Decimal
    usd_per_image: Decimal
    effective_date: date | None = None

    def __post_init__(self):
        for name in (
            "usd_per_million_input_tokens",
            "usd_per_million_output_tokens",
            "usd_per_image",
        ):
            rate = getattr(self, name)
            if not isinstance(rate, Decimal):
                raise ValueError(f"{name} must be a Decimal")
            if rate < 0:
                raise ValueError(f"{name} must be >= 0")


class PriceBook:
    """Price sheets keyed by model id, loaded from a YAML config file.

    File schema (one entry per model)::

        models:
          gemini-1.5-flash:
            usd_per_million_input_tokens: "0.075"
            usd_per_million_output_tokens: "0.30"
            usd_per_image: "0.00002"
            effective_date: 2024-10-01

    Rates may be strings or numbers; strings are recommended so the file
    states the exact decimal value.
    """

    def __init__(self, sheets: Iterable[PriceSheet]):
        self._sheets = {s.model_id: s for s in sheets}

    def for_model(self, model_id: str) -> PriceSheet:
        try:
            return self._sheets[model_id]
        except KeyError:
            raise UnknownModel(model_id) from None

    def model_ids(self) -> list[str]:
        return sorted(self._sheets)

    @classmethod
    def from_yaml(cls, path: str | Path) -> "PriceBook":
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
        if not isinstance(raw, dict) or "models" not in raw:
            raise ValueError(f"price sheet file {path} must contain a 'models' mapping")
        sheets = []
        for model_id, entry in raw["models"].items():
            eff = entry.get("effective_date")
            if isinstance(eff, str):
                eff = date.fromisoformat(eff)
            sheets.append(
                PriceSheet(
                    model_id=str(model_id),
                    usd_per_million_input_tokens=Decimal(str(entry["usd_per_million_input_tokens"])),
                    usd_per_million_output_tokens=Decimal(str(entry["usd_per_million_output_tokens"])),
                    usd_per_image=Decimal(str(entry["usd_per_image"])),
                    effective_date=eff,
                )
            )
        return cls(sheets)


def price_of(
    input_tokens: int,
    output_tokens: int,
    image_count: int,
    sheet: PriceSheet,
) -> Decimal:
    """Exact USD cost of one completion under the given sheet."""
    if min(input_tokens, output_tokens, image_count) < 0:
        raise ValueError("usage counts must be >= 0")
    return (
        Decimal(input_tokens) * sheet.usd_per_million_input_tokens / _MILLION
        + Decimal(output_tokens) * sheet.usd_per_million_output_tokens / _MILLION
        + Decimal(image_count) * sheet.usd_per_image
    )


def estimate_call_cost(
    text_bytes: int,
    image_count: int,
    sheet: PriceSheet,
    assumed_output_tokens: int = 256,
    bytes_per_token: int = 4,
) -> Decimal:
    """Pre-call cost estimate used by the per-scan budget guard.

    Token counts are only known after the call, so the guard prices a
    rough bytes/4 input estimate plus an assumed reply length.
    """
    est_input = text_bytes // bytes_per_token + 1
    return price_of(est_input, assumed_output_tokens, image_count, sheet)


class BudgetGuard:
    """Tracks one scan's spend against a cost ceiling.

    check_before() is called with a pre-call estimate so a scan aborts
    before exceeding its ceiling rather than after. Safe for the
    concurrent agent calls of a majority scan.
    """

    def __init__(self, ceiling: Decimal):
        if ceiling < 0:
            raise ValueError("ceiling must be >= 0")
        self.ceiling = ceiling
        self.spent = Decimal("0")
        self._lock = threading.Lock()

    def check_before(self, estimated: Decimal) -> None:
        with self._lock:
            if self.spent + estimated > self.ceiling:
                raise BudgetExceeded(self.spent, self.ceiling)

    def add(self, cost: Decimal) -> None:
        with self._lock:
            self.spent += cost


@dataclass(frozen=True)
class ResourceMetrics:
    """Per-site averages over a batch of outcomes.

    Times are analysis-phase only (model calls), excluding capture; the
    per-1k price is derived exactly from the per-site average.
    """

    avg_time_per_site: Decimal
    avg_cost_per_site: Decimal
    price_per_1k: Decimal

    def __post_init__(self):
        if self.price_per_1k != self.avg_cost_per_site * 1000:
            raise ValueError("price_per_1k must equal 1000 * avg_cost_per_site exactly")


def aggregate_outcomes(outcomes: Sequence[ScanOutcome]) -> ResourceMetrics:
    """Arithmetic means of analysis latency and total cost over outcomes."""
    if not outcomes:
        raise EmptyInput("aggregate over zero outcomes")
    n = Decimal(len(outcomes))
    time_sum = Decimal("0")
    cost_sum = Decimal("0")
    for out in outcomes:
        for rep in out.reports:
            time_sum += Decimal(str(rep.latency))
        cost_sum += out.total_cost
    avg_time = time_sum / n
    avg_cost = cost_sum / n
    return ResourceMetrics(
        avg_time_per_site=avg_time,
        avg_cost_per_site=avg_cost,
        price_per_1k=avg_cost * 1000,
    )
