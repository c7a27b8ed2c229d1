"""Shared fixtures: tiny datasets, scripted backends, counting providers."""

from __future__ import annotations

import io
from datetime import timezone, datetime
from decimal import Decimal
from pathlib import Path

import pytest
from PIL import Image

from phishscan.acquisition import CaptureOptions, CaptureResult
from phishscan.agents import ScriptedBackend
from phishscan.core import AgentKind, Label, WebResource
from phishscan.costing import PriceBook, PriceSheet
from phishscan.errors import CaptureFailed
from phishscan.strategies import ScanDeps

REPO = Path(__file__).resolve().parent.parent
FIXTURES = REPO / "fixtures"
DATASET40 = FIXTURES / "dataset40" / "manifest.csv"
REPLAY_CACHE = FIXTURES / "replay" / "cache-gemini-1.5-flash.jsonl"
VENDOR_MANIFEST = FIXTURES / "vendors" / "manifest.csv"
VENDOR_REPORTS = FIXTURES / "vendors" / "reports"
QR_DIR = FIXTURES / "qr"


def png_bytes(width: int = 8, height: int = 6, color=(10, 120, 200)) -> bytes:
    buf = io.BytesIO()
    Image.new("RGB", (width, height), color).save(buf, format="PNG")
    return buf.getvalue()


@pytest.fixture(scope="session")
def tiny_png() -> bytes:
    return png_bytes()


@pytest.fixture
def price_book() -> PriceBook:
    # Deliberately asymmetric rates so pricing mistakes show up.
    return PriceBook(
        [
            PriceSheet(
                model_id="scripted-v1",
                usd_per_million_input_tokens=Decimal("0.10"),
                usd_per_million_output_tokens=Decimal("0.40"),
                usd_per_image=Decimal("0.002"),
            ),
            PriceSheet(
                model_id="gemini-1.5-flash",
                usd_per_million_input_tokens=Decimal("0.075"),
                usd_per_million_output_tokens=Decimal("0.30"),
                usd_per_image=Decimal("0.00002"),
            ),
        ]
    )


class StaticCaptureProvider:
    """Serves one fixed screenshot/html pair for any URL."""

    def __init__(self, screenshot: bytes | None = None, html: str | None = None):
        self.screenshot = screenshot if screenshot is not None else png_bytes()
        self.html = html if html is not None else "<html><body>static page</body></html>"

    def capture(self, url, options, need):
        return CaptureResult(
            screenshot=self.screenshot if "screenshot" in need else None,
            html=self.html if "html" in need else None,
            final_url=url,
            status=200,
        )


class CountingCaptureProvider:
    """Wraps a provider and records every (url, need) capture call."""

    def __init__(self, inner=None):
        self.inner = inner or StaticCaptureProvider()
        self.calls: list[tuple[str, frozenset[str]]] = []

    @property
    def need_sets(self) -> list[frozenset[str]]:
        return [need for _, need in self.calls]

    def capture(self, url, options, need):
        self.calls.append((url, frozenset(need)))
        return self.inner.capture(url, options, need)


class FailingCaptureProvider:
    def capture(self, url, options, need):
        raise CaptureFailed(url, "connection refused")


@pytest.fixture
def static_capture() -> StaticCaptureProvider:
    return StaticCaptureProvider()


@pytest.fixture
def counting_capture() -> CountingCaptureProvider:
    return CountingCaptureProvider()


def kind_backend(url: Label, screenshot: Label, html: Label, **kwargs) -> ScriptedBackend:
    """Backend with one fixed verdict per agent kind."""
    return ScriptedBackend.for_kinds(
        {AgentKind.URL: url, AgentKind.SCREENSHOT: screenshot, AgentKind.HTML: html},
        **kwargs,
    )


def make_deps(backend, capture, price_book, **kwargs) -> ScanDeps:
    return ScanDeps(backend=backend, price_book=price_book, capture=capture, **kwargs)


@pytest.fixture
def deps_factory(price_book):
    def make(backend=None, capture=None, **kwargs):
        return make_deps(
            backend or ScriptedBackend.url_heuristic(),
            capture or StaticCaptureProvider(),
            price_book,
            **kwargs,
        )

    return make


def resource_with(url="https://example.org/", screenshot=None, html=None) -> WebResource:
    return WebResource(url=url, screenshot=screenshot, html=html)


def utc(*args) -> datetime:
    return datetime(*args, tzinfo=timezone.utc)
