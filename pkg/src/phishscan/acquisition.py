"""Turning raw user input into a scan-ready WebResource.

Input arrives as URL text or a QR image; artifacts (full-page screenshot,
HTML source) are captured on demand and only when a strategy asks for
them. Capture failure is an error distinct from any verdict: an
unreachable site is never labeled.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Protocol, runtime_checkable
from urllib.parse import urlsplit, urlunsplit

import cv2
import numpy as np

from .core import Source, WebResource, utcnow
from .datastore import DatasetManifest
from .errors import (
    CaptureFailed,
    InvalidUrl,
    MultipleQrCodes,
    NoQrFound,
    PayloadNotUrl,
)

logger = logging.getLogger(__name__)

CAPTURE_FIELDS = frozenset({"screenshot", "html"})

# Full-page screenshots are capped at this height so infinite-scroll pages
# cannot produce arbitrarily expensive images.
MAX_SCREENSHOT_HEIGHT = 8000


def normalize_url(raw: str) -> str:
    """Canonicalize user-submitted URL text.

    Trims whitespace, lowercases scheme and host, and rejects anything
    that is not an absolute http(s) URL. No scheme guessing: "example.com"
    is invalid rather than silently promoted to https. Path, query, and
    fragment pass through byte-exact.
    """
    text = raw.strip()
    if not text:
        raise InvalidUrl(raw, "empty input")
    try:
        parts = urlsplit(text)
    except ValueError as exc:
        raise InvalidUrl(raw, str(exc)) from exc
    scheme = parts.scheme.lower()
    if scheme not in ("http", "https"):
        raise InvalidUrl(raw, f"scheme must be http or https, got {parts.scheme!r}")
    if not parts.netloc:
        raise InvalidUrl(raw, "missing host")
    userinfo, sep, hostport = parts.netloc.rpartition("@")
    netloc = userinfo + sep + hostport.lower()
    return urlunsplit((scheme, netloc, parts.path, parts.query, parts.fragment))


def decode_qr(image: bytes) -> str:
    """Decode a single QR code from PNG/JPEG bytes into an http(s) URL.

    The payload is returned verbatim; callers normalize it like any other
    submitted URL.
    """
    array = cv2.imdecode(np.frombuffer(image, np.uint8), cv2.IMREAD_COLOR)
    if array is None:
        raise NoQrFound("image bytes did not decode as PNG or JPEG")
    ok, texts, _points, _ = cv2.QRCodeDetectorAruco().detectAndDecodeMulti(array)
    payloads = [t for t in texts if t] if ok else []
    if not payloads:
        raise NoQrFound("no QR code found in image")
    if len(payloads) > 1:
        raise MultipleQrCodes(payloads)
    payload = payloads[0]
    try:
        parts = urlsplit(payload)
    except ValueError:
        raise PayloadNotUrl(payload) from None
    if parts.scheme not in ("http", "https") or not parts.netloc:
        raise PayloadNotUrl(payload)
    return payload


@dataclass(frozen=True)
class CaptureOptions:
    """Rendering parameters for artifact capture."""

    nav_timeout: float = 20.0
    viewport_width: int = 1366
    settle_delay: float = 2.0
    user_agent: str = (
        "Mozilla/5.0 (X11; Linux x86_64) AppleWebKit/537.36 "
        "(KHTML, like Gecko) Chrome/120.0 Safari/537.36"
    )

    def __post_init__(self):
        if self.nav_timeout <= 0:
            raise ValueError("nav_timeout must be > 0")


@dataclass(frozen=True)
class CaptureResult:
    """What one navigation produced. Fields not requested may be None."""

    screenshot: bytes | None
    html: str | None
    final_url: str
    status: int


@runtime_checkable
class CaptureProvider(Protocol):
    """Renders a URL into artifacts.

    ``need`` names the subset of {"screenshot", "html"} the caller will
    actually use, so providers can skip unneeded extraction work.
    Implementations raise CaptureFailed on error or timeout.
    """

    def capture(
        self, url: str, options: CaptureOptions, need: frozenset[str]
    ) -> CaptureResult: ...


class FixtureCaptureProvider:
    """Serves stored dataset artifacts instead of rendering live pages."""

    def __init__(self, manifest: DatasetManifest):
        self._by_url = manifest.by_url()

    def capture(
        self, url: str, options: CaptureOptions, need: frozenset[str]
    ) -> CaptureResult:
        record = self._by_url.get(url)
        if record is None:
            raise CaptureFailed(url, "no stored artifacts for this URL")
        screenshot = record.screenshot_path.read_bytes() if "screenshot" in need else None
        html = (
            record.html_path.read_text(encoding="utf-8", errors="replace")
            if "html" in need
            else None
        )
        return CaptureResult(screenshot=screenshot, html=html, final_url=url, status=200)


class PlaywrightCaptureProvider:
    """Full-page capture through a headless Chromium.

    Talks to the browser through Playwright's driver process; set
    ``cdp_endpoint`` to attach to an already-running browser instead of
    launching one. Requires the optional ``capture`` extra.

    Redirects are followed; the final URL is recorded in the result while
    agents keep judging the originally submitted URL.
    """

    def __init__(self, cdp_endpoint: str | None = None):
        self.cdp_endpoint = cdp_endpoint

    def capture(
        self, url: str, options: CaptureOptions, need: frozenset[str]
    ) -> CaptureResult:
        try:
            from playwright.sync_api import Error as PlaywrightError
            from playwright.sync_api import sync_playwright
        except ImportError as exc:
            raise CaptureFailed(
                url, "playwright is not installed (pip install 'phishscan[capture]')"
            ) from exc

        try:
            with sync_playwright() as pw:
                if self.cdp_endpoint:
                    browser = pw.chromium.connect_over_cdp(self.cdp_endpoint)
                else:
                    browser = pw.chromium.launch(headless=True)
                try:
                    context = browser.new_context(
                        viewport={"width": options.viewport_width, "height": 900},
                        user_agent=options.user_agent,
                    )
                    page = context.new_page()
                    response = page.goto(url, timeout=options.nav_timeout * 1000)
                    page.wait_for_timeout(options.settle_delay * 1000)

                    screenshot = None
                    if "screenshot" in need:
                        height = page.evaluate("document.documentElement.scrollHeight")
                        if height > MAX_SCREENSHOT_HEIGHT:
                            screenshot = page.screenshot(
                                clip={
                                    "x": 0,
                                    "y": 0,
                                    "width": options.viewport_width,
                                    "height": MAX_SCREENSHOT_HEIGHT,
                                }
                            )
                        else:
                            screenshot = page.screenshot(full_page=True)
                    html = page.content() if "html" in need else None
                    return CaptureResult(
                        screenshot=screenshot,
                        html=html,
                        final_url=page.url,
                        status=response.status if response else 0,
                    )
                finally:
                    browser.close()
        except PlaywrightError as exc:
            raise CaptureFailed(url, str(exc)) from exc


def extend_resource(
    resource: WebResource,
    need: frozenset[str] | set[str],
    provider: CaptureProvider,
    options: CaptureOptions = CaptureOptions(),
) -> WebResource:
    """Capture exactly the requested fields and merge them into the resource.

    An empty ``need`` performs no capture call at all.
    """
    need = frozenset(need)
    unknown = need - CAPTURE_FIELDS
    if unknown:
        raise ValueError(f"unknown capture fields: {sorted(unknown)}")
    if not need:
        return resource
    result = provider.capture(resource.url, options, need)
    updates: dict = {"capture_timestamp": utcnow()}
    if "screenshot" in need:
        if result.screenshot is None:
            raise CaptureFailed(resource.url, "provider returned no screenshot")
        updates["screenshot"] = result.screenshot
    if "html" in need:
        if result.html is None:
            raise CaptureFailed(resource.url, "provider returned no html")
        updates["html"] = result.html
    if result.final_url != resource.url:
        logger.info("capture followed redirect: %s -> %s", resource.url, result.final_url)
    return replace(resource, **updates)


def acquire(
    url: str,
    need: frozenset[str] | set[str],
    provider: CaptureProvider,
    options: CaptureOptions = CaptureOptions(),
    source: Source = Source.DIRECT_URL,
) -> WebResource:
    """Build a WebResource for a normalized URL with the requested artifacts."""
    return extend_resource(WebResource(url=url, source=source), need, provider, options)
