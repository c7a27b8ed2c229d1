"""HTTP scan service.

Exposes the same pipeline the CLI uses: submit a URL or QR image, get the
full ScanOutcome with per-agent reasoning and the cost ledger. A scan
whose capture failed returns 422 (site unreachable), which is explicitly
not a verdict.
"""

from __future__ import annotations

import logging
import threading
from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from starlette.concurrency import run_in_threadpool

from .acquisition import decode_qr, normalize_url
from .config import AppConfig, api_key, build_deps, load_config
from .core import STRATEGY_IDS, Source, outcome_to_dict
from .datastore import ScanHistory, ScanHistoryEntry
from .errors import (
    AmbiguousVerdict,
    BackendError,
    BudgetExceeded,
    CaptureFailed,
    InvalidUrl,
    MultipleQrCodes,
    NoQrFound,
    NotFound,
    PayloadNotUrl,
    PhishscanError,
    UnparseableVerdict,
)
from .strategies import ScanDeps, run_scan

logger = logging.getLogger(__name__)

UNREACHABLE_DETAIL = "site unreachable: could not be analyzed"

_STATUS_FOR = [
    ((InvalidUrl, NoQrFound, PayloadNotUrl, MultipleQrCodes), 400),
    ((BudgetExceeded,), 402),
    ((NotFound,), 404),
    ((CaptureFailed,), 422),
    ((BackendError, UnparseableVerdict, AmbiguousVerdict), 502),
]


def _status_for(exc: PhishscanError) -> int:
    for classes, status in _STATUS_FOR:
        if isinstance(exc, classes):
            return status
    return 500


def public_outcome_dict(outcome) -> dict:
    """Outcome JSON for API responses: screenshot bytes are replaced by
    their size so responses stay small; full bytes remain in the history
    store."""
    data = outcome_to_dict(outcome)
    shot = outcome.resource.screenshot
    data["resource"]["screenshot"] = None
    data["resource"]["screenshot_bytes"] = len(shot) if shot is not None else 0
    return data


def _entry_dict(entry: ScanHistoryEntry) -> dict:
    return {
        "scan_id": entry.scan_id,
        "origin": entry.origin,
        "outcome": public_outcome_dict(entry.outcome),
    }


def _entry_summary(entry: ScanHistoryEntry) -> dict:
    out = entry.outcome
    return {
        "scan_id": entry.scan_id,
        "origin": entry.origin,
        "url": out.resource.url,
        "source": out.resource.source.value,
        "strategy": out.strategy_id,
        "final_label": out.final_label.value,
        "report_count": len(out.reports),
        "total_cost": str(out.total_cost),
        "created_at": out.created_at.isoformat(),
    }


class ServiceState:
    """Lazily builds scan dependencies so the app can start (and report a
    degraded health status) before credentials are configured."""

    def __init__(self, config: AppConfig, deps: ScanDeps | None, history: ScanHistory):
        self.config = config
        self.history = history
        self._deps = deps
        self._deps_error: str | None = None
        self._lock = threading.Lock()
        self.scan_slots = threading.BoundedSemaphore(config.max_scans_in_flight)

    def get_deps(self) -> ScanDeps:
        with self._lock:
            if self._deps is None:
                self._deps = build_deps(self.config)
            return self._deps

    def health(self) -> dict:
        """Configuration check only: never calls the paid model API."""
        config = self.config
        reachable = True
        status = "ok"
        if config.backend == "live" and not api_key():
            reachable = False
            status = "degraded"
        elif config.backend == "replay":
            if not (config.replay_cache and Path(config.replay_cache).is_file()):
                reachable = False
                status = "degraded"
        return {
            "status": status,
            "backend": config.backend,
            "backend_reachable": reachable,
            "strategy": config.strategy,
        }


def create_app(
    config: AppConfig | None = None,
    *,
    deps: ScanDeps | None = None,
    history: ScanHistory | None = None,
) -> FastAPI:
    config = config or load_config()
    history = history or ScanHistory(config.history_path)
    state = ServiceState(config, deps, history)

    app = FastAPI(
        title="phishscan",
        version="0.1.0",
        description=(
            "Phishing website scanner composing URL, screenshot, and HTML "
            "agents under selectable combination strategies."
        ),
    )
    app.state.phishscan = state

    @app.exception_handler(PhishscanError)
    async def _handle_domain_error(request: Request, exc: PhishscanError):
        status = _status_for(exc)
        detail = UNREACHABLE_DETAIL if isinstance(exc, CaptureFailed) else str(exc)
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "detail": detail},
        )

    @app.post("/api/scan")
    async def scan(request: Request, strategy: str | None = Query(default=None)):
        strategy_id = strategy or state.config.strategy
        if strategy_id not in STRATEGY_IDS:
            return JSONResponse(
                status_code=400,
                content={
                    "error": "UnknownStrategy",
                    "detail": f"strategy must be one of {list(STRATEGY_IDS)}",
                },
            )

        content_type = request.headers.get("content-type", "")
        if content_type.startswith("multipart/"):
            form = await request.form()
            upload = form.get("qr")
            if upload is None or isinstance(upload, str):
                return JSONResponse(
                    status_code=400,
                    content={"error": "MissingQrFile", "detail": "multipart field 'qr' required"},
                )
            raw_url = decode_qr(await upload.read())
            source = Source.QR_DECODED
        else:
            try:
                body = await request.json()
            except Exception:
                body = None
            if not isinstance(body, dict) or not body.get("url"):
                return JSONResponse(
                    status_code=400,
                    content={"error": "MissingUrl", "detail": "JSON body with 'url' required"},
                )
            raw_url = str(body["url"])
            source = Source.DIRECT_URL

        url = normalize_url(raw_url)
        try:
            deps = state.get_deps()
        except ValueError as exc:
            return JSONResponse(
                status_code=503,
                content={"error": "BackendUnavailable", "detail": str(exc)},
            )

        if not state.scan_slots.acquire(blocking=False):
            return JSONResponse(
                status_code=429,
                content={"error": "TooManyScans", "detail": "scan capacity exhausted, retry later"},
            )
        try:
            outcome = await run_in_threadpool(run_scan, strategy_id, url, deps, source)
        finally:
            state.scan_slots.release()

        entry = state.history.store(outcome, origin="api")
        return {"scan_id": entry.scan_id, "outcome": public_outcome_dict(outcome)}

    @app.get("/api/scans")
    def list_scans(limit: int = Query(default=20, ge=0, le=500)):
        return {"scans": [_entry_summary(e) for e in state.history.recent(limit)]}

    @app.get("/api/scan/{scan_id}")
    def get_scan(scan_id: str):
        return _entry_dict(state.history.fetch(scan_id))

    @app.get("/api/healthz")
    def healthz():
        return state.health()

    webui = config.webui_dist
    if webui and Path(webui).is_dir():
        app.mount("/", StaticFiles(directory=webui, html=True), name="webui")

    return app
