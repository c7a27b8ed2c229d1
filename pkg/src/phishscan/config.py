"""Application configuration with layered precedence.

Precedence, highest first: CLI flag, environment variable, config file,
built-in default. Secrets (the model API key) are env-only and never read
from or written to config files, and never logged.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from decimal import Decimal
from importlib import resources
from pathlib import Path

import yaml

from .acquisition import (
    CaptureOptions,
    CaptureProvider,
    FixtureCaptureProvider,
    PlaywrightCaptureProvider,
)
from .agents import (
    LiveBackend,
    ModelBackend,
    PromptOptions,
    RecordingBackend,
    ReplayBackend,
    ScriptedBackend,
)
from .costing import PriceBook
from .datastore import load_manifest
from .strategies import DEFAULT_STRATEGY, ScanDeps

ENV_PREFIX = "PHISHSCAN_"
API_KEY_ENV = "PHISHSCAN_API_KEY"

BACKEND_CHOICES = ("live", "replay", "scripted")


@dataclass
class AppConfig:
    backend: str = "scripted"
    model_id: str = "scripted-v1"
    base_url: str = "https://generativelanguage.googleapis.com/v1beta/openai"
    price_sheet: str | None = None
    replay_cache: str | None = None
    record_responses: bool = False
    history_path: str = "phishscan-history.jsonl"
    strategy: str = DEFAULT_STRATEGY
    renderer_endpoint: str | None = None
    nav_timeout: float = 20.0
    viewport_width: int = 1366
    settle_delay: float = 2.0
    html_byte_budget: int = 200_000
    max_image_dimension: int | None = None
    temperature: float = 0.0
    max_cost_per_scan: str | None = None
    eval_jobs: int = 8
    max_concurrency: int = 4
    requests_per_second: float = 2.0
    rate_burst: int = 4
    max_scans_in_flight: int = 8
    webui_dist: str | None = None

    def max_cost(self) -> Decimal | None:
        return Decimal(self.max_cost_per_scan) if self.max_cost_per_scan else None

    def capture_options(self) -> CaptureOptions:
        return CaptureOptions(
            nav_timeout=self.nav_timeout,
            viewport_width=self.viewport_width,
            settle_delay=self.settle_delay,
        )

    def prompt_options(self) -> PromptOptions:
        return PromptOptions(
            html_byte_budget=self.html_byte_budget,
            max_image_dimension=self.max_image_dimension,
        )


_BOOL_TRUE = {"1", "true", "yes", "on"}


def _as_bool(value: str) -> bool:
    return value.lower() in _BOOL_TRUE


# How each field parses out of an environment variable string.
_ENV_CASTS = {
    "record_responses": _as_bool,
    "nav_timeout": float,
    "viewport_width": int,
    "settle_delay": float,
    "html_byte_budget": int,
    "max_image_dimension": int,
    "temperature": float,
    "eval_jobs": int,
    "max_concurrency": int,
    "requests_per_second": float,
    "rate_burst": int,
    "max_scans_in_flight": int,
}


def load_config(
    config_file: str | Path | None = None,
    overrides: dict | None = None,
    environ: dict[str, str] | None = None,
) -> AppConfig:
    """Assemble the effective configuration.

    ``overrides`` holds CLI-provided values (None entries are ignored).
    The config file defaults to $PHISHSCAN_CONFIG, then ./phishscan.yaml
    when present.
    """
    env = os.environ if environ is None else environ
    values: dict = {}
    known = {f.name for f in fields(AppConfig)}

    path = config_file or env.get(ENV_PREFIX + "CONFIG")
    if path is None and Path("phishscan.yaml").is_file():
        path = "phishscan.yaml"
    if path:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        if not isinstance(raw, dict):
            raise ValueError(f"config file {path} must contain a mapping")
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys in {path}: {sorted(unknown)}")
        if "api_key" in raw:
            raise ValueError("api_key must come from the environment, not a config file")
        values.update(raw)

    for name in known:
        env_name = ENV_PREFIX + name.upper()
        if env_name in env:
            cast = _ENV_CASTS.get(name, str)
            values[name] = cast(env[env_name])

    for name, value in (overrides or {}).items():
        if value is not None:
            if name not in known:
                raise ValueError(f"unknown config override {name!r}")
            values[name] = value

    config = AppConfig(**values)
    if config.backend not in BACKEND_CHOICES:
        raise ValueError(f"backend must be one of {BACKEND_CHOICES}, got {config.backend!r}")
    return config


def api_key(environ: dict[str, str] | None = None) -> str | None:
    env = os.environ if environ is None else environ
    return env.get(API_KEY_ENV)


def default_price_sheet_path() -> Path:
    return Path(str(resources.files("phishscan").joinpath("data/prices.yaml")))


def build_price_book(config: AppConfig) -> PriceBook:
    path = config.price_sheet or default_price_sheet_path()
    return PriceBook.from_yaml(path)


def build_backend(config: AppConfig, environ: dict[str, str] | None = None) -> ModelBackend:
    if config.backend == "scripted":
        backend: ModelBackend = ScriptedBackend.url_heuristic(model_id=config.model_id)
    elif config.backend == "replay":
        if not config.replay_cache:
            raise ValueError("replay backend requires replay_cache")
        backend = ReplayBackend(config.replay_cache, model_id=config.model_id)
    else:
        key = api_key(environ)
        if not key:
            raise ValueError(f"live backend requires {API_KEY_ENV}")
        backend = LiveBackend(
            base_url=config.base_url,
            api_key=key,
            model_id=config.model_id,
            temperature=config.temperature,
            max_concurrency=config.max_concurrency,
            requests_per_second=config.requests_per_second,
            burst=config.rate_burst,
        )
    if config.record_responses:
        if not config.replay_cache:
            raise ValueError("record_responses requires replay_cache")
        if config.backend == "replay":
            raise ValueError("refusing to record from the replay backend into itself")
        backend = RecordingBackend(backend, config.replay_cache)
    return backend


def build_capture(config: AppConfig, fixture_manifest: str | Path | None = None) -> CaptureProvider:
    if fixture_manifest is not None:
        return FixtureCaptureProvider(load_manifest(fixture_manifest))
    return PlaywrightCaptureProvider(cdp_endpoint=config.renderer_endpoint)


def build_deps(
    config: AppConfig,
    *,
    backend: ModelBackend | None = None,
    capture: CaptureProvider | None = None,
    environ: dict[str, str] | None = None,
) -> ScanDeps:
    return ScanDeps(
        backend=backend or build_backend(config, environ),
        price_book=build_price_book(config),
        capture=capture or build_capture(config),
        capture_options=config.capture_options(),
        prompt_options=config.prompt_options(),
        max_cost=config.max_cost(),
    )
