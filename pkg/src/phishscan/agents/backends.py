"""Completion backends: live HTTP, replay cache, and scripted rules.

All backends satisfy one contract: complete(PromptBundle) -> BackendResponse.
They must be safe for concurrent calls. Token counts always come from the
backend itself: the live backend reports provider usage, replay returns the
stored counts, and scripted declares a bytes/4 estimator.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import random
import threading
import time
from dataclasses import dataclass
from typing import Iterable, Protocol, runtime_checkable

import httpx

from ..core import AgentKind, Label
from ..datastore import JsonlWriter, load_jsonl
from ..errors import BackendError, CacheMiss
from .prompts import PromptBundle, bundle_kind

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BackendResponse:
    """Raw completion text plus the usage the provider charged for."""

    raw_text: str
    input_tokens: int
    output_tokens: int
    model_id: str

    def __post_init__(self):
        if self.input_tokens < 0 or self.output_tokens < 0:
            raise ValueError("token counts must be >= 0")


@runtime_checkable
class ModelBackend(Protocol):
    model_id: str

    def complete(self, bundle: PromptBundle) -> BackendResponse: ...


# ---------------------------------------------------------------------------
# Replay cache keys

def _media_digest(bundle: PromptBundle) -> str:
    """Digest of all attached media, length-prefixed per channel so an
    image can never collide with a document of the same bytes."""
    h = hashlib.sha256()
    image = bundle.attached_image or b""
    doc = (bundle.attached_document or "").encode("utf-8")
    h.update(len(image).to_bytes(8, "big"))
    h.update(image)
    h.update(len(doc).to_bytes(8, "big"))
    h.update(doc)
    return h.hexdigest()


def replay_key(agent: AgentKind, model_id: str, bundle: PromptBundle) -> str:
    """Content-addressed cache key: agent kind, model, prompt and media digests."""
    prompt_sha = hashlib.sha256(bundle.text.encode("utf-8")).hexdigest()
    media_sha = _media_digest(bundle)
    material = f"{agent.value}\n{model_id}\n{prompt_sha}\n{media_sha}"
    return hashlib.sha256(material.encode("ascii")).hexdigest()


# ---------------------------------------------------------------------------
# Scripted backend


def _estimate_tokens(text: str) -> int:
    return len(text.encode("utf-8")) // 4 + 1


@dataclass(frozen=True)
class ScriptedRule:
    """Substring rule over the prompt text and attached document."""

    needle: str
    label: Label
    reasoning: str


class ScriptedBackend:
    """Deterministic rule-table backend for tests and offline runs.

    Verdicts come from, in priority order: a per-agent-kind verdict map
    (exhaustive combination tests), then the first matching substring rule,
    then the default label.
    """

    def __init__(
        self,
        rules: Iterable[ScriptedRule] = (),
        kind_verdicts: dict[AgentKind, Label] | None = None,
        default_label: Label = Label.LEGITIMATE,
        default_reasoning: str = "scripted: no rule matched",
        model_id: str = "scripted-v1",
    ):
        self.rules = tuple(rules)
        self.kind_verdicts = dict(kind_verdicts or {})
        self.default_label = default_label
        self.default_reasoning = default_reasoning
        self.model_id = model_id

    @classmethod
    def for_kinds(cls, verdicts: dict[AgentKind, Label], **kwargs) -> "ScriptedBackend":
        return cls(kind_verdicts=verdicts, **kwargs)

    @classmethod
    def url_heuristic(cls, **kwargs) -> "ScriptedBackend":
        """Marker-word rules approximating a URL analyst, for offline demos."""
        words = ("login", "verify", "signin", "secure", "update", "confirm", "banking")
        rules = [
            ScriptedRule(w, Label.PHISHING, f"scripted: marker word {w!r} in content")
            for w in words
        ]
        rules.append(
            ScriptedRule(
                "password", Label.PHISHING, "scripted: credential field in content"
            )
        )
        return cls(rules=rules, **kwargs)

    def _verdict(self, bundle: PromptBundle) -> tuple[Label, str]:
        kind = bundle_kind(bundle)
        if kind in self.kind_verdicts:
            label = self.kind_verdicts[kind]
            return label, f"scripted: fixed {label.value} verdict for {kind.value} agent"
        haystack = bundle.text
        if bundle.attached_document is not None:
            haystack += "\n" + bundle.attached_document
        haystack = haystack.lower()
        for rule in self.rules:
            if rule.needle.lower() in haystack:
                return rule.label, rule.reasoning
        return self.default_label, self.default_reasoning

    def complete(self, bundle: PromptBundle) -> BackendResponse:
        label, reasoning = self._verdict(bundle)
        raw = json.dumps({"classification": label.value, "reasoning": reasoning})
        doc = bundle.attached_document or ""
        return BackendResponse(
            raw_text=raw,
            input_tokens=_estimate_tokens(bundle.text) + (_estimate_tokens(doc) if doc else 0),
            output_tokens=_estimate_tokens(raw),
            model_id=self.model_id,
        )


# ---------------------------------------------------------------------------
# Replay backend


class ReplayBackend:
    """Read-only content-addressed cache of stored responses.

    Misses raise CacheMiss rather than fabricating output, which is what
    makes replayed evaluations trustworthy.
    """

    def __init__(self, path, model_id: str):
        self.model_id = model_id
        self._responses: dict[str, BackendResponse] = {}
        for record in load_jsonl(path, repair=False):
            resp = record["response"]
            self._responses[record["key"]] = BackendResponse(
                raw_text=resp["raw_text"],
                input_tokens=resp["input_tokens"],
                output_tokens=resp["output_tokens"],
                model_id=resp["model_id"],
            )

    def __len__(self) -> int:
        return len(self._responses)

    def complete(self, bundle: PromptBundle) -> BackendResponse:
        key = replay_key(bundle_kind(bundle), self.model_id, bundle)
        try:
            return self._responses[key]
        except KeyError:
            raise CacheMiss(key) from None


class RecordingBackend:
    """Wraps another backend and appends every response to a replay cache."""

    def __init__(self, inner: ModelBackend, path):
        self.inner = inner
        self._writer = JsonlWriter(path)

    @property
    def model_id(self) -> str:
        return self.inner.model_id

    def complete(self, bundle: PromptBundle) -> BackendResponse:
        response = self.inner.complete(bundle)
        kind = bundle_kind(bundle)
        self._writer.append(
            {
                "key": replay_key(kind, self.inner.model_id, bundle),
                "agent": kind.value,
                "model_id": self.inner.model_id,
                "prompt_sha256": hashlib.sha256(bundle.text.encode("utf-8")).hexdigest(),
                "media_sha256": _media_digest(bundle),
                "response": {
                    "raw_text": response.raw_text,
                    "input_tokens": response.input_tokens,
                    "output_tokens": response.output_tokens,
                    "model_id": response.model_id,
                },
            }
        )
        return response


# ---------------------------------------------------------------------------
# Live backend


class TokenBucket:
    """Blocking token bucket shared by all callers of one backend."""

    def __init__(self, rate_per_sec: float, burst: int):
        if rate_per_sec <= 0 or burst < 1:
            raise ValueError("rate_per_sec must be > 0 and burst >= 1")
        self.rate = rate_per_sec
        self.capacity = float(burst)
        self._tokens = float(burst)
        self._updated = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = time.monotonic()
                self._tokens = min(self.capacity, self._tokens + (now - self._updated) * self.rate)
                self._updated = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self.rate
            time.sleep(wait)


class LiveBackend:
    """OpenAI-compatible chat-completions client.

    Base URL, model id, and API key come from configuration; the key is
    held only in request headers and never logged. Calls are bounded by a
    shared concurrency cap and token-bucket rate limit, and retried with
    exponential backoff plus jitter on 429/5xx/transport errors.
    """

    def __init__(
        self,
        base_url: str,
        api_key: str,
        model_id: str,
        temperature: float = 0.0,
        timeout: float = 60.0,
        max_attempts: int = 4,
        max_concurrency: int = 4,
        requests_per_second: float = 2.0,
        burst: int = 4,
        max_output_tokens: int = 1024,
    ):
        self.model_id = model_id
        self.temperature = temperature
        self.max_attempts = max_attempts
        self.max_output_tokens = max_output_tokens
        self._semaphore = threading.Semaphore(max_concurrency)
        self._bucket = TokenBucket(requests_per_second, burst)
        self._client = httpx.Client(
            base_url=base_url.rstrip("/"),
            headers={"Authorization": f"Bearer {api_key}"},
            timeout=timeout,
        )

    def close(self) -> None:
        self._client.close()

    @staticmethod
    def _build_content(bundle: PromptBundle) -> list[dict]:
        parts: list[dict] = [{"type": "text", "text": bundle.text}]
        if bundle.attached_document is not None:
            parts.append({"type": "text", "text": bundle.attached_document})
        if bundle.attached_image is not None:
            b64 = base64.b64encode(bundle.attached_image).decode("ascii")
            parts.append(
                {"type": "image_url", "image_url": {"url": f"data:image/png;base64,{b64}"}}
            )
        return parts

    def complete(self, bundle: PromptBundle) -> BackendResponse:
        body = {
            "model": self.model_id,
            "temperature": self.temperature,
            "max_tokens": self.max_output_tokens,
            "messages": [{"role": "user", "content": self._build_content(bundle)}],
        }
        last_error: BackendError | None = None
        with self._semaphore:
            for attempt in range(self.max_attempts):
                if attempt:
                    delay = (2 ** (attempt - 1)) * (1.0 + random.random() * 0.5)
                    time.sleep(delay)
                self._bucket.acquire()
                try:
                    response = self._client.post("/chat/completions", json=body)
                except httpx.HTTPError as exc:
                    last_error = BackendError(f"transport error: {exc}")
                    logger.warning("backend transport error (attempt %d): %s", attempt + 1, exc)
                    continue
                if response.status_code == 429 or response.status_code >= 500:
                    last_error = BackendError(
                        f"backend returned {response.status_code}",
                        status_code=response.status_code,
                    )
                    logger.warning(
                        "backend %d (attempt %d/%d)",
                        response.status_code,
                        attempt + 1,
                        self.max_attempts,
                    )
                    continue
                if response.status_code >= 400:
                    raise BackendError(
                        f"backend rejected request: {response.status_code} "
                        f"{response.text[:200]}",
                        status_code=response.status_code,
                    )
                return self._parse_response(response.json())
        raise last_error if last_error else BackendError("backend failed with no response")

    def _parse_response(self, data: dict) -> BackendResponse:
        try:
            raw_text = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed completion payload: {exc}") from exc
        usage = data.get("usage") or {}
        return BackendResponse(
            raw_text=raw_text or "",
            input_tokens=int(usage.get("prompt_tokens", 0)),
            output_tokens=int(usage.get("completion_tokens", 0)),
            model_id=data.get("model") or self.model_id,
        )
