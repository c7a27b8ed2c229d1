"""LLM agent layer: prompt construction, pluggable completion backends,
verdict parsing, and single-agent classification."""

from .backends import (
    BackendResponse,
    LiveBackend,
    ModelBackend,
    RecordingBackend,
    ReplayBackend,
    ScriptedBackend,
    replay_key,
)
from .classify import classify
from .parsing import parse_verdict
from .prompts import (
    CORRECTIVE_INSTRUCTION,
    PromptBundle,
    PromptOptions,
    build_prompt,
    bundle_kind,
)

__all__ = [
    "BackendResponse",
    "CORRECTIVE_INSTRUCTION",
    "LiveBackend",
    "ModelBackend",
    "PromptBundle",
    "PromptOptions",
    "RecordingBackend",
    "ReplayBackend",
    "ScriptedBackend",
    "build_prompt",
    "bundle_kind",
    "classify",
    "parse_verdict",
    "replay_key",
]
