"""Verdict extraction from raw model output.

Models are asked for a bare two-field JSON object but in practice wrap it
in markdown fences, preamble prose, or nest it under another key. The
parser scans the whole reply for JSON objects and accepts any object that
carries a classification matching one of the two labels (case-insensitive)
together with non-empty reasoning. Reasoning is preserved verbatim.
"""

from __future__ import annotations

import json

from ..core import Label
from ..errors import AmbiguousVerdict, UnparseableVerdict

_LABELS = {"phishing": Label.PHISHING, "legitimate": Label.LEGITIMATE}

# Characters stripped from the ends of a classification value before
# matching: models like to emit "Phishing." or '"Legitimate"'.
_VALUE_JUNK = " \t\r\n.\"'`*"


def _iter_json_values(text: str):
    """Yield every JSON value decodable from some position in the text."""
    decoder = json.JSONDecoder()
    idx = 0
    while True:
        start = text.find("{", idx)
        if start == -1:
            return
        try:
            value, end = decoder.raw_decode(text, start)
        except ValueError:
            idx = start + 1
            continue
        yield value
        idx = end


def _walk_dicts(value):
    if isinstance(value, dict):
        yield value
        for v in value.values():
            yield from _walk_dicts(v)
    elif isinstance(value, list):
        for v in value:
            yield from _walk_dicts(v)


def _field(obj: dict, name: str):
    for key, value in obj.items():
        if isinstance(key, str) and key.strip().lower() == name:
            return value
    return None


def _match_label(value) -> Label | None:
    if not isinstance(value, str):
        return None
    return _LABELS.get(value.strip(_VALUE_JUNK).lower())


def parse_verdict(raw_text: str) -> tuple[Label, str]:
    """Extract (label, reasoning) from a model reply.

    Raises UnparseableVerdict when no object commits to a label (or does
    so without reasoning), and AmbiguousVerdict when objects in the same
    reply commit to both labels.
    """
    labels_seen: set[Label] = set()
    best: tuple[Label, str] | None = None

    for candidate in _iter_json_values(raw_text):
        for obj in _walk_dicts(candidate):
            label = _match_label(_field(obj, "classification"))
            if label is None:
                continue
            labels_seen.add(label)
            reasoning = _field(obj, "reasoning")
            if best is None and isinstance(reasoning, str) and reasoning.strip():
                best = (label, reasoning)

    if len(labels_seen) > 1:
        raise AmbiguousVerdict(raw_text)
    if not labels_seen:
        raise UnparseableVerdict(raw_text)
    if best is None:
        raise UnparseableVerdict(raw_text, reason="classification present but reasoning missing")
    return best
