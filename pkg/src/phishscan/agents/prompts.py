"""Prompt construction for the three agents.

Each agent gets a cybersecurity-analyst role prompt demanding a binary
classification plus succinct reasoning, returned as a two-field JSON
object. The URL agent's wording is the canonical one; the screenshot and
HTML prompts are direct adaptations of it to their input type.

build_prompt is deterministic: equal inputs yield byte-identical bundles,
which is what makes replay-cache keys content-addressed.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

from PIL import Image

from ..core import AgentKind, WebResource
from ..errors import MissingInput

_JSON_DEMAND = (
    'Respond with a JSON object containing exactly two fields: '
    '"classification" (either "Phishing" or "Legitimate") and "reasoning".'
)

_ROLE_PROMPTS = {
    AgentKind.URL: (
        "Act as a professional cybersecurity analyst reviewing URLs. "
        "Classify the following URL as Phishing or Legitimate. "
        "Your reasoning should be succinct."
    ),
    AgentKind.SCREENSHOT: (
        "Act as a professional cybersecurity analyst reviewing webpage screenshots. "
        "Classify the following webpage screenshot as Phishing or Legitimate. "
        "Your reasoning should be succinct."
    ),
    AgentKind.HTML: (
        "Act as a professional cybersecurity analyst reviewing webpage source code. "
        "Classify the following webpage source code as Phishing or Legitimate. "
        "Your reasoning should be succinct."
    ),
}

CORRECTIVE_INSTRUCTION = (
    "\n\nYour previous reply could not be parsed. Respond again with ONLY a JSON "
    'object containing the fields "classification" ("Phishing" or "Legitimate") '
    'and "reasoning".'
)


@dataclass(frozen=True)
class PromptOptions:
    """Knobs bounding what gets attached to a prompt.

    html_byte_budget caps the attached source, head-biased (most phishing
    tells sit near the top of the document, and unbounded pages would blow
    the context window and the ledger). max_image_dimension, when set,
    downscales screenshots so their longest side fits; default sends the
    captured resolution untouched.
    """

    html_byte_budget: int = 200_000
    max_image_dimension: int | None = None

    def __post_init__(self):
        if self.html_byte_budget <= 0:
            raise ValueError("html_byte_budget must be > 0")
        if self.max_image_dimension is not None and self.max_image_dimension < 1:
            raise ValueError("max_image_dimension must be >= 1")


@dataclass(frozen=True)
class PromptBundle:
    """Exactly the text and attachments one agent call sends."""

    text: str
    attached_image: bytes | None = None
    attached_document: str | None = None

    @property
    def image_count(self) -> int:
        return 1 if self.attached_image is not None else 0

    def content_bytes(self) -> int:
        """Total payload size, used for pre-call cost estimation."""
        n = len(self.text.encode("utf-8"))
        if self.attached_document is not None:
            n += len(self.attached_document.encode("utf-8"))
        return n


def bundle_kind(bundle: PromptBundle) -> AgentKind:
    """Recover the agent kind from a bundle's attachment shape."""
    if bundle.attached_image is not None:
        return AgentKind.SCREENSHOT
    if bundle.attached_document is not None:
        return AgentKind.HTML
    return AgentKind.URL


def truncate_html(html: str, byte_budget: int) -> str:
    """Head-biased truncation to a UTF-8 byte budget with an explicit marker.

    Keeps roughly the first three quarters and the final quarter of the
    budget, so both the document head and any trailing injected scripts
    survive.
    """
    raw = html.encode("utf-8")
    if len(raw) <= byte_budget:
        return html
    dropped = len(raw) - byte_budget
    marker = f"\n[... {dropped} bytes truncated ...]\n"
    head_budget = byte_budget * 3 // 4
    tail_budget = max(byte_budget - head_budget - len(marker.encode("utf-8")), 0)
    head = raw[:head_budget].decode("utf-8", errors="ignore")
    tail = raw[len(raw) - tail_budget :].decode("utf-8", errors="ignore") if tail_budget else ""
    return head + marker + tail


def _downscale_png(data: bytes, max_dim: int) -> bytes:
    with Image.open(io.BytesIO(data)) as img:
        if max(img.size) <= max_dim:
            return data
        img = img.convert(img.mode)
        img.thumbnail((max_dim, max_dim))
        buf = io.BytesIO()
        img.save(buf, format="PNG")
        return buf.getvalue()


def build_prompt(
    agent: AgentKind,
    resource: WebResource,
    options: PromptOptions = PromptOptions(),
) -> PromptBundle:
    """Build the exact prompt bundle for one agent over one resource.

    Raises MissingInput when the resource lacks a field the agent needs.
    """
    missing = resource.missing_for(agent)
    if missing:
        raise MissingInput(agent.value, sorted(missing)[0])

    role = _ROLE_PROMPTS[agent]
    if agent is AgentKind.URL:
        text = f"{role}\n\n{_JSON_DEMAND}\n\nURL: {resource.url}"
        return PromptBundle(text=text)

    if agent is AgentKind.SCREENSHOT:
        text = f"{role}\n\n{_JSON_DEMAND}"
        image = resource.screenshot
        if options.max_image_dimension is not None:
            image = _downscale_png(image, options.max_image_dimension)
        return PromptBundle(text=text, attached_image=image)

    text = f"{role}\n\n{_JSON_DEMAND}"
    doc = truncate_html(resource.html, options.html_byte_budget)
    return PromptBundle(text=text, attached_document=doc)
