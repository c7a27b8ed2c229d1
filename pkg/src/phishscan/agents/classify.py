"""Single-agent classification: prompt, complete, parse, price."""

from __future__ import annotations

import logging
import time

from ..core import AgentKind, AgentReport, WebResource
from ..costing import BudgetGuard, PriceBook, estimate_call_cost, price_of
from ..errors import AmbiguousVerdict, UnknownModel, UnparseableVerdict
from .backends import ModelBackend
from .parsing import parse_verdict
from .prompts import CORRECTIVE_INSTRUCTION, PromptBundle, PromptOptions, build_prompt

logger = logging.getLogger(__name__)


def classify(
    agent: AgentKind,
    resource: WebResource,
    backend: ModelBackend,
    price_book: PriceBook,
    *,
    prompt_options: PromptOptions = PromptOptions(),
    budget: BudgetGuard | None = None,
) -> AgentReport:
    """Run one agent over one resource and return its priced report.

    Latency covers the backend call(s) only. On an unparseable or
    ambiguous verdict the call is retried once with an appended corrective
    instruction; the report then accounts for both calls' usage. Usage is
    never invented here: token counts come from the backend responses.
    """
    bundle = build_prompt(agent, resource, prompt_options)
    sheet = price_book.for_model(backend.model_id)

    input_tokens = 0
    output_tokens = 0
    image_count = 0
    latency = 0.0
    model_id = backend.model_id
    label = None
    reasoning = ""

    attempt_bundle = bundle
    for attempt in (1, 2):
        if budget is not None:
            budget.check_before(
                estimate_call_cost(attempt_bundle.content_bytes(), attempt_bundle.image_count, sheet)
            )
        started = time.perf_counter()
        response = backend.complete(attempt_bundle)
        latency += time.perf_counter() - started
        input_tokens += response.input_tokens
        output_tokens += response.output_tokens
        image_count += attempt_bundle.image_count
        model_id = response.model_id
        try:
            label, reasoning = parse_verdict(response.raw_text)
            break
        except (UnparseableVerdict, AmbiguousVerdict):
            if attempt == 2:
                raise
            logger.warning(
                "%s agent verdict unparseable, retrying with corrective instruction",
                agent.value,
            )
            attempt_bundle = PromptBundle(
                text=bundle.text + CORRECTIVE_INSTRUCTION,
                attached_image=bundle.attached_image,
                attached_document=bundle.attached_document,
            )

    try:
        final_sheet = price_book.for_model(model_id)
    except UnknownModel:
        # Providers sometimes answer with a dated variant of the configured
        # id; price those under the configured sheet rather than failing.
        model_id = backend.model_id
        final_sheet = sheet
    cost = price_of(input_tokens, output_tokens, image_count, final_sheet)
    if budget is not None:
        budget.add(cost)
    return AgentReport(
        agent=agent,
        label=label,
        reasoning=reasoning,
        model_id=model_id,
        input_tokens=input_tokens,
        output_tokens=output_tokens,
        image_count=image_count,
        latency=latency,
        cost=cost,
    )
