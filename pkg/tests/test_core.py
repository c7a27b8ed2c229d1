"""Core type invariants and canonical serialization."""

from decimal import Decimal

import pytest
from hypothesis import given
from hypothesis import strategies as st

from phishscan.core import (
    AgentKind,
    AgentReport,
    Label,
    ScanOutcome,
    Source,
    WebResource,
    outcome_from_dict,
    outcome_to_dict,
    required_inputs,
    utcnow,
)

from .conftest import png_bytes


@pytest.mark.parametrize(
    "agent,expected",
    [
        (AgentKind.URL, {"url"}),
        (AgentKind.SCREENSHOT, {"screenshot"}),
        (AgentKind.HTML, {"html"}),
    ],
)
def test_required_inputs(agent, expected):
    assert required_inputs(agent) == frozenset(expected)


@given(st.sampled_from(list(Label)))
def test_label_serialization_round_trips(label):
    assert Label(label.value) is label
    assert Label.parse(label.value) is label


def test_label_set_is_closed():
    assert {l.value for l in Label} == {"Phishing", "Legitimate"}
    with pytest.raises(ValueError):
        Label.parse("maybe")


class TestWebResource:
    def test_accepts_http_and_https(self):
        WebResource(url="http://example.org/a")
        WebResource(url="https://example.org/a")

    @pytest.mark.parametrize("url", ["ftp://x.test/", "example.org", "javascript:alert(1)", "https://"])
    def test_rejects_non_absolute_http(self, url):
        with pytest.raises(ValueError):
            WebResource(url=url)

    def test_screenshot_must_be_png(self):
        with pytest.raises(ValueError):
            WebResource(url="https://x.test/", screenshot=b"not a png")

    def test_valid_png_accepted(self):
        res = WebResource(url="https://x.test/", screenshot=png_bytes(1, 1))
        assert res.has("screenshot")

    def test_missing_for(self):
        res = WebResource(url="https://x.test/")
        assert res.missing_for(AgentKind.URL) == frozenset()
        assert res.missing_for(AgentKind.SCREENSHOT) == {"screenshot"}
        assert res.missing_for(AgentKind.HTML) == {"html"}


def report(agent=AgentKind.URL, label=Label.PHISHING, cost="0.001", **kwargs):
    defaults = dict(
        agent=agent,
        label=label,
        reasoning="IP-literal host",
        model_id="scripted-v1",
        input_tokens=10,
        output_tokens=5,
        image_count=0,
        latency=0.5,
        cost=Decimal(cost),
    )
    defaults.update(kwargs)
    return AgentReport(**defaults)


class TestAgentReport:
    def test_reasoning_must_be_non_empty(self):
        with pytest.raises(ValueError, match="reasoning"):
            report(reasoning="")

    def test_counts_must_be_non_negative(self):
        with pytest.raises(ValueError):
            report(input_tokens=-1)
        with pytest.raises(ValueError):
            report(latency=-0.1)

    def test_cost_must_be_decimal(self):
        with pytest.raises(ValueError, match="Decimal"):
            report(cost="ignored", **{"cost": 0.001})


def outcome(reports, strategy_id="progressive", **kwargs):
    defaults = dict(
        resource=WebResource(url="https://x.test/"),
        strategy_id=strategy_id,
        final_label=reports[-1].label,
        reports=tuple(reports),
        total_latency=1.0,
        total_cost=sum((r.cost for r in reports), Decimal("0")),
        created_at=utcnow(),
    )
    defaults.update(kwargs)
    return ScanOutcome(**defaults)


class TestScanOutcome:
    def test_total_cost_must_match_ledger(self):
        with pytest.raises(ValueError, match="total_cost"):
            outcome([report()], total_cost=Decimal("9"))

    @pytest.mark.parametrize(
        "strategy_id,count,ok",
        [
            ("majority", 3, True),
            ("majority", 2, False),
            ("progressive", 1, True),
            ("progressive", 2, True),
            ("progressive", 3, True),
            ("single-url", 1, True),
            ("single-url", 2, False),
        ],
    )
    def test_report_count_bounds(self, strategy_id, count, ok):
        reports = [report() for _ in range(count)]
        if ok:
            outcome(reports, strategy_id=strategy_id)
        else:
            with pytest.raises(ValueError, match="reports"):
                outcome(reports, strategy_id=strategy_id)

    def test_analysis_latency_is_sum_of_report_latencies(self):
        out = outcome([report(latency=0.25), report(latency=0.5)])
        assert out.analysis_latency == pytest.approx(0.75)

    def test_unknown_strategy_rejected(self):
        with pytest.raises(ValueError, match="strategy"):
            outcome([report()], strategy_id="coin-flip")


def test_outcome_json_round_trip():
    out = outcome(
        [
            report(),
            report(agent=AgentKind.SCREENSHOT, label=Label.LEGITIMATE, image_count=1),
        ],
        resource=WebResource(
            url="https://x.test/a?b=c",
            source=Source.QR_DECODED,
            screenshot=png_bytes(3, 2),
            html="<html></html>",
            capture_timestamp=utcnow(),
        ),
    )
    data = outcome_to_dict(out)
    assert data["final_label"] in ("Phishing", "Legitimate")
    assert data["resource"]["source"] == "qr-decoded"
    assert isinstance(data["total_cost"], str)
    assert outcome_from_dict(data) == out
