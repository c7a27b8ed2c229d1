"""phishscan: cost-aware phishing website scanning with LLM agents."""

from .core import (
    AgentKind,
    AgentReport,
    GroundTruthRecord,
    Label,
    ScanOutcome,
    Source,
    WebResource,
    required_inputs,
)

__version__ = "0.1.0"

__all__ = [
    "AgentKind",
    "AgentReport",
    "GroundTruthRecord",
    "Label",
    "ScanOutcome",
    "Source",
    "WebResource",
    "required_inputs",
    "__version__",
]
