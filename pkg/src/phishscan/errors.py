"""Exception hierarchy shared across the scan pipeline.

Every failure mode that callers are expected to branch on gets its own
class; the CLI maps these to distinct exit codes and the HTTP service
maps them to status codes.
"""

from __future__ import annotations


class PhishscanError(Exception):
    """Base class for all errors raised by this package."""


class InvalidUrl(PhishscanError):
    """The submitted text is not an absolute http(s) URL."""

    def __init__(self, raw: str, reason: str = "not an absolute http(s) URL"):
        self.raw = raw
        self.reason = reason
        super().__init__(f"invalid URL {raw!r}: {reason}")


class NoQrFound(PhishscanError):
    """The submitted image contains no decodable QR code."""


class MultipleQrCodes(PhishscanError):
    """The submitted image contains more than one QR code."""

    def __init__(self, payloads: list[str]):
        self.payloads = payloads
        super().__init__(f"image contains {len(payloads)} QR codes")


class PayloadNotUrl(PhishscanError):
    """A QR code decoded fine but its payload is not an http(s) URL."""

    def __init__(self, payload: str):
        self.payload = payload
        super().__init__(f"QR payload is not an http(s) URL: {payload!r}")


class MissingInput(PhishscanError):
    """A resource lacks a field the selected agent requires."""

    def __init__(self, agent: str, field: str):
        self.agent = agent
        self.field = field
        super().__init__(f"{agent} agent requires resource field {field!r}")


class UnparseableVerdict(PhishscanError):
    """No valid classification object could be extracted from model output."""

    def __init__(self, raw_text: str, reason: str = "no classification found"):
        self.raw_text = raw_text
        self.reason = reason
        super().__init__(f"unparseable verdict ({reason}): {raw_text[:200]!r}")


class AmbiguousVerdict(PhishscanError):
    """Model output contains both labels as classification values."""

    def __init__(self, raw_text: str):
        self.raw_text = raw_text
        super().__init__(f"ambiguous verdict, both labels present: {raw_text[:200]!r}")


class BackendError(PhishscanError):
    """The completion backend failed after bounded retries."""

    def __init__(self, message: str, status_code: int | None = None):
        self.status_code = status_code
        super().__init__(message)


class CacheMiss(BackendError):
    """The replay cache holds no response for the requested key."""

    def __init__(self, key: str):
        self.key = key
        super().__init__(f"replay cache miss for key {key}")


class CaptureFailed(PhishscanError):
    """The renderer could not produce the requested capture.

    Explicitly distinct from a phishing/legitimate verdict: an unreachable
    site is reported as unreachable, never classified.
    """

    def __init__(self, url: str, cause: str, partial_reports: list | None = None):
        self.url = url
        self.cause = cause
        self.partial_reports = partial_reports or []
        super().__init__(f"capture failed for {url}: {cause}")


class UnknownModel(PhishscanError):
    """No price sheet entry exists for the model id."""

    def __init__(self, model_id: str):
        self.model_id = model_id
        super().__init__(f"no pricing configured for model {model_id!r}")


class BudgetExceeded(PhishscanError):
    """The per-scan cost ceiling would be exceeded by the next call."""

    def __init__(self, spent, ceiling):
        self.spent = spent
        self.ceiling = ceiling
        super().__init__(f"scan budget exceeded: spent {spent}, ceiling {ceiling}")


class EmptyInput(PhishscanError):
    """An aggregate was requested over zero outcomes."""


class NoClassifiedRecords(PhishscanError):
    """Metrics requested over a confusion matrix with no classified records."""


class UnknownUrlInReport(PhishscanError):
    """A vendor report rates a URL absent from the dataset manifest."""

    def __init__(self, vendor: str, url: str):
        self.vendor = vendor
        self.url = url
        super().__init__(f"vendor {vendor!r} rates unknown URL {url!r}")


class MissingArtifact(PhishscanError):
    """A manifest row references a screenshot/html file that is absent or empty."""

    def __init__(self, url: str, field: str, path: str):
        self.url = url
        self.field = field
        self.path = path
        super().__init__(f"record {url!r}: {field} file missing or empty: {path}")


class DuplicateUrl(PhishscanError):
    """Two manifest rows share the same URL."""

    def __init__(self, url: str, line_no: int):
        self.url = url
        self.line_no = line_no
        super().__init__(f"duplicate URL {url!r} at manifest line {line_no}")


class MalformedRow(PhishscanError):
    """A manifest row does not match the documented CSV schema."""

    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"malformed manifest row at line {line_no}: {reason}")


class NotFound(PhishscanError):
    """No stored scan exists under the given id."""

    def __init__(self, scan_id: str):
        self.scan_id = scan_id
        super().__init__(f"no scan stored under id {scan_id!r}")


class CorruptStore(PhishscanError):
    """An append-only store file is corrupted before its final line."""

    def __init__(self, path: str, line_no: int):
        self.path = path
        self.line_no = line_no
        super().__init__(f"corrupt record at {path}:{line_no} (not a trailing torn write)")
