"""Command-line interface.

Exit codes are scriptable: 0 means a Legitimate verdict, 3 Phishing, and
each error class gets its own nonzero code (see EXIT_CODES). The scan
pipeline here is the same one the HTTP service uses.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .acquisition import decode_qr, normalize_url
from .config import BACKEND_CHOICES, build_capture, build_deps, load_config
from .core import STRATEGY_IDS, Label, Source
from .datastore import ScanHistory, load_manifest
from .errors import (
    AmbiguousVerdict,
    BackendError,
    BudgetExceeded,
    CaptureFailed,
    InvalidUrl,
    MultipleQrCodes,
    NoQrFound,
    PayloadNotUrl,
    PhishscanError,
    UnparseableVerdict,
)
from .evaluation import (
    MetricSet,
    compare_vendors,
    evaluate_strategy,
    load_vendor_report,
    vendor_reports_from_virustotal,
)
from .reporting import (
    render_eval_text,
    render_vendor_text,
    write_eval_report,
    write_vendor_report,
)
from .service import public_outcome_dict
from .strategies import run_scan

EXIT_LEGITIMATE = 0
EXIT_UNEXPECTED = 1
EXIT_PHISHING = 3
EXIT_INVALID_INPUT = 4
EXIT_CAPTURE_FAILED = 5
EXIT_BACKEND_ERROR = 6
EXIT_PARSE_ERROR = 7
EXIT_BUDGET_EXCEEDED = 8
EXIT_CONFIG_ERROR = 9

EXIT_CODES = {
    "legitimate verdict": EXIT_LEGITIMATE,
    "unexpected error": EXIT_UNEXPECTED,
    "phishing verdict": EXIT_PHISHING,
    "invalid URL or QR input": EXIT_INVALID_INPUT,
    "capture failed (site unreachable)": EXIT_CAPTURE_FAILED,
    "model backend error": EXIT_BACKEND_ERROR,
    "model output unparseable": EXIT_PARSE_ERROR,
    "scan budget exceeded": EXIT_BUDGET_EXCEEDED,
    "configuration error": EXIT_CONFIG_ERROR,
}


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, (InvalidUrl, NoQrFound, PayloadNotUrl, MultipleQrCodes)):
        return EXIT_INVALID_INPUT
    if isinstance(exc, CaptureFailed):
        return EXIT_CAPTURE_FAILED
    if isinstance(exc, BudgetExceeded):
        return EXIT_BUDGET_EXCEEDED
    if isinstance(exc, (UnparseableVerdict, AmbiguousVerdict)):
        return EXIT_PARSE_ERROR
    if isinstance(exc, BackendError):
        return EXIT_BACKEND_ERROR
    if isinstance(exc, PhishscanError):
        return EXIT_UNEXPECTED
    if isinstance(exc, ValueError):
        return EXIT_CONFIG_ERROR
    return EXIT_UNEXPECTED


def _fail(exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(_exit_code(exc))


def _config_overrides(**kwargs) -> dict:
    return {k: v for k, v in kwargs.items() if v is not None}


@click.group()
@click.option(
    "--config",
    "config_file",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="YAML config file (default: $PHISHSCAN_CONFIG or ./phishscan.yaml).",
)
@click.pass_context
def main(ctx, config_file):
    """Phishing website scanner: URL, screenshot, and HTML agents under
    selectable combination strategies, with full cost accounting."""
    ctx.ensure_object(dict)
    ctx.obj["config_file"] = config_file


_COMMON_BACKEND_OPTIONS = [
    click.option("--backend", type=click.Choice(BACKEND_CHOICES), default=None),
    click.option("--model", "model_id", default=None, help="Model id (must be priced)."),
    click.option("--replay-cache", default=None, help="Replay cache JSONL path."),
    click.option("--price-sheet", default=None, help="Price sheet YAML path."),
]


def _with_options(options):
    def wrap(fn):
        for option in reversed(options):
            fn = option(fn)
        return fn

    return wrap


@main.command()
@click.argument("url", required=False)
@click.option("--qr", type=click.Path(exists=True, dir_okay=False), help="QR image to decode.")
@click.option("--strategy", type=click.Choice(STRATEGY_IDS), default=None)
@_with_options(_COMMON_BACKEND_OPTIONS)
@click.option("--max-cost", "max_cost_per_scan", default=None, help="Per-scan USD ceiling.")
@click.option(
    "--fixture-manifest",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Serve captures from a dataset manifest instead of a live browser.",
)
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
@click.pass_context
def scan(ctx, url, qr, strategy, backend, model_id, replay_cache, price_sheet,
         max_cost_per_scan, fixture_manifest, as_json):
    """Scan one URL (or a QR code image) and print the verdict.

    Exits 0 for Legitimate, 3 for Phishing, other codes per error class.
    """
    if bool(url) == bool(qr):
        click.echo("error: provide exactly one of URL or --qr IMAGE", err=True)
        sys.exit(EXIT_INVALID_INPUT)
    try:
        config = load_config(
            ctx.obj.get("config_file"),
            _config_overrides(
                backend=backend,
                model_id=model_id,
                replay_cache=replay_cache,
                price_sheet=price_sheet,
                strategy=strategy,
                max_cost_per_scan=max_cost_per_scan,
            ),
        )
        if qr:
            raw = decode_qr(Path(qr).read_bytes())
            source = Source.QR_DECODED
        else:
            raw = url
            source = Source.DIRECT_URL
        target = normalize_url(raw)
        capture = build_capture(config, fixture_manifest=fixture_manifest)
        deps = build_deps(config, capture=capture)
        outcome = run_scan(config.strategy, target, deps, source)
        entry = ScanHistory(config.history_path).store(outcome, origin="cli")
    except Exception as exc:  # mapped to a documented exit code
        _fail(exc)
        return

    if as_json:
        click.echo(json.dumps(
            {"scan_id": entry.scan_id, "outcome": public_outcome_dict(outcome)},
            sort_keys=True,
        ))
    else:
        _print_outcome(entry.scan_id, outcome)
    sys.exit(EXIT_PHISHING if outcome.final_label is Label.PHISHING else EXIT_LEGITIMATE)


def _print_outcome(scan_id, outcome) -> None:
    color = "red" if outcome.final_label is Label.PHISHING else "green"
    click.echo(click.style(f"verdict: {outcome.final_label.value}", fg=color, bold=True))
    click.echo(
        f"url: {outcome.resource.url} (source: {outcome.resource.source.value}, "
        f"strategy: {outcome.strategy_id})"
    )
    for i, rep in enumerate(outcome.reports, start=1):
        click.echo(
            f"  {i}. {rep.agent.value:<10} {rep.label.value:<10} "
            f"{rep.latency:.2f}s  ${rep.cost:.8f}"
        )
        click.echo(f"     {rep.reasoning}")
    click.echo(
        f"total cost ${outcome.total_cost:.8f}, analysis {outcome.analysis_latency:.2f}s, "
        f"wall {outcome.total_latency:.2f}s"
    )
    click.echo(f"scan id: {scan_id}")


@main.command("eval")
@click.option("--manifest", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--strategy", type=click.Choice(STRATEGY_IDS), default=None)
@_with_options(_COMMON_BACKEND_OPTIONS)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Directory for report files (default: no files, print only).")
@click.option("--jobs", type=int, default=None, help="Parallel records (default 8).")
@click.option("--figures/--no-figures", default=True, help="Render PNG charts.")
@click.pass_context
def eval_command(ctx, manifest, strategy, backend, model_id, replay_cache, price_sheet,
                 out_dir, jobs, figures):
    """Evaluate a strategy over a labeled dataset manifest.

    Runs on stored artifacts only (no live capture) and writes metric and
    resource reports plus a per-record audit file.
    """
    try:
        config = load_config(
            ctx.obj.get("config_file"),
            _config_overrides(
                backend=backend,
                model_id=model_id,
                replay_cache=replay_cache,
                price_sheet=price_sheet,
                strategy=strategy,
                eval_jobs=jobs,
            ),
        )
        data = load_manifest(manifest)
        deps = build_deps(config, capture=build_capture(config, fixture_manifest=manifest))
        result = evaluate_strategy(
            config.strategy,
            data,
            deps.backend,
            deps.price_book,
            jobs=config.eval_jobs,
            prompt_options=config.prompt_options(),
            max_cost=config.max_cost(),
        )
    except Exception as exc:
        _fail(exc)
        return
    click.echo(render_eval_text(result, data))
    if out_dir:
        path = write_eval_report(out_dir, result, data, figures=figures)
        click.echo(f"report written to {path}")


@main.command("compare-vendors")
@click.option("--reports", "reports_dir", required=True, type=click.Path(exists=True, file_okay=False),
              help="Directory of vendor report JSON files.")
@click.option("--manifest", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--from-virustotal", is_flag=True,
              help="Treat --reports as raw VirusTotal v3 URL analyses instead.")
@click.option("--ours", "ours_report", type=click.Path(exists=True, dir_okay=False), default=None,
              help="report.json from an eval run, included as this system's row.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
@click.option("--figures/--no-figures", default=True)
def compare_vendors_command(reports_dir, manifest, from_virustotal, ours_report, out_dir, figures):
    """Score stored vendor verdicts against the dataset, ranked by F1."""
    try:
        data = load_manifest(manifest)
        paths = sorted(Path(reports_dir).glob("*.json"))
        if not paths:
            raise ValueError(f"no .json vendor reports in {reports_dir}")
        if from_virustotal:
            reports = vendor_reports_from_virustotal(paths)
        else:
            reports = [load_vendor_report(p) for p in paths]
        ours = None
        if ours_report:
            ours_data = json.loads(Path(ours_report).read_text(encoding="utf-8"))
            m = ours_data["metrics"]
            ours = (
                f"this system ({ours_data['strategy']})",
                MetricSet(
                    accuracy=m["accuracy"],
                    precision=m["precision"],
                    recall=m["recall"],
                    f1=m["f1"],
                ),
            )
        rows = compare_vendors(reports, data, ours=ours)
    except Exception as exc:
        _fail(exc)
        return
    click.echo(render_vendor_text(rows, data))
    if out_dir:
        path = write_vendor_report(out_dir, rows, data, figures=figures)
        click.echo(f"report written to {path}")


@main.command()
@click.argument("url")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.pass_context
def capture(ctx, url, out_dir):
    """Capture a full-page screenshot and HTML for one URL."""
    try:
        config = load_config(ctx.obj.get("config_file"))
        target = normalize_url(url)
        provider = build_capture(config)
        result = provider.capture(
            target, config.capture_options(), frozenset({"screenshot", "html"})
        )
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "screenshot.png").write_bytes(result.screenshot)
        (out / "page.html").write_text(result.html, encoding="utf-8")
        (out / "meta.json").write_text(
            json.dumps(
                {"url": target, "final_url": result.final_url, "status": result.status},
                indent=2,
            )
            + "\n",
            encoding="utf-8",
        )
    except Exception as exc:
        _fail(exc)
        return
    click.echo(f"captured {target} to {out_dir}")


@main.command()
@click.option("--addr", default="127.0.0.1:8000", help="host:port to bind.")
@click.pass_context
def serve(ctx, addr):
    """Run the HTTP scan service (serves the web UI when built)."""
    import uvicorn

    from .service import create_app

    try:
        config = load_config(ctx.obj.get("config_file"))
        host, _, port_text = addr.rpartition(":")
        host = host or "127.0.0.1"
        port = int(port_text)
        app = create_app(config)
    except Exception as exc:
        _fail(exc)
        return
    uvicorn.run(app, host=host, port=port)


@main.command("convert-vt")
@click.option("--raw", "raw_dir", required=True, type=click.Path(exists=True, file_okay=False),
              help="Directory of raw VirusTotal v3 URL analysis JSON files.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def convert_vt(raw_dir, out_dir):
    """Distill raw VirusTotal v3 analyses into per-vendor report files."""
    try:
        paths = sorted(Path(raw_dir).glob("*.json"))
        if not paths:
            raise ValueError(f"no .json files in {raw_dir}")
        reports = vendor_reports_from_virustotal(paths)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for report in reports:
            safe = "".join(c if c.isalnum() or c in "-_." else "_" for c in report.vendor_name)
            (out / f"{safe}.json").write_text(
                json.dumps(
                    {"vendor": report.vendor_name, "verdicts": report.verdicts},
                    indent=2,
                    sort_keys=True,
                )
                + "\n",
                encoding="utf-8",
            )
    except Exception as exc:
        _fail(exc)
        return
    click.echo(f"wrote {len(reports)} vendor reports to {out_dir}")


if __name__ == "__main__":
    main()
