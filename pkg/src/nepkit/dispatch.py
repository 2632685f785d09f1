"""Subscriptions plus rendering and delivery of sent report issues.

Delivery is file-based: one text file per subscriber lands in
``outbox/<report_code>/<issue_date>/<address>.txt``.  Transport (SMTP or
otherwise) is deliberately out of scope; the outbox is the contract.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .corpus import Corpus, _write_atomic
from .errors import ValidationError
from .timeutil import utc_now
from .workflow import Report, StageSnapshot


@dataclass(frozen=True)
class Subscription:
    report_code: str
    address: str
    subscribed_at: int


@dataclass(frozen=True)
class RenderedIssue:
    report_code: str
    issue_date: str
    body: str


def _check_address(address: str) -> None:
    if not address or any(c in address for c in "/\0 \t\n"):
        raise ValidationError(f"invalid subscriber address {address!r}")


class SubscriptionBook:
    """Per-report subscriber lists under ``<root>/subscriptions``.
    (report, address) pairs are unique; both mutations are idempotent."""

    def __init__(self, root: Path, clock: Callable[[], int] = utc_now):
        self.root = Path(root) / "subscriptions"
        self.root.mkdir(parents=True, exist_ok=True)
        self._clock = clock
        self._lock = threading.Lock()

    def _path(self, code: str) -> Path:
        return self.root / f"{code}.json"

    def _load(self, code: str) -> list[Subscription]:
        path = self._path(code)
        if not path.exists():
            return []
        obj = json.loads(path.read_text(encoding="utf-8"))
        return [
            Subscription(code, entry["address"], entry["subscribed_at"])
            for entry in obj["subscriptions"]
        ]

    def _save(self, code: str, subs: list[Subscription]) -> None:
        payload = {
            "subscriptions": [
                {"address": s.address, "subscribed_at": s.subscribed_at} for s in subs
            ]
        }
        _write_atomic(self._path(code), json.dumps(payload, ensure_ascii=False, indent=2) + "\n")

    def subscribe(self, code: str, address: str) -> None:
        _check_address(address)
        with self._lock:
            subs = self._load(code)
            if any(s.address == address for s in subs):
                return
            subs.append(Subscription(code, address, self._clock()))
            self._save(code, subs)

    def unsubscribe(self, code: str, address: str) -> None:
        with self._lock:
            subs = self._load(code)
            kept = [s for s in subs if s.address != address]
            if len(kept) != len(subs):
                self._save(code, kept)

    def subscriptions(self, code: str) -> list[Subscription]:
        with self._lock:
            return self._load(code)

    def subscriber_count(self, code: str) -> int:
        return len(self.subscriptions(code))


def render_issue(report: Report, sent: StageSnapshot, corpus: Corpus) -> RenderedIssue:
    """Render the sent snapshot as the plain-text report issue body.
    Pure function of its inputs."""
    if sent.stage != "sent":
        raise ValidationError(f"can only render sent snapshots, got stage {sent.stage!r}")
    if not sent.paper_handles:
        raise ValidationError("cannot render an empty issue")
    lines = [
        f"NEP Report: {report.code} — {report.subject}",
        f"Issue: {sent.issue_date.isoformat()}",
        "",
    ]
    for n, handle in enumerate(sent.paper_handles, start=1):
        paper = corpus.get_paper(handle)
        lines.append(f"{n}. {paper.title}")
        if paper.authors:
            lines.append(f"   {', '.join(paper.authors)}")
        if paper.fulltext_url:
            lines.append(f"   {paper.fulltext_url}")
        lines.append("")
    return RenderedIssue(
        report_code=report.code,
        issue_date=sent.issue_date.isoformat(),
        body="\n".join(lines) + "\n",
    )


def deliver(rendered: RenderedIssue, addresses: list[str], outbox_root: Path) -> int:
    """Write one outbox file per subscriber; returns how many."""
    issue_dir = Path(outbox_root) / "outbox" / rendered.report_code / rendered.issue_date
    issue_dir.mkdir(parents=True, exist_ok=True)
    for address in addresses:
        _write_atomic(issue_dir / f"{address}.txt", rendered.body)
    return len(addresses)
