"""Archive metadata ingestion and nep-all issue composition.

The corpus holds every bibliographic record ever ingested and slices the
stream of new arrivals into date-named nep-all issues.  An issue collects
the registered papers that no earlier issue contains, so the issues
partition the admitted corpus: no paper appears twice, none is dropped.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, replace
from datetime import date
from pathlib import Path
from typing import Callable, Iterable

from .errors import MissingPaperError, NotFoundError, ParseError, ValidationError
from .timeutil import iso_z, parse_iso_z, utc_now

# Batch-format keys that map straight onto record fields.
_SCALAR_KEYS = {"Handle", "Title", "Abstract", "Date", "Archive", "Url"}


@dataclass(frozen=True)
class PaperRecord:
    """One bibliographic item. ``registered_at`` is set by the system at
    ingestion time and is never read from input data."""

    handle: str
    title: str
    abstract: str = ""
    authors: tuple[str, ...] = ()
    creation_date: date | None = None
    archive_id: str = ""
    fulltext_url: str | None = None
    registered_at: int | None = None

    def to_json(self) -> dict:
        return {
            "handle": self.handle,
            "title": self.title,
            "abstract": self.abstract,
            "authors": list(self.authors),
            "creation_date": self.creation_date.isoformat() if self.creation_date else None,
            "archive_id": self.archive_id,
            "fulltext_url": self.fulltext_url,
            "registered_at": self.registered_at,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PaperRecord":
        raw_date = obj.get("creation_date")
        return cls(
            handle=obj["handle"],
            title=obj["title"],
            abstract=obj.get("abstract", ""),
            authors=tuple(obj.get("authors", ())),
            creation_date=date.fromisoformat(raw_date) if raw_date else None,
            archive_id=obj.get("archive_id", ""),
            fulltext_url=obj.get("fulltext_url"),
            registered_at=obj.get("registered_at"),
        )


@dataclass(frozen=True)
class NepAllIssue:
    """Date-named ordered list of the new paper handles."""

    issue_date: date
    paper_handles: tuple[str, ...]
    composed_at: int

    @property
    def length(self) -> int:
        return len(self.paper_handles)


@dataclass(frozen=True)
class CompositionPolicy:
    """Knobs of the general editor: drop undated papers, and optionally
    anything created before ``cutoff``."""

    exclude_undated: bool = True
    cutoff: date | None = None

    def admits(self, paper: PaperRecord) -> bool:
        if paper.creation_date is None:
            return not self.exclude_undated
        if self.cutoff is not None and paper.creation_date < self.cutoff:
            return False
        return True


def parse_archive_batch(text: str) -> list[PaperRecord]:
    """Parse batch text into records.

    Records are blank-line separated blocks of ``Key: value`` lines.
    ``#`` lines are comments, unknown keys are ignored, ``Author`` may
    repeat.  A block missing Handle or Title raises ParseError naming the
    block's first line.
    """
    records: list[PaperRecord] = []
    block: dict[str, object] = {}
    authors: list[str] = []
    block_line = 0

    def flush() -> None:
        nonlocal block, authors
        if not block and not authors:
            return
        if "Handle" not in block:
            raise ParseError("record is missing required key 'Handle'", block_line)
        if "Title" not in block:
            raise ParseError("record is missing required key 'Title'", block_line)
        records.append(
            PaperRecord(
                handle=str(block["Handle"]),
                title=str(block["Title"]),
                abstract=str(block.get("Abstract", "")),
                authors=tuple(authors),
                creation_date=block.get("Date"),  # type: ignore[arg-type]
                archive_id=str(block.get("Archive", "")),
                fulltext_url=str(block["Url"]) if "Url" in block else None,
            )
        )
        block = {}
        authors = []

    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\n")
        if line.startswith("#"):
            continue
        if not line.strip():
            flush()
            continue
        if ":" not in line:
            raise ParseError(f"expected 'Key: value', got {line!r}", lineno)
        key, value = line.split(":", 1)
        key = key.strip()
        value = value.strip()
        if not block and not authors:
            block_line = lineno
        if key == "Author":
            authors.append(value)
        elif key == "Date":
            try:
                block["Date"] = date.fromisoformat(value)
            except ValueError:
                raise ParseError(f"invalid ISO date {value!r}", lineno) from None
        elif key in _SCALAR_KEYS:
            block[key] = value
        # unknown keys ignored
    flush()
    return records


def serialize_archive_batch(records: Iterable[PaperRecord]) -> str:
    """Inverse of :func:`parse_archive_batch` for line-safe field values."""
    blocks = []
    for r in records:
        lines = [f"Handle: {r.handle}", f"Title: {r.title}"]
        if r.abstract:
            lines.append(f"Abstract: {r.abstract}")
        lines.extend(f"Author: {a}" for a in r.authors)
        if r.creation_date is not None:
            lines.append(f"Date: {r.creation_date.isoformat()}")
        if r.archive_id:
            lines.append(f"Archive: {r.archive_id}")
        if r.fulltext_url is not None:
            lines.append(f"Url: {r.fulltext_url}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


def format_issue(issue: NepAllIssue) -> str:
    head = [
        f"Issue: {issue.issue_date.isoformat()}",
        f"Composed: {iso_z(issue.composed_at)}",
        f"Length: {issue.length}",
    ]
    return "\n".join(head) + "\n\n" + "".join(f"{h}\n" for h in issue.paper_handles)


def parse_issue(text: str) -> NepAllIssue:
    lines = text.split("\n")
    header: dict[str, str] = {}
    body_at = len(lines)
    for i, line in enumerate(lines):
        if not line.strip():
            body_at = i + 1
            break
        key, _, value = line.partition(":")
        header[key.strip()] = value.strip()
    try:
        issue = NepAllIssue(
            issue_date=date.fromisoformat(header["Issue"]),
            paper_handles=tuple(l for l in lines[body_at:] if l.strip()),
            composed_at=parse_iso_z(header["Composed"]),
        )
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad issue file header: {exc}") from None
    if "Length" in header and int(header["Length"]) != issue.length:
        raise ParseError("issue file Length header disagrees with body")
    return issue


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


class Corpus:
    """File-backed paper store plus the nep-all issue sequence.

    Writes are serialized behind one lock; readers work off the in-memory
    index, which always reflects fully persisted state.
    """

    def __init__(self, root: Path, clock: Callable[[], int] = utc_now):
        self.root = Path(root)
        self._clock = clock
        self._papers_path = self.root / "corpus" / "papers.jsonl"
        self._issues_dir = self.root / "nepall"
        self._papers_path.parent.mkdir(parents=True, exist_ok=True)
        self._issues_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._papers: dict[str, PaperRecord] = {}
        self._issues: dict[date, NepAllIssue] = {}
        self._issued: set[str] = set()
        self._load()

    def _load(self) -> None:
        if self._papers_path.exists():
            with self._papers_path.open(encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        rec = PaperRecord.from_json(json.loads(line))
                        self._papers[rec.handle] = rec
        for path in sorted(self._issues_dir.glob("*.issue")):
            issue = parse_issue(path.read_text(encoding="utf-8"))
            self._issues[issue.issue_date] = issue
            self._issued.update(issue.paper_handles)

    # -- papers

    def register_papers(self, records: Iterable[PaperRecord]) -> int:
        """Insert new handles with registered_at = now; re-ingestion of a
        known handle is a no-op. Returns the number of insertions."""
        now = self._clock()
        added = 0
        with self._lock:
            with self._papers_path.open("a", encoding="utf-8") as fh:
                for rec in records:
                    if rec.handle in self._papers:
                        continue
                    stamped = replace(rec, registered_at=now)
                    fh.write(json.dumps(stamped.to_json(), ensure_ascii=False) + "\n")
                    self._papers[stamped.handle] = stamped
                    added += 1
        return added

    def get_paper(self, handle: str) -> PaperRecord:
        try:
            return self._papers[handle]
        except KeyError:
            raise MissingPaperError(f"unknown paper handle {handle!r}") from None

    def has_paper(self, handle: str) -> bool:
        return handle in self._papers

    def paper_count(self) -> int:
        return len(self._papers)

    # -- nep-all issues

    def compose_nep_all(self, as_of: date, policy: CompositionPolicy | None = None) -> NepAllIssue:
        """Compose and persist the nep-all issue named ``as_of``.

        Contains every registered, policy-admitted paper not yet carried by
        an earlier issue, in registration order.  Papers a policy rejects
        stay unissued and may surface under a later, laxer policy.
        """
        policy = policy or CompositionPolicy()
        with self._lock:
            if self._issues:
                last = max(self._issues)
                if as_of <= last:
                    raise ValidationError(
                        f"issue date {as_of.isoformat()} is not later than the "
                        f"previous issue {last.isoformat()}"
                    )
            handles = [
                p.handle
                for p in self._papers.values()
                if p.handle not in self._issued and policy.admits(p)
            ]
            issue = NepAllIssue(
                issue_date=as_of,
                paper_handles=tuple(handles),
                composed_at=self._clock(),
            )
            _write_atomic(self._issues_dir / f"{as_of.isoformat()}.issue", format_issue(issue))
            self._issues[as_of] = issue
            self._issued.update(handles)
        return issue

    def issue(self, issue_date: date) -> NepAllIssue:
        try:
            return self._issues[issue_date]
        except KeyError:
            raise NotFoundError(
                f"no nep-all issue named {issue_date.isoformat()}"
            ) from None

    def has_issue(self, issue_date: date) -> bool:
        return issue_date in self._issues

    def issue_dates(self) -> list[date]:
        return sorted(self._issues)
