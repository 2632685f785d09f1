"""Four-stage editorial workflow with versioned snapshot persistence.

An issue moves through source -> selection -> ordering -> sent.  Every
stage submission persists an immutable, versioned snapshot file; stages
may be repeated, producing version n+1, and consumers always use the
latest version.  Deleting an issue keeps existing snapshots for audit but
removes it from the pending list permanently.

Storage layout, one directory per stage:

    reports/<code>/issues/<YYYY-MM-DD>/<stage>/<version>.ri

Snapshot files are UTF-8 text: ``Report:``, ``Issue:``, ``Stage:``,
``Version:``, ``Mode:``, ``Created:`` header lines, a blank line, then one
``<source_position> <handle>`` line per paper in stage order.
"""

from __future__ import annotations

import json
import re
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Callable, Iterator, Literal, Sequence

from .corpus import Corpus, _write_atomic
from .errors import (
    ConflictError,
    EmptySelectionError,
    NotFoundError,
    ParseError,
    StateError,
    ValidationError,
)
from .presorter import PresortModel, presort
from .timeutil import iso_z, parse_iso_z, utc_now

Stage = Literal["source", "selection", "ordering", "sent"]
STAGES: tuple[Stage, ...] = ("source", "selection", "ordering", "sent")

Mode = Literal["presorted", "unsorted"]
MODES: tuple[Mode, ...] = ("presorted", "unsorted")

IssueState = Literal["pending", "in_selection", "in_ordering", "sent", "deleted"]

PENDING_ACTIONS: tuple[str, ...] = ("presorted", "unsorted", "delete")

DEFAULT_REPORT_CODE_PATTERN = r"nep-[a-z]{3}"


@dataclass(frozen=True)
class Report:
    """A subject-specific channel with its own editor and subscribers."""

    code: str
    subject: str
    editor_name: str
    created_on: date
    editor_token: str | None = None


@dataclass(frozen=True)
class StageSnapshot:
    """The persisted paper list at one editing stage.

    ``source_positions`` maps each handle of this snapshot to its 1-based
    position in the source-stage order it derives from; on the source
    stage itself that is the complete 1..length enumeration.  ``mode`` is
    chosen when the source is opened and inherited read-only downstream.
    """

    report_code: str
    issue_date: date
    stage: Stage
    version: int
    created_at: int
    mode: Mode
    paper_handles: tuple[str, ...]
    source_positions: dict[str, int]


@dataclass(frozen=True)
class IssueStatus:
    report_code: str
    issue_date: date
    state: IssueState


@dataclass(frozen=True)
class PendingIssue:
    issue_date: date
    actions: tuple[str, ...] = PENDING_ACTIONS


def format_snapshot(snap: StageSnapshot) -> str:
    lines = [
        f"Report: {snap.report_code}",
        f"Issue: {snap.issue_date.isoformat()}",
        f"Stage: {snap.stage}",
        f"Version: {snap.version}",
        f"Mode: {snap.mode}",
        f"Created: {iso_z(snap.created_at)}",
        "",
    ]
    lines.extend(f"{snap.source_positions[h]} {h}" for h in snap.paper_handles)
    return "\n".join(lines) + "\n"


def parse_snapshot(text: str) -> StageSnapshot:
    lines = text.split("\n")
    header: dict[str, str] = {}
    body_at = len(lines)
    for i, line in enumerate(lines):
        if not line.strip():
            body_at = i + 1
            break
        key, _, value = line.partition(":")
        header[key.strip()] = value.strip()
    handles: list[str] = []
    positions: dict[str, int] = {}
    for line in lines[body_at:]:
        if not line.strip():
            continue
        try:
            pos, handle = line.split(" ", 1)
            positions[handle] = int(pos)
            handles.append(handle)
        except ValueError:
            raise ParseError(f"bad snapshot paper line {line!r}") from None
    try:
        stage = header["Stage"]
        mode = header["Mode"]
        if stage not in STAGES:
            raise ValueError(f"unknown stage {stage!r}")
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        return StageSnapshot(
            report_code=header["Report"],
            issue_date=date.fromisoformat(header["Issue"]),
            stage=stage,  # type: ignore[arg-type]
            version=int(header["Version"]),
            created_at=parse_iso_z(header["Created"]),
            mode=mode,  # type: ignore[arg-type]
            paper_handles=tuple(handles),
            source_positions=positions,
        )
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad snapshot header: {exc}") from None


class ReportStore:
    """Append-only snapshot store plus the report registry, all under
    ``<root>/reports``.  Snapshot files are never rewritten, so version
    lists and latest snapshots are cached after the first read; the cache
    is only valid while this process is the store's single writer."""

    def __init__(self, root: Path):
        self.root = Path(root) / "reports"
        self.root.mkdir(parents=True, exist_ok=True)
        self._versions: dict[tuple[str, str, str], list[int]] = {}
        self._latest: dict[tuple[str, str, str], StageSnapshot] = {}

    # -- registry

    def _report_path(self, code: str) -> Path:
        return self.root / code / "report.json"

    def add_report(self, report: Report) -> None:
        path = self._report_path(report.code)
        if path.exists():
            raise StateError(f"report {report.code!r} already exists")
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {
            "code": report.code,
            "subject": report.subject,
            "editor_name": report.editor_name,
            "created_on": report.created_on.isoformat(),
            "editor_token": report.editor_token,
        }
        _write_atomic(path, json.dumps(payload, ensure_ascii=False, indent=2) + "\n")

    def get_report(self, code: str) -> Report:
        path = self._report_path(code)
        if not path.exists():
            raise NotFoundError(f"unknown report {code!r}")
        obj = json.loads(path.read_text(encoding="utf-8"))
        return Report(
            code=obj["code"],
            subject=obj["subject"],
            editor_name=obj["editor_name"],
            created_on=date.fromisoformat(obj["created_on"]),
            editor_token=obj.get("editor_token"),
        )

    def has_report(self, code: str) -> bool:
        return self._report_path(code).exists()

    def report_codes(self) -> list[str]:
        return sorted(p.parent.name for p in self.root.glob("*/report.json"))

    # -- snapshots

    def _issue_dir(self, code: str, issue_date: date) -> Path:
        return self.root / code / "issues" / issue_date.isoformat()

    def versions(self, code: str, issue_date: date, stage: Stage) -> list[int]:
        key = (code, issue_date.isoformat(), stage)
        cached = self._versions.get(key)
        if cached is None:
            stage_dir = self._issue_dir(code, issue_date) / stage
            if not stage_dir.is_dir():
                return []
            cached = sorted(int(p.stem) for p in stage_dir.glob("*.ri"))
            self._versions[key] = cached
        return list(cached)

    def write_snapshot(self, snap: StageSnapshot) -> None:
        stage_dir = self._issue_dir(snap.report_code, snap.issue_date) / snap.stage
        stage_dir.mkdir(parents=True, exist_ok=True)
        # scan before writing so a cold cache picks up pre-existing files
        known = set(self.versions(snap.report_code, snap.issue_date, snap.stage))
        _write_atomic(stage_dir / f"{snap.version}.ri", format_snapshot(snap))
        known.add(snap.version)
        key = (snap.report_code, snap.issue_date.isoformat(), snap.stage)
        self._versions[key] = sorted(known)
        self._latest[key] = snap

    def read_snapshot(self, code: str, issue_date: date, stage: Stage, version: int) -> StageSnapshot:
        path = self._issue_dir(code, issue_date) / stage / f"{version}.ri"
        if not path.exists():
            raise NotFoundError(
                f"no {stage} snapshot v{version} for {code}/{issue_date.isoformat()}"
            )
        return parse_snapshot(path.read_text(encoding="utf-8"))

    def latest_snapshot(self, code: str, issue_date: date, stage: Stage) -> StageSnapshot | None:
        key = (code, issue_date.isoformat(), stage)
        cached = self._latest.get(key)
        if cached is not None:
            return cached
        versions = self.versions(code, issue_date, stage)
        if not versions:
            return None
        snap = self.read_snapshot(code, issue_date, stage, versions[-1])
        self._latest[key] = snap
        return snap

    def issue_dates_with(self, code: str, stage: Stage) -> list[date]:
        issues_dir = self.root / code / "issues"
        if not issues_dir.is_dir():
            return []
        found = []
        for issue_dir in issues_dir.iterdir():
            if (issue_dir / stage).is_dir() and any((issue_dir / stage).glob("*.ri")):
                found.append(date.fromisoformat(issue_dir.name))
        return sorted(found)

    # -- deletion markers

    def mark_deleted(self, code: str, issue_date: date, ts: int) -> None:
        issue_dir = self._issue_dir(code, issue_date)
        issue_dir.mkdir(parents=True, exist_ok=True)
        _write_atomic(issue_dir / "deleted", iso_z(ts) + "\n")

    def is_deleted(self, code: str, issue_date: date) -> bool:
        return (self._issue_dir(code, issue_date) / "deleted").exists()


class Workflow:
    """State machine over a corpus, a snapshot store, and a model source.

    One writer per (report, issue): a concurrent mutation on the same
    issue raises ConflictError instead of blocking.
    """

    def __init__(
        self,
        corpus: Corpus,
        store: ReportStore,
        model_provider: Callable[[str], PresortModel],
        clock: Callable[[], int] = utc_now,
        deliver_hook: Callable[[StageSnapshot], int] | None = None,
        report_code_pattern: str = DEFAULT_REPORT_CODE_PATTERN,
    ):
        self.corpus = corpus
        self.store = store
        self._model_provider = model_provider
        self._clock = clock
        self._deliver_hook = deliver_hook
        self._code_re = re.compile(report_code_pattern)
        self._locks: dict[tuple[str, str], threading.Lock] = {}
        self._locks_guard = threading.Lock()

    # -- reports

    def add_report(self, code: str, subject: str, editor_name: str,
                   editor_token: str | None = None) -> Report:
        if not self._code_re.fullmatch(code):
            raise ValidationError(
                f"report code {code!r} does not match pattern {self._code_re.pattern!r}"
            )
        report = Report(
            code=code,
            subject=subject,
            editor_name=editor_name,
            created_on=date.fromtimestamp(self._clock()),
            editor_token=editor_token,
        )
        self.store.add_report(report)
        return report

    def get_report(self, code: str) -> Report:
        return self.store.get_report(code)

    @contextmanager
    def _issue_guard(self, code: str, issue_date: date) -> Iterator[None]:
        key = (code, issue_date.isoformat())
        with self._locks_guard:
            lock = self._locks.setdefault(key, threading.Lock())
        if not lock.acquire(blocking=False):
            raise ConflictError(
                f"another action on {code}/{issue_date.isoformat()} is in progress"
            )
        try:
            yield
        finally:
            lock.release()

    # -- queries

    def list_pending(self, code: str) -> list[PendingIssue]:
        """Every nep-all issue with no sent snapshot and not deleted,
        newest first, each offering presorted / unsorted / delete."""
        self.store.get_report(code)
        pending = []
        for d in reversed(self.corpus.issue_dates()):
            if self.store.is_deleted(code, d):
                continue
            if self.store.versions(code, d, "sent"):
                continue
            pending.append(PendingIssue(issue_date=d))
        return pending

    def latest_snapshot(self, code: str, issue_date: date, stage: Stage) -> StageSnapshot | None:
        return self.store.latest_snapshot(code, issue_date, stage)

    def issue_status(self, code: str, issue_date: date) -> IssueStatus:
        self.store.get_report(code)
        self.corpus.issue(issue_date)
        state: IssueState
        if self.store.is_deleted(code, issue_date):
            state = "deleted"
        elif self.store.versions(code, issue_date, "sent"):
            state = "sent"
        elif self.store.versions(code, issue_date, "selection"):
            state = "in_ordering"
        elif self.store.versions(code, issue_date, "source"):
            state = "in_selection"
        else:
            state = "pending"
        return IssueStatus(report_code=code, issue_date=issue_date, state=state)

    # -- transitions

    def _check_open_state(self, code: str, issue_date: date) -> None:
        if self.store.is_deleted(code, issue_date):
            raise StateError(f"issue {issue_date.isoformat()} is deleted")
        if self.store.versions(code, issue_date, "sent"):
            raise StateError(f"issue {issue_date.isoformat()} is already sent")

    def open_issue(self, code: str, issue_date: date, mode: Mode) -> StageSnapshot:
        """Persist a source snapshot in the chosen order.  Presorted mode
        ranks with the report's current model (identity when cold);
        re-opening before send appends version n+1."""
        self.store.get_report(code)
        if mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}, got {mode!r}")
        with self._issue_guard(code, issue_date):
            self._check_open_state(code, issue_date)
            issue = self.corpus.issue(issue_date)
            if mode == "presorted":
                model = self._model_provider(code)
                handles = presort(model, issue, self.corpus).ranked_handles
            else:
                handles = tuple(issue.paper_handles)
            snap = StageSnapshot(
                report_code=code,
                issue_date=issue_date,
                stage="source",
                version=self._next_version(code, issue_date, "source"),
                created_at=self._clock(),
                mode=mode,
                paper_handles=handles,
                source_positions={h: i + 1 for i, h in enumerate(handles)},
            )
            self.store.write_snapshot(snap)
            return snap

    def _next_version(self, code: str, issue_date: date, stage: Stage) -> int:
        versions = self.store.versions(code, issue_date, stage)
        return versions[-1] + 1 if versions else 1

    def submit_selection(self, code: str, issue_date: date,
                         selected: Sequence[str]) -> StageSnapshot:
        """Keep the chosen papers in source order.  The selection screen
        has no reordering, so the submitted order is irrelevant."""
        self.store.get_report(code)
        with self._issue_guard(code, issue_date):
            self._check_open_state(code, issue_date)
            source = self.store.latest_snapshot(code, issue_date, "source")
            if source is None:
                raise StateError(
                    f"issue {issue_date.isoformat()} has no source snapshot; open it first"
                )
            chosen = set(selected)
            if not chosen:
                raise EmptySelectionError(
                    "no papers selected; the workflow does not advance "
                    "(delete the issue instead)"
                )
            stray = chosen - set(source.paper_handles)
            if stray:
                raise ValidationError(
                    "selected papers not in the source snapshot: " + ", ".join(sorted(stray))
                )
            handles = tuple(h for h in source.paper_handles if h in chosen)
            snap = StageSnapshot(
                report_code=code,
                issue_date=issue_date,
                stage="selection",
                version=self._next_version(code, issue_date, "selection"),
                created_at=self._clock(),
                mode=source.mode,
                paper_handles=handles,
                source_positions={h: source.source_positions[h] for h in handles},
            )
            self.store.write_snapshot(snap)
            return snap

    def submit_ordering(self, code: str, issue_date: date,
                        ordered: Sequence[str]) -> StageSnapshot:
        """Persist exactly the given order; papers omitted from the latest
        selection count as deleted at this stage."""
        self.store.get_report(code)
        with self._issue_guard(code, issue_date):
            self._check_open_state(code, issue_date)
            selection = self.store.latest_snapshot(code, issue_date, "selection")
            if selection is None:
                raise StateError(
                    f"issue {issue_date.isoformat()} has no selection snapshot yet"
                )
            if not ordered:
                raise EmptySelectionError("ordering must keep at least one paper")
            if len(set(ordered)) != len(ordered):
                raise ValidationError("ordering contains duplicate handles")
            stray = set(ordered) - set(selection.paper_handles)
            if stray:
                raise ValidationError(
                    "ordered papers not in the latest selection: " + ", ".join(sorted(stray))
                )
            snap = StageSnapshot(
                report_code=code,
                issue_date=issue_date,
                stage="ordering",
                version=self._next_version(code, issue_date, "ordering"),
                created_at=self._clock(),
                mode=selection.mode,
                paper_handles=tuple(ordered),
                source_positions={h: selection.source_positions[h] for h in ordered},
            )
            self.store.write_snapshot(snap)
            return snap

    def send_issue(self, code: str, issue_date: date) -> StageSnapshot:
        """Freeze the latest ordering as the sent issue and dispatch it.
        Sending is terminal for the issue."""
        self.store.get_report(code)
        with self._issue_guard(code, issue_date):
            self._check_open_state(code, issue_date)
            ordering = self.store.latest_snapshot(code, issue_date, "ordering")
            if ordering is None:
                raise StateError(
                    f"issue {issue_date.isoformat()} has no ordering snapshot yet"
                )
            selection = self.store.latest_snapshot(code, issue_date, "selection")
            if selection is not None and not set(ordering.paper_handles) <= set(
                selection.paper_handles
            ):
                raise StateError(
                    "latest ordering is stale: it is not a subset of the latest "
                    "selection; submit the ordering again"
                )
            snap = StageSnapshot(
                report_code=code,
                issue_date=issue_date,
                stage="sent",
                version=self._next_version(code, issue_date, "sent"),
                created_at=self._clock(),
                mode=ordering.mode,
                paper_handles=tuple(ordering.paper_handles),
                source_positions=dict(ordering.source_positions),
            )
            self.store.write_snapshot(snap)
            if self._deliver_hook is not None:
                self._deliver_hook(snap)
            return snap

    def delete_issue(self, code: str, issue_date: date) -> None:
        """Remove the issue from the pending list forever; snapshots stay
        for audit.  Deleting twice is a no-op."""
        self.store.get_report(code)
        with self._issue_guard(code, issue_date):
            self.corpus.issue(issue_date)
            if self.store.versions(code, issue_date, "sent"):
                raise StateError(f"issue {issue_date.isoformat()} is already sent")
            self.store.mark_deleted(code, issue_date, self._clock())
