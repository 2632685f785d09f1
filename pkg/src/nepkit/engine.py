"""The engine facade: one object wiring corpus, presorter, workflow,
dispatch and analytics over a single data directory.

Directory layout under ``data_root``::

    corpus/papers.jsonl                         ingested records
    nepall/<date>.issue                         composed nep-all issues
    reports/<code>/report.json                  report registry
    reports/<code>/issues/<date>/<stage>/<v>.ri stage snapshots
    reports/<code>/issues/<date>/deleted        deletion marker
    models/<code>.model                         trained presort models
    subscriptions/<code>.json                   subscriber lists
    outbox/<code>/<date>/<address>.txt          delivered issues
"""

from __future__ import annotations

from datetime import date
from pathlib import Path
from typing import Callable

from . import analytics, dispatch, presorter
from .config import ServiceConfig
from .corpus import CompositionPolicy, Corpus, NepAllIssue, PaperRecord, parse_archive_batch
from .corpus import _write_atomic
from .dispatch import RenderedIssue, Subscription, SubscriptionBook
from .errors import NotFoundError
from .presorter import PresortModel
from .timeutil import utc_now
from .workflow import (
    IssueStatus,
    Mode,
    PendingIssue,
    Report,
    ReportStore,
    Stage,
    StageSnapshot,
    Workflow,
)


class Engine:
    """Everything the service and the CLI need, behind one object.

    Also satisfies :class:`analytics.StoreView`, so the metric functions
    read the same committed snapshots the editors write.
    """

    def __init__(self, config: ServiceConfig, clock: Callable[[], int] = utc_now):
        self.config = config
        self.root = Path(config.data_root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._clock = clock
        self.corpus = Corpus(self.root, clock)
        self.reports = ReportStore(self.root)
        self.subscriptions = SubscriptionBook(self.root, clock)
        self._models_dir = self.root / "models"
        self._models_dir.mkdir(parents=True, exist_ok=True)
        self.workflow = Workflow(
            corpus=self.corpus,
            store=self.reports,
            model_provider=self.current_model,
            clock=clock,
            deliver_hook=self._deliver_sent,
            report_code_pattern=config.report_code_pattern,
        )

    # -- corpus

    def ingest_batch(self, text: str) -> int:
        return self.corpus.register_papers(parse_archive_batch(text))

    def compose_nep_all(
        self, as_of: date, policy: CompositionPolicy | None = None
    ) -> NepAllIssue:
        return self.corpus.compose_nep_all(as_of, policy)

    def get_paper(self, handle: str) -> PaperRecord:
        return self.corpus.get_paper(handle)

    def nepall_issue(self, issue_date: date) -> NepAllIssue:
        return self.corpus.issue(issue_date)

    def nepall_dates(self) -> list[date]:
        return self.corpus.issue_dates()

    def nepall_length(self, issue_date: date) -> int:
        return self.corpus.issue(issue_date).length

    # -- reports and workflow

    def add_report(self, code: str, subject: str, editor_name: str,
                   editor_token: str | None = None) -> Report:
        return self.workflow.add_report(code, subject, editor_name, editor_token)

    def get_report(self, code: str) -> Report:
        return self.reports.get_report(code)

    def report_codes(self) -> list[str]:
        return self.reports.report_codes()

    def list_pending(self, code: str) -> list[PendingIssue]:
        return self.workflow.list_pending(code)

    def open_issue(self, code: str, issue_date: date, mode: Mode) -> StageSnapshot:
        return self.workflow.open_issue(code, issue_date, mode)

    def submit_selection(self, code: str, issue_date: date, handles: list[str]) -> StageSnapshot:
        return self.workflow.submit_selection(code, issue_date, handles)

    def submit_ordering(self, code: str, issue_date: date, handles: list[str]) -> StageSnapshot:
        return self.workflow.submit_ordering(code, issue_date, handles)

    def send_issue(self, code: str, issue_date: date) -> StageSnapshot:
        return self.workflow.send_issue(code, issue_date)

    def delete_issue(self, code: str, issue_date: date) -> None:
        self.workflow.delete_issue(code, issue_date)

    def latest_snapshot(self, code: str, issue_date: date, stage: Stage) -> StageSnapshot | None:
        return self.reports.latest_snapshot(code, issue_date, stage)

    def issue_status(self, code: str, issue_date: date) -> IssueStatus:
        return self.workflow.issue_status(code, issue_date)

    def sent_issue_dates(self, code: str) -> list[date]:
        return self.reports.issue_dates_with(code, "sent")

    # -- presorter

    def _model_path(self, code: str) -> Path:
        return self._models_dir / f"{code}.model"

    def current_model(self, code: str) -> PresortModel:
        """The report's trained model, or the cold-start model when it has
        never been trained."""
        path = self._model_path(code)
        if not path.exists():
            return presorter.cold_start_model(code)
        return presorter.parse_model(path.read_text(encoding="utf-8"))

    def train_report(self, code: str) -> PresortModel:
        """Train from all of the report's sent issues (latest sent version
        per issue) and persist the model."""
        self.reports.get_report(code)
        history = []
        for d in self.sent_issue_dates(code):
            sent = self.reports.latest_snapshot(code, d, "sent")
            assert sent is not None
            history.append((self.corpus.issue(d), set(sent.paper_handles)))
        model = presorter.train(code, history, self.corpus)
        _write_atomic(self._model_path(code), presorter.format_model(model))
        return model

    # -- dispatch

    def subscribe(self, code: str, address: str) -> None:
        self.reports.get_report(code)
        self.subscriptions.subscribe(code, address)

    def unsubscribe(self, code: str, address: str) -> None:
        self.reports.get_report(code)
        self.subscriptions.unsubscribe(code, address)

    def subscriber_count(self, code: str) -> int:
        return self.subscriptions.subscriber_count(code)

    def report_subscriptions(self, code: str) -> list[Subscription]:
        self.reports.get_report(code)
        return self.subscriptions.subscriptions(code)

    def render_sent_issue(self, code: str, issue_date: date) -> RenderedIssue:
        sent = self.reports.latest_snapshot(code, issue_date, "sent")
        if sent is None:
            raise NotFoundError(f"issue {issue_date.isoformat()} of {code} was never sent")
        return dispatch.render_issue(self.get_report(code), sent, self.corpus)

    def _deliver_sent(self, sent: StageSnapshot) -> int:
        rendered = dispatch.render_issue(self.get_report(sent.report_code), sent, self.corpus)
        addresses = [s.address for s in self.subscriptions.subscriptions(sent.report_code)]
        return dispatch.deliver(rendered, addresses, self.root)

    # -- analytics

    def editing_session(
        self, code: str, issue_date: date, threshold_minutes: float | None = None
    ) -> analytics.EditingSession | None:
        return analytics.session_for_issue(
            self, code, issue_date, self._threshold(threshold_minutes)
        )

    def sessions(self, threshold_minutes: float | None = None) -> list[analytics.EditingSession]:
        return analytics.collect_sessions(self, self._threshold(threshold_minutes))

    def _threshold(self, value: float | None) -> float:
        return self.config.duration_threshold_minutes if value is None else value

    def _min_presorted(self, value: int | None) -> int:
        return self.config.min_presorted_issues if value is None else value

    def metric_pn(self, n: int) -> analytics.PnSummary:
        return analytics.pn_summary(self, n)

    def metric_ap(self, n: int, min_presorted: int | None = None) -> analytics.AveragePrecisionResult:
        return analytics.ap_at_n(self, n, self._min_presorted(min_presorted))

    def metric_rsl(self, min_presorted: int | None = None) -> analytics.RslSummary:
        return analytics.avg_rsl(self, self._min_presorted(min_presorted))

    def metric_durations(
        self,
        threshold_minutes: float | None = None,
        chunk_minutes: float | None = None,
    ) -> analytics.DurationsSummary:
        chunk = self.config.histogram_chunk_minutes if chunk_minutes is None else chunk_minutes
        return analytics.durations_summary(self, self._threshold(threshold_minutes), chunk)

    def metric_correlations(
        self, threshold_minutes: float | None = None
    ) -> list[analytics.CorrelationResult]:
        return analytics.feature_correlations(self, self._threshold(threshold_minutes))

    def statistics(self) -> analytics.ReportStatistics:
        return analytics.report_statistics(self)
