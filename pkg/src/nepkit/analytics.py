"""Editing-behaviour measures computed from the snapshot store.

Implements the measures used to study the editorial process: editing
sessions with 3-minute chunking and a 90-minute validity threshold,
precision at N and its two-level macro average, relative search length
(hin / nep-all length) and its macro average, whole-service statistics,
and Pearson correlations between per-report aggregates.

Conventions that every function here shares:

* only the latest snapshot version of each stage counts;
* deleted and never-sent issues are invisible;
* an issue is "presorted" when its latest source snapshot has
  mode=presorted;
* index positions are 1-based;
* report-level means are unweighted (macro) averages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date
from typing import Protocol, Sequence

from .errors import NotApplicableError, ValidationError
from .workflow import StageSnapshot

DEFAULT_DURATION_THRESHOLD = 90.0
DEFAULT_CHUNK_MINUTES = 3.0
DEFAULT_MIN_PRESORTED = 50


class StoreView(Protocol):
    """Read-only view of the engine state that analytics consumes."""

    def report_codes(self) -> list[str]: ...

    def sent_issue_dates(self, code: str) -> list[date]: ...

    def latest_snapshot(self, code: str, issue_date: date, stage: str) -> StageSnapshot | None: ...

    def subscriber_count(self, code: str) -> int: ...

    def nepall_dates(self) -> list[date]: ...

    def nepall_length(self, issue_date: date) -> int: ...


# -- result types


@dataclass(frozen=True)
class EditingSession:
    report_code: str
    issue_date: date
    duration_minutes: float
    valid: bool


@dataclass(frozen=True)
class DurationHistogram:
    chunk_minutes: float
    bins: dict[int, int]
    total: int


@dataclass(frozen=True)
class PrecisionAtN:
    n: int
    relevant_count: int

    @property
    def value(self) -> float:
        return self.relevant_count / self.n


@dataclass(frozen=True)
class AveragePrecisionResult:
    n: int
    per_report: dict[str, float]
    overall: float | None
    valid_report_count: int


@dataclass(frozen=True)
class RslValue:
    report_code: str
    issue_date: date
    hin: int
    nep_all_length: int

    @property
    def value(self) -> float:
        return self.hin / self.nep_all_length


@dataclass(frozen=True)
class RslSummary:
    per_report: dict[str, float]
    overall: float | None
    min_presorted_issues: int


@dataclass(frozen=True)
class ReportStatistics:
    report_count: int
    subscription_total: int
    avg_subscriptions: float | None
    avg_nep_all_size: float | None
    avg_issue_size: float | None
    presorted_fraction: float | None


@dataclass(frozen=True)
class CorrelationResult:
    label: str
    coefficient: float
    sample_size: int


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


# -- editing sessions


def editing_duration(
    source: StageSnapshot,
    sent: StageSnapshot,
    threshold_minutes: float = DEFAULT_DURATION_THRESHOLD,
) -> EditingSession:
    """Duration from the latest source to the latest sent snapshot.
    Sessions at or above the threshold count as interrupted (invalid)."""
    seconds = sent.created_at - source.created_at
    if seconds < 0:
        raise ValidationError("sent snapshot predates the source snapshot")
    duration = seconds / 60.0
    return EditingSession(
        report_code=source.report_code,
        issue_date=source.issue_date,
        duration_minutes=duration,
        valid=duration < threshold_minutes,
    )


def session_for_issue(
    store: StoreView,
    code: str,
    issue_date: date,
    threshold_minutes: float = DEFAULT_DURATION_THRESHOLD,
) -> EditingSession | None:
    source = store.latest_snapshot(code, issue_date, "source")
    sent = store.latest_snapshot(code, issue_date, "sent")
    if source is None or sent is None:
        return None
    return editing_duration(source, sent, threshold_minutes)


def collect_sessions(
    store: StoreView, threshold_minutes: float = DEFAULT_DURATION_THRESHOLD
) -> list[EditingSession]:
    sessions = []
    for code in store.report_codes():
        for d in store.sent_issue_dates(code):
            session = session_for_issue(store, code, d, threshold_minutes)
            if session is not None:
                sessions.append(session)
    return sessions


def duration_histogram(
    sessions: Sequence[EditingSession], chunk_minutes: float = DEFAULT_CHUNK_MINUTES
) -> DurationHistogram:
    """Place each duration in bin floor(duration / chunk); bin i covers
    the half-open interval [i*chunk, (i+1)*chunk)."""
    if chunk_minutes <= 0:
        raise ValidationError("chunk_minutes must be positive")
    bins: dict[int, int] = {}
    for session in sessions:
        index = int(session.duration_minutes // chunk_minutes)
        bins[index] = bins.get(index, 0) + 1
    return DurationHistogram(chunk_minutes=chunk_minutes, bins=bins, total=len(sessions))


def valid_fraction(
    sessions: Sequence[EditingSession],
    threshold_minutes: float = DEFAULT_DURATION_THRESHOLD,
) -> float:
    if not sessions:
        raise ValidationError("valid_fraction needs at least one session")
    below = sum(1 for s in sessions if s.duration_minutes < threshold_minutes)
    return below / len(sessions)


# -- precision at N


def p_at_n(source: StageSnapshot, sent: StageSnapshot, n: int) -> PrecisionAtN | None:
    """Precision at N against the presorted source order.

    A sent paper is relevant when its source position is <= N.  Issues
    with fewer than N papers are excluded (returns None).  Raises
    NotApplicableError for unsorted sources, which is a different signal
    than exclusion.
    """
    if n <= 0:
        raise ValidationError("n must be a positive integer")
    if source.mode != "presorted":
        raise NotApplicableError("precision at N is defined on presorted issues only")
    if len(sent.paper_handles) < n:
        return None
    relevant = sum(1 for h in sent.paper_handles if sent.source_positions[h] <= n)
    return PrecisionAtN(n=n, relevant_count=relevant)


def _presorted_sent_pairs(
    store: StoreView, code: str
) -> list[tuple[date, StageSnapshot, StageSnapshot]]:
    pairs = []
    for d in store.sent_issue_dates(code):
        source = store.latest_snapshot(code, d, "source")
        sent = store.latest_snapshot(code, d, "sent")
        if source is None or sent is None or source.mode != "presorted":
            continue
        pairs.append((d, source, sent))
    return pairs


def ap_at_n(
    store: StoreView,
    n: int,
    min_presorted_issues: int = DEFAULT_MIN_PRESORTED,
) -> AveragePrecisionResult:
    """Two-level macro average of P@N: per-issue values are averaged per
    report, then across the qualifying reports.  Only reports with at
    least ``min_presorted_issues`` presorted sent issues qualify; a
    qualifying report whose every issue is excluded at this N drops out.
    """
    per_report: dict[str, float] = {}
    for code in store.report_codes():
        pairs = _presorted_sent_pairs(store, code)
        if len(pairs) < min_presorted_issues:
            continue
        values = []
        for _, source, sent in pairs:
            result = p_at_n(source, sent, n)
            if result is not None:
                values.append(result.value)
        if values:
            per_report[code] = _mean(values)
    overall = _mean(list(per_report.values())) if per_report else None
    return AveragePrecisionResult(
        n=n,
        per_report=per_report,
        overall=overall,
        valid_report_count=len(per_report),
    )


# -- relative search length


def rsl(source: StageSnapshot, sent: StageSnapshot) -> RslValue:
    """hin / nep-all length, where hin is the highest source position
    among the sent papers: how deep the editor provably inspected."""
    if source.mode != "presorted":
        raise NotApplicableError("relative search length is defined on presorted issues only")
    if not sent.paper_handles:
        raise ValidationError("sent snapshot is empty")
    hin = max(sent.source_positions[h] for h in sent.paper_handles)
    return RslValue(
        report_code=sent.report_code,
        issue_date=sent.issue_date,
        hin=hin,
        nep_all_length=len(source.paper_handles),
    )


def avg_rsl(
    store: StoreView, min_presorted_issues: int = DEFAULT_MIN_PRESORTED
) -> RslSummary:
    """Per-report mean RSL over presorted sent issues, then the macro mean
    across qualifying reports (same >= min filter as ap_at_n)."""
    per_report: dict[str, float] = {}
    for code in store.report_codes():
        pairs = _presorted_sent_pairs(store, code)
        if len(pairs) < min_presorted_issues:
            continue
        values = [rsl(source, sent).value for _, source, sent in pairs]
        if values:
            per_report[code] = _mean(values)
    overall = _mean(list(per_report.values())) if per_report else None
    return RslSummary(
        per_report=per_report,
        overall=overall,
        min_presorted_issues=min_presorted_issues,
    )


# -- correlations and service statistics


def pearson(xs: Sequence[float], ys: Sequence[float], label: str = "") -> CorrelationResult:
    """Sample Pearson correlation coefficient."""
    if len(xs) != len(ys):
        raise ValidationError("series lengths differ")
    if len(xs) < 2:
        raise ValidationError("need at least two points")
    n = len(xs)
    mean_x = math.fsum(xs) / n
    mean_y = math.fsum(ys) / n
    dx = [x - mean_x for x in xs]
    dy = [y - mean_y for y in ys]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0.0 or syy == 0.0:
        raise ValidationError("constant series has no defined correlation")
    sxy = math.fsum(a * b for a, b in zip(dx, dy))
    return CorrelationResult(label=label, coefficient=sxy / math.sqrt(sxx * syy), sample_size=n)


def report_statistics(store: StoreView) -> ReportStatistics:
    """Whole-service statistics: report and subscription counts, mean
    nep-all size, mean sent-issue size, and the presorted fraction."""
    codes = store.report_codes()
    report_count = len(codes)
    subscription_total = sum(store.subscriber_count(code) for code in codes)
    nepall_sizes = [store.nepall_length(d) for d in store.nepall_dates()]
    sent_sizes: list[int] = []
    presorted = 0
    for code in codes:
        for d in store.sent_issue_dates(code):
            sent = store.latest_snapshot(code, d, "sent")
            source = store.latest_snapshot(code, d, "source")
            if sent is None or source is None:
                continue
            sent_sizes.append(len(sent.paper_handles))
            if source.mode == "presorted":
                presorted += 1
    return ReportStatistics(
        report_count=report_count,
        subscription_total=subscription_total,
        avg_subscriptions=subscription_total / report_count if report_count else None,
        avg_nep_all_size=_mean(nepall_sizes) if nepall_sizes else None,
        avg_issue_size=_mean(sent_sizes) if sent_sizes else None,
        presorted_fraction=presorted / len(sent_sizes) if sent_sizes else None,
    )


CORRELATION_LABELS = (
    "subscribers_vs_editing_time",
    "subscribers_vs_issue_size",
    "rsl_vs_issue_size",
)


def feature_correlations(
    store: StoreView, duration_threshold: float = DEFAULT_DURATION_THRESHOLD
) -> list[CorrelationResult]:
    """The three report-success correlations over per-report aggregates,
    restricted to issues whose editing session is valid."""
    subs: list[float] = []
    mean_times: list[float] = []
    mean_sizes: list[float] = []
    rsl_pairs: list[tuple[float, float]] = []  # (mean rsl, mean size)
    for code in store.report_codes():
        times: list[float] = []
        sizes: list[float] = []
        rsls: list[float] = []
        for d in store.sent_issue_dates(code):
            source = store.latest_snapshot(code, d, "source")
            sent = store.latest_snapshot(code, d, "sent")
            if source is None or sent is None:
                continue
            session = editing_duration(source, sent, duration_threshold)
            if not session.valid:
                continue
            times.append(session.duration_minutes)
            sizes.append(len(sent.paper_handles))
            if source.mode == "presorted":
                rsls.append(rsl(source, sent).value)
        if not times:
            continue
        subs.append(float(store.subscriber_count(code)))
        mean_times.append(_mean(times))
        mean_sizes.append(_mean(sizes))
        if rsls:
            rsl_pairs.append((_mean(rsls), _mean(sizes)))
    if len(subs) < 2:
        raise ValidationError("feature correlations need at least two qualifying reports")
    results = [
        pearson(subs, mean_times, label=CORRELATION_LABELS[0]),
        pearson(subs, mean_sizes, label=CORRELATION_LABELS[1]),
        pearson(
            [p[0] for p in rsl_pairs],
            [p[1] for p in rsl_pairs],
            label=CORRELATION_LABELS[2],
        ),
    ]
    return results


# -- tabular summaries (CLI / dashboard plumbing)


@dataclass(frozen=True)
class PnRow:
    report_code: str
    issues_evaluated: int
    value: float | None


@dataclass(frozen=True)
class PnSummary:
    n: int
    rows: list[PnRow]
    total_issues: int
    overall: float | None  # pooled mean over every evaluated issue


def pn_summary(store: StoreView, n: int) -> PnSummary:
    """Per-report P@N table without the qualifying-report filter; the
    TOTAL line pools every evaluated issue (micro average)."""
    rows = []
    pooled: list[float] = []
    for code in store.report_codes():
        pairs = _presorted_sent_pairs(store, code)
        if not pairs:
            continue
        values = []
        for _, source, sent in pairs:
            result = p_at_n(source, sent, n)
            if result is not None:
                values.append(result.value)
        rows.append(
            PnRow(
                report_code=code,
                issues_evaluated=len(values),
                value=_mean(values) if values else None,
            )
        )
        pooled.extend(values)
    return PnSummary(
        n=n,
        rows=rows,
        total_issues=len(pooled),
        overall=_mean(pooled) if pooled else None,
    )


@dataclass(frozen=True)
class DurationRow:
    report_code: str
    sessions: int
    valid_sessions: int
    valid_fraction: float
    mean_valid_minutes: float | None


@dataclass(frozen=True)
class DurationsSummary:
    threshold_minutes: float
    chunk_minutes: float
    rows: list[DurationRow]
    total: DurationRow | None
    histogram: DurationHistogram


def _duration_row(code: str, sessions: Sequence[EditingSession]) -> DurationRow:
    valid = [s for s in sessions if s.valid]
    return DurationRow(
        report_code=code,
        sessions=len(sessions),
        valid_sessions=len(valid),
        valid_fraction=len(valid) / len(sessions),
        mean_valid_minutes=_mean([s.duration_minutes for s in valid]) if valid else None,
    )


def durations_summary(
    store: StoreView,
    threshold_minutes: float = DEFAULT_DURATION_THRESHOLD,
    chunk_minutes: float = DEFAULT_CHUNK_MINUTES,
) -> DurationsSummary:
    """Per-report session counts and means, a pooled TOTAL row, and the
    pooled duration histogram over all sessions."""
    all_sessions: list[EditingSession] = []
    rows = []
    for code in store.report_codes():
        sessions = [
            s
            for d in store.sent_issue_dates(code)
            if (s := session_for_issue(store, code, d, threshold_minutes)) is not None
        ]
        if sessions:
            rows.append(_duration_row(code, sessions))
            all_sessions.extend(sessions)
    return DurationsSummary(
        threshold_minutes=threshold_minutes,
        chunk_minutes=chunk_minutes,
        rows=rows,
        total=_duration_row("TOTAL", all_sessions) if all_sessions else None,
        histogram=duration_histogram(all_sessions, chunk_minutes),
    )
