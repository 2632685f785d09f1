"""Pydantic request/response models for the HTTP API."""

from __future__ import annotations

from datetime import date
from typing import Literal

from pydantic import BaseModel, Field


class ErrorBody(BaseModel):
    error: str
    message: str


class HealthOut(BaseModel):
    status: str
    version: str


class ReportIn(BaseModel):
    code: str
    subject: str
    editor_name: str
    editor_token: str | None = None


class ReportOut(BaseModel):
    code: str
    subject: str
    editor_name: str
    created_on: date
    subscriber_count: int


class PendingIssueOut(BaseModel):
    issue_date: date
    actions: list[str]


class IssueStatusOut(BaseModel):
    report_code: str
    issue_date: date
    state: str


class OpenIn(BaseModel):
    mode: Literal["presorted", "unsorted"]


class HandlesIn(BaseModel):
    handles: list[str]


class PaperOut(BaseModel):
    source_position: int
    handle: str
    title: str
    authors: list[str]
    abstract: str
    fulltext_url: str | None


class SnapshotOut(BaseModel):
    report_code: str
    issue_date: date
    stage: str
    version: int
    created_at: str
    mode: str
    papers: list[PaperOut]


class SendOut(BaseModel):
    snapshot: SnapshotOut
    delivered: int


class IngestIn(BaseModel):
    text: str


class IngestOut(BaseModel):
    registered: int


class ComposeIn(BaseModel):
    as_of: date = Field(alias="date")
    include_undated: bool = False
    cutoff: date | None = None

    model_config = {"populate_by_name": True}


class IssueOut(BaseModel):
    issue_date: date
    length: int
    composed_at: str


class TrainOut(BaseModel):
    report_code: str
    trained_issue_count: int
    vocabulary_size: int


class SubscribeIn(BaseModel):
    address: str


class SubscriptionsOut(BaseModel):
    report_code: str
    subscriber_count: int
    addresses: list[str]


class StatsOut(BaseModel):
    report_count: int
    subscription_total: int
    avg_subscriptions: float | None
    avg_nep_all_size: float | None
    avg_issue_size: float | None
    presorted_fraction: float | None


class PnRowOut(BaseModel):
    report_code: str
    issues_evaluated: int
    value: float | None


class PnOut(BaseModel):
    n: int
    rows: list[PnRowOut]
    total_issues: int
    overall: float | None


class ApOut(BaseModel):
    n: int
    min_presorted_issues: int
    per_report: dict[str, float]
    overall: float | None
    valid_report_count: int


class RslOut(BaseModel):
    min_presorted_issues: int
    per_report: dict[str, float]
    overall: float | None


class HistogramOut(BaseModel):
    chunk_minutes: float
    bins: dict[int, int]
    total: int


class DurationRowOut(BaseModel):
    report_code: str
    sessions: int
    valid_sessions: int
    valid_fraction: float
    mean_valid_minutes: float | None


class DurationsOut(BaseModel):
    threshold_minutes: float
    chunk_minutes: float
    rows: list[DurationRowOut]
    total: DurationRowOut | None
    histogram: HistogramOut


class CorrelationOut(BaseModel):
    label: str
    coefficient: float
    sample_size: int
