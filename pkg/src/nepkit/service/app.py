"""HTTP JSON API over the engine.

Error responses carry ``{"error": <code>, "message": <text>}``; the HTTP
status mirrors the error class (404 not-found, 409 state/conflict,
401 bad editor token, 422 validation).  Reports may set a shared editor
token at creation; issue endpoints then require it in the
``X-Editor-Token`` header.
"""

from __future__ import annotations

import os
import socket
from datetime import date
from pathlib import Path

from fastapi import Depends, FastAPI, Header, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .. import __version__, analytics
from ..config import ServiceConfig
from ..corpus import CompositionPolicy
from ..engine import Engine
from ..errors import (
    ConflictError,
    NepkitError,
    NotFoundError,
    StateError,
    ValidationError,
)
from ..timeutil import iso_z
from ..workflow import StageSnapshot
from . import schemas

_STATUS_BY_ERROR = [
    (NotFoundError, 404),
    (ConflictError, 409),
    (StateError, 409),
    (ValidationError, 422),
]


def _status_for(exc: NepkitError) -> int:
    for klass, status in _STATUS_BY_ERROR:
        if isinstance(exc, klass):
            return status
    return 422


class AuthError(NepkitError):
    code = "unauthorized"


def _snapshot_out(engine: Engine, snap: StageSnapshot) -> schemas.SnapshotOut:
    papers = []
    for handle in snap.paper_handles:
        paper = engine.get_paper(handle)
        papers.append(
            schemas.PaperOut(
                source_position=snap.source_positions[handle],
                handle=handle,
                title=paper.title,
                authors=list(paper.authors),
                abstract=paper.abstract,
                fulltext_url=paper.fulltext_url,
            )
        )
    return schemas.SnapshotOut(
        report_code=snap.report_code,
        issue_date=snap.issue_date,
        stage=snap.stage,
        version=snap.version,
        created_at=iso_z(snap.created_at),
        mode=snap.mode,
        papers=papers,
    )


def _report_out(engine: Engine, code: str) -> schemas.ReportOut:
    report = engine.get_report(code)
    return schemas.ReportOut(
        code=report.code,
        subject=report.subject,
        editor_name=report.editor_name,
        created_on=report.created_on,
        subscriber_count=engine.subscriber_count(code),
    )


def create_app(engine: Engine, ui_dir: Path | str | None = None) -> FastAPI:
    app = FastAPI(title="nepkit", version=__version__)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(NepkitError)
    async def nepkit_error(_request: Request, exc: NepkitError) -> JSONResponse:
        status = 401 if isinstance(exc, AuthError) else _status_for(exc)
        return JSONResponse(
            status_code=status,
            content=schemas.ErrorBody(error=exc.code, message=str(exc)).model_dump(),
        )

    @app.exception_handler(RequestValidationError)
    async def request_validation_error(
        _request: Request, exc: RequestValidationError
    ) -> JSONResponse:
        return JSONResponse(
            status_code=422,
            content=schemas.ErrorBody(error="validation_error", message=str(exc)).model_dump(),
        )

    def editor_guard(code: str, x_editor_token: str | None = Header(default=None)) -> None:
        report = engine.get_report(code)
        if report.editor_token is not None and x_editor_token != report.editor_token:
            raise AuthError(f"missing or wrong editor token for report {code!r}")

    # -- health and reports

    @app.get("/health", response_model=schemas.HealthOut)
    def health():
        return schemas.HealthOut(status="ok", version=__version__)

    @app.get("/reports", response_model=list[schemas.ReportOut])
    def list_reports():
        return [_report_out(engine, code) for code in engine.report_codes()]

    @app.post("/reports", response_model=schemas.ReportOut, status_code=201)
    def add_report(body: schemas.ReportIn):
        engine.add_report(body.code, body.subject, body.editor_name, body.editor_token)
        return _report_out(engine, body.code)

    @app.get("/reports/{code}", response_model=schemas.ReportOut)
    def get_report(code: str):
        return _report_out(engine, code)

    # -- editorial workflow

    @app.get(
        "/reports/{code}/issues",
        response_model=list[schemas.PendingIssueOut],
        dependencies=[Depends(editor_guard)],
    )
    def pending_issues(code: str):
        return [
            schemas.PendingIssueOut(issue_date=p.issue_date, actions=list(p.actions))
            for p in engine.list_pending(code)
        ]

    @app.get(
        "/reports/{code}/issues/{issue_date}/status",
        response_model=schemas.IssueStatusOut,
        dependencies=[Depends(editor_guard)],
    )
    def issue_status(code: str, issue_date: date):
        status = engine.issue_status(code, issue_date)
        return schemas.IssueStatusOut(
            report_code=status.report_code,
            issue_date=status.issue_date,
            state=status.state,
        )

    @app.post(
        "/reports/{code}/issues/{issue_date}/open",
        response_model=schemas.SnapshotOut,
        dependencies=[Depends(editor_guard)],
    )
    def open_issue(code: str, issue_date: date, body: schemas.OpenIn):
        return _snapshot_out(engine, engine.open_issue(code, issue_date, body.mode))

    @app.post(
        "/reports/{code}/issues/{issue_date}/selection",
        response_model=schemas.SnapshotOut,
        dependencies=[Depends(editor_guard)],
    )
    def submit_selection(code: str, issue_date: date, body: schemas.HandlesIn):
        return _snapshot_out(engine, engine.submit_selection(code, issue_date, body.handles))

    @app.post(
        "/reports/{code}/issues/{issue_date}/ordering",
        response_model=schemas.SnapshotOut,
        dependencies=[Depends(editor_guard)],
    )
    def submit_ordering(code: str, issue_date: date, body: schemas.HandlesIn):
        return _snapshot_out(engine, engine.submit_ordering(code, issue_date, body.handles))

    @app.post(
        "/reports/{code}/issues/{issue_date}/send",
        response_model=schemas.SendOut,
        dependencies=[Depends(editor_guard)],
    )
    def send_issue(code: str, issue_date: date):
        snap = engine.send_issue(code, issue_date)
        return schemas.SendOut(
            snapshot=_snapshot_out(engine, snap),
            delivered=engine.subscriber_count(code),
        )

    @app.delete(
        "/reports/{code}/issues/{issue_date}",
        dependencies=[Depends(editor_guard)],
    )
    def delete_issue(code: str, issue_date: date):
        engine.delete_issue(code, issue_date)
        return {"status": "deleted"}

    @app.get(
        "/reports/{code}/issues/{issue_date}/snapshot",
        response_model=schemas.SnapshotOut,
        dependencies=[Depends(editor_guard)],
    )
    def get_snapshot(code: str, issue_date: date, stage: str = Query(...)):
        if stage not in ("source", "selection", "ordering", "sent"):
            raise ValidationError(f"unknown stage {stage!r}")
        snap = engine.latest_snapshot(code, issue_date, stage)  # type: ignore[arg-type]
        if snap is None:
            raise NotFoundError(
                f"no {stage} snapshot for {code}/{issue_date.isoformat()}"
            )
        return _snapshot_out(engine, snap)

    # -- corpus administration

    @app.post("/ingest", response_model=schemas.IngestOut)
    def ingest(body: schemas.IngestIn):
        return schemas.IngestOut(registered=engine.ingest_batch(body.text))

    @app.post("/compose", response_model=schemas.IssueOut)
    def compose(body: schemas.ComposeIn):
        issue = engine.compose_nep_all(
            body.as_of,
            CompositionPolicy(exclude_undated=not body.include_undated, cutoff=body.cutoff),
        )
        return schemas.IssueOut(
            issue_date=issue.issue_date,
            length=issue.length,
            composed_at=iso_z(issue.composed_at),
        )

    @app.post("/reports/{code}/train", response_model=schemas.TrainOut)
    def train(code: str):
        model = engine.train_report(code)
        return schemas.TrainOut(
            report_code=model.report_code,
            trained_issue_count=model.trained_issue_count,
            vocabulary_size=len(model.vocabulary),
        )

    # -- subscriptions

    @app.get("/reports/{code}/subscriptions", response_model=schemas.SubscriptionsOut)
    def subscriptions(code: str):
        subs = engine.report_subscriptions(code)
        return schemas.SubscriptionsOut(
            report_code=code,
            subscriber_count=len(subs),
            addresses=[s.address for s in subs],
        )

    @app.post("/reports/{code}/subscriptions", response_model=schemas.SubscriptionsOut)
    def subscribe(code: str, body: schemas.SubscribeIn):
        engine.subscribe(code, body.address)
        return subscriptions(code)

    @app.delete("/reports/{code}/subscriptions/{address}", response_model=schemas.SubscriptionsOut)
    def unsubscribe(code: str, address: str):
        engine.unsubscribe(code, address)
        return subscriptions(code)

    # -- analytics

    @app.get("/stats", response_model=schemas.StatsOut)
    def stats():
        s = engine.statistics()
        return schemas.StatsOut(
            report_count=s.report_count,
            subscription_total=s.subscription_total,
            avg_subscriptions=s.avg_subscriptions,
            avg_nep_all_size=s.avg_nep_all_size,
            avg_issue_size=s.avg_issue_size,
            presorted_fraction=s.presorted_fraction,
        )

    @app.get("/metrics/pn", response_model=schemas.PnOut)
    def metric_pn(n: int = Query(..., gt=0)):
        summary = engine.metric_pn(n)
        return schemas.PnOut(
            n=summary.n,
            rows=[
                schemas.PnRowOut(
                    report_code=r.report_code,
                    issues_evaluated=r.issues_evaluated,
                    value=r.value,
                )
                for r in summary.rows
            ],
            total_issues=summary.total_issues,
            overall=summary.overall,
        )

    @app.get("/metrics/ap", response_model=schemas.ApOut)
    def metric_ap(n: int = Query(..., gt=0), min_presorted: int | None = Query(default=None, ge=0)):
        result = engine.metric_ap(n, min_presorted)
        return schemas.ApOut(
            n=result.n,
            min_presorted_issues=(
                min_presorted if min_presorted is not None else engine.config.min_presorted_issues
            ),
            per_report=result.per_report,
            overall=result.overall,
            valid_report_count=result.valid_report_count,
        )

    @app.get("/metrics/rsl", response_model=schemas.RslOut)
    def metric_rsl(min_presorted: int | None = Query(default=None, ge=0)):
        result = engine.metric_rsl(min_presorted)
        return schemas.RslOut(
            min_presorted_issues=result.min_presorted_issues,
            per_report=result.per_report,
            overall=result.overall,
        )

    @app.get("/metrics/durations", response_model=schemas.DurationsOut)
    def metric_durations(
        threshold: float | None = Query(default=None, gt=0),
        chunk: float | None = Query(default=None, gt=0),
    ):
        summary = engine.metric_durations(threshold, chunk)

        def row_out(row: analytics.DurationRow) -> schemas.DurationRowOut:
            return schemas.DurationRowOut(
                report_code=row.report_code,
                sessions=row.sessions,
                valid_sessions=row.valid_sessions,
                valid_fraction=row.valid_fraction,
                mean_valid_minutes=row.mean_valid_minutes,
            )

        return schemas.DurationsOut(
            threshold_minutes=summary.threshold_minutes,
            chunk_minutes=summary.chunk_minutes,
            rows=[row_out(r) for r in summary.rows],
            total=row_out(summary.total) if summary.total else None,
            histogram=schemas.HistogramOut(
                chunk_minutes=summary.histogram.chunk_minutes,
                bins=summary.histogram.bins,
                total=summary.histogram.total,
            ),
        )

    @app.get("/metrics/correlations", response_model=list[schemas.CorrelationOut])
    def metric_correlations(threshold: float | None = Query(default=None, gt=0)):
        return [
            schemas.CorrelationOut(
                label=c.label, coefficient=c.coefficient, sample_size=c.sample_size
            )
            for c in engine.metric_correlations(threshold)
        ]

    ui_dir = ui_dir or os.environ.get("NEPKIT_UI_DIR")
    if ui_dir and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def check_listen_address(config: ServiceConfig) -> None:
    """Fail fast on a busy port or unusable data_root before uvicorn."""
    if not config.data_root.is_dir():
        raise StateError(f"data_root {config.data_root} does not exist")
    if not os.access(config.data_root, os.W_OK):
        raise StateError(f"data_root {config.data_root} is not writable")
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((config.host, config.port))
    except OSError as exc:
        raise StateError(
            f"cannot listen on {config.listen_address}: {exc.strerror or exc}"
        ) from None
    finally:
        probe.close()


def serve(config: ServiceConfig, ui_dir: Path | str | None = None) -> None:
    """Run the service until interrupted."""
    import uvicorn

    check_listen_address(config)
    engine = Engine(config)
    app = create_app(engine, ui_dir=ui_dir)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
