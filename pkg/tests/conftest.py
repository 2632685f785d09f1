from __future__ import annotations

from datetime import date, timedelta

import pytest

from nepkit.config import ServiceConfig
from nepkit.corpus import PaperRecord
from nepkit.engine import Engine

EPOCH = 1_400_000_000  # arbitrary fixed origin for fake clocks


class FakeClock:
    """Deterministic second counter injected in place of time.time."""

    def __init__(self, start: int = EPOCH):
        self.now = start

    def __call__(self) -> int:
        return self.now

    def advance(self, seconds: int) -> None:
        self.now += seconds

    def advance_minutes(self, minutes: float) -> None:
        self.now += int(round(minutes * 60))


class DictCorpus:
    """Handle -> record lookup for presorter unit tests."""

    def __init__(self, papers: dict[str, PaperRecord]):
        self._papers = papers

    def get_paper(self, handle: str) -> PaperRecord:
        from nepkit.errors import MissingPaperError

        if handle not in self._papers:
            raise MissingPaperError(handle)
        return self._papers[handle]


def paper(handle: str, title: str, abstract: str = "", **kw) -> PaperRecord:
    return PaperRecord(handle=handle, title=title, abstract=abstract, **kw)


def batch_text(papers: list[PaperRecord]) -> str:
    from nepkit.corpus import serialize_archive_batch

    return serialize_archive_batch(papers)


@pytest.fixture
def clock() -> FakeClock:
    return FakeClock()


@pytest.fixture
def engine(tmp_path, clock) -> Engine:
    config = ServiceConfig(data_root=tmp_path / "data")
    return Engine(config, clock=clock)


def make_engine(tmp_path, clock, **config_kw) -> Engine:
    config = ServiceConfig(data_root=tmp_path / "data", **config_kw)
    return Engine(config, clock=clock)


def seed_issue(engine: Engine, clock: FakeClock, issue_date: date,
               papers: list[PaperRecord]) -> None:
    """Register papers and compose them into one nep-all issue."""
    engine.corpus.register_papers(papers)
    clock.advance(60)
    engine.compose_nep_all(issue_date)


def dates_from(start: date, count: int, step_days: int = 7) -> list[date]:
    return [start + timedelta(days=i * step_days) for i in range(count)]


def pytest_runtest_logreport(report):
    # One visible pass/fail line per acceptance criterion.
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        outcome = "PASS" if report.passed else "FAIL"
        print(f"\n[acceptance] {name}: {outcome}", flush=True)
