from __future__ import annotations

import math
import random
from datetime import date, timedelta

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nepkit import analytics
from nepkit.analytics import (
    EditingSession,
    ap_at_n,
    avg_rsl,
    collect_sessions,
    duration_histogram,
    editing_duration,
    feature_correlations,
    p_at_n,
    pearson,
    pn_summary,
    report_statistics,
    rsl,
    session_for_issue,
    valid_fraction,
)
from nepkit.errors import NotApplicableError, ValidationError
from nepkit.workflow import StageSnapshot

D = date(2014, 11, 3)


def snapshot(code, d, stage, handles, positions, mode="presorted",
             created_at=0, version=1) -> StageSnapshot:
    return StageSnapshot(
        report_code=code,
        issue_date=d,
        stage=stage,
        version=version,
        created_at=created_at,
        mode=mode,
        paper_handles=tuple(handles),
        source_positions=dict(positions),
    )


def make_pair(code, d, nep_len, selected_positions, mode="presorted",
              source_at=0, sent_at=0):
    """Source snapshot of nep_len papers plus a sent snapshot holding the
    papers at the given 1-based source positions."""
    source_handles = [f"{code}:{d.isoformat()}:p{i}" for i in range(1, nep_len + 1)]
    source = snapshot(
        code,
        d,
        "source",
        source_handles,
        {h: i + 1 for i, h in enumerate(source_handles)},
        mode=mode,
        created_at=source_at,
    )
    sent_handles = [source_handles[p - 1] for p in selected_positions]
    sent = snapshot(
        code,
        d,
        "sent",
        sent_handles,
        {h: source.source_positions[h] for h in sent_handles},
        mode=mode,
        created_at=sent_at,
    )
    return source, sent


class FakeStore:
    """In-memory StoreView for metric unit tests."""

    def __init__(self):
        self._issues: dict[str, dict[date, dict[str, StageSnapshot]]] = {}
        self._subs: dict[str, int] = {}
        self._nepall: dict[date, int] = {}

    def add_issue(self, source: StageSnapshot, sent: StageSnapshot | None) -> None:
        per_report = self._issues.setdefault(source.report_code, {})
        stages = {"source": source}
        if sent is not None:
            stages["sent"] = sent
        per_report[source.issue_date] = stages
        self._nepall.setdefault(source.issue_date, len(source.paper_handles))

    def set_subscribers(self, code: str, count: int) -> None:
        self._subs[code] = count

    # StoreView

    def report_codes(self):
        return sorted(self._issues)

    def sent_issue_dates(self, code):
        return sorted(d for d, stages in self._issues.get(code, {}).items() if "sent" in stages)

    def latest_snapshot(self, code, issue_date, stage):
        return self._issues.get(code, {}).get(issue_date, {}).get(stage)

    def subscriber_count(self, code):
        return self._subs.get(code, 0)

    def nepall_dates(self):
        return sorted(self._nepall)

    def nepall_length(self, issue_date):
        return self._nepall[issue_date]


class TestEditingDuration:
    def test_fourteen_and_a_half_minutes_is_valid(self):
        source, sent = make_pair("nep-mac", D, 10, [1], source_at=36000, sent_at=36870)
        session = editing_duration(source, sent)
        assert session.duration_minutes == pytest.approx(14.5)
        assert session.valid

    def test_two_hours_is_interrupted(self):
        source, sent = make_pair("nep-mac", D, 10, [1], source_at=0, sent_at=7200)
        session = editing_duration(source, sent)
        assert session.duration_minutes == 120.0
        assert not session.valid

    def test_exactly_ninety_minutes_is_invalid(self):
        source, sent = make_pair("nep-mac", D, 10, [1], source_at=0, sent_at=5400)
        assert not editing_duration(source, sent).valid

    def test_never_sent_issue_has_no_session(self):
        store = FakeStore()
        source, _ = make_pair("nep-mac", D, 10, [1])
        store.add_issue(source, None)
        assert session_for_issue(store, "nep-mac", D) is None
        assert collect_sessions(store) == []


def sessions_of(durations: list[float]) -> list[EditingSession]:
    return [
        EditingSession("nep-mac", D, duration_minutes=v, valid=v < 90.0)
        for v in durations
    ]


class TestDurationHistogram:
    def test_worked_bins(self):
        hist = duration_histogram(sessions_of([1, 4, 89, 95]))
        assert hist.bins == {0: 1, 1: 1, 29: 1, 31: 1}
        assert hist.total == 4

    def test_boundary_goes_to_upper_bin(self):
        hist = duration_histogram(sessions_of([3.0]))
        assert hist.bins == {1: 1}

    def test_empty(self):
        hist = duration_histogram([])
        assert hist.bins == {} and hist.total == 0

    def test_bad_chunk(self):
        with pytest.raises(ValidationError):
            duration_histogram([], chunk_minutes=0)

    @given(st.lists(st.floats(min_value=0, max_value=5000), max_size=60))
    @settings(max_examples=60)
    def test_conservation(self, durations):
        hist = duration_histogram(sessions_of(durations))
        assert sum(hist.bins.values()) == hist.total == len(durations)


class TestValidFraction:
    def test_worked_value(self):
        assert valid_fraction(sessions_of([1, 4, 89, 95])) == 0.75

    def test_all_below(self):
        assert valid_fraction(sessions_of([1, 2, 3])) == 1.0

    def test_empty_is_an_error(self):
        with pytest.raises(ValidationError):
            valid_fraction([])


class TestPAtN:
    def test_paper_worked_example(self):
        # editor picks documents at source positions 4, 1, 7, 3, 9
        source, sent = make_pair("nep-mac", D, 20, [4, 1, 7, 3, 9])
        result = p_at_n(source, sent, 5)
        assert result is not None
        assert result.relevant_count == 3
        assert result.value == pytest.approx(3 / 5)

    def test_small_issue_excluded(self):
        source, sent = make_pair("nep-mac", D, 20, [1, 2, 3])
        assert p_at_n(source, sent, 5) is None

    def test_perfect_prefix(self):
        source, sent = make_pair("nep-mac", D, 20, [1, 2, 3, 4, 5])
        result = p_at_n(source, sent, 5)
        assert result is not None and result.value == 1.0

    def test_unsorted_is_not_applicable(self):
        source, sent = make_pair("nep-mac", D, 20, [1, 2, 3, 4, 5], mode="unsorted")
        with pytest.raises(NotApplicableError):
            p_at_n(source, sent, 5)

    def test_bad_n(self):
        source, sent = make_pair("nep-mac", D, 20, [1, 2, 3, 4, 5])
        with pytest.raises(ValidationError):
            p_at_n(source, sent, 0)

    @given(
        nep_len=st.integers(5, 40),
        seed=st.integers(0, 2**31),
        n=st.sampled_from([5, 10]),
    )
    @settings(max_examples=80)
    def test_two_relevance_readings_coincide(self, nep_len, seed, n):
        # |{sent with position <= n}| == |top-n presorted prefix ∩ sent|
        rng = random.Random(seed)
        k = rng.randrange(1, nep_len + 1)
        positions = rng.sample(range(1, nep_len + 1), k)
        source, sent = make_pair("nep-mac", D, nep_len, positions)
        result = p_at_n(source, sent, n)
        if result is None:
            assert len(positions) < n
            return
        prefix = set(source.paper_handles[:n])
        assert result.relevant_count == len(prefix & set(sent.paper_handles))


class TestApAtN:
    def test_two_level_mean(self):
        store = FakeStore()
        # report A: P@5 values 0.6 and 1.0; report B: 0.4
        store.add_issue(*make_pair("nep-aaa", D, 20, [1, 2, 3, 6, 7]))
        store.add_issue(*make_pair("nep-aaa", D + timedelta(days=7), 20, [1, 2, 3, 4, 5]))
        store.add_issue(*make_pair("nep-bbb", D, 20, [1, 2, 6, 7, 8]))
        result = ap_at_n(store, 5, min_presorted_issues=1)
        assert result.per_report == {
            "nep-aaa": pytest.approx(0.8),
            "nep-bbb": pytest.approx(0.4),
        }
        assert result.overall == pytest.approx(0.6)
        assert result.valid_report_count == 2

    def test_single_report(self):
        store = FakeStore()
        store.add_issue(*make_pair("nep-aaa", D, 20, [1, 2, 3, 4, 6]))
        store.add_issue(*make_pair("nep-aaa", D + timedelta(days=7), 20, [1, 2, 3, 4, 6]))
        result = ap_at_n(store, 5, min_presorted_issues=2)
        assert result.overall == pytest.approx(0.8)

    def test_empty_q(self):
        store = FakeStore()
        store.add_issue(*make_pair("nep-aaa", D, 20, [1, 2, 3, 4, 5]))
        result = ap_at_n(store, 5, min_presorted_issues=50)
        assert result.valid_report_count == 0
        assert result.overall is None
        assert result.per_report == {}

    def test_unsorted_issues_do_not_count(self):
        store = FakeStore()
        store.add_issue(*make_pair("nep-aaa", D, 20, [1, 2, 3, 4, 5], mode="unsorted"))
        result = ap_at_n(store, 5, min_presorted_issues=1)
        assert result.valid_report_count == 0

    def test_duplication_invariance(self):
        def build(dup: int) -> FakeStore:
            store = FakeStore()
            sets = [[1, 2, 3, 6, 7], [1, 2, 3, 4, 5], [2, 4, 6, 8, 10]]
            day = D
            for _ in range(dup):
                for positions in sets:
                    store.add_issue(*make_pair("nep-aaa", day, 20, positions))
                    day += timedelta(days=1)
            store.add_issue(*make_pair("nep-bbb", D, 20, [1, 2, 6, 7, 8]))
            return store

        once = ap_at_n(build(1), 5, min_presorted_issues=1)
        twice = ap_at_n(build(2), 5, min_presorted_issues=1)
        assert once.per_report["nep-aaa"] == pytest.approx(twice.per_report["nep-aaa"])
        assert once.overall == pytest.approx(twice.overall)


class TestRsl:
    def test_paper_worked_example(self):
        source, sent = make_pair("nep-mac", D, 300, [4, 10, 7])
        value = rsl(source, sent)
        assert value.hin == 10
        assert value.nep_all_length == 300
        assert value.value == pytest.approx(10 / 300, abs=1e-12)

    def test_single_top_paper(self):
        source, sent = make_pair("nep-mac", D, 40, [1])
        assert rsl(source, sent).value == pytest.approx(1 / 40)

    def test_whole_issue_selected(self):
        source, sent = make_pair("nep-mac", D, 12, list(range(1, 13)))
        assert rsl(source, sent).value == 1.0

    def test_unsorted_not_applicable(self):
        source, sent = make_pair("nep-mac", D, 12, [1], mode="unsorted")
        with pytest.raises(NotApplicableError):
            rsl(source, sent)

    @given(
        nep_len=st.integers(2, 60),
        seed=st.integers(0, 2**31),
    )
    @settings(max_examples=80)
    def test_monotone_in_selection_and_bounded(self, nep_len, seed):
        rng = random.Random(seed)
        k = rng.randrange(1, nep_len)
        positions = rng.sample(range(1, nep_len + 1), k)
        remaining = sorted(set(range(1, nep_len + 1)) - set(positions))
        extra = rng.choice(remaining)
        source, sent = make_pair("nep-mac", D, nep_len, positions)
        source2, sent2 = make_pair("nep-mac", D, nep_len, positions + [extra])
        base, grown = rsl(source, sent), rsl(source2, sent2)
        assert grown.hin >= base.hin
        assert 0 < base.value <= 1
        assert (base.value == 1.0) == (base.hin == nep_len)


class TestAvgRsl:
    def test_per_report_mean(self):
        store = FakeStore()
        store.add_issue(*make_pair("nep-aaa", D, 100, [2]))  # rsl 0.02
        store.add_issue(*make_pair("nep-aaa", D + timedelta(days=7), 100, [4]))  # 0.04
        result = avg_rsl(store, min_presorted_issues=1)
        assert result.per_report["nep-aaa"] == pytest.approx(0.03)

    def test_single_issue_report(self):
        store = FakeStore()
        store.add_issue(*make_pair("nep-aaa", D, 50, [5]))
        result = avg_rsl(store, min_presorted_issues=1)
        assert result.per_report["nep-aaa"] == pytest.approx(0.1)

    def test_overall_is_macro_mean(self):
        store = FakeStore()
        store.add_issue(*make_pair("nep-aaa", D, 100, [10]))  # 0.1
        store.add_issue(*make_pair("nep-bbb", D, 100, [30]))  # 0.3
        result = avg_rsl(store, min_presorted_issues=1)
        assert result.overall == pytest.approx(0.2)

    def test_min_filter(self):
        store = FakeStore()
        store.add_issue(*make_pair("nep-aaa", D, 100, [10]))
        result = avg_rsl(store, min_presorted_issues=2)
        assert result.per_report == {} and result.overall is None


class TestPearson:
    def test_perfect_positive(self):
        assert pearson([1, 2, 3], [2, 4, 6]).coefficient == pytest.approx(1.0)

    def test_perfect_negative(self):
        assert pearson([1, 2, 3], [6, 4, 2]).coefficient == pytest.approx(-1.0)

    def test_derived_point_eight(self):
        # hand value from the covariance/sigma definition: cov 4, sd 5 each
        assert pearson([1, 2, 3, 4], [1, 3, 2, 4]).coefficient == pytest.approx(0.8)

    def test_errors(self):
        with pytest.raises(ValidationError):
            pearson([1, 2], [1, 2, 3])
        with pytest.raises(ValidationError):
            pearson([1], [1])
        with pytest.raises(ValidationError):
            pearson([1, 1, 1], [1, 2, 3])

    @given(
        data=st.lists(
            st.tuples(
                st.floats(-100, 100),
                st.floats(-100, 100),
            ),
            min_size=3,
            max_size=30,
        ),
        a=st.floats(0.1, 50),
        b=st.floats(-100, 100),
        negate=st.booleans(),
    )
    @settings(max_examples=80)
    def test_affine_invariance(self, data, a, b, negate):
        xs = [p[0] for p in data]
        ys = [p[1] for p in data]
        # enough spread that the affine map cannot collapse xs in floats
        if max(xs) - min(xs) < 1e-3 or max(ys) - min(ys) < 1e-3:
            return
        scale = -a if negate else a
        base = pearson(xs, ys).coefficient
        moved = pearson([scale * x + b for x in xs], ys).coefficient
        assert moved == pytest.approx(base if scale > 0 else -base, abs=1e-9)
        assert abs(moved) <= 1 + 1e-12


class TestReportStatistics:
    def test_oracle_recount(self):
        store = FakeStore()
        store.add_issue(*make_pair("nep-aaa", D, 30, list(range(1, 11))))  # size 10
        store.add_issue(
            *make_pair("nep-aaa", D + timedelta(days=7), 40, list(range(1, 15)))
        )  # 14
        store.add_issue(*make_pair("nep-bbb", D, 30, [1, 2, 3], mode="unsorted"))  # 3
        store.set_subscribers("nep-aaa", 4)
        store.set_subscribers("nep-bbb", 2)
        stats = report_statistics(store)
        assert stats.report_count == 2
        assert stats.subscription_total == 6
        assert stats.avg_subscriptions == pytest.approx(3.0)
        assert stats.avg_issue_size == pytest.approx((10 + 14 + 3) / 3)  # 9.0
        assert stats.avg_issue_size == pytest.approx(9.0)
        assert stats.avg_nep_all_size == pytest.approx((30 + 40) / 2)
        assert stats.presorted_fraction == pytest.approx(2 / 3)

    def test_all_presorted(self):
        store = FakeStore()
        store.add_issue(*make_pair("nep-aaa", D, 10, [1]))
        assert report_statistics(store).presorted_fraction == 1.0

    def test_empty_store(self):
        stats = report_statistics(FakeStore())
        assert stats.report_count == 0
        assert stats.avg_issue_size is None
        assert stats.avg_nep_all_size is None
        assert stats.presorted_fraction is None


class TestFeatureCorrelations:
    def test_proportional_rsl_and_size(self):
        store = FakeStore()
        for i in range(1, 6):
            size = 2 * i
            source, sent = make_pair(
                f"nep-a{chr(ord('a') + i)}{chr(ord('a') + i)}",
                D,
                100,
                list(range(1, size + 1)),
                source_at=0,
                sent_at=60 * i,  # varied valid durations
            )
            store.add_issue(source, sent)
            store.set_subscribers(source.report_code, 10 * i + (i % 2))
        results = feature_correlations(store)
        by_label = {r.label: r for r in results}
        assert by_label["rsl_vs_issue_size"].coefficient == pytest.approx(1.0)
        assert by_label["rsl_vs_issue_size"].sample_size == 5

    def test_independent_series_near_zero(self):
        rng = random.Random(2024)
        store = FakeStore()
        subs = []
        durations = []
        for i in range(50):
            code = f"nep-{chr(ord('a') + i // 26)}{chr(ord('a') + i % 26)}x"
            minutes = rng.randrange(2, 80)
            source, sent = make_pair(
                code, D, 50, sorted(rng.sample(range(1, 51), rng.randrange(3, 12))),
                source_at=0, sent_at=minutes * 60,
            )
            store.add_issue(source, sent)
            n_subs = rng.randrange(1, 1000)
            store.set_subscribers(code, n_subs)
            subs.append(float(n_subs))
            durations.append(float(minutes))
        results = feature_correlations(store)
        got = {r.label: r.coefficient for r in results}
        # oracle: definitional formula over the same aggregates
        n = len(subs)
        mx, my = sum(subs) / n, sum(durations) / n
        cov = sum((x - mx) * (y - my) for x, y in zip(subs, durations))
        sx = math.sqrt(sum((x - mx) ** 2 for x in subs))
        sy = math.sqrt(sum((y - my) ** 2 for y in durations))
        assert got["subscribers_vs_editing_time"] == pytest.approx(cov / (sx * sy), abs=1e-12)
        assert abs(got["subscribers_vs_editing_time"]) < 0.2

    def test_invalid_sessions_are_ignored(self):
        store = FakeStore()
        for i, minutes in enumerate([10, 20]):
            code = f"nep-aa{chr(ord('a') + i)}"
            source, sent = make_pair(code, D, 50, list(range(1, 4 + i)),
                                     source_at=0, sent_at=minutes * 60)
            store.add_issue(source, sent)
            # an interrupted session that must not contribute
            source2, sent2 = make_pair(code, D + timedelta(days=7), 50, list(range(1, 31)),
                                       source_at=0, sent_at=200 * 60)
            store.add_issue(source2, sent2)
            store.set_subscribers(code, 5 * (i + 1))
        results = feature_correlations(store)
        by_label = {r.label: r for r in results}
        assert by_label["subscribers_vs_editing_time"].sample_size == 2
        # means reflect only the valid sessions: sizes 3 and 4, not 30
        assert by_label["subscribers_vs_issue_size"].coefficient == pytest.approx(1.0)

    def test_single_report_is_an_error(self):
        store = FakeStore()
        store.add_issue(*make_pair("nep-aaa", D, 10, [1], sent_at=60))
        with pytest.raises(ValidationError):
            feature_correlations(store)


class TestSummaries:
    def test_pn_summary_pools_issues(self):
        store = FakeStore()
        store.add_issue(*make_pair("nep-aaa", D, 20, [1, 2, 3, 6, 7]))  # 0.6
        store.add_issue(*make_pair("nep-bbb", D, 20, [1, 2, 3, 4, 5]))  # 1.0
        store.add_issue(*make_pair("nep-bbb", D + timedelta(days=7), 20, [1, 2]))  # excluded
        summary = pn_summary(store, 5)
        rows = {r.report_code: r for r in summary.rows}
        assert rows["nep-aaa"].value == pytest.approx(0.6)
        assert rows["nep-bbb"].issues_evaluated == 1
        assert summary.total_issues == 2
        assert summary.overall == pytest.approx(0.8)

    def test_durations_summary(self):
        store = FakeStore()
        store.add_issue(*make_pair("nep-aaa", D, 10, [1], source_at=0, sent_at=60))
        store.add_issue(
            *make_pair("nep-aaa", D + timedelta(days=7), 10, [1], source_at=0, sent_at=6000)
        )
        summary = analytics.durations_summary(store)
        assert summary.total is not None
        assert summary.total.sessions == 2
        assert summary.total.valid_sessions == 1
        assert summary.total.valid_fraction == 0.5
        assert summary.histogram.total == 2
        assert sum(summary.histogram.bins.values()) == 2
