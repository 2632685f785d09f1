from __future__ import annotations

import math
import random
from datetime import date

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nepkit.corpus import NepAllIssue
from nepkit.errors import ConsistencyError, MissingPaperError, NotTrainedError, ParseError
from nepkit.presorter import (
    cold_start_model,
    format_model,
    parse_model,
    presort,
    score,
    tokenize,
    train,
)

from conftest import DictCorpus, paper


def issue_of(handles: list[str], day: int = 1) -> NepAllIssue:
    return NepAllIssue(
        issue_date=date(2014, 1, day), paper_handles=tuple(handles), composed_at=0
    )


@pytest.fixture
def tiny_corpus() -> DictCorpus:
    return DictCorpus(
        {
            "A": paper("A", "tax policy"),
            "B": paper("B", "soccer clubs"),
        }
    )


class TestTokenize:
    def test_lowercase_and_split_on_non_alphanumeric(self):
        assert tokenize("Tax-Policy, 2nd edition!") == ["tax", "policy", "2nd", "edition"]

    def test_short_tokens_dropped(self):
        assert tokenize("a an ab x 12 1") == ["an", "ab", "12"]

    def test_underscore_is_a_separator(self):
        assert tokenize("tax_policy") == ["tax", "policy"]

    def test_empty(self):
        assert tokenize("") == []


class TestTrain:
    def test_empty_history_is_cold_start(self, tiny_corpus):
        model = train("nep-tax", [], tiny_corpus)
        assert model.trained_issue_count == 0
        assert model.is_cold_start
        assert model.vocabulary == {}

    def test_hand_counted_vocabulary(self, tiny_corpus):
        model = train("nep-tax", [(issue_of(["A", "B"]), {"A"})], tiny_corpus)
        assert model.vocabulary == {
            "tax": (1, 0),
            "policy": (1, 0),
            "soccer": (0, 1),
            "clubs": (0, 1),
        }
        assert model.trained_issue_count == 1
        # one included paper, one excluded paper
        assert model.prior_log_odds == pytest.approx(math.log((1 + 1) / (1 + 1)), abs=1e-15)

    def test_occurrences_counted_with_multiplicity(self):
        corpus = DictCorpus({"A": paper("A", "tax tax", abstract="tax break")})
        model = train("nep-tax", [(issue_of(["A"]), {"A"})], corpus)
        assert model.vocabulary["tax"] == (3, 0)
        assert model.vocabulary["break"] == (1, 0)

    def test_sent_handle_missing_from_issue(self, tiny_corpus):
        with pytest.raises(ConsistencyError, match="stray"):
            train("nep-tax", [(issue_of(["A"]), {"A", "stray"})], tiny_corpus)


class TestScore:
    def test_derived_value(self, tiny_corpus):
        model = train("nep-tax", [(issue_of(["A", "B"]), {"A"})], tiny_corpus)
        got = score(model, paper("X", "tax reform"))
        # independent arithmetic over the hand-counted vocabulary
        expected = model.prior_log_odds + math.log((1 + 1) / (0 + 1)) + math.log((0 + 1) / (0 + 1))
        assert got == pytest.approx(expected, abs=1e-15)

    def test_unknown_tokens_give_prior_exactly(self, tiny_corpus):
        model = train("nep-tax", [(issue_of(["A", "B"]), {"A"})], tiny_corpus)
        assert score(model, paper("X", "zz yy")) == model.prior_log_odds

    def test_deterministic(self, tiny_corpus):
        model = train("nep-tax", [(issue_of(["A", "B"]), {"A"})], tiny_corpus)
        target = paper("X", "tax policy soccer")
        assert score(model, target) == score(model, target)

    def test_cold_start_refuses(self):
        with pytest.raises(NotTrainedError):
            score(cold_start_model("nep-tax"), paper("X", "anything"))


class TestPresort:
    def test_cold_start_identity(self, tiny_corpus):
        order = presort(cold_start_model("nep-tax"), issue_of(["B", "A"]), tiny_corpus)
        assert order.ranked_handles == ("B", "A")
        assert order.scores == (0.0, 0.0)
        assert order.trained_issue_count == 0

    def test_keyword_papers_rank_first(self):
        corpus = DictCorpus(
            {
                "t1": paper("t1", "tax policy news"),
                "t2": paper("t2", "more tax changes"),
                "s1": paper("s1", "soccer results"),
                "s2": paper("s2", "soccer stadium economics"),
            }
        )
        history = [(issue_of(["t1", "s1", "t2", "s2"]), {"t1", "t2"})]
        model = train("nep-tax", history, corpus)
        order = presort(model, issue_of(["s1", "t1", "s2", "t2"], day=2), corpus)
        assert set(order.ranked_handles[:2]) == {"t1", "t2"}
        assert set(order.ranked_handles[2:]) == {"s1", "s2"}
        assert list(order.scores) == sorted(order.scores, reverse=True)

    def test_ties_keep_nepall_order(self):
        corpus = DictCorpus({h: paper(h, "identical words") for h in "abcd"})
        model = train("nep-tax", [(issue_of(["a", "b"]), {"a"})], corpus)
        order = presort(model, issue_of(["d", "c", "b", "a"], day=2), corpus)
        assert order.ranked_handles == ("d", "c", "b", "a")

    def test_missing_handle(self, tiny_corpus):
        model = train("nep-tax", [(issue_of(["A", "B"]), {"A"})], tiny_corpus)
        with pytest.raises(MissingPaperError):
            presort(model, issue_of(["A", "ghost"]), tiny_corpus)


_word = st.sampled_from(
    "tax soccer trade growth inflation stadium audit panel labor credit".split()
)
_text = st.lists(_word, min_size=1, max_size=6).map(" ".join)


@given(
    texts=st.lists(_text, min_size=1, max_size=12),
    sent_seed=st.integers(0, 2**31),
)
@settings(max_examples=60)
def test_presort_is_a_permutation(texts, sent_seed):
    handles = [f"h{i}" for i in range(len(texts))]
    corpus = DictCorpus({h: paper(h, t) for h, t in zip(handles, texts)})
    rng = random.Random(sent_seed)
    sent = {h for h in handles if rng.random() < 0.5} or {handles[0]}
    model = train("nep-tax", [(issue_of(handles), sent)], corpus)
    shuffled = handles[:]
    rng.shuffle(shuffled)
    order = presort(model, issue_of(shuffled, day=2), corpus)
    assert sorted(order.ranked_handles) == sorted(handles)
    assert list(order.scores) == sorted(order.scores, reverse=True)


def _keyword_world(n_issues: int, keyword: str = "macroprudential"):
    """Issues whose editor always selects exactly the keyword papers.

    35 papers per issue; paper i is a keyword paper iff i % 5 == 0, and its
    four filler words cycle through a 7-word pool.  Since 5 and 7 are
    coprime, every filler lands in keyword and non-keyword papers in the
    exact same 1:4 ratio, so the keyword is the only separating signal.
    """
    fillers = [f"w{i}" for i in range(7)]
    papers = {}
    pairs = []
    serial = 0
    for day in range(n_issues):
        handles = []
        sent = set()
        for i in range(35):
            handle = f"p{serial}"
            serial += 1
            is_keyword = i % 5 == 0
            title = (keyword + " " if is_keyword else "") + " ".join(
                fillers[(i + j) % 7] for j in (1, 2)
            )
            abstract = " ".join(fillers[(i + j) % 7] for j in (3, 4))
            papers[handle] = paper(handle, title, abstract=abstract)
            handles.append(handle)
            if is_keyword:
                sent.add(handle)
        pairs.append((issue_of(handles, day=day % 28 + 1), sent))
    return DictCorpus(papers), pairs


@pytest.mark.parametrize("k", [5, 8])
def test_monotone_retraining_separates_keyword_papers(k):
    corpus, pairs = _keyword_world(k + 3)
    model = train("nep-kwd", pairs[:k], corpus)
    for issue, sent in pairs[k:]:
        order = presort(model, issue, corpus)
        ranks = {h: i for i, h in enumerate(order.ranked_handles)}
        worst_keyword = max(ranks[h] for h in sent)
        best_other = min(ranks[h] for h in issue.paper_handles if h not in sent)
        assert worst_keyword < best_other


class TestModelSerialization:
    def test_round_trip(self, tiny_corpus):
        model = train("nep-tax", [(issue_of(["A", "B"]), {"A"})], tiny_corpus)
        text = format_model(model)
        assert parse_model(text) == model

    def test_header_and_sorted_tokens(self, tiny_corpus):
        model = train("nep-tax", [(issue_of(["A", "B"]), {"A"})], tiny_corpus)
        lines = format_model(model).split("\n")
        assert lines[0] == "nepkit-model 1"
        assert lines[1] == "Report: nep-tax"
        assert lines[2] == "Trained-Issues: 1"
        assert lines[3].startswith("Prior: ")
        assert lines[4] == ""
        tokens = [l.split(" ")[0] for l in lines[5:] if l]
        assert tokens == sorted(tokens)
        assert "tax 1 0" in lines

    def test_rejects_alien_text(self):
        with pytest.raises(ParseError):
            parse_model("just some text\n")
        with pytest.raises(ParseError):
            parse_model("nepkit-model 99\nReport: x\n")

    def test_round_trip_preserves_presort_order(self):
        corpus, pairs = _keyword_world(6)
        model = train("nep-kwd", pairs[:5], corpus)
        reloaded = parse_model(format_model(model))
        issue, _ = pairs[5]
        first = presort(model, issue, corpus)
        second = presort(reloaded, issue, corpus)
        assert first.ranked_handles == second.ranked_handles


class TestPriorFormatting:
    def test_tiny_prior_stays_positional_decimal(self):
        from nepkit.presorter import PresortModel, format_model, parse_model

        model = PresortModel("nep-tax", {"tax": (1, 0)}, 3, 1.25e-07)
        text = format_model(model)
        prior_line = next(l for l in text.split("\n") if l.startswith("Prior: "))
        assert "e" not in prior_line and "E" not in prior_line
        assert parse_model(text).prior_log_odds == pytest.approx(1.25e-07, rel=1e-11)

    def test_cold_start_presort_still_checks_handles(self, tiny_corpus):
        with pytest.raises(MissingPaperError):
            presort(cold_start_model("nep-tax"), issue_of(["A", "ghost"]), tiny_corpus)
