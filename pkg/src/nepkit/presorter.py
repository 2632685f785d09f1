"""Learned presorting of nep-all issues.

A per-report model ranks the papers of a fresh nep-all issue by how likely
the report's editor is to include them, learned from that report's past
sent issues.  The learner is an add-one-smoothed multinomial log-odds
("naive-Bayes-style") score over title+abstract tokens: cheap, fully
deterministic, and easy to verify by hand-counting a small fixture.

Tokenization rule: lowercase, split on any non-alphanumeric character,
drop tokens shorter than 2 characters.  No stemming, no stop list.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from datetime import date
from decimal import Decimal
from typing import AbstractSet, Protocol, Sequence

from .corpus import NepAllIssue, PaperRecord
from .errors import ConsistencyError, NotTrainedError, ParseError

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

MODEL_FORMAT = "nepkit-model"
MODEL_VERSION = 1


class PaperLookup(Protocol):
    def get_paper(self, handle: str) -> PaperRecord: ...


def tokenize(text: str) -> list[str]:
    return [t for t in _TOKEN_RE.findall(text.lower()) if len(t) >= 2]


def _paper_tokens(paper: PaperRecord) -> list[str]:
    return tokenize(paper.title + " " + paper.abstract)


@dataclass(frozen=True)
class PresortModel:
    """Per-report term weights. ``vocabulary`` maps a token to its
    occurrence counts in (included, excluded) papers; a model with
    ``trained_issue_count == 0`` is the cold-start model."""

    report_code: str
    vocabulary: dict[str, tuple[int, int]]
    trained_issue_count: int
    prior_log_odds: float

    @property
    def is_cold_start(self) -> bool:
        return self.trained_issue_count == 0


@dataclass(frozen=True)
class PresortedOrder:
    """Ranking of one nep-all issue, most likely inclusion first.
    ``trained_issue_count`` records the provenance of the model used."""

    issue_date: date
    ranked_handles: tuple[str, ...]
    scores: tuple[float, ...]
    trained_issue_count: int


def cold_start_model(report_code: str) -> PresortModel:
    return PresortModel(report_code, {}, 0, 0.0)


def train(
    report_code: str,
    history: Sequence[tuple[NepAllIssue, AbstractSet[str]]],
    corpus: PaperLookup,
) -> PresortModel:
    """Count title+abstract token occurrences separately for included and
    excluded papers across all (nep-all, sent) pairs."""
    included: dict[str, int] = {}
    excluded: dict[str, int] = {}
    n_included = 0
    n_excluded = 0
    for issue, sent in history:
        stray = set(sent) - set(issue.paper_handles)
        if stray:
            raise ConsistencyError(
                f"sent papers not in nep-all {issue.issue_date.isoformat()}: "
                + ", ".join(sorted(stray))
            )
        for handle in issue.paper_handles:
            bucket = included if handle in sent else excluded
            if handle in sent:
                n_included += 1
            else:
                n_excluded += 1
            for token in _paper_tokens(corpus.get_paper(handle)):
                bucket[token] = bucket.get(token, 0) + 1
    vocabulary = {
        token: (included.get(token, 0), excluded.get(token, 0))
        for token in set(included) | set(excluded)
    }
    return PresortModel(
        report_code=report_code,
        vocabulary=vocabulary,
        trained_issue_count=len(history),
        prior_log_odds=math.log((n_included + 1) / (n_excluded + 1)),
    )


def score(model: PresortModel, paper: PaperRecord) -> float:
    """Smoothed log-odds of inclusion; unknown tokens contribute zero."""
    if model.is_cold_start:
        raise NotTrainedError(f"model for {model.report_code!r} has no training data")
    total = model.prior_log_odds
    for token in _paper_tokens(paper):
        inc, exc = model.vocabulary.get(token, (0, 0))
        total += math.log((inc + 1) / (exc + 1))
    return total


def presort(model: PresortModel, issue: NepAllIssue, corpus: PaperLookup) -> PresortedOrder:
    """Rank the issue by descending score; ties keep nep-all order.
    A cold-start model returns the identity permutation with zero scores."""
    if model.is_cold_start:
        for handle in issue.paper_handles:  # still insist on a resolvable issue
            corpus.get_paper(handle)
        return PresortedOrder(
            issue_date=issue.issue_date,
            ranked_handles=tuple(issue.paper_handles),
            scores=(0.0,) * issue.length,
            trained_issue_count=0,
        )
    scored = [
        (score(model, corpus.get_paper(handle)), position, handle)
        for position, handle in enumerate(issue.paper_handles)
    ]
    scored.sort(key=lambda t: (-t[0], t[1]))
    return PresortedOrder(
        issue_date=issue.issue_date,
        ranked_handles=tuple(h for _, _, h in scored),
        scores=tuple(s for s, _, _ in scored),
        trained_issue_count=model.trained_issue_count,
    )


def _decimal_12g(value: float) -> str:
    """12 significant digits, always positional decimal (no exponent)."""
    text = format(value, ".12g")
    if "e" in text or "E" in text:
        text = format(Decimal(text), "f")
    return text


def format_model(model: PresortModel) -> str:
    """Versioned text form: header plus one ``token inc exc`` line per
    vocabulary entry, tokens sorted. Prior carries 12 significant digits;
    shifting every score by the same rounded prior cannot reorder papers."""
    lines = [
        f"{MODEL_FORMAT} {MODEL_VERSION}",
        f"Report: {model.report_code}",
        f"Trained-Issues: {model.trained_issue_count}",
        f"Prior: {_decimal_12g(model.prior_log_odds)}",
        "",
    ]
    for token in sorted(model.vocabulary):
        inc, exc = model.vocabulary[token]
        lines.append(f"{token} {inc} {exc}")
    return "\n".join(lines) + "\n"


def parse_model(text: str) -> PresortModel:
    lines = text.split("\n")
    if not lines or not lines[0].startswith(f"{MODEL_FORMAT} "):
        raise ParseError("not a nepkit model file")
    if lines[0] != f"{MODEL_FORMAT} {MODEL_VERSION}":
        raise ParseError(f"unsupported model version: {lines[0]!r}")
    header: dict[str, str] = {}
    body_at = len(lines)
    for i, line in enumerate(lines[1:], start=1):
        if not line.strip():
            body_at = i + 1
            break
        key, _, value = line.partition(":")
        header[key.strip()] = value.strip()
    vocabulary: dict[str, tuple[int, int]] = {}
    for line in lines[body_at:]:
        if not line.strip():
            continue
        try:
            token, inc, exc = line.split(" ")
            vocabulary[token] = (int(inc), int(exc))
        except ValueError:
            raise ParseError(f"bad vocabulary line {line!r}") from None
    try:
        return PresortModel(
            report_code=header["Report"],
            vocabulary=vocabulary,
            trained_issue_count=int(header["Trained-Issues"]),
            prior_log_odds=float(header["Prior"]),
        )
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad model header: {exc}") from None
