"""Find company mentions in headlines.

Candidate spans are runs of capitalized or all-caps tokens (a cheap,
deterministic stand-in for a statistical entity recognizer). Each candidate
is embedded as a character-trigram TF-IDF vector over the gazetteer's own
name vocabulary and accepted when its cosine similarity to a company name
or alias reaches the threshold, 0.95 by default.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .features import (
    NAME_TOKENIZER,
    SparseVector,
    Vocabulary,
    cosine,
    fit_tfidf,
    tokenize,
    transform,
)

DEFAULT_THRESHOLD = 0.95

_TOKEN_RE = re.compile(r"[^\W_][\w&.'-]*", re.UNICODE)

# Common sentence-opening words that are capitalized by convention, not
# because they name anything. Only single-token runs at a sentence start
# are filtered; "New" inside "New York Times" survives.
_FUNCTION_WORDS = frozenset(
    """
    a an the this that these those it its he she we they you i my our your
    his her their and or but if as so to of for by with from in on at over
    under after before is are was were be been am do does did not no yes
    what when where who why how which there here
    """.split()
)

_SENTENCE_END = frozenset(".!?:;")


class GazetteerError(ValueError):
    """Raised for malformed or empty gazetteer definitions."""


@dataclass(frozen=True)
class Mention:
    """One detected company reference in a headline."""

    headline_id: str
    start: int
    end: int
    surface: str
    company: str
    similarity: float

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)


class Gazetteer:
    """Companies of interest with their known aliases, ready for matching.

    The name vocabulary is fitted once over canonical names plus aliases,
    so idf weights stay fixed as candidate queries arrive.
    """

    def __init__(self, companies: Sequence[tuple[str, Sequence[str]]]):
        if not companies:
            raise GazetteerError("gazetteer must contain at least one company")
        seen: dict[str, str] = {}
        alias_owner: dict[str, str] = {}
        entries: list[tuple[str, tuple[str, ...]]] = []
        for canonical, aliases in companies:
            canonical = canonical.strip()
            if not canonical:
                raise GazetteerError("company name must be non-empty")
            key = canonical.lower()
            if key in seen:
                raise GazetteerError(f"duplicate company name: {canonical!r}")
            seen[key] = canonical
            cleaned = tuple(a.strip() for a in aliases if a.strip())
            for alias in cleaned:
                owner = alias_owner.get(alias.lower())
                if owner is not None and owner != canonical:
                    raise GazetteerError(
                        f"alias {alias!r} maps to both {owner!r} and {canonical!r}"
                    )
                alias_owner[alias.lower()] = canonical
            entries.append((canonical, cleaned))
        self.companies = entries
        names = [canonical for canonical, _ in entries]
        names += [a for _, aliases in entries for a in aliases]
        docs = [tokenize(name, NAME_TOKENIZER) for name in names]
        self.vocabulary: Vocabulary = fit_tfidf(docs, NAME_TOKENIZER)
        self._name_vectors: list[tuple[str, SparseVector]] = []
        for canonical, aliases in entries:
            for name in (canonical, *aliases):
                vec = transform(self.vocabulary, tokenize(name, NAME_TOKENIZER))
                self._name_vectors.append((canonical, vec))

    def canonical_names(self) -> list[str]:
        return [canonical for canonical, _ in self.companies]

    def embed(self, text: str) -> SparseVector:
        return transform(self.vocabulary, tokenize(text, NAME_TOKENIZER))

    def best_match(self, candidate: str) -> tuple[str, float] | None:
        """Highest-cosine company for a candidate string, if any overlap."""
        query = self.embed(candidate)
        if query.is_zero:
            return None
        best: tuple[str, float] | None = None
        for canonical, vec in self._name_vectors:
            sim = cosine(query, vec)
            if best is None or sim > best[1] or (sim == best[1] and canonical < best[0]):
                best = (canonical, sim)
        return best

    @classmethod
    def from_file(cls, path: str | Path) -> "Gazetteer":
        """Load the delimited gazetteer format: canonical_name, alias rows."""
        grouped: dict[str, list[str]] = {}
        order: list[str] = []
        with open(path, newline="", encoding="utf-8") as handle:
            for row in csv.reader(handle):
                if not row or not row[0].strip() or row[0].startswith("#"):
                    continue
                canonical = row[0].strip()
                if canonical.lower() == "canonical_name":
                    continue  # header row
                if canonical not in grouped:
                    grouped[canonical] = []
                    order.append(canonical)
                alias = row[1].strip() if len(row) > 1 else ""
                if alias:
                    grouped[canonical].append(alias)
        return cls([(name, grouped[name]) for name in order])


def _is_name_token(token: str) -> bool:
    first = token[0]
    if first.isupper():
        return True
    return first.isdigit() and any(ch.isupper() for ch in token)


def extract_candidates(text: str) -> list[tuple[int, int]]:
    """Spans of possible organization names: runs of capitalized tokens.

    Each maximal run of up to four consecutive capitalized tokens yields the
    run itself plus every contiguous sub-run. A lone capitalized function
    word at a sentence start is skipped.
    """
    tokens = [(m.start(), m.end(), m.group()) for m in _TOKEN_RE.finditer(text)]
    runs: list[list[tuple[int, int, str]]] = []
    current: list[tuple[int, int, str]] = []
    for tok in tokens:
        if _is_name_token(tok[2]):
            current.append(tok)
        elif current:
            runs.append(current)
            current = []
    if current:
        runs.append(current)

    spans: list[tuple[int, int]] = []
    for run in runs:
        if len(run) == 1 and _sentence_initial(text, run[0][0]):
            if run[0][2].lower() in _FUNCTION_WORDS:
                continue
        max_len = min(len(run), 4)
        for width in range(max_len, 0, -1):
            for i in range(len(run) - width + 1):
                spans.append((run[i][0], run[i + width - 1][1]))
    return spans


def _sentence_initial(text: str, position: int) -> bool:
    for ch in reversed(text[:position]):
        if ch.isspace() or ch in "\"'“”‘’(":
            continue
        return ch in _SENTENCE_END
    return True


def match_company(
    candidate: str,
    gazetteer: Gazetteer,
    threshold: float = DEFAULT_THRESHOLD,
) -> Mention | None:
    """Match one candidate string; ties break by canonical name order."""
    best = gazetteer.best_match(candidate)
    if best is None or best[1] < threshold:
        return None
    return Mention(
        headline_id="",
        start=0,
        end=len(candidate),
        surface=candidate,
        company=best[0],
        similarity=best[1],
    )


def find_mentions(
    text: str,
    gazetteer: Gazetteer,
    threshold: float = DEFAULT_THRESHOLD,
    headline_id: str = "",
    skip_surfaces: frozenset[str] = frozenset(),
) -> list[Mention]:
    """All company mentions in a text, longest span kept per company."""
    matched: list[Mention] = []
    for start, end in extract_candidates(text):
        surface = text[start:end]
        if surface in skip_surfaces:
            continue
        best = gazetteer.best_match(surface)
        if best is None or best[1] < threshold:
            continue
        matched.append(
            Mention(
                headline_id=headline_id,
                start=start,
                end=end,
                surface=surface,
                company=best[0],
                similarity=best[1],
            )
        )
    return _dedup_longest(matched)


def _dedup_longest(mentions: Iterable[Mention]) -> list[Mention]:
    # Per company, prefer longer spans; drop spans overlapping a kept one.
    kept: list[Mention] = []
    by_company: dict[str, list[Mention]] = {}
    for m in mentions:
        by_company.setdefault(m.company, []).append(m)
    for company in sorted(by_company):
        chosen: list[Mention] = []
        ordered = sorted(
            by_company[company], key=lambda m: (-(m.end - m.start), m.start)
        )
        for m in ordered:
            if all(m.end <= c.start or m.start >= c.end for c in chosen):
                chosen.append(m)
        kept.extend(chosen)
    return sorted(kept, key=lambda m: (m.start, m.end, m.company))


def detect(
    headline,
    gazetteer: Gazetteer,
    threshold: float = DEFAULT_THRESHOLD,
) -> list[Mention]:
    """Company mentions for a corpus headline (anything with .id and .text)."""
    return find_mentions(
        headline.text, gazetteer, threshold, headline_id=headline.id
    )


def nearest_names(gazetteer: Gazetteer, query: str, limit: int = 3) -> list[str]:
    """Canonical names ranked by cosine to the query, for suggestions."""
    vector = gazetteer.embed(query)
    scored = []
    for canonical in gazetteer.canonical_names():
        sim = cosine(vector, gazetteer.embed(canonical)) if not vector.is_zero else 0.0
        scored.append((-sim, canonical))
    return [name for _, name in sorted(scored)[:limit]]
