"""Turn raw news-outlet posts into a labeled headline corpus.

Posts are kept only when they carry a link (the headline-plus-link
heuristic), article tags are mapped onto the three ESG domains through a
curated tag mapping, multi-domain articles are excluded, untagged ones are
labeled irrelevant, and duplicate headline texts collapse to one row per
domain. Company names can be masked with a fixed ORGMASK token so that
classifiers cannot memorize company identities.
"""

from __future__ import annotations

import csv
import json
import logging
import re
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .detection import DEFAULT_THRESHOLD, Gazetteer, find_mentions

logger = logging.getLogger(__name__)

ENVIRONMENTAL = "Environmental"
SOCIAL = "Social"
GOVERNANCE = "Governance"
IRRELEVANT = "Irrelevant"
EXCLUDED = "Excluded"

DOMAINS = (ENVIRONMENTAL, SOCIAL, GOVERNANCE)
GOLD_LABELS = DOMAINS + (IRRELEVANT, EXCLUDED)

MASK_TOKEN = "ORGMASK"

# Scheme-prefixed URLs, bare www hosts, and the t.co shortener all count
# as "contains a link".
_URL_RE = re.compile(r"(?:https?://\S+|\bwww\.\S+|\bt\.co/\S+)")
_WS_RE = re.compile(r"\s+")


class IngestError(ValueError):
    """Raised for malformed or contradictory input records."""


@dataclass(frozen=True)
class RawPost:
    id: str
    text: str
    url: str | None = None
    outlet: str = ""
    timestamp: datetime | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise IngestError("post id must be non-empty")
        if not self.text.strip():
            raise IngestError(f"post {self.id!r} has empty text")


@dataclass(frozen=True)
class TagMapping:
    """Tag-to-domain table; each tag maps to exactly one ESG domain."""

    entries: Mapping[str, str]

    def __post_init__(self) -> None:
        for tag, domain in self.entries.items():
            if tag != tag.strip().lower():
                raise IngestError(f"tag {tag!r} must be lowercase and trimmed")
            if domain not in DOMAINS:
                raise IngestError(f"tag {tag!r} maps to unknown domain {domain!r}")

    def domain_of(self, tag: str) -> str | None:
        return self.entries.get(tag.strip().lower())


@dataclass(frozen=True)
class LabeledHeadline:
    id: str
    text: str
    tags: frozenset[str]
    gold_label: str
    masked_text: str | None = None


def default_tag_mapping() -> TagMapping:
    """The shipped 24-tag mapping used to label the original corpus."""
    with resources.files("esgminer.data").joinpath("tag_mapping.csv").open(
        encoding="utf-8"
    ) as handle:
        return _parse_mapping(handle)


def load_tag_mapping(path: str | Path) -> TagMapping:
    with open(path, newline="", encoding="utf-8") as handle:
        return _parse_mapping(handle)


def _parse_mapping(handle: Iterable[str]) -> TagMapping:
    entries: dict[str, str] = {}
    for row in csv.reader(handle):
        if not row or row[0].startswith("#"):
            continue
        if row[0].strip().lower() == "tag" and len(row) > 1:
            continue  # header
        if len(row) < 2:
            raise IngestError(f"mapping row needs tag and domain: {row!r}")
        tag = row[0].strip().lower()
        domain = row[1].strip()
        if tag in entries and entries[tag] != domain:
            raise IngestError(f"tag {tag!r} mapped to two domains")
        entries[tag] = domain
    return TagMapping(entries)


def contains_link(text: str) -> bool:
    return _URL_RE.search(text) is not None


def filter_headline_posts(posts: Sequence[RawPost]) -> list[RawPost]:
    """Keep only posts whose text carries a URL token, order preserved."""
    return [post for post in posts if contains_link(post.text)]


def map_tags_to_domain(tags: Iterable[str], mapping: TagMapping) -> str:
    """One label per tag set: the unique domain, Excluded, or Irrelevant."""
    domains = {d for d in (mapping.domain_of(t) for t in tags) if d is not None}
    if not domains:
        return IRRELEVANT
    if len(domains) > 1:
        return EXCLUDED
    return domains.pop()


def normalize_headline(text: str) -> str:
    """Strip URL tokens and collapse whitespace; the dedup key is this
    normalized text, case-sensitive."""
    return _WS_RE.sub(" ", _URL_RE.sub(" ", text)).strip()


def build_corpus(
    posts: Sequence[RawPost],
    article_tags: Mapping[str, Iterable[str]],
    mapping: TagMapping,
) -> list[LabeledHeadline]:
    """Label every post and collapse duplicate headlines per domain.

    Excluded rows (tags from two or more domains) are still emitted so the
    exclusion rate can be reported; training loaders skip them. Posts
    missing from ``article_tags`` become Irrelevant with an empty tag set.
    """
    seen_ids: set[str] = set()
    seen_rows: set[tuple[str, str]] = set()
    rows: list[LabeledHeadline] = []
    untagged = 0
    for post in posts:
        if post.id in seen_ids:
            raise IngestError(f"duplicate post id: {post.id!r}")
        seen_ids.add(post.id)
        if post.id in article_tags:
            tags = frozenset(t.strip().lower() for t in article_tags[post.id])
        else:
            logger.debug("post %s has no tag data; labeling Irrelevant", post.id)
            untagged += 1
            tags = frozenset()
        label = map_tags_to_domain(tags, mapping)
        text = normalize_headline(post.text)
        key = (text, label)
        if key in seen_rows:
            continue
        seen_rows.add(key)
        rows.append(LabeledHeadline(id=post.id, text=text, tags=tags, gold_label=label))
    if untagged:
        logger.warning(
            "%d of %d posts had no tag data; labeled Irrelevant", untagged, len(posts)
        )
    return rows


def mask_companies(
    headline: str,
    gazetteer: Gazetteer,
    threshold: float = DEFAULT_THRESHOLD,
) -> str:
    """Replace every detected company span with the ORGMASK token.

    The mask token itself is never treated as a candidate, so masking is
    idempotent.
    """
    mentions = find_mentions(
        headline, gazetteer, threshold, skip_surfaces=frozenset({MASK_TOKEN})
    )
    if not mentions:
        return headline
    # Merge spans that overlap across companies into single masked regions.
    spans = sorted((m.start, m.end) for m in mentions)
    merged: list[list[int]] = [list(spans[0])]
    for start, end in spans[1:]:
        if start <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], end)
        else:
            merged.append([start, end])
    out = headline
    for start, end in reversed(merged):
        out = out[:start] + MASK_TOKEN + out[end:]
    return out


def mask_corpus(
    rows: Sequence[LabeledHeadline],
    gazetteer: Gazetteer,
    threshold: float = DEFAULT_THRESHOLD,
) -> list[LabeledHeadline]:
    return [
        replace(row, masked_text=mask_companies(row.text, gazetteer, threshold))
        for row in rows
    ]


def _parse_timestamp(value: str | None) -> datetime | None:
    if not value:
        return None
    try:
        parsed = datetime.fromisoformat(value.replace("Z", "+00:00"))
    except ValueError as exc:
        raise IngestError(f"bad timestamp {value!r}: {exc}") from exc
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    return parsed.astimezone(timezone.utc)


def parse_post(line: str, line_no: int = 0) -> RawPost:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise IngestError(f"line {line_no}: invalid JSON: {exc}") from exc
    if not isinstance(record, dict):
        raise IngestError(f"line {line_no}: expected an object")
    try:
        return RawPost(
            id=str(record["id"]),
            text=str(record["text"]),
            url=record.get("url"),
            outlet=str(record.get("outlet", "")),
            timestamp=_parse_timestamp(record.get("timestamp")),
        )
    except KeyError as exc:
        raise IngestError(f"line {line_no}: missing field {exc.args[0]!r}") from exc


def read_posts(path: str | Path) -> list[RawPost]:
    posts = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if line.strip():
                posts.append(parse_post(line, line_no))
    return posts


def read_article_tags(path: str | Path) -> dict[str, set[str]]:
    """Read the id,tag file (one row per tag)."""
    tags: dict[str, set[str]] = {}
    with open(path, newline="", encoding="utf-8") as handle:
        for row in csv.reader(handle):
            if not row or row[0].startswith("#"):
                continue
            if row[0].strip().lower() == "id" and len(row) > 1:
                continue
            if len(row) < 2:
                raise IngestError(f"tag row needs id and tag: {row!r}")
            tags.setdefault(row[0].strip(), set()).add(row[1].strip().lower())
    return tags


def headline_to_record(row: LabeledHeadline) -> dict:
    return {
        "id": row.id,
        "text": row.text,
        "masked_text": row.masked_text,
        "tags": sorted(row.tags),
        "gold_label": row.gold_label,
    }


def headline_from_record(record: dict) -> LabeledHeadline:
    return LabeledHeadline(
        id=str(record["id"]),
        text=str(record["text"]),
        tags=frozenset(record.get("tags", ())),
        gold_label=str(record["gold_label"]),
        masked_text=record.get("masked_text"),
    )


def write_corpus(rows: Sequence[LabeledHeadline], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(headline_to_record(row), ensure_ascii=False) + "\n")


def read_corpus(path: str | Path) -> list[LabeledHeadline]:
    rows = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                rows.append(headline_from_record(json.loads(line)))
            except (json.JSONDecodeError, KeyError) as exc:
                raise IngestError(f"line {line_no}: bad corpus record: {exc}") from exc
    return rows
