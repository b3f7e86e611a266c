"""Tokenization and TF-IDF sentence embeddings.

Every classifier and the company-name matcher run on the sparse vectors
produced here. The weighting is the smoothed variant

    idf(t) = ln((1 + n_documents) / (1 + df(t))) + 1
    weight(t) = tf(t) * idf(t), then L2-normalized

with raw term counts for tf. Smoothing keeps idf finite and strictly
positive, so ubiquitous terms are damped but never zeroed.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

# Unicode alphanumeric runs, underscore excluded.
_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)
_SPACE_RE = re.compile(r"\s+")

FORMAT_VERSION = 1


class FitError(ValueError):
    """Raised when TF-IDF fitting cannot produce a usable vocabulary."""


@dataclass(frozen=True)
class TokenizerConfig:
    """How text is split into tokens.

    ``word`` mode lowercases (if ``lowercase``) and splits on runs of
    non-alphanumeric characters. ``char_ngram`` mode emits every contiguous
    character n-gram of the lowercased string with whitespace collapsed out,
    which makes spacing variants of a name ("ExxonMobil" / "Exxon Mobil")
    produce identical grams. ``ngram_n`` is ignored in word mode.
    """

    mode: str = "word"
    ngram_n: int = 3
    lowercase: bool = True

    def __post_init__(self) -> None:
        if self.mode not in ("word", "char_ngram"):
            raise ValueError(f"unknown tokenizer mode: {self.mode!r}")
        if self.ngram_n < 1:
            raise ValueError("ngram_n must be >= 1")


WORD_TOKENIZER = TokenizerConfig(mode="word")
NAME_TOKENIZER = TokenizerConfig(mode="char_ngram", ngram_n=3)


def tokenize(text: str, config: TokenizerConfig = WORD_TOKENIZER) -> list[str]:
    """Split ``text`` into tokens according to ``config``."""
    if config.mode == "word":
        if config.lowercase:
            text = text.lower()
        return _WORD_RE.findall(text)
    collapsed = _SPACE_RE.sub("", text.lower())
    n = config.ngram_n
    return [collapsed[i : i + n] for i in range(len(collapsed) - n + 1)]


@dataclass(frozen=True)
class SparseVector:
    """L2-normalized sparse embedding: parallel (index, weight) pairs."""

    indices: tuple[int, ...]
    weights: tuple[float, ...]
    dimension: int

    def __post_init__(self) -> None:
        if len(self.indices) != len(self.weights):
            raise ValueError("indices and weights must have equal length")
        prev = -1
        for i in self.indices:
            if i <= prev:
                raise ValueError("indices must be strictly increasing")
            if i >= self.dimension:
                raise ValueError("index out of range for dimension")
            prev = i
        if any(not math.isfinite(w) for w in self.weights):
            raise ValueError("weights must be finite")

    @property
    def is_zero(self) -> bool:
        return not self.indices

    def norm(self) -> float:
        return math.sqrt(sum(w * w for w in self.weights))

    def to_array(self) -> np.ndarray:
        dense = np.zeros(self.dimension)
        if self.indices:
            dense[list(self.indices)] = self.weights
        return dense


def zero_vector(dimension: int) -> SparseVector:
    return SparseVector((), (), dimension)


def stack(vectors: Sequence[SparseVector]) -> np.ndarray:
    """Densify a batch of vectors into an (n, dimension) array.

    Fine at headline scale; not meant for web-scale vocabularies.
    """
    if not vectors:
        raise ValueError("cannot stack an empty batch")
    dim = vectors[0].dimension
    out = np.zeros((len(vectors), dim))
    for row, vec in enumerate(vectors):
        if vec.dimension != dim:
            raise ValueError("mixed dimensions in batch")
        if vec.indices:
            out[row, list(vec.indices)] = vec.weights
    return out


@dataclass(frozen=True)
class Vocabulary:
    """Fitted TF-IDF state: dense term indices plus document frequencies."""

    term_index: dict[str, int]
    document_frequency: dict[str, int]
    n_documents: int
    tokenizer: TokenizerConfig = WORD_TOKENIZER
    _idf: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        idf = np.zeros(len(self.term_index))
        for term, idx in self.term_index.items():
            idf[idx] = self.idf(term)
        object.__setattr__(self, "_idf", idf)

    def __len__(self) -> int:
        return len(self.term_index)

    @property
    def dimension(self) -> int:
        return len(self.term_index)

    def idf(self, term: str) -> float:
        df = self.document_frequency[term]
        return math.log((1 + self.n_documents) / (1 + df)) + 1.0


def fit_tfidf(
    docs: Sequence[Sequence[str]],
    tokenizer: TokenizerConfig = WORD_TOKENIZER,
) -> Vocabulary:
    """Build a vocabulary over token sequences.

    Document frequency uses presence semantics: a term counts once per
    document no matter how often it repeats. Term indices are assigned in
    sorted term order, so identical corpora always fit identical
    vocabularies.
    """
    if not docs:
        raise FitError("cannot fit TF-IDF on an empty document collection")
    df: Counter[str] = Counter()
    for doc in docs:
        df.update(set(doc))
    if not df:
        raise FitError("empty vocabulary: no tokens in any document")
    term_index = {term: i for i, term in enumerate(sorted(df))}
    return Vocabulary(
        term_index=term_index,
        document_frequency=dict(df),
        n_documents=len(docs),
        tokenizer=tokenizer,
    )


def transform(vocab: Vocabulary, tokens: Iterable[str]) -> SparseVector:
    """Embed a token sequence as an L2-normalized TF-IDF vector.

    Tokens outside the vocabulary are ignored; a document of only unseen
    tokens maps to the zero vector.
    """
    counts: Counter[int] = Counter()
    for token in tokens:
        idx = vocab.term_index.get(token)
        if idx is not None:
            counts[idx] += 1
    if not counts:
        return zero_vector(vocab.dimension)
    indices = sorted(counts)
    raw = [counts[i] * vocab._idf[i] for i in indices]
    norm = math.sqrt(sum(w * w for w in raw))
    return SparseVector(tuple(indices), tuple(w / norm for w in raw), vocab.dimension)


def embed(vocab: Vocabulary, text: str) -> SparseVector:
    """Tokenize with the vocabulary's own tokenizer, then transform."""
    return transform(vocab, tokenize(text, vocab.tokenizer))


def cosine(a: SparseVector, b: SparseVector) -> float:
    """Cosine similarity of two same-dimension vectors; 0 if either is zero."""
    if a.dimension != b.dimension:
        raise ValueError(
            f"dimension mismatch: {a.dimension} vs {b.dimension}"
        )
    if a.is_zero or b.is_zero:
        return 0.0
    bw = dict(zip(b.indices, b.weights))
    dot = sum(w * bw[i] for i, w in zip(a.indices, a.weights) if i in bw)
    return dot / (a.norm() * b.norm())


def save_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    """Write the versioned line format: one header, then term/index/df rows."""
    tok = vocab.tokenizer
    lines = [
        "\t".join(
            [
                str(FORMAT_VERSION),
                str(vocab.n_documents),
                tok.mode,
                str(tok.ngram_n),
                str(int(tok.lowercase)),
            ]
        )
    ]
    for term, idx in sorted(vocab.term_index.items(), key=lambda kv: kv[1]):
        lines.append(f"{term}\t{idx}\t{vocab.document_frequency[term]}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_vocabulary(path: str | Path) -> Vocabulary:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise FitError(f"empty vocabulary file: {path}")
    header = lines[0].split("\t")
    if len(header) != 5 or header[0] != str(FORMAT_VERSION):
        raise FitError(f"unsupported vocabulary format in {path}: {lines[0]!r}")
    n_documents = int(header[1])
    tokenizer = TokenizerConfig(
        mode=header[2], ngram_n=int(header[3]), lowercase=bool(int(header[4]))
    )
    term_index: dict[str, int] = {}
    df: dict[str, int] = {}
    for line in lines[1:]:
        if not line:
            continue
        term, idx, count = line.split("\t")
        term_index[term] = int(idx)
        df[term] = int(count)
    return Vocabulary(
        term_index=term_index,
        document_frequency=df,
        n_documents=n_documents,
        tokenizer=tokenizer,
    )
