"""Okapi BM25 index over all corpus paragraphs.

One flat index is built over every paragraph of every destination;
paragraph refs are "dest_id#index" strings. IDF is
``ln((N - df + 0.5) / (df + 0.5))``; terms whose raw IDF comes out
negative (very common terms) are floored to ``epsilon x`` the average of
the positive raw IDFs, so scores are always nonnegative.
"""
from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .corpus import Corpus
from .errors import EmptyCorpus, UnknownParagraph

DEFAULT_K1 = 1.5
DEFAULT_B = 0.75
DEFAULT_EPSILON = 0.25

_TOKEN_RE = re.compile(r"[0-9a-z]+")
_TOKEN_RE_CASED = re.compile(r"[0-9a-zA-Z]+")


@dataclass(frozen=True)
class TokenizerConfig:
    lowercase: bool = True
    stopwords: frozenset[str] = frozenset()


def tokenize(text: str, cfg: TokenizerConfig = TokenizerConfig()) -> list[str]:
    """Split on runs of non-alphanumerics; lowercase; drop stopwords."""
    if cfg.lowercase:
        tokens = _TOKEN_RE.findall(text.lower())
    else:
        tokens = _TOKEN_RE_CASED.findall(text)
    if cfg.stopwords:
        tokens = [t for t in tokens if t not in cfg.stopwords]
    return tokens


@dataclass
class Bm25Index:
    N: int
    avgdl: float
    doc_len: dict[str, int]
    term_freqs: dict[str, dict[str, int]]
    doc_freq: dict[str, int]
    idf: dict[str, float]
    k1: float = DEFAULT_K1
    b: float = DEFAULT_B
    epsilon: float = DEFAULT_EPSILON

    def refs(self) -> list[str]:
        return list(self.doc_len.keys())


def build_index(
    corpus: Corpus,
    cfg: TokenizerConfig = TokenizerConfig(),
    k1: float = DEFAULT_K1,
    b: float = DEFAULT_B,
    epsilon: float = DEFAULT_EPSILON,
) -> Bm25Index:
    doc_len: dict[str, int] = {}
    term_freqs: dict[str, dict[str, int]] = {}
    doc_freq: Counter = Counter()
    for para in corpus.iter_paragraphs():
        tokens = tokenize(para.text, cfg)
        doc_len[para.ref] = len(tokens)
        tf = dict(Counter(tokens))
        term_freqs[para.ref] = tf
        for term in tf:
            doc_freq[term] += 1
    n = len(doc_len)
    if n == 0:
        raise EmptyCorpus("corpus has no paragraphs")
    avgdl = sum(doc_len.values()) / n

    raw_idf = {
        term: math.log((n - df + 0.5) / (df + 0.5)) for term, df in doc_freq.items()
    }
    positive = [v for v in raw_idf.values() if v > 0]
    floor = epsilon * (sum(positive) / len(positive)) if positive else 0.0
    idf = {term: (v if v > 0 else floor) for term, v in raw_idf.items()}

    return Bm25Index(
        N=n, avgdl=avgdl, doc_len=doc_len, term_freqs=term_freqs,
        doc_freq=dict(doc_freq), idf=idf, k1=k1, b=b, epsilon=epsilon,
    )


def score_paragraph(index: Bm25Index, query_tokens: Sequence[str], ref: str) -> float:
    """Okapi BM25 score of one paragraph; unindexed query tokens contribute 0."""
    if ref not in index.doc_len:
        raise UnknownParagraph(ref)
    tf = index.term_freqs[ref]
    norm = index.k1 * (1 - index.b + index.b * index.doc_len[ref] / index.avgdl)
    score = 0.0
    for token in query_tokens:
        f = tf.get(token)
        if not f:
            continue
        score += index.idf[token] * f * (index.k1 + 1) / (f + norm)
    return score


def score_all(index: Bm25Index, query_tokens: Sequence[str]) -> dict[str, float]:
    """score_paragraph over every paragraph; all refs present, zeros included."""
    # Filter once so the per-paragraph loop only touches indexed terms.
    tokens = [t for t in query_tokens if t in index.idf]
    return {ref: score_paragraph(index, tokens, ref) for ref in index.doc_len}


def save_index(index: Bm25Index, path) -> None:
    """Persist index statistics as JSON (floats round-trip exactly)."""
    obj = {
        "N": index.N,
        "avgdl": index.avgdl,
        "doc_len": index.doc_len,
        "term_freqs": index.term_freqs,
        "doc_freq": index.doc_freq,
        "idf": index.idf,
        "k1": index.k1,
        "b": index.b,
        "epsilon": index.epsilon,
    }
    Path(path).write_text(json.dumps(obj), encoding="utf-8")


def load_index(path) -> Bm25Index:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return Bm25Index(
        N=obj["N"], avgdl=obj["avgdl"], doc_len=obj["doc_len"],
        term_freqs=obj["term_freqs"], doc_freq=obj["doc_freq"], idf=obj["idf"],
        k1=obj["k1"], b=obj["b"], epsilon=obj["epsilon"],
    )
