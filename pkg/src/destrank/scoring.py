"""Destination scoring: per-paragraph retrieval scores aggregated to a
per-destination score (mean of the top-n paragraphs), then a full ranking.

Ties are broken by ascending destination id so results are identical
across platforms and runs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Protocol, Sequence

from . import dense, sparse
from .corpus import Corpus
from .errors import EmptyScores, NotPrecomputed
from .reformulation import ReformulatedQuery, embedding_key, render_dense, render_sparse

DEFAULT_TOP_N = {
    "dense-tasb": 31,
    "dense-minilm": 18,
    "sparse-bm25": 13,
}


@dataclass(frozen=True)
class ScoringConfig:
    retriever: str  # "dense" or "sparse"
    top_n: int
    encoder_id: Optional[str] = None

    def __post_init__(self):
        if self.top_n < 1:
            raise ValueError("top_n must be >= 1")
        if self.retriever not in ("dense", "sparse"):
            raise ValueError(f"unknown retriever: {self.retriever!r}")


@dataclass(frozen=True)
class RankedList:
    qid: str
    entries: tuple[tuple[str, float], ...]

    def ids(self) -> list[str]:
        return [dest_id for dest_id, _ in self.entries]


class Backend(Protocol):
    def paragraph_scores(self, rq: ReformulatedQuery) -> dict[str, float]: ...


@dataclass
class SparseBackend:
    index: sparse.Bm25Index
    tokenizer: sparse.TokenizerConfig = sparse.TokenizerConfig()

    def paragraph_scores(self, rq: ReformulatedQuery) -> dict[str, float]:
        tokens = sparse.tokenize(render_sparse(rq), self.tokenizer)
        return sparse.score_all(self.index, tokens)


@dataclass
class DenseBackend:
    store: dense.EmbeddingStore  # paragraph vectors, keyed "dest_id#index"
    query_store: Optional[dense.EmbeddingStore] = None  # keyed "qid#method"
    provider: Optional[object] = None  # anything with .embed(text) -> vector

    def query_vector(self, rq: ReformulatedQuery):
        key = embedding_key(rq)
        for store in (self.query_store, self.store):
            if store is not None and key in store.entries:
                return store.entries[key]
        if self.provider is not None:
            return self.provider.embed(render_dense(rq))
        raise NotPrecomputed(key)

    def paragraph_scores(self, rq: ReformulatedQuery) -> dict[str, float]:
        return dense.score_all(self.query_vector(rq), self.store)


def score_destination(paragraph_scores: Sequence[float], n: int) -> float:
    """Mean of the top-n paragraph scores (all of them when fewer than n)."""
    if not paragraph_scores:
        raise EmptyScores("destination has no paragraph scores")
    if n < 1:
        raise ValueError("n must be >= 1")
    top = sorted(paragraph_scores, reverse=True)[:n]
    return sum(top) / len(top)


def aggregate(
    corpus: Corpus, paragraph_scores: dict[str, float], qid: str, top_n: int
) -> RankedList:
    """Fold per-paragraph scores into the final destination ranking."""
    scored = []
    for dest in corpus.destinations:
        scores = [paragraph_scores[p.ref] for p in dest.paragraphs]
        scored.append((dest.id, score_destination(scores, top_n)))
    scored.sort(key=lambda e: (-e[1], e[0]))
    return RankedList(qid=qid, entries=tuple(scored))


def rank_destinations(
    rq: ReformulatedQuery, corpus: Corpus, backend: Backend, cfg: ScoringConfig
) -> RankedList:
    return aggregate(corpus, backend.paragraph_scores(rq), rq.qid, cfg.top_n)


# --- results.jsonl ---

def _sig9(x: float) -> float:
    return float(f"{x:.9g}")


def save_results(
    rankings: Sequence[RankedList], path, method: str, retriever: str, top_n: int
) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for ranked in rankings:
            obj = {
                "qid": ranked.qid,
                "method": method,
                "retriever": retriever,
                "top_n": top_n,
                "ranking": [
                    {"id": dest_id, "score": _sig9(score)}
                    for dest_id, score in ranked.entries
                ],
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def load_results(path) -> list[dict]:
    rows = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append(json.loads(line))
    return rows
