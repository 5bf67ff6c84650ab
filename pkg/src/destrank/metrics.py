"""Rank-based retrieval metrics over binary relevance sets.

All three metrics consume only the order of the ranking (ids, best first)
and a set of relevant ids, and return values in [0, 1].
"""
from __future__ import annotations

from typing import Sequence

from .errors import EmptyRelevantSet, RankingTooShort


def recall_at_k(ranking: Sequence[str], relevant: set, k: int) -> float:
    """Fraction of the relevant set found in the top k."""
    if not relevant:
        raise EmptyRelevantSet("relevant set is empty")
    if k < 1:
        raise ValueError("k must be >= 1")
    hits = sum(1 for dest_id in ranking[:k] if dest_id in relevant)
    return hits / len(relevant)


def average_precision_at_k(ranking: Sequence[str], relevant: set, k: int) -> float:
    """Truncated average precision, normalized by min(|relevant|, k)."""
    if not relevant:
        raise EmptyRelevantSet("relevant set is empty")
    if k < 1:
        raise ValueError("k must be >= 1")
    hits = 0
    precision_sum = 0.0
    for i, dest_id in enumerate(ranking[:k], start=1):
        if dest_id in relevant:
            hits += 1
            precision_sum += hits / i
    return precision_sum / min(len(relevant), k)


def r_precision(ranking: Sequence[str], relevant: set) -> float:
    """Precision at rank R, with R the size of the relevant set."""
    if not relevant:
        raise EmptyRelevantSet("relevant set is empty")
    r = len(relevant)
    if len(ranking) < r:
        raise RankingTooShort(f"ranking has {len(ranking)} entries, need {r}")
    hits = sum(1 for dest_id in ranking[:r] if dest_id in relevant)
    return hits / r


def parse_metric(spec: str):
    """Parse "recall@30" / "map@50" / "r-precision" into (name, k)."""
    spec = spec.strip().lower()
    if spec in ("r-precision", "rprec", "r_precision"):
        return ("r-precision", None)
    for prefix in ("recall@", "map@"):
        if spec.startswith(prefix):
            k = int(spec[len(prefix):])
            if k < 1:
                raise ValueError(f"bad metric cutoff in {spec!r}")
            return (prefix.rstrip("@"), k)
    raise ValueError(f"unknown metric: {spec!r}")


def compute_metric(spec: str, ranking: Sequence[str], relevant: set) -> float:
    name, k = parse_metric(spec)
    if name == "recall":
        return recall_at_k(ranking, relevant, k)
    if name == "map":
        return average_precision_at_k(ranking, relevant, k)
    return r_precision(ranking, relevant)
