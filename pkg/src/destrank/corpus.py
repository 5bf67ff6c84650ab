"""Destination corpus and benchmark dataset loading.

The corpus is stored pre-chunked as JSONL, one destination per line:
``{"id": "paris", "name": "Paris", "paragraphs": ["...", "..."]}``.
Queries and qrels are likewise JSONL (``{"qid", "text"}`` and
``{"qid", "relevant": [...]}``).
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Optional

from .errors import (
    DuplicateId,
    DuplicateQid,
    EmptyDocument,
    InvalidCorpus,
    InvalidDataset,
    MalformedLine,
    MissingQrels,
    UnknownDestination,
)

MIN_PARAGRAPH_CHARS = 20


@dataclass(frozen=True)
class Paragraph:
    dest_id: str
    index: int
    text: str

    @property
    def ref(self) -> str:
        """Stable paragraph key, shared with the embeddings file format."""
        return f"{self.dest_id}#{self.index}"


@dataclass(frozen=True)
class Destination:
    id: str
    name: str
    paragraphs: tuple[Paragraph, ...]


@dataclass(frozen=True)
class Corpus:
    destinations: tuple[Destination, ...]
    total_paragraphs: int

    def __post_init__(self):
        if not self.destinations:
            raise InvalidCorpus("corpus contains no destinations")
        if self.total_paragraphs != sum(len(d.paragraphs) for d in self.destinations):
            raise InvalidCorpus("total_paragraphs does not match destination contents")

    def iter_paragraphs(self) -> Iterator[Paragraph]:
        for dest in self.destinations:
            yield from dest.paragraphs

    def destination_ids(self) -> list[str]:
        return [d.id for d in self.destinations]


@dataclass(frozen=True)
class Query:
    qid: str
    text: str


@dataclass(frozen=True)
class Qrels:
    qid: str
    relevant: frozenset[str]


@dataclass(frozen=True)
class Dataset:
    queries: tuple[Query, ...]
    qrels: dict[str, Qrels]


def slugify(name: str) -> str:
    """Lowercase URL-safe id; parenthetical qualifiers are kept as words,
    so "Queenstown (New Zealand)" becomes "queenstown-new-zealand"."""
    slug = re.sub(r"[^0-9a-z]+", "-", name.lower())
    return slug.strip("-")


def chunk_document(raw_text: str, min_chars: int = MIN_PARAGRAPH_CHARS) -> list[str]:
    """Split raw page text into paragraph strings.

    Blocks are separated by two or more consecutive newlines; within a block,
    remaining line breaks are collapsed to single spaces. Blocks shorter than
    ``min_chars`` after trimming are dropped. Source order is preserved.
    """
    paragraphs = []
    for block in re.split(r"\n{2,}", raw_text):
        text = re.sub(r"\s*\n\s*", " ", block).strip()
        if len(text) >= min_chars:
            paragraphs.append(text)
    return paragraphs


def _read_jsonl(path) -> Iterator[tuple[int, dict]]:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLine(path, line_no, str(exc)) from exc
            if not isinstance(obj, dict):
                raise MalformedLine(path, line_no, "expected a JSON object")
            yield line_no, obj


def load_corpus(path, min_chars: int = MIN_PARAGRAPH_CHARS) -> Corpus:
    """Load and validate a pre-chunked corpus.jsonl file.

    Every stored paragraph is passed back through :func:`chunk_document`
    (idempotent for well-formed input); destinations left with zero
    paragraphs are rejected.
    """
    destinations = []
    seen_ids: set[str] = set()
    for line_no, obj in _read_jsonl(path):
        try:
            dest_id = str(obj["id"])
            name = str(obj["name"])
            raw_paragraphs = obj["paragraphs"]
        except KeyError as exc:
            raise MalformedLine(path, line_no, f"missing field {exc}") from exc
        if not dest_id:
            raise MalformedLine(path, line_no, "empty destination id")
        if dest_id in seen_ids:
            raise DuplicateId(dest_id)
        seen_ids.add(dest_id)
        texts = []
        for raw in raw_paragraphs:
            texts.extend(chunk_document(str(raw), min_chars))
        if not texts:
            raise EmptyDocument(dest_id)
        paragraphs = tuple(
            Paragraph(dest_id=dest_id, index=i, text=t) for i, t in enumerate(texts)
        )
        destinations.append(Destination(id=dest_id, name=name, paragraphs=paragraphs))
    if not destinations:
        raise InvalidCorpus(f"{path}: corpus file contains no destinations")
    total = sum(len(d.paragraphs) for d in destinations)
    return Corpus(destinations=tuple(destinations), total_paragraphs=total)


def save_corpus(corpus: Corpus, path) -> None:
    """Write corpus.jsonl (UTF-8, LF); round-trips through load_corpus."""
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for dest in corpus.destinations:
            obj = {
                "id": dest.id,
                "name": dest.name,
                "paragraphs": [p.text for p in dest.paragraphs],
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def load_dataset(queries_path, qrels_path, corpus: Optional[Corpus] = None) -> Dataset:
    """Load queries + qrels and cross-validate them (and the corpus, if given)."""
    queries = []
    seen_qids: set[str] = set()
    for line_no, obj in _read_jsonl(queries_path):
        try:
            qid, text = str(obj["qid"]), str(obj["text"])
        except KeyError as exc:
            raise MalformedLine(queries_path, line_no, f"missing field {exc}") from exc
        if qid in seen_qids:
            raise DuplicateQid(qid)
        if not text.strip():
            raise MalformedLine(queries_path, line_no, "empty query text")
        seen_qids.add(qid)
        queries.append(Query(qid=qid, text=text))

    corpus_ids = set(corpus.destination_ids()) if corpus is not None else None
    qrels: dict[str, Qrels] = {}
    for line_no, obj in _read_jsonl(qrels_path):
        try:
            qid, relevant = str(obj["qid"]), obj["relevant"]
        except KeyError as exc:
            raise MalformedLine(qrels_path, line_no, f"missing field {exc}") from exc
        if qid in qrels:
            raise DuplicateQid(qid)
        if qid not in seen_qids:
            raise InvalidDataset(f"qrels entry {qid!r} has no matching query")
        if not relevant:
            raise InvalidDataset(f"qrels entry {qid!r} has an empty relevant set")
        ids = frozenset(str(r) for r in relevant)
        if corpus_ids is not None:
            for dest_id in sorted(ids - corpus_ids):
                raise UnknownDestination(qid, dest_id)
        qrels[qid] = Qrels(qid=qid, relevant=ids)

    for q in queries:
        if q.qid not in qrels:
            raise MissingQrels(q.qid)
    return Dataset(queries=tuple(queries), qrels=qrels)
