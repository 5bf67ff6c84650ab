"""Read destrank's corpus/reformulated files and write its embeddings.jsonl.

These are file-format contracts, deliberately re-implemented here rather than
imported, so this tool stays a standalone companion:

- corpus.jsonl: one destination per line, {"id", "name", "paragraphs": [...]};
  paragraph keys are "dest_id#index".
- reformulated.jsonl: {"qid", "method", "original", "segments": [{"title",
  "elaboration", ...}], "raw_expansion"}; the encoded text is the original
  query followed by one " [SEP] title: elaboration" block per segment, or a
  single " [SEP] expansion" block for flat methods; keys are "qid#method".
- embeddings.jsonl: a {"model", "dim"} header line, then {"key", "vector"}
  rows.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence, Tuple

import numpy as np

from .encoders import Encoder

BATCH_SIZE = 32


def read_corpus_texts(path) -> list[Tuple[str, str]]:
    """(key, paragraph text) pairs for every paragraph in a corpus.jsonl."""
    pairs = []
    with Path(path).open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                dest_id = obj["id"]
                paragraphs = obj["paragraphs"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{line_no}: malformed corpus line ({exc})")
            for i, text in enumerate(paragraphs):
                pairs.append((f"{dest_id}#{i}", str(text)))
    if not pairs:
        raise ValueError(f"{path}: no paragraphs found")
    return pairs


def render_query_text(obj: dict) -> str:
    out = obj["original"]
    segments = obj.get("segments") or []
    if segments:
        for seg in segments:
            out += f" [SEP] {seg['title']}: {seg['elaboration']}"
    elif obj.get("raw_expansion"):
        out += f" [SEP] {obj['raw_expansion'].strip()}"
    return out


def read_query_texts(path) -> list[Tuple[str, str]]:
    """(key, rendered text) pairs for every entry in a reformulated.jsonl."""
    pairs = []
    with Path(path).open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                key = f"{obj['qid']}#{obj['method']}"
                text = render_query_text(obj)
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{line_no}: malformed reformulated line ({exc})")
            pairs.append((key, text))
    if not pairs:
        raise ValueError(f"{path}: no queries found")
    return pairs


def write_embeddings(path, model_id: str, dim: int, rows: Iterable[Tuple[str, np.ndarray]]) -> int:
    count = 0
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps({"model": model_id, "dim": dim}) + "\n")
        for key, vec in rows:
            fh.write(json.dumps({"key": key, "vector": [float(x) for x in vec]}) + "\n")
            count += 1
    return count


def encode_pairs(encoder: Encoder, pairs: Sequence[Tuple[str, str]]):
    """Yield (key, vector) in input order, encoding in batches."""
    for start in range(0, len(pairs), BATCH_SIZE):
        batch = pairs[start : start + BATCH_SIZE]
        vectors = encoder.encode([text for _, text in batch])
        for (key, _), vec in zip(batch, vectors):
            yield key, vec


def export(encoder: Encoder, pairs: Sequence[Tuple[str, str]], out_path) -> int:
    return write_embeddings(
        out_path,
        encoder.spec.registry_model_id,
        encoder.spec.dim,
        encode_pairs(encoder, pairs),
    )
