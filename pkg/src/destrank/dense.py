"""Dense retrieval: cosine similarity against precomputed embeddings.

Vectors are stored as float32 but all dot products and norms accumulate in
float64, which keeps 768-dim cosines insensitive to summation order.
Embeddings live in a JSONL file whose first line is a header
``{"model": "...", "dim": N}`` and whose rows are
``{"key": "paris#0", "vector": [...]}``.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import requests

from .errors import (
    DimMismatch,
    DuplicateKey,
    MalformedHeader,
    MalformedLine,
    NetworkError,
    NotPrecomputed,
)

log = logging.getLogger(__name__)


@dataclass
class EmbeddingStore:
    model_id: str
    dim: int
    entries: dict[str, np.ndarray]

    def __contains__(self, key: str) -> bool:
        return key in self.entries


def load_embeddings(path) -> EmbeddingStore:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        header_line = fh.readline()
        if not header_line.strip():
            raise MalformedHeader(f"{path}: missing embeddings header")
        try:
            header = json.loads(header_line)
            model_id = header["model"]
            dim = int(header["dim"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise MalformedHeader(f"{path}: bad embeddings header: {exc}") from exc
        if dim <= 0:
            raise MalformedHeader(f"{path}: dim must be positive")
        entries: dict[str, np.ndarray] = {}
        for line_no, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                key = row["key"]
                vector = row["vector"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise MalformedLine(path, line_no, str(exc)) from exc
            if key in entries:
                raise DuplicateKey(key)
            vec = np.asarray(vector, dtype=np.float32)
            if vec.ndim != 1 or vec.shape[0] != dim:
                raise DimMismatch(f"key {key!r} has length {vec.shape}, expected {dim}")
            if not np.all(np.isfinite(vec)):
                raise MalformedLine(path, line_no, f"non-finite component in {key!r}")
            entries[key] = vec
    return EmbeddingStore(model_id=model_id, dim=dim, entries=entries)


def save_embeddings(store: EmbeddingStore, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps({"model": store.model_id, "dim": store.dim}) + "\n")
        for key, vec in store.entries.items():
            row = {"key": key, "vector": [float(x) for x in vec]}
            fh.write(json.dumps(row) + "\n")


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity with float64 accumulation; zero-norm inputs score 0."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimMismatch(f"{a.shape} vs {b.shape}")
    a64 = a.astype(np.float64)
    b64 = b.astype(np.float64)
    na = float(np.sqrt(np.dot(a64, a64)))
    nb = float(np.sqrt(np.dot(b64, b64)))
    if na == 0.0 or nb == 0.0:
        log.warning("cosine of a zero-norm vector; scoring 0.0")
        return 0.0
    return float(np.dot(a64, b64) / (na * nb))


def score_all(query_vec: np.ndarray, store: EmbeddingStore) -> dict[str, float]:
    """Cosine of the query against every stored vector."""
    query_vec = np.asarray(query_vec)
    if query_vec.shape != (store.dim,):
        raise DimMismatch(f"query has shape {query_vec.shape}, store dim {store.dim}")
    return {key: cosine(query_vec, vec) for key, vec in store.entries.items()}


@dataclass
class FileEmbeddingProvider:
    """Looks texts up in a store via a text -> key registry (no encoder)."""

    store: EmbeddingStore
    text_to_key: dict[str, str] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.store.dim

    def register(self, text: str, key: str) -> None:
        self.text_to_key[text] = key

    def embed(self, text: str) -> np.ndarray:
        key = self.text_to_key.get(text)
        if key is None or key not in self.store.entries:
            raise NotPrecomputed(key if key is not None else text)
        return self.store.entries[key]


@dataclass
class HttpEmbeddingProvider:
    """POSTs to an /embed endpoint serving the configured encoder."""

    base_url: str
    model_id: str
    dim: Optional[int] = None
    timeout: float = 120.0

    def embed(self, text: str) -> np.ndarray:
        url = self.base_url.rstrip("/") + "/embed"
        try:
            resp = requests.post(
                url, json={"model": self.model_id, "texts": [text]}, timeout=self.timeout
            )
            resp.raise_for_status()
            vectors = resp.json()["vectors"]
        except (requests.RequestException, KeyError, ValueError) as exc:
            raise NetworkError(f"embedding request failed: {exc}") from exc
        vec = np.asarray(vectors[0], dtype=np.float32)
        if self.dim is not None and vec.shape != (self.dim,):
            raise DimMismatch(f"endpoint returned {vec.shape}, expected {self.dim}")
        return vec
