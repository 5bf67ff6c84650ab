"""Pretrained sentence encoders behind a small loading seam.

Two encoders are supported, identified by short aliases. The exact registry
checkpoints are recorded in every output header so downstream results are
auditable; swapping checkpoints changes absolute metrics.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class EncoderSpec:
    alias: str
    registry_model_id: str
    dim: int
    max_tokens: int


ENCODERS = {
    "tas-b": EncoderSpec(
        alias="tas-b",
        registry_model_id="sentence-transformers/msmarco-distilbert-base-tas-b",
        dim=768,
        max_tokens=512,
    ),
    "minilm": EncoderSpec(
        alias="minilm",
        registry_model_id="sentence-transformers/all-MiniLM-L6-v2",
        dim=384,
        max_tokens=256,
    ),
}


class Encoder:
    """A loaded sentence encoder producing float32 vectors of spec.dim.

    ``model_factory`` exists so tests can inject a deterministic stub; by
    default the checkpoint is fetched through sentence-transformers. Texts
    longer than the checkpoint's limit are truncated by its own tokenizer.
    """

    def __init__(self, spec: EncoderSpec, model_factory: Optional[Callable] = None):
        self.spec = spec
        if model_factory is None:
            from sentence_transformers import SentenceTransformer

            self._model = SentenceTransformer(spec.registry_model_id)
        else:
            self._model = model_factory(spec)

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        vectors = np.asarray(
            self._model.encode(list(texts), convert_to_numpy=True, show_progress_bar=False),
            dtype=np.float32,
        )
        if vectors.ndim == 1:
            vectors = vectors.reshape(1, -1)
        if vectors.shape != (len(texts), self.spec.dim):
            raise ValueError(
                f"encoder produced shape {vectors.shape}, expected ({len(texts)}, {self.spec.dim})"
            )
        if not np.all(np.isfinite(vectors)):
            raise ValueError("encoder produced non-finite values")
        return vectors


def get_spec(alias: str) -> EncoderSpec:
    try:
        return ENCODERS[alias]
    except KeyError:
        raise ValueError(f"unknown encoder alias: {alias!r} (choose from {sorted(ENCODERS)})")
