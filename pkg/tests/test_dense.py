import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from destrank.dense import (
    EmbeddingStore,
    FileEmbeddingProvider,
    cosine,
    load_embeddings,
    save_embeddings,
    score_all,
)
from destrank.errors import (
    DimMismatch,
    DuplicateKey,
    MalformedHeader,
    MalformedLine,
    NotPrecomputed,
)
from fixture_paths import FIXTURES

finite_floats = st.floats(
    min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False, width=32
)


def vec(*components):
    return np.asarray(components, dtype=np.float32)


class TestLoadEmbeddings:
    def test_fixture_store(self):
        store = load_embeddings(FIXTURES / "embeddings.jsonl")
        assert store.model_id == "synthetic-16"
        assert store.dim == 16
        assert len(store.entries) == 22
        assert all(v.shape == (16,) for v in store.entries.values())

    def test_dim_mismatch(self, tmp_path):
        path = tmp_path / "emb.jsonl"
        path.write_text(
            json.dumps({"model": "m", "dim": 3}) + "\n"
            + json.dumps({"key": "a#0", "vector": [1.0, 2.0]}) + "\n"
        )
        with pytest.raises(DimMismatch):
            load_embeddings(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "emb.jsonl"
        path.write_text("")
        with pytest.raises(MalformedHeader):
            load_embeddings(path)

    def test_duplicate_key(self, tmp_path):
        path = tmp_path / "emb.jsonl"
        row = json.dumps({"key": "a#0", "vector": [1.0]})
        path.write_text(json.dumps({"model": "m", "dim": 1}) + "\n" + row + "\n" + row + "\n")
        with pytest.raises(DuplicateKey):
            load_embeddings(path)

    def test_malformed_row(self, tmp_path):
        path = tmp_path / "emb.jsonl"
        path.write_text(json.dumps({"model": "m", "dim": 1}) + "\nnot json\n")
        with pytest.raises(MalformedLine):
            load_embeddings(path)

    def test_round_trip(self, tmp_path):
        store = load_embeddings(FIXTURES / "embeddings.jsonl")
        out = tmp_path / "copy.jsonl"
        save_embeddings(store, out)
        reloaded = load_embeddings(out)
        assert reloaded.model_id == store.model_id
        for key, v in store.entries.items():
            assert np.array_equal(reloaded.entries[key], v)


class TestCosine:
    def test_identity(self):
        assert cosine(vec(1, 0), vec(1, 0)) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine(vec(1, 0), vec(0, 1)) == 0.0

    def test_hand_value(self):
        # dot = 11, norms 3 and 5
        assert cosine(vec(1, 2, 2), vec(3, 0, 4)) == pytest.approx(11 / 15)

    def test_dim_mismatch(self):
        with pytest.raises(DimMismatch):
            cosine(vec(1, 0), vec(1, 0, 0))

    def test_zero_norm_scores_zero(self):
        assert cosine(vec(0, 0), vec(1, 2)) == 0.0

    @given(st.lists(finite_floats, min_size=2, max_size=8), st.data())
    def test_symmetry(self, a_components, data):
        a = vec(*a_components)
        b = vec(*data.draw(st.lists(finite_floats, min_size=len(a), max_size=len(a))))
        assert cosine(a, b) == pytest.approx(cosine(b, a), abs=1e-9)

    @given(st.lists(finite_floats, min_size=2, max_size=8),
           st.floats(min_value=1e-3, max_value=1e3))
    def test_scale_invariance(self, components, lam):
        a = vec(*components)
        b = vec(*reversed(components))
        assert cosine(lam * a, b) == pytest.approx(cosine(a, b), abs=1e-6)

    @given(st.lists(finite_floats, min_size=2, max_size=8), st.data())
    def test_range(self, a_components, data):
        a = vec(*a_components)
        b = vec(*data.draw(st.lists(finite_floats, min_size=len(a), max_size=len(a))))
        assert -1 - 1e-6 <= cosine(a, b) <= 1 + 1e-6


class TestScoreAll:
    def test_self_similarity(self):
        store = load_embeddings(FIXTURES / "embeddings.jsonl")
        key, qvec = next(iter(store.entries.items()))
        scores = score_all(qvec, store)
        assert scores[key] == pytest.approx(1.0, abs=1e-6)

    def test_orthogonal_basis(self):
        entries = {f"e#{i}": np.eye(4, dtype=np.float32)[i] for i in range(4)}
        store = EmbeddingStore(model_id="m", dim=4, entries=entries)
        scores = score_all(np.eye(4, dtype=np.float32)[0], store)
        assert scores["e#0"] == pytest.approx(1.0)
        assert all(scores[f"e#{i}"] == 0.0 for i in range(1, 4))

    def test_matches_brute_force_loop(self):
        store = load_embeddings(FIXTURES / "embeddings.jsonl")
        qvec = store.entries["q1#no-qr"]
        scores = score_all(qvec, store)
        expected = {key: cosine(qvec, v) for key, v in store.entries.items()}
        assert scores == expected

    def test_query_dim_mismatch(self):
        store = load_embeddings(FIXTURES / "embeddings.jsonl")
        with pytest.raises(DimMismatch):
            score_all(vec(1, 0), store)


class TestFileProvider:
    def test_registered_lookup(self):
        store = load_embeddings(FIXTURES / "embeddings.jsonl")
        provider = FileEmbeddingProvider(store)
        provider.register("the rendered query", "q1#no-qr")
        assert np.array_equal(provider.embed("the rendered query"), store.entries["q1#no-qr"])

    def test_unknown_text(self):
        store = load_embeddings(FIXTURES / "embeddings.jsonl")
        with pytest.raises(NotPrecomputed):
            FileEmbeddingProvider(store).embed("never registered")
