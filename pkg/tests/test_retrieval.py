"""Embedding providers and exact cosine top-k, checked against a scan oracle."""

from __future__ import annotations

import json
import math
import random

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from scidiscourse import (
    ExampleIndex,
    HashEmbeddingProvider,
    IndexFormatError,
    RemoteEmbeddingProvider,
    RetrievalError,
    build_index,
    hash_provider,
)
from scidiscourse import retrieval, wire
from tests.conftest import make_dataset


def scan_oracle(index, query_text, k, provider, exclude=()):
    """Exhaustive cosine scan in plain Python, independent of the index math.

    Returns [(tweet_index, similarity)] sorted by similarity descending,
    ties by ascending tweet index.
    """
    raw_q = provider.embed([query_text])[0]
    qn = math.sqrt(sum(float(x) * float(x) for x in raw_q))
    q = [float(x) / qn for x in raw_q]
    scored = []
    for entry in index.entries:
        if entry.tweet.index in exclude:
            continue
        sim = math.fsum(float(a) * b for a, b in zip(entry.vector, q))
        scored.append((entry.tweet.index, sim))
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored[:k]


def assert_topk_matches(got, want, eps=1e-9):
    """Compare a top-k result against the oracle ranking.

    Exact ties can be summed in a different order by the two
    implementations, so ranks whose oracle similarities are within eps
    of each other may legitimately swap; everything else must align.
    """
    assert len(got) == len(want)
    for s, (_, sim) in zip(got, want):
        assert s.similarity == pytest.approx(sim, abs=eps)
    got_ids = [s.example.tweet.index for s in got]
    pos = 0
    while pos < len(want):
        end = pos + 1
        while end < len(want) and abs(want[end][1] - want[pos][1]) <= eps:
            end += 1
        assert sorted(got_ids[pos:end]) == sorted(i for i, _ in want[pos:end]), (
            f"ranks {pos}..{end - 1} disagree beyond tie noise"
        )
        pos = end


def word_corpus(n, rng):
    vocab = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta", "iota", "kappa"]
    rows = []
    for i in range(n):
        text = " ".join(rng.choice(vocab) for _ in range(rng.randint(1, 12)))
        rows.append((i, text, [rng.randint(0, 1) for _ in range(3)]))
    return make_dataset(rows)


class TestHashProvider:
    def test_name_and_dimension(self):
        p = hash_provider(64)
        assert p.name == "hash-sha256"
        assert p.dimension == 64

    def test_deterministic_across_instances(self):
        a = HashEmbeddingProvider(dimension=32).embed(["some tweet text"])
        b = HashEmbeddingProvider(dimension=32).embed(["some tweet text"])
        np.testing.assert_array_equal(a, b)

    def test_index_stores_unit_norm_vectors(self, train_ds):
        index = build_index(train_ds, hash_provider(48))
        for entry in index.entries:
            assert np.linalg.norm(entry.vector) == pytest.approx(1.0, abs=1e-9)

    def test_token_multiplicity_changes_magnitude_not_direction(self):
        p = hash_provider(48)
        single = p.embed(["alpha"])[0]
        double = p.embed(["alpha alpha"])[0]
        np.testing.assert_allclose(double, 2 * single, atol=1e-12)

    def test_tokenization_insensitive_to_case_and_punctuation(self):
        p = hash_provider(64)
        a = p.embed(["Science is great!"])[0]
        b = p.embed(["science is GREAT"])[0]
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_no_tokens_rejected_at_use(self):
        ds = make_dataset([(1, "...", [1, 0, 0])])
        with pytest.raises(RetrievalError):
            build_index(ds, hash_provider(16))


class TestRemoteProvider:
    def test_name_embeds_model(self):
        p = RemoteEmbeddingProvider("text-embedding-3-small", 256, api_key="k")
        assert p.name == "remote:text-embedding-3-small"

    def test_requires_api_key(self, monkeypatch):
        monkeypatch.delenv("OPENAI_API_KEY", raising=False)
        p = RemoteEmbeddingProvider("m", 4)
        with pytest.raises(wire.AuthenticationError):
            p.embed(["hello"])

    def test_parses_endpoint_payload(self, monkeypatch):
        seen = {}

        def fake_post(url, payload, *, headers, timeout, max_retries):
            seen["url"] = url
            seen["payload"] = payload
            return {
                "data": [
                    {"index": 1, "embedding": [0.0, 1.0]},
                    {"index": 0, "embedding": [1.0, 0.0]},
                ]
            }

        monkeypatch.setattr(wire, "post_json", fake_post)
        p = RemoteEmbeddingProvider("m", 2, api_key="k", base_url="http://x")
        out = p.embed(["a", "b"])
        assert seen["url"] == "http://x/embeddings"
        assert seen["payload"] == {"model": "m", "input": ["a", "b"]}
        np.testing.assert_array_equal(out, [[1.0, 0.0], [0.0, 1.0]])

    def test_count_mismatch_rejected(self, monkeypatch):
        monkeypatch.setattr(wire, "post_json", lambda *a, **k: {"data": []})
        p = RemoteEmbeddingProvider("m", 2, api_key="k", base_url="http://x")
        with pytest.raises(RetrievalError, match="0 vectors for 1 inputs"):
            p.embed(["a"])


class TestTopK:
    def test_matches_scan_oracle_on_random_corpora(self):
        rng = random.Random(11)
        provider = hash_provider(64)
        for _ in range(25):
            ds = word_corpus(rng.randint(1, 60), rng)
            index = build_index(ds, provider)
            query = " ".join(rng.choice(["alpha", "beta", "nu", "xi"]) for _ in range(5))
            k = rng.randint(1, len(ds) + 3)
            got = index.top_k(query, k, provider)
            want = scan_oracle(index, query, k, provider)
            assert_topk_matches(got, want)

    def test_matches_scan_oracle_on_two_thousand_entries(self):
        rng = random.Random(13)
        provider = hash_provider(32)
        ds = word_corpus(2000, rng)
        index = build_index(ds, provider)
        got = index.top_k("alpha beta gamma", 10, provider)
        want = scan_oracle(index, "alpha beta gamma", 10, provider)
        assert_topk_matches(got, want)

    def test_self_retrieval_rank_one(self, train_ds):
        provider = hash_provider(256)
        index = build_index(train_ds, provider)
        for rec in train_ds:
            top = index.top_k(rec.tweet.text, 1, provider)
            assert top[0].example.tweet.index == rec.tweet.index
            assert top[0].similarity == pytest.approx(1.0, abs=1e-9)

    def test_k_larger_than_index_truncates(self):
        ds = make_dataset([(1, "alpha", [1, 0, 0]), (2, "beta", [0, 0, 1])])
        provider = hash_provider(16)
        index = build_index(ds, provider)
        assert len(index.top_k("alpha", 10, provider)) == 2

    def test_exclude_indices(self):
        ds = make_dataset([(1, "alpha beta", [1, 0, 0]), (2, "alpha beta", [0, 0, 1])])
        provider = hash_provider(16)
        index = build_index(ds, provider)
        got = index.top_k("alpha beta", 1, provider, exclude_indices=[1])
        assert got[0].example.tweet.index == 2

    def test_tie_breaks_on_ascending_index(self):
        ds = make_dataset([(9, "same words", [1, 0, 0]), (3, "same words", [0, 0, 1])])
        provider = hash_provider(16)
        index = build_index(ds, provider)
        got = index.top_k("same words", 2, provider)
        assert [s.example.tweet.index for s in got] == [3, 9]

    def test_empty_index_rejected(self):
        index = ExampleIndex("hash-sha256", 16, [])
        with pytest.raises(RetrievalError, match="empty index"):
            index.top_k("x", 1, hash_provider(16))

    def test_k_below_one_rejected(self, train_ds):
        provider = hash_provider(16)
        index = build_index(train_ds, provider)
        with pytest.raises(RetrievalError, match="k must be"):
            index.top_k("x", 0, provider)

    def test_provider_mismatch_rejected(self, train_ds):
        index = build_index(train_ds, hash_provider(16))
        with pytest.raises(RetrievalError, match="provider mismatch"):
            index.top_k("x", 1, hash_provider(32))

    @settings(max_examples=40, deadline=None)
    @given(
        texts=st.lists(
            st.text(alphabet="abcdef ", min_size=1, max_size=20).filter(str.strip),
            min_size=1,
            max_size=15,
            unique=True,
        ),
        query=st.text(alphabet="abcdef ", min_size=1, max_size=20).filter(str.strip),
        k1=st.integers(1, 6),
        k2=st.integers(1, 6),
    )
    def test_k_prefix_monotonicity(self, texts, query, k1, k2):
        ds = make_dataset([(i, t, [1, 0, 0]) for i, t in enumerate(texts)])
        provider = hash_provider(32)
        try:
            index = build_index(ds, provider)
            lo, hi = sorted((k1, k2))
            short = index.top_k(query, lo, provider)
            long = index.top_k(query, hi, provider)
        except RetrievalError:
            # Tokens can hash into cancelling buckets, leaving a zero
            # vector that the index rightly refuses; not this property.
            assume(False)
        assert [s.example.tweet.index for s in short] == [
            s.example.tweet.index for s in long
        ][: len(short)]


class TestBuildIndex:
    def test_rejects_unlabeled_records(self):
        ds = make_dataset([(1, "hello there", None)], split="eval")
        with pytest.raises(RetrievalError, match="no labels"):
            build_index(ds, hash_provider(16))

    def test_auth_errors_pass_through(self, train_ds):
        class FailingProvider:
            name = "hash-sha256"
            dimension = 16

            def embed(self, texts):
                raise wire.AuthenticationError("bad key")

        with pytest.raises(wire.AuthenticationError):
            build_index(train_ds, FailingProvider())

    def test_other_embed_errors_wrapped(self, train_ds):
        class FailingProvider:
            name = "hash-sha256"
            dimension = 16

            def embed(self, texts):
                raise RuntimeError("boom")

        with pytest.raises(RetrievalError, match="embedding failed"):
            build_index(train_ds, FailingProvider())


class TestPersistence:
    def test_save_load_round_trip(self, train_ds, tmp_path):
        provider = hash_provider(64)
        index = build_index(train_ds, provider)
        path = tmp_path / "train.index"
        index.save(path)
        loaded = ExampleIndex.load(path)
        assert loaded.provider_name == index.provider_name
        assert loaded.dimension == index.dimension
        assert len(loaded) == len(index)
        a = index.top_k("gut bacteria research", 5, provider)
        b = loaded.top_k("gut bacteria research", 5, provider)
        assert [s.example.tweet.index for s in a] == [s.example.tweet.index for s in b]
        for x, y in zip(a, b):
            assert x.similarity == pytest.approx(y.similarity, abs=1e-12)

    def test_header_format_is_versioned(self, train_ds, tmp_path):
        index = build_index(train_ds, hash_provider(16))
        path = tmp_path / "x.index"
        index.save(path)
        header = json.loads(path.read_text(encoding="utf-8").splitlines()[0])
        assert header["format"] == retrieval.INDEX_FORMAT
        assert header["provider"] == "hash-sha256"
        assert header["count"] == len(train_ds)

    def test_unknown_format_rejected(self, tmp_path):
        path = tmp_path / "bad.index"
        path.write_text('{"format": "something-else/9", "dimension": 4, "count": 0}\n')
        with pytest.raises(IndexFormatError, match="unknown index format"):
            ExampleIndex.load(path)

    def test_corrupt_row_names_line(self, train_ds, tmp_path):
        index = build_index(train_ds, hash_provider(16))
        path = tmp_path / "x.index"
        index.save(path)
        lines = path.read_text(encoding="utf-8").splitlines()
        lines[3] = "{not json"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(IndexFormatError, match=r":4:"):
            ExampleIndex.load(path)

    def test_non_unit_vector_rejected(self, tmp_path):
        header = {"format": retrieval.INDEX_FORMAT, "provider": "hash-sha256", "dimension": 2, "count": 1}
        row = {"index": 1, "text": "x", "labels": [1.0, 0.0, 0.0], "vector": [3.0, 4.0]}
        path = tmp_path / "x.index"
        path.write_text(json.dumps(header) + "\n" + json.dumps(row) + "\n")
        with pytest.raises(IndexFormatError, match="unit-normalized"):
            ExampleIndex.load(path)

    def test_count_mismatch_rejected(self, tmp_path):
        header = {"format": retrieval.INDEX_FORMAT, "provider": "hash-sha256", "dimension": 2, "count": 5}
        path = tmp_path / "x.index"
        path.write_text(json.dumps(header) + "\n")
        with pytest.raises(IndexFormatError, match="declares 5 entries, found 0"):
            ExampleIndex.load(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(IndexFormatError, match="not found"):
            ExampleIndex.load(tmp_path / "absent.index")
