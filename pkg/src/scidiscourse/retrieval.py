"""Embedding providers and exact cosine top-k retrieval of labeled examples.

The shot corpus is small (about 1.2k tweets), so search is an exhaustive
scan over unit-normalized vectors: exact, deterministic, and trivially
auditable. Providers are pluggable; the hashing provider needs no network
and backs all offline tests, the remote provider speaks an
OpenAI-compatible embeddings endpoint.
"""

from __future__ import annotations

import json
import logging
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from . import wire
from .corpus import Dataset, LabelVector, Tweet

logger = logging.getLogger(__name__)

INDEX_FORMAT = "scidiscourse-index/1"
_TOKEN_RE = re.compile(r"\w+", re.UNICODE)
_HASH_SEED = "token-hash-v1:"


class RetrievalError(Exception):
    """Index construction or lookup failed."""


class IndexFormatError(RetrievalError):
    """A persisted index file is malformed or from an unknown version."""


class EmbeddingProvider(Protocol):
    """Deterministic text-to-vector function with a fixed output dimension."""

    name: str
    dimension: int

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        """Return one raw (not necessarily normalized) vector per text."""
        ...


class HashEmbeddingProvider:
    """Offline provider hashing the lowercased token multiset of a text.

    Each token is mapped through SHA-256 to a bucket and a sign, so
    identical texts give identical vectors on every platform and token
    order never matters.
    """

    def __init__(self, dimension: int = 256):
        if dimension < 8:
            raise RetrievalError(f"hash provider dimension must be >= 8, got {dimension}")
        self.dimension = dimension
        self.name = "hash-sha256"

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        import hashlib

        out = np.zeros((len(texts), self.dimension), dtype=np.float64)
        for row, text in enumerate(texts):
            for token in _TOKEN_RE.findall(text.lower()):
                digest = hashlib.sha256((_HASH_SEED + token).encode("utf-8")).digest()
                bucket = int.from_bytes(digest[:4], "big") % self.dimension
                sign = 1.0 if digest[4] & 1 else -1.0
                out[row, bucket] += sign
        return out


def hash_provider(dimension: int = 256) -> HashEmbeddingProvider:
    """Offline deterministic provider; see :class:`HashEmbeddingProvider`."""
    return HashEmbeddingProvider(dimension)


class RemoteEmbeddingProvider:
    """Client for an OpenAI-compatible ``/embeddings`` endpoint.

    Base URL and API key come from ``OPENAI_BASE_URL`` / ``OPENAI_API_KEY``
    unless given explicitly.
    """

    def __init__(
        self,
        model: str,
        dimension: int,
        *,
        base_url: str | None = None,
        api_key: str | None = None,
        timeout: float = 30.0,
        max_retries: int = 3,
        batch_size: int = 64,
    ):
        self.model = model
        self.dimension = dimension
        self.name = f"remote:{model}"
        self.base_url = (base_url or os.environ.get("OPENAI_BASE_URL") or wire.DEFAULT_BASE_URL).rstrip("/")
        self._api_key = api_key or os.environ.get("OPENAI_API_KEY") or ""
        self.timeout = timeout
        self.max_retries = max_retries
        self.batch_size = batch_size

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        if not self._api_key:
            raise wire.AuthenticationError("OPENAI_API_KEY is not set")
        headers = {"Authorization": f"Bearer {self._api_key}"}
        rows: list[list[float]] = []
        for start in range(0, len(texts), self.batch_size):
            chunk = list(texts[start : start + self.batch_size])
            data = wire.post_json(
                f"{self.base_url}/embeddings",
                {"model": self.model, "input": chunk},
                headers=headers,
                timeout=self.timeout,
                max_retries=self.max_retries,
            )
            items = sorted(data["data"], key=lambda item: item["index"])
            if len(items) != len(chunk):
                raise RetrievalError(
                    f"embeddings endpoint returned {len(items)} vectors for {len(chunk)} inputs"
                )
            rows.extend(item["embedding"] for item in items)
        arr = np.asarray(rows, dtype=np.float64)
        if arr.shape != (len(texts), self.dimension):
            raise RetrievalError(
                f"expected embeddings of dimension {self.dimension}, got shape {arr.shape}"
            )
        return arr


@dataclass(frozen=True)
class EmbeddedExample:
    """A labeled training tweet with its unit-normalized vector."""

    tweet: Tweet
    labels: LabelVector
    vector: np.ndarray


@dataclass(frozen=True)
class ScoredExample:
    example: EmbeddedExample
    similarity: float


def _normalize(vec: np.ndarray, what: str) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if norm == 0.0 or not np.isfinite(norm):
        raise RetrievalError(f"zero or non-finite embedding for {what}; direction undefined")
    return vec / norm


class ExampleIndex:
    """Immutable store of embedded examples supporting exact cosine top-k."""

    def __init__(self, provider_name: str, dimension: int, entries: Sequence[EmbeddedExample]):
        self.provider_name = provider_name
        self.dimension = dimension
        self.entries = tuple(entries)
        if self.entries:
            self._matrix = np.stack([e.vector for e in self.entries])
        else:
            self._matrix = np.zeros((0, dimension), dtype=np.float64)
        self._indices = np.array([e.tweet.index for e in self.entries], dtype=np.int64)

    def __len__(self) -> int:
        return len(self.entries)

    def top_k(
        self,
        query_text: str,
        k: int,
        provider: EmbeddingProvider,
        *,
        exclude_indices: Sequence[int] = (),
    ) -> list[ScoredExample]:
        """The k most cosine-similar stored examples, best first.

        Ties break on ascending tweet index. Fewer than k results are
        returned when the (filtered) index is smaller than k.
        """
        if not self.entries:
            raise RetrievalError("cannot query an empty index")
        if k < 1:
            raise RetrievalError(f"k must be >= 1, got {k}")
        self._check_provider(provider)
        query = _normalize(provider.embed([query_text])[0], "query text")
        sims = self._matrix @ query
        order = np.lexsort((self._indices, -sims))
        excluded = set(exclude_indices)
        results: list[ScoredExample] = []
        for pos in order:
            entry = self.entries[pos]
            if entry.tweet.index in excluded:
                continue
            similarity = min(1.0, max(-1.0, float(sims[pos])))
            results.append(ScoredExample(example=entry, similarity=similarity))
            if len(results) == k:
                break
        return results

    def _check_provider(self, provider: EmbeddingProvider) -> None:
        if provider.name != self.provider_name or provider.dimension != self.dimension:
            raise RetrievalError(
                f"provider mismatch: index was built with {self.provider_name!r} "
                f"(dimension {self.dimension}), got {provider.name!r} "
                f"(dimension {provider.dimension})"
            )

    def save(self, path: str | Path) -> None:
        """Persist as a header line plus one JSON line per example."""
        p = Path(path)
        with p.open("w", encoding="utf-8") as fh:
            header = {
                "format": INDEX_FORMAT,
                "provider": self.provider_name,
                "dimension": self.dimension,
                "count": len(self.entries),
            }
            fh.write(json.dumps(header) + "\n")
            for entry in self.entries:
                row = {
                    "index": entry.tweet.index,
                    "text": entry.tweet.text,
                    "labels": [float(b) for b in entry.labels.as_tuple()],
                    "vector": [float(x) for x in entry.vector],
                }
                fh.write(json.dumps(row) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "ExampleIndex":
        p = Path(path)
        if not p.is_file():
            raise IndexFormatError(f"index file not found: {p}")
        with p.open("r", encoding="utf-8") as fh:
            try:
                header = json.loads(fh.readline())
            except json.JSONDecodeError as err:
                raise IndexFormatError(f"{p}: bad header line: {err}") from None
            if header.get("format") != INDEX_FORMAT:
                raise IndexFormatError(
                    f"{p}: unknown index format {header.get('format')!r}, expected {INDEX_FORMAT!r}"
                )
            dimension = int(header["dimension"])
            entries: list[EmbeddedExample] = []
            for lineno, line in enumerate(fh, start=2):
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                except json.JSONDecodeError as err:
                    raise IndexFormatError(f"{p}:{lineno}: bad record: {err}") from None
                vector = np.asarray(row["vector"], dtype=np.float64)
                if vector.shape != (dimension,):
                    raise IndexFormatError(
                        f"{p}:{lineno}: vector has shape {vector.shape}, expected ({dimension},)"
                    )
                if abs(float(np.linalg.norm(vector)) - 1.0) > 1e-6:
                    raise IndexFormatError(f"{p}:{lineno}: vector is not unit-normalized")
                entries.append(
                    EmbeddedExample(
                        tweet=Tweet(index=int(row["index"]), text=row["text"]),
                        labels=LabelVector.from_values(row["labels"]),
                        vector=vector,
                    )
                )
        if len(entries) != int(header["count"]):
            raise IndexFormatError(
                f"{p}: header declares {header['count']} entries, found {len(entries)}"
            )
        return cls(header["provider"], dimension, entries)


def build_index(
    dataset: Dataset, provider: EmbeddingProvider, *, batch_size: int = 64
) -> ExampleIndex:
    """Embed every labeled record of a dataset into an :class:`ExampleIndex`."""
    for rec in dataset.records:
        if rec.labels is None:
            raise RetrievalError(
                f"tweet {rec.tweet.index} has no labels; shots must carry classifications"
            )
    entries: list[EmbeddedExample] = []
    records = dataset.records
    for start in range(0, len(records), batch_size):
        chunk = records[start : start + batch_size]
        try:
            raw = provider.embed([rec.tweet.text for rec in chunk])
        except (RetrievalError, wire.AuthenticationError):
            raise
        except Exception as err:
            ids = [rec.tweet.index for rec in chunk]
            raise RetrievalError(f"embedding failed for tweets {ids}: {err}") from err
        for rec, vec in zip(chunk, raw):
            assert rec.labels is not None
            entries.append(
                EmbeddedExample(
                    tweet=rec.tweet,
                    labels=rec.labels,
                    vector=_normalize(vec, f"tweet {rec.tweet.index}"),
                )
            )
    logger.debug("built index with %d entries (provider=%s)", len(entries), provider.name)
    return ExampleIndex(provider.name, provider.dimension, entries)
