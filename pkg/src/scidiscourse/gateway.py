"""Chat-completion client with caching, mock transports, and batch fan-out.

The network surface is the OpenAI-style ``/chat/completions`` endpoint.
Every exchange is keyed by (model, temperature, prompt digest) and
stored in an append-only JSONL cache, so rerunning a finished batch
performs no network calls at all.  Partial batches persist what they got
and a rerun fills only the gaps.  Transports count their completions,
which makes those properties checkable in tests.

Mock transports stand in for the real endpoint during offline runs:

* ``constant`` always answers with one fixed label vector,
* ``echo_fixture`` answers with the gold labels of the tweet being
  classified, looked up in a fixture keyed by tweet index,
* ``nearest_shot_labels`` answers with the labels of the most similar
  retrieved example, read back out of the rendered prompt.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import logging
import os
import threading
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Protocol, Sequence

from . import wire
from .corpus import Dataset, LabelVector, Tweet
from .prompting import (
    ParseFailure,
    PromptTemplate,
    RenderedPrompt,
    parse_label_response,
    render_few_shot,
    render_zero_shot,
)
from .retrieval import EmbeddingProvider, ExampleIndex, ScoredExample

log = logging.getLogger(__name__)

FALLBACK_LABELS = LabelVector(0, 0, 0)
MOCK_BEHAVIORS = ("constant", "echo_fixture", "nearest_shot_labels")


class GatewayError(Exception):
    """Raised for transport, cache, or mock configuration problems."""


class TweetRequestError(GatewayError):
    """A single tweet's request failed after exhausting retries."""

    def __init__(self, tweet_index: int, message: str):
        super().__init__(f"tweet {tweet_index}: {message}")
        self.tweet_index = tweet_index


@dataclass(frozen=True)
class LlmConfig:
    """Connection and decoding settings for one classification run."""

    model_name: str
    temperature: float = 0.0
    max_output_tokens: int = 128
    timeout: float = 30.0
    max_retries: int = 3
    parallelism: int = 4
    base_url: str | None = None
    api_key: str | None = None

    def __post_init__(self) -> None:
        if not self.model_name:
            raise GatewayError("model name is empty")
        if self.temperature < 0:
            raise GatewayError(f"temperature must be >= 0, got {self.temperature}")
        if self.max_output_tokens < 1:
            raise GatewayError(f"max_output_tokens must be positive, got {self.max_output_tokens}")
        if self.timeout <= 0:
            raise GatewayError(f"timeout must be positive, got {self.timeout}")
        if self.max_retries < 0:
            raise GatewayError(f"max_retries must be >= 0, got {self.max_retries}")
        if self.parallelism < 1:
            raise GatewayError(f"parallelism must be >= 1, got {self.parallelism}")

    def resolved_base_url(self) -> str:
        return self.base_url or os.environ.get("OPENAI_BASE_URL") or wire.DEFAULT_BASE_URL

    def resolved_api_key(self) -> str:
        key = self.api_key or os.environ.get("OPENAI_API_KEY")
        if not key:
            raise wire.AuthenticationError("no API key: pass api_key or set OPENAI_API_KEY")
        return key


def cache_key(model_name: str, temperature: float, prompt_hash: str) -> str:
    """Stable digest identifying one (model, settings, prompt) exchange."""
    material = f"{model_name}\x00{temperature!r}\x00{prompt_hash}"
    return hashlib.sha256(material.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CacheEntry:
    key: str
    model: str
    temperature: float
    prompt_hash: str
    response: str
    created_at: str

    def to_dict(self) -> dict:
        return {
            "key": self.key,
            "model": self.model,
            "temperature": self.temperature,
            "prompt_hash": self.prompt_hash,
            "response": self.response,
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CacheEntry":
        try:
            return cls(
                key=data["key"],
                model=data["model"],
                temperature=float(data["temperature"]),
                prompt_hash=data["prompt_hash"],
                response=data["response"],
                created_at=data["created_at"],
            )
        except (KeyError, TypeError, ValueError) as err:
            raise GatewayError(f"malformed cache entry: {err}") from err


class ResponseCache:
    """Append-only JSONL store of raw model responses.

    Later entries for the same key win, so a retried exchange simply
    shadows the earlier line.  Writes are flushed per entry and guarded
    by a lock; the batch runner calls ``put`` from worker threads.
    """

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self._entries: dict[str, CacheEntry] = {}
        self._lock = threading.Lock()
        if self.path.exists():
            self._load()

    def _load(self) -> None:
        with self.path.open("r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    data = json.loads(line)
                except json.JSONDecodeError as err:
                    raise GatewayError(f"{self.path}:{lineno}: corrupt cache line: {err}") from err
                entry = CacheEntry.from_dict(data)
                self._entries[entry.key] = entry

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, key: str) -> CacheEntry | None:
        with self._lock:
            return self._entries.get(key)

    def put(self, entry: CacheEntry) -> None:
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry.to_dict()) + "\n")
                fh.flush()
            self._entries[entry.key] = entry


@dataclass(frozen=True)
class ChatCall:
    """One completion request as handed to a transport."""

    tweet_index: int
    system_text: str
    user_text: str


class ChatTransport(Protocol):
    """Turns a chat call into the model's raw text reply."""

    calls: int

    def complete(self, call: ChatCall, config: LlmConfig) -> str: ...


class HttpChatTransport:
    """Real endpoint speaking the chat-completions wire format."""

    def __init__(self) -> None:
        self.calls = 0
        self._lock = threading.Lock()

    def complete(self, call: ChatCall, config: LlmConfig) -> str:
        url = config.resolved_base_url().rstrip("/") + "/chat/completions"
        payload = {
            "model": config.model_name,
            "temperature": config.temperature,
            "max_tokens": config.max_output_tokens,
            "messages": [
                {"role": "system", "content": call.system_text},
                {"role": "user", "content": call.user_text},
            ],
        }
        headers = {"Authorization": f"Bearer {config.resolved_api_key()}"}
        with self._lock:
            self.calls += 1
        data = wire.post_json(
            url,
            payload,
            headers=headers,
            timeout=config.timeout,
            max_retries=config.max_retries,
        )
        try:
            content = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as err:
            raise GatewayError(f"chat response missing choices[0].message.content: {err}") from err
        if not isinstance(content, str):
            raise GatewayError(f"chat response content is {type(content).__name__}, expected str")
        return content


class MockChatTransport:
    """In-process stand-in for the chat endpoint.

    ``delay_fn`` runs before each reply and exists so concurrency tests
    can stagger completions.
    """

    def __init__(
        self,
        behavior: str,
        *,
        constant_labels: LabelVector | None = None,
        fixture_labels: Mapping[int, LabelVector] | None = None,
        delay_fn: Callable[[ChatCall], None] | None = None,
    ) -> None:
        if behavior not in MOCK_BEHAVIORS:
            raise GatewayError(f"unknown mock behavior {behavior!r}, expected one of {MOCK_BEHAVIORS}")
        if behavior == "constant" and constant_labels is None:
            raise GatewayError("constant mock needs constant_labels")
        if behavior == "echo_fixture" and fixture_labels is None:
            raise GatewayError("echo_fixture mock needs fixture_labels")
        self.behavior = behavior
        self.constant_labels = constant_labels
        self.fixture_labels = dict(fixture_labels) if fixture_labels is not None else None
        self.delay_fn = delay_fn
        self.calls = 0
        self._lock = threading.Lock()

    def complete(self, call: ChatCall, config: LlmConfig) -> str:
        with self._lock:
            self.calls += 1
        if self.delay_fn is not None:
            self.delay_fn(call)
        if self.behavior == "constant":
            assert self.constant_labels is not None
            return self.constant_labels.serialize()
        if self.behavior == "echo_fixture":
            assert self.fixture_labels is not None
            labels = self.fixture_labels.get(call.tweet_index)
            if labels is None:
                raise GatewayError(f"echo fixture has no labels for tweet {call.tweet_index}")
            return labels.serialize()
        return self._nearest_shot_reply(call)

    def _nearest_shot_reply(self, call: ChatCall) -> str:
        # Shots are rendered most similar first, so the first Labels line
        # in the prompt belongs to the nearest neighbour.
        for line in call.user_text.splitlines():
            if line.startswith("Labels: "):
                return line[len("Labels: "):]
        raise GatewayError(
            f"nearest_shot_labels mock got a prompt without shots for tweet {call.tweet_index}"
        )


def mock_llm(
    behavior: str,
    *,
    constant_labels: LabelVector | None = None,
    fixture_labels: Mapping[int, LabelVector] | None = None,
    delay_fn: Callable[[ChatCall], None] | None = None,
) -> MockChatTransport:
    """Build a mock transport; see ``MockChatTransport`` for behaviors."""
    return MockChatTransport(
        behavior,
        constant_labels=constant_labels,
        fixture_labels=fixture_labels,
        delay_fn=delay_fn,
    )


@dataclass(frozen=True)
class LlmPrediction:
    """Outcome of classifying one tweet over the LLM route.

    ``parse_ok`` false means the raw response yielded no label vector
    and ``labels`` is the all-zero fallback.
    """

    tweet_index: int
    labels: LabelVector
    raw_response: str
    parse_ok: bool
    from_cache: bool
    prompt_hash: str
    shot_indices: tuple[int, ...] = ()


@dataclass(frozen=True)
class TweetFailure:
    """A tweet whose request could not be completed."""

    tweet_index: int
    error: str


@dataclass(frozen=True)
class BatchResult:
    predictions: tuple[LlmPrediction, ...]
    failures: tuple[TweetFailure, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.failures


def _utc_now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _complete_prompt(
    tweet: Tweet,
    prompt: RenderedPrompt,
    config: LlmConfig,
    transport: ChatTransport,
    cache: ResponseCache | None,
) -> LlmPrediction:
    key = cache_key(config.model_name, config.temperature, prompt.content_hash)
    cached = cache.get(key) if cache is not None else None
    if cached is not None:
        raw = cached.response
        from_cache = True
    else:
        call = ChatCall(
            tweet_index=tweet.index, system_text=prompt.system_text, user_text=prompt.user_text
        )
        try:
            raw = transport.complete(call, config)
        except wire.AuthenticationError:
            raise
        except (wire.WireError, GatewayError) as err:
            raise TweetRequestError(tweet.index, str(err)) from err
        from_cache = False
        if cache is not None:
            cache.put(
                CacheEntry(
                    key=key,
                    model=config.model_name,
                    temperature=config.temperature,
                    prompt_hash=prompt.content_hash,
                    response=raw,
                    created_at=_utc_now(),
                )
            )
    parsed = parse_label_response(raw)
    if isinstance(parsed, ParseFailure):
        log.warning(
            "tweet %d: unparseable response (%s), falling back to all-zero",
            tweet.index,
            parsed.reason,
        )
        labels, parse_ok = FALLBACK_LABELS, False
    else:
        labels, parse_ok = parsed, True
    return LlmPrediction(
        tweet_index=tweet.index,
        labels=labels,
        raw_response=raw,
        parse_ok=parse_ok,
        from_cache=from_cache,
        prompt_hash=prompt.content_hash,
        shot_indices=prompt.shot_indices,
    )


def classify_tweet(
    tweet: Tweet,
    config: LlmConfig,
    transport: ChatTransport,
    cache: ResponseCache | None = None,
    *,
    template: PromptTemplate,
    shots: Sequence[ScoredExample] | None = None,
) -> LlmPrediction:
    """Classify one tweet, consulting the cache before the transport.

    ``shots`` selects the few-shot prompt; ``None`` renders zero-shot.
    An unparseable response does not fail the tweet: the prediction
    falls back to the all-zero vector with ``parse_ok`` unset.  Request
    failures raise :class:`TweetRequestError`; authentication failures
    propagate untouched so batch callers can abort early.
    """
    if shots is None:
        prompt = render_zero_shot(template, tweet.text)
    else:
        prompt = render_few_shot(template, tweet.text, shots)
    return _complete_prompt(tweet, prompt, config, transport, cache)


def classify_batch(
    dataset: Dataset,
    index: ExampleIndex | None,
    config: LlmConfig,
    transport: ChatTransport,
    cache: ResponseCache | None = None,
    *,
    template: PromptTemplate,
    provider: EmbeddingProvider | None = None,
    k: int = 5,
) -> BatchResult:
    """Classify every tweet of a dataset concurrently, in dataset order.

    Shots are retrieved up front, excluding each tweet's own index so a
    run over the shot corpus itself stays leave-one-out.  ``k=0`` sends
    zero-shot prompts and needs no index.  Per-tweet request failures
    are collected and the rest of the batch continues; authentication
    failures abort the whole batch since every remaining request would
    fail the same way.
    """
    if k < 0:
        raise GatewayError(f"k must be >= 0, got {k}")
    if k > 0 and (index is None or provider is None):
        raise GatewayError(f"{k}-shot classification needs an example index and embedding provider")
    records = list(dataset)
    if not records:
        return BatchResult(predictions=())

    prompts: list[RenderedPrompt] = []
    for record in records:
        tweet = record.tweet
        if k > 0:
            assert index is not None and provider is not None
            scored = index.top_k(tweet.text, k, provider, exclude_indices=(tweet.index,))
            prompts.append(render_few_shot(template, tweet.text, scored))
        else:
            prompts.append(render_zero_shot(template, tweet.text))

    results: dict[int, LlmPrediction | TweetFailure] = {}
    workers = min(config.parallelism, len(records))
    completed = 0
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {
            pool.submit(_complete_prompt, record.tweet, prompt, config, transport, cache): pos
            for pos, (record, prompt) in enumerate(zip(records, prompts))
        }
        try:
            for future in as_completed(futures):
                pos = futures[future]
                try:
                    results[pos] = future.result()
                except wire.AuthenticationError:
                    raise
                except TweetRequestError as err:
                    log.warning("%s", err)
                    results[pos] = TweetFailure(tweet_index=err.tweet_index, error=str(err))
                completed += 1
                if completed % 25 == 0 or completed == len(records):
                    log.info("classified %d/%d tweets", completed, len(records))
        except wire.AuthenticationError:
            # Every other request carries the same credentials; stop now.
            for f in futures:
                f.cancel()
            raise

    predictions = []
    failures = []
    for pos in range(len(records)):
        outcome = results[pos]
        if isinstance(outcome, LlmPrediction):
            predictions.append(outcome)
        else:
            failures.append(outcome)
    return BatchResult(predictions=tuple(predictions), failures=tuple(failures))
