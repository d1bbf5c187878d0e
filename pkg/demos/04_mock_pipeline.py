"""Run the full ensemble pipeline offline with a mocked chat endpoint."""

import tempfile
from pathlib import Path

from scidiscourse import (
    LlmConfig,
    PromptTemplate,
    ResponseCache,
    build_index,
    hash_provider,
    load_dataset,
    load_transformer_predictions,
    mock_llm,
    run_pipeline,
)

ROOT = Path(__file__).resolve().parent.parent

# The ensemble routes the claim and entity categories to transformer
# predictions and the study-reference category to a retrieval-augmented
# chat model. Here the chat side is a mock that echoes the gold labels,
# so the run needs no network and no credentials.
dev = load_dataset(ROOT / "sample_data" / "dev.tsv", "dev")
train = load_dataset(ROOT / "sample_data" / "train.tsv", "train")
transformer = load_transformer_predictions(ROOT / "sample_data" / "dev_transformer.tsv")

provider = hash_provider()
index = build_index(train, provider)
gold = {r.tweet.index: r.labels for r in dev.records}
transport = mock_llm("echo_fixture", fixture_labels=gold)

with tempfile.TemporaryDirectory() as tmp:
    cache = ResponseCache(Path(tmp) / "responses.jsonl")
    result = run_pipeline(
        dev,
        transformer,
        index=index,
        provider=provider,
        template=PromptTemplate.load_default(),
        config=LlmConfig(model_name="mock-model"),
        transport=transport,
        cache=cache,
        k=5,
    )
    print(f"classified {len(result.rows)} tweets with model {result.model!r}, "
          f"k={result.k} shots")
    print(f"failures: {len(result.failed_indices)}, "
          f"parse failures: {result.parse_failures}, "
          f"cache hits: {result.cache_hits}")

    # Show a tweet where the chat route matters: the fused verdict takes
    # its middle (study-reference) bit from the chat side.
    row = next(r for r in result.rows if r.llm.as_tuple()[1] == 1)
    print(f"\ntweet #{row.tweet_index}:")
    print(f"  transformer said {row.transformer.serialize()}")
    print(f"  chat model said  {row.llm.serialize()}")
    print(f"  fused verdict    {row.fused.serialize()}")

    # Rerunning the same batch is answered entirely from the response
    # cache, so a completed run can be repeated for free.
    again = run_pipeline(
        dev,
        transformer,
        index=index,
        provider=provider,
        template=PromptTemplate.load_default(),
        config=LlmConfig(model_name="mock-model"),
        transport=transport,
        cache=cache,
        k=5,
    )
    print(f"\nrerun cache hits: {again.cache_hits} of {len(again.rows)}")
