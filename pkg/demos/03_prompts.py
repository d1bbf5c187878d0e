"""Render the zero-shot and few-shot classification prompts."""

from pathlib import Path

from scidiscourse import (
    PromptTemplate,
    build_index,
    hash_provider,
    load_dataset,
    render_few_shot,
    render_zero_shot,
)

ROOT = Path(__file__).resolve().parent.parent

# The template ships with the package; the checksums pin its exact
# bytes so any edit is visible in run manifests.
template = PromptTemplate.load_default()
for name, digest in template.checksums().items():
    print(f"{name}: {digest[:16]}...")

tweet = "Excited to share our new preprint on CRISPR off-target effects!"

# Zero-shot: just the instructions and the tweet.
zero = render_zero_shot(template, tweet)
print(f"\n--- system text ({len(zero.system_text)} chars) ---")
print(zero.system_text[:200] + "...")
print("\n--- zero-shot user text ---")
print(zero.user_text)

# Few-shot: the most similar labeled tweets are spliced in above the
# query, each with its gold labels, under a fixed header line.
train = load_dataset(ROOT / "sample_data" / "train.tsv", "train")
provider = hash_provider()
index = build_index(train, provider)
shots = index.top_k(tweet, 3, provider)
few = render_few_shot(template, tweet, shots)
print(f"--- few-shot user text (shots {few.shot_indices}) ---")
print(few.user_text)
