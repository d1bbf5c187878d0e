"""Build a similarity index over the train split and query it."""

from pathlib import Path

from scidiscourse import build_index, hash_provider, load_dataset

ROOT = Path(__file__).resolve().parent.parent

train = load_dataset(ROOT / "sample_data" / "train.tsv", "train")

# Every labeled tweet is embedded once; queries then score against
# the whole pool with exact cosine similarity. The hashing provider
# is deterministic and fully offline.
provider = hash_provider()
index = build_index(train, provider)
print(f"indexed {len(index)} tweets, embedding dimension {index.dimension}")

query = "New paper published on sleep quality in mice"
print(f"\nquery: {query!r}")
for hit in index.top_k(query, 3, provider):
    print(f"  sim={hit.similarity:.4f} #{hit.example.tweet.index} "
          f"{hit.example.labels.serialize()}  {hit.example.tweet.text[:58]}")

# Querying with an indexed tweet's own text puts that tweet at rank 1
# with similarity 1; excluding its index yields the nearest other one.
probe = train.records[5]
self_hit = index.top_k(probe.tweet.text, 1, provider)[0]
print(f"\nself-retrieval of #{probe.tweet.index}: rank-1 is "
      f"#{self_hit.example.tweet.index} at sim={self_hit.similarity:.4f}")
other = index.top_k(probe.tweet.text, 1, provider,
                    exclude_indices=[probe.tweet.index])[0]
print(f"with itself excluded the nearest neighbour is "
      f"#{other.example.tweet.index} at sim={other.similarity:.4f}")
