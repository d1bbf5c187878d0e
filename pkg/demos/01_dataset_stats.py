"""Walk through dataset loading and label-distribution statistics."""

from pathlib import Path

from scidiscourse import audit_dependency, compute_stats, load_dataset

ROOT = Path(__file__).resolve().parent.parent

# A dataset is a TSV with an index, the tweet text, and (on labeled
# splits) a bracketed 3-element label list.
dataset = load_dataset(ROOT / "sample_data" / "train.tsv", "train")
print(f"loaded {len(dataset.records)} tweets from the {dataset.split} split")
first = dataset.records[0]
print(f"first record: #{first.tweet.index} {first.tweet.text!r}")
print(f"its labels: {first.labels.serialize()}")

# The stats report counts each category, the all-negative remainder,
# and the seven exclusive overlap regions.
report = compute_stats(dataset)
print(f"\nper-category counts: {report.per_category_counts}")
print(f"tweets with no category at all: {report.none_count}")
for region, count in report.venn_region_counts.items():
    print(f"  claim/reference/entity bits {region}: {count}")

# A study reference should always come with a science-entity mention.
# The audit reports rows violating that, without touching the data.
violations = audit_dependency(dataset)
print(f"\nreference-without-entity violations: {len(violations)}")
