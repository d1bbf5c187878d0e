"""Batch inference and the predictions TSV export.

The export uses the ensemble pipeline's transformer layout: an index
column, three sigmoid probabilities, three thresholded labels. Labels
are derived from the probabilities exactly as written to the file
(clamped into the open unit interval, then rounded to 6 decimals), so
the two column groups can never disagree after a round-trip.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import torch

from .data import Example
from .model import Checkpoint, TextClassifier

TSV_HEADER = (
    "index",
    "prob_cat1", "prob_cat2", "prob_cat3",
    "label_cat1", "label_cat2", "label_cat3",
)

# Keeps every exported probability strictly inside (0, 1) at 6 decimals.
_PROB_FLOOR = 1e-6
_PROB_CEIL = 1.0 - 1e-6


def quantize_probability(p: float) -> float:
    return float(f"{min(max(p, _PROB_FLOOR), _PROB_CEIL):.6f}")


def labels_for(probs: Sequence[float], threshold: float) -> tuple[int, int, int]:
    """Inclusive thresholding: a probability equal to the cutoff is positive."""
    return tuple(int(p >= threshold) for p in probs)


def predict_probabilities(
    classifier: TextClassifier,
    tokenizer,
    texts: Sequence[str],
    *,
    max_length: int,
    batch_size: int = 32,
) -> list[tuple[float, float, float]]:
    """Quantized per-category probabilities for each text, in order."""
    classifier.eval()
    rows: list[tuple[float, float, float]] = []
    with torch.no_grad():
        for start in range(0, len(texts), batch_size):
            batch = list(texts[start : start + batch_size])
            encoded = tokenizer(
                batch, padding=True, truncation=True, max_length=max_length,
                return_tensors="pt",
            )
            probs = torch.sigmoid(classifier(**encoded))
            for row in probs.tolist():
                rows.append(tuple(quantize_probability(p) for p in row))
    return rows


def export_predictions_tsv(
    path: str | Path,
    examples: Sequence[Example],
    probabilities: Sequence[tuple[float, float, float]],
    threshold: float,
) -> None:
    """Write predictions sorted by tweet index, one row per example."""
    if len(examples) != len(probabilities):
        raise ValueError(
            f"got {len(probabilities)} probability rows for {len(examples)} examples"
        )
    rows = sorted(zip(examples, probabilities), key=lambda pair: pair[0].index)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        handle.write("\t".join(TSV_HEADER) + "\n")
        for example, probs in rows:
            labels = labels_for(probs, threshold)
            fields = [str(example.index)]
            fields.extend(f"{p:.6f}" for p in probs)
            fields.extend(str(b) for b in labels)
            handle.write("\t".join(fields) + "\n")


def run_prediction(
    checkpoint: Checkpoint,
    examples: Sequence[Example],
    out_path: str | Path,
    *,
    threshold: float | None = None,
    batch_size: int = 32,
) -> list[tuple[float, float, float]]:
    """Load a checkpoint, classify every example, export the TSV."""
    classifier, tokenizer = checkpoint.load()
    probabilities = predict_probabilities(
        classifier, tokenizer, [e.text for e in examples],
        max_length=checkpoint.max_length, batch_size=batch_size,
    )
    export_predictions_tsv(
        out_path, examples, probabilities,
        checkpoint.threshold if threshold is None else threshold,
    )
    return probabilities
