"""Validation scoring: per-category F1 and the macro average.

Small and self-contained on purpose: the trainer talks to the pipeline
package only through files, so it carries its own copy of the metric it
selects checkpoints by.
"""

from __future__ import annotations

from typing import Sequence

Bits = tuple[int, int, int]


def per_category_f1(
    preds: Sequence[Bits], golds: Sequence[Bits], zero_division: float = 0.0
) -> tuple[float, float, float]:
    if len(preds) != len(golds):
        raise ValueError(f"length mismatch: {len(preds)} predictions, {len(golds)} golds")
    scores = []
    for cat in range(3):
        tp = sum(1 for p, g in zip(preds, golds) if p[cat] == 1 and g[cat] == 1)
        fp = sum(1 for p, g in zip(preds, golds) if p[cat] == 1 and g[cat] == 0)
        fn = sum(1 for p, g in zip(preds, golds) if p[cat] == 0 and g[cat] == 1)
        precision = tp / (tp + fp) if tp + fp else zero_division
        recall = tp / (tp + fn) if tp + fn else zero_division
        if precision + recall:
            scores.append(2 * precision * recall / (precision + recall))
        else:
            scores.append(zero_division)
    return tuple(scores)


def macro_f1(f1s: Sequence[float]) -> float:
    if len(f1s) != 3:
        raise ValueError(f"expected 3 per-category scores, got {len(f1s)}")
    return sum(f1s) / 3
