"""Per-category precision/recall/F1 and the macro-averaged summary.

The macro score is the unweighted arithmetic mean of the three per-category
F1 values. Any 0/0 quotient is defined as 0 so the metric is total; the
constant is configurable in case an external scorer uses a different
convention. All functions are pure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .corpus import LabelVector

NUM_CATEGORIES = 3
CATEGORY_TITLES = ("Cat1", "Cat2", "Cat3")


class MetricsError(Exception):
    """Inputs cannot be scored (misaligned or incomplete predictions)."""


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class CategoryScores:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class MetricsReport:
    """Scores for the three categories plus their macro average."""

    per_category: tuple[CategoryScores, CategoryScores, CategoryScores]
    counts: tuple[ConfusionCounts, ConfusionCounts, ConfusionCounts]
    macro_f1: float

    def to_dict(self, ndigits: int = 4) -> dict:
        return {
            "per_category": [
                {
                    "category": i + 1,
                    "precision": round(s.precision, ndigits),
                    "recall": round(s.recall, ndigits),
                    "f1": round(s.f1, ndigits),
                    "counts": {"tp": c.tp, "fp": c.fp, "fn": c.fn, "tn": c.tn},
                }
                for i, (s, c) in enumerate(zip(self.per_category, self.counts))
            ],
            "macro_f1": round(self.macro_f1, ndigits),
        }


def confusion(
    preds: Sequence[LabelVector], golds: Sequence[LabelVector], category: int
) -> ConfusionCounts:
    """Contingency counts for one category over aligned prediction/gold pairs."""
    if len(preds) != len(golds):
        raise MetricsError(f"length mismatch: {len(preds)} predictions vs {len(golds)} golds")
    if category not in (1, 2, 3):
        raise MetricsError(f"category must be 1, 2, or 3, got {category}")
    i = category - 1
    tp = fp = fn = tn = 0
    for p, g in zip(preds, golds):
        pv = p.as_tuple()[i]
        gv = g.as_tuple()[i]
        if pv and gv:
            tp += 1
        elif pv and not gv:
            fp += 1
        elif not pv and gv:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)


def precision_recall_f1(c: ConfusionCounts, zero_division: float = 0.0) -> CategoryScores:
    """Precision, recall, and their harmonic mean from contingency counts."""
    precision = c.tp / (c.tp + c.fp) if (c.tp + c.fp) else zero_division
    recall = c.tp / (c.tp + c.fn) if (c.tp + c.fn) else zero_division
    denom = precision + recall
    f1 = 2 * precision * recall / denom if denom else zero_division
    return CategoryScores(precision=precision, recall=recall, f1=f1)


def macro_f1(f1s: Sequence[float]) -> float:
    """Unweighted mean of the three per-category F1 scores."""
    vals = list(f1s)
    if len(vals) != NUM_CATEGORIES:
        raise MetricsError(f"expected {NUM_CATEGORIES} F1 values, got {len(vals)}")
    return sum(vals) / NUM_CATEGORIES


def evaluate(
    preds: Mapping[int, LabelVector],
    golds: Mapping[int, LabelVector],
    zero_division: float = 0.0,
) -> MetricsReport:
    """Score predictions against gold labels, aligned by tweet index.

    Every gold index must have a prediction; extra predictions are ignored.
    Scoring order is fixed by sorting indices, so the report is invariant
    under reordering of either mapping.
    """
    missing = sorted(set(golds) - set(preds))
    if missing:
        shown = ", ".join(str(i) for i in missing[:20])
        more = f" (+{len(missing) - 20} more)" if len(missing) > 20 else ""
        raise MetricsError(f"missing predictions for {len(missing)} gold indices: {shown}{more}")
    order = sorted(golds)
    pred_list = [preds[i] for i in order]
    gold_list = [golds[i] for i in order]
    counts = tuple(confusion(pred_list, gold_list, cat) for cat in (1, 2, 3))
    scores = tuple(precision_recall_f1(c, zero_division) for c in counts)
    return MetricsReport(
        per_category=scores,  # type: ignore[arg-type]
        counts=counts,  # type: ignore[arg-type]
        macro_f1=macro_f1([s.f1 for s in scores]),
    )


def format_report_table(report: MetricsReport, name: str = "predictions") -> str:
    """Fixed-width one-row table: macro average first, then Cat1..Cat3 F1."""
    header = f"{'Model':<40}{'Macro-avg F1':>14}{'Cat1 F1':>10}{'Cat2 F1':>10}{'Cat3 F1':>10}"
    row = (
        f"{name[:40]:<40}{report.macro_f1:>14.4f}"
        + "".join(f"{s.f1:>10.4f}" for s in report.per_category)
    )
    return header + "\n" + row
