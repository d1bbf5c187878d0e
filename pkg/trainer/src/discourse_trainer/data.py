"""Dataset loading and the stratified train/validation split.

The input is the pipeline's tab-separated tweet format: a header row,
then one tweet per line with an integer index, the text, and (on
labeled files) a bracketed 3-element label list. This module reads
those files at the file boundary; it shares no code with the pipeline
package.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

LABELED_HEADER = ("index", "text", "labels")
UNLABELED_HEADER = ("index", "text")

# One nonnegative number per slot; values must be exactly 0 or 1.
_LABELS_RE = re.compile(
    r"\[\s*(\d+(?:\.\d*)?)\s*,\s*(\d+(?:\.\d*)?)\s*,\s*(\d+(?:\.\d*)?)\s*\]\Z"
)


class DataError(Exception):
    """A dataset file or record violates the ingestion contract."""


@dataclass(frozen=True)
class Example:
    """One tweet, optionally with its gold category bits."""

    index: int
    text: str
    labels: tuple[int, int, int] | None

    @property
    def has_any_label(self) -> bool:
        if self.labels is None:
            raise DataError(f"tweet {self.index} is unlabeled")
        return any(self.labels)


def _parse_labels(raw: str, where: str) -> tuple[int, int, int]:
    match = _LABELS_RE.match(raw.strip())
    if match is None:
        raise DataError(f"{where}: malformed label list {raw!r}")
    values = tuple(float(g) for g in match.groups())
    if any(v not in (0.0, 1.0) for v in values):
        raise DataError(f"{where}: labels must be 0 or 1, got {raw!r}")
    return tuple(int(v) for v in values)


def load_examples(path: str | Path) -> list[Example]:
    """Load a tweet TSV, labeled or not, strictly validated.

    Duplicate indices, blank texts, and malformed rows are rejected with
    the offending line number.
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as err:
        raise DataError(f"cannot read dataset {path}: {err}") from err
    if not lines:
        raise DataError(f"{path}: file is empty")
    header = tuple(lines[0].split("\t"))
    if header == LABELED_HEADER:
        labeled = True
    elif header == UNLABELED_HEADER:
        labeled = False
    else:
        raise DataError(f"{path}:1: unrecognized header {lines[0]!r}")

    examples: list[Example] = []
    seen: set[int] = set()
    for lineno, line in enumerate(lines[1:], start=2):
        where = f"{path}:{lineno}"
        fields = line.split("\t")
        if len(fields) != len(header):
            raise DataError(f"{where}: expected {len(header)} fields, got {len(fields)}")
        try:
            index = int(fields[0])
        except ValueError as err:
            raise DataError(f"{where}: bad index {fields[0]!r}") from err
        if index in seen:
            raise DataError(f"{where}: duplicate tweet index {index}")
        seen.add(index)
        text = fields[1]
        if not text.strip():
            raise DataError(f"{where}: empty tweet text")
        labels = _parse_labels(fields[2], where) if labeled else None
        examples.append(Example(index=index, text=text, labels=labels))
    if not examples:
        raise DataError(f"{path}: no records")
    return examples


def split_examples(
    examples: Sequence[Example], ratio: float, seed: int
) -> tuple[list[Example], list[Example]]:
    """Split labeled examples into train/validation parts.

    Stratified on the any-label/no-label dichotomy so validation keeps
    roughly the corpus negative rate. Both parts must come out
    non-empty; tiny datasets are rejected rather than silently skewed.
    """
    if not 0.0 < ratio < 1.0:
        raise DataError(f"split ratio must be inside (0, 1), got {ratio}")
    rng = random.Random(seed)
    strata = ([e for e in examples if e.has_any_label], [e for e in examples if not e.has_any_label])
    train: list[Example] = []
    val: list[Example] = []
    for stratum in strata:
        shuffled = list(stratum)
        rng.shuffle(shuffled)
        cut = round(len(shuffled) * ratio)
        train.extend(shuffled[:cut])
        val.extend(shuffled[cut:])
    if not train or not val:
        raise DataError(
            f"dataset too small for a {ratio:.0%} split: "
            f"{len(train)} train / {len(val)} validation examples"
        )
    train.sort(key=lambda e: e.index)
    val.sort(key=lambda e: e.index)
    return train, val
