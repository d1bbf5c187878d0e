"""Tweet dataset ingestion, label parsing, and label-distribution statistics.

Datasets are tab-separated files with a header row. Train and dev splits
carry a ``labels`` column holding a bracketed 3-element list; the eval
split has no labels. Everything loaded here is immutable afterwards and
safe to share across threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

ALL_SPLITS = frozenset({"train", "dev", "eval"})
LABELED_SPLITS = frozenset({"train", "dev"})

#: The seven non-empty label combinations, as claim/reference/entity bit strings.
VENN_REGIONS = ("100", "010", "001", "110", "101", "011", "111")

# Integer-or-decimal notation only; no exponents, no inf/nan.
_NUMBER = r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)"
_NUMBER_RE = re.compile(_NUMBER)
_STRICT_NUMBER_RE = re.compile(rf"{_NUMBER}\Z")


class CorpusError(Exception):
    """A dataset file or record violates the ingestion contract."""


class LabelParseError(CorpusError):
    """A string could not be parsed as a 3-element label vector."""

    def __init__(self, message: str, raw: str):
        super().__init__(f"{message}: {raw!r}")
        self.raw = raw


@dataclass(frozen=True, order=True)
class LabelVector:
    """Binary membership in the three categories.

    ``claim`` is Category 1 (contains a scientific claim), ``reference``
    Category 2 (refers to a scientific study or publication), ``entity``
    Category 3 (mentions scientific entities).
    """

    claim: int
    reference: int
    entity: int

    def __post_init__(self) -> None:
        for name, value in (
            ("claim", self.claim),
            ("reference", self.reference),
            ("entity", self.entity),
        ):
            if value not in (0, 1):
                raise ValueError(f"{name} must be 0 or 1, got {value!r}")

    @classmethod
    def from_values(cls, values: Iterable[float]) -> "LabelVector":
        """Coerce three numeric values, rounding each at the 0.5 boundary."""
        vals = list(values)
        if len(vals) != 3:
            raise ValueError(f"expected 3 values, got {len(vals)}")
        c, r, e = (1 if float(v) >= 0.5 else 0 for v in vals)
        return cls(c, r, e)

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.claim, self.reference, self.entity)

    def serialize(self) -> str:
        """Canonical on-disk form, e.g. ``[1.0, 0.0, 0.0]``."""
        return f"[{self.claim}.0, {self.reference}.0, {self.entity}.0]"


ALL_LABEL_VECTORS = tuple(
    LabelVector(c, r, e) for c in (0, 1) for r in (0, 1) for e in (0, 1)
)


def parse_label_vector(raw: str) -> LabelVector:
    """Parse a bracketed numeric triple into a :class:`LabelVector`.

    Accepts integer or decimal notation with arbitrary whitespace, e.g.
    ``[1.0, 1.0, 0]``. Elements are coerced by rounding: >= 0.5 becomes 1.
    Raises :class:`LabelParseError` for anything else.
    """
    text = raw.strip()
    if not (text.startswith("[") and text.endswith("]")):
        raise LabelParseError("label vector must be a bracketed list", raw)
    parts = text[1:-1].split(",")
    if len(parts) != 3:
        raise LabelParseError(f"expected 3 elements, got {len(parts)}", raw)
    values: list[float] = []
    for part in parts:
        item = part.strip()
        if not _STRICT_NUMBER_RE.fullmatch(item):
            raise LabelParseError(f"non-numeric element {item!r}", raw)
        values.append(float(item))
    return LabelVector.from_values(values)


@dataclass(frozen=True)
class Tweet:
    """A single tweet with its dataset index."""

    index: int
    text: str

    def __post_init__(self) -> None:
        if not isinstance(self.index, int):
            raise ValueError(f"tweet index must be an integer, got {self.index!r}")
        if not self.text.strip():
            raise ValueError(f"tweet {self.index} has empty text")


@dataclass(frozen=True)
class Record:
    tweet: Tweet
    labels: LabelVector | None


@dataclass(frozen=True)
class Dataset:
    """An ordered, immutable collection of records from one split."""

    split: str
    records: tuple[Record, ...]

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[Record]:
        return iter(self.records)

    @property
    def labeled(self) -> bool:
        return self.split in LABELED_SPLITS

    def gold_map(self) -> dict[int, LabelVector]:
        """Tweet index -> gold labels. Only valid for labeled splits."""
        if not self.labeled:
            raise CorpusError(f"split {self.split!r} carries no gold labels")
        return {rec.tweet.index: rec.labels for rec in self.records if rec.labels}


def load_dataset(path: str | Path, split: str) -> Dataset:
    """Load a TSV dataset file for the given split.

    The header must be exactly ``index<TAB>text<TAB>labels`` for train/dev
    and ``index<TAB>text`` for eval. Records are strictly one per line;
    embedded raw tabs are rejected as malformed.
    """
    if split not in ALL_SPLITS:
        raise CorpusError(f"unknown split {split!r}; expected one of {sorted(ALL_SPLITS)}")
    p = Path(path)
    if not p.is_file():
        raise CorpusError(f"dataset file not found: {p}")
    lines = p.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise CorpusError(f"{p}: empty file, expected a header row")

    labeled = split in LABELED_SPLITS
    expected = ["index", "text", "labels"] if labeled else ["index", "text"]
    header = lines[0].split("\t")
    if header != expected:
        if labeled and header == ["index", "text"]:
            raise CorpusError(f"{p}: split {split!r} requires a labels column but none is present")
        if not labeled and header == ["index", "text", "labels"]:
            raise CorpusError(f"{p}: split {split!r} must not have a labels column but one is present")
        raise CorpusError(f"{p}: header {header!r} does not match required columns {expected!r}")

    records: list[Record] = []
    seen: set[int] = set()
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        if len(fields) != len(expected):
            raise CorpusError(
                f"{p}:{lineno}: expected {len(expected)} tab-separated fields, got "
                f"{len(fields)} (embedded tabs and blank lines are not allowed)"
            )
        try:
            index = int(fields[0])
        except ValueError:
            raise CorpusError(f"{p}:{lineno}: non-integer index {fields[0]!r}") from None
        if index in seen:
            raise CorpusError(f"{p}:{lineno}: duplicate index {index}")
        seen.add(index)
        if not fields[1].strip():
            raise CorpusError(f"{p}:{lineno}: empty tweet text for index {index}")
        tweet = Tweet(index=index, text=fields[1])
        labels: LabelVector | None = None
        if labeled:
            try:
                labels = parse_label_vector(fields[2])
            except LabelParseError as err:
                raise CorpusError(f"{p}:{lineno}: {err}") from None
        records.append(Record(tweet=tweet, labels=labels))
    return Dataset(split=split, records=tuple(records))


@dataclass(frozen=True)
class StatsReport:
    """Label-distribution summary of a labeled dataset."""

    total: int
    per_category_counts: tuple[int, int, int]
    per_category_pct: tuple[float, float, float]
    none_count: int
    venn_region_counts: dict[str, int]
    cat2_without_cat3_violations: int

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "per_category_counts": list(self.per_category_counts),
            "per_category_pct": list(self.per_category_pct),
            "none_count": self.none_count,
            "venn_region_counts": dict(self.venn_region_counts),
            "cat2_without_cat3_violations": self.cat2_without_cat3_violations,
        }


def compute_stats(ds: Dataset) -> StatsReport:
    """Count per-category labels, the 7 exclusive overlap regions, and
    the unlabeled remainder. Requires a labeled split."""
    if not ds.labeled:
        raise CorpusError(f"stats require a labeled split, got {ds.split!r}")
    regions = {key: 0 for key in VENN_REGIONS}
    none_count = 0
    per_cat = [0, 0, 0]
    for rec in ds.records:
        assert rec.labels is not None
        bits = rec.labels.as_tuple()
        key = "".join(str(b) for b in bits)
        if key == "000":
            none_count += 1
        else:
            regions[key] += 1
        for i, b in enumerate(bits):
            per_cat[i] += b
    total = len(ds.records)
    pct = tuple(c / total if total else 0.0 for c in per_cat)
    violations = regions["010"] + regions["110"]
    return StatsReport(
        total=total,
        per_category_counts=(per_cat[0], per_cat[1], per_cat[2]),
        per_category_pct=pct,  # type: ignore[arg-type]
        none_count=none_count,
        venn_region_counts=regions,
        cat2_without_cat3_violations=violations,
    )


def audit_dependency(ds: Dataset) -> list[Record]:
    """Return every record labeled with Category 2 but not Category 3.

    Report-only: the dataset is never mutated. On well-formed data the
    study-reference label implies the entity label and this list is empty.
    """
    if not ds.labeled:
        raise CorpusError(f"dependency audit requires a labeled split, got {ds.split!r}")
    return [
        rec
        for rec in ds.records
        if rec.labels is not None and rec.labels.reference == 1 and rec.labels.entity == 0
    ]
