"""Fusion of the transformer route and the LLM route into final labels.

The two routes are complementary: the fine-tuned transformer is stronger
on claim and entity detection, the retrieval-augmented LLM on study
references.  A routing config names, per category, which route's verdict
survives into the fused label vector.  The default routing takes claim
and entity from the transformer and reference from the LLM.

Two TSV layouts are involved.  Transformer predictions arrive from the
training component as per-category columns, probabilities and/or hard
labels (``index  prob_cat1..3  [label_cat1..3]``); probabilities are
thresholded at 0.5, inclusive by default.  Pipeline output is the
compact submission layout, ``index  labels`` with one canonical label
list per row.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import CorpusError, Dataset, LabelVector, parse_label_vector
from .gateway import BatchResult, ChatTransport, LlmConfig, ResponseCache, classify_batch
from .prompting import PromptTemplate
from .retrieval import EmbeddingProvider, ExampleIndex

log = logging.getLogger(__name__)

TRANSFORMER = "transformer"
LLM = "llm"
SOURCES = (TRANSFORMER, LLM)

DEFAULT_THRESHOLD = 0.5

PROB_COLUMNS = ("prob_cat1", "prob_cat2", "prob_cat3")
LABEL_COLUMNS = ("label_cat1", "label_cat2", "label_cat3")
PREDICTIONS_HEADER = ("index", "labels")


class EnsembleError(ValueError):
    """Raised for malformed prediction files or inconsistent routing."""


@dataclass(frozen=True)
class RoutingConfig:
    """Which route decides each category."""

    claim_source: str = TRANSFORMER
    reference_source: str = LLM
    entity_source: str = TRANSFORMER

    def __post_init__(self) -> None:
        for name, source in zip(("claim", "reference", "entity"), self.as_tuple()):
            if source not in SOURCES:
                raise EnsembleError(f"{name} source must be one of {SOURCES}, got {source!r}")

    def as_tuple(self) -> tuple[str, str, str]:
        return (self.claim_source, self.reference_source, self.entity_source)

    @property
    def uses_llm(self) -> bool:
        return LLM in self.as_tuple()

    @classmethod
    def parse(cls, spec: str) -> "RoutingConfig":
        """Parse a comma-separated triple like ``transformer,llm,transformer``."""
        parts = [p.strip() for p in spec.split(",")]
        if len(parts) != 3:
            raise EnsembleError(f"routing spec needs 3 comma-separated sources, got {len(parts)}")
        return cls(claim_source=parts[0], reference_source=parts[1], entity_source=parts[2])


@dataclass(frozen=True)
class TransformerPrediction:
    """One row of a transformer predictions file."""

    tweet_index: int
    labels: LabelVector
    probabilities: tuple[float, float, float] | None = None


def _threshold_labels(probs: Sequence[float], threshold: float, inclusive: bool) -> LabelVector:
    if inclusive:
        bits = (1 if p >= threshold else 0 for p in probs)
    else:
        bits = (1 if p > threshold else 0 for p in probs)
    return LabelVector(*bits)


def _parse_label_bit(raw: str, where: str) -> int:
    try:
        value = float(raw)
    except ValueError as err:
        raise EnsembleError(f"{where}: label {raw!r} is not a number") from err
    if value not in (0.0, 1.0):
        raise EnsembleError(f"{where}: label must be 0 or 1, got {raw!r}")
    return int(value)


_TRANSFORMER_HEADERS = {
    ("index",) + PROB_COLUMNS: (True, False),
    ("index",) + LABEL_COLUMNS: (False, True),
    ("index",) + PROB_COLUMNS + LABEL_COLUMNS: (True, True),
}


def load_transformer_predictions(
    path: str | Path,
    threshold: float = DEFAULT_THRESHOLD,
    *,
    inclusive: bool = True,
) -> dict[int, TransformerPrediction]:
    """Load a transformer predictions TSV.

    Accepts probability columns, hard label columns, or both.  With only
    probabilities, labels come from thresholding (``>=`` by default, a
    strict ``>`` when ``inclusive`` is off).  With both, the stated
    labels must match what thresholding produces.
    """
    path = Path(path)
    if not 0.0 <= threshold <= 1.0:
        raise EnsembleError(f"threshold must be in [0, 1], got {threshold}")
    try:
        content = path.read_text(encoding="utf-8")
    except OSError as err:
        raise EnsembleError(f"cannot read transformer predictions {path}: {err}") from err
    lines = content.splitlines()
    if not lines:
        raise EnsembleError(f"{path}: file is empty")
    header = tuple(lines[0].split("\t"))
    if header not in _TRANSFORMER_HEADERS:
        raise EnsembleError(
            f"{path}:1: unrecognized header {lines[0]!r}; expected index plus "
            f"{'/'.join(PROB_COLUMNS)} and/or {'/'.join(LABEL_COLUMNS)}"
        )
    has_probs, has_labels = _TRANSFORMER_HEADERS[header]
    preds: dict[int, TransformerPrediction] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        where = f"{path}:{lineno}"
        if not line.strip():
            raise EnsembleError(f"{where}: blank line")
        fields = line.split("\t")
        if len(fields) != len(header):
            raise EnsembleError(
                f"{where}: expected {len(header)} tab-separated fields, got {len(fields)}"
            )
        try:
            index = int(fields[0])
        except ValueError as err:
            raise EnsembleError(f"{where}: index {fields[0]!r} is not an integer") from err
        if index in preds:
            raise EnsembleError(f"{where}: duplicate tweet index {index}")
        pos = 1
        probs: tuple[float, float, float] | None = None
        if has_probs:
            values = []
            for column, raw in zip(PROB_COLUMNS, fields[pos:pos + 3]):
                try:
                    value = float(raw)
                except ValueError as err:
                    raise EnsembleError(f"{where}: {column} {raw!r} is not a number") from err
                if not 0.0 <= value <= 1.0:
                    raise EnsembleError(f"{where}: {column} {value} outside [0, 1]")
                values.append(value)
            probs = (values[0], values[1], values[2])
            pos += 3
        labels: LabelVector | None = None
        if has_labels:
            bits = [_parse_label_bit(raw, where) for raw in fields[pos:pos + 3]]
            labels = LabelVector(*bits)
        if labels is None:
            assert probs is not None
            labels = _threshold_labels(probs, threshold, inclusive)
        elif probs is not None:
            derived = _threshold_labels(probs, threshold, inclusive)
            if derived != labels:
                raise EnsembleError(
                    f"{where}: labels {labels.as_tuple()} disagree with probabilities "
                    f"(threshold {threshold} gives {derived.as_tuple()})"
                )
        preds[index] = TransformerPrediction(tweet_index=index, labels=labels, probabilities=probs)
    if not preds:
        raise EnsembleError(f"{path}: no prediction rows")
    return preds


def read_predictions_tsv(path: str | Path) -> dict[int, LabelVector]:
    """Load a pipeline predictions TSV (``index  labels`` layout)."""
    path = Path(path)
    try:
        content = path.read_text(encoding="utf-8")
    except OSError as err:
        raise EnsembleError(f"cannot read predictions {path}: {err}") from err
    lines = content.splitlines()
    if not lines:
        raise EnsembleError(f"{path}: file is empty")
    if tuple(lines[0].split("\t")) != PREDICTIONS_HEADER:
        raise EnsembleError(
            f"{path}:1: unrecognized header {lines[0]!r}, expected 'index\\tlabels'"
        )
    preds: dict[int, LabelVector] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        where = f"{path}:{lineno}"
        if not line.strip():
            raise EnsembleError(f"{where}: blank line")
        fields = line.split("\t")
        if len(fields) != 2:
            raise EnsembleError(f"{where}: expected 2 tab-separated fields, got {len(fields)}")
        try:
            index = int(fields[0])
        except ValueError as err:
            raise EnsembleError(f"{where}: index {fields[0]!r} is not an integer") from err
        if index in preds:
            raise EnsembleError(f"{where}: duplicate tweet index {index}")
        try:
            preds[index] = parse_label_vector(fields[1])
        except CorpusError as err:
            raise EnsembleError(f"{where}: {err}") from err
    if not preds:
        raise EnsembleError(f"{path}: no prediction rows")
    return preds


def load_any_predictions(path: str | Path) -> dict[int, LabelVector]:
    """Load either predictions layout down to plain label vectors.

    Dispatches on the header line, so the scoring and fusing commands
    accept both the pipeline output and raw transformer files.
    """
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as fh:
            header = tuple(fh.readline().rstrip("\n").split("\t"))
    except OSError as err:
        raise EnsembleError(f"cannot read predictions {path}: {err}") from err
    if header == PREDICTIONS_HEADER:
        return read_predictions_tsv(path)
    if header in _TRANSFORMER_HEADERS:
        return {i: p.labels for i, p in load_transformer_predictions(path).items()}
    raise EnsembleError(f"{path}:1: header {chr(9).join(header)!r} matches no known predictions layout")


def write_predictions_tsv(path: str | Path, preds: Mapping[int, LabelVector]) -> None:
    """Write the submission layout, rows in ascending index order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write("index\tlabels\n")
        for index in sorted(preds):
            fh.write(f"{index}\t{preds[index].serialize()}\n")


def fuse(
    transformer: LabelVector,
    llm: LabelVector,
    routing: RoutingConfig | None = None,
) -> LabelVector:
    """Componentwise selection between the two routes."""
    routing = routing or RoutingConfig()
    by_source = {TRANSFORMER: transformer, LLM: llm}
    return LabelVector(
        by_source[routing.claim_source].claim,
        by_source[routing.reference_source].reference,
        by_source[routing.entity_source].entity,
    )


def _listing(indices: Sequence[int], limit: int = 20) -> str:
    shown = ", ".join(str(i) for i in indices[:limit])
    extra = len(indices) - limit
    return shown + (f" (+{extra} more)" if extra > 0 else "")


@dataclass(frozen=True)
class PipelineRow:
    """Both routes' verdicts for one tweet, plus the fused result."""

    tweet_index: int
    transformer: LabelVector
    llm: LabelVector | None
    fused: LabelVector
    from_cache: bool = False
    parse_failed: bool = False
    dependency_adjusted: bool = False


@dataclass(frozen=True)
class PipelineResult:
    """Per-tweet outcomes plus run accounting for the LLM leg."""

    rows: tuple[PipelineRow, ...]
    routing: RoutingConfig
    model: str | None
    k: int
    failed_indices: tuple[int, ...]
    cache_hits: int
    parse_failures: int

    @property
    def fused(self) -> dict[int, LabelVector]:
        return {row.tweet_index: row.fused for row in self.rows}

    @property
    def complete(self) -> bool:
        return not self.failed_indices


def run_pipeline(
    dataset: Dataset,
    transformer_preds: Mapping[int, TransformerPrediction],
    routing: RoutingConfig | None = None,
    *,
    index: ExampleIndex | None = None,
    provider: EmbeddingProvider | None = None,
    template: PromptTemplate | None = None,
    config: LlmConfig | None = None,
    transport: ChatTransport | None = None,
    cache: ResponseCache | None = None,
    k: int = 5,
    enforce_dependency: bool = False,
) -> PipelineResult:
    """Predict labels for every tweet in ``dataset`` and fuse the routes.

    A transformer prediction must exist for every tweet.  The LLM route
    runs only when the routing consumes it; responses are cached whole,
    so rerouting later reuses them.  Tweets whose LLM request fails get
    no row and are reported in ``failed_indices``; no labels are
    invented for them.

    ``enforce_dependency`` applies an optional post-hoc rule: a fused
    study reference forces the entity bit on.  Off by default.
    """
    routing = routing or RoutingConfig()
    eval_indices = [record.tweet.index for record in dataset]

    missing = sorted(set(eval_indices) - set(transformer_preds))
    if missing:
        raise EnsembleError(
            f"transformer predictions missing for {len(missing)} tweet(s): {_listing(missing)}"
        )

    llm_result: BatchResult | None = None
    llm_by_index: dict[int, tuple[LabelVector, bool, bool]] = {}
    failed: tuple[int, ...] = ()
    if routing.uses_llm:
        if template is None or config is None or transport is None:
            raise EnsembleError("routing uses the llm route: template, config and transport are required")
        llm_result = classify_batch(
            dataset,
            index,
            config,
            transport,
            cache,
            template=template,
            provider=provider,
            k=k,
        )
        llm_by_index = {
            p.tweet_index: (p.labels, p.from_cache, not p.parse_ok) for p in llm_result.predictions
        }
        failed = tuple(sorted(f.tweet_index for f in llm_result.failures))
        if failed:
            log.warning("llm route failed for %d tweet(s): %s", len(failed), _listing(list(failed)))

    rows = []
    for idx in eval_indices:
        if idx in llm_by_index:
            llm_labels, from_cache, parse_failed = llm_by_index[idx]
        elif routing.uses_llm:
            continue  # request failed; reported via failed_indices
        else:
            llm_labels, from_cache, parse_failed = None, False, False
        t_labels = transformer_preds[idx].labels
        fused_labels = fuse(t_labels, llm_labels if llm_labels is not None else t_labels, routing)
        adjusted = False
        if enforce_dependency and fused_labels.reference == 1 and fused_labels.entity == 0:
            fused_labels = LabelVector(fused_labels.claim, fused_labels.reference, 1)
            adjusted = True
        rows.append(
            PipelineRow(
                tweet_index=idx,
                transformer=t_labels,
                llm=llm_labels,
                fused=fused_labels,
                from_cache=from_cache,
                parse_failed=parse_failed,
                dependency_adjusted=adjusted,
            )
        )
    return PipelineResult(
        rows=tuple(rows),
        routing=routing,
        model=config.model_name if (routing.uses_llm and config is not None) else None,
        k=k if routing.uses_llm else 0,
        failed_indices=failed,
        cache_hits=sum(p.from_cache for p in llm_result.predictions) if llm_result else 0,
        parse_failures=sum(not p.parse_ok for p in llm_result.predictions) if llm_result else 0,
    )
