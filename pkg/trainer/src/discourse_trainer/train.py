"""Fine-tuning loop: BCE-with-logits, early stopping, best-checkpoint keep.

Each epoch trains on the 90% part, scores macro-F1 on the 10% part, and
overwrites the checkpoint directory whenever validation improves.
Training stops after ``patience`` consecutive epochs without
improvement, or at ``max_epochs``, whichever comes first.
"""

from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import torch
from torch import nn

from .data import DataError, Example, split_examples
from .model import Checkpoint, TextClassifier, load_base, save_checkpoint
from .scoring import macro_f1, per_category_f1

log = logging.getLogger(__name__)

DEFAULT_BASE_MODEL = "microsoft/deberta-v3-base"


class TrainingError(Exception):
    """Training cannot proceed or produced a non-finite loss."""


@dataclass(frozen=True)
class TrainConfig:
    """Fine-tuning hyperparameters; every field is overridable."""

    base_model: str = DEFAULT_BASE_MODEL
    split_ratio: float = 0.9
    max_epochs: int = 20
    patience: int = 3
    threshold: float = 0.5
    seed: int = 42
    learning_rate: float = 2e-5
    batch_size: int = 16
    weight_decay: float = 0.01
    max_length: int = 256
    dropout: float = 0.1

    def __post_init__(self) -> None:
        if not 0.0 < self.split_ratio < 1.0:
            raise TrainingError(f"split_ratio must be inside (0, 1), got {self.split_ratio}")
        if self.max_epochs < 1:
            raise TrainingError(f"max_epochs must be at least 1, got {self.max_epochs}")
        if not 0 < self.patience < self.max_epochs:
            raise TrainingError(
                f"patience must be in [1, max_epochs), got patience={self.patience} "
                f"with max_epochs={self.max_epochs}"
            )
        if not 0.0 <= self.threshold <= 1.0:
            raise TrainingError(f"threshold must be in [0, 1], got {self.threshold}")
        if self.learning_rate <= 0:
            raise TrainingError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.batch_size < 1:
            raise TrainingError(f"batch_size must be at least 1, got {self.batch_size}")
        if self.max_length < 8:
            raise TrainingError(f"max_length must be at least 8, got {self.max_length}")


class EarlyStopping:
    """Track the best validation score; stop after `patience` stale epochs."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best_score: float | None = None
        self.best_epoch: int | None = None
        self._stale = 0

    def update(self, epoch: int, score: float) -> bool:
        """Record one epoch's score; True when it is a new best."""
        if self.best_score is None or score > self.best_score:
            self.best_score = score
            self.best_epoch = epoch
            self._stale = 0
            return True
        self._stale += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self._stale >= self.patience


@dataclass(frozen=True)
class EpochRecord:
    """One line of the training log."""

    epoch: int
    train_loss: float
    val_macro_f1: float
    val_f1_per_category: tuple[float, float, float]
    improved: bool


@dataclass(frozen=True)
class TrainResult:
    checkpoint: Checkpoint
    log: tuple[EpochRecord, ...] = field(repr=False)


def _encode(tokenizer, texts: Sequence[str], max_length: int) -> dict[str, torch.Tensor]:
    return tokenizer(
        list(texts),
        padding=True,
        truncation=True,
        max_length=max_length,
        return_tensors="pt",
    )


def _loss_fn(logits: torch.Tensor, targets: torch.Tensor) -> torch.Tensor:
    return nn.functional.binary_cross_entropy_with_logits(logits, targets)


def predict_bits(
    classifier: TextClassifier,
    tokenizer,
    examples: Sequence[Example],
    *,
    threshold: float,
    max_length: int,
    batch_size: int,
) -> list[tuple[int, int, int]]:
    """Thresholded (``>=``) label bits for each example, in order."""
    classifier.eval()
    bits: list[tuple[int, int, int]] = []
    with torch.no_grad():
        for start in range(0, len(examples), batch_size):
            batch = examples[start : start + batch_size]
            logits = classifier(**_encode(tokenizer, [e.text for e in batch], max_length))
            probs = torch.sigmoid(logits)
            for row in probs.tolist():
                bits.append(tuple(int(p >= threshold) for p in row))
    return bits


def _run_epoch(
    classifier: TextClassifier,
    tokenizer,
    optimizer: torch.optim.Optimizer,
    examples: Sequence[Example],
    cfg: TrainConfig,
    rng: random.Random,
    epoch: int,
) -> float:
    classifier.train()
    order = list(range(len(examples)))
    rng.shuffle(order)
    total = 0.0
    batches = 0
    for start in range(0, len(order), cfg.batch_size):
        batch = [examples[i] for i in order[start : start + cfg.batch_size]]
        encoded = _encode(tokenizer, [e.text for e in batch], cfg.max_length)
        targets = torch.tensor([e.labels for e in batch], dtype=torch.float32)
        optimizer.zero_grad()
        loss = _loss_fn(classifier(**encoded), targets)
        value = loss.item()
        if not math.isfinite(value):
            raise TrainingError(
                f"non-finite loss {value} at epoch {epoch}, batch {batches + 1}; "
                f"lower the learning rate or inspect the data"
            )
        loss.backward()
        optimizer.step()
        total += value
        batches += 1
    return total / batches


def train(
    examples: Sequence[Example], cfg: TrainConfig, out_dir: str | Path
) -> TrainResult:
    """Fine-tune on a labeled dataset; keep the best-by-val-macro-F1 model.

    Writes the checkpoint directory and a ``training_log.jsonl`` next to
    it, and returns both the checkpoint reference and the full log.
    """
    if any(e.labels is None for e in examples):
        raise DataError("training requires a fully labeled dataset")
    train_part, val_part = split_examples(examples, cfg.split_ratio, cfg.seed)
    val_golds = [e.labels for e in val_part]

    torch.manual_seed(cfg.seed)
    rng = random.Random(cfg.seed)
    classifier, tokenizer = load_base(cfg.base_model)
    classifier.dropout.p = cfg.dropout
    optimizer = torch.optim.AdamW(
        classifier.parameters(), lr=cfg.learning_rate, weight_decay=cfg.weight_decay
    )
    stopper = EarlyStopping(cfg.patience)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    records: list[EpochRecord] = []
    checkpoint: Checkpoint | None = None
    log.info(
        "training on %d examples, validating on %d (seed %d)",
        len(train_part), len(val_part), cfg.seed,
    )
    for epoch in range(1, cfg.max_epochs + 1):
        train_loss = _run_epoch(classifier, tokenizer, optimizer, train_part, cfg, rng, epoch)
        val_bits = predict_bits(
            classifier, tokenizer, val_part,
            threshold=cfg.threshold, max_length=cfg.max_length, batch_size=cfg.batch_size,
        )
        f1s = per_category_f1(val_bits, val_golds)
        score = macro_f1(f1s)
        improved = stopper.update(epoch, score)
        records.append(
            EpochRecord(
                epoch=epoch,
                train_loss=train_loss,
                val_macro_f1=score,
                val_f1_per_category=f1s,
                improved=improved,
            )
        )
        log.info(
            "epoch %d/%d: loss %.4f, val macro-F1 %.4f%s",
            epoch, cfg.max_epochs, train_loss, score, " (new best)" if improved else "",
        )
        if improved:
            checkpoint = save_checkpoint(
                out_dir, classifier, tokenizer,
                epoch=epoch,
                val_macro_f1=score,
                base_model=cfg.base_model,
                threshold=cfg.threshold,
                max_length=cfg.max_length,
                config=asdict(cfg),
            )
        if stopper.should_stop:
            log.info("no improvement for %d epochs, stopping early", cfg.patience)
            break

    assert checkpoint is not None  # epoch 1 always improves on "no score yet"
    log_path = out_dir / "training_log.jsonl"
    with log_path.open("w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(asdict(record)) + "\n")
    log.info(
        "kept epoch %d checkpoint (val macro-F1 %.4f) in %s",
        checkpoint.epoch, checkpoint.val_macro_f1, out_dir,
    )
    return TrainResult(checkpoint=checkpoint, log=tuple(records))
