"""Encoder-plus-head classifier and the on-disk checkpoint layout.

A checkpoint is a directory:

    checkpoint/
        model/           encoder weights, encoder config, tokenizer files
        head.pt          classification head state dict
        metadata.json    base model name, best epoch, val macro-F1,
                         threshold, max sequence length, full config

The directory is the hand-off boundary: the pipeline package never
imports anything from here, it only consumes the exported TSV or the
HTTP endpoint.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import torch
from torch import nn
from transformers import AutoModel, AutoTokenizer
from transformers.utils import logging as hf_logging

# Progress bars would interleave with the per-epoch training log.
hf_logging.disable_progress_bar()

N_CATEGORIES = 3


class CheckpointError(Exception):
    """A checkpoint directory is missing pieces or inconsistent."""


class TextClassifier(nn.Module):
    """Pretrained encoder with a 3-logit head over the first-token state."""

    def __init__(self, encoder: nn.Module, hidden_size: int, dropout: float = 0.1):
        super().__init__()
        self.encoder = encoder
        self.dropout = nn.Dropout(dropout)
        self.head = nn.Linear(hidden_size, N_CATEGORIES)

    def forward(self, **encoded: torch.Tensor) -> torch.Tensor:
        hidden = self.encoder(**encoded).last_hidden_state[:, 0]
        return self.head(self.dropout(hidden))


def load_base(base_model: str | Path) -> tuple[TextClassifier, "AutoTokenizer"]:
    """Build a fresh classifier on top of a pretrained encoder."""
    tokenizer = AutoTokenizer.from_pretrained(str(base_model))
    encoder = AutoModel.from_pretrained(str(base_model))
    return TextClassifier(encoder, encoder.config.hidden_size), tokenizer


@dataclass(frozen=True)
class Checkpoint:
    """Reference to the best model found during training."""

    path: Path
    val_macro_f1: float
    epoch: int
    base_model: str
    threshold: float
    max_length: int

    def load(self) -> tuple[TextClassifier, "AutoTokenizer"]:
        model_dir = self.path / "model"
        head_path = self.path / "head.pt"
        if not model_dir.is_dir() or not head_path.is_file():
            raise CheckpointError(f"{self.path}: incomplete checkpoint directory")
        tokenizer = AutoTokenizer.from_pretrained(str(model_dir))
        encoder = AutoModel.from_pretrained(str(model_dir))
        classifier = TextClassifier(encoder, encoder.config.hidden_size)
        classifier.head.load_state_dict(torch.load(head_path, weights_only=True))
        classifier.eval()
        return classifier, tokenizer


def save_checkpoint(
    out_dir: str | Path,
    classifier: TextClassifier,
    tokenizer,
    *,
    epoch: int,
    val_macro_f1: float,
    base_model: str,
    threshold: float,
    max_length: int,
    config: dict,
) -> Checkpoint:
    out_dir = Path(out_dir)
    model_dir = out_dir / "model"
    model_dir.mkdir(parents=True, exist_ok=True)
    classifier.encoder.save_pretrained(str(model_dir))
    tokenizer.save_pretrained(str(model_dir))
    torch.save(classifier.head.state_dict(), out_dir / "head.pt")
    metadata = {
        "base_model": base_model,
        "epoch": epoch,
        "val_macro_f1": val_macro_f1,
        "threshold": threshold,
        "max_length": max_length,
        "config": config,
    }
    (out_dir / "metadata.json").write_text(
        json.dumps(metadata, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return Checkpoint(
        path=out_dir,
        val_macro_f1=val_macro_f1,
        epoch=epoch,
        base_model=base_model,
        threshold=threshold,
        max_length=max_length,
    )


def open_checkpoint(path: str | Path) -> Checkpoint:
    """Read a checkpoint directory's metadata without loading weights."""
    path = Path(path)
    metadata_path = path / "metadata.json"
    if not metadata_path.is_file():
        raise CheckpointError(f"{path}: no metadata.json; not a checkpoint directory")
    try:
        metadata = json.loads(metadata_path.read_text(encoding="utf-8"))
        return Checkpoint(
            path=path,
            val_macro_f1=float(metadata["val_macro_f1"]),
            epoch=int(metadata["epoch"]),
            base_model=str(metadata["base_model"]),
            threshold=float(metadata["threshold"]),
            max_length=int(metadata["max_length"]),
        )
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as err:
        raise CheckpointError(f"{metadata_path}: malformed metadata: {err}") from err
