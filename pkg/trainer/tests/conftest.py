"""Shared fixtures: an offline tiny encoder and separable synthetic data.

The tiny encoder is a randomly initialized 2-layer model with a
purpose-built vocabulary, saved to disk once per session so every test
exercises the same from_pretrained loading path as a real base model,
without any network access.
"""

from __future__ import annotations

import random
from pathlib import Path

import pytest
import torch
from transformers import BertConfig, BertModel, BertTokenizerFast

from discourse_trainer import Example, TrainConfig, load_base, save_checkpoint, train

SPECIALS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
CLAIM_WORDS = ["claims", "improves", "reduces"]
REFERENCE_WORDS = ["study", "paper", "published"]
ENTITY_WORDS = ["gene", "protein", "bacteria"]
NOISE_WORDS = ["phone", "game", "music", "party", "weekend", "coffee", "rain"]
FILLER_WORDS = ["the", "a", "of", "about", "and", "new", "my"]
VOCAB = SPECIALS + CLAIM_WORDS + REFERENCE_WORDS + ENTITY_WORDS + NOISE_WORDS + FILLER_WORDS

# Every combination respects the reference-implies-entity dependency.
PATTERNS = [(0, 0, 0), (1, 0, 0), (0, 0, 1), (1, 0, 1), (0, 1, 1), (1, 1, 1)]


@pytest.fixture(scope="session")
def tiny_base(tmp_path_factory) -> str:
    root = tmp_path_factory.mktemp("tiny_base")
    vocab_file = root / "vocab.txt"
    vocab_file.write_text("\n".join(VOCAB) + "\n", encoding="utf-8")
    tokenizer = BertTokenizerFast(vocab_file=str(vocab_file))
    # At the stock 0.02 initializer range a random encoder's first-token
    # state is nearly input-independent (residual paths drown the token
    # signal), so nothing is learnable in test-sized budgets. The wider
    # range stands in for what pretraining gives a real base model.
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=64,
        num_hidden_layers=2,
        num_attention_heads=4,
        intermediate_size=256,
        max_position_embeddings=64,
        initializer_range=0.05,
    )
    torch.manual_seed(0)
    model = BertModel(config)
    out = root / "model"
    model.save_pretrained(str(out))
    tokenizer.save_pretrained(str(out))
    return str(out)


def make_examples(n: int, seed: int = 7, start_index: int = 0) -> list[Example]:
    """Synthetic tweets whose labels follow from keyword presence."""
    rng = random.Random(seed)
    examples = []
    for i in range(n):
        labels = PATTERNS[i % len(PATTERNS)]
        words = [rng.choice(FILLER_WORDS)]
        if labels[0]:
            words.extend(rng.sample(CLAIM_WORDS, 2))
        if labels[1]:
            words.extend(rng.sample(REFERENCE_WORDS, 2))
        if labels[2]:
            words.extend(rng.sample(ENTITY_WORDS, 2))
        if labels == (0, 0, 0):
            words.extend(rng.sample(NOISE_WORDS, 3))
        words.append(rng.choice(FILLER_WORDS))
        rng.shuffle(words)
        examples.append(Example(index=start_index + i, text=" ".join(words), labels=labels))
    return examples


def write_labeled_tsv(path: Path, examples: list[Example]) -> Path:
    lines = ["index\ttext\tlabels"]
    for e in examples:
        serialized = "[" + ", ".join(str(float(b)) for b in e.labels) + "]"
        lines.append(f"{e.index}\t{e.text}\t{serialized}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def tiny_config(tiny_base: str, **overrides) -> TrainConfig:
    kwargs = dict(
        base_model=tiny_base,
        max_epochs=20,
        patience=3,
        seed=7,
        learning_rate=2e-3,
        batch_size=8,
        max_length=32,
    )
    kwargs.update(overrides)
    return TrainConfig(**kwargs)


@pytest.fixture(scope="session")
def trained(tiny_base, tmp_path_factory):
    """One full training run on separable data, shared across tests."""
    out_dir = tmp_path_factory.mktemp("trained_ckpt")
    examples = make_examples(72)
    # Patience above the default: from-scratch warmup takes a few flat
    # epochs before the separable signal is picked up.
    cfg = tiny_config(tiny_base, split_ratio=0.8, patience=8)
    result = train(examples, cfg, out_dir)
    return result, cfg, examples


@pytest.fixture(scope="session")
def fixed_logits_checkpoint(tiny_base, tmp_path_factory):
    """Checkpoint whose head ignores the input: logits always (12, -12, 0)."""
    classifier, tokenizer = load_base(tiny_base)
    with torch.no_grad():
        classifier.head.weight.zero_()
        classifier.head.bias.copy_(torch.tensor([12.0, -12.0, 0.0]))
    out_dir = tmp_path_factory.mktemp("fixed_ckpt")
    return save_checkpoint(
        out_dir, classifier, tokenizer,
        epoch=1, val_macro_f1=0.0, base_model=tiny_base,
        threshold=0.5, max_length=32, config={},
    )
