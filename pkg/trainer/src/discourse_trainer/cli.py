"""Command-line entry point: ``train``, ``predict``, ``serve``.

Exit codes: 0 success, 2 input or configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

from . import __version__
from .data import DataError, load_examples
from .model import CheckpointError, open_checkpoint
from .predict import run_prediction
from .serve import DEFAULT_MAX_BATCH, build_server
from .train import DEFAULT_BASE_MODEL, TrainConfig, TrainingError, train

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT_ERROR = 2

_INPUT_ERRORS = (DataError, TrainingError, CheckpointError, OSError, ValueError)


def cmd_train(args: argparse.Namespace) -> int:
    cfg = TrainConfig(
        base_model=args.base_model,
        split_ratio=args.split_ratio,
        max_epochs=args.max_epochs,
        patience=args.patience,
        threshold=args.threshold,
        seed=args.seed,
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        max_length=args.max_length,
    )
    examples = load_examples(args.data)
    result = train(examples, cfg, args.out_dir)
    print(
        f"best epoch {result.checkpoint.epoch} "
        f"val macro-F1 {result.checkpoint.val_macro_f1:.4f} "
        f"({len(result.log)} epochs run)"
    )
    return EXIT_OK


def cmd_predict(args: argparse.Namespace) -> int:
    checkpoint = open_checkpoint(args.checkpoint)
    examples = load_examples(args.data)
    run_prediction(
        checkpoint, examples, args.out,
        threshold=args.threshold, batch_size=args.batch_size,
    )
    print(f"wrote {len(examples)} predictions to {args.out}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    checkpoint = open_checkpoint(args.checkpoint)
    server = build_server(checkpoint, args.port, max_batch=args.max_batch)
    host, port = server.server_address[:2]
    print(f"serving on http://{host}:{port}/predict", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="discourse-trainer",
        description="Fine-tune, export, and serve the tweet discourse classifier.",
    )
    parser.add_argument("--version", action="version", version=f"discourse-trainer {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("train", help="fine-tune on a labeled TSV")
    p.add_argument("--data", required=True, help="labeled dataset TSV")
    p.add_argument("--out-dir", required=True, help="checkpoint directory to write")
    p.add_argument("--base-model", default=DEFAULT_BASE_MODEL)
    p.add_argument("--split-ratio", type=float, default=0.9)
    p.add_argument("--max-epochs", type=int, default=20)
    p.add_argument("--patience", type=int, default=3)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--learning-rate", type=float, default=2e-5)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--max-length", type=int, default=256)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="classify a TSV and export predictions")
    p.add_argument("--checkpoint", required=True, help="checkpoint directory")
    p.add_argument("--data", required=True, help="dataset TSV (labels optional)")
    p.add_argument("--out", required=True, help="predictions TSV to write")
    p.add_argument("--threshold", type=float, default=None, help="override the trained threshold")
    p.add_argument("--batch-size", type=int, default=32)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("serve", help="run the HTTP inference endpoint")
    p.add_argument("--checkpoint", required=True, help="checkpoint directory")
    p.add_argument("--port", type=int, required=True, help="port to bind; 0 picks a free one")
    p.add_argument("--max-batch", type=int, default=DEFAULT_MAX_BATCH)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except _INPUT_ERRORS as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
