"""Fine-tuning, batch inference, and serving for the tweet discourse classifier.

Hands results to the ensemble pipeline exclusively through files and
HTTP: the predictions TSV, the checkpoint directory, and the ``serve``
endpoint. Nothing here imports the pipeline package.
"""

from .data import DataError, Example, load_examples, split_examples
from .model import (
    Checkpoint,
    CheckpointError,
    TextClassifier,
    load_base,
    open_checkpoint,
    save_checkpoint,
)
from .predict import (
    TSV_HEADER,
    export_predictions_tsv,
    labels_for,
    predict_probabilities,
    quantize_probability,
    run_prediction,
)
from .scoring import macro_f1, per_category_f1
from .serve import DEFAULT_MAX_BATCH, build_server
from .train import (
    DEFAULT_BASE_MODEL,
    EarlyStopping,
    EpochRecord,
    TrainConfig,
    TrainResult,
    TrainingError,
    predict_bits,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "Checkpoint",
    "CheckpointError",
    "DEFAULT_BASE_MODEL",
    "DEFAULT_MAX_BATCH",
    "DataError",
    "EarlyStopping",
    "EpochRecord",
    "Example",
    "TSV_HEADER",
    "TextClassifier",
    "TrainConfig",
    "TrainResult",
    "TrainingError",
    "build_server",
    "export_predictions_tsv",
    "labels_for",
    "load_base",
    "load_examples",
    "macro_f1",
    "open_checkpoint",
    "per_category_f1",
    "predict_bits",
    "predict_probabilities",
    "quantize_probability",
    "run_prediction",
    "save_checkpoint",
    "split_examples",
    "train",
    "__version__",
]
