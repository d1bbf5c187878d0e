"""Batch pipeline for detecting scientific discourse in tweets.

Three binary categories per tweet: scientific claim, scientific study
reference, scientific entity mention.  A fine-tuned transformer covers
claims and entities, a retrieval-augmented few-shot LLM covers study
references, and the ensemble routes each category to its stronger
source.  Includes the macro-F1 evaluation harness used to score
predictions.
"""

from .corpus import (
    ALL_LABEL_VECTORS,
    CorpusError,
    Dataset,
    LabelParseError,
    LabelVector,
    Record,
    StatsReport,
    Tweet,
    audit_dependency,
    compute_stats,
    load_dataset,
    parse_label_vector,
)
from .ensemble import (
    EnsembleError,
    PipelineResult,
    PipelineRow,
    RoutingConfig,
    TransformerPrediction,
    fuse,
    load_any_predictions,
    load_transformer_predictions,
    read_predictions_tsv,
    run_pipeline,
    write_predictions_tsv,
)
from .gateway import (
    BatchResult,
    CacheEntry,
    ChatCall,
    ChatTransport,
    GatewayError,
    HttpChatTransport,
    LlmConfig,
    LlmPrediction,
    MockChatTransport,
    ResponseCache,
    TweetFailure,
    TweetRequestError,
    classify_batch,
    classify_tweet,
    mock_llm,
)
from .metrics import (
    CategoryScores,
    ConfusionCounts,
    MetricsError,
    MetricsReport,
    confusion,
    evaluate,
    format_report_table,
    macro_f1,
    precision_recall_f1,
)
from .prompting import (
    ParseFailure,
    PromptError,
    PromptTemplate,
    RenderedPrompt,
    parse_label_response,
    render_few_shot,
    render_zero_shot,
)
from .retrieval import (
    EmbeddedExample,
    EmbeddingProvider,
    ExampleIndex,
    HashEmbeddingProvider,
    IndexFormatError,
    RemoteEmbeddingProvider,
    RetrievalError,
    ScoredExample,
    build_index,
    hash_provider,
)

__version__ = "0.1.0"

__all__ = [
    "ALL_LABEL_VECTORS",
    "BatchResult",
    "CacheEntry",
    "CategoryScores",
    "ChatCall",
    "ChatTransport",
    "ConfusionCounts",
    "CorpusError",
    "Dataset",
    "EmbeddedExample",
    "EmbeddingProvider",
    "EnsembleError",
    "ExampleIndex",
    "GatewayError",
    "HashEmbeddingProvider",
    "HttpChatTransport",
    "IndexFormatError",
    "LabelParseError",
    "LabelVector",
    "LlmConfig",
    "LlmPrediction",
    "MetricsError",
    "MetricsReport",
    "MockChatTransport",
    "ParseFailure",
    "PipelineResult",
    "PipelineRow",
    "PromptError",
    "PromptTemplate",
    "Record",
    "RemoteEmbeddingProvider",
    "RenderedPrompt",
    "ResponseCache",
    "RetrievalError",
    "RoutingConfig",
    "ScoredExample",
    "StatsReport",
    "TransformerPrediction",
    "Tweet",
    "TweetFailure",
    "TweetRequestError",
    "audit_dependency",
    "build_index",
    "classify_batch",
    "classify_tweet",
    "compute_stats",
    "confusion",
    "evaluate",
    "format_report_table",
    "fuse",
    "hash_provider",
    "load_any_predictions",
    "load_dataset",
    "load_transformer_predictions",
    "macro_f1",
    "mock_llm",
    "parse_label_response",
    "parse_label_vector",
    "precision_recall_f1",
    "read_predictions_tsv",
    "render_few_shot",
    "render_zero_shot",
    "run_pipeline",
    "write_predictions_tsv",
]
