"""Command-line entry point exposing every pipeline stage.

Subcommands: ``stats``, ``index``, ``retrieve``, ``predict``, ``fuse``,
``evaluate``.  Logs go to stderr, data to stdout or the files named by
flags.  Exit codes are a stable scripting contract: 0 success, 2 input
or configuration error, 3 partial pipeline failure (some tweets got no
prediction).

Every run writes a manifest JSON next to its primary output: the
resolved configuration, input and output content digests, and the
prompt template checksums.  Manifests contain no timestamps, so a rerun
with a warm cache reproduces both the outputs and the manifest byte for
byte.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from . import __version__, wire
from .corpus import (
    ALL_SPLITS,
    CorpusError,
    Dataset,
    LabelVector,
    audit_dependency,
    compute_stats,
    load_dataset,
)
from .ensemble import (
    EnsembleError,
    RoutingConfig,
    fuse,
    load_any_predictions,
    load_transformer_predictions,
    run_pipeline,
    write_predictions_tsv,
)
from .gateway import (
    GatewayError,
    HttpChatTransport,
    LlmConfig,
    MockChatTransport,
    ResponseCache,
    mock_llm,
)
from .metrics import MetricsError, evaluate, format_report_table
from .prompting import PromptError, PromptTemplate
from .retrieval import (
    EmbeddingProvider,
    ExampleIndex,
    HashEmbeddingProvider,
    RemoteEmbeddingProvider,
    RetrievalError,
    build_index,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_PARTIAL_FAILURE = 3

_INPUT_ERRORS = (
    CorpusError,
    MetricsError,
    RetrievalError,
    PromptError,
    EnsembleError,
    GatewayError,
    wire.WireError,
    OSError,
)


def _version_text() -> str:
    lines = [f"scidiscourse {__version__}", "template checksums:"]
    for name, digest in PromptTemplate.load_default().checksums().items():
        lines.append(f"  {name}: {digest}")
    return "\n".join(lines)


class _VersionAction(argparse.Action):
    """Print the version block verbatim; the stock action re-wraps it."""

    def __init__(self, option_strings, dest, **kwargs):
        super().__init__(option_strings, dest, nargs=0, **kwargs)

    def __call__(self, parser, namespace, values, option_string=None):
        print(_version_text())
        parser.exit()


def _file_digest(path: Path) -> str:
    return "sha256:" + hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(
    path: Path,
    subcommand: str,
    config: dict,
    inputs: dict[str, Path],
    outputs: dict[str, Path],
) -> None:
    manifest = {
        "subcommand": subcommand,
        "version": __version__,
        "template_checksums": PromptTemplate.load_default().checksums(),
        "config": config,
        "inputs": {name: {"path": str(p), "digest": _file_digest(p)} for name, p in inputs.items()},
        "outputs": {name: {"path": str(p), "digest": _file_digest(p)} for name, p in outputs.items()},
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    log.info("wrote manifest %s", path)


def _manifest_path(args: argparse.Namespace, default_anchor: Path | None) -> Path:
    if args.manifest is not None:
        return Path(args.manifest)
    if default_anchor is not None:
        return default_anchor.with_name(default_anchor.name + ".manifest.json")
    return Path(f"{args.subcommand}.manifest.json")


def _provider_for_index(index: ExampleIndex) -> EmbeddingProvider:
    """Rebuild the embedding provider an index was created with."""
    hash_candidate = HashEmbeddingProvider(max(index.dimension, 8))
    if index.provider_name == hash_candidate.name:
        return HashEmbeddingProvider(index.dimension)
    if index.provider_name.startswith("remote:"):
        model = index.provider_name.split(":", 1)[1]
        return RemoteEmbeddingProvider(model, index.dimension)
    raise RetrievalError(
        f"index was built with unknown provider {index.provider_name!r}; cannot rebuild it"
    )


def _parse_mock(spec: str) -> MockChatTransport:
    """Parse ``--mock`` values: constant:C,R,E | echo:PATH | nearest-shot."""
    kind, _, arg = spec.partition(":")
    if kind == "constant":
        parts = arg.split(",")
        if len(parts) != 3:
            raise GatewayError(f"--mock constant needs 3 comma-separated values, got {arg!r}")
        try:
            values = [float(p) for p in parts]
        except ValueError as err:
            raise GatewayError(f"--mock constant values must be numeric: {err}") from err
        return mock_llm("constant", constant_labels=LabelVector.from_values(values))
    if kind == "echo":
        if not arg:
            raise GatewayError("--mock echo needs a labeled TSV path, e.g. echo:gold.tsv")
        fixture = load_dataset(arg, "train")
        return mock_llm("echo_fixture", fixture_labels=fixture.gold_map())
    if kind == "nearest-shot":
        if arg:
            raise GatewayError("--mock nearest-shot takes no argument")
        return mock_llm("nearest_shot_labels")
    raise GatewayError(
        f"unknown mock spec {spec!r}; expected constant:C,R,E, echo:PATH, or nearest-shot"
    )


def cmd_stats(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.data, args.split)
    report = compute_stats(dataset)
    violations = audit_dependency(dataset)

    print(f"split: {dataset.split}  records: {report.total}")
    rows = [
        ("Cat1 (claim)", report.per_category_counts[0], report.per_category_pct[0]),
        ("Cat2 (reference)", report.per_category_counts[1], report.per_category_pct[1]),
        ("Cat3 (entity)", report.per_category_counts[2], report.per_category_pct[2]),
        ("none", report.none_count, report.none_count / report.total if report.total else 0.0),
    ]
    print(f"{'category':<20}{'count':>8}{'pct':>9}")
    for name, count, pct in rows:
        print(f"{name:<20}{count:>8}{pct:>8.1%}")
    regions = " ".join(f"{k}={v}" for k, v in report.venn_region_counts.items())
    print(f"overlap regions (claim/reference/entity): {regions}")
    print(f"cat2-without-cat3 violations: {len(violations)}")

    outputs: dict[str, Path] = {}
    if args.json is not None:
        json_path = Path(args.json)
        json_path.parent.mkdir(parents=True, exist_ok=True)
        json_path.write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        outputs["stats_json"] = json_path
    _write_manifest(
        _manifest_path(args, Path(args.json) if args.json else None),
        "stats",
        {"data": str(args.data), "split": args.split, "json": args.json},
        {"data": Path(args.data)},
        outputs,
    )
    return EXIT_OK


def cmd_index(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.data, args.split)
    if args.provider == "hash":
        provider: EmbeddingProvider = HashEmbeddingProvider(args.dim)
    elif args.provider.startswith("remote:"):
        provider = RemoteEmbeddingProvider(args.provider.split(":", 1)[1], args.dim)
    else:
        raise RetrievalError(
            f"unknown provider {args.provider!r}; expected 'hash' or 'remote:MODEL'"
        )
    index = build_index(dataset, provider, batch_size=args.batch_size)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    index.save(out)
    log.info("indexed %d tweets with %s into %s", len(index), provider.name, out)
    _write_manifest(
        _manifest_path(args, out),
        "index",
        {
            "data": str(args.data),
            "split": args.split,
            "provider": args.provider,
            "dim": args.dim,
            "batch_size": args.batch_size,
            "out": str(out),
        },
        {"data": Path(args.data)},
        {"index": out},
    )
    return EXIT_OK


def cmd_retrieve(args: argparse.Namespace) -> int:
    index = ExampleIndex.load(args.index)
    provider = _provider_for_index(index)
    shots = index.top_k(args.query, args.k, provider, exclude_indices=tuple(args.exclude))
    print(f"{'rank':<6}{'similarity':>11}  {'index':>7}  {'labels':<17}text")
    for rank, shot in enumerate(shots, start=1):
        tweet = shot.example.tweet
        print(
            f"{rank:<6}{shot.similarity:>11.4f}  {tweet.index:>7}  "
            f"{shot.example.labels.serialize():<17}{tweet.text}"
        )
    if len(shots) < args.k:
        print(f"note: only {len(shots)} of {args.k} requested shots available after exclusions")
    _write_manifest(
        _manifest_path(args, None),
        "retrieve",
        {"index": str(args.index), "query": args.query, "k": args.k, "exclude": list(args.exclude)},
        {"index": Path(args.index)},
        {},
    )
    return EXIT_OK


def _load_index_and_provider(
    index_path: str | None, need: bool
) -> tuple[ExampleIndex | None, EmbeddingProvider | None]:
    if not need:
        return None, None
    if index_path is None:
        raise EnsembleError("this routing needs the llm route: pass --index (or --k 0 for zero-shot)")
    index = ExampleIndex.load(index_path)
    return index, _provider_for_index(index)


def cmd_predict(args: argparse.Namespace) -> int:
    routing = RoutingConfig.parse(args.routing)
    dataset = load_dataset(args.data, args.split)
    transformer_preds = load_transformer_predictions(
        args.transformer, args.threshold, inclusive=not args.exclusive_threshold
    )
    index, provider = _load_index_and_provider(args.index, routing.uses_llm and args.k > 0)
    template = PromptTemplate.load_default()
    config = LlmConfig(
        model_name=args.model,
        temperature=args.temperature,
        max_output_tokens=args.max_output_tokens,
        timeout=args.timeout,
        max_retries=args.max_retries,
        parallelism=args.parallelism,
    )
    transport = _parse_mock(args.mock) if args.mock else HttpChatTransport()
    cache = ResponseCache(args.cache) if args.cache else None

    result = run_pipeline(
        dataset,
        transformer_preds,
        routing,
        index=index,
        provider=provider,
        template=template,
        config=config,
        transport=transport,
        cache=cache,
        k=args.k,
        enforce_dependency=args.enforce_dependency,
    )
    out = Path(args.out)
    write_predictions_tsv(out, result.fused)
    log.info(
        "predicted %d tweets (%d cache hits, %d parse fallbacks)",
        len(result.rows),
        result.cache_hits,
        result.parse_failures,
    )

    inputs = {"data": Path(args.data), "transformer": Path(args.transformer)}
    if args.index:
        inputs["index"] = Path(args.index)
    _write_manifest(
        _manifest_path(args, out),
        "predict",
        {
            "data": str(args.data),
            "split": args.split,
            "transformer": str(args.transformer),
            "index": args.index,
            "routing": args.routing,
            "k": args.k,
            "model": args.model,
            "temperature": args.temperature,
            "max_output_tokens": args.max_output_tokens,
            "threshold": args.threshold,
            "exclusive_threshold": args.exclusive_threshold,
            "enforce_dependency": args.enforce_dependency,
            "cache": args.cache,
            "mock": args.mock,
            "out": str(out),
        },
        inputs,
        {"predictions": out},
    )
    if result.failed_indices:
        gaps = ", ".join(str(i) for i in result.failed_indices)
        print(
            f"error: no prediction for {len(result.failed_indices)} tweet(s): {gaps}",
            file=sys.stderr,
        )
        return EXIT_PARTIAL_FAILURE
    return EXIT_OK


def cmd_fuse(args: argparse.Namespace) -> int:
    routing = RoutingConfig.parse(args.routing)
    transformer_preds = load_transformer_predictions(
        args.transformer, args.threshold, inclusive=not args.exclusive_threshold
    )
    transformer_labels = {i: p.labels for i, p in transformer_preds.items()}
    if routing.uses_llm:
        if args.llm is None:
            raise EnsembleError("routing uses the llm route: pass --llm PREDICTIONS_TSV")
        llm_labels = load_any_predictions(args.llm)
        missing = sorted(set(transformer_labels) - set(llm_labels))
        if missing:
            shown = ", ".join(str(i) for i in missing[:20])
            more = f" (+{len(missing) - 20} more)" if len(missing) > 20 else ""
            raise EnsembleError(
                f"llm predictions missing for {len(missing)} tweet(s): {shown}{more}"
            )
    else:
        llm_labels = {}

    fused: dict[int, LabelVector] = {}
    for idx in sorted(transformer_labels):
        t_labels = transformer_labels[idx]
        l_labels = llm_labels.get(idx, t_labels)
        combined = fuse(t_labels, l_labels, routing)
        if args.enforce_dependency and combined.reference == 1 and combined.entity == 0:
            combined = LabelVector(combined.claim, combined.reference, 1)
        fused[idx] = combined
    out = Path(args.out)
    write_predictions_tsv(out, fused)
    log.info("fused %d predictions into %s", len(fused), out)

    inputs = {"transformer": Path(args.transformer)}
    if args.llm:
        inputs["llm"] = Path(args.llm)
    _write_manifest(
        _manifest_path(args, out),
        "fuse",
        {
            "transformer": str(args.transformer),
            "llm": args.llm,
            "routing": args.routing,
            "threshold": args.threshold,
            "exclusive_threshold": args.exclusive_threshold,
            "enforce_dependency": args.enforce_dependency,
            "out": str(out),
        },
        inputs,
        {"predictions": out},
    )
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    preds = load_any_predictions(args.preds)
    golds = load_dataset(args.gold, args.split).gold_map()
    report = evaluate(preds, golds, zero_division=args.zero_division)
    name = args.name or Path(args.preds).name
    print(format_report_table(report, name))

    outputs: dict[str, Path] = {}
    if args.json is not None:
        json_path = Path(args.json)
        json_path.parent.mkdir(parents=True, exist_ok=True)
        json_path.write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        outputs["report_json"] = json_path
    _write_manifest(
        _manifest_path(args, Path(args.json) if args.json else None),
        "evaluate",
        {
            "preds": str(args.preds),
            "gold": str(args.gold),
            "split": args.split,
            "zero_division": args.zero_division,
            "name": args.name,
            "json": args.json,
        },
        {"preds": Path(args.preds), "gold": Path(args.gold)},
        outputs,
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scidiscourse",
        description="Detect scientific discourse in tweets: stats, retrieval, prediction, fusion, scoring.",
    )
    parser.add_argument(
        "--version", action=_VersionAction, help="show version and template checksums"
    )
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="debug logging on stderr"
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_manifest(p: argparse.ArgumentParser) -> None:
        p.add_argument("--manifest", help="manifest path (default: next to the primary output)")

    p = sub.add_parser("stats", help="label distribution of a labeled split")
    p.add_argument("--data", required=True, help="dataset TSV")
    p.add_argument("--split", required=True, choices=sorted(ALL_SPLITS))
    p.add_argument("--json", help="also write the report as JSON to this path")
    add_manifest(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("index", help="embed a labeled split into a shot index")
    p.add_argument("--data", required=True, help="labeled dataset TSV")
    p.add_argument("--split", required=True, choices=sorted(ALL_SPLITS))
    p.add_argument("--out", required=True, help="index file to write")
    p.add_argument(
        "--provider",
        default="hash",
        help="embedding provider: 'hash' (offline) or 'remote:MODEL' (default: hash)",
    )
    p.add_argument("--dim", type=int, default=256, help="embedding dimension (default: 256)")
    p.add_argument("--batch-size", type=int, default=64, help="texts per embed call")
    add_manifest(p)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("retrieve", help="show the most similar stored tweets for a query")
    p.add_argument("--index", required=True, help="index file")
    p.add_argument("--query", required=True, help="query text")
    p.add_argument("--k", type=int, default=5, help="number of shots (default: 5)")
    p.add_argument(
        "--exclude",
        type=int,
        action="append",
        default=[],
        metavar="TWEET_INDEX",
        help="tweet index to exclude; repeatable",
    )
    add_manifest(p)
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("predict", help="run the full pipeline over a dataset")
    p.add_argument("--data", required=True, help="dataset TSV to classify")
    p.add_argument("--split", required=True, choices=sorted(ALL_SPLITS))
    p.add_argument("--transformer", required=True, help="transformer predictions TSV")
    p.add_argument("--out", required=True, help="fused predictions TSV to write")
    p.add_argument("--index", help="shot index file (needed when the llm route is used with k > 0)")
    p.add_argument(
        "--routing",
        default="transformer,llm,transformer",
        help="per-category source triple (default: transformer,llm,transformer)",
    )
    p.add_argument("--k", type=int, default=5, help="shots per prompt; 0 for zero-shot (default: 5)")
    p.add_argument("--model", default="gpt-4o", help="chat model name (default: gpt-4o)")
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--max-output-tokens", type=int, default=128)
    p.add_argument("--timeout", type=float, default=30.0, help="per-request timeout in seconds")
    p.add_argument("--max-retries", type=int, default=3)
    p.add_argument("--parallelism", type=int, default=4, help="concurrent llm requests")
    p.add_argument("--cache", help="response cache JSONL path")
    p.add_argument(
        "--mock",
        help="offline transport: constant:C,R,E | echo:LABELED_TSV | nearest-shot",
    )
    p.add_argument(
        "--threshold", type=float, default=0.5, help="probability threshold (default: 0.5)"
    )
    p.add_argument(
        "--exclusive-threshold",
        action="store_true",
        help="use strict > instead of >= at the threshold",
    )
    p.add_argument(
        "--enforce-dependency",
        action="store_true",
        help="force the entity bit on whenever the reference bit is set",
    )
    add_manifest(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("fuse", help="fuse transformer and llm prediction files")
    p.add_argument("--transformer", required=True, help="transformer predictions TSV")
    p.add_argument("--llm", help="llm predictions TSV (needed when routing uses the llm route)")
    p.add_argument("--out", required=True, help="fused predictions TSV to write")
    p.add_argument(
        "--routing",
        default="transformer,llm,transformer",
        help="per-category source triple (default: transformer,llm,transformer)",
    )
    p.add_argument(
        "--threshold", type=float, default=0.5, help="probability threshold (default: 0.5)"
    )
    p.add_argument(
        "--exclusive-threshold",
        action="store_true",
        help="use strict > instead of >= at the threshold",
    )
    p.add_argument(
        "--enforce-dependency",
        action="store_true",
        help="force the entity bit on whenever the reference bit is set",
    )
    add_manifest(p)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("evaluate", help="score a predictions file against gold labels")
    p.add_argument("--preds", required=True, help="predictions TSV (either layout)")
    p.add_argument("--gold", required=True, help="labeled dataset TSV")
    p.add_argument("--split", required=True, choices=sorted(ALL_SPLITS))
    p.add_argument(
        "--zero-division",
        type=float,
        default=0.0,
        help="value for 0/0 precision, recall, or F1 (default: 0)",
    )
    p.add_argument("--name", help="row label in the printed table (default: predictions file name)")
    p.add_argument("--json", help="also write the report as JSON to this path")
    add_manifest(p)
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
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
