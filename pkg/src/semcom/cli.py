"""Command-line front end.

Subcommands: tokenize, simulate, sweep, count-symbols, evaluate.
Exit codes: 0 success, 1 validation error, 2 runtime failure, 3 external
service failure. API keys are read from the environment variable named in
the configuration, never from flags or files.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__, evaluate, phy
from .baselines import RSCode, count_5bit_rs, count_huffman_rs, count_token_method, huffman_build
from .baselines.accounting import MethodCount, count_symbols
from .enhance import HashEmbedder, ServiceEmbedder
from .evaluate import (LabelSets, PipelineContext, QuestionType, SweepConfig, default_questions,
                       evaluate_corpus, run_pipeline, snr_sweep)
from .llm import HttpLlm, LlmTransportError, MockLlm, TranscriptLog
from .scene_graph import SceneGraphError, load_labels, load_scene_graph, serialize_triples
from .tokenizer import ids_to_bits, load_vocabulary, wordpiece_tokenize

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    vocab: str | None = None
    categories: str | None = None
    predicates: str | None = None
    scheme: str = "16QAM"
    channel: str = "awgn"
    snr_db: float = 18.0
    snrs_db: tuple[float, ...] = (0.0, 6.0, 12.0, 18.0)
    schemes: tuple[str, ...] = ("BPSK", "4QAM", "16QAM")
    channels: tuple[str, ...] = ("awgn",)
    token_bits: int = 16
    top_k: int = 4
    rs_n: int = 255
    rs_k: int = 223
    seed: int = 0
    equalize: bool | None = None
    embed_dim: int = 256
    llm_endpoint: str | None = None
    llm_model: str | None = None
    llm_api_key_env: str | None = None
    embed_endpoint: str | None = None
    embed_model: str | None = None
    embed_api_key_env: str | None = None
    mock_script: str | None = None
    transcript: str | None = None
    offline: bool = False
    out_dir: str = "."

    def validate(self, schemes=None) -> None:
        for scheme in schemes or (self.scheme,):
            try:
                n = phy.bits_per_symbol(scheme)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
            if self.token_bits % n:
                raise ConfigError(
                    f"token_bits={self.token_bits} does not pack into {scheme} symbols ({n} bits each)")
        if self.channel not in ("awgn", "rayleigh"):
            raise ConfigError(f"unknown channel {self.channel!r}")
        for channel in self.channels:
            if channel not in ("awgn", "rayleigh"):
                raise ConfigError(f"unknown channel {channel!r}")
        if self.top_k < 1:
            raise ConfigError("top_k must be at least 1")
        if not self.snrs_db:
            raise ConfigError("snrs_db must be non-empty")
        if not (0 < self.rs_k < self.rs_n <= 255):
            raise ConfigError(f"need 0 < rs_k < rs_n <= 255, got n={self.rs_n} k={self.rs_k}")
        if self.token_bits < 1 or self.token_bits > 32:
            raise ConfigError("token_bits must be in [1, 32]")


_CONFIG_KEYS = {f.name for f in RunConfig.__dataclass_fields__.values()}  # type: ignore[attr-defined]


def load_config(path: str | None) -> RunConfig:
    config = RunConfig()
    if path is None:
        return config
    try:
        with open(path, encoding="utf-8") as handle:
            raw = json.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key, value in raw.items():
        if key in ("snrs_db", "schemes", "channels"):
            value = tuple(value)
        setattr(config, key, value)
    return config


def _resolve_key(env_name: str | None) -> str | None:
    if not env_name:
        return None
    return os.environ.get(env_name) or None


def _build_clients(config: RunConfig):
    offline = config.offline or not config.llm_endpoint
    if offline:
        if config.mock_script:
            llm = MockLlm.from_script_file(config.mock_script)
        else:
            llm = MockLlm()
    else:
        llm = HttpLlm(config.llm_endpoint, config.llm_model or "default",
                      api_key=_resolve_key(config.llm_api_key_env))
    if config.offline or not config.embed_endpoint:
        embedder = HashEmbedder(config.embed_dim)
    else:
        embedder = ServiceEmbedder(config.embed_endpoint, config.embed_model or "default",
                                   api_key=_resolve_key(config.embed_api_key_env))
    return llm, embedder


def _build_context(config: RunConfig) -> PipelineContext:
    if not config.vocab:
        raise ConfigError("a vocabulary path is required (config key 'vocab' or --vocab)")
    try:
        vocab = load_vocabulary(config.vocab)
    except OSError as exc:
        raise ConfigError(f"cannot read vocabulary {config.vocab}: {exc}") from exc
    if len(vocab) > 1 << config.token_bits:
        raise ConfigError(
            f"vocabulary size {len(vocab)} exceeds 2**token_bits = {1 << config.token_bits}")
    llm, embedder = _build_clients(config)
    transcript = TranscriptLog(config.transcript) if config.transcript else None
    return PipelineContext(
        vocab=vocab,
        llm=llm,
        embedder=embedder,
        token_width=config.token_bits,
        top_k=config.top_k,
        equalize=config.equalize,
        transcript=transcript,
        model_id=config.llm_model or "mock",
    )


def _load_labels(config: RunConfig) -> LabelSets:
    categories = tuple(load_labels(config.categories)) if config.categories else ()
    predicates = tuple(load_labels(config.predicates)) if config.predicates else ()
    if not categories:
        raise ConfigError("a category label file is required (config key 'categories')")
    if not predicates:
        raise ConfigError("a predicate label file is required (config key 'predicates')")
    return LabelSets(categories, predicates)


def _load_graph(path: str, config: RunConfig):
    categories = load_labels(config.categories) if config.categories else None
    try:
        with open(path, encoding="utf-8") as handle:
            return load_scene_graph(handle.read(), categories)
    except OSError as exc:
        raise ConfigError(f"cannot read scene graph {path}: {exc}") from exc


def _corpus(paths, config: RunConfig):
    corpus = []
    for path in paths:
        graph = _load_graph(path, config)
        corpus.append((graph, default_questions(graph)))
    return corpus


def cmd_tokenize(args, config: RunConfig) -> int:
    context = _build_context(config)
    if args.graph:
        text = serialize_triples(_load_graph(args.input, config))
    else:
        try:
            with open(args.input, encoding="utf-8") as handle:
                text = handle.read().strip()
        except OSError as exc:
            raise ConfigError(f"cannot read {args.input}: {exc}") from exc
    frame = wordpiece_tokenize(text, context.vocab)
    stream = ids_to_bits(frame, config.token_bits)
    print(f"text: {text}")
    print(f"tokens: {len(frame.ids)}")
    print(f"ids: {' '.join(str(i) for i in frame.ids)}")
    print(f"bits: {len(stream)}")
    for scheme in config.schemes:
        n = phy.bits_per_symbol(scheme)
        print(f"symbols@{scheme}: {count_symbols(len(stream), n)}")
    return 0


def cmd_simulate(args, config: RunConfig) -> int:
    context = _build_context(config)
    graph = _load_graph(args.graph, config)
    questions = default_questions(graph)
    if args.qtype:
        wanted = QuestionType(args.qtype)
        questions = {wanted: args.question or questions[wanted]}
    elif args.question:
        questions = {QuestionType.CATEGORY: args.question}
    channel_config = phy.ChannelConfig(config.channel, config.snr_db, config.seed)
    for question_type, question in questions.items():
        reply, diagnostics = run_pipeline(graph, question, question_type, config.scheme,
                                          channel_config, context)
        print(f"[{question_type.value}] {question}")
        print(f"answer: {reply}")
        print(f"tokens: {diagnostics.n_tokens}  symbols: {diagnostics.symbol_count}  "
              f"ber: {diagnostics.ber:.6g}  token_error_rate: {diagnostics.token_error_rate:.6g}  "
              f"corrupted_ids: {diagnostics.corrupted_ids}")
        print(f"recovered: {diagnostics.recovered_text}")
        print()
    return 0


def _write_charts(report, out_dir: Path) -> None:
    width, height, margin = 480, 300, 40
    by_qtype: dict = {}
    for row in report.rows:
        by_qtype.setdefault(row.qtype, {}).setdefault((row.channel, row.scheme), []).append(
            (row.snr_db, row.recall))
    for qtype, series in sorted(by_qtype.items()):
        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">',
            f'<rect width="{width}" height="{height}" fill="white"/>',
            f'<text x="{width // 2}" y="16" text-anchor="middle" font-size="13">'
            f'recall vs SNR ({qtype})</text>',
        ]
        snrs = sorted({snr for points in series.values() for snr, _ in points})
        if len(snrs) < 2:
            snrs = snrs + [snrs[0] + 1.0] if snrs else [0.0, 1.0]
        lo, hi = snrs[0], snrs[-1]

        def x_of(snr):
            return margin + (width - 2 * margin) * (snr - lo) / (hi - lo or 1.0)

        def y_of(recall):
            return height - margin - (height - 2 * margin) * recall

        axis = (f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
                f'y2="{height - margin}" stroke="black"/>'
                f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" '
                f'stroke="black"/>')
        parts.append(axis)
        palette = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")
        for i, (key, points) in enumerate(sorted(series.items())):
            color = palette[i % len(palette)]
            points = sorted(points)
            path = " ".join(f"{x_of(s):.1f},{y_of(r):.1f}" for s, r in points)
            parts.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>')
            parts.append(f'<text x="{width - margin + 4}" y="{margin + 14 * i}" font-size="10" '
                         f'fill="{color}">{key[0]}/{key[1]}</text>')
        parts.append("</svg>")
        (out_dir / f"recall_{qtype}.svg").write_text("\n".join(parts), encoding="utf-8")


def cmd_sweep(args, config: RunConfig) -> int:
    config.validate(schemes=config.schemes)
    context = _build_context(config)
    labels = _load_labels(config)
    corpus = _corpus(args.graphs, config)
    if not corpus:
        raise ConfigError("sweep needs at least one scene-graph file")
    sweep_config = SweepConfig(tuple(config.snrs_db), tuple(config.schemes),
                               tuple(config.channels), config.seed)
    report = snr_sweep(sweep_config, corpus, context, labels)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = out_dir / "sweep_report.csv"
    report.write(report_path)
    print(f"wrote {report_path} ({len(report.rows)} rows)")
    if args.charts:
        _write_charts(report, out_dir)
        print(f"wrote charts to {out_dir}")
    for failure in report.failures:
        print(f"cell failed: {failure}", file=sys.stderr)
    return 0


def cmd_count_symbols(args, config: RunConfig) -> int:
    context = _build_context(config)
    corpus = [serialize_triples(_load_graph(path, config)) for path in args.graphs]
    if not corpus:
        raise ConfigError("count-symbols needs at least one scene-graph file")
    rs_code = RSCode(config.rs_n, config.rs_k)
    table = huffman_build("".join(corpus))
    n = phy.bits_per_symbol(config.scheme)
    totals: dict[str, MethodCount] = {}
    for text in corpus:
        frame = wordpiece_tokenize(text, context.vocab)
        for counted in (
            count_token_method(frame, config.token_bits, n),
            count_5bit_rs(text, rs_code, n),
            count_huffman_rs(text, table, rs_code, n),
        ):
            if counted.method in totals:
                previous = totals[counted.method]
                totals[counted.method] = MethodCount(
                    counted.method, previous.bits + counted.bits, n,
                    previous.symbols + counted.symbols)
            else:
                totals[counted.method] = counted
    base = totals["semantic-tokens"].symbols
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = ["method,bits,n,symbols,ratio_vs_semantic"]
    print(f"{'method':<16} {'bits':>10} {'n':>3} {'symbols':>10} {'ratio':>8}")
    for method in ("semantic-tokens", "5bit+rs", "huffman+rs"):
        counted = totals[method]
        ratio = counted.symbols / base if base else 0.0
        print(f"{method:<16} {counted.bits:>10} {n:>3} {counted.symbols:>10} {ratio:>8.3f}")
        lines.append(f"{method},{counted.bits},{n},{counted.symbols},{format(ratio, '.10g')}")
    csv_path = out_dir / "symbol_counts.csv"
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {csv_path}")
    print("reference point: a 1,040-token description costs 4,160 symbols at 16QAM")
    return 0


def cmd_evaluate(args, config: RunConfig) -> int:
    config.validate()
    context = _build_context(config)
    labels = _load_labels(config)
    corpus = _corpus(args.graphs, config)
    if not corpus:
        raise ConfigError("evaluate needs at least one scene-graph file")
    results = evaluate_corpus(corpus, config.scheme, config.channel, config.snr_db,
                              context, labels, seed=config.seed)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_lines = ["fixture,qtype,recall,precision,f1,token_error_rate,ber,symbols"]
    for row in results:
        csv_lines.append(",".join([
            str(row["fixture"]), row["qtype"],
            format(row["recall"], ".10g"), format(row["precision"], ".10g"),
            format(row["f1"], ".10g"), format(row["token_error_rate"], ".10g"),
            format(row["ber"], ".10g"), str(row["symbols"]),
        ]))
    csv_path = out_dir / "evaluation.csv"
    csv_path.write_text("\n".join(csv_lines) + "\n", encoding="utf-8")
    answers_path = out_dir / "evaluation_answers.jsonl"
    with open(answers_path, "w", encoding="utf-8") as handle:
        for row in results:
            handle.write(json.dumps(row, sort_keys=True) + "\n")
    mean_f1 = sum(row["f1"] for row in results) / len(results)
    print(f"wrote {csv_path} and {answers_path}")
    print(f"questions: {len(results)}  mean f1: {mean_f1:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semcom",
        description="Scene-graph semantic communication over simulated digital channels.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="JSON configuration file")
    parser.add_argument("--seed", type=int, help="override the configured seed")
    parser.add_argument("--out-dir", help="directory for reports and artifacts")
    parser.add_argument("--offline", action="store_true",
                        help="force the scripted mock client and hash embedder")
    parser.add_argument("--vocab", help="override the vocabulary path")
    parser.add_argument("--verbose", action="store_true", help="log progress details")
    commands = parser.add_subparsers(dest="command", required=True)

    tokenize = commands.add_parser("tokenize", help="tokenize text and count bits and symbols")
    tokenize.add_argument("input", help="text file, or a scene-graph JSON file with --graph")
    tokenize.add_argument("--graph", action="store_true",
                          help="treat the input as a scene graph and serialize it first")

    simulate = commands.add_parser("simulate", help="run the full chain once over one scene")
    simulate.add_argument("graph", help="scene-graph JSON file")
    simulate.add_argument("--question", help="override the question text")
    simulate.add_argument("--qtype", choices=[q.value for q in QuestionType],
                          help="restrict to one question type")

    sweep = commands.add_parser("sweep", help="factorial SNR sweep with a CSV report")
    sweep.add_argument("graphs", nargs="+", help="scene-graph JSON files")
    sweep.add_argument("--charts", action="store_true", help="also write SVG recall charts")

    count = commands.add_parser("count-symbols", help="symbol accounting across methods")
    count.add_argument("graphs", nargs="+", help="scene-graph JSON files")

    evaluate_cmd = commands.add_parser("evaluate", help="score answers for a corpus")
    evaluate_cmd.add_argument("graphs", nargs="+", help="scene-graph JSON files")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config.seed = args.seed
        if args.out_dir:
            config.out_dir = args.out_dir
        if args.offline:
            config.offline = True
        if args.vocab:
            config.vocab = args.vocab
        config.validate()
        handler = {
            "tokenize": cmd_tokenize,
            "simulate": cmd_simulate,
            "sweep": cmd_sweep,
            "count-symbols": cmd_count_symbols,
            "evaluate": cmd_evaluate,
        }[args.command]
        return handler(args, config)
    except (ConfigError, SceneGraphError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except LlmTransportError as exc:
        print(f"service error: {exc}", file=sys.stderr)
        return 3
    except evaluate.PipelineStageError as exc:
        if isinstance(exc.cause, LlmTransportError):
            print(f"service error: {exc}", file=sys.stderr)
            return 3
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
