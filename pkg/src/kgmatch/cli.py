"""Command-line pipeline orchestration.

Subcommands mirror the pipeline stages; `run` wires them end to end from
a key-value config file with CLI overrides (CLI > file > defaults) and
writes every intermediate artifact plus a machine-readable manifest.
"""

import argparse
import dataclasses
import hashlib
import json
import logging
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import evaluation, filters
from .alignment import Alignment, read_alignment, write_alignment_tsv, write_alignment_xml
from .candidates import topk_candidates
from .embeddings import (
    HashEmbedder,
    PrecomputedProvider,
    RemoteEmbeddingProvider,
    build_matrix,
    save_embedding_file,
)
from .graph import GraphParseError, KnowledgeGraph, parse_ntriples
from .lexical import baseline_match, high_precision_match
from .rerank import MockScorer, PairScorer, RemoteScorer, score_alignment
from .text import PairingStrategy, extract_bundles
from .training import TrainConfig, TrainMode, build_training_set, write_training_tsv

logger = logging.getLogger(__name__)


class ConfigError(Exception):
    """Invalid or incomplete run configuration; exit code 2."""


@dataclass
class RunConfig:
    source: str = ""
    target: str = ""
    mode: str = "match"
    output_dir: str = "out"
    k: int = 5
    strategy: str = "grouped"
    threshold: float = 0.5
    provider: str = "hash"
    dim: int = 64
    embed_endpoint: str = ""
    embed_model: str = ""
    embeddings_file: str = ""
    scorer: str = "mock"
    score_endpoint: str = ""
    score_model: str = ""
    max_length: int = 256
    train_mode: str = "precision"
    sample_share: float = 0.2
    seed: int = 42
    reference: str = ""
    alpha: float = 0.05

    def validate(self) -> None:
        if self.mode not in ("match", "train", "end2end"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if not self.source or not self.target:
            raise ConfigError("source and target graph paths are required")
        for path in (self.source, self.target):
            if not Path(path).exists():
                raise ConfigError(f"graph file not found: {path}")
        if self.strategy not in ("concat", "cross", "grouped"):
            raise ConfigError(f"unknown pairing strategy {self.strategy!r}")
        if self.k < 1:
            raise ConfigError("k must be at least 1")
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError("threshold must be in [0, 1]")
        if self.provider not in ("hash", "remote", "file"):
            raise ConfigError(f"unknown provider {self.provider!r}")
        if self.provider == "remote" and not self.embed_endpoint:
            raise ConfigError("provider=remote requires embed_endpoint")
        if self.provider == "file" and not self.embeddings_file:
            raise ConfigError("provider=file requires embeddings_file")
        if self.scorer not in ("mock", "remote"):
            raise ConfigError(f"unknown scorer {self.scorer!r}")
        if self.scorer == "remote" and not self.score_endpoint:
            raise ConfigError("scorer=remote requires score_endpoint")
        if self.train_mode not in ("precision", "reference"):
            raise ConfigError(f"unknown train_mode {self.train_mode!r}")
        if self.train_mode == "reference" and self.mode in ("train", "end2end") and not self.reference:
            raise ConfigError("train_mode=reference requires a reference path")

    def to_text(self) -> str:
        lines = [f"{field.name} = {getattr(self, field.name)}" for field in dataclasses.fields(self)]
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_text().encode("utf-8")).hexdigest()

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        values = {}
        # field.type is the class itself or its name, depending on whether
        # annotations are evaluated lazily
        by_name = {"int": int, "float": float, "str": str}
        casts = {
            field.name: by_name[field.type] if isinstance(field.type, str) else field.type
            for field in dataclasses.fields(cls)
        }
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in casts:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                values[key] = casts[key](value)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
        return cls(**values)


_STRATEGIES = {
    "concat": PairingStrategy.CONCAT,
    "cross": PairingStrategy.FULL_CROSS,
    "grouped": PairingStrategy.GROUPED,
}


def _load_graph(path: str, graph_id: str) -> KnowledgeGraph:
    return parse_ntriples(Path(path), graph_id)


def _make_provider(config: RunConfig):
    if config.provider == "hash":
        return HashEmbedder(dim=config.dim)
    if config.provider == "remote":
        return RemoteEmbeddingProvider(config.embed_endpoint, config.embed_model)
    return PrecomputedProvider.from_file(config.embeddings_file)


def _make_scorer(config: RunConfig) -> PairScorer:
    if config.scorer == "mock":
        return MockScorer()
    return RemoteScorer(config.score_endpoint, config.score_model, max_length=config.max_length)


class _Manifest:
    def __init__(self, config: RunConfig):
        self.data = {
            "config": dataclasses.asdict(config),
            "configHash": config.config_hash(),
            "stages": [],
            "outputs": {},
        }
        self._t0 = time.monotonic()

    def stage(self, name: str, count: int) -> None:
        now = time.monotonic()
        self.data["stages"].append({"name": name, "seconds": round(now - self._t0, 3), "count": count})
        self._t0 = now

    def output(self, name: str, path: Path) -> None:
        self.data["outputs"][name] = str(path)

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(self.data, indent=2) + "\n", encoding="utf-8")


def run_pipeline(config: RunConfig) -> dict:
    """Execute the configured mode; returns the manifest data."""
    config.validate()
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = _Manifest(config)

    g1 = _load_graph(config.source, "source")
    g2 = _load_graph(config.target, "target")
    manifest.stage("parse", len(g1.triples) + len(g2.triples))
    bundles1 = extract_bundles(g1)
    bundles2 = extract_bundles(g2)
    manifest.stage("extract", len(bundles1) + len(bundles2))
    provider = _make_provider(config)
    strategy = _STRATEGIES[config.strategy]

    if config.mode in ("train", "end2end"):
        reference = read_alignment(config.reference) if config.reference else None
        train_config = TrainConfig(
            mode=TrainMode.REFERENCE if config.train_mode == "reference" else TrainMode.PRECISION_MATCHER,
            sample_share=config.sample_share,
            rng_seed=config.seed,
            strategy=strategy,
            k=config.k,
        )
        pairs = build_training_set(
            g1, g2, train_config, provider, reference=reference, bundles1=bundles1, bundles2=bundles2
        )
        train_path = out_dir / "training.tsv"
        write_training_tsv(pairs, train_path)
        manifest.stage("train-data", len(pairs))
        manifest.output("training", train_path)

    if config.mode in ("match", "end2end"):
        candidates = topk_candidates(bundles1, bundles2, g1.entities, g2.entities, provider, config.k)
        budget = config.k * (len(g1.entities) + len(g2.entities))
        if len(candidates) > budget:
            raise RuntimeError(f"{len(candidates)} candidates exceed the k(|O1|+|O2|) bound {budget}")
        recall_path = out_dir / "recall.tsv"
        write_alignment_tsv(candidates, recall_path)
        manifest.stage("candidates", len(candidates))
        manifest.output("recall", recall_path)

        scorer = _make_scorer(config)
        scored = score_alignment(candidates, bundles1, bundles2, strategy, scorer)
        scored_path = out_dir / "scored.tsv"
        write_alignment_tsv(scored, scored_path)
        manifest.stage("rerank", len(scored))
        manifest.output("scored", scored_path)

        final = filters.apply_chain(scored, filters.default_chain(config.threshold))
        final_path = out_dir / "alignment.tsv"
        write_alignment_tsv(final, final_path)
        manifest.stage("filter", len(final))
        manifest.output("alignment", final_path)

        if config.reference:
            reference = read_alignment(config.reference)
            case = evaluation.evaluate_case("run", final, reference)
            report = evaluation.macro_micro([case])
            eval_path = out_dir / "evaluation.json"
            eval_path.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
            manifest.stage("evaluate", case.true_positives)
            manifest.output("evaluation", eval_path)

    manifest.write(out_dir / "manifest.json")
    return manifest.data


def _write_output(alignment: Alignment, path: str) -> None:
    if path.endswith(".xml") or path.endswith(".rdf"):
        write_alignment_xml(alignment, path)
    else:
        write_alignment_tsv(alignment, path)


def _cmd_match_lexical(args: argparse.Namespace) -> int:
    g1 = _load_graph(args.source, "source")
    g2 = _load_graph(args.target, "target")
    matcher = high_precision_match if args.matcher == "precision" else baseline_match
    alignment = matcher(g1, g2)
    _write_output(alignment, args.out)
    print(f"{len(alignment)} correspondences -> {args.out}")
    return 0


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    config = RunConfig()
    for field in dataclasses.fields(RunConfig):
        value = getattr(args, field.name, None)
        if value is not None:
            setattr(config, field.name, value)
    return config


def _cmd_generate_candidates(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    config.validate()
    if args.save_embeddings and config.provider == "file":
        raise ConfigError("--save-embeddings needs a live provider, not precomputed files")
    g1 = _load_graph(config.source, "source")
    g2 = _load_graph(config.target, "target")
    bundles1, bundles2 = extract_bundles(g1), extract_bundles(g2)
    provider = _make_provider(config)
    candidates = topk_candidates(bundles1, bundles2, g1.entities, g2.entities, provider, config.k)
    _write_output(candidates, args.out)
    if args.save_embeddings:
        save_embedding_file(build_matrix(bundles1, provider), args.save_embeddings + ".source")
        save_embedding_file(build_matrix(bundles2, provider), args.save_embeddings + ".target")
    print(f"{len(candidates)} candidates -> {args.out}")
    return 0


def _cmd_rerank(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    config.validate()
    candidates = read_alignment(args.candidates)
    g1 = _load_graph(config.source, "source")
    g2 = _load_graph(config.target, "target")
    bundles1, bundles2 = extract_bundles(g1), extract_bundles(g2)
    scored = score_alignment(candidates, bundles1, bundles2, _STRATEGIES[config.strategy], _make_scorer(config))
    _write_output(scored, args.out)
    print(f"{len(scored)} correspondences rescored -> {args.out}")
    return 0


def _cmd_filter(args: argparse.Namespace) -> int:
    alignment = read_alignment(args.input)
    chain: list[filters.Filter] = []
    if not args.no_cut:
        chain.append(filters.make_cut(args.threshold))
    if not args.no_assign:
        chain.append(filters.mwb_filter)
    result = filters.apply_chain(alignment, chain)
    _write_output(result, args.out)
    print(f"{len(alignment)} -> {len(result)} correspondences -> {args.out}")
    return 0


def _cmd_train_data(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    config.mode = "train"
    config.validate()
    g1 = _load_graph(config.source, "source")
    g2 = _load_graph(config.target, "target")
    reference = read_alignment(config.reference) if config.reference else None
    train_config = TrainConfig(
        mode=TrainMode.REFERENCE if config.train_mode == "reference" else TrainMode.PRECISION_MATCHER,
        sample_share=config.sample_share,
        rng_seed=config.seed,
        strategy=_STRATEGIES[config.strategy],
        k=config.k,
    )
    pairs = build_training_set(g1, g2, train_config, _make_provider(config), reference=reference)
    write_training_tsv(pairs, args.out)
    positives = sum(1 for p in pairs if p.label.value == 1)
    print(f"{len(pairs)} pairs ({positives} positive) -> {args.out}")
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    system = read_alignment(args.system)
    reference = read_alignment(args.reference)
    case = evaluation.evaluate_case(args.name, system, reference)
    report = evaluation.macro_micro([case])
    payload = report.to_dict()
    if args.compare:
        other = read_alignment(args.compare)
        result = evaluation.mcnemar_test(system, other, reference, args.alpha)
        payload["mcnemar"] = result.to_dict()
    print(evaluation.format_report(report))
    if args.compare:
        result_dict = payload["mcnemar"]
        print(
            f"mcnemar: b={result_dict['b']} c={result_dict['c']}"
            f" statistic={result_dict['statistic']:.4f} p={result_dict['pValue']:.6f}"
            f" significant={result_dict['significant']}"
        )
    if args.json:
        Path(args.json).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    config = RunConfig.from_file(args.config) if args.config else RunConfig()
    for field in dataclasses.fields(RunConfig):
        value = getattr(args, field.name, None)
        if value is not None:
            setattr(config, field.name, value)
    manifest = run_pipeline(config)
    print(json.dumps(manifest["stages"], indent=2))
    return 0


def _add_graph_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--source", required=True, help="source graph (N-Triples)")
    parser.add_argument("--target", required=True, help="target graph (N-Triples)")


def _add_provider_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--provider", choices=["hash", "remote", "file"], default=None)
    parser.add_argument("--dim", type=int, default=None, help="hash embedder dimension")
    parser.add_argument("--embed-endpoint", dest="embed_endpoint", default=None)
    parser.add_argument("--embed-model", dest="embed_model", default=None)
    parser.add_argument("--embeddings-file", dest="embeddings_file", default=None)
    parser.add_argument("--k", type=int, default=None, help="candidates per entity")


def _add_scorer_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scorer", choices=["mock", "remote"], default=None)
    parser.add_argument("--score-endpoint", dest="score_endpoint", default=None)
    parser.add_argument("--score-model", dest="score_model", default=None)
    parser.add_argument("--max-length", dest="max_length", type=int, default=None)
    parser.add_argument("--strategy", choices=["concat", "cross", "grouped"], default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kgmatch", description="two-stage graph matching pipeline")
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("match-lexical", help="label-equality matcher")
    _add_graph_args(p)
    p.add_argument("--matcher", choices=["baseline", "precision"], default="precision")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_match_lexical)

    p = sub.add_parser("generate-candidates", help="top-k embedding blocking")
    _add_graph_args(p)
    _add_provider_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--save-embeddings", default=None, help="also dump embedding files with this prefix")
    p.set_defaults(func=_cmd_generate_candidates)

    p = sub.add_parser("rerank", help="rescore candidates with a pair scorer")
    _add_graph_args(p)
    _add_scorer_args(p)
    p.add_argument("--candidates", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_rerank)

    p = sub.add_parser("filter", help="confidence cut and one-to-one assignment")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", type=float, default=filters.DEFAULT_THRESHOLD)
    p.add_argument("--no-cut", action="store_true")
    p.add_argument("--no-assign", action="store_true")
    p.set_defaults(func=_cmd_filter)

    p = sub.add_parser("train-data", help="build a training-pair file")
    _add_graph_args(p)
    _add_provider_args(p)
    p.add_argument("--strategy", choices=["concat", "cross", "grouped"], default=None)
    p.add_argument("--train-mode", dest="train_mode", choices=["precision", "reference"], default=None)
    p.add_argument("--reference", default=None)
    p.add_argument("--sample-share", dest="sample_share", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train_data)

    p = sub.add_parser("evaluate", help="score a system alignment against a reference")
    p.add_argument("--system", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--compare", default=None, help="second system for a McNemar test")
    p.add_argument("--alpha", type=float, default=evaluation.DEFAULT_ALPHA)
    p.add_argument("--name", default="case")
    p.add_argument("--json", default=None, help="also write the JSON report here")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("run", help="end-to-end pipeline from a config file")
    p.add_argument("--config", default=None, help="key = value config file")
    p.add_argument("--mode", choices=["match", "train", "end2end"], default=None)
    _add_graph_args_optional(p)
    _add_provider_args(p)
    _add_scorer_args(p)
    p.add_argument("--output-dir", dest="output_dir", default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--train-mode", dest="train_mode", choices=["precision", "reference"], default=None)
    p.add_argument("--reference", default=None)
    p.add_argument("--sample-share", dest="sample_share", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_run)

    return parser


def _add_graph_args_optional(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--source", default=None, help="source graph (N-Triples)")
    parser.add_argument("--target", default=None, help="target graph (N-Triples)")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level.upper(), logging.WARNING))
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (GraphParseError, OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
