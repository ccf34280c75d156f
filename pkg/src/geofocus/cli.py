"""Command-line interface.

Subcommands compose: ``geocode`` then ``predict`` then ``evaluate`` produce
exactly the artifacts of ``run``. Evaluation subcommands never touch the
network. Exit codes: 0 ok, 2 configuration error, 3 incomplete cache,
4 evaluation error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import pipeline
from .corpus import CorpusLoadError, load_corpus, load_keywords
from .evaluation import EvaluationError
from .gazetteer import GazetteerCache, IncompleteCacheError
from .pipeline import ConfigError, RunConfig

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INCOMPLETE_CACHE = 3
EXIT_EVALUATION = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geofocus",
                                     description="Country-level geographical focus of news documents")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("validate", "check a corpus file against the interchange schema"),
        ("geocode", "fill the gazetteer cache for all configured toponym types"),
        ("resolve", "dump resolved toponyms per layer and database"),
        ("predict", "write country prediction dumps"),
        ("evaluate", "compute all comparison reports from prediction dumps"),
        ("rank", "write only the ranking and correlation reports"),
        ("run", "full pipeline: geocode, predict, evaluate"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, help="TOML run configuration file")
        p.add_argument("--corpus", type=Path)
        p.add_argument("--cache", type=Path)
        p.add_argument("--fixture", type=Path)
        p.add_argument("--db", action="append", default=[], metavar="NAME",
                       help="database to query (repeatable): fixture, nominatim, geonames")
        p.add_argument("--layer", action="append", default=[], metavar="ID",
                       help="annotation layer to process (repeatable)")
        p.add_argument("--method", action="append", default=[], metavar="NAME",
                       help="prediction method (repeatable): majority, centroid, keyword")
        p.add_argument("--keywords", type=Path)
        p.add_argument("--min-docs", type=int, dest="min_docs")
        p.add_argument("--offline", action="store_true", default=None)
        p.add_argument("--jobs", type=int)
        p.add_argument("--out", type=Path)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    file_values: dict = {}
    base_dir = None
    if args.config:
        file_values = pipeline.load_config_file(args.config)
        base_dir = args.config.parent
    overrides = {
        "corpus": args.corpus,
        "cache": args.cache,
        "fixture": args.fixture,
        "databases": tuple(args.db),
        "layers": tuple(args.layer),
        "methods": tuple(args.method),
        "keywords": args.keywords,
        "min_docs": args.min_docs,
        "offline": args.offline,
        "jobs": args.jobs,
        "out": args.out,
    }
    overrides = {k: v for k, v in overrides.items() if v not in (None, (), [])}
    return pipeline.config_from_sources(file_values, overrides, base_dir=base_dir)


def cmd_validate(config: RunConfig) -> int:
    corpus = load_corpus(config.corpus)
    print(f"OK: {len(corpus.documents)} documents, "
          f"{len(corpus.layers)} annotation layers "
          f"({', '.join(corpus.layer_ids()) or 'none'})")
    excluded = sum(1 for d in corpus.documents.values() if d.excluded)
    if excluded:
        print(f"note: {excluded} documents without gold countries are excluded from gold-based scoring")
    return EXIT_OK


def cmd_geocode(config: RunConfig) -> int:
    config.validate()
    keywords = load_keywords(config.keywords)
    corpus = load_corpus(config.corpus, keywords=keywords)
    cache = GazetteerCache(config.cache)
    summary = pipeline.geocode_corpus(config, corpus, cache)
    print(json.dumps(summary, ensure_ascii=False, sort_keys=True, indent=2))
    return EXIT_OK


def cmd_resolve(config: RunConfig) -> int:
    config.validate()
    corpus = load_corpus(config.corpus)
    cache = GazetteerCache(config.cache)
    config.out.mkdir(parents=True, exist_ok=True)
    for layer_id in config.layers:
        for db in config.databases:
            resolved = pipeline.resolve_layer_db(corpus, layer_id, db, cache, jobs=config.jobs)
            path = config.out / f"resolved_{layer_id}_{db}.jsonl"
            pipeline.write_resolved_dump(path, layer_id, db, resolved)
            print(f"wrote {path}")
    return EXIT_OK


def cmd_predict(config: RunConfig) -> int:
    config.validate()
    keywords = load_keywords(config.keywords)
    corpus = load_corpus(config.corpus, keywords=keywords)
    cache = GazetteerCache(config.cache)
    pipeline.predict_corpus(config, corpus, cache, keywords)
    print(f"wrote prediction dumps for {len(config.layers)} layers x "
          f"{len(config.databases)} databases x {len(config.methods)} methods under {config.out}")
    return EXIT_OK


def cmd_evaluate(config: RunConfig) -> int:
    config.validate()
    keywords = load_keywords(config.keywords)
    corpus = load_corpus(config.corpus, keywords=keywords)
    cache = GazetteerCache(config.cache)
    pred_maps = pipeline.read_prediction_dumps(config)
    art = pipeline.evaluate_corpus(config, corpus, cache, pred_maps)
    for path in pipeline.write_reports(config, art):
        print(f"wrote {path}")
    return EXIT_OK


def cmd_rank(config: RunConfig) -> int:
    config.validate()
    keywords = load_keywords(config.keywords)
    corpus = load_corpus(config.corpus, keywords=keywords)
    cache = GazetteerCache(config.cache)
    pred_maps = pipeline.read_prediction_dumps(config)
    art = pipeline.evaluate_corpus(config, corpus, cache, pred_maps)
    provenance = {"config": pipeline.config_hash(config), "cache": pipeline.cache_hash(config)}
    from . import reports
    config.out.mkdir(parents=True, exist_ok=True)
    for path in (reports.write_correlations(config.out, art, provenance, config),
                 reports.write_rankings(config.out, art, provenance, config)):
        print(f"wrote {path}")
    return EXIT_OK


def cmd_run(config: RunConfig) -> int:
    summary = pipeline.run_pipeline(config)
    print(json.dumps(summary, ensure_ascii=False, sort_keys=True, indent=2))
    print(f"reports written under {config.out}")
    return EXIT_OK


_COMMANDS = {
    "validate": cmd_validate,
    "geocode": cmd_geocode,
    "resolve": cmd_resolve,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "rank": cmd_rank,
    "run": cmd_run,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _COMMANDS[args.command](config)
    except ConfigError as exc:
        print("configuration error:", file=sys.stderr)
        for problem in exc.problems:
            print(f"  - {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except CorpusLoadError as exc:
        print(f"corpus error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IncompleteCacheError as exc:
        print(f"incomplete cache: {exc}", file=sys.stderr)
        for toponym in exc.missing:
            print(f"  missing: {toponym!r}", file=sys.stderr)
        return EXIT_INCOMPLETE_CACHE
    except EvaluationError as exc:
        print(f"evaluation error: {exc}", file=sys.stderr)
        return EXIT_EVALUATION


if __name__ == "__main__":
    sys.exit(main())
