"""End-to-end pipeline: geocode, resolve, predict, evaluate.

Stages are composable and deterministic: given the same corpus, cache and
configuration, artifacts are byte-identical regardless of parallelism.
Evaluation never touches the network; only the geocode stage may, and only
when offline mode is off.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from . import evaluation, prediction, reports
from .corpus import Corpus, KeywordConfig, load_corpus, load_keywords
from .gazetteer import (
    FixtureGazetteer,
    GazetteerCache,
    GazetteerClient,
    GeonamesClient,
    IncompleteCacheError,
    NominatimClient,
    TransportError,
    filter_matches,
)
from .resolution import ResolvedToponym, resolve_document

KNOWN_DATABASES = ("fixture", "nominatim", "geonames")


class ConfigError(ValueError):
    """Run configuration is invalid; carries one message per offending field."""

    def __init__(self, problems: Sequence[str]):
        super().__init__("; ".join(problems))
        self.problems = list(problems)


@dataclass(frozen=True)
class RunConfig:
    corpus: Path
    cache: Path
    keywords: Path
    out: Path
    databases: tuple[str, ...]
    layers: tuple[str, ...]
    methods: tuple[str, ...]
    fixture: Path | None = None
    min_docs: int = 10
    offline: bool = False
    jobs: int = 1
    nominatim_url: str | None = None
    geonames_user: str | None = None
    rate_interval: float = 1.0

    def validate(self) -> None:
        problems = []
        if not self.databases:
            problems.append("databases: at least one database is required")
        for db in self.databases:
            if db not in KNOWN_DATABASES:
                problems.append(f"databases: unknown database {db!r} (choose from {KNOWN_DATABASES})")
        if not self.layers:
            problems.append("layers: at least one layer is required")
        if not self.methods:
            problems.append("methods: at least one method is required")
        for m in self.methods:
            if m not in prediction.METHODS:
                problems.append(f"methods: unknown method {m!r} (choose from {prediction.METHODS})")
        if not self.corpus or not Path(self.corpus).is_file():
            problems.append(f"corpus: file not found: {self.corpus}")
        if not self.keywords or not Path(self.keywords).is_file():
            problems.append(f"keywords: file not found: {self.keywords}")
        if "fixture" in self.databases:
            if self.fixture is None or not Path(self.fixture).is_file():
                problems.append(f"fixture: file not found: {self.fixture}")
        if self.min_docs < 1:
            problems.append("min_docs: must be >= 1")
        if self.jobs < 1:
            problems.append("jobs: must be >= 1")
        if problems:
            raise ConfigError(problems)


def load_config_file(path: str | Path) -> dict:
    try:
        import tomllib  # Python >= 3.11
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def config_from_sources(file_values: Mapping, overrides: Mapping, base_dir: Path | None = None) -> RunConfig:
    """Merge a config-file mapping with command-line overrides (flags win).

    Relative paths in the file resolve against the file's directory.
    """
    merged = dict(file_values)
    for key, value in overrides.items():
        if value not in (None, [], ()):
            merged[key] = value

    def path_of(key, default=None):
        raw = merged.get(key, default)
        if raw is None:
            return None
        p = Path(raw)
        if not p.is_absolute() and base_dir is not None and key not in overrides:
            p = base_dir / p
        return p

    return RunConfig(
        corpus=path_of("corpus", "corpus.jsonl"),
        cache=path_of("cache", "cache.jsonl"),
        keywords=path_of("keywords", "keywords.txt"),
        out=path_of("out", "out"),
        fixture=path_of("fixture"),
        databases=tuple(merged.get("databases", ())),
        layers=tuple(merged.get("layers", ())),
        methods=tuple(merged.get("methods", ())),
        min_docs=int(merged.get("min_docs", 10)),
        offline=bool(merged.get("offline", False)),
        jobs=int(merged.get("jobs", 1)),
        nominatim_url=merged.get("nominatim_url"),
        geonames_user=merged.get("geonames_user"),
        rate_interval=float(merged.get("rate_interval", 1.0)),
    )


# --- provenance -----------------------------------------------------------

def _file_sha(path: Path | None) -> str:
    if path is None or not Path(path).exists():
        return "absent"
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def config_hash(config: RunConfig) -> str:
    """Content-based digest: identical pipelines hash identically no matter
    where their files live on disk."""
    payload = {
        "databases": sorted(config.databases),
        "layers": sorted(config.layers),
        "methods": sorted(config.methods),
        "min_docs": config.min_docs,
        "corpus_sha": _file_sha(config.corpus),
        "keywords_sha": _file_sha(config.keywords),
        "fixture_sha": _file_sha(config.fixture),
    }
    digest = hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()
    return digest[:12]


def cache_hash(config: RunConfig) -> str:
    h = _file_sha(config.cache)
    return h[:12] if h != "absent" else h


# --- stage: geocode --------------------------------------------------------

def build_clients(config: RunConfig, cache: GazetteerCache) -> dict[str, GazetteerClient]:
    clients: dict[str, GazetteerClient] = {}
    for db in config.databases:
        if db == "fixture":
            clients[db] = FixtureGazetteer(cache, config.fixture)
        elif db == "nominatim":
            clients[db] = NominatimClient(cache, base_url=config.nominatim_url,
                                          min_interval=config.rate_interval)
        elif db == "geonames":
            clients[db] = GeonamesClient(cache, username=config.geonames_user)
    return clients


def corpus_toponym_types(corpus: Corpus, layers: Sequence[str]) -> list[str]:
    from .corpus import toponym_types
    types: set[str] = set()
    for layer_id in layers:
        types |= toponym_types(corpus, layer_id)
    return sorted(types)


def geocode_corpus(config: RunConfig, corpus: Corpus, cache: GazetteerCache,
                   clients: Mapping[str, GazetteerClient] | None = None,
                   retries: int = 3, backoff: float = 1.0) -> dict:
    """Ensure the cache holds every toponym type of every configured layer.

    Returns a per-database summary of new vs cached fetches. Transport
    failures are retried a bounded number of times; whatever was fetched
    stays in the cache, so an interrupted run resumes where it stopped.
    """
    clients = clients or build_clients(config, cache)
    types = corpus_toponym_types(corpus, config.layers)
    summary: dict[str, dict] = {}
    for db in config.databases:
        client = clients[db]
        missing = [t for t in types if (db, t) not in cache]
        if config.offline and client.requires_network and missing:
            raise IncompleteCacheError(db, missing)
        new = 0
        failed: list[str] = []
        for toponym in missing:
            for attempt in range(retries):
                try:
                    client.query(toponym)
                    new += 1
                    break
                except TransportError:
                    if attempt + 1 == retries:
                        failed.append(toponym)
                    else:
                        time.sleep(backoff * (attempt + 1))
        summary[db] = {
            "total_types": len(types),
            "new": new,
            "cached": len(types) - len(missing),
            "failed": failed,
        }
        if failed:
            if cache.dirty:
                cache.save()
            raise IncompleteCacheError(db, failed)
    if cache.dirty:
        cache.save()
    return summary


# --- stage: resolve ---------------------------------------------------------

def surviving_matches(cache: GazetteerCache, db: str, surfaces: Sequence[str]) -> dict:
    """Per-surface filtered match lists from the cache; a missing entry is a
    hard error because resolution must never trigger network traffic."""
    out = {}
    missing = []
    for surface in surfaces:
        raw = cache.get(db, surface)
        if raw is None:
            missing.append(surface)
        else:
            out[surface] = filter_matches(raw)
    if missing:
        raise IncompleteCacheError(db, sorted(set(missing)))
    return out


def resolve_layer_db(corpus: Corpus, layer_id: str, db: str, cache: GazetteerCache,
                     jobs: int = 1) -> dict[str, list[ResolvedToponym]]:
    """Resolve every document of one (layer, database) pair."""

    def one(doc_id: str) -> tuple[str, list[ResolvedToponym]]:
        doc = corpus.documents[doc_id]
        layer = corpus.layer_for(doc_id, layer_id)
        surfaces = sorted({s.surface for s in layer.spans})
        matches = surviving_matches(cache, db, surfaces)
        return doc_id, resolve_document(doc, layer, matches)

    doc_ids = corpus.doc_ids()
    if jobs <= 1:
        results = dict(one(d) for d in doc_ids)
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = dict(pool.map(one, doc_ids))
    return {d: results[d] for d in doc_ids}


def write_resolved_dump(path: Path, layer_id: str, db: str,
                        resolved: Mapping[str, list[ResolvedToponym]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id in sorted(resolved):
            for r in resolved[doc_id]:
                fh.write(json.dumps({
                    "doc": doc_id, "layer": layer_id,
                    "start": r.span.start, "end": r.span.end, "surface": r.span.surface,
                    "lat": r.match.latitude, "lon": r.match.longitude,
                    "country": r.country, "how": r.how,
                }, ensure_ascii=False) + "\n")


# --- stage: predict ----------------------------------------------------------

def prediction_dump_path(out: Path, layer_id: str, db: str, method: str) -> Path:
    return out / f"predictions_{layer_id}_{db}_{method}.jsonl"


def predict_corpus(config: RunConfig, corpus: Corpus, cache: GazetteerCache,
                   keywords: KeywordConfig) -> dict[tuple[str, str, str], dict[str, frozenset[str]]]:
    """Resolve and predict for every configured (layer, db, method); write
    one prediction dump per combination."""
    config.out.mkdir(parents=True, exist_ok=True)
    maps: dict[tuple[str, str, str], dict[str, frozenset[str]]] = {}
    records: dict[tuple[str, str, str], list[prediction.CountryPrediction]] = {
        (l, d, m): [] for l in config.layers for d in config.databases for m in config.methods
    }
    for layer_id in config.layers:
        for db in config.databases:
            resolved_by_doc = resolve_layer_db(corpus, layer_id, db, cache, jobs=config.jobs)
            for doc_id in corpus.doc_ids():
                doc = corpus.documents[doc_id]
                preds = prediction.predict_document(
                    doc, layer_id, db, resolved_by_doc[doc_id],
                    methods=config.methods, keywords=keywords,
                )
                for p in preds:
                    records[(layer_id, db, p.method)].append(p)
    for (layer_id, db, method), preds in records.items():
        path = prediction_dump_path(config.out, layer_id, db, method)
        with open(path, "w", encoding="utf-8") as fh:
            for p in sorted(preds, key=lambda q: q.doc_id):
                fh.write(json.dumps({
                    "doc": p.doc_id, "layer": p.layer_id, "db": p.db, "method": p.method,
                    "countries": sorted(p.countries),
                    "diagnostics": p.diagnostics,
                }, ensure_ascii=False, sort_keys=True) + "\n")
        maps[(layer_id, db, method)] = {p.doc_id: p.countries for p in preds}
    return maps


def read_prediction_dumps(config: RunConfig) -> dict[tuple[str, str, str], dict[str, frozenset[str]]]:
    maps: dict[tuple[str, str, str], dict[str, frozenset[str]]] = {}
    for layer_id in config.layers:
        for db in config.databases:
            for method in config.methods:
                path = prediction_dump_path(config.out, layer_id, db, method)
                if not path.is_file():
                    raise evaluation.EvaluationError(
                        f"missing prediction dump {path}; run the predict stage first"
                    )
                m: dict[str, frozenset[str]] = {}
                with open(path, "r", encoding="utf-8") as fh:
                    for line in fh:
                        if line.strip():
                            obj = json.loads(line)
                            m[obj["doc"]] = frozenset(obj["countries"])
                maps[(layer_id, db, method)] = m
    return maps


# --- stage: evaluate ----------------------------------------------------------

@dataclass
class EvaluationArtifacts:
    layer_rows: list[dict] = field(default_factory=list)
    agreement_rows: list[dict] = field(default_factory=list)
    gold_rows: list[dict] = field(default_factory=list)
    correlation_rows: list[dict] = field(default_factory=list)
    iou: dict = field(default_factory=dict)
    rankings: dict = field(default_factory=dict)


def evaluate_corpus(config: RunConfig, corpus: Corpus, cache: GazetteerCache,
                    pred_maps: Mapping[tuple[str, str, str], Mapping[str, frozenset[str]]]) -> EvaluationArtifacts:
    from .gazetteer import coverage_stats

    art = EvaluationArtifacts()

    # Per-layer output statistics and gazetteer coverage.
    for layer_id in config.layers:
        mean, sd, total, n_types = evaluation.layer_stats(corpus, layer_id)
        row = {"layer": layer_id, "n_toponyms": total, "n_types": n_types,
               "mean_per_doc": mean, "sd_per_doc": sd}
        for db in config.databases:
            row[f"pct_in_{db}"] = 100.0 * coverage_stats(corpus, layer_id, CachedSource(cache, db))
        art.layer_rows.append(row)

    # Span agreement per document for every layer pair.
    pairs = [(a, b) for i, a in enumerate(config.layers) for b in config.layers[i + 1:]]
    iou_by_pair: dict[str, list] = {}
    both_empty: dict[str, list[str]] = {}
    for a, b in pairs:
        key = f"{a}|{b}"
        values = []
        empties = []
        for doc_id in corpus.doc_ids():
            sa = evaluation.span_keys(corpus, doc_id, a)
            sb = evaluation.span_keys(corpus, doc_id, b)
            values.append([doc_id, evaluation.doc_iou(sa, sb)])
            if not sa and not sb:
                empties.append(doc_id)
        iou_by_pair[key] = values
        if empties:
            both_empty[key] = empties
    art.iou = {"pairs": iou_by_pair, "both_empty_docs": both_empty}

    # Bilateral prediction agreement.
    for a, b in pairs:
        row: dict = {"pair": f"{a} vs {b}"}
        for db in config.databases:
            for method in config.methods:
                row[f"{db}_{method}"] = evaluation.bilateral_agreement(
                    pred_maps[(a, db, method)], pred_maps[(b, db, method)]
                )
        art.agreement_rows.append(row)

    # Gold accuracy; documents with no gold countries stay out of scope, and
    # empty predictions count as misses but are tallied per row.
    gold_ids = [d for d in corpus.doc_ids() if not corpus.documents[d].excluded]
    for method in config.methods:
        for layer_id in config.layers:
            row = {"method": method, "layer": layer_id}
            for db in config.databases:
                scoped = {d: pred_maps[(layer_id, db, method)][d] for d in gold_ids}
                exact, partial = evaluation.gold_match(scoped, corpus)
                row[f"{db}_exact"] = exact
                row[f"{db}_overlap"] = partial
                row[f"{db}_n_empty"] = sum(1 for d in gold_ids if not scoped[d])
            art.gold_rows.append(row)

    # Country-frequency rankings and their correlation with gold.
    gold_ranking = evaluation.country_ranking(
        (corpus.documents[d].gold_countries for d in gold_ids), min_docs=config.min_docs
    )
    predicted_rankings: dict[str, dict] = {}
    for db in config.databases:
        for method in config.methods:
            for layer_id in config.layers:
                tool_ranking = evaluation.country_ranking(
                    (pred_maps[(layer_id, db, method)][d] for d in gold_ids), min_docs=1
                )
                spearman, kendall = evaluation.rank_correlation(gold_ranking, tool_ranking)
                shared = len(set(dict(gold_ranking)) & set(dict(tool_ranking)))
                art.correlation_rows.append({
                    "db": db, "method": method, "layer": layer_id,
                    "n_countries": shared, "spearman": spearman, "kendall": kendall,
                })
                predicted_rankings.setdefault(db, {}).setdefault(method, {})[layer_id] = [
                    [c, n] for c, n in tool_ranking
                ]
    art.rankings = {
        "min_docs": config.min_docs,
        "gold": [[c, n] for c, n in gold_ranking],
        "predicted": predicted_rankings,
    }
    return art


class CachedSource:
    """Read-only view of one source database inside a shared cache; quacks
    like a client for cache-only consumers such as coverage statistics."""

    requires_network = False

    def __init__(self, cache: GazetteerCache, source_db: str):
        self.cache = cache
        self.source_db = source_db

    def lookup_cached(self, toponym: str):
        return self.cache.get(self.source_db, toponym)


def write_reports(config: RunConfig, art: EvaluationArtifacts) -> list[Path]:
    provenance = {"config": config_hash(config), "cache": cache_hash(config)}
    return reports.write_all(config.out, art, provenance, config)


# --- full pipeline --------------------------------------------------------------

def run_pipeline(config: RunConfig) -> dict:
    """Geocode, predict and evaluate in one pass; returns the geocode summary."""
    config.validate()
    keywords = load_keywords(config.keywords)
    corpus = load_corpus(config.corpus, keywords=keywords)
    cache = GazetteerCache(config.cache)
    summary = geocode_corpus(config, corpus, cache)
    pred_maps = predict_corpus(config, corpus, cache, keywords)
    art = evaluate_corpus(config, corpus, cache, pred_maps)
    write_reports(config, art)
    return summary
