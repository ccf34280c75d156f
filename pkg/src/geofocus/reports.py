"""Report emission: CSV tables plus plot-ready JSON artifacts.

Every CSV starts with a provenance comment line carrying the content hash
of the configuration and of the gazetteer cache; JSON artifacts embed the
same pair under a "provenance" key. Identical inputs therefore produce
byte-identical reports.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import TYPE_CHECKING, Mapping

if TYPE_CHECKING:
    from .pipeline import EvaluationArtifacts, RunConfig

LAYER_STATS_CSV = "layer_stats.csv"
AGREEMENT_CSV = "bilateral_agreement.csv"
GOLD_CSV = "gold_match.csv"
CORRELATION_CSV = "rank_correlation.csv"
IOU_JSON = "iou_per_document.json"
RANKINGS_JSON = "country_rankings.json"


def _header_line(provenance: Mapping[str, str]) -> str:
    return f"# geofocus config={provenance['config']} cache={provenance['cache']}\n"


def _write_csv(path: Path, provenance: Mapping[str, str], fieldnames: list[str],
               rows: list[dict], formats: Mapping[str, str]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(_header_line(provenance))
        writer = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            formatted = {}
            for key in fieldnames:
                value = row[key]
                fmt = formats.get(key)
                if fmt is None:
                    for prefix, f in formats.items():
                        if prefix.endswith("*") and key.startswith(prefix[:-1]):
                            fmt = f
                            break
                if fmt and isinstance(value, float):
                    value = fmt % value
                formatted[key] = value
            writer.writerow(formatted)


def _write_json(path: Path, provenance: Mapping[str, str], payload: dict) -> None:
    obj = {"provenance": dict(provenance), **payload}
    path.write_text(json.dumps(obj, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
                    encoding="utf-8")


def write_layer_stats(out: Path, art: "EvaluationArtifacts", provenance, config) -> Path:
    path = out / LAYER_STATS_CSV
    fields = ["layer", "n_toponyms", "n_types", "mean_per_doc", "sd_per_doc"]
    fields += [f"pct_in_{db}" for db in config.databases]
    _write_csv(path, provenance, fields, art.layer_rows,
               {"mean_per_doc": "%.2f", "sd_per_doc": "%.2f", "pct_in_*": "%.2f"})
    return path


def write_agreement(out: Path, art: "EvaluationArtifacts", provenance, config) -> Path:
    path = out / AGREEMENT_CSV
    fields = ["pair"] + [f"{db}_{m}" for db in config.databases for m in config.methods]
    formats = {f"{db}_{m}": "%.2f" for db in config.databases for m in config.methods}
    _write_csv(path, provenance, fields, art.agreement_rows, formats)
    return path


def write_gold(out: Path, art: "EvaluationArtifacts", provenance, config) -> Path:
    path = out / GOLD_CSV
    fields = ["method", "layer"]
    for db in config.databases:
        fields += [f"{db}_exact", f"{db}_overlap", f"{db}_n_empty"]
    rows = []
    for row in art.gold_rows:
        row = dict(row)
        if row["method"] == "centroid":
            # A single-country method cannot be judged on exact multi-country
            # equality, so the exact column is withheld for it.
            for db in config.databases:
                row[f"{db}_exact"] = "-"
        rows.append(row)
    formats = {}
    for db in config.databases:
        formats[f"{db}_exact"] = "%.2f"
        formats[f"{db}_overlap"] = "%.2f"
    _write_csv(path, provenance, fields, rows, formats)
    return path


def write_correlations(out: Path, art: "EvaluationArtifacts", provenance, config) -> Path:
    path = out / CORRELATION_CSV
    fields = ["db", "method", "layer", "n_countries", "spearman", "kendall"]
    _write_csv(path, provenance, fields, art.correlation_rows,
               {"spearman": "%.4f", "kendall": "%.4f"})
    return path


def write_iou(out: Path, art: "EvaluationArtifacts", provenance, config) -> Path:
    path = out / IOU_JSON
    _write_json(path, provenance, art.iou)
    return path


def write_rankings(out: Path, art: "EvaluationArtifacts", provenance, config) -> Path:
    path = out / RANKINGS_JSON
    _write_json(path, provenance, art.rankings)
    return path


def write_all(out: Path, art: "EvaluationArtifacts", provenance, config) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    return [
        write_layer_stats(out, art, provenance, config),
        write_agreement(out, art, provenance, config),
        write_gold(out, art, provenance, config),
        write_correlations(out, art, provenance, config),
        write_iou(out, art, provenance, config),
        write_rankings(out, art, provenance, config),
    ]
