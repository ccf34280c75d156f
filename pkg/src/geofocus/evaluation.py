"""Comparison statistics: span agreement, prediction agreement, gold
accuracy, per-layer output statistics, and country-frequency rank
correlations.

Prediction maps are plain ``{doc_id: set-of-countries}`` dictionaries so
the statistics stay decoupled from how predictions were produced.
"""

from __future__ import annotations

import math
import statistics
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .corpus import Corpus, UnknownLayerError, toponym_types


class EvaluationError(ValueError):
    """Inputs violate an evaluation precondition."""


@dataclass(frozen=True, order=True)
class SpanKey:
    """Span identity for agreement metrics: same initial and last character."""

    start: int
    end: int

    def __post_init__(self):
        if self.start >= self.end:
            raise ValueError(f"empty span key ({self.start}, {self.end})")


RankedList = list[tuple[str, int]]  # (country, document count), counts non-increasing

PredictionMap = Mapping[str, frozenset[str] | set[str]]


def doc_iou(a: set[SpanKey], b: set[SpanKey]) -> float:
    """Intersection over union of two span sets; two empty sets agree perfectly."""
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def bilateral_agreement(preds_a: PredictionMap, preds_b: PredictionMap) -> float:
    """Percentage of documents on which two prediction maps emit equal sets."""
    if set(preds_a) != set(preds_b):
        only_a = sorted(set(preds_a) - set(preds_b))[:5]
        only_b = sorted(set(preds_b) - set(preds_a))[:5]
        raise EvaluationError(
            f"prediction maps cover different documents (e.g. only-left {only_a}, only-right {only_b})"
        )
    if not preds_a:
        raise EvaluationError("cannot compare empty prediction maps")
    equal = sum(1 for d in preds_a if set(preds_a[d]) == set(preds_b[d]))
    return 100.0 * equal / len(preds_a)


def gold_match(preds: PredictionMap, corpus: Corpus) -> tuple[float, float]:
    """(exact %, partial %) of predictions against the gold countries.

    Exact requires set equality, partial at least one shared country; an
    empty prediction fails both. Every evaluated document must carry gold
    countries.
    """
    if not preds:
        raise EvaluationError("no predictions to evaluate")
    exact = partial = 0
    for doc_id in preds:
        doc = corpus.documents.get(doc_id)
        if doc is None:
            raise EvaluationError(f"prediction for unknown document {doc_id!r}")
        if not doc.gold_countries:
            raise EvaluationError(f"document {doc_id!r} has no gold countries and must be excluded")
        predicted = set(preds[doc_id])
        if predicted == doc.gold_countries:
            exact += 1
        if predicted & doc.gold_countries:
            partial += 1
    n = len(preds)
    return 100.0 * exact / n, 100.0 * partial / n


def country_ranking(doc_countries: Iterable[Iterable[str]], min_docs: int = 1) -> RankedList:
    """Countries ordered by how many documents were mapped to them.

    Each document contributes once to every country in its set. Countries
    below ``min_docs`` are dropped; ties are broken alphabetically.
    """
    counts: Counter[str] = Counter()
    for countries in doc_countries:
        for c in set(countries):
            counts[c] += 1
    ranked = [(c, n) for c, n in counts.items() if n >= min_docs]
    ranked.sort(key=lambda item: (-item[1], item[0]))
    return ranked


def _average_ranks(values: Sequence[float]) -> list[float]:
    # Rank 1 = largest value; ties share the average of their positions.
    order = sorted(range(len(values)), key=lambda i: -values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def _pearson(x: Sequence[float], y: Sequence[float]) -> float:
    mx, my = statistics.fmean(x), statistics.fmean(y)
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    if sxx == 0 or syy == 0:
        raise EvaluationError("rank correlation undefined: a ranking is fully tied")
    return sxy / math.sqrt(sxx * syy)


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman correlation with average ranks for ties."""
    if len(x) != len(y) or len(x) < 2:
        raise EvaluationError("need two aligned sequences of length >= 2")
    return _pearson(_average_ranks(x), _average_ranks(y))


def kendall_tau_b(x: Sequence[float], y: Sequence[float]) -> float:
    """Kendall's tau-b (tie-corrected)."""
    if len(x) != len(y) or len(x) < 2:
        raise EvaluationError("need two aligned sequences of length >= 2")
    n = len(x)
    concordant = discordant = ties_x = ties_y = 0
    for i in range(n):
        for j in range(i + 1, n):
            dx = x[i] - x[j]
            dy = y[i] - y[j]
            if dx == 0 and dy == 0:
                continue
            if dx == 0:
                ties_x += 1
            elif dy == 0:
                ties_y += 1
            elif (dx > 0) == (dy > 0):
                concordant += 1
            else:
                discordant += 1
    n0 = n * (n - 1) // 2
    pairs_x = sum(t * (t - 1) // 2 for t in Counter(x).values())
    pairs_y = sum(t * (t - 1) // 2 for t in Counter(y).values())
    denom = math.sqrt((n0 - pairs_x) * (n0 - pairs_y))
    if denom == 0:
        raise EvaluationError("rank correlation undefined: a ranking is fully tied")
    return (concordant - discordant) / denom


def rank_correlation(a: RankedList, b: RankedList) -> tuple[float, float]:
    """(Spearman rho, Kendall tau-b) over the countries both rankings share."""
    counts_a = dict(a)
    counts_b = dict(b)
    shared = sorted(set(counts_a) & set(counts_b))
    if len(shared) < 2:
        raise EvaluationError(
            f"rank correlation undefined with {len(shared)} shared countries"
        )
    va = [float(counts_a[c]) for c in shared]
    vb = [float(counts_b[c]) for c in shared]
    return spearman_rho(va, vb), kendall_tau_b(va, vb)


def layer_stats(corpus: Corpus, layer_id: str) -> tuple[float, float, int, int]:
    """(mean spans/doc, population sd, total spans, total types) for a layer.

    Every corpus document counts, including those where the layer emitted
    nothing.
    """
    if layer_id not in corpus.layer_ids():
        raise UnknownLayerError(layer_id)
    counts = [
        len(corpus.layer_for(doc_id, layer_id).spans) for doc_id in corpus.doc_ids()
    ]
    total = sum(counts)
    mean = statistics.fmean(counts) if counts else 0.0
    sd = statistics.pstdev(counts) if counts else 0.0
    return mean, sd, total, len(toponym_types(corpus, layer_id))


def unique_types(layer_types: Mapping[str, set[str]]) -> dict[str, set[str]]:
    """Per layer, the toponym types found in that layer and no other."""
    if len(layer_types) < 2:
        raise ValueError("unique-type comparison needs at least two layers")
    out: dict[str, set[str]] = {}
    for layer_id, types in layer_types.items():
        others: set[str] = set()
        for other_id, other_types in layer_types.items():
            if other_id != layer_id:
                others |= other_types
        out[layer_id] = set(types) - others
    return out


def span_keys(corpus: Corpus, doc_id: str, layer_id: str) -> set[SpanKey]:
    """Span identity set of one layer on one document, for IoU comparisons."""
    return {SpanKey(s.start, s.end) for s in corpus.layer_for(doc_id, layer_id).spans}
