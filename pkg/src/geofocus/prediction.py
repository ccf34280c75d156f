"""Geographical-focus prediction: map a document's resolved toponyms to countries.

Three methods:

* majority  — most common country (all countries on a tie), counting every
              span repetition;
* centroid  — polygon of the deduplicated points, z-score outlier removal,
              then the country of the point closest to the rebuilt
              polygon's centroid (at most one country);
* keyword   — majority vote restricted to toponyms that share a sentence
              with a hazard keyword, with a nearest-toponym fallback when
              no sentence contains both.

All functions are pure and deterministic; empty predictions are real
values, never replaced by defaults.
"""

from __future__ import annotations

import re
import statistics
from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from .corpus import Document, KeywordConfig, find_keyword_occurrences, sentence_index
from .geometry import GeoPoint, ccw_sort, distance, ring_centroid
from .resolution import ResolvedToponym

METHOD_MAJORITY = "majority"
METHOD_CENTROID = "centroid"
METHOD_KEYWORD = "keyword"
METHODS = (METHOD_MAJORITY, METHOD_CENTROID, METHOD_KEYWORD)


@dataclass(frozen=True)
class HullPolygon:
    """Input points ordered counter-clockwise around their mean, plus the
    centroid (area centroid for a real polygon, midpoint for a segment,
    the point itself for a single vertex)."""

    vertices: tuple[GeoPoint, ...]
    centroid: GeoPoint


@dataclass(frozen=True)
class CountryPrediction:
    doc_id: str
    layer_id: str
    db: str
    method: str
    countries: frozenset[str]
    diagnostics: dict = field(default_factory=dict, compare=False)


def build_hull(points: Sequence[GeoPoint]) -> HullPolygon:
    """Polygon from points sorted counter-clockwise by angle around their mean."""
    if not points:
        raise ValueError("points must be non-empty")
    ring = ccw_sort(list(points))
    return HullPolygon(vertices=tuple(ring), centroid=ring_centroid(ring))


def remove_outliers(points: Sequence[GeoPoint]) -> list[GeoPoint]:
    """Drop points whose distance to the hull centroid has |z| > 1.

    z uses the population mean and standard deviation of the distances, so
    unusually central points are removed alongside far ones. Fewer than
    three points, or zero variance, leave the input unchanged.
    """
    pts = list(points)
    if len(pts) < 3:
        return pts
    centroid = build_hull(pts).centroid
    dists = [distance(p, centroid) for p in pts]
    mean = statistics.fmean(dists)
    std = statistics.pstdev(dists)
    if std == 0:
        return pts
    return [p for p, d in zip(pts, dists) if abs((d - mean) / std) <= 1.0]


def predict_majority(resolved: Sequence[ResolvedToponym]) -> set[str]:
    """Countries with the maximum toponym count, repetitions included."""
    counts = Counter(r.country for r in resolved)
    if not counts:
        return set()
    top = max(counts.values())
    return {c for c, n in counts.items() if n == top}


def predict_centroid(
    resolved: Sequence[ResolvedToponym],
    diagnostics: dict | None = None,
) -> set[str]:
    """Country of the resolved toponym closest to the outlier-cleaned
    polygon centroid; at most one country.

    Repeated coordinates collapse to a single polygon point before outlier
    removal. Ties on the final distance go to the earliest point in
    document order.
    """
    if not resolved:
        return set()
    # Deduplicate coordinates, keeping the first resolved toponym per point.
    point_owner: dict[GeoPoint, ResolvedToponym] = {}
    for r in resolved:
        point_owner.setdefault(r.point, r)
    points = list(point_owner)

    survivors = remove_outliers(points)
    if diagnostics is not None and len(survivors) < len(points):
        removed = [p for p in points if p not in survivors]
        centroid0 = build_hull(points).centroid
        dists = [distance(p, centroid0) for p in points]
        mean = statistics.fmean(dists)
        diagnostics["removed_far"] = sum(
            1 for p in removed if distance(p, centroid0) > mean
        )
        diagnostics["removed_interior"] = len(removed) - diagnostics["removed_far"]

    centroid = build_hull(survivors).centroid
    # min() keeps the first minimal element, and survivors preserve document
    # order of first occurrence, which is exactly the tie-break wanted here.
    best = min(survivors, key=lambda p: distance(p, centroid))
    return {point_owner[best].country}


_TOKEN = re.compile(r"\S+")


def _token_starts(text: str) -> list[int]:
    return [m.start() for m in _TOKEN.finditer(text)]


def _token_ordinal(starts: list[int], offset: int) -> int:
    # Token containing the offset, or the next token when in whitespace.
    i = bisect_right(starts, offset) - 1
    if i < 0:
        return 0
    return i


def token_distance(text_or_starts, a: int, b: int) -> int:
    """Whitespace-delimited tokens strictly between two character offsets."""
    starts = _token_starts(text_or_starts) if isinstance(text_or_starts, str) else text_or_starts
    ta, tb = _token_ordinal(starts, a), _token_ordinal(starts, b)
    return max(0, abs(ta - tb) - 1)


def predict_keyword(
    doc: Document,
    resolved: Sequence[ResolvedToponym],
    keywords: KeywordConfig,
    diagnostics: dict | None = None,
) -> set[str]:
    """Majority vote over toponyms co-occurring in a sentence with a hazard
    keyword.

    If no sentence holds both, each keyword occurrence instead contributes
    its nearest toponym in token distance — preceding preferred, following
    only when nothing precedes. Repeated keywords and repeated types all
    count. With no keyword occurrence at all, the prediction is empty and
    flagged.
    """
    occurrences = find_keyword_occurrences(doc.text, keywords)
    if not occurrences:
        if diagnostics is not None:
            diagnostics["no_keywords"] = True
        return set()
    if not resolved:
        return set()

    keyword_sentences = {sentence_index(doc, off) for _, off in occurrences}
    in_scope = [r for r in resolved if sentence_index(doc, r.span.start) in keyword_sentences]

    if not in_scope:
        if diagnostics is not None:
            diagnostics["keyword_fallback"] = True
        starts = _token_starts(doc.text)
        for _, off in occurrences:
            preceding = [r for r in resolved if r.span.start <= off]
            following = [r for r in resolved if r.span.start > off]
            if preceding:
                pick = min(preceding, key=lambda r: (token_distance(starts, r.span.start, off), -r.span.start))
            else:
                pick = min(following, key=lambda r: (token_distance(starts, off, r.span.start), r.span.start))
            in_scope.append(pick)

    return predict_majority(in_scope)


def predict(
    method: str,
    doc: Document,
    resolved: Sequence[ResolvedToponym],
    keywords: KeywordConfig | None = None,
    diagnostics: dict | None = None,
) -> set[str]:
    if method == METHOD_MAJORITY:
        return predict_majority(resolved)
    if method == METHOD_CENTROID:
        return predict_centroid(resolved, diagnostics=diagnostics)
    if method == METHOD_KEYWORD:
        if keywords is None:
            raise ValueError("keyword method requires a keyword config")
        return predict_keyword(doc, resolved, keywords, diagnostics=diagnostics)
    raise ValueError(f"unknown prediction method {method!r}")


def predict_document(
    doc: Document,
    layer_id: str,
    db: str,
    resolved: Sequence[ResolvedToponym],
    methods: Sequence[str],
    keywords: KeywordConfig | None = None,
) -> list[CountryPrediction]:
    """Run the configured methods over one document's resolved toponyms."""
    out = []
    for method in methods:
        diagnostics: dict = {}
        countries = predict(method, doc, resolved, keywords=keywords, diagnostics=diagnostics)
        if not resolved:
            diagnostics["empty_resolution"] = True
        out.append(CountryPrediction(
            doc_id=doc.id, layer_id=layer_id, db=db, method=method,
            countries=frozenset(countries), diagnostics=diagnostics,
        ))
    return out
