"""Toponym resolution: bind each span to one gazetteer match.

Ambiguity is resolved per toponym type with the spatial-minimality
heuristic: among a type's candidates, pick the one closest to the polygon
formed by the document's unambiguous toponym points. Documents with no
unambiguous type fall back to each type's first-ranked candidate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .corpus import AnnotationLayer, Document, ToponymSpan
from .gazetteer import GazetteerMatch
from .geometry import (
    GeoPoint,
    ccw_sort,
    distance,
    normalize_branch,
    point_ring_distance,
    point_segment_distance,
)

HOW_UNIQUE = "unique"
HOW_SPATIAL_MIN = "spatial_min"
HOW_RANK_FALLBACK = "rank_fallback"


@dataclass(frozen=True)
class ResolvedToponym:
    span: ToponymSpan
    match: GazetteerMatch
    how: str
    doc_id: str

    @property
    def point(self) -> GeoPoint:
        return GeoPoint(self.match.latitude, self.match.longitude)

    @property
    def country(self) -> str:
        assert self.match.country is not None
        return self.match.country


def distance_to_polygon(p: GeoPoint, anchors: Sequence[GeoPoint]) -> float:
    """Distance from p to the shape spanned by the anchor points.

    One anchor is a point, two are a segment, three or more form the
    angular-sorted polygon (distance 0 inside). Degree-plane units.
    """
    if not anchors:
        raise ValueError("anchors must be non-empty")
    if len(anchors) == 1:
        return distance(p, anchors[0])
    if len(anchors) == 2:
        return point_segment_distance(p, anchors[0], anchors[1])
    return point_ring_distance(p, ccw_sort(list(anchors)))


def resolve_document(
    doc: Document,
    layer: AnnotationLayer,
    matches: Mapping[str, Sequence[GazetteerMatch]],
) -> list[ResolvedToponym]:
    """Bind every resolvable span of a layer to one match.

    ``matches`` maps each toponym type to its surviving (filtered) match
    list. Spans whose type has no surviving match are dropped. Both spans
    of a repeated surface always bind the same match, and candidate order
    only matters on the rank-fallback path.
    """
    surfaces: list[str] = []
    for span in layer.spans:
        if span.surface not in surfaces:
            surfaces.append(span.surface)

    unique_binding: dict[str, GazetteerMatch] = {}
    ambiguous: list[str] = []
    for surface in surfaces:
        candidates = list(matches.get(surface, ()))
        if not candidates:
            continue
        if len(candidates) == 1:
            unique_binding[surface] = candidates[0]
        else:
            ambiguous.append(surface)

    # Distinct unique-type points; duplicates collapse to one anchor.
    anchors: list[GeoPoint] = []
    for m in unique_binding.values():
        p = GeoPoint(m.latitude, m.longitude)
        if p not in anchors:
            anchors.append(p)

    binding: dict[str, tuple[GazetteerMatch, str]] = {
        s: (m, HOW_UNIQUE) for s, m in unique_binding.items()
    }

    if ambiguous and anchors:
        # All distances live in one longitude frame per document, covering
        # anchors and every candidate under consideration.
        frame_points = list(anchors)
        for surface in ambiguous:
            frame_points.extend(GeoPoint(m.latitude, m.longitude) for m in matches[surface])
        normalized = normalize_branch(frame_points)
        adjust = dict(zip(frame_points, normalized))
        norm_anchors = [adjust[p] for p in anchors]
        for surface in ambiguous:
            candidates = list(matches[surface])
            best = min(
                range(len(candidates)),
                key=lambda i: (
                    distance_to_polygon(
                        adjust[GeoPoint(candidates[i].latitude, candidates[i].longitude)],
                        norm_anchors,
                    ),
                    candidates[i].rank,
                    i,
                ),
            )
            binding[surface] = (candidates[best], HOW_SPATIAL_MIN)
    elif ambiguous:
        for surface in ambiguous:
            binding[surface] = (matches[surface][0], HOW_RANK_FALLBACK)

    resolved: list[ResolvedToponym] = []
    for span in layer.spans:
        bound = binding.get(span.surface)
        if bound is None:
            continue
        match, how = bound
        resolved.append(ResolvedToponym(span=span, match=match, how=how, doc_id=doc.id))
    return resolved
