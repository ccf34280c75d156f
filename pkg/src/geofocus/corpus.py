"""Document and annotation interchange model.

A corpus is a UTF-8 JSONL file, one document per line:

    {"id": str, "text": str, "language": str, "sentences": [[int, int], ...],
     "gold_countries": [str, ...], "year": int,
     "layers": {"<layer_id>": [{"start": int, "end": int, "surface": str}, ...]}}

Annotations are standoff: spans are character offsets into the unmodified
text and must reproduce their surface exactly. Everything is validated on
load and immutable afterwards, so corpora can be shared across threads.
"""

from __future__ import annotations

import io
import json
import re
from bisect import bisect_right
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .countries import normalize_country


class CorpusLoadError(ValueError):
    """Schema or invariant violation in an interchange file."""

    def __init__(self, message: str, doc_id: str | None = None, field_name: str | None = None):
        super().__init__(message)
        self.doc_id = doc_id
        self.field_name = field_name


class UnknownLayerError(KeyError):
    """Requested annotation layer does not exist in the corpus."""


@dataclass(frozen=True)
class ToponymSpan:
    """One candidate toponym as character offsets plus its surface."""

    start: int
    end: int
    surface: str


@dataclass(frozen=True)
class AnnotationLayer:
    """All toponym spans one backend emitted for one document."""

    layer_id: str
    doc_id: str
    spans: tuple[ToponymSpan, ...]


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    language: str
    sentences: tuple[tuple[int, int], ...]
    gold_countries: frozenset[str]
    year: int
    hazard_keywords_present: tuple[tuple[str, int], ...] = field(default=())

    @property
    def excluded(self) -> bool:
        """Documents without an identifiable country are kept out of gold-based scoring."""
        return not self.gold_countries


@dataclass(frozen=True)
class Corpus:
    documents: dict[str, Document]
    layers: dict[tuple[str, str], AnnotationLayer]

    def doc_ids(self) -> list[str]:
        return sorted(self.documents)

    def layer_ids(self) -> list[str]:
        return sorted({layer_id for _, layer_id in self.layers})

    def layer_for(self, doc_id: str, layer_id: str) -> AnnotationLayer:
        layer = self.layers.get((doc_id, layer_id))
        if layer is None:
            layer = AnnotationLayer(layer_id=layer_id, doc_id=doc_id, spans=())
        return layer

    def layers_named(self, layer_id: str) -> Iterator[AnnotationLayer]:
        for doc_id in self.doc_ids():
            key = (doc_id, layer_id)
            if key in self.layers:
                yield self.layers[key]


# --- sentence services -------------------------------------------------

_SENTENCE_BREAK = re.compile(r"[.!?]+[\"'»«）)\]]*\s+(?=[A-ZÄÖÜ])")


def split_sentences(text: str) -> tuple[tuple[int, int], ...]:
    """Rule-based fallback splitter: break after ./!/? followed by
    whitespace and an uppercase letter. Intended only for documents whose
    annotation pipeline did not supply sentence boundaries."""
    if not text.strip():
        return ()
    spans: list[tuple[int, int]] = []
    start = 0
    for m in _SENTENCE_BREAK.finditer(text):
        spans.append((start, m.end() - _trailing_ws(text, m.end())))
        start = m.end()
    spans.append((start, len(text) - _trailing_ws(text, len(text))))
    return tuple((s, e) for s, e in spans if e > s)


def _trailing_ws(text: str, end: int) -> int:
    n = 0
    while end - n - 1 >= 0 and text[end - n - 1].isspace():
        n += 1
    return n


def sentence_index(doc: Document, offset: int) -> int:
    """Ordinal of the sentence containing ``offset``.

    Offsets falling between sentence spans map to the nearest following
    sentence; offsets past the last sentence clamp to it, so the function
    is total over [0, len(text)).
    """
    if offset < 0 or offset >= len(doc.text):
        raise IndexError(f"offset {offset} out of range for document {doc.id!r}")
    if not doc.sentences:
        return 0
    starts = [s for s, _ in doc.sentences]
    i = bisect_right(starts, offset) - 1
    if i < 0:
        return 0
    if offset < doc.sentences[i][1]:
        return i
    return min(i + 1, len(doc.sentences) - 1)


# --- hazard keyword config ---------------------------------------------

@dataclass(frozen=True)
class KeywordConfig:
    """Hazard keywords grouped by hazard name, as loaded from the config file."""

    by_hazard: Mapping[str, tuple[str, ...]]
    match_mode: str = "prefix"  # "prefix" or "exact"

    def all_keywords(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for words in self.by_hazard.values():
            for w in words:
                seen.setdefault(w, None)
        return tuple(seen)


def load_keywords(path: str | Path, match_mode: str = "prefix") -> KeywordConfig:
    """Parse the keyword config: one keyword per line under [hazard] headers."""
    by_hazard: dict[str, list[str]] = {}
    current: str | None = None
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            by_hazard.setdefault(current, [])
            continue
        if current is None:
            raise CorpusLoadError(f"{path}:{lineno}: keyword {line!r} outside any [hazard] section")
        by_hazard[current].append(line)
    return KeywordConfig(
        by_hazard={h: tuple(ws) for h, ws in by_hazard.items()},
        match_mode=match_mode,
    )


def find_keyword_occurrences(text: str, keywords: KeywordConfig) -> tuple[tuple[str, int], ...]:
    """All (keyword, offset) occurrences in reading order.

    Prefix mode matches a keyword at any token start regardless of how the
    token continues ("Hitzewelle" also hits "Hitzewellen"); exact mode
    additionally requires the token to stop where the keyword does.
    """
    hits: list[tuple[int, str]] = []
    for kw in keywords.all_keywords():
        if keywords.match_mode == "exact":
            pattern = re.compile(r"(?<!\S)" + re.escape(kw) + r"(?!\w)", re.IGNORECASE)
        else:
            pattern = re.compile(r"(?<!\S)" + re.escape(kw), re.IGNORECASE)
        for m in pattern.finditer(text):
            hits.append((m.start(), kw))
    hits.sort()
    return tuple((kw, off) for off, kw in hits)


# --- loading and validation --------------------------------------------

def _validate_spans(doc_id: str, layer_id: str, text: str, raw_spans: list) -> tuple[ToponymSpan, ...]:
    spans: list[ToponymSpan] = []
    for item in raw_spans:
        try:
            start, end, surface = int(item["start"]), int(item["end"]), str(item["surface"])
        except (KeyError, TypeError, ValueError) as exc:
            raise CorpusLoadError(
                f"document {doc_id!r}: layer {layer_id!r}: malformed span {item!r}",
                doc_id=doc_id, field_name="layers",
            ) from exc
        if not (0 <= start < end <= len(text)):
            raise CorpusLoadError(
                f"document {doc_id!r}: layer {layer_id!r}: span ({start}, {end}) outside [0, {len(text)}] or empty",
                doc_id=doc_id, field_name="layers",
            )
        if text[start:end] != surface:
            raise CorpusLoadError(
                f"document {doc_id!r}: layer {layer_id!r}: surface {surface!r} != text[{start}:{end}] {text[start:end]!r}",
                doc_id=doc_id, field_name="layers",
            )
        spans.append(ToponymSpan(start, end, surface))
    spans.sort(key=lambda s: (s.start, s.end))
    return tuple(spans)


def _validate_sentences(doc_id: str, text: str, raw: list) -> tuple[tuple[int, int], ...]:
    sentences: list[tuple[int, int]] = []
    for pair in raw:
        if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
            raise CorpusLoadError(
                f"document {doc_id!r}: sentence span {pair!r} is not a pair",
                doc_id=doc_id, field_name="sentences",
            )
        s, e = int(pair[0]), int(pair[1])
        if not (0 <= s < e <= len(text)):
            raise CorpusLoadError(
                f"document {doc_id!r}: sentence span ({s}, {e}) outside [0, {len(text)}] or empty",
                doc_id=doc_id, field_name="sentences",
            )
        sentences.append((s, e))
    for (s1, e1), (s2, e2) in zip(sentences, sentences[1:]):
        if s2 < e1:
            raise CorpusLoadError(
                f"document {doc_id!r}: sentence spans ({s1}, {e1}) and ({s2}, {e2}) overlap or are unsorted",
                doc_id=doc_id, field_name="sentences",
            )
    return tuple(sentences)


def _parse_document(obj: dict, keywords: KeywordConfig | None) -> tuple[Document, dict[str, tuple[ToponymSpan, ...]]]:
    doc_id = obj.get("id")
    if not isinstance(doc_id, str) or not doc_id:
        raise CorpusLoadError(f"document with missing or empty id: {obj.get('id')!r}", field_name="id")
    text = obj.get("text")
    if not isinstance(text, str):
        raise CorpusLoadError(f"document {doc_id!r}: text must be a string", doc_id=doc_id, field_name="text")

    sentences = _validate_sentences(doc_id, text, obj.get("sentences") or [])
    if not sentences:
        sentences = split_sentences(text)

    try:
        gold = frozenset(normalize_country(c) for c in obj.get("gold_countries") or [])
    except ValueError as exc:
        raise CorpusLoadError(
            f"document {doc_id!r}: gold_countries: {exc}", doc_id=doc_id, field_name="gold_countries"
        ) from None

    year = obj.get("year")
    if not isinstance(year, int):
        raise CorpusLoadError(f"document {doc_id!r}: year must be an integer", doc_id=doc_id, field_name="year")

    language = obj.get("language", "de")
    if not isinstance(language, str) or not language:
        raise CorpusLoadError(f"document {doc_id!r}: language must be a non-empty string",
                              doc_id=doc_id, field_name="language")

    layer_spans: dict[str, tuple[ToponymSpan, ...]] = {}
    layers_obj = obj.get("layers") or {}
    if not isinstance(layers_obj, dict):
        raise CorpusLoadError(f"document {doc_id!r}: layers must be an object", doc_id=doc_id, field_name="layers")
    for layer_id, raw_spans in layers_obj.items():
        if not layer_id:
            raise CorpusLoadError(f"document {doc_id!r}: empty layer id", doc_id=doc_id, field_name="layers")
        layer_spans[layer_id] = _validate_spans(doc_id, layer_id, text, raw_spans)

    doc = Document(
        id=doc_id, text=text, language=language, sentences=sentences,
        gold_countries=gold, year=year,
    )
    if keywords is not None:
        occurrences = find_keyword_occurrences(text, keywords)
        for kw, off in occurrences:
            if not any(s <= off < e for s, e in sentences):
                raise CorpusLoadError(
                    f"document {doc_id!r}: keyword {kw!r} at offset {off} lies outside every sentence span",
                    doc_id=doc_id, field_name="sentences",
                )
        doc = replace(doc, hazard_keywords_present=occurrences)
    return doc, layer_spans


def load_corpus(path: str | Path, keywords: KeywordConfig | None = None) -> Corpus:
    """Load and validate an interchange JSONL file.

    When a keyword config is given, hazard keyword occurrences are indexed
    per document at load time.
    """
    documents: dict[str, Document] = {}
    layers: dict[tuple[str, str], AnnotationLayer] = {}
    with io.open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusLoadError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            doc, layer_spans = _parse_document(obj, keywords)
            if doc.id in documents:
                raise CorpusLoadError(f"duplicate document id {doc.id!r} at {path}:{lineno}",
                                      doc_id=doc.id, field_name="id")
            documents[doc.id] = doc
            for layer_id, spans in layer_spans.items():
                layers[(doc.id, layer_id)] = AnnotationLayer(layer_id=layer_id, doc_id=doc.id, spans=spans)
    return Corpus(documents=documents, layers=layers)


def dump_corpus(corpus: Corpus, path: str | Path) -> None:
    """Serialize back to the interchange format (inverse of load_corpus)."""
    with io.open(path, "w", encoding="utf-8") as fh:
        for doc_id in corpus.doc_ids():
            doc = corpus.documents[doc_id]
            layer_ids = sorted(lid for (did, lid) in corpus.layers if did == doc_id)
            obj = {
                "id": doc.id,
                "text": doc.text,
                "language": doc.language,
                "sentences": [list(p) for p in doc.sentences],
                "gold_countries": sorted(doc.gold_countries),
                "year": doc.year,
                "layers": {
                    lid: [
                        {"start": s.start, "end": s.end, "surface": s.surface}
                        for s in corpus.layers[(doc_id, lid)].spans
                    ]
                    for lid in layer_ids
                },
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def toponym_types(corpus: Corpus, layer_id: str) -> set[str]:
    """Distinct surface strings over all spans of one layer (case-sensitive)."""
    if layer_id not in corpus.layer_ids():
        raise UnknownLayerError(layer_id)
    types: set[str] = set()
    for layer in corpus.layers_named(layer_id):
        types.update(s.surface for s in layer.spans)
    return types


def iter_layer_spans(corpus: Corpus, layer_id: str) -> Iterable[tuple[Document, ToponymSpan]]:
    if layer_id not in corpus.layer_ids():
        raise UnknownLayerError(layer_id)
    for layer in corpus.layers_named(layer_id):
        doc = corpus.documents[layer.doc_id]
        for span in layer.spans:
            yield doc, span
