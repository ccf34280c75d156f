import json

import pytest
from hypothesis import given, strategies as st

from geofocus.corpus import (
    CorpusLoadError,
    Document,
    UnknownLayerError,
    dump_corpus,
    find_keyword_occurrences,
    load_corpus,
    load_keywords,
    sentence_index,
    split_sentences,
    toponym_types,
)
from geofocus.countries import normalize_country

from conftest import make_doc, span_of, write_jsonl


def test_load_two_documents(tmp_path):
    text = "Hochwasser in Passau. Der Inn stieg."
    doc1 = make_doc("d1", text, layers={"alpha": [span_of(text, "Passau"), span_of(text, "Inn")]})
    doc2 = make_doc("d2", "Sturm in Kiel.", gold=("de",))
    corpus = load_corpus(write_jsonl(tmp_path / "c.jsonl", [doc1, doc2]))
    assert len(corpus.documents) == 2
    assert corpus.documents["d2"].gold_countries == {"deu"}  # alpha-2 normalized
    assert [s.surface for s in corpus.layers[("d1", "alpha")].spans] == ["Passau", "Inn"]


def test_span_end_before_start_names_document(tmp_path):
    doc = make_doc("d9", "Hallo Welt.", layers={"alpha": [{"start": 5, "end": 3, "surface": "lo "}]})
    with pytest.raises(CorpusLoadError, match="d9"):
        load_corpus(write_jsonl(tmp_path / "c.jsonl", [doc]))


def test_duplicate_document_id(tmp_path):
    docs = [make_doc("d1"), make_doc("d1")]
    with pytest.raises(CorpusLoadError, match="duplicate document id 'd1'"):
        load_corpus(write_jsonl(tmp_path / "c.jsonl", docs))


def test_surface_mismatch_rejected(tmp_path):
    doc = make_doc("d3", "Hallo Welt.", layers={"alpha": [{"start": 0, "end": 5, "surface": "Welt!"}]})
    with pytest.raises(CorpusLoadError, match="d3"):
        load_corpus(write_jsonl(tmp_path / "c.jsonl", [doc]))


def test_unknown_country_code_rejected(tmp_path):
    doc = make_doc("d4", "Hallo.", gold=("zz",))
    with pytest.raises(CorpusLoadError, match="gold_countries"):
        load_corpus(write_jsonl(tmp_path / "c.jsonl", [doc]))


def test_overlapping_sentences_rejected(tmp_path):
    doc = make_doc("d5", "Hallo Welt. Schoen hier.", sentences=[[0, 12], [10, 24]])
    with pytest.raises(CorpusLoadError, match="overlap"):
        load_corpus(write_jsonl(tmp_path / "c.jsonl", [doc]))


def test_empty_gold_marks_document_excluded(tmp_path):
    corpus = load_corpus(write_jsonl(tmp_path / "c.jsonl", [make_doc("d6", gold=())]))
    assert corpus.documents["d6"].excluded


def test_round_trip_identity(tmp_path):
    text = "Hochwasser in Passau. Der Inn stieg weiter an."
    docs = [
        make_doc("d1", text, layers={"alpha": [span_of(text, "Passau")],
                                     "beta": [span_of(text, "Passau"), span_of(text, "Inn")]}),
        make_doc("d2", "Sturm in Kiel und Flensburg.", gold=("deu", "dnk")),
    ]
    path = write_jsonl(tmp_path / "c.jsonl", docs)
    corpus = load_corpus(path)
    out = tmp_path / "again.jsonl"
    dump_corpus(corpus, out)
    assert load_corpus(out) == corpus


def test_toponym_types_distinct_and_case_sensitive(tmp_path):
    text = "Berlin Berlin Bayern berlin"
    doc = make_doc("d1", text, layers={"alpha": [
        span_of(text, "Berlin", 0), span_of(text, "Berlin", 1),
        span_of(text, "Bayern"), span_of(text, "berlin"),
    ], "empty": []})
    corpus = load_corpus(write_jsonl(tmp_path / "c.jsonl", [doc]))
    assert toponym_types(corpus, "alpha") == {"Berlin", "Bayern", "berlin"}
    assert toponym_types(corpus, "empty") == set()
    with pytest.raises(UnknownLayerError):
        toponym_types(corpus, "missing")


def _doc_with_sentences(sentences, length=30):
    return Document(id="s", text="x" * length, language="de",
                    sentences=tuple(tuple(p) for p in sentences),
                    gold_countries=frozenset({"deu"}), year=2020)


def test_sentence_index_containment_and_gap():
    doc = _doc_with_sentences([(0, 10), (11, 20)], length=25)
    assert sentence_index(doc, 0) == 0
    assert sentence_index(doc, 15) == 1
    assert sentence_index(doc, 10) == 1  # gap maps to the following sentence
    assert sentence_index(doc, 24) == 1  # past the last span clamps to it
    with pytest.raises(IndexError):
        sentence_index(doc, 25)
    with pytest.raises(IndexError):
        sentence_index(doc, -1)


@given(st.data())
def test_sentence_index_total_and_monotone(data):
    n_sentences = data.draw(st.integers(1, 6))
    bounds = sorted(data.draw(st.lists(st.integers(0, 40), min_size=2 * n_sentences,
                                       max_size=2 * n_sentences, unique=True)))
    sentences = [(bounds[2 * i], bounds[2 * i + 1]) for i in range(n_sentences)]
    doc = _doc_with_sentences(sentences, length=50)
    indices = [sentence_index(doc, off) for off in range(50)]
    assert all(0 <= i < n_sentences for i in indices)
    assert indices == sorted(indices)


def test_fallback_splitter_offsets():
    text = "Hochwasser in Passau! Der Inn stieg. Viele halfen."
    spans = split_sentences(text)
    assert [text[s:e] for s, e in spans] == [
        "Hochwasser in Passau!", "Der Inn stieg.", "Viele halfen."
    ]
    # no break without a following uppercase letter
    assert split_sentences("Ca. zwei Meter Wasser.") == ((0, 22),)
    assert split_sentences("") == ()


def test_loader_applies_fallback_splitter(tmp_path):
    doc = make_doc("d1", "Erster Satz. Zweiter Satz.")
    corpus = load_corpus(write_jsonl(tmp_path / "c.jsonl", [doc]))
    assert corpus.documents["d1"].sentences == ((0, 12), (13, 26))


def test_keyword_config_sections(tmp_path):
    path = tmp_path / "kw.txt"
    path.write_text("# comment\n[flut]\nHochwasser\nFlut\n\n[hitze]\nHitzewelle\n", encoding="utf-8")
    config = load_keywords(path)
    assert config.by_hazard == {"flut": ("Hochwasser", "Flut"), "hitze": ("Hitzewelle",)}
    assert config.all_keywords() == ("Hochwasser", "Flut", "Hitzewelle")


def test_keyword_outside_section_rejected(tmp_path):
    path = tmp_path / "kw.txt"
    path.write_text("Hochwasser\n", encoding="utf-8")
    with pytest.raises(CorpusLoadError, match="outside"):
        load_keywords(path)


def test_keyword_occurrences_prefix_mode(tmp_path):
    path = tmp_path / "kw.txt"
    path.write_text("[hitze]\nHitzewelle\n", encoding="utf-8")
    config = load_keywords(path)
    text = "Hitzewellen treffen Europa. Die hitzewelle dauert an. Keine Welle."
    occurrences = find_keyword_occurrences(text, config)
    assert occurrences == (("Hitzewelle", 0), ("Hitzewelle", 32))
    # mid-token matches are not occurrences
    assert find_keyword_occurrences("XHitzewelle", config) == ()


def test_keyword_occurrences_exact_mode(tmp_path):
    path = tmp_path / "kw.txt"
    path.write_text("[hitze]\nHitzewelle\n", encoding="utf-8")
    config = load_keywords(path, match_mode="exact")
    assert find_keyword_occurrences("Hitzewellen kommen.", config) == ()
    assert find_keyword_occurrences("Die Hitzewelle, sagt man.", config) == (("Hitzewelle", 4),)


def test_loader_indexes_keywords_and_checks_sentences(tmp_path):
    kw_path = tmp_path / "kw.txt"
    kw_path.write_text("[flut]\nHochwasser\n", encoding="utf-8")
    keywords = load_keywords(kw_path)
    text = "Hochwasser in Passau. Alle halfen."
    corpus = load_corpus(write_jsonl(tmp_path / "c.jsonl", [make_doc("d1", text)]), keywords=keywords)
    assert corpus.documents["d1"].hazard_keywords_present == (("Hochwasser", 0),)

    # a keyword occurrence outside all declared sentence spans is invalid
    bad = make_doc("d2", text, sentences=[[22, 34]])
    with pytest.raises(CorpusLoadError, match="outside every sentence"):
        load_corpus(write_jsonl(tmp_path / "c2.jsonl", [bad]), keywords=keywords)


def test_malformed_json_line_reports_line_number(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text(json.dumps(make_doc("d1")) + "\n{broken\n", encoding="utf-8")
    with pytest.raises(CorpusLoadError, match=":2"):
        load_corpus(path)


def test_country_normalization_table():
    assert normalize_country("CH") == "che"
    assert normalize_country("fr") == "fra"
    assert normalize_country("DEU") == "deu"
    assert normalize_country("bra") == "bra"
    with pytest.raises(ValueError):
        normalize_country("xx")
    with pytest.raises(ValueError):
        normalize_country("germany")
