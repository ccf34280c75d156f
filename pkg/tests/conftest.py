import json
from pathlib import Path

import pytest

from geofocus.corpus import load_corpus, load_keywords

REPO_ROOT = Path(__file__).resolve().parents[1]
DATA_DIR = REPO_ROOT / "data"
GOLDEN_DIR = Path(__file__).resolve().parent / "golden"


def write_jsonl(path: Path, objects) -> Path:
    path.write_text("".join(json.dumps(o, ensure_ascii=False) + "\n" for o in objects),
                    encoding="utf-8")
    return path


def make_doc(doc_id="d1", text="Hochwasser in Passau. Viele Helfer kamen.",
             sentences=None, gold=("deu",), year=2020, layers=None):
    obj = {
        "id": doc_id,
        "text": text,
        "language": "de",
        "gold_countries": list(gold),
        "year": year,
        "layers": layers or {},
    }
    if sentences is not None:
        obj["sentences"] = sentences
    return obj


def span_of(text, surface, occurrence=0):
    """Standoff span dict for the nth occurrence of a surface in text."""
    start = -1
    for _ in range(occurrence + 1):
        start = text.index(surface, start + 1)
    return {"start": start, "end": start + len(surface), "surface": surface}


@pytest.fixture(scope="session")
def bundled_corpus():
    return load_corpus(DATA_DIR / "corpus.jsonl", keywords=load_keywords(DATA_DIR / "keywords.txt"))


@pytest.fixture(scope="session")
def bundled_keywords():
    return load_keywords(DATA_DIR / "keywords.txt")
