#!/usr/bin/env python3
"""Generate the bundled synthetic corpus, fixture gazetteer and keyword file.

The corpus is small but exercises every pipeline path: ambiguous toponyms
resolved against anchors, rank fallback, country-less gazetteer rows,
duplicate-country deduplication, generic-term and associative-toponym noise
layers, multi-country gold labels, an excluded document without gold
countries, and a document with no toponyms at all.

Deterministic by construction (no randomness); rerunning reproduces the
same files byte for byte.
"""

from __future__ import annotations

import json
import re
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
DATA = REPO / "data"

KEYWORDS = """\
[hitzewelle]
Hitzewelle
[waldbrand]
Waldbrand
Flächenbrand
[hochwasser]
Hochwasser
Überschwemmung
Flut
[sturm]
Sturm
Orkan
[duerre]
Dürre
Trockenheit
[kaeltewelle]
Kältewelle
Frost
[erdrutsch]
Erdrutsch
"""

# query -> list of (lat, lon, country|None, class)
FIXTURE: dict[str, list[tuple[float, float, str | None, str]]] = {
    "Porto Alegre": [(-30.03, -51.23, "bra", "city")],
    "Rio Grande do Sul": [(-29.75, -53.00, "bra", "state")],
    "Berlin": [(52.52, 13.405, "deu", "city"), (44.47, -71.18, "usa", "town"),
               (52.52, 13.40, "deu", "boundary")],
    "München": [(48.137, 11.575, "deu", "city")],
    "Passau": [(48.57, 13.46, "deu", "city")],
    "Regensburg": [(49.01, 12.10, "deu", "city")],
    "Donau": [(48.00, 15.00, None, "river")],
    "Rathaus": [(49.40, 11.10, None, "building")],
    "Bern": [(46.95, 7.45, "che", "city")],
    "Zürich": [(47.37, 8.54, "che", "city")],
    "Genf": [(46.20, 6.14, "che", "city")],
    "Paris": [(48.857, 2.352, "fra", "city"), (33.66, -95.55, "usa", "town")],
    "Lyon": [(45.76, 4.83, "fra", "city")],
    "Marseille": [(43.30, 5.37, "fra", "city")],
    "Frankreich": [(46.60, 2.50, "fra", "country")],
    "Wien": [(48.21, 16.37, "aut", "city")],
    "Salzburg": [(47.81, 13.04, "aut", "city")],
    "Neustadt": [(49.35, 8.14, "deu", "city"), (48.80, 16.04, "aut", "town"),
                 (-33.00, 151.00, "aus", "locality")],
    "Kiel": [(54.32, 10.14, "deu", "city")],
    "Hamburg": [(53.55, 9.99, "deu", "city")],
    "Elbe": [(53.50, 10.00, None, "river"), (50.78, 14.23, "cze", "river")],
    "Sevilla": [(37.39, -5.98, "esp", "city")],
    "Madrid": [(40.42, -3.70, "esp", "city")],
    "Porto": [(41.15, -8.61, "prt", "city")],
    "Lissabon": [(38.72, -9.14, "prt", "city")],
    "Portugal": [(39.50, -8.00, "prt", "country")],
    "Venedig": [(45.44, 12.32, "ita", "city")],
    "Rom": [(41.89, 12.48, "ita", "city")],
    "italienischen": [(47.26, 11.39, "aut", "building")],
    "Bayern": [(48.95, 11.40, "deu", "state")],
    "Oder": [(52.60, 14.60, None, "river")],
    "Breslau": [(51.11, 17.03, "pol", "city")],
    "Warschau": [(52.23, 21.01, "pol", "city")],
    "Prag": [(50.08, 14.44, "cze", "city")],
    "Dresden": [(51.05, 13.74, "deu", "city")],
    "Buenos Aires": [(-34.60, -58.38, "arg", "city")],
    "São Paulo": [(-23.55, -46.63, "bra", "city")],
    "Sydney": [(-33.87, 151.21, "aus", "city"), (46.14, -60.18, "can", "town")],
    "Australien": [(-25.00, 134.00, "aus", "country")],
    "Brandenburg": [(52.41, 12.55, "deu", "state")],
    "Frankfurt": [(50.11, 8.68, "deu", "city"), (52.34, 14.55, "deu", "city")],
    "Sonne": [(28.08, -15.43, "esp", "locality")],
    "Europa": [(54.90, 25.30, None, "continent")],
    # surfaces without any fixture line at all (queries come back empty):
    # Innenstadt, Altstadt, Stadt, Aare, Südamerika
}

# (id, year, gold countries, text, {layer: [surface, ...]})
DOCS = [
    ("d01", 2024, ["bra"],
     "Hochwasser in Porto Alegre. Der Süden von Rio Grande do Sul steht unter Wasser. "
     "Die Innenstadt von Porto Alegre wurde evakuiert. Aus Berlin kamen Hilfszusagen, "
     "und auch München sagte Unterstützung zu.",
     {"alpha": ["Porto Alegre", "Rio Grande do Sul", "Berlin", "München"],
      "beta": ["Porto Alegre", "Rio Grande do Sul", "Berlin", "München", "Innenstadt"],
      "gamma": ["Porto Alegre", "Berlin", "München"]}),
    ("d02", 2013, ["deu"],
     "Hochwasser an der Donau. In Passau stieg der Pegel rasant. Regensburg meldete "
     "Rekordstände. Das Rathaus in Passau blieb geschlossen.",
     {"alpha": ["Passau", "Regensburg", "Donau"],
      "beta": ["Passau", "Regensburg", "Donau", "Rathaus"],
      "gamma": ["Passau", "Regensburg"]}),
    ("d03", 2005, ["che"],
     "Überschwemmungen in Bern. Die Aare trat in Bern über die Ufer. Zürich blieb verschont.",
     {"alpha": ["Bern", "Aare", "Zürich"],
      "beta": ["Bern", "Aare", "Zürich"],
      "gamma": ["Bern", "Zürich"]}),
    ("d04", 2019, ["fra"],
     "Hitzewelle in Frankreich: In Paris wurden 41 Grad gemessen. Lyon und Marseille "
     "meldeten Tropennächte. Aus Genf kamen Warnungen.",
     {"alpha": ["Paris", "Lyon", "Marseille", "Genf"],
      "beta": ["Frankreich", "Paris", "Lyon", "Marseille", "Genf"],
      "gamma": ["Paris", "Lyon", "Genf"]}),
    ("d05", 2008, ["aut"],
     "Orkan über Wien. Der Sturm deckte in Wien Dächer ab. Auch Salzburg war betroffen. "
     "In Neustadt stürzten Bäume um.",
     {"alpha": ["Wien", "Salzburg", "Neustadt"],
      "beta": ["Wien", "Salzburg", "Neustadt"],
      "gamma": ["Wien", "Salzburg"]}),
    ("d06", 2017, ["deu"],
     "Sturmflut in Kiel. Der Orkan erreichte Hamburg am Abend. Die Elbe stieg bedrohlich.",
     {"alpha": ["Kiel", "Hamburg", "Elbe"],
      "beta": ["Kiel", "Hamburg", "Elbe"],
      "gamma": ["Kiel", "Hamburg"]}),
    ("d07", 2022, ["esp"],
     "Waldbrand bei Sevilla. Die Flammen näherten sich Sevilla. Madrid schickte Löschflugzeuge.",
     {"alpha": ["Sevilla", "Madrid"],
      "beta": ["Sevilla", "Madrid"],
      "gamma": ["Sevilla", "Madrid"]}),
    ("d08", 2017, ["prt"],
     "Flächenbrand in Portugal. Bei Porto brannten Wälder. Lissabon rief den Notstand aus.",
     {"alpha": ["Porto", "Lissabon"],
      "beta": ["Portugal", "Porto", "Lissabon"],
      "gamma": ["Lissabon"]}),
    ("d09", 2019, ["ita"],
     "Hochwasser in Venedig. Der Markusplatz in Venedig stand unter Wasser. Die "
     "italienischen Behörden sperrten Brücken. Rom versprach Hilfen.",
     {"alpha": ["Venedig", "Rom"],
      "beta": ["Venedig", "Rom"],
      "gamma": ["Venedig", "Rom", "italienischen"]}),
    ("d10", 2021, ["deu"],
     "Kältewelle in Bayern. In München fielen die Temperaturen auf minus 20 Grad. "
     "Frost legte Berlin lahm.",
     {"alpha": ["Bayern", "München", "Berlin"],
      "beta": ["Bayern", "München", "Berlin"],
      "gamma": ["München", "Berlin"]}),
    ("d11", 2010, ["pol"],
     "Hochwasser an der Oder. Breslau bereitet sich vor. Warschau entsandte Soldaten.",
     {"alpha": ["Oder", "Breslau", "Warschau"],
      "beta": ["Oder", "Breslau", "Warschau"],
      "gamma": ["Breslau", "Warschau"]}),
    ("d12", 2002, ["cze", "deu"],
     "Hochwasser in Prag und Dresden. Die Elbe verband beide Städte im Unglück. "
     "Prag evakuierte Teile der Altstadt.",
     {"alpha": ["Prag", "Dresden", "Elbe"],
      "beta": ["Prag", "Dresden", "Elbe", "Altstadt"],
      "gamma": ["Prag", "Dresden"]}),
    ("d13", 2023, ["che"],
     "Erdrutsch bei Bern. Die Strasse nach Genf wurde verschüttet. Zürich schickte Bergungstrupps.",
     {"alpha": ["Bern", "Genf", "Zürich"],
      "beta": ["Bern", "Genf", "Zürich"],
      "gamma": ["Bern", "Genf"]}),
    ("d14", 2015, ["arg", "bra"],
     "Dürre in Südamerika. Buenos Aires rationierte Wasser. In São Paulo sank der "
     "Pegel der Stauseen.",
     {"alpha": ["Buenos Aires", "São Paulo", "Südamerika"],
      "beta": ["Buenos Aires", "São Paulo", "Südamerika"],
      "gamma": ["Buenos Aires", "São Paulo"]}),
    ("d15", 2020, ["fra"],
     "Trockenheit in Lyon. Der Fluss bei Lyon führte Niedrigwasser. Paris beschloss "
     "Sparmassnahmen.",
     {"alpha": ["Lyon", "Paris"],
      "beta": ["Lyon", "Paris"],
      "gamma": ["Lyon"]}),
    ("d16", 2019, ["aus"],
     "Hitzewelle in Sydney. Die Hitzewelle traf Australien besonders hart. Die Behörden "
     "in Sydney warnten vor Buschfeuern. Aus Bern kam Expertenhilfe.",
     {"alpha": ["Sydney", "Australien", "Bern"],
      "beta": ["Sydney", "Australien", "Bern"],
      "gamma": ["Sydney", "Bern"]}),
    ("d17", 2018, ["deu"],
     "Dürre in Brandenburg. Die Felder bei Frankfurt vertrockneten. Berlin meldete "
     "Ernteausfälle.",
     {"alpha": ["Brandenburg", "Frankfurt", "Berlin"],
      "beta": ["Brandenburg", "Frankfurt", "Berlin"],
      "gamma": ["Frankfurt", "Berlin"]}),
    ("d18", 2003, ["ita"],
     "Hitzewelle in Rom. Die Stadt Rom öffnete Brunnen. Venedig litt unter Hitze.",
     {"alpha": ["Rom", "Venedig"],
      "beta": ["Rom", "Venedig", "Stadt"],
      "gamma": ["Rom", "Venedig"]}),
    ("d19", 2001, ["esp"],
     "Frost in Madrid. Schnee fiel sogar in Sevilla. Die spanische Regierung reagierte.",
     {"alpha": ["Madrid", "Sevilla"],
      "beta": ["Madrid", "Sevilla"],
      "gamma": ["Madrid"]}),
    ("d20", 2015, ["che"],
     "Hitzewelle in Zürich. Auch Genf meldete Rekordtemperaturen. Die Sonne brannte tagelang.",
     {"alpha": ["Zürich", "Genf"],
      "beta": ["Zürich", "Genf"],
      "gamma": ["Zürich", "Genf", "Sonne"]}),
    ("d21", 2006, [],
     "Überschwemmungen in ganz Europa. Viele Länder waren betroffen.",
     {"alpha": ["Europa"],
      "beta": ["Europa"],
      "gamma": []}),
    ("d22", 2011, ["deu"],
     "Der Sturm zog über das Land. Niemand nannte Orte.",
     {"alpha": [],
      "beta": [],
      "gamma": []}),
]

RUN_TOML = """\
corpus = "corpus.jsonl"
cache = "cache.jsonl"
fixture = "fixture_gazetteer.jsonl"
keywords = "keywords.txt"
databases = ["fixture"]
layers = ["alpha", "beta", "gamma"]
methods = ["majority", "centroid", "keyword"]
min_docs = 1
offline = true
out = "out"
"""


def spans_for(text: str, surfaces: list[str]) -> list[dict]:
    spans = []
    for surface in surfaces:
        pattern = re.compile(r"(?<!\w)" + re.escape(surface) + r"(?!\w)")
        found = [m for m in pattern.finditer(text)]
        if not found:
            raise SystemExit(f"surface {surface!r} not present in: {text[:60]}...")
        for m in found:
            spans.append({"start": m.start(), "end": m.end(), "surface": surface})
    spans.sort(key=lambda s: (s["start"], s["end"]))
    return spans


def main() -> int:
    DATA.mkdir(exist_ok=True)

    (DATA / "keywords.txt").write_text(KEYWORDS, encoding="utf-8")
    (DATA / "run.toml").write_text(RUN_TOML, encoding="utf-8")

    with open(DATA / "fixture_gazetteer.jsonl", "w", encoding="utf-8") as fh:
        for query in sorted(FIXTURE):
            rows = [{"lat": lat, "lon": lon, "country": country, "rank": i + 1, "class": cls}
                    for i, (lat, lon, country, cls) in enumerate(FIXTURE[query])]
            fh.write(json.dumps({"query": query, "matches": rows}, ensure_ascii=False) + "\n")

    with open(DATA / "corpus.jsonl", "w", encoding="utf-8") as fh:
        for doc_id, year, gold, text, layer_surfaces in DOCS:
            obj = {
                "id": doc_id,
                "text": text,
                "language": "de",
                "sentences": [],  # loader applies the fallback splitter
                "gold_countries": gold,
                "year": year,
                "layers": {layer: spans_for(text, surfaces)
                           for layer, surfaces in sorted(layer_surfaces.items())},
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")

    # validate the generated corpus end to end
    sys.path.insert(0, str(REPO / "src"))
    from geofocus.corpus import load_corpus, load_keywords

    corpus = load_corpus(DATA / "corpus.jsonl", keywords=load_keywords(DATA / "keywords.txt"))
    n_excluded = sum(1 for d in corpus.documents.values() if d.excluded)
    print(f"wrote {len(corpus.documents)} documents "
          f"({n_excluded} excluded), {len(corpus.layers)} layers, "
          f"{len(FIXTURE)} fixture queries")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
