import json

import pytest
import requests
from hypothesis import given, strategies as st

from geofocus.corpus import load_corpus
from geofocus.gazetteer import (
    FixtureGazetteer,
    GazetteerCache,
    GazetteerMatch,
    GeonamesClient,
    IncompleteCacheError,
    NominatimClient,
    RateLimiter,
    ThrottleError,
    TransportError,
    coverage_stats,
    filter_matches,
    query_remote,
)

from conftest import make_doc, span_of, write_jsonl


def match(query="Berlin", lat=52.52, lon=13.40, country="deu", rank=1, place_class="city",
          source_db="fixture"):
    return GazetteerMatch(query=query, latitude=lat, longitude=lon, country=country,
                          rank=rank, place_class=place_class, source_db=source_db)


# --- match validation ----------------------------------------------------

def test_match_bounds_enforced():
    with pytest.raises(ValueError):
        match(lat=91.0)
    with pytest.raises(ValueError):
        match(lon=-181.0)
    with pytest.raises(ValueError):
        match(rank=0)


# --- filter_matches --------------------------------------------------------

def test_filter_drops_no_country_and_dedupes():
    m1 = match(country="deu", rank=1)
    m2 = match(country=None, rank=2)
    m3 = match(country="deu", rank=3)
    assert filter_matches([m1, m2, m3]) == [m1]


def test_filter_keeps_distinct_countries():
    m1 = match(country="deu", rank=1)
    m2 = match(country="fra", rank=2)
    assert filter_matches([m1, m2]) == [m1, m2]


def test_filter_empty():
    assert filter_matches([]) == []


match_lists = st.lists(
    st.builds(
        match,
        query=st.sampled_from(["A", "B"]),
        lat=st.floats(-90, 90, allow_nan=False),
        lon=st.floats(-180, 180, allow_nan=False),
        country=st.sampled_from([None, "deu", "fra", "bra"]),
        rank=st.integers(1, 20),
    ),
    max_size=20,
)


@given(match_lists)
def test_filter_idempotent_and_order_preserving(raw):
    once = filter_matches(raw)
    assert filter_matches(once) == once
    assert len(once) <= len(raw)
    # survivors keep their relative order
    positions = [raw.index(m) for m in once]
    assert positions == sorted(positions)
    # every survivor has a country; no two survivors share (query, country)
    assert all(m.country is not None for m in once)
    keys = [(m.query, m.country) for m in once]
    assert len(keys) == len(set(keys))


# --- fixture client and cache contract ------------------------------------

BERLIN_ROWS = [
    {"lat": 52.52, "lon": 13.40, "country": "deu", "rank": 1, "class": "city"},
    {"lat": 44.47, "lon": -71.19, "country": "usa", "rank": 2, "class": "town"},
    {"lat": -32.35, "lon": 149.05, "country": None, "rank": 3, "class": "locality"},
]


def fixture_file(tmp_path, rows=None):
    path = tmp_path / "fixture.jsonl"
    entries = [{"query": "Berlin", "matches": rows if rows is not None else BERLIN_ROWS}]
    path.write_text("".join(json.dumps(e) + "\n" for e in entries), encoding="utf-8")
    return path


def test_fixture_echoes_in_order(tmp_path):
    db = FixtureGazetteer(GazetteerCache(), fixture_file(tmp_path))
    result = query_remote(db, "Berlin")
    assert [m.rank for m in result] == [1, 2, 3]
    assert result[0].country == "deu" and result[2].country is None


def test_second_call_served_from_cache(tmp_path):
    db = FixtureGazetteer(GazetteerCache(), fixture_file(tmp_path))
    first = query_remote(db, "Berlin")
    assert db.request_count == 1
    second = query_remote(db, "Berlin")
    assert db.request_count == 1  # no second fixture lookup
    assert second == first


def test_unknown_query_cached_as_empty(tmp_path):
    db = FixtureGazetteer(GazetteerCache(), fixture_file(tmp_path))
    assert query_remote(db, "Qqqxyz") == []
    assert query_remote(db, "Qqqxyz") == []
    assert db.request_count == 1
    assert ("fixture", "Qqqxyz") in db.cache


def test_empty_toponym_rejected(tmp_path):
    db = FixtureGazetteer(GazetteerCache(), fixture_file(tmp_path))
    with pytest.raises(ValueError):
        query_remote(db, "")


def test_limit_respected(tmp_path):
    db = FixtureGazetteer(GazetteerCache(), fixture_file(tmp_path))
    assert len(query_remote(db, "Berlin", limit=2)) == 2


def test_cache_caps_at_twenty(tmp_path):
    rows = [{"lat": 1.0, "lon": float(i), "country": "deu", "rank": i + 1, "class": "x"}
            for i in range(25)]
    db = FixtureGazetteer(GazetteerCache(), fixture_file(tmp_path, rows))
    result = query_remote(db, "Berlin", limit=25)
    assert len(result) == 20
    assert len(db.cache.get("fixture", "Berlin")) == 20


def test_cache_round_trip_bytes_identical(tmp_path):
    cache_path = tmp_path / "cache.jsonl"
    db = FixtureGazetteer(GazetteerCache(cache_path), fixture_file(tmp_path))
    query_remote(db, "Berlin")
    query_remote(db, "Qqqxyz")
    db.cache.save()
    first_bytes = cache_path.read_bytes()

    reloaded = GazetteerCache(cache_path)
    assert reloaded.get("fixture", "Berlin") == db.cache.get("fixture", "Berlin")
    reloaded.save()
    assert cache_path.read_bytes() == first_bytes


def test_cache_save_is_sorted_and_deterministic(tmp_path):
    cache = GazetteerCache(tmp_path / "cache.jsonl")
    cache.put("geonames", "b", [])
    cache.put("fixture", "a", [match(query="a")])
    cache.put("fixture", "A", [])
    cache.save()
    keys = [(json.loads(line)["db"], json.loads(line)["query"])
            for line in (tmp_path / "cache.jsonl").read_text().splitlines()]
    assert keys == sorted(keys)


# --- coverage statistics ------------------------------------------------------

def _corpus_with_types(tmp_path, surfaces):
    text = " ".join(surfaces)
    doc = make_doc("d1", text, layers={"alpha": [span_of(text, s) for s in surfaces]})
    return load_corpus(write_jsonl(tmp_path / "c.jsonl", [doc]))


def test_coverage_counts_filtered_types(tmp_path):
    corpus = _corpus_with_types(tmp_path, ["Aa", "Bb", "Cc", "Dd"])
    cache = GazetteerCache()
    cache.put("fixture", "Aa", [match(query="Aa")])
    cache.put("fixture", "Bb", [match(query="Bb", country=None)])  # filtered out
    cache.put("fixture", "Cc", [match(query="Cc", country="fra")])
    cache.put("fixture", "Dd", [])
    db = FixtureGazetteer(cache, fixture_file(tmp_path))
    assert coverage_stats(corpus, "alpha", db) == 0.5


def test_coverage_full(tmp_path):
    corpus = _corpus_with_types(tmp_path, ["Aa", "Bb"])
    cache = GazetteerCache()
    cache.put("fixture", "Aa", [match(query="Aa")])
    cache.put("fixture", "Bb", [match(query="Bb")])
    db = FixtureGazetteer(cache, fixture_file(tmp_path))
    assert coverage_stats(corpus, "alpha", db) == 1.0


def test_coverage_missing_cache_entries_listed(tmp_path):
    corpus = _corpus_with_types(tmp_path, ["Aa", "Bb"])
    db = FixtureGazetteer(GazetteerCache(), fixture_file(tmp_path))
    with pytest.raises(IncompleteCacheError) as exc:
        coverage_stats(corpus, "alpha", db)
    assert exc.value.missing == ["Aa", "Bb"]


def test_coverage_no_types_is_undefined(tmp_path):
    text = "kein Ort hier"
    doc = make_doc("d1", text, layers={"alpha": []})
    corpus = load_corpus(write_jsonl(tmp_path / "c.jsonl", [doc]))
    db = FixtureGazetteer(GazetteerCache(), fixture_file(tmp_path))
    with pytest.raises(ValueError, match="no toponym types"):
        coverage_stats(corpus, "alpha", db)


# --- rate limiter -----------------------------------------------------------

def test_rate_limiter_enforces_interval():
    now = [0.0]
    sleeps = []

    def clock():
        return now[0]

    def sleep(dt):
        sleeps.append(dt)
        now[0] += dt

    limiter = RateLimiter(1.0, clock=clock, sleep=sleep)
    limiter.wait()
    assert sleeps == []
    limiter.wait()
    assert sleeps == [1.0]
    now[0] += 2.5
    limiter.wait()
    assert sleeps == [1.0]  # interval already elapsed


# --- HTTP clients against a stubbed transport --------------------------------

class FakeResponse:
    def __init__(self, status_code=200, payload=None, headers=None):
        self.status_code = status_code
        self._payload = payload if payload is not None else []
        self.headers = headers or {}

    def json(self):
        return self._payload


class FakeSession:
    def __init__(self, responses):
        self.responses = list(responses)
        self.calls = []

    def get(self, url, params=None, headers=None, timeout=None):
        self.calls.append({"url": url, "params": params})
        result = self.responses.pop(0)
        if isinstance(result, Exception):
            raise result
        return result


NOMINATIM_PAYLOAD = [
    {"lat": "52.52", "lon": "13.40", "category": "boundary",
     "address": {"country_code": "de"}},
    {"lat": "44.47", "lon": "-71.19", "class": "place", "address": {}},
]


def test_nominatim_parses_and_normalizes(tmp_path):
    session = FakeSession([FakeResponse(payload=NOMINATIM_PAYLOAD)])
    client = NominatimClient(GazetteerCache(), base_url="http://nominatim.test",
                             session=session, min_interval=0.0)
    result = client.query("Berlin", limit=5)
    assert session.calls[0]["url"] == "http://nominatim.test/search"
    assert session.calls[0]["params"]["q"] == "Berlin"
    assert session.calls[0]["params"]["limit"] == 5
    assert result[0].country == "deu"  # alpha-2 from source, alpha-3 in model
    assert result[0].rank == 1 and result[1].rank == 2
    assert result[1].country is None
    assert result[0].place_class == "boundary" and result[1].place_class == "place"


def test_nominatim_throttle_and_transport_errors(tmp_path):
    session = FakeSession([
        FakeResponse(status_code=429, headers={"Retry-After": "7"}),
        requests.ConnectionError("boom"),
    ])
    client = NominatimClient(GazetteerCache(), base_url="http://nominatim.test",
                             session=session, min_interval=0.0)
    with pytest.raises(ThrottleError) as exc:
        client.query("Berlin")
    assert exc.value.retry_after == 7.0
    with pytest.raises(TransportError):
        client.query("Berlin")
    # failures must not be cached
    assert ("nominatim", "Berlin") not in client.cache


GEONAMES_PAYLOAD = {"geonames": [
    {"lat": "48.14", "lng": "11.58", "countryCode": "DE", "fcode": "PPLA"},
    {"lat": "10.0", "lng": "20.0", "fcl": "P"},
]}


def test_geonames_parses_name_equals_fuzzy(tmp_path):
    session = FakeSession([FakeResponse(payload=GEONAMES_PAYLOAD)])
    client = GeonamesClient(GazetteerCache(), username="tester", session=session,
                            base_url="http://geonames.test")
    result = client.query("München")
    params = session.calls[0]["params"]
    assert params["name_equals"] == "München"
    assert params["fuzzy"] == 1
    assert params["username"] == "tester"
    assert result[0].country == "deu" and result[0].place_class == "PPLA"
    assert result[1].country is None


def test_geonames_quota_status_raises_throttle(tmp_path):
    session = FakeSession([FakeResponse(payload={"status": {"message": "limit", "value": 19}})])
    client = GeonamesClient(GazetteerCache(), username="tester", session=session,
                            base_url="http://geonames.test")
    with pytest.raises(ThrottleError):
        client.query("Berlin")


def test_geonames_budget_counter(tmp_path):
    session = FakeSession([FakeResponse(payload={"geonames": []}),
                           FakeResponse(payload={"geonames": []})])
    client = GeonamesClient(GazetteerCache(), username="tester", session=session,
                            base_url="http://geonames.test", daily_budget=1)
    client.query("Berlin")
    with pytest.raises(ThrottleError):
        client.query("Hamburg")


def test_geonames_requires_username(tmp_path, monkeypatch):
    monkeypatch.delenv("GEOFOCUS_GEONAMES_USER", raising=False)
    client = GeonamesClient(GazetteerCache(), session=FakeSession([]),
                            base_url="http://geonames.test")
    with pytest.raises(TransportError, match="username"):
        client.query("Berlin")
