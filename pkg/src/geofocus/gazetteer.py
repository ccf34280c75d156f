"""Gazetteer querying, persistent caching, and match filtering.

Two remote client profiles are provided — a Nominatim-like free-text search
endpoint and a GeoNames-like exact-name search — plus an offline fixture
client backed by a local JSONL file, which is what tests and desk-scale
runs use. All clients share one persistent cache so that a query is sent
over the network at most once; the upstream Nominatim usage policy caps
traffic at one request per second and repeated queries are flagged, hence
requests are serialized behind a configurable minimum interval.

Cache file: JSONL, one line per (db, query):

    {"db": str, "query": str, "fetched_at": iso8601,
     "matches": [{"lat": f, "lon": f, "country": str|null,
                  "rank": int, "class": str}, ...]}
"""

from __future__ import annotations

import io
import json
import os
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Sequence

import requests

from .corpus import Corpus, toponym_types
from .countries import normalize_country

MAX_CACHED_MATCHES = 20

NOMINATIM_URL_ENV = "GEOFOCUS_NOMINATIM_URL"
GEONAMES_USER_ENV = "GEOFOCUS_GEONAMES_USER"

DEFAULT_NOMINATIM_URL = "https://nominatim.openstreetmap.org"
DEFAULT_GEONAMES_URL = "http://api.geonames.org"


class TransportError(RuntimeError):
    """Network-level failure; the caller may retry with backoff."""


class ThrottleError(TransportError):
    """Quota or rate-limit response from the source."""

    def __init__(self, message: str, retry_after: float | None = None):
        super().__init__(message)
        self.retry_after = retry_after


class IncompleteCacheError(RuntimeError):
    """Cache lacks entries the pipeline needs in offline operation."""

    def __init__(self, source_db: str, missing: Sequence[str]):
        super().__init__(
            f"{source_db}: {len(missing)} toponym types missing from cache: "
            + ", ".join(repr(m) for m in list(missing)[:10])
            + ("..." if len(missing) > 10 else "")
        )
        self.source_db = source_db
        self.missing = list(missing)


@dataclass(frozen=True)
class GazetteerMatch:
    """One candidate place for a queried toponym type."""

    query: str
    latitude: float
    longitude: float
    country: str | None  # alpha-3 lowercase, or None when the source has no country
    rank: int  # 1-based position in the source's result order
    place_class: str
    source_db: str

    def __post_init__(self):
        if not (-90.0 <= self.latitude <= 90.0):
            raise ValueError(f"latitude {self.latitude} out of bounds for {self.query!r}")
        if not (-180.0 <= self.longitude <= 180.0):
            raise ValueError(f"longitude {self.longitude} out of bounds for {self.query!r}")
        if self.rank < 1:
            raise ValueError(f"rank {self.rank} must be 1-based for {self.query!r}")


def filter_matches(raw: Sequence[GazetteerMatch]) -> list[GazetteerMatch]:
    """Apply the retention rules to a raw match list.

    Matches without a known country are dropped; among matches sharing
    (query, country) only the first in rank order survives. Relative order
    is preserved, so the operation is idempotent.
    """
    seen: set[tuple[str, str]] = set()
    kept: list[GazetteerMatch] = []
    for m in raw:
        if m.country is None:
            continue
        key = (m.query, m.country)
        if key in seen:
            continue
        seen.add(key)
        kept.append(m)
    return kept


# --- persistent cache ---------------------------------------------------

class GazetteerCache:
    """(source_db, query) -> raw match list, persisted as JSONL.

    Entries are never expired: the gazetteer is treated as a frozen
    snapshot, and negative results are cached too. Reads are lock-free;
    writes are serialized.
    """

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self._entries: dict[tuple[str, str], dict] = {}
        self._lock = threading.Lock()
        self._dirty = False
        if self.path is not None and self.path.exists():
            self._load()

    def _load(self) -> None:
        assert self.path is not None
        with io.open(self.path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                    key = (obj["db"], obj["query"])
                except (json.JSONDecodeError, KeyError) as exc:
                    raise ValueError(f"{self.path}:{lineno}: bad cache line: {exc}") from None
                self._entries[key] = obj

    def get(self, source_db: str, query: str) -> list[GazetteerMatch] | None:
        """Cached matches for a query, or None when the query was never fetched."""
        obj = self._entries.get((source_db, query))
        if obj is None:
            return None
        return [
            GazetteerMatch(
                query=query,
                latitude=float(m["lat"]),
                longitude=float(m["lon"]),
                country=m["country"],
                rank=int(m["rank"]),
                place_class=str(m.get("class", "")),
                source_db=source_db,
            )
            for m in obj["matches"]
        ]

    def put(self, source_db: str, query: str, matches: Sequence[GazetteerMatch]) -> None:
        matches = list(matches)[:MAX_CACHED_MATCHES]
        entry = {
            "db": source_db,
            "query": query,
            "fetched_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "matches": [
                {
                    "lat": m.latitude,
                    "lon": m.longitude,
                    "country": m.country,
                    "rank": m.rank,
                    "class": m.place_class,
                }
                for m in matches
            ],
        }
        with self._lock:
            self._entries[(source_db, query)] = entry
            self._dirty = True

    def __contains__(self, key: tuple[str, str]) -> bool:
        return key in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def dirty(self) -> bool:
        return self._dirty

    def save(self, path: str | Path | None = None) -> Path:
        """Write all entries deterministically (sorted by db, then query)."""
        target = Path(path) if path is not None else self.path
        if target is None:
            raise ValueError("no cache path configured")
        with self._lock:
            lines = []
            for key in sorted(self._entries):
                obj = self._entries[key]
                lines.append(json.dumps(
                    {"db": obj["db"], "query": obj["query"],
                     "fetched_at": obj["fetched_at"], "matches": obj["matches"]},
                    ensure_ascii=False, separators=(",", ":"),
                ))
            target.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
            self._dirty = False
        return target


# --- clients -------------------------------------------------------------

class RateLimiter:
    """Serialize outbound calls to honor a minimum interval between them."""

    def __init__(self, min_interval: float, clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        self.min_interval = min_interval
        self._clock = clock
        self._sleep = sleep
        self._last: float | None = None
        self._lock = threading.Lock()

    def wait(self) -> None:
        with self._lock:
            now = self._clock()
            if self._last is not None:
                remaining = self.min_interval - (now - self._last)
                if remaining > 0:
                    self._sleep(remaining)
                    now = self._clock()
            self._last = now


class GazetteerClient:
    """Shared cache-first query logic; subclasses implement _fetch."""

    source_db: str = ""
    requires_network: bool = True

    def __init__(self, cache: GazetteerCache):
        self.cache = cache
        self.request_count = 0

    def query(self, toponym: str, limit: int = MAX_CACHED_MATCHES) -> list[GazetteerMatch]:
        """Top matches for a toponym in source order, served from cache when
        possible and written to cache before returning otherwise."""
        if not toponym:
            raise ValueError("toponym must be non-empty")
        cached = self.cache.get(self.source_db, toponym)
        if cached is not None:
            return cached[:limit]
        matches = self._fetch(toponym, min(limit, MAX_CACHED_MATCHES))
        self.cache.put(self.source_db, toponym, matches)
        return list(matches)[:limit]

    def lookup_cached(self, toponym: str) -> list[GazetteerMatch] | None:
        return self.cache.get(self.source_db, toponym)

    def _fetch(self, toponym: str, limit: int) -> list[GazetteerMatch]:
        raise NotImplementedError


def query_remote(db: GazetteerClient, toponym: str, limit: int = MAX_CACHED_MATCHES) -> list[GazetteerMatch]:
    return db.query(toponym, limit)


class FixtureGazetteer(GazetteerClient):
    """Offline gazetteer backed by a local JSONL file.

    Each line is {"query": str, "matches": [...]} with the cache match
    schema. Unknown queries yield an empty list (and are cached as empty,
    like a remote miss would be).
    """

    source_db = "fixture"
    requires_network = False

    def __init__(self, cache: GazetteerCache, fixture_path: str | Path):
        super().__init__(cache)
        self.fixture_path = Path(fixture_path)
        self._table: dict[str, list[dict]] = {}
        with io.open(self.fixture_path, "r", encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                obj = json.loads(line)
                self._table[obj["query"]] = obj["matches"]

    def _fetch(self, toponym: str, limit: int) -> list[GazetteerMatch]:
        self.request_count += 1
        rows = self._table.get(toponym, [])[:limit]
        return [
            GazetteerMatch(
                query=toponym,
                latitude=float(r["lat"]),
                longitude=float(r["lon"]),
                country=r.get("country"),
                rank=int(r["rank"]),
                place_class=str(r.get("class", "")),
                source_db=self.source_db,
            )
            for r in rows
        ]


def _normalize_or_none(code) -> str | None:
    if not code:
        return None
    try:
        return normalize_country(str(code))
    except ValueError:
        return None


class NominatimClient(GazetteerClient):
    """Free-text search endpoint with a result limit parameter."""

    source_db = "nominatim"

    def __init__(self, cache: GazetteerCache, base_url: str | None = None,
                 min_interval: float = 1.0, session: requests.Session | None = None,
                 user_agent: str = "geofocus/0.1", timeout: float = 30.0,
                 clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        super().__init__(cache)
        self.base_url = (base_url or os.environ.get(NOMINATIM_URL_ENV) or DEFAULT_NOMINATIM_URL).rstrip("/")
        self.session = session or requests.Session()
        self.user_agent = user_agent
        self.timeout = timeout
        self._limiter = RateLimiter(min_interval, clock=clock, sleep=sleep)

    def _fetch(self, toponym: str, limit: int) -> list[GazetteerMatch]:
        self._limiter.wait()
        self.request_count += 1
        try:
            resp = self.session.get(
                f"{self.base_url}/search",
                params={"q": toponym, "format": "jsonv2", "limit": limit, "addressdetails": 1},
                headers={"User-Agent": self.user_agent},
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise TransportError(f"nominatim request failed for {toponym!r}: {exc}") from exc
        if resp.status_code in (429, 509):
            retry_after = resp.headers.get("Retry-After")
            raise ThrottleError(
                f"nominatim throttled request for {toponym!r}",
                retry_after=float(retry_after) if retry_after else None,
            )
        if resp.status_code != 200:
            raise TransportError(f"nominatim returned HTTP {resp.status_code} for {toponym!r}")
        matches = []
        for i, item in enumerate(resp.json(), 1):
            country = _normalize_or_none((item.get("address") or {}).get("country_code"))
            matches.append(GazetteerMatch(
                query=toponym,
                latitude=float(item["lat"]),
                longitude=float(item["lon"]),
                country=country,
                rank=i,
                place_class=str(item.get("category") or item.get("class") or ""),
                source_db=self.source_db,
            ))
        return matches


class GeonamesClient(GazetteerClient):
    """Exact-name search (name_equals) with the fuzzy flag set to 1."""

    source_db = "geonames"

    def __init__(self, cache: GazetteerCache, username: str | None = None,
                 base_url: str = DEFAULT_GEONAMES_URL, daily_budget: int = 1000,
                 session: requests.Session | None = None, timeout: float = 30.0):
        super().__init__(cache)
        self.username = username or os.environ.get(GEONAMES_USER_ENV)
        self.base_url = base_url.rstrip("/")
        self.session = session or requests.Session()
        self.timeout = timeout
        self.budget_remaining = daily_budget

    def _fetch(self, toponym: str, limit: int) -> list[GazetteerMatch]:
        if not self.username:
            raise TransportError(f"geonames username not configured (set {GEONAMES_USER_ENV})")
        if self.budget_remaining <= 0:
            raise ThrottleError("geonames daily budget exhausted", retry_after=None)
        self.budget_remaining -= 1
        self.request_count += 1
        try:
            resp = self.session.get(
                f"{self.base_url}/searchJSON",
                params={"name_equals": toponym, "fuzzy": 1, "maxRows": limit,
                        "username": self.username},
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise TransportError(f"geonames request failed for {toponym!r}: {exc}") from exc
        if resp.status_code != 200:
            raise TransportError(f"geonames returned HTTP {resp.status_code} for {toponym!r}")
        payload = resp.json()
        status = payload.get("status")
        if status:
            # Credit-limit style statuses (hourly/daily/weekly) are retryable later.
            if status.get("value") in (18, 19, 20):
                raise ThrottleError(f"geonames quota: {status.get('message')}", retry_after=3600.0)
            raise TransportError(f"geonames error: {status.get('message')}")
        matches = []
        for i, item in enumerate(payload.get("geonames", []), 1):
            matches.append(GazetteerMatch(
                query=toponym,
                latitude=float(item["lat"]),
                longitude=float(item["lng"]),
                country=_normalize_or_none(item.get("countryCode")),
                rank=i,
                place_class=str(item.get("fcode") or item.get("fcl") or ""),
                source_db=self.source_db,
            ))
        return matches


# --- corpus-level statistics ---------------------------------------------

def coverage_stats(corpus: Corpus, layer_id: str, db: GazetteerClient) -> float:
    """Fraction of a layer's distinct toponym types that keep at least one
    match after filtering. Requires the cache to already hold every type."""
    types = sorted(toponym_types(corpus, layer_id))
    if not types:
        raise ValueError(f"layer {layer_id!r} has no toponym types; coverage is undefined")
    missing = [t for t in types if db.lookup_cached(t) is None]
    if missing:
        raise IncompleteCacheError(db.source_db, missing)
    covered = sum(1 for t in types if filter_matches(db.lookup_cached(t)))
    return covered / len(types)
