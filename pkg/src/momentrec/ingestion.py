"""Data ingestion: Last.fm scrobbles/tags and Spotify audio features.

Two modes share one code path: "live" talks to the web APIs through a
rate-limited, retrying HTTP client; "offline" replays JSON-lines fixture
files with identical record schemas. Everything lands in a local JSON-lines
cache that the dataset builder consumes.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import httpx

from .core import AudioFeatures, Scrobble, TagAssignment, track_key_of

log = logging.getLogger(__name__)

SCROBBLES_FILE = "scrobbles.jsonl"
TAGS_FILE = "tags.jsonl"
FEATURES_FILE = "features.jsonl"

LASTFM_API_URL = "https://ws.audioscrobbler.com/2.0/"
SPOTIFY_TOKEN_URL = "https://accounts.spotify.com/api/token"
SPOTIFY_API_URL = "https://api.spotify.com/v1"


class TransportError(RuntimeError):
    """Raised after retries are exhausted against an upstream API."""


@dataclass
class ApiConfig:
    mode: str = "offline"  # "live" | "offline"
    lastfm_api_key: str = ""
    lastfm_user: str = ""
    spotify_client_id: str = ""
    spotify_client_secret: str = ""
    rate_limit_per_sec: float = 5.0
    cache_dir: Path = Path("cache")
    fixtures_dir: Path | None = None

    def __post_init__(self) -> None:
        if self.mode not in ("live", "offline"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.rate_limit_per_sec <= 0:
            raise ValueError("rate_limit_per_sec must be positive")
        self.cache_dir = Path(self.cache_dir)
        if self.fixtures_dir is not None:
            self.fixtures_dir = Path(self.fixtures_dir)
        if self.mode == "offline" and self.fixtures_dir is None:
            raise ValueError("offline mode requires fixtures_dir")
        if self.mode == "live" and not (self.lastfm_api_key and self.lastfm_user):
            raise ValueError("live mode requires Last.fm credentials")


@dataclass
class TrackRecord:
    """Everything ingested about one unique track."""

    track_key: str
    mbid: str | None = None
    tags: list[TagAssignment] = field(default_factory=list)
    features: AudioFeatures | None = None


@dataclass
class IngestReport:
    """Scrobble-level accounting; fetched = kept + skipped + filtered."""

    fetched: int = 0
    kept: int = 0
    skipped_malformed: int = 0
    filtered_no_features: int = 0
    duplicates_removed: int = 0
    rejected_feature_tracks: int = 0
    tracks_seen: int = 0
    tracks_with_features: int = 0

    def as_dict(self) -> dict[str, int]:
        return dict(vars(self))


class RateLimiter:
    """Token bucket; clock and sleep are injectable for tests."""

    def __init__(
        self,
        rate_per_sec: float,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        self._interval = 1.0 / rate_per_sec
        self._clock = clock
        self._sleep = sleep
        self._next_slot = clock()

    def acquire(self) -> None:
        now = self._clock()
        if now < self._next_slot:
            self._sleep(self._next_slot - now)
            now = self._next_slot
        self._next_slot = now + self._interval


def with_retries(
    call: Callable[[], httpx.Response],
    attempts: int = 3,
    base_delay: float = 1.0,
    sleep: Callable[[float], None] = time.sleep,
) -> httpx.Response:
    """Exponential backoff (base 1s, x2); raises TransportError when exhausted."""
    last_error: Exception | None = None
    for attempt in range(attempts):
        try:
            response = call()
            if response.status_code >= 500:
                raise httpx.HTTPStatusError(
                    f"server error {response.status_code}",
                    request=response.request,
                    response=response,
                )
            return response
        except (httpx.TransportError, httpx.HTTPStatusError) as exc:
            last_error = exc
            if attempt < attempts - 1:
                sleep(base_delay * (2**attempt))
    raise TransportError(f"request failed after {attempts} attempts: {last_error}")


# ---------------------------------------------------------------------------
# JSON-lines cache


class JsonlCache:
    """Write-once JSON-lines cache, one file per entity kind."""

    KINDS = ("scrobbles", "tags", "features")
    _FILES = {"scrobbles": SCROBBLES_FILE, "tags": TAGS_FILE, "features": FEATURES_FILE}

    def __init__(self, cache_dir: Path) -> None:
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self._keys: dict[str, set[str]] = {k: set() for k in self.KINDS}
        for kind in self.KINDS:
            for key, _ in self._iter_lines(kind):
                self._keys[kind].add(key)

    def path_for(self, kind: str) -> Path:
        return self.cache_dir / self._FILES[kind]

    def _iter_lines(self, kind: str) -> Iterable[tuple[str, dict]]:
        path = self.path_for(kind)
        if not path.exists():
            return
        with path.open() as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    entry = json.loads(line)
                    yield entry["key"], entry["record"]
                except (json.JSONDecodeError, KeyError, TypeError):
                    log.warning("skipping corrupt cache line %s:%d", path, lineno)

    def store(self, kind: str, key: str, record: dict) -> bool:
        """Append a record unless the key is already cached. Returns True if written."""
        if key in self._keys[kind]:
            return False
        with self.path_for(kind).open("a") as fh:
            fh.write(json.dumps({"key": key, "record": record}) + "\n")
        self._keys[kind].add(key)
        return True

    def load(self, kind: str, key: str) -> dict | None:
        for existing, record in self._iter_lines(kind):
            if existing == key:
                return record
        return None

    def load_all(self, kind: str) -> list[dict]:
        return [record for _, record in self._iter_lines(kind)]

    def has(self, kind: str, key: str) -> bool:
        return key in self._keys[kind]


def cache_store(cache_dir: Path, entity_kind: str, key: str, record: dict) -> bool:
    return JsonlCache(cache_dir).store(entity_kind, key, record)


def cache_load(cache_dir: Path, entity_kind: str, key: str) -> dict | None:
    return JsonlCache(cache_dir).load(entity_kind, key)


# ---------------------------------------------------------------------------
# Record parsing (shared by fixtures, cache and live responses)


def parse_scrobble_record(record: dict) -> Scrobble:
    return Scrobble(
        played_at=int(record["ts"]),
        track_name=str(record["track"]),
        artist_name=str(record["artist"]),
        mbid=record.get("mbid") or None,
    )


def scrobble_record(s: Scrobble) -> dict:
    record = {"ts": s.played_at, "artist": s.artist_name, "track": s.track_name}
    if s.mbid:
        record["mbid"] = s.mbid
    return record


def parse_tag_list(raw_tags: list[dict]) -> list[TagAssignment]:
    """Lowercase, trim and deduplicate tags; on collision the max count wins."""
    best: dict[str, TagAssignment] = {}
    for raw in raw_tags:
        ta = TagAssignment.normalized(
            str(raw["tag"]), int(raw["count"]), str(raw.get("source", "track"))
        )
        if ta.tag not in best or ta.count > best[ta.tag].count:
            best[ta.tag] = ta
    return sorted(best.values(), key=lambda t: (-t.count, t.tag))


# ---------------------------------------------------------------------------
# Fixture-backed (offline) source


class FixtureSource:
    def __init__(self, fixtures_dir: Path) -> None:
        self.fixtures_dir = Path(fixtures_dir)

    def _read_jsonl(self, filename: str) -> Iterable[dict]:
        path = self.fixtures_dir / filename
        if not path.exists():
            return
        with path.open() as fh:
            for line in fh:
                line = line.strip()
                if line:
                    yield json.loads(line)

    def scrobble_records(self) -> Iterable[dict]:
        return self._read_jsonl(SCROBBLES_FILE)

    def tags_for(self, track_key: str) -> list[dict] | None:
        for record in self._read_jsonl(TAGS_FILE):
            if record.get("track_key") == track_key:
                return record.get("tags", [])
        return None

    def artist_tags_for(self, artist_name: str) -> list[dict]:
        key = artist_name.strip().lower()
        for record in self._read_jsonl(TAGS_FILE):
            if record.get("artist_key") == key:
                return record.get("tags", [])
        return []

    def features_for(self, track_key: str) -> dict | None:
        for record in self._read_jsonl(FEATURES_FILE):
            if record.get("track_key") == track_key:
                return record.get("features")
        return None


# ---------------------------------------------------------------------------
# Live API source


class LiveSource:
    """Rate-limited Last.fm + Spotify client with retry/backoff."""

    def __init__(
        self,
        config: ApiConfig,
        client: httpx.Client | None = None,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        self.config = config
        self.client = client or httpx.Client(timeout=30.0)
        self.limiter = RateLimiter(config.rate_limit_per_sec, clock=clock, sleep=sleep)
        self._sleep = sleep
        self._spotify_token: str | None = None

    def _get(self, url: str, **kwargs) -> httpx.Response:
        def call() -> httpx.Response:
            self.limiter.acquire()
            return self.client.get(url, **kwargs)

        return with_retries(call, sleep=self._sleep)

    def _lastfm(self, method: str, **params) -> dict:
        params.update(
            method=method, api_key=self.config.lastfm_api_key, format="json"
        )
        return self._get(LASTFM_API_URL, params=params).json()

    def scrobble_records(self, since: int, until: int) -> Iterable[dict]:
        page, total_pages = 1, 1
        while page <= total_pages:
            payload = self._lastfm(
                "user.getrecenttracks",
                user=self.config.lastfm_user,
                limit=200,
                page=page,
                to=until,
                **{"from": since},
            )
            recent = payload.get("recenttracks", {})
            total_pages = int(recent.get("@attr", {}).get("totalPages", 1))
            for item in recent.get("track", []):
                if item.get("@attr", {}).get("nowplaying"):
                    continue
                yield {
                    "ts": int(item["date"]["uts"]),
                    "artist": item["artist"].get("#text") or item["artist"].get("name"),
                    "track": item["name"],
                    "mbid": item.get("mbid") or None,
                }
            page += 1

    def tags_for(self, track_key: str, artist: str, track: str) -> list[dict] | None:
        payload = self._lastfm("track.gettoptags", artist=artist, track=track)
        tags = payload.get("toptags", {}).get("tag", [])
        if not tags:
            return None
        return [{"tag": t["name"], "count": int(t["count"]), "source": "track"} for t in tags]

    def artist_tags_for(self, artist: str) -> list[dict]:
        payload = self._lastfm("artist.gettoptags", artist=artist)
        tags = payload.get("toptags", {}).get("tag", [])
        return [{"tag": t["name"], "count": int(t["count"]), "source": "artist"} for t in tags]

    def _spotify_headers(self) -> dict[str, str]:
        if self._spotify_token is None:
            response = with_retries(
                lambda: self.client.post(
                    SPOTIFY_TOKEN_URL,
                    data={"grant_type": "client_credentials"},
                    auth=(self.config.spotify_client_id, self.config.spotify_client_secret),
                ),
                sleep=self._sleep,
            )
            self._spotify_token = response.json()["access_token"]
        return {"Authorization": f"Bearer {self._spotify_token}"}

    def _spotify_track_id(self, artist: str, track: str) -> str | None:
        response = self._get(
            f"{SPOTIFY_API_URL}/search",
            params={"q": f"track:{track} artist:{artist}", "type": "track", "limit": 1},
            headers=self._spotify_headers(),
        )
        items = response.json().get("tracks", {}).get("items", [])
        return items[0]["id"] if items else None

    def features_for(self, artist: str, track: str) -> dict | None:
        track_id = self._spotify_track_id(artist, track)
        if track_id is None:
            return None
        response = self._get(
            f"{SPOTIFY_API_URL}/audio-features/{track_id}",
            headers=self._spotify_headers(),
        )
        payload = response.json()
        return {name: payload[name] for name in AudioFeatures.__dataclass_fields__}


# ---------------------------------------------------------------------------
# Fetch operations


def fetch_scrobbles(
    config: ApiConfig,
    since: int,
    until: int,
    report: IngestReport | None = None,
    source: FixtureSource | LiveSource | None = None,
) -> list[Scrobble]:
    """All playbacks in [since, until), ascending, deduplicated by (ts, track)."""
    if since >= until:
        raise ValueError("since must precede until")
    report = report if report is not None else IngestReport()
    source = source or _default_source(config)
    if isinstance(source, LiveSource):
        records = source.scrobble_records(since, until)
    else:
        records = source.scrobble_records()

    seen: set[tuple[int, str]] = set()
    scrobbles: list[Scrobble] = []
    for record in records:
        try:
            s = parse_scrobble_record(record)
        except (KeyError, ValueError, TypeError):
            report.fetched += 1
            report.skipped_malformed += 1
            continue
        if not since <= s.played_at < until:
            continue
        ident = (s.played_at, s.track_key)
        if ident in seen:
            report.duplicates_removed += 1
            continue
        report.fetched += 1
        seen.add(ident)
        scrobbles.append(s)
    scrobbles.sort(key=lambda s: (s.played_at, s.track_key))
    return scrobbles


def fetch_track_tags(
    config: ApiConfig,
    track_key: str,
    artist_name: str,
    track_name: str,
    source: FixtureSource | LiveSource | None = None,
) -> list[TagAssignment]:
    """Track tags, falling back to artist tags when the track carries none."""
    source = source or _default_source(config)
    if isinstance(source, LiveSource):
        raw = source.tags_for(track_key, artist_name, track_name)
    else:
        raw = source.tags_for(track_key)
    if not raw:
        raw = [
            {**t, "source": "artist"} for t in source.artist_tags_for(artist_name)
        ]
    return parse_tag_list(raw or [])


def fetch_audio_features(
    config: ApiConfig,
    tracks: list[tuple[str, str, str]],
    report: IngestReport | None = None,
    source: FixtureSource | LiveSource | None = None,
) -> dict[str, AudioFeatures | None]:
    """Features per track_key; tracks unknown to Spotify map to None."""
    if not tracks:
        raise ValueError("track list must be non-empty")
    report = report if report is not None else IngestReport()
    source = source or _default_source(config)
    results: dict[str, AudioFeatures | None] = {}
    for track_key, artist_name, track_name in tracks:
        if isinstance(source, LiveSource):
            raw = source.features_for(artist_name, track_name)
        else:
            raw = source.features_for(track_key)
        if raw is None:
            results[track_key] = None
            continue
        try:
            results[track_key] = AudioFeatures.from_dict(raw)
        except (ValueError, TypeError):
            log.warning("rejecting out-of-range features for %s", track_key)
            report.rejected_feature_tracks += 1
            results[track_key] = None
    return results


def _default_source(config: ApiConfig) -> FixtureSource | LiveSource:
    if config.mode == "offline":
        assert config.fixtures_dir is not None
        return FixtureSource(config.fixtures_dir)
    return LiveSource(config)


# ---------------------------------------------------------------------------
# Full ingest run


def ingest(
    config: ApiConfig,
    since: int = 1,
    until: int = 2**33,
    source: FixtureSource | LiveSource | None = None,
) -> IngestReport:
    """Fetch scrobbles, tags and features, persist all of it into the cache."""
    report = IngestReport()
    source = source or _default_source(config)
    cache = JsonlCache(config.cache_dir)

    scrobbles = fetch_scrobbles(config, since, until, report=report, source=source)

    tracks: dict[str, Scrobble] = {}
    for s in scrobbles:
        tracks.setdefault(s.track_key, s)
    report.tracks_seen = len(tracks)

    tags_by_track: dict[str, list[TagAssignment]] = {}
    for track_key in sorted(tracks):
        s = tracks[track_key]
        if cache.has("tags", track_key):
            cached = cache.load("tags", track_key)
            tags_by_track[track_key] = parse_tag_list(cached["tags"]) if cached else []
        else:
            tags = fetch_track_tags(config, track_key, s.artist_name, s.track_name, source=source)
            tags_by_track[track_key] = tags
            cache.store(
                "tags",
                track_key,
                {
                    "track_key": track_key,
                    "tags": [{"tag": t.tag, "count": t.count, "source": t.source} for t in tags],
                },
            )

    missing = [
        (key, tracks[key].artist_name, tracks[key].track_name)
        for key in sorted(tracks)
        if not cache.has("features", key)
    ]
    features_by_track: dict[str, AudioFeatures | None] = {}
    if missing:
        features_by_track.update(
            fetch_audio_features(config, missing, report=report, source=source)
        )
    for key in sorted(tracks):
        if cache.has("features", key):
            cached = cache.load("features", key)
            features_by_track[key] = (
                AudioFeatures.from_dict(cached["features"]) if cached and cached.get("features") else None
            )
        elif features_by_track.get(key) is not None:
            cache.store(
                "features",
                key,
                {"track_key": key, "features": features_by_track[key].as_dict()},
            )
    report.tracks_with_features = sum(1 for f in features_by_track.values() if f is not None)

    for s in scrobbles:
        ident = f"{s.played_at}:{s.track_key}"
        cache.store("scrobbles", ident, scrobble_record(s))
        if features_by_track.get(s.track_key) is None:
            report.filtered_no_features += 1
        else:
            report.kept += 1
    return report


def load_cache(cache_dir: Path) -> tuple[
    list[Scrobble], dict[str, list[TagAssignment]], dict[str, AudioFeatures]
]:
    """Read an ingested cache back into domain objects (featureless tracks omitted)."""
    cache = JsonlCache(cache_dir)
    scrobbles = sorted(
        (parse_scrobble_record(r) for r in cache.load_all("scrobbles")),
        key=lambda s: (s.played_at, s.track_key),
    )
    tags = {
        r["track_key"]: parse_tag_list(r["tags"]) for r in cache.load_all("tags")
    }
    features = {
        r["track_key"]: AudioFeatures.from_dict(r["features"])
        for r in cache.load_all("features")
        if r.get("features")
    }
    return scrobbles, tags, features
