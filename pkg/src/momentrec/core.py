"""Shared domain types and hour-interval arithmetic."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

# Audio feature ranges. key/mode are categorical on raw tracks but become
# real-valued means after interval aggregation.
FEATURE_RANGES: dict[str, tuple[float, float]] = {
    "acousticness": (0.0, 1.0),
    "danceability": (0.0, 1.0),
    "duration_ms": (0.0, float("inf")),
    "energy": (0.0, 1.0),
    "instrumentalness": (0.0, 1.0),
    "key": (0.0, 11.0),
    "liveness": (0.0, 1.0),
    "loudness": (-60.0, 0.0),
    "mode": (0.0, 1.0),
    "speechiness": (0.0, 1.0),
    "tempo": (0.0, float("inf")),
    "valence": (0.0, 1.0),
}

FEATURE_NAMES: list[str] = list(FEATURE_RANGES)

# Fields that must be strictly positive (lower bound excluded).
_STRICT_POSITIVE = {"tempo", "duration_ms"}

_MOMENT_KEY_RE = re.compile(r"^(\d{4})-(\d{2})-(\d{2})T(\d{2})$")


def track_key_of(artist_name: str, track_name: str) -> str:
    """Canonical lowercase "artist — title" identity used when no MBID exists."""
    return f"{artist_name.strip().lower()} — {track_name.strip().lower()}"


@dataclass(frozen=True)
class Scrobble:
    """One playback event: when the user played which track."""

    played_at: int
    track_name: str
    artist_name: str
    mbid: str | None = None

    def __post_init__(self) -> None:
        if self.played_at <= 0:
            raise ValueError(f"played_at must be positive, got {self.played_at}")
        if not self.track_name or not self.artist_name:
            raise ValueError("track_name and artist_name must be non-empty")

    @property
    def track_key(self) -> str:
        return track_key_of(self.artist_name, self.track_name)


@dataclass(frozen=True)
class TagAssignment:
    """A (tag, strength) label on a track, or on its artist as fallback."""

    tag: str
    count: int
    source: str = "track"  # "track" | "artist"

    def __post_init__(self) -> None:
        if not self.tag:
            raise ValueError("tag must be non-empty")
        if not 0 <= self.count <= 100:
            raise ValueError(f"tag count must be in [0, 100], got {self.count}")
        if self.source not in ("track", "artist"):
            raise ValueError(f"unknown tag source {self.source!r}")

    @staticmethod
    def normalized(tag: str, count: int, source: str = "track") -> "TagAssignment":
        return TagAssignment(tag=tag.strip().lower(), count=count, source=source)


@dataclass(frozen=True)
class AudioFeatures:
    """The 12 per-track audio descriptors; every field is range-checked."""

    acousticness: float
    danceability: float
    duration_ms: int
    energy: float
    instrumentalness: float
    key: int
    liveness: float
    loudness: float
    mode: int
    speechiness: float
    tempo: float
    valence: float

    def __post_init__(self) -> None:
        for name, (lo, hi) in FEATURE_RANGES.items():
            value = getattr(self, name)
            if name in _STRICT_POSITIVE:
                ok = lo < value <= hi if hi != float("inf") else value > lo
            else:
                ok = lo <= value <= hi
            if not ok:
                raise ValueError(f"{name}={value} outside valid range [{lo}, {hi}]")
        if int(self.key) != self.key or int(self.mode) != self.mode:
            raise ValueError("key and mode must be integers on raw tracks")

    def as_dict(self) -> dict[str, float]:
        return {name: float(getattr(self, name)) for name in FEATURE_NAMES}

    @staticmethod
    def from_dict(values: dict[str, float]) -> "AudioFeatures":
        missing = [n for n in FEATURE_NAMES if n not in values]
        if missing:
            raise ValueError(f"missing audio feature fields: {missing}")
        kwargs = {n: values[n] for n in FEATURE_NAMES}
        kwargs["duration_ms"] = int(kwargs["duration_ms"])
        kwargs["key"] = int(kwargs["key"])
        kwargs["mode"] = int(kwargs["mode"])
        return AudioFeatures(**kwargs)


@dataclass(frozen=True, order=True)
class MomentKey:
    """One Year-Month-Day-Hour interval."""

    year: int
    month: int
    day: int
    hour: int

    def __post_init__(self) -> None:
        datetime(self.year, self.month, self.day)  # raises on bad date
        if not 0 <= self.hour <= 23:
            raise ValueError(f"hour must be in [0, 23], got {self.hour}")

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}-{self.day:02d}T{self.hour:02d}"

    @staticmethod
    def parse(text: str) -> "MomentKey":
        m = _MOMENT_KEY_RE.match(text)
        if m is None:
            raise ValueError(f"not a moment key: {text!r}")
        year, month, day, hour = (int(g) for g in m.groups())
        return MomentKey(year, month, day, hour)


def moment_key_of(instant: int, tz_offset_minutes: int = 0) -> MomentKey:
    """Map a UTC instant (epoch seconds) to its hour interval, shifted by offset."""
    if abs(tz_offset_minutes) > 840:
        raise ValueError(f"tz offset out of range: {tz_offset_minutes}")
    shifted = datetime.fromtimestamp(instant, tz=timezone.utc) + timedelta(
        minutes=tz_offset_minutes
    )
    return MomentKey(shifted.year, shifted.month, shifted.day, shifted.hour)


@dataclass(frozen=True)
class TagVocabulary:
    """Ordered top-k tag list; position in the list is the vector index."""

    tags: tuple[str, ...]
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(set(self.tags)) != len(self.tags):
            raise ValueError("vocabulary contains duplicate tags")
        object.__setattr__(self, "index", {t: i for i, t in enumerate(self.tags)})

    def __len__(self) -> int:
        return len(self.tags)

    def position(self, tag: str) -> int | None:
        return self.index.get(tag)


@dataclass(frozen=True)
class MomentSample:
    """One dataset row: normalized tag strengths plus mean audio features.

    tag_strengths sums to 100 unless the interval carried no vocabulary tag,
    in which case the row is all-zero and flagged degenerate.
    """

    key: MomentKey
    tag_strengths: tuple[float, ...]
    features: dict[str, float]
    degenerate: bool = False

    def __post_init__(self) -> None:
        total = sum(self.tag_strengths)
        if self.degenerate:
            if total != 0.0:
                raise ValueError("degenerate sample must have a zero tag row")
        elif abs(total - 100.0) > 1e-6:
            raise ValueError(f"tag strengths sum to {total}, expected 100")
        if any(s < 0 for s in self.tag_strengths):
            raise ValueError("tag strengths must be non-negative")
