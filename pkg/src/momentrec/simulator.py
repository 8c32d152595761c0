"""Synthetic single-user listening histories with planted temporal structure.

Each regime pins a set of hours to a tag pool and a target-feature
distribution, so the conditional mean per hour is known by construction and
downstream predictions can be scored against ground truth.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import FEATURE_NAMES
from .ingestion import FEATURES_FILE, SCROBBLES_FILE, TAGS_FILE


@dataclass(frozen=True)
class Regime:
    name: str
    hours: tuple[int, ...]
    tag_pool: dict[str, tuple[int, int]]  # tag -> (min count, max count)
    danceability_mean: float
    danceability_std: float

    def __post_init__(self) -> None:
        if self.danceability_std < 0:
            raise ValueError("std must be >= 0")
        if any(not 0 <= h <= 23 for h in self.hours):
            raise ValueError("regime hours must be in [0, 23]")


@dataclass(frozen=True)
class ListenerSpec:
    regimes: tuple[Regime, ...]
    tracks_per_regime: int = 40
    plays_total: int = 20000
    start_year: int = 2007
    n_years: int = 15
    seed: int = 7

    def __post_init__(self) -> None:
        seen: set[int] = set()
        for regime in self.regimes:
            overlap = seen & set(regime.hours)
            if overlap:
                raise ValueError(f"regime hours overlap: {sorted(overlap)}")
            seen |= set(regime.hours)


def default_spec(seed: int = 7, plays_total: int = 60000) -> ListenerSpec:
    """Night/day regimes with known conditional means, plus a deliberately
    nonlinear mixed regime whose target sits outside any linear blend of the
    other two tag pools."""
    return ListenerSpec(
        regimes=(
            Regime(
                name="night",
                hours=(22, 23, 0, 1, 2, 3, 4, 5, 6),
                tag_pool={"relaxing": (60, 100), "ambient": (40, 90), "chillout": (10, 60)},
                danceability_mean=0.35,
                danceability_std=0.05,
            ),
            Regime(
                name="day",
                hours=(8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20),
                tag_pool={"electronic": (60, 100), "dance": (40, 90), "house": (10, 60)},
                danceability_mean=0.75,
                danceability_std=0.05,
            ),
            Regime(
                name="transition",
                hours=(7, 21),
                # pure subset of the night/day pools: the low target here is
                # unreachable by any linear blend of the tag strengths
                tag_pool={"relaxing": (40, 80), "dance": (40, 80)},
                danceability_mean=0.2,
                danceability_std=0.05,
            ),
        ),
        plays_total=plays_total,
        seed=seed,
    )


def spec_from_json(path: Path) -> ListenerSpec:
    data = json.loads(Path(path).read_text())
    regimes = tuple(
        Regime(
            name=r["name"],
            hours=tuple(r["hours"]),
            tag_pool={t: tuple(bounds) for t, bounds in r["tag_pool"].items()},
            danceability_mean=r["danceability_mean"],
            danceability_std=r["danceability_std"],
        )
        for r in data["regimes"]
    )
    return ListenerSpec(
        regimes=regimes,
        tracks_per_regime=data.get("tracks_per_regime", 40),
        plays_total=data.get("plays_total", 20000),
        start_year=data.get("start_year", 2007),
        n_years=data.get("n_years", 15),
        seed=data.get("seed", 7),
    )


@dataclass
class _SyntheticTrack:
    track_key: str
    artist: str
    title: str
    tags: list[dict]
    features: dict[str, float]


def _synth_features(rng: np.random.Generator, danceability: float) -> dict[str, float]:
    features = {
        "acousticness": round(float(rng.uniform(0, 1)), 4),
        "danceability": danceability,
        "duration_ms": int(rng.integers(120_000, 360_000)),
        "energy": round(float(rng.uniform(0, 1)), 4),
        "instrumentalness": round(float(rng.uniform(0, 1)), 4),
        "key": int(rng.integers(0, 12)),
        "liveness": round(float(rng.uniform(0, 1)), 4),
        "loudness": round(float(rng.uniform(-40, -2)), 4),
        "mode": int(rng.integers(0, 2)),
        "speechiness": round(float(rng.uniform(0, 0.5)), 4),
        "tempo": round(float(rng.uniform(60, 180)), 4),
        "valence": round(float(rng.uniform(0, 1)), 4),
    }
    assert set(features) == set(FEATURE_NAMES)
    return features


def generate_history(spec: ListenerSpec, out_dir: Path) -> dict[str, int]:
    """Write ingestion-compatible fixture files; byte-identical per seed."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)

    tracks_by_regime: dict[str, list[_SyntheticTrack]] = {}
    for regime in spec.regimes:
        tracks = []
        for i in range(spec.tracks_per_regime):
            artist = f"{regime.name} artist {i % max(1, spec.tracks_per_regime // 4)}"
            title = f"{regime.name} track {i:03d}"
            danceability = float(
                np.clip(rng.normal(regime.danceability_mean, regime.danceability_std), 0, 1)
            )
            tags = [
                {"tag": tag, "count": int(rng.integers(lo, hi + 1)), "source": "track"}
                for tag, (lo, hi) in sorted(regime.tag_pool.items())
            ]
            tracks.append(
                _SyntheticTrack(
                    track_key=f"{artist} — {title}",
                    artist=artist,
                    title=title,
                    tags=tags,
                    features=_synth_features(rng, round(danceability, 4)),
                )
            )
        tracks_by_regime[regime.name] = tracks

    # spread plays over the span, one regime pick per play weighted by hour coverage
    span_start = int(np.datetime64(f"{spec.start_year}-01-01T00:00:00") .astype("datetime64[s]").astype(int))
    records: list[dict] = []
    if spec.plays_total > 0:
        hour_weights = np.array([len(r.hours) for r in spec.regimes], dtype=float)
        hour_weights /= hour_weights.sum()
        regime_picks = rng.choice(len(spec.regimes), size=spec.plays_total, p=hour_weights)
        days = rng.integers(0, spec.n_years * 365, size=spec.plays_total)
        seconds = rng.integers(0, 3600, size=spec.plays_total)
        for n in range(spec.plays_total):
            regime = spec.regimes[int(regime_picks[n])]
            hour = int(regime.hours[int(rng.integers(0, len(regime.hours)))])
            ts = span_start + int(days[n]) * 86400 + hour * 3600 + int(seconds[n])
            track = tracks_by_regime[regime.name][
                int(rng.integers(0, len(tracks_by_regime[regime.name])))
            ]
            records.append({"ts": ts, "artist": track.artist, "track": track.title})
    records.sort(key=lambda r: (r["ts"], r["artist"], r["track"]))

    with (out_dir / SCROBBLES_FILE).open("w") as fh:
        for record in records:
            fh.write(json.dumps(record) + "\n")

    played = {f"{r['artist']} — {r['track']}" for r in records}
    all_tracks = [
        t
        for regime in spec.regimes
        for t in tracks_by_regime[regime.name]
        if t.track_key in played
    ]
    with (out_dir / TAGS_FILE).open("w") as fh:
        for t in sorted(all_tracks, key=lambda t: t.track_key):
            fh.write(json.dumps({"track_key": t.track_key, "tags": t.tags}) + "\n")
    with (out_dir / FEATURES_FILE).open("w") as fh:
        for t in sorted(all_tracks, key=lambda t: t.track_key):
            fh.write(json.dumps({"track_key": t.track_key, "features": t.features}) + "\n")

    return {"plays": len(records), "tracks": len(all_tracks)}


def conditional_mean(spec: ListenerSpec, hour: int) -> float | None:
    """Planted ground-truth mean danceability for an hour, if any regime covers it."""
    for regime in spec.regimes:
        if hour in regime.hours:
            return regime.danceability_mean
    return None
