"""Build the musical-moments dataset from an ingested cache.

Scrobbles are grouped into Year-Month-Day-Hour intervals; per interval the
top-k tag strengths are summed and normalized to 100, and audio features are
averaged. The dataset persists as two timestamp-joined CSV files.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    FEATURE_NAMES,
    AudioFeatures,
    MomentKey,
    MomentSample,
    Scrobble,
    TagAssignment,
    TagVocabulary,
    moment_key_of,
)
from .ingestion import load_cache

TAGS_CSV = "moments_tags.csv"
FEATURES_CSV = "moments_features.csv"


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class MomentsDataset:
    vocabulary: TagVocabulary
    samples: tuple[MomentSample, ...]
    target_feature: str = "danceability"

    def __post_init__(self) -> None:
        keys = [s.key for s in self.samples]
        if len(set(keys)) != len(keys):
            raise DatasetError("duplicate moment keys in dataset")
        if keys != sorted(keys):
            raise DatasetError("samples must be ascending by moment key")
        if self.target_feature not in FEATURE_NAMES:
            raise DatasetError(f"unknown target feature {self.target_feature!r}")

    def __len__(self) -> int:
        return len(self.samples)

    def trainable_samples(self) -> list[MomentSample]:
        """Samples eligible for model training (degenerate rows excluded)."""
        return [s for s in self.samples if not s.degenerate]


def select_top_tags(
    scrobbles: list[Scrobble],
    tags_by_track: dict[str, list[TagAssignment]],
    k: int,
) -> TagVocabulary:
    """Top-k tags by playback-weighted count sum; ties break lexicographically."""
    if k < 1:
        raise ValueError("k must be >= 1")
    scores: dict[str, float] = defaultdict(float)
    for s in scrobbles:
        for ta in tags_by_track.get(s.track_key, []):
            scores[ta.tag] += ta.count
    if not scores:
        raise DatasetError("empty tag universe: no tagged tracks in cache")
    ranked = sorted(scores.items(), key=lambda item: (-item[1], item[0]))
    return TagVocabulary(tags=tuple(tag for tag, _ in ranked[:k]))


def aggregate_tag_strengths(
    tagged_scrobbles: list[tuple[Scrobble, list[TagAssignment]]],
    vocab: TagVocabulary,
) -> np.ndarray:
    """Raw per-tag strength for one interval: sum of counts over appearances."""
    raw = np.zeros(len(vocab))
    for _, tags in tagged_scrobbles:
        for ta in tags:
            pos = vocab.position(ta.tag)
            if pos is not None:
                raw[pos] += ta.count
    return raw


def normalize_moment(raw: np.ndarray) -> tuple[np.ndarray, bool]:
    """Scale to sum 100; an all-zero interval stays zero and is flagged degenerate."""
    if np.any(raw < 0):
        raise ValueError("raw strengths must be non-negative")
    total = raw.sum()
    if total == 0:
        return np.zeros_like(raw), True
    # divide before scaling: (100.0 / total) overflows for subnormal totals
    return raw / total * 100.0, False


def aggregate_features(feature_rows: list[AudioFeatures]) -> dict[str, float]:
    """Arithmetic mean per feature field over one interval."""
    if not feature_rows:
        raise ValueError("cannot aggregate an empty interval")
    return {
        name: float(np.mean([getattr(f, name) for f in feature_rows]))
        for name in FEATURE_NAMES
    }


def build_dataset(
    cache_dir: Path,
    k: int = 1000,
    tz_offset_minutes: int = 0,
    target_feature: str = "danceability",
) -> MomentsDataset:
    """Group the ingested cache into normalized moment samples, ascending by key."""
    scrobbles, tags_by_track, features_by_track = load_cache(cache_dir)
    if not scrobbles:
        raise DatasetError(f"cache at {cache_dir} holds no scrobbles")

    vocab = select_top_tags(scrobbles, tags_by_track, k)

    by_key: dict[MomentKey, list[Scrobble]] = defaultdict(list)
    for s in scrobbles:
        by_key[moment_key_of(s.played_at, tz_offset_minutes)].append(s)

    samples: list[MomentSample] = []
    for key in sorted(by_key):
        interval = by_key[key]
        featured = [features_by_track[s.track_key] for s in interval if s.track_key in features_by_track]
        if not featured:
            continue  # featureless intervals carry no training signal
        raw = aggregate_tag_strengths(
            [(s, tags_by_track.get(s.track_key, [])) for s in interval], vocab
        )
        normalized, degenerate = normalize_moment(raw)
        samples.append(
            MomentSample(
                key=key,
                tag_strengths=tuple(float(v) for v in normalized),
                features=aggregate_features(featured),
                degenerate=degenerate,
            )
        )
    return MomentsDataset(
        vocabulary=vocab, samples=tuple(samples), target_feature=target_feature
    )


def write_dataset(dataset: MomentsDataset, out_dir: Path) -> tuple[Path, Path]:
    """Write the two timestamp-joined CSV files. Floats use repr (round-trip exact)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tags_path = out_dir / TAGS_CSV
    features_path = out_dir / FEATURES_CSV

    with tags_path.open("w", newline="") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_NONNUMERIC)
        writer.writerow(["timestamp", *dataset.vocabulary.tags])
        for s in dataset.samples:
            writer.writerow([str(s.key), *[repr(v) for v in s.tag_strengths]])

    with features_path.open("w", newline="") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_NONNUMERIC)
        writer.writerow(["timestamp", *FEATURE_NAMES])
        for s in dataset.samples:
            writer.writerow([str(s.key), *[repr(s.features[n]) for n in FEATURE_NAMES]])
    return tags_path, features_path


def read_dataset(in_dir: Path, target_feature: str = "danceability") -> MomentsDataset:
    """Join the two CSV files on timestamp; mismatched keys are an error."""
    in_dir = Path(in_dir)
    tags_path = in_dir / TAGS_CSV
    features_path = in_dir / FEATURES_CSV

    with tags_path.open(newline="") as fh:
        reader = csv.reader(fh)
        tag_header = next(reader)
        tag_rows = {row[0]: [float(v) for v in row[1:]] for row in reader}
    with features_path.open(newline="") as fh:
        reader = csv.reader(fh)
        feature_header = next(reader)
        feature_rows = {row[0]: [float(v) for v in row[1:]] for row in reader}

    only_tags = sorted(set(tag_rows) - set(feature_rows))
    only_features = sorted(set(feature_rows) - set(tag_rows))
    if only_tags or only_features:
        raise DatasetError(
            "timestamp join mismatch: "
            f"tags-only={only_tags} features-only={only_features}"
        )

    vocab = TagVocabulary(tags=tuple(tag_header[1:]))
    feature_names = feature_header[1:]
    samples = []
    for ts in sorted(tag_rows):
        strengths = tag_rows[ts]
        samples.append(
            MomentSample(
                key=MomentKey.parse(ts),
                tag_strengths=tuple(strengths),
                features=dict(zip(feature_names, feature_rows[ts])),
                degenerate=sum(strengths) == 0.0,
            )
        )
    return MomentsDataset(
        vocabulary=vocab, samples=tuple(samples), target_feature=target_feature
    )


def split_dataset(
    dataset: MomentsDataset,
    train_fraction: float = 0.67,
    seed: int = 0,
    include_degenerate: bool = False,
) -> tuple[list[MomentSample], list[MomentSample]]:
    """Seeded uniform random partition into (train, test)."""
    if not 0 < train_fraction <= 1:
        raise ValueError("train_fraction must be in (0, 1]")
    samples = dataset.samples if include_degenerate else dataset.trainable_samples()
    order = np.random.default_rng(seed).permutation(len(samples))
    n_train = int(round(len(samples) * train_fraction))
    train_idx = sorted(order[:n_train])
    test_idx = sorted(order[n_train:])
    return [samples[i] for i in train_idx], [samples[i] for i in test_idx]


def to_matrices(
    samples: list[MomentSample], target_feature: str
) -> tuple[np.ndarray, np.ndarray]:
    """Model inputs: tag-strength matrix and target vector, timestamps stripped."""
    X = np.array([s.tag_strengths for s in samples], dtype=float)
    y = np.array([s.features[target_feature] for s in samples], dtype=float)
    return X, y
