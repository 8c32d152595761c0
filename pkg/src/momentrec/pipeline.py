"""The four-phase inference pipeline.

hour -> average tag profile -> predicted target feature -> tracks ranked by
feature distance -> exploration re-ranking, with an explanation payload for
every phase.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import AudioFeatures
from .dataset import MomentsDataset
from .ingestion import load_cache
from .models import ModelError, TrainedRegressor


@dataclass(frozen=True)
class LibraryTrack:
    """One candidate track from the user's collection."""

    track_key: str
    track_name: str
    artist_name: str
    features: AudioFeatures
    play_count: int = 0


@dataclass(frozen=True)
class HourProfile:
    hour: int
    tag_strengths: tuple[float, ...]
    support: int
    fallback: bool = False


@dataclass
class Recommendation:
    track_key: str
    track_name: str
    artist_name: str
    feature_value: float
    distance: float
    rank: int
    novelty: float = 0.0
    score: float = 0.0


@dataclass
class PipelineResult:
    hour: int
    target_feature: str
    top_tags: list[tuple[str, float]]
    predicted_features: dict[str, float]
    recommendations: list[Recommendation]
    explanations: dict[str, str] = field(default_factory=dict)
    epsilon: float = 0.0
    fallback: bool = False


def load_library(cache_dir: Path) -> list[LibraryTrack]:
    """The user's ingested collection: one candidate per featured track."""
    scrobbles, _, features = load_cache(cache_dir)
    plays: dict[str, int] = {}
    names: dict[str, tuple[str, str]] = {}
    for s in scrobbles:
        plays[s.track_key] = plays.get(s.track_key, 0) + 1
        names.setdefault(s.track_key, (s.track_name, s.artist_name))
    return [
        LibraryTrack(
            track_key=key,
            track_name=names[key][0],
            artist_name=names[key][1],
            features=features[key],
            play_count=plays.get(key, 0),
        )
        for key in sorted(features)
        if key in names
    ]


def phase1_tag_profile(dataset: MomentsDataset, hour: int) -> HourProfile:
    """Mean normalized tag row over all non-degenerate moments at this hour.

    An hour with no history falls back to the global mean profile, flagged.
    """
    if not 0 <= hour <= 23:
        raise ValueError(f"hour must be in [0, 23], got {hour}")
    samples = dataset.trainable_samples()
    if not samples:
        raise ValueError("dataset holds no trainable samples")
    at_hour = [s for s in samples if s.key.hour == hour]
    fallback = not at_hour
    chosen = at_hour or samples
    mean = np.mean([s.tag_strengths for s in chosen], axis=0)
    return HourProfile(
        hour=hour,
        tag_strengths=tuple(float(v) for v in mean),
        support=len(at_hour),
        fallback=fallback,
    )


def phase2_predict(model: TrainedRegressor, profile: HourProfile, vocab_size: int) -> float:
    """Feed the hour profile into the regressor; output clamped to feature range."""
    if len(profile.tag_strengths) != vocab_size:
        raise ModelError(
            f"profile has {len(profile.tag_strengths)} tags, vocabulary has {vocab_size}"
        )
    x = np.array([profile.tag_strengths], dtype=float)
    return float(model.predict(x)[0])


def phase3_rank(
    candidates: list[LibraryTrack],
    predicted: float,
    target_feature: str,
    k: int = 20,
) -> list[Recommendation]:
    """Top-k candidates by ascending |feature - predicted|; ties by track_key."""
    if not candidates:
        raise ValueError("candidate library is empty")
    scored = sorted(
        candidates,
        key=lambda t: (abs(getattr(t.features, target_feature) - predicted), t.track_key),
    )
    recs = []
    for rank, track in enumerate(scored[:k], start=1):
        value = float(getattr(track.features, target_feature))
        recs.append(
            Recommendation(
                track_key=track.track_key,
                track_name=track.track_name,
                artist_name=track.artist_name,
                feature_value=value,
                distance=abs(value - predicted),
                rank=rank,
            )
        )
    return recs


def phase4_rerank(
    recs: list[Recommendation],
    epsilon: float,
    play_counts: dict[str, int],
) -> list[Recommendation]:
    """Blend feature proximity with novelty; epsilon steers the trade-off.

    score = (1-eps) * proximity + eps * novelty, where proximity normalizes
    distance against the worst candidate and novelty is 1 - playcount/max.
    """
    if not 0 <= epsilon <= 1:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    if not recs:
        return []
    max_distance = max(r.distance for r in recs)
    counts = [play_counts.get(r.track_key, 0) for r in recs]
    max_plays = max(counts) if counts else 0
    rescored = []
    for r, plays in zip(recs, counts):
        proximity = 1.0 - (r.distance / max_distance if max_distance > 0 else 0.0)
        novelty = 1.0 - (plays / max_plays if max_plays > 0 else 0.0)
        rescored.append(
            Recommendation(
                track_key=r.track_key,
                track_name=r.track_name,
                artist_name=r.artist_name,
                feature_value=r.feature_value,
                distance=r.distance,
                rank=r.rank,
                novelty=novelty,
                score=(1 - epsilon) * proximity + epsilon * novelty,
            )
        )
    if epsilon == 0.0:
        ordered = rescored  # pure exploitation keeps the phase-3 order exactly
    elif epsilon == 1.0:
        ordered = sorted(rescored, key=lambda r: (-r.novelty, r.rank))
    else:
        ordered = sorted(rescored, key=lambda r: (-r.score, r.rank))
    for new_rank, r in enumerate(ordered, start=1):
        r.rank = new_rank
    return ordered


def run_pipeline(
    dataset: MomentsDataset,
    model: TrainedRegressor,
    library: list[LibraryTrack],
    hour: int,
    k: int = 20,
    epsilon: float = 0.0,
) -> PipelineResult:
    """Compose phases 1-4 and attach per-phase explanation text."""
    target = model.target_feature
    profile = phase1_tag_profile(dataset, hour)
    predicted = phase2_predict(model, profile, len(dataset.vocabulary))
    ranked = phase3_rank(library, predicted, target, k)
    play_counts = {t.track_key: t.play_count for t in library}
    reranked = phase4_rerank(ranked, epsilon, play_counts)

    pairs = sorted(
        zip(dataset.vocabulary.tags, profile.tag_strengths),
        key=lambda p: (-p[1], p[0]),
    )
    top_tags = [(tag, float(strength)) for tag, strength in pairs[:10]]

    explanations = {
        "phase1": _phase1_text(profile, top_tags),
        "phase2": (
            f"{target.capitalize()}: {predicted:.5f} "
            f"(predicted by the {model.kind} model from the hour profile)"
        ),
        "phase3": (
            f"Top {len(ranked)} of {len(library)} library tracks by "
            f"|{target} - {predicted:.5f}|"
        ),
        "phase4": (
            f"epsilon={epsilon:g}: score = {1 - epsilon:g}*proximity + "
            f"{epsilon:g}*novelty over the phase-3 candidates"
        ),
    }
    return PipelineResult(
        hour=hour,
        target_feature=target,
        top_tags=top_tags,
        predicted_features={target: predicted},
        recommendations=reranked,
        explanations=explanations,
        epsilon=epsilon,
        fallback=profile.fallback,
    )


def _phase1_text(profile: HourProfile, top_tags: list[tuple[str, float]]) -> str:
    line = f"Tag strength at {profile.hour:d}:00-{(profile.hour + 1) % 24:d}:00"
    names = " | ".join(tag for tag, _ in top_tags[:5])
    values = " | ".join(f"{v:.6f}" for _, v in top_tags[:5])
    text = f"{line} | {names} | {values}"
    if profile.fallback:
        text += " (no history at this hour; global mean profile used)"
    return text


def format_report(result: PipelineResult) -> str:
    """Terminal phase report in the style of the live-session listings."""
    target = result.target_feature
    predicted = result.predicted_features[target]
    lines = [
        "PHASE 1: Compute Last.fm Tags",
        f"  · Tag strength at {result.hour}:00-{(result.hour + 1) % 24}:00",
        "    | " + " | ".join(tag for tag, _ in result.top_tags[:5]) + " |",
        "    | " + " | ".join(f"{v:.6f}" for _, v in result.top_tags[:5]) + " |",
        "",
        "PHASE 2: Predict Spotify Features",
        f"  · {target.capitalize()}: {predicted:.5f}",
        "",
        "PHASE 3: Ranking - Closest Tracks",
    ]
    for r in result.recommendations:
        lines.append(f"  {r.rank}. {r.artist_name} - {r.track_name}")
        lines.append(f"     · {target}: {r.feature_value:.3f}")
        lines.append(f"     · distance: {r.distance:.7f}")
    lines += [
        "",
        "PHASE 4: Exploration Re-ranking",
        f"  · {result.explanations['phase4']}",
    ]
    return "\n".join(lines)


def result_to_dict(result: PipelineResult) -> dict:
    """JSON-ready form of a PipelineResult; field names are the wire contract."""
    return {
        "hour": result.hour,
        "epsilon": result.epsilon,
        "fallback": result.fallback,
        "target_feature": result.target_feature,
        "top_tags": [{"tag": t, "strength": s} for t, s in result.top_tags],
        "predicted_features": result.predicted_features,
        "recommendations": [
            {
                "track_key": r.track_key,
                "track_name": r.track_name,
                "artist_name": r.artist_name,
                "feature_value": r.feature_value,
                "distance": r.distance,
                "rank": r.rank,
                "novelty": r.novelty,
                "score": r.score,
            }
            for r in result.recommendations
        ],
        "explanations": result.explanations,
    }
