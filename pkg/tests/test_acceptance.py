"""Acceptance suite: one test per release criterion, each printing a
pass/fail line. Run with `pytest tests/test_acceptance.py -s` to see them.
"""

import json
import time
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from momentrec.core import MomentKey, MomentSample, TagVocabulary
from momentrec.dataset import (
    MomentsDataset,
    build_dataset,
    normalize_moment,
    read_dataset,
    split_dataset,
    to_matrices,
    write_dataset,
)
from momentrec.models import (
    evaluate_rmse,
    load_model,
    save_model,
    train_baseline,
    train_gbt,
    train_ridge,
)
from momentrec.pipeline import (
    load_library,
    phase1_tag_profile,
    phase2_predict,
    phase3_rank,
    phase4_rerank,
)
from momentrec.service import ServiceState, create_app
from momentrec.cli import cli

GOLDEN_REPORT = Path(__file__).parent / "fixtures" / "golden_report.txt"


@pytest.fixture(autouse=True)
def announce(request, capsys):
    yield
    with capsys.disabled():
        print(f"[PASS] {request.node.name}")


@pytest.fixture(scope="module")
def sim_models(sim_dataset):
    train, test = split_dataset(sim_dataset, 0.67, seed=0)
    X_train, y_train = to_matrices(train, "danceability")
    X_test, y_test = to_matrices(test, "danceability")
    start = time.perf_counter()
    models = {
        "baseline": train_baseline(y_train, seed=0),
        "ridge": train_ridge(X_train, y_train),
        "gbt": train_gbt(X_train, y_train, rounds=200, depth=4, learning_rate=0.1),
    }
    elapsed = time.perf_counter() - start
    rmse = {k: evaluate_rmse(m, X_test, y_test) for k, m in models.items()}
    return models, rmse, elapsed


def test_worked_example_fidelity():
    # interval where "rock" appears twice {100, 80} and a second tag carries 20
    raw = np.array([100.0 + 80.0, 20.0])
    assert raw[0] == pytest.approx(180.0, abs=1e-9)
    normalized, degenerate = normalize_moment(raw)
    assert not degenerate
    assert normalized[0] == pytest.approx(90.0, abs=1e-9)
    assert normalized[1] == pytest.approx(10.0, abs=1e-9)


def test_normalization_suite():
    rng = np.random.default_rng(42)
    for _ in range(1000):
        size = int(rng.integers(1, 50))
        raw = rng.uniform(0, 200, size=size) * (rng.uniform(size=size) > 0.3)
        out, degenerate = normalize_moment(raw)
        if degenerate:
            assert np.all(out == 0)
            continue
        assert abs(out.sum() - 100.0) < 1e-6
        c = float(rng.uniform(1e-9, 1e6))
        scaled, _ = normalize_moment(c * raw)
        np.testing.assert_allclose(scaled, out, rtol=1e-9, atol=1e-9)


def test_baseline_rmse_law():
    start = time.perf_counter()
    rng = np.random.default_rng(3)
    train = rng.normal(0.599, 0.13, size=10_000)
    test = rng.normal(0.599, 0.13, size=10_000)
    model = train_baseline(train, seed=4)
    rmse = evaluate_rmse(model, np.zeros((len(test), 1)), test)
    elapsed = time.perf_counter() - start
    assert rmse == pytest.approx(np.sqrt(2) * 0.13, rel=0.05)
    assert elapsed < 5.0


def test_model_ordering_table2_analogue(sim_dataset, sim_models):
    assert len(sim_dataset) >= 5000
    _, rmse, elapsed = sim_models
    assert rmse["gbt"] <= rmse["ridge"] < rmse["baseline"]
    assert rmse["gbt"] <= 0.6 * rmse["baseline"]
    assert elapsed < 300.0


def test_oracle_recovery_planted_conditional_means(sim_dataset, sim_models):
    models, _, _ = sim_models
    gbt = models["gbt"]
    vocab_size = len(sim_dataset.vocabulary)
    night = phase2_predict(gbt, phase1_tag_profile(sim_dataset, 23), vocab_size)
    day = phase2_predict(gbt, phase1_tag_profile(sim_dataset, 13), vocab_size)
    assert night == pytest.approx(0.35, abs=0.05)
    assert day == pytest.approx(0.75, abs=0.05)


def test_ridge_analytic_and_gbt_monotone():
    rng = np.random.default_rng(5)
    X = rng.uniform(0, 100, size=(300, 12))
    y = 2 * X[:, 0] + 1
    model = train_ridge(X, y, lam=1e-9, target_feature="tempo")
    assert model.parameters["weights"][0] == pytest.approx(2.0, abs=1e-6)
    assert model.parameters["intercept"] == pytest.approx(1.0, abs=1e-6)

    for _ in range(20):
        n = int(rng.integers(40, 150))
        p = int(rng.integers(2, 12))
        X = rng.uniform(0, 100, size=(n, p))
        y = rng.uniform(0, 1, size=n)
        gbt = train_gbt(X, y, rounds=25, depth=3)
        path = gbt.parameters["rmse_path"]
        assert all(b <= a + 1e-12 for a, b in zip(path, path[1:]))


def test_ranking_correctness():
    from tests.test_pipeline import make_track

    rng = np.random.default_rng(6)
    for _ in range(200):
        n = int(rng.integers(1, 25))
        tracks = [
            make_track(f"a{i} — t{i}", round(float(rng.uniform(0, 1)), 4))
            for i in range(n)
        ]
        predicted = float(rng.uniform(0, 1))
        recs = phase3_rank(tracks, predicted, "danceability", k=n)
        oracle = sorted(
            tracks, key=lambda t: (abs(t.features.danceability - predicted), t.track_key)
        )
        assert [r.track_key for r in recs] == [t.track_key for t in oracle]
        for r in recs:
            assert r.distance == abs(r.feature_value - predicted)
    # the live-session arithmetic at printed precision
    assert f"{abs(0.5833215 - 0.583):.7f}" == "0.0003215"


def test_phase4_contracts():
    from tests.test_pipeline import make_track

    rng = np.random.default_rng(7)
    for _ in range(500):
        n = int(rng.integers(1, 15))
        tracks = [
            make_track(f"t{i} — t{i}", round(float(rng.uniform(0, 1)), 4))
            for i in range(n)
        ]
        recs = phase3_rank(tracks, float(rng.uniform(0, 1)), "danceability", k=n)
        plays = {t.track_key: int(rng.integers(0, 30)) for t in tracks}

        identity = phase4_rerank(recs, 0.0, plays)
        assert [r.track_key for r in identity] == [r.track_key for r in recs]

        explore = phase4_rerank(recs, 1.0, plays)
        novelties = [r.novelty for r in explore]
        assert novelties == sorted(novelties, reverse=True)

        blended = phase4_rerank(recs, float(rng.uniform(0, 1)), plays)
        assert sorted(r.track_key for r in blended) == sorted(r.track_key for r in recs)


def test_determinism_and_round_trips(demo_cache, tmp_path):
    # byte-deterministic dataset build
    for i in range(2):
        write_dataset(build_dataset(demo_cache, k=1000), tmp_path / f"d{i}")
    for name in ("moments_tags.csv", "moments_features.csv"):
        assert (tmp_path / "d0" / name).read_bytes() == (tmp_path / "d1" / name).read_bytes()

    # dataset round-trip
    ds = build_dataset(demo_cache, k=1000)
    write_dataset(ds, tmp_path / "rt")
    assert read_dataset(tmp_path / "rt") == ds

    # model round-trips to identical predictions
    X, y = to_matrices(ds.trainable_samples(), "danceability")
    probe = np.random.default_rng(0).uniform(0, 100, size=(10, X.shape[1]))
    for model in (
        train_baseline(y, seed=1),
        train_ridge(X, y),
        train_gbt(X, y, rounds=10, depth=2),
    ):
        path = tmp_path / f"{model.kind}.json"
        save_model(model, path)
        np.testing.assert_array_equal(model.predict(probe), load_model(path).predict(probe))

    # split sizes at the published ratio
    from datetime import datetime, timedelta

    vocab = TagVocabulary(tags=("a",))
    base = datetime(2000, 1, 1)
    samples = []
    for i in range(12661):
        at = base + timedelta(hours=i)
        samples.append(
            MomentSample(
                key=MomentKey(at.year, at.month, at.day, at.hour),
                tag_strengths=(100.0,),
                features={"danceability": 0.5},
            )
        )
    samples = tuple(samples)
    big = MomentsDataset(vocabulary=vocab, samples=samples)
    train, test = split_dataset(big, 0.67, seed=0)
    assert abs(len(train) - 8482) <= 1 and abs(len(test) - 4179) <= 1


def test_end_to_end_golden(demo_fixtures, tmp_path):
    runner = CliRunner()
    cache, data, model = tmp_path / "cache", tmp_path / "data", tmp_path / "m.json"
    steps = [
        ["ingest", "--mode", "offline", "--fixtures", str(demo_fixtures), "--out", str(cache)],
        ["build-dataset", "--cache", str(cache), "--k", "1000", "--out", str(data), "--no-figures"],
        ["train", "--dataset", str(data), "--model", "ridge", "--train-fraction", "1.0",
         "--seed", "0", "--out", str(model)],
    ]
    for step in steps:
        result = runner.invoke(cli, step, catch_exceptions=False)
        assert result.exit_code == 0, result.output
    result = runner.invoke(
        cli,
        ["recommend", "--hour", "19", "--k", "20", "--model", str(model),
         "--dataset", str(data), "--library", str(cache)],
        catch_exceptions=False,
    )
    assert result.exit_code == 0
    assert result.output == GOLDEN_REPORT.read_text()
    for header in ("PHASE 1: Compute Last.fm Tags", "PHASE 2: Predict Spotify Features",
                   "PHASE 3: Ranking - Closest Tracks", "Tag strength at 19:00-20:00",
                   "distance:"):
        assert header in result.output


def test_service_conformance(demo_cache, tmp_path):
    from tests.test_service import constant_model

    state = ServiceState(
        dataset=build_dataset(demo_cache, k=1000),
        model=constant_model(),
        library=load_library(demo_cache),
        feedback_path=tmp_path / "feedback.jsonl",
    )
    client = TestClient(create_app(state))

    assert client.get("/api/recommendations", params={"hour": 24}).status_code == 400
    assert client.get("/api/recommendations", params={"hour": 5, "epsilon": 2}).status_code == 400
    assert client.get("/api/profile/-1").status_code == 400

    a = client.get("/api/recommendations", params={"hour": 19, "k": 3, "epsilon": 0})
    b = client.get("/api/recommendations", params={"hour": 19, "k": 3, "epsilon": 0})
    assert a.status_code == 200 and a.json() == b.json()
    assert set(a.json()["explanations"]) == {"phase1", "phase2", "phase3", "phase4"}

    for i in range(7):
        response = client.post(
            "/api/feedback",
            json={"session_id": "s", "track_key": f"t{i}", "action": "listened"},
        )
        assert response.status_code == 204
    lines = (tmp_path / "feedback.jsonl").read_text().splitlines()
    assert len(lines) == 7
    assert all(json.loads(l)["action"] == "listened" for l in lines)
