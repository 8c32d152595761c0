import json

import pytest
from fastapi.testclient import TestClient

from momentrec.dataset import build_dataset
from momentrec.models import TrainedRegressor
from momentrec.pipeline import load_library
from momentrec.service import ServiceState, create_app


def constant_model(value=0.58):
    return TrainedRegressor(
        kind="baseline", target_feature="danceability",
        parameters={"mean": value, "std": 0.0}, seed=0, train_rmse=0.123,
    )


@pytest.fixture
def client(demo_cache, tmp_path):
    state = ServiceState(
        dataset=build_dataset(demo_cache, k=1000),
        model=constant_model(),
        library=load_library(demo_cache),
        feedback_path=tmp_path / "feedback.jsonl",
    )
    return TestClient(create_app(state))


@pytest.fixture
def unloaded_client(tmp_path):
    return TestClient(create_app(ServiceState(feedback_path=tmp_path / "f.jsonl")))


class TestRecommendations:
    def test_golden_shape(self, client):
        response = client.get("/api/recommendations", params={"hour": 19, "k": 3, "epsilon": 0})
        assert response.status_code == 200
        body = response.json()
        assert body["hour"] == 19
        assert body["predicted_features"]["danceability"] == 0.58
        assert len(body["recommendations"]) == 3
        assert set(body["explanations"]) == {"phase1", "phase2", "phase3", "phase4"}
        first = body["recommendations"][0]
        assert first["rank"] == 1
        assert first["distance"] == abs(first["feature_value"] - 0.58)

    def test_identical_requests_identical_bodies(self, client):
        a = client.get("/api/recommendations", params={"hour": 19}).json()
        b = client.get("/api/recommendations", params={"hour": 19}).json()
        assert a == b

    def test_hour_24_is_400(self, client):
        response = client.get("/api/recommendations", params={"hour": 24})
        assert response.status_code == 400
        assert "hour" in response.json()["detail"]

    @pytest.mark.parametrize("params", [{"k": 0}, {"epsilon": 1.5}, {"epsilon": -0.1}])
    def test_param_validation(self, client, params):
        response = client.get("/api/recommendations", params={"hour": 10, **params})
        assert response.status_code == 400

    def test_omitted_hour_uses_server_clock(self, client, monkeypatch):
        response = client.get("/api/recommendations")
        assert response.status_code == 200
        assert 0 <= response.json()["hour"] <= 23

    def test_unloaded_is_503(self, unloaded_client):
        assert unloaded_client.get("/api/recommendations", params={"hour": 1}).status_code == 503

    def test_epsilon_one_reorders_by_novelty(self, client):
        exploit = client.get("/api/recommendations", params={"hour": 19, "k": 4, "epsilon": 0}).json()
        explore = client.get("/api/recommendations", params={"hour": 19, "k": 4, "epsilon": 1}).json()
        novelties = [r["novelty"] for r in explore["recommendations"]]
        assert novelties == sorted(novelties, reverse=True)
        assert sorted(r["track_key"] for r in exploit["recommendations"]) == sorted(
            r["track_key"] for r in explore["recommendations"]
        )


class TestProfile:
    def test_golden_hour(self, client):
        response = client.get("/api/profile/19")
        assert response.status_code == 200
        body = response.json()
        assert body["hour"] == 19 and body["support"] == 2 and not body["fallback"]
        assert body["top_tags"][0]["tag"] == "electronic"
        assert len(body["top_tags"]) <= 50

    def test_negative_hour_is_400(self, client):
        assert client.get("/api/profile/-1").status_code == 400

    def test_empty_hour_flags_fallback(self, client):
        body = client.get("/api/profile/3").json()
        assert body["fallback"] is True and body["support"] == 0


class TestFeedback:
    def test_listened_appends_line(self, client, tmp_path):
        response = client.post(
            "/api/feedback",
            json={"session_id": "s1", "track_key": "a — b", "action": "listened"},
        )
        assert response.status_code == 204
        lines = (tmp_path / "feedback.jsonl").read_text().splitlines()
        assert len(lines) == 1
        assert json.loads(lines[0])["action"] == "listened"

    def test_unknown_action_is_400(self, client):
        response = client.post(
            "/api/feedback",
            json={"session_id": "s1", "track_key": "a — b", "action": "liked"},
        )
        assert response.status_code == 400

    def test_hundred_posts_ordered(self, client, tmp_path):
        for i in range(100):
            client.post(
                "/api/feedback",
                json={"session_id": "s", "track_key": f"t{i}", "action": "skipped"},
            )
        lines = (tmp_path / "feedback.jsonl").read_text().splitlines()
        assert len(lines) == 100
        assert [json.loads(l)["track_key"] for l in lines] == [f"t{i}" for i in range(100)]


class TestHealth:
    def test_loaded_ok(self, client):
        body = client.get("/api/health").json()
        assert body["status"] == "ok"
        assert body["dataset_moments"] == 4
        assert body["model_kind"] == "baseline"
        assert body["model_rmse"] == 0.123

    def test_before_load_503(self, unloaded_client):
        assert unloaded_client.get("/api/health").status_code == 503


class TestConcurrency:
    def test_hammered_mixed_params_match_oracle(self, client):
        from concurrent.futures import ThreadPoolExecutor

        params = [{"hour": h, "k": 3, "epsilon": e} for h in (9, 17, 19) for e in (0.0, 1.0)]
        oracle = {json.dumps(p, sort_keys=True): client.get("/api/recommendations", params=p).json() for p in params}
        with ThreadPoolExecutor(max_workers=8) as pool:
            futures = [
                pool.submit(client.get, "/api/recommendations", params=p)
                for p in params * 10
            ]
            for p, future in zip(params * 10, futures):
                assert future.result().json() == oracle[json.dumps(p, sort_keys=True)]
