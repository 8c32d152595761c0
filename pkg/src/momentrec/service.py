"""HTTP service exposing the recommendation pipeline and a feedback log."""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .dataset import MomentsDataset
from .models import TrainedRegressor
from .pipeline import LibraryTrack, phase1_tag_profile, result_to_dict, run_pipeline

VALID_ACTIONS = ("listened", "skipped")


@dataclass
class ServiceState:
    dataset: MomentsDataset | None = None
    model: TrainedRegressor | None = None
    library: list[LibraryTrack] | None = None
    feedback_path: Path = Path("feedback.jsonl")

    @property
    def loaded(self) -> bool:
        return (
            self.dataset is not None
            and self.model is not None
            and bool(self.library)
        )


class FeedbackIn(BaseModel):
    session_id: str
    track_key: str
    action: str
    epsilon_at_time: float = 0.0


def create_app(state: ServiceState, static_dir: Path | None = None) -> FastAPI:
    app = FastAPI(title="moment recommender")
    feedback_lock = threading.Lock()

    def require_loaded() -> None:
        if not state.loaded:
            raise HTTPException(status_code=503, detail="model or dataset not loaded")

    @app.get("/api/recommendations")
    def recommendations(
        hour: int | None = Query(default=None),
        k: int = Query(default=20),
        epsilon: float = Query(default=0.0),
    ) -> JSONResponse:
        require_loaded()
        if hour is None:
            hour = datetime.now().hour
        if not 0 <= hour <= 23:
            raise HTTPException(status_code=400, detail="hour must be in [0, 23]")
        if k < 1:
            raise HTTPException(status_code=400, detail="k must be >= 1")
        if not 0.0 <= epsilon <= 1.0:
            raise HTTPException(status_code=400, detail="epsilon must be in [0, 1]")
        result = run_pipeline(
            state.dataset, state.model, state.library, hour=hour, k=k, epsilon=epsilon
        )
        return JSONResponse(result_to_dict(result))

    @app.get("/api/profile/{hour}")
    def profile(hour: int) -> JSONResponse:
        require_loaded()
        if not 0 <= hour <= 23:
            raise HTTPException(status_code=400, detail="hour must be in [0, 23]")
        hp = phase1_tag_profile(state.dataset, hour)
        pairs = sorted(
            zip(state.dataset.vocabulary.tags, hp.tag_strengths),
            key=lambda p: (-p[1], p[0]),
        )[:50]
        return JSONResponse(
            {
                "hour": hp.hour,
                "support": hp.support,
                "fallback": hp.fallback,
                "top_tags": [{"tag": t, "strength": s} for t, s in pairs],
            }
        )

    @app.post("/api/feedback", status_code=204)
    def feedback(event: FeedbackIn) -> None:
        if event.action not in VALID_ACTIONS:
            raise HTTPException(
                status_code=400,
                detail=f"action must be one of {list(VALID_ACTIONS)}",
            )
        line = json.dumps(
            {
                "session_id": event.session_id,
                "track_key": event.track_key,
                "action": event.action,
                "at": int(time.time()),
                "epsilon_at_time": event.epsilon_at_time,
            }
        )
        with feedback_lock:
            with state.feedback_path.open("a") as fh:
                fh.write(line + "\n")

    @app.get("/api/health")
    def health() -> JSONResponse:
        if not state.loaded:
            return JSONResponse({"status": "loading"}, status_code=503)
        return JSONResponse(
            {
                "status": "ok",
                "dataset_moments": len(state.dataset),
                "model_kind": state.model.kind,
                "model_rmse": state.model.train_rmse,
            }
        )

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="webui")
    return app
