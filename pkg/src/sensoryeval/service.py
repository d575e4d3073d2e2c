"""HTTP service consumed by the annotation workbench.

Endpoints (JSON unless noted):

* ``GET /api/health`` - liveness probe
* ``GET /api/config`` - scoring weights and level thresholds
* ``GET /api/images`` - image queue with annotation status
* ``GET /api/images/{id}`` - raw image bytes
* ``GET /api/annotations`` / ``POST /api/annotations`` - record store
* ``POST /api/predict`` - multipart image in, pipeline result out

Annotation writes go through a single append path guarded by a process
lock and a file lock, so concurrent sessions cannot interleave rows.
"""

from __future__ import annotations

import io
import os
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, UploadFile
from fastapi.responses import FileResponse, JSONResponse
from filelock import FileLock
from PIL import Image
from pydantic import BaseModel

from . import dataset as dataset_mod
from . import hedonic
from .dataset import AnnotationRecord
from .detector import Detector
from .hedonic import DEFAULT_WEIGHTS, AttributeWeights, ScoreValidationError
from .model import RegressorHandle
from .pipeline import PipelineResult, run_pipeline

__all__ = ["AnnotationStore", "create_app", "record_to_dict", "result_to_dict"]

_IMAGE_TYPES = {".png": "image/png", ".jpg": "image/jpeg", ".jpeg": "image/jpeg"}


def record_to_dict(record: AnnotationRecord) -> dict:
    return {
        "image_path": record.image_path,
        "color": record.score.color,
        "shape": record.score.shape,
        "texture": record.score.texture,
        "annotator": record.annotator,
        "timestamp": record.timestamp,
        "index": record.index,
        "level": record.level,
    }


def result_to_dict(result: PipelineResult) -> dict:
    items = []
    for item in result.items:
        entry = {
            "category": item.category,
            "confidence": item.confidence,
            "bbox": [item.box.bx, item.box.by, item.box.bw, item.box.bh],
        }
        if item.acceptability is not None:
            entry["index"] = item.acceptability.index
            entry["level"] = item.acceptability.level
        items.append(entry)
    return {
        "items": items,
        "image_width": result.image_width,
        "image_height": result.image_height,
        "target_category": result.target_category,
        "elapsed_seconds": result.elapsed_seconds,
    }


class AnnotationStore:
    """Serialized append access to the annotations CSV."""

    def __init__(self, csv_path: str | Path,
                 weights: AttributeWeights = DEFAULT_WEIGHTS):
        self.csv_path = Path(csv_path)
        self.weights = weights
        self._thread_lock = threading.Lock()
        self._file_lock = FileLock(str(self.csv_path) + ".lock")

    def records(self) -> list[AnnotationRecord]:
        if not self.csv_path.exists():
            return []
        return dataset_mod.load_annotations(self.csv_path, self.weights,
                                            check_images=False)

    def is_annotated(self, image_path: str, annotator: str | None = None) -> bool:
        for rec in self.records():
            if rec.image_path == image_path:
                if annotator is None or rec.annotator == annotator:
                    return True
        return False

    def append(self, record: AnnotationRecord) -> None:
        with self._thread_lock, self._file_lock:
            new_file = not self.csv_path.exists()
            self.csv_path.parent.mkdir(parents=True, exist_ok=True)
            import csv as csv_mod
            with open(self.csv_path, "a", newline="", encoding="utf-8") as fh:
                writer = csv_mod.writer(fh)
                if new_file:
                    writer.writerow(dataset_mod.ANNOTATION_HEADER)
                writer.writerow([record.image_path, record.score.color,
                                 record.score.shape, record.score.texture,
                                 record.annotator, record.timestamp,
                                 f"{record.index:.3f}", record.level])


class AnnotationRequest(BaseModel):
    image_id: str
    color: int
    shape: int
    texture: int
    annotator: str


@dataclass
class _AppState:
    data_dir: Path
    store: AnnotationStore
    weights: AttributeWeights
    detector: Detector | None
    regressor: RegressorHandle | None
    target_category: str


def create_app(data_dir: str | Path | None = None, *,
               weights: AttributeWeights = DEFAULT_WEIGHTS,
               detector: Detector | None = None,
               regressor: RegressorHandle | None = None,
               target_category: str = "guava",
               ui_dir: str | Path | None = None) -> FastAPI:
    """Build the service application.

    ``data_dir`` defaults to the SENSORYEVAL_DATA_DIR environment
    variable; it must contain an ``images/`` subdirectory and hosts the
    ``annotations.csv`` store.  ``detector``/``regressor`` are optional:
    without them ``POST /api/predict`` answers 503.  When ``ui_dir``
    points at the built annotation workbench, it is served at ``/`` so
    the browser client and the API share one origin.
    """
    data_dir = Path(data_dir or os.environ.get("SENSORYEVAL_DATA_DIR", "."))
    state = _AppState(
        data_dir=data_dir,
        store=AnnotationStore(data_dir / "annotations.csv", weights),
        weights=weights,
        detector=detector,
        regressor=regressor,
        target_category=target_category,
    )
    app = FastAPI(title="sensoryeval")
    app.state.sensoryeval = state

    images_dir = data_dir / "images"

    def list_image_files() -> list[Path]:
        if not images_dir.is_dir():
            return []
        return sorted(p for p in images_dir.iterdir()
                      if p.suffix.lower() in _IMAGE_TYPES)

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    @app.get("/api/config")
    def config():
        return {
            "weights": {"color": state.weights.w_color,
                        "shape": state.weights.w_shape,
                        "texture": state.weights.w_texture},
            "scale_min": hedonic.SCALE_MIN,
            "scale_max": hedonic.SCALE_MAX,
            "level_cuts": list(hedonic.LEVEL_CUTS),
            "levels": list(hedonic.LEVELS),
            "target_category": state.target_category,
        }

    @app.get("/api/images")
    def list_images():
        annotated_paths = {rec.image_path for rec in state.store.records()}
        out = []
        for path in list_image_files():
            rel = f"images/{path.name}"
            out.append({"id": path.name, "path": rel,
                        "annotated": rel in annotated_paths})
        return out

    @app.get("/api/images/{image_id}")
    def get_image(image_id: str):
        if "/" in image_id or "\\" in image_id or image_id.startswith("."):
            raise HTTPException(status_code=404, detail="unknown image")
        path = images_dir / image_id
        if not path.is_file() or path.suffix.lower() not in _IMAGE_TYPES:
            raise HTTPException(status_code=404, detail="unknown image")
        return FileResponse(path, media_type=_IMAGE_TYPES[path.suffix.lower()])

    @app.get("/api/annotations")
    def list_annotations():
        return [record_to_dict(rec) for rec in state.store.records()]

    @app.post("/api/annotations")
    def post_annotation(body: AnnotationRequest):
        image_path = f"images/{body.image_id}"
        if not (images_dir / body.image_id).is_file():
            raise HTTPException(status_code=404,
                                detail=f"unknown image {body.image_id!r}")
        try:
            score = hedonic.validate_score(body.color, body.shape, body.texture)
        except ScoreValidationError as exc:
            return JSONResponse(status_code=422, content={"errors": exc.errors})
        if state.store.is_annotated(image_path, body.annotator):
            raise HTTPException(
                status_code=409,
                detail=f"image {body.image_id!r} already annotated by "
                       f"{body.annotator!r}")
        record = AnnotationRecord.create(
            image_path=image_path, score=score, annotator=body.annotator,
            timestamp=datetime.now(timezone.utc).isoformat(),
            weights=state.weights)
        state.store.append(record)
        return record_to_dict(record)

    @app.post("/api/predict")
    def predict(image: UploadFile):
        if state.detector is None or state.regressor is None:
            raise HTTPException(status_code=503,
                                detail="prediction models are not loaded")
        try:
            with Image.open(io.BytesIO(image.file.read())) as im:
                if im.mode not in ("L", "RGB"):
                    im = im.convert("RGB")
                array = np.asarray(im)
        except Exception:
            raise HTTPException(status_code=422, detail="unreadable image")
        result = run_pipeline(array, state.detector, state.regressor,
                              target_category=state.target_category,
                              key=image.filename)
        return result_to_dict(result)

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        # Mounted last so /api routes keep precedence.
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True),
                  name="ui")

    return app
