"""Stateless HTTP service exposing a trained model to the explorer UI.

The model is loaded once and never mutated; every request carries the raw
features it needs, so concurrent requests share one immutable snapshot.
"""

from __future__ import annotations

import json

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .errors import MisalignedInstanceError, NodeNotFoundError
from .explain import explain
from .pipeline import CamModel
from .qaf import root_polarity, to_document
from .reasoner import evaluate as evaluate_strengths


def _polarity_map(model) -> dict:
    return {n.id: root_polarity(model, n.id) for n in model.nodes if n.id != model.root}


def create_app(cam: CamModel) -> FastAPI:
    app = FastAPI(title="cam", docs_url=None, redoc_url=None)
    model_payload = {
        "model": to_document(cam.qaf),
        "polarity": _polarity_map(cam.qaf),
        "root_label": cam.qaf.node(cam.qaf.root).label,
        "sample": cam.sample_row,
    }
    ranking = "influence"
    if isinstance(cam.config, dict):
        ranking = cam.config.get("attacker_ranking", "influence")

    async def _body(request: Request) -> dict:
        try:
            doc = json.loads(await request.body())
        except (json.JSONDecodeError, UnicodeDecodeError):
            raise _HttpError(400, "request body is not valid JSON")
        if not isinstance(doc, dict):
            raise _HttpError(400, "request body must be a JSON object")
        return doc

    def _strengths(doc: dict):
        features = doc.get("features")
        if not isinstance(features, dict):
            raise _HttpError(400, "missing 'features' object")
        try:
            x = cam.preprocess.apply_mapping(features)
        except MisalignedInstanceError as exc:
            raise _HttpError(422, str(exc))
        return features, evaluate_strengths(cam.qaf, x)

    @app.get("/health")
    async def health():
        return {"status": "ok"}

    @app.get("/model")
    async def model():
        return model_payload

    @app.post("/predict")
    async def predict(request: Request):
        _, strengths = _strengths(await _body(request))
        return {"strengths": strengths.strengths, "score": strengths[cam.qaf.root]}

    @app.post("/explain")
    async def explain_endpoint(request: Request):
        doc = await _body(request)
        node = doc.get("node")
        if not isinstance(node, str):
            raise _HttpError(400, "missing 'node' string")
        features, strengths = _strengths(doc)
        try:
            step = explain(cam.qaf, strengths, node, features, ranking)
        except NodeNotFoundError as exc:
            raise _HttpError(404, str(exc))
        return step.to_document()

    @app.exception_handler(_HttpError)
    async def handle_http_error(_, exc: "_HttpError"):
        return JSONResponse(status_code=exc.status, content={"detail": exc.detail})

    return app


class _HttpError(Exception):
    def __init__(self, status: int, detail: str):
        super().__init__(detail)
        self.status = status
        self.detail = detail
