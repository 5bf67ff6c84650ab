"""HTTP inference endpoint compatible with destrank's dense http mode.

POST /embed with {"model": ..., "texts": [...]} returns
{"model": ..., "dim": ..., "vectors": [[...], ...]}. Bad requests get a 400.
"""
from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .encoders import Encoder


def create_app(encoder: Encoder) -> FastAPI:
    app = FastAPI()
    spec = encoder.spec

    @app.post("/embed")
    async def embed(request: Request):
        try:
            body = await request.json()
        except Exception:
            return JSONResponse({"error": "body is not valid JSON"}, status_code=400)
        if not isinstance(body, dict):
            return JSONResponse({"error": "body must be a JSON object"}, status_code=400)
        texts = body.get("texts")
        if not isinstance(texts, list) or not texts or not all(isinstance(t, str) for t in texts):
            return JSONResponse(
                {"error": "texts must be a non-empty list of strings"}, status_code=400
            )
        requested = body.get("model")
        if requested not in (None, spec.alias, spec.registry_model_id):
            return JSONResponse(
                {"error": f"this server encodes with {spec.registry_model_id}"},
                status_code=400,
            )
        vectors = encoder.encode(texts)
        return {
            "model": spec.registry_model_id,
            "dim": spec.dim,
            "vectors": [[float(x) for x in vec] for vec in vectors],
        }

    return app


def serve(encoder: Encoder, port: int) -> None:
    import uvicorn

    uvicorn.run(create_app(encoder), host="127.0.0.1", port=port, log_level="warning")
