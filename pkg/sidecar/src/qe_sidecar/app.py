"""HTTP surface: three routes, JSON in, JSON out.

Malformed requests get a 400 with an error body, never a 500; request
validation errors are remapped from FastAPI's default 422.
"""

from __future__ import annotations

from typing import Literal

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .registry import HIGHER_BETTER, ScorerRegistry, build_registry


class SentenceRequest(BaseModel):
    src: str = Field(min_length=1)
    cand: str
    scorer: str
    ref: str | None = None


class SpanRequest(BaseModel):
    host: str
    counterpart: str
    span: str = Field(min_length=1)
    direction: Literal["translation_span_vs_source", "source_span_vs_translation"]
    scorer: str


def create_app(stub_mode: bool = True) -> FastAPI:
    app = FastAPI(title="qe-sidecar", docs_url=None, redoc_url=None)
    registry: ScorerRegistry = build_registry(stub_mode)
    app.state.registry = registry
    app.state.stub_mode = stub_mode

    @app.exception_handler(RequestValidationError)
    async def bad_request(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc.errors()[:3])})

    def reject(message: str) -> JSONResponse:
        return JSONResponse(status_code=400, content={"error": message})

    @app.post("/v1/score_sentence")
    async def score_sentence(body: SentenceRequest):
        scorer = registry.sentence.get(body.scorer)
        if scorer is None:
            return reject(f"unknown sentence scorer {body.scorer!r}; serving {registry.ids()}")
        if scorer.needs_ref and body.ref is None:
            return reject(f"scorer {body.scorer!r} is reference-based; send a ref field")
        if not scorer.needs_ref and body.ref is not None:
            return reject(f"scorer {body.scorer!r} is reference-free; drop the ref field")
        value = scorer.fn(body.src, body.cand, body.ref)
        return {"value": value, "convention": HIGHER_BETTER}

    @app.post("/v1/score_span")
    async def score_span(body: SpanRequest):
        scorer = registry.span.get(body.scorer)
        if scorer is None:
            return reject(f"unknown span scorer {body.scorer!r}; serving {registry.ids()}")
        value = scorer.fn(body.host, body.counterpart, body.span, body.direction)
        return {"value": value}

    @app.get("/v1/health")
    async def health():
        return {"scorers": registry.ids(), "stub_mode": stub_mode}

    return app
