"""FastAPI application exposing the verification engine."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from ..pipeline import Engine
from . import api
from . import schemas as s

# every domain error (usage, table, numeral, proof, probe) derives from ValueError
CLIENT_ERRORS = (ValueError,)


def create_app(engine: Engine | None = None) -> FastAPI:
    engine = engine or Engine()
    app = FastAPI(title="tablenli", version="0.1.0")
    app.state.engine = engine

    def guarded(fn, *args):
        try:
            return fn(*args)
        except CLIENT_ERRORS as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

    @app.get("/health", response_model=s.Health)
    def health() -> s.Health:
        return s.Health(backend=type(engine.gateway.backend).__name__)

    @app.post("/verify", response_model=s.VerdictReportOut)
    def verify(req: s.VerifyRequest):
        return guarded(api.verify, engine, req)

    @app.post("/decompose", response_model=s.DecomposeResponse)
    def decompose(req: s.DecomposeRequest):
        return guarded(api.decompose, engine, req)

    @app.post("/execute-proof", response_model=s.ExecuteProofResponse)
    def execute_proof(req: s.ExecuteProofRequest):
        return guarded(api.execute, req)

    @app.post("/probe/generate", response_model=s.ProbeGenResponse)
    def probe_gen(req: s.ProbeGenRequest):
        return guarded(api.probe_gen, req)

    @app.post("/probe/score", response_model=s.ProbeScoreResponse)
    def probe_score(req: s.ProbeScoreRequest):
        return guarded(api.probe_score, req)

    @app.post("/eval/metrics", response_model=s.MetricsResponse)
    def metrics(req: s.MetricsRequest):
        return guarded(api.metrics, req)

    return app
