"""FastAPI application exposing every pipeline stage as a POST endpoint."""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import SCHEMA_VERSIONS, __version__, pipeline
from ..errors import InputError, QCompError
from .schemas import (
    EmbedRequest,
    EmbedResponse,
    ReduceRequest,
    ReduceResponse,
    SampleRequest,
    SamplesResponse,
    SolveRequest,
    StatsRequest,
    SynthRequest,
    SynthResponse,
    TranspileRequest,
    TranspileResponse,
)


def error_body(exc: QCompError) -> dict:
    body = exc.to_dict()
    body["exit_code"] = exc.exit_code
    return body


def _target(req: SynthRequest) -> np.ndarray:
    if req.unitary is not None and req.gates:
        raise InputError("give either a unitary or gate specs, not both")
    if req.unitary is not None:
        return pipeline.parse_unitary(req.unitary)
    if not req.gates:
        raise InputError("no unitary or gate spec given")
    mats = [pipeline.gate_unitary(g) for g in req.gates]
    if len({m.shape for m in mats}) != 1:
        raise InputError("gate specs must all act on the same number of qubits")
    u = mats[0]
    # later specs act after earlier ones
    for m in mats[1:]:
        u = m @ u
    return u


def create_app(cache_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="qcomp", version=__version__)
    nets = pipeline.NetCache(cache_dir)

    @app.exception_handler(QCompError)
    async def _qcomp_error(request: Request, exc: QCompError):
        status = {2: 400, 3: 422, 4: 500}.get(exc.exit_code, 400)
        return JSONResponse(status_code=status, content=error_body(exc))

    @app.exception_handler(Exception)
    async def _internal(request: Request, exc: Exception):
        return JSONResponse(status_code=500, content={
            "error": "internal_error", "message": f"{type(exc).__name__}: {exc}", "exit_code": 1})

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/version")
    def version():
        return {"version": __version__, "schemas": SCHEMA_VERSIONS}

    @app.post("/transpile", response_model=TranspileResponse)
    def transpile(req: TranspileRequest):
        return pipeline.transpile(req.qasm, req.coupling, req.layout, req.routing, req.window, req.seed)

    @app.post("/synth", response_model=SynthResponse)
    def synth(req: SynthRequest):
        return pipeline.synth(_target(req), req.mode, tuple(req.basis), req.depth, req.l0, req.epsilon, nets=nets)

    @app.post("/reduce", response_model=ReduceResponse)
    def reduce(req: ReduceRequest):
        return pipeline.reduce(req.model, req.M, req.negate)

    @app.post("/embed", response_model=EmbedResponse)
    def embed(req: EmbedRequest):
        return pipeline.embed(req.model, req.target, req.seed, req.tries, req.negate)

    @app.post("/solve", response_model=SamplesResponse)
    def solve(req: SolveRequest):
        return pipeline.solve(
            req.model, req.sampler, req.embed, req.target, req.embedding, req.clone, req.chain_strength,
            req.M, req.seed, req.options.model_dump(), req.teff, req.negate, req.tries,
        )

    @app.post("/sample", response_model=SamplesResponse)
    def sample(req: SampleRequest):
        return pipeline.sample(req.model, req.sampler, req.seed, req.options.model_dump(), req.negate)

    @app.post("/stats")
    def stats(req: StatsRequest):
        return pipeline.stats(req.model, req.samples, req.teff, req.negate)

    return app
