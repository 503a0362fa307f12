"""Request and response bodies for the HTTP service."""

from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, Field


class TranspileRequest(BaseModel):
    qasm: str
    coupling: dict[str, Any]
    layout: Literal["trivial", "dense"] = "trivial"
    routing: Literal["cascade", "lookahead"] = "cascade"
    window: int = Field(4, ge=1)
    seed: int = 0


class TranspileResponse(BaseModel):
    qasm: str
    metrics: dict[str, Any]


class SynthRequest(BaseModel):
    # either a matrix (see pipeline.parse_unitary) or a list of gate specs
    unitary: Optional[Any] = None
    gates: list[str] = Field(default_factory=list)
    mode: Literal["exact", "sk"] = "exact"
    basis: list[str] = Field(default_factory=lambda: ["h", "t", "tdg"])
    depth: Optional[int] = Field(None, ge=0)
    epsilon: Optional[float] = Field(None, gt=0)
    l0: int = Field(12, ge=0, le=16)


class SynthResponse(BaseModel):
    qasm: str
    report: dict[str, Any]


class ReduceRequest(BaseModel):
    model: dict[str, Any]
    M: Optional[float] = None
    negate: bool = False


class ReduceResponse(BaseModel):
    model: dict[str, Any]
    log: list[dict[str, Any]]


class EmbedRequest(BaseModel):
    model: dict[str, Any]
    target: dict[str, Any]
    seed: int = 0
    tries: int = Field(10, ge=1)
    negate: bool = False


class EmbedResponse(BaseModel):
    embedding: dict[str, list[int]]
    report: dict[str, Any]


class SamplerOptions(BaseModel):
    reads: int = Field(100, ge=1)
    sweeps: int = Field(1000, ge=1)
    beta_min: float = Field(0.1, gt=0)
    beta_max: float = Field(10.0, gt=0)
    beta_steps: int = Field(64, ge=1)
    threads: int = Field(1, ge=1)
    total_time: float = Field(100.0, gt=0)
    dt: Optional[float] = Field(None, gt=0)
    schedule_csv: Optional[str] = None


class SolveRequest(BaseModel):
    model: dict[str, Any]
    sampler: Literal["sa", "adiabatic", "brute"] = "sa"
    embed: bool = False
    target: Optional[dict[str, Any]] = None
    embedding: Optional[dict[str, list[int]]] = None
    clone: int = Field(1, ge=1)
    chain_strength: Optional[float] = Field(None, gt=0)
    M: Optional[float] = None
    seed: int = 0
    options: SamplerOptions = Field(default_factory=SamplerOptions)
    teff: bool = False
    negate: bool = False
    tries: int = Field(10, ge=1)


class SampleRequest(BaseModel):
    model: dict[str, Any]
    sampler: Literal["sa", "adiabatic", "brute"] = "sa"
    seed: int = 0
    options: SamplerOptions = Field(default_factory=SamplerOptions)
    negate: bool = False


class SamplesResponse(BaseModel):
    samples: str
    summary: dict[str, Any]


class StatsRequest(BaseModel):
    model: dict[str, Any]
    samples: str
    teff: bool = True
    negate: bool = False


class ErrorBody(BaseModel):
    error: str
    message: str
    exit_code: int
    details: dict[str, Any] = Field(default_factory=dict)
