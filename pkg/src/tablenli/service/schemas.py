"""Request and response bodies for the HTTP service."""

from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field


class TableIn(BaseModel):
    caption: str = ""
    rows: list[list[str]]
    header_row_count: int = Field(1, ge=0)


class VerifyRequest(BaseModel):
    claim: str = Field(min_length=1)
    tables: list[TableIn] = Field(min_length=1)
    id: str = ""
    decompose: bool = True
    diagnostics: bool = True


class StepOut(BaseModel):
    c: str
    e: Optional[str] = None
    q: Optional[str] = None
    a: Optional[str] = None
    op: str
    note: Optional[str] = None


class ProofOut(BaseModel):
    subclaim: str
    steps: list[StepOut]
    trace: list[str] = []
    verdict: str = "NEI"
    degraded: bool = False


class VerdictReportOut(BaseModel):
    model_config = ConfigDict(extra="allow")

    id: str
    claim: str
    verdict: Literal["SUPPORTS", "REFUTES", "NEI"]
    execution_found: bool
    decomposed: bool
    subclaims: list[str]
    proofs: list[ProofOut]
    diagnostics: list[dict[str, Any]] = []


class DecomposeRequest(BaseModel):
    claim: str = Field(min_length=1)


class DecomposeResponse(BaseModel):
    subclaims: list[str]
    decomposed: bool


class ExecuteProofRequest(BaseModel):
    """Either a bare op sequence or serialized proofs (one or many)."""

    ops: Optional[list[str]] = None
    proofs: Optional[list[ProofOut]] = None


class ExecuteProofResponse(BaseModel):
    verdict: str
    proofs: list[ProofOut]


class ProbeGenRequest(BaseModel):
    instances: list[dict[str, Any]]


class ProbeGenResponse(BaseModel):
    base_count: int
    records: list[dict[str, Any]]


class ProbePrediction(BaseModel):
    base_id: str
    kind: int = Field(ge=0, le=17)
    verdict: Optional[str] = None


class ProbeScoreRequest(BaseModel):
    predictions: list[ProbePrediction]


class ProbeScoreResponse(BaseModel):
    denominator: int
    per_kind: dict[str, Optional[float]]
    per_class: dict[str, Optional[float]]


class MetricsRequest(BaseModel):
    preds: list[str]
    golds: list[str]
    label_space: Literal["three_way", "two_way"] = "three_way"
    execution_found: Optional[list[bool]] = None
    subset: str = "full"


class LabelScoresOut(BaseModel):
    precision: float
    recall: float
    f1: float
    support: int


class MetricsResponse(BaseModel):
    n: int
    accuracy: Optional[float]
    macro_f1: Optional[float]
    execution_found: Optional[float]
    per_label: dict[str, LabelScoresOut]
    subset: str
    subset_source: Optional[str] = None
    label_space: str
    undefined: bool


class Health(BaseModel):
    status: str = "ok"
    backend: str
