"""Service operations as plain functions, shared by the HTTP app and the CLI."""

from __future__ import annotations

from ..evaluation import compute_metrics
from ..natlog import Proof, execute_proof
from ..numerals import NatOp
from ..pipeline import Engine, UsageError, aggregate
from ..probe import generate_probe, score_probe, select_base_claims
from ..tables import parse_table
from . import schemas as s


def verify(engine: Engine, req: s.VerifyRequest) -> s.VerdictReportOut:
    tables = [parse_table(t.rows, t.caption, t.header_row_count, req.id) for t in req.tables]
    report = engine.verify_claim(req.claim, tables, claim_id=req.id, decompose=req.decompose)
    return s.VerdictReportOut(**report.to_dict(with_diagnostics=req.diagnostics))


def decompose(engine: Engine, req: s.DecomposeRequest) -> s.DecomposeResponse:
    subclaims, _, ok = engine.decompose(req.claim)
    return s.DecomposeResponse(subclaims=[sc.text for sc in subclaims], decomposed=ok)


def execute(req: s.ExecuteProofRequest) -> s.ExecuteProofResponse:
    if (req.ops is None) == (req.proofs is None):
        raise UsageError("give exactly one of ops or proofs")
    if req.ops is not None:
        ops = [NatOp.parse(o) for o in req.ops]
        verdict, trace = execute_proof(ops)
        steps = [s.StepOut(c="", op=o.value) for o in ops]
        proof = s.ProofOut(subclaim="", steps=steps, trace=[t.value for t in trace],
                           verdict=verdict.value)
        return s.ExecuteProofResponse(verdict=verdict.value, proofs=[proof])
    if not req.proofs:
        raise UsageError("proofs is empty")
    rebuilt = [Proof.from_dict(p.model_dump()) for p in req.proofs]
    return s.ExecuteProofResponse(verdict=aggregate(p.verdict for p in rebuilt).value,
                                  proofs=[s.ProofOut(**p.to_dict()) for p in rebuilt])


def probe_gen(req: s.ProbeGenRequest) -> s.ProbeGenResponse:
    return s.ProbeGenResponse(base_count=len(select_base_claims(req.instances)),
                              records=generate_probe(req.instances))


def probe_score(req: s.ProbeScoreRequest) -> s.ProbeScoreResponse:
    score = score_probe([p.model_dump() for p in req.predictions])
    return s.ProbeScoreResponse(**score.to_dict())


def metrics(req: s.MetricsRequest) -> s.MetricsResponse:
    report = compute_metrics(req.preds, req.golds, req.label_space, req.execution_found,
                             subset=req.subset)
    return s.MetricsResponse(**report.to_dict())
