"""Claim verification: decompose, question, answer, prove, aggregate."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .config import EngineConfig
from .gateway import BackendError, Gateway, GatewayError, GenerationTrace, HttpBackend, MockBackend
from .gateway.backends import Backend
from .natlog import NatlogError, Proof, ProofBuilder, ProofStep, QAPair, Verdict
from .numerals import NatOp
from .tables import Table

log = logging.getLogger(__name__)

GATEWAY_ERRORS = (BackendError, GatewayError)


class UsageError(ValueError):
    pass


def aggregate(verdicts: Iterable[Verdict]) -> Verdict:
    """Supported iff all are, Refuted iff any is, NEI otherwise."""
    vs = list(verdicts)
    if not vs:
        raise UsageError("aggregate needs at least one verdict")
    if any(v is Verdict.REFUTED for v in vs):
        return Verdict.REFUTED
    if all(v is Verdict.SUPPORTED for v in vs):
        return Verdict.SUPPORTED
    return Verdict.NEI


@dataclass(frozen=True)
class Subclaim:
    text: str
    index: int
    parent_claim_id: str = ""

    def __post_init__(self):
        if not self.text.strip():
            raise UsageError("subclaim text is empty")


@dataclass
class Diagnostic:
    subclaim: int | None
    trace: GenerationTrace | None = None
    message: str | None = None

    def to_dict(self) -> dict:
        out: dict = {"subclaim": self.subclaim}
        if self.message:
            out["message"] = self.message
        if self.trace is not None:
            out["trace"] = self.trace.to_dict()
        return out


@dataclass
class VerdictReport:
    claim_id: str
    claim: str
    subclaims: list[Subclaim]
    proofs: list[Proof]
    verdict: Verdict
    execution_found: bool
    diagnostics: list[Diagnostic] = field(default_factory=list)
    decomposed: bool = True

    def to_dict(self, with_diagnostics: bool = True) -> dict:
        out = {
            "id": self.claim_id,
            "claim": self.claim,
            "verdict": self.verdict.value,
            "execution_found": self.execution_found,
            "decomposed": self.decomposed,
            "subclaims": [s.text for s in self.subclaims],
            "proofs": [p.to_dict() for p in self.proofs],
        }
        if with_diagnostics:
            out["diagnostics"] = [d.to_dict() for d in self.diagnostics]
        return out


def recompute_verdict(report: Mapping) -> Verdict:
    """Re-derive a report's verdict from its serialized proofs alone."""
    return aggregate(Proof.from_dict(p).verdict for p in report["proofs"])


def bundled_fixtures() -> Path:
    return Path(str(resources.files("tablenli") / "data" / "fixtures"))


def make_backend(config: EngineConfig, fixtures: str | Path | None = None) -> Backend:
    b = config.backend
    if b.kind == "mock":
        return MockBackend.from_dir(fixtures or b.fixtures or bundled_fixtures())
    if b.kind == "live":
        return HttpBackend.from_env(url=b.url, model=b.model, api_key=b.key,
                                    timeout=b.timeout, retries=config.retries)
    raise UsageError(f"unknown backend kind {b.kind!r}")


class Engine:
    def __init__(self, config: EngineConfig | None = None, gateway: Gateway | None = None):
        self.config = config or EngineConfig()
        if gateway is None:
            gateway = Gateway(make_backend(self.config), retries=self.config.retries,
                              temperature=self.config.temperature,
                              max_in_flight=self.config.max_in_flight,
                              triggers=self.config.lexicon())
        self.gateway = gateway

    @classmethod
    def with_backend(cls, backend: Backend, config: EngineConfig | None = None) -> "Engine":
        config = config or EngineConfig()
        gw = Gateway(backend, retries=config.retries, temperature=config.temperature,
                     max_in_flight=config.max_in_flight, triggers=config.lexicon())
        return cls(config, gw)

    # -- decomposition

    def decompose(self, claim: str, claim_id: str = "") -> tuple[list[Subclaim], list[Diagnostic], bool]:
        """Subclaims, diagnostics, and whether decomposition succeeded."""
        diags: list[Diagnostic] = []
        try:
            trace = self.gateway.decompose(claim)
        except GATEWAY_ERRORS as exc:
            log.info("decomposition unavailable, keeping claim whole: %s", exc)
            diags.append(Diagnostic(None, message=f"decomposition failed: {exc}"))
            return [Subclaim(claim, 0, claim_id)], diags, False
        diags.append(Diagnostic(None, trace))
        texts = trace.parsed if trace.validated else None
        if not texts:
            diags.append(Diagnostic(None, message="decomposition output invalid; claim kept whole"))
            return [Subclaim(claim, 0, claim_id)], diags, False
        return [Subclaim(t, i, claim_id) for i, t in enumerate(texts)], diags, True

    # -- single subclaim

    def verify_subclaim(self, subclaim: str | Subclaim, tables: Sequence[Table]) -> tuple[Proof, list[Diagnostic]]:
        sc = subclaim if isinstance(subclaim, Subclaim) else Subclaim(subclaim, 0)
        text, idx = sc.text, sc.index
        diags: list[Diagnostic] = []

        try:
            qg = self.gateway.generate_questions(text, tables)
        except GATEWAY_ERRORS as exc:
            diags.append(Diagnostic(idx, message=f"question generation failed: {exc}"))
            return degraded_proof(text, "question generation failed"), diags
        diags.append(Diagnostic(idx, qg))
        pairs = qg.parsed or []
        if not pairs:
            return degraded_proof(text, "no valid questions"), diags

        qa_pairs: list[QAPair] = []
        failures = 0
        for pair in pairs:
            try:
                qa = self.gateway.answer_question(text, pair.question, tables)
            except GATEWAY_ERRORS as exc:
                diags.append(Diagnostic(idx, message=f"question answering failed: {exc}"))
                failures += 1
                qa_pairs.append(QAPair(pair.span, None, pair.question, None))
                continue
            diags.append(Diagnostic(idx, qa))
            rationale = qa.parsed if qa.validated else None
            if rationale is None:
                failures += 1
                qa_pairs.append(QAPair(pair.span, None, pair.question, None))
            else:
                qa_pairs.append(QAPair(pair.span, rationale.answer, pair.question, rationale.extraction))
        if failures == len(pairs):
            return degraded_proof(text, "every question failed"), diags

        extractions = [p.extraction for p in qa_pairs if p.extraction]
        natop_traces: list[GenerationTrace] = []
        try:
            builder = ProofBuilder(text, qa_pairs, extractions, policy=self.config.halo,
                                   oracle=self.gateway.natop_oracle(natop_traces),
                                   aliases=self.config.aliases)
            proof = builder.best()
        except NatlogError as exc:
            diags.append(Diagnostic(idx, message=f"alignment failed: {exc}"))
            return degraded_proof(text, str(exc)), diags
        diags.extend(Diagnostic(idx, t) for t in natop_traces)
        return proof, diags

    # -- whole claim

    def verify_claim(self, claim: str, tables: Sequence[Table], claim_id: str = "",
                     decompose: bool = True) -> VerdictReport:
        if decompose:
            subclaims, diags, ok = self.decompose(claim, claim_id)
        else:
            subclaims, diags, ok = [Subclaim(claim, 0, claim_id)], [], False
        workers = max(1, min(self.config.parallel, len(subclaims)))
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(lambda s: self.verify_subclaim(s, tables), subclaims))
        else:
            results = [self.verify_subclaim(s, tables) for s in subclaims]
        proofs = [p for p, _ in results]
        for _, d in results:
            diags.extend(d)
        return VerdictReport(
            claim_id=claim_id,
            claim=claim,
            subclaims=subclaims,
            proofs=proofs,
            verdict=aggregate(p.verdict for p in proofs),
            execution_found=not any(p.degraded for p in proofs),
            diagnostics=diags,
            decomposed=ok,
        )


def degraded_proof(text: str, why: str) -> Proof:
    step = ProofStep(text.strip(), NatOp.INDEP, None, None, None, 0, len(text), why)
    return Proof.build(text, [step], degraded=True)
