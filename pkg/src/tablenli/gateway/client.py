"""Validate-retry-repair loop around a backend."""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

from ..arith import TriggerLexicon
from ..numerals import NatOp
from ..tables import Table, extract_numbers, linearize_all
from .backends import Backend
from .prompts import Role, render_prompt
from .validators import (
    OutputViolation,
    QGPair,
    Rationale,
    Violation,
    repair_qg_output,
    validate_decomposition,
    validate_natop_answer,
    validate_qa_output,
    validate_qg_output,
)

log = logging.getLogger(__name__)

MAX_TOKENS = {
    Role.QUESTION_GENERATION: 256,
    Role.QUESTION_ANSWERING: 256,
    Role.DECOMPOSITION: 256,
    Role.NATOP_QUERY: 8,
}


class GatewayError(RuntimeError):
    pass


@dataclass(frozen=True)
class GenRequest:
    prompt: str
    role: Role
    max_tokens: int = 256
    stop: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "role", Role(self.role))
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")


@dataclass
class GenerationTrace:
    role: Role
    prompt: str
    raw_output: str = ""
    validated: bool = False
    violations: list[Violation] = field(default_factory=list)
    repaired_output: str | None = None
    attempts: int = 0
    parsed: Any = None
    flags: list[Violation] = field(default_factory=list)
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "role": self.role.value,
            "raw_output": self.raw_output,
            "validated": self.validated,
            "violations": [v.to_dict() for v in self.violations],
            "repaired_output": self.repaired_output,
            "attempts": self.attempts,
            "flags": [v.to_dict() for v in self.flags],
            "error": self.error,
        }


def corrective_suffix(violations: Sequence[Violation]) -> str:
    lines = "\n".join(f"- {v.kind}: {v.detail or v.span}" for v in violations)
    return f"\n\nYour previous output was rejected:\n{lines}\nTry again and follow the format exactly.\n"


Validator = Callable[[str], Any]
Repairer = Callable[[str], Any]


class Gateway:
    """Role-aware front end to a backend; safe to share across threads."""

    def __init__(
        self,
        backend: Backend,
        *,
        retries: int = 3,
        temperature: float = 0.0,
        max_in_flight: int = 4,
        max_tokens_ceiling: int = 1024,
        triggers: TriggerLexicon | None = None,
        template_version: str = "v1",
    ):
        self.backend = backend
        self.retries = retries
        self.temperature = temperature
        self.max_tokens_ceiling = max_tokens_ceiling
        self.triggers = triggers or TriggerLexicon()
        self.template_version = template_version
        self._slots = threading.BoundedSemaphore(max(1, max_in_flight))

    # -- prompt construction, shared with the fixture builder

    def prompt_for(self, role: Role, **fields) -> str:
        if role is Role.QUESTION_ANSWERING:
            fields.setdefault("triggers", ", ".join(sorted(self.triggers.as_dict())))
        if "tables" in fields:
            fields["evidence"] = linearize_all(fields.pop("tables"))
        return render_prompt(role, fields, self.template_version)

    # -- core loop

    def request(self, role: Role, prompt: str) -> GenRequest:
        return GenRequest(prompt, role, MAX_TOKENS[role])

    def complete(self, request: GenRequest, validator: Validator,
                 repair: Repairer | None = None) -> GenerationTrace:
        if request.max_tokens > self.max_tokens_ceiling:
            raise ValueError(f"max_tokens {request.max_tokens} exceeds ceiling {self.max_tokens_ceiling}")
        trace = GenerationTrace(request.role, request.prompt)
        prompt = request.prompt
        for attempt in range(1, self.retries + 2):
            trace.attempts = attempt
            with self._slots:
                raw = self.backend.generate(prompt, max_tokens=request.max_tokens,
                                            stop=request.stop, temperature=self.temperature)
            trace.raw_output = raw
            try:
                parsed = validator(raw)
            except OutputViolation as exc:
                trace.violations = exc.violations
                if not all(v.retryable for v in exc.violations) or attempt > self.retries:
                    break
                prompt = request.prompt + corrective_suffix(exc.violations)
                continue
            trace.validated, trace.violations, trace.parsed = True, [], parsed
            trace.flags = list(getattr(parsed, "corrections", ()))
            return trace
        if repair is not None:
            fixed = repair(trace.raw_output)
            if fixed:
                trace.parsed = fixed
                trace.repaired_output = _render_repair(fixed)
        return trace

    # -- roles

    def generate_questions(self, claim: str, tables: Sequence[Table]) -> GenerationTrace:
        prompt = self.prompt_for(Role.QUESTION_GENERATION, claim=claim, tables=tables)
        return self.complete(
            self.request(Role.QUESTION_GENERATION, prompt),
            lambda raw: validate_qg_output(raw, claim),
            lambda raw: repair_qg_output(raw, claim),
        )

    def answer_question(self, claim: str, question: str, tables: Sequence[Table]) -> GenerationTrace:
        prompt = self.prompt_for(Role.QUESTION_ANSWERING, claim=claim, question=question, tables=tables)
        inventory = extract_numbers(tables)
        return self.complete(
            self.request(Role.QUESTION_ANSWERING, prompt),
            lambda raw: validate_qa_output(raw, tables, self.triggers, inventory),
        )

    def decompose(self, claim: str) -> GenerationTrace:
        prompt = self.prompt_for(Role.DECOMPOSITION, claim=claim)
        return self.complete(self.request(Role.DECOMPOSITION, prompt),
                             lambda raw: validate_decomposition(raw, claim))

    def query_natop(self, claim_span: str, evidence_span: str) -> GenerationTrace:
        prompt = self.prompt_for(Role.NATOP_QUERY, claim_span=claim_span, evidence_span=evidence_span)
        return self.complete(self.request(Role.NATOP_QUERY, prompt), validate_natop_answer)

    def natop_oracle(self, sink: list | None = None) -> Callable[[str, str], NatOp]:
        """Adapter for natlog: raises on failure so the caller can fall back to #."""
        def oracle(claim_span: str, evidence: str) -> NatOp:
            trace = self.query_natop(claim_span, evidence)
            if sink is not None:
                sink.append(trace)
            if not trace.validated:
                raise GatewayError("NatOp query output failed validation")
            return trace.parsed
        return oracle


def _render_repair(parsed) -> str:
    if isinstance(parsed, list) and parsed and isinstance(parsed[0], QGPair):
        return " ".join(f"{i}. {p.question} {p.span}" for i, p in enumerate(parsed, 1))
    if isinstance(parsed, Rationale):
        return str(parsed.to_dict())
    return str(parsed)
