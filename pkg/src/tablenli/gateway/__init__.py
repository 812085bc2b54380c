from .backends import Backend, BackendError, FixtureError, HttpBackend, MockBackend, prompt_hash
from .client import Gateway, GatewayError, GenerationTrace, GenRequest, corrective_suffix
from .prompts import Role, TemplateError, render_prompt
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

__all__ = [
    "Backend", "BackendError", "FixtureError", "HttpBackend", "MockBackend", "prompt_hash",
    "Gateway", "GatewayError", "GenerationTrace", "GenRequest", "corrective_suffix",
    "Role", "TemplateError", "render_prompt",
    "OutputViolation", "QGPair", "Rationale", "Violation", "repair_qg_output",
    "validate_decomposition", "validate_natop_answer", "validate_qa_output", "validate_qg_output",
]
