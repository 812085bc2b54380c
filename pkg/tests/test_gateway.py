import httpx
import pytest

from tablenli.arith import ArithFunction
from tablenli.gateway import (
    BackendError,
    FixtureError,
    Gateway,
    GenRequest,
    HttpBackend,
    MockBackend,
    OutputViolation,
    Role,
    TemplateError,
    render_prompt,
    repair_qg_output,
    validate_decomposition,
    validate_natop_answer,
    validate_qa_output,
    validate_qg_output,
)
from tablenli.numerals import NatOp
from tablenli.tables import parse_table

CLAIM = "In 2018, Ortegal had three municipalities."


# -- prompts

def test_prompts_are_deterministic(ortegal_table):
    gw = Gateway(MockBackend())
    a = gw.prompt_for(Role.QUESTION_GENERATION, claim=CLAIM, tables=[ortegal_table])
    b = gw.prompt_for(Role.QUESTION_GENERATION, claim=CLAIM, tables=[ortegal_table])
    assert a == b
    assert CLAIM in a and "Cerdido" in a


def test_unknown_role_and_missing_field():
    with pytest.raises(TemplateError):
        render_prompt("summarize", {})
    with pytest.raises(TemplateError):
        render_prompt(Role.DECOMPOSITION, {})


def test_gen_request_rejects_bad_tokens():
    with pytest.raises(ValueError):
        GenRequest("p", Role.DECOMPOSITION, max_tokens=0)


# -- question generation

def test_qg_parses_pairs():
    pairs = validate_qg_output("1. Where? Ortegal 2. How many municipalities? three", CLAIM)
    assert [(p.question, p.span) for p in pairs] == [("Where?", "Ortegal"), ("How many municipalities?", "three")]


def test_qg_span_violation():
    with pytest.raises(OutputViolation) as exc:
        validate_qg_output("1. Where? Ortegall", CLAIM)
    assert exc.value.violations[0].kind == "span"
    assert exc.value.violations[0].retryable


def test_qg_empty_output():
    with pytest.raises(OutputViolation) as exc:
        validate_qg_output("", CLAIM)
    assert exc.value.violations[0].kind == "format"


def test_qg_repair_trims_span():
    pairs = repair_qg_output("1. How many? three municipalities in Galicia", CLAIM)
    assert pairs[0].span == "three municipalities"


# -- decomposition and natop

def test_decomposition():
    assert validate_decomposition("1. A is B. 2. C is D.") == ["A is B.", "C is D."]
    with pytest.raises(OutputViolation):
        validate_decomposition("no list here")


@pytest.mark.parametrize("text,op", [("EQ", NatOp.EQUIV), ("Answer: ALT", NatOp.ALT), ("fe", NatOp.FWD)])
def test_natop_answer(text, op):
    assert validate_natop_answer(text) is op


def test_natop_answer_rejects_noise():
    with pytest.raises(OutputViolation):
        validate_natop_answer("maybe")


# -- question answering

def test_qa_count_rationale(ortegal_table):
    text = ("Extraction: Ortegal has the municipalities Carino, Cerdido, Manon, and Ortigueira.\n"
            "Compute: Counting Carino, Cerdido, Manon, Ortigueira = 4\nAnswer: COUNT 4")
    r = validate_qa_output(text, [ortegal_table])
    assert r.answer.function is ArithFunction.COUNT
    assert r.answer.rendered == "COUNT 4"
    assert not r.corrections


def test_qa_number_violation(ortegal_table):
    text = "Extraction: Cariño had 9999 people.\nCompute: No computation required.\nAnswer: COPY 9999"
    with pytest.raises(OutputViolation) as exc:
        validate_qa_output(text, [ortegal_table])
    assert any(v.kind == "number" and v.span == "9999" for v in exc.value.violations)


def test_qa_arithmetic_mismatch_is_recomputed():
    table = parse_table([["a", "b"], ["2", "2"]])
    r = validate_qa_output("Extraction: a is 2 and b is 2.\nCompute: Adding 2 + 2 = 5\nAnswer: SUM 5", [table])
    assert r.answer.rendered == "SUM 4"
    assert [c.kind for c in r.corrections] == ["arithmetic_mismatch"]


def test_qa_missing_lines(ortegal_table):
    with pytest.raises(OutputViolation):
        validate_qa_output("Answer: COPY 4", [ortegal_table])


# -- backends

def test_mock_backend_lookup():
    mock = MockBackend()
    mock.add("out", prompt="p")
    assert mock.generate("p") == "out"
    with pytest.raises(FixtureError) as exc:
        mock.generate("q")
    assert isinstance(exc.value, BackendError)


def _http(handler, retries=3):
    return HttpBackend("http://llm/v1/completions", retries=retries, backoff=0,
                       transport=httpx.MockTransport(handler))


def test_http_backend_retries_then_succeeds():
    calls = []

    def handler(request):
        calls.append(request)
        if len(calls) < 3:
            return httpx.Response(503)
        return httpx.Response(200, json={"choices": [{"text": "EQ"}]})

    assert _http(handler).generate("p") == "EQ"
    assert len(calls) == 3


def test_http_backend_timeout_exhausts_retries():
    calls = []

    def handler(request):
        calls.append(request)
        raise httpx.ReadTimeout("slow", request=request)

    with pytest.raises(BackendError):
        _http(handler).generate("p")
    assert len(calls) == 3


def test_http_backend_client_error_is_not_retried():
    calls = []

    def handler(request):
        calls.append(request)
        return httpx.Response(400, text="bad")

    with pytest.raises(BackendError):
        _http(handler).generate("p")
    assert len(calls) == 1


def test_http_backend_needs_url():
    with pytest.raises(BackendError):
        HttpBackend("")


# -- gateway loop

class Scripted:
    def __init__(self, outputs):
        self.outputs = list(outputs)
        self.prompts = []

    def generate(self, prompt, **kw):
        self.prompts.append(prompt)
        return self.outputs.pop(0)


def test_gateway_retries_with_corrective_suffix():
    backend = Scripted(["garbage", "EQ"])
    trace = Gateway(backend).query_natop("a", "b")
    assert trace.validated and trace.parsed is NatOp.EQUIV
    assert trace.attempts == 2
    assert "rejected" in backend.prompts[1]


def test_gateway_gives_up_after_retries():
    backend = Scripted(["x"] * 10)
    trace = Gateway(backend, retries=3).query_natop("a", "b")
    assert not trace.validated
    assert trace.attempts == 4
    assert trace.violations


def test_gateway_repairs_qg(ortegal_table):
    backend = Scripted(["1. How many? three municipalities in Galicia"] * 4)
    trace = Gateway(backend).generate_questions(CLAIM, [ortegal_table])
    assert not trace.validated
    assert trace.parsed[0].span == "three municipalities"
    assert trace.repaired_output


def test_natop_oracle_raises_on_failure():
    from tablenli.gateway import GatewayError
    oracle = Gateway(Scripted(["?"] * 10), retries=0).natop_oracle()
    with pytest.raises(GatewayError):
        oracle("a", "b")


def test_max_tokens_ceiling():
    gw = Gateway(Scripted(["EQ"]), max_tokens_ceiling=4)
    with pytest.raises(ValueError):
        gw.complete(GenRequest("p", Role.QUESTION_GENERATION, 256), validate_natop_answer)
