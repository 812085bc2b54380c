"""Output contracts for each generation role.

Logit masking is not available through a completion API, so the accepted
output language is enforced after the fact: a validator either returns the
parsed value or raises OutputViolation listing what was wrong.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from ..arith import (
    AnswerParseError,
    ArithAnswer,
    ArithError,
    ArithExpr,
    ArithFunction,
    TriggerLexicon,
    eval_expr,
    format_number,
    parse_arith_answer,
    render_answer,
)
from ..numerals import NatOp, NumeralError
from ..tables import Table, extract_numbers, number_tokens

RETRYABLE = frozenset({"format", "span", "number", "trigger", "arity"})


@dataclass(frozen=True)
class Violation:
    kind: str
    span: str = ""
    detail: str = ""

    @property
    def retryable(self) -> bool:
        return self.kind in RETRYABLE

    def to_dict(self) -> dict:
        return {"kind": self.kind, "span": self.span, "detail": self.detail}


class OutputViolation(ValueError):
    def __init__(self, violations: Sequence[Violation], partial=None):
        self.violations = list(violations)
        self.partial = partial
        super().__init__("; ".join(f"{v.kind}: {v.detail or v.span}" for v in self.violations))


# ---------------------------------------------------------------- enumerations

_ASSOC_LABEL = re.compile(r"\d+\.\s*Associated claim span[^:]*:", re.I)


def split_enumeration(text: str) -> list[str]:
    """Items of ``1. ... 2. ...``; markers must count up from 1."""
    body = text.strip()
    m = re.match(r"1\.\s+", body)
    if not m:
        return []
    items, pos, k = [], m.end(), 2
    while True:
        nxt = re.compile(rf"(?:(?<=\s)|^){k}\.\s+").search(body, pos)
        if not nxt:
            items.append(body[pos:].strip())
            return items
        items.append(body[pos:nxt.start()].strip())
        pos, k = nxt.end(), k + 1


@dataclass(frozen=True)
class QGPair:
    question: str
    span: str


def _clean_span(raw: str) -> str:
    span = raw.strip().strip("[]").strip()
    if len(span) >= 2 and span[0] == span[-1] and span[0] in "\"'":
        span = span[1:-1]
    return span.strip()


def _qg_items(text: str) -> tuple[list[tuple[str, str]], list[Violation]]:
    items, violations = [], []
    body = _ASSOC_LABEL.sub(" ", text)
    parts = split_enumeration(body)
    if not parts:
        return [], [Violation("format", text[:40], "expected a numbered list '1. question? span'")]
    for part in parts:
        bracket = re.fullmatch(r"\[(.+?)\]\s*\[(.+)\]", part, re.S)
        if bracket:
            q, span = bracket.group(1).strip(), bracket.group(2)
        elif "?" in part:
            q, _, span = part.partition("?")
            q += "?"
        else:
            violations.append(Violation("format", part, "item has no question mark"))
            continue
        span = _clean_span(span)
        if not q.strip("? ") or not span:
            violations.append(Violation("format", part, "empty question or span"))
            continue
        items.append((q.strip(), span))
    return items, violations


def _span_in_claim(span: str, claim: str) -> str | None:
    if span in claim:
        return span
    trimmed = span.rstrip(".")
    return trimmed if trimmed and trimmed in claim else None


def validate_qg_output(text: str, claim: str) -> list[QGPair]:
    items, violations = _qg_items(text)
    pairs, seen = [], set()
    for q, span in items:
        fixed = _span_in_claim(span, claim)
        if fixed is None:
            violations.append(Violation("span", span, "span is not a substring of the claim"))
            continue
        key = q.casefold()
        if key in seen:
            continue
        seen.add(key)
        pairs.append(QGPair(q, fixed))
    if violations or not pairs:
        if not violations:
            violations.append(Violation("format", "", "no questions"))
        raise OutputViolation(violations, pairs)
    return pairs


def trim_to_claim(span: str, claim: str) -> str | None:
    """Longest prefix or suffix of ``span`` that occurs in ``claim``."""
    for length in range(len(span), 0, -1):
        for cand in (span[:length], span[len(span) - length:]):
            cand = cand.strip()
            if cand and any(ch.isalnum() for ch in cand) and cand in claim:
                return cand
    return None


def repair_qg_output(text: str, claim: str) -> list[QGPair]:
    items, _ = _qg_items(text)
    pairs, seen = [], set()
    for q, span in items:
        fixed = _span_in_claim(span, claim) or trim_to_claim(span, claim)
        if fixed is None or q.casefold() in seen:
            continue
        seen.add(q.casefold())
        pairs.append(QGPair(q, fixed))
    return pairs


def validate_decomposition(text: str, claim: str = "") -> list[str]:
    parts = split_enumeration(text)
    subclaims, violations, seen = [], [], set()
    if not parts:
        violations.append(Violation("format", text[:40], "expected a numbered list of subclaims"))
    for part in parts:
        if not part or not any(ch.isalpha() for ch in part):
            violations.append(Violation("format", part, "empty subclaim"))
            continue
        if part.casefold() not in seen:
            seen.add(part.casefold())
            subclaims.append(part)
    if violations:
        raise OutputViolation(violations, subclaims)
    return subclaims


# ---------------------------------------------------------------- rationale

@dataclass(frozen=True)
class Rationale:
    extraction: str | None
    compute: str | None
    answer: ArithAnswer | None
    stated_answer: str | None = None
    corrections: tuple[Violation, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "extraction": self.extraction,
            "compute": self.compute,
            "answer": self.answer.rendered if self.answer else None,
            "stated_answer": self.stated_answer,
            "corrections": [v.to_dict() for v in self.corrections],
        }


_LABEL_RE = re.compile(
    r"(?im)^\s*(?P<label>extraction|compute|computation|answer|arithexp)\b[^:\n]{0,16}:"
)
_LABEL_KEY = {"extraction": "extraction", "compute": "compute", "computation": "compute",
              "answer": "answer", "arithexp": "answer"}
_NA = {"n/a", "na", "none"}
_MIN_WORDS = re.compile(r"\b(?:lowest|smallest|fewest|least|minimum|min)\b", re.I)
_SUPER_ITEM = re.compile(r"^(?P<label>.*?)[\s(:]+(?P<num>[+-]?[\d,]+(?:\.\d+)?%?)\)?$")


def _sections(text: str) -> dict[str, str]:
    found = list(_LABEL_RE.finditer(text))
    out: dict[str, str] = {}
    for i, m in enumerate(found):
        end = found[i + 1].start() if i + 1 < len(found) else len(text)
        key = _LABEL_KEY[m["label"].lower()]
        out.setdefault(key, text[m.end():end].strip())
    return out


def _is_na(text: str | None) -> bool:
    return text is None or text.strip().rstrip(".").lower() in _NA


def _split_items(text: str) -> list[str]:
    items = re.split(r",\s*(?:and\s+)?|\s+and\s+", text)
    return [i.strip() for i in items if i.strip()]


def _stated_result(compute: str) -> str | None:
    if "=" not in compute:
        return None
    return compute.rsplit("=", 1)[1].strip().rstrip(".").strip() or None


def recompute(fn: ArithFunction, trigger: str, compute: str, stated: ArithAnswer | None) -> ArithExpr:
    """Rebuild the expression named by a compute line."""
    body = compute.strip()[len(trigger):]
    lhs = body.rsplit("=", 1)[0] if "=" in body else body
    lhs = lhs.strip().rstrip(".")
    if fn is ArithFunction.COPY:
        if stated is None:
            raise ArithError("COPY needs an answer to copy")
        return ArithExpr(fn, (stated.result,), percent=stated.percent)
    if fn is ArithFunction.COUNT:
        return ArithExpr(fn, tuple(_split_items(lhs)))
    if fn is ArithFunction.SUPER:
        pairs = []
        for item in _split_items(lhs):
            m = _SUPER_ITEM.match(item)
            if not m:
                raise ArithError(f"cannot read a label and value from {item!r}")
            parsed = number_tokens(m["num"])
            if not parsed:
                raise ArithError(f"cannot read a value from {item!r}")
            pairs.append((parsed[0][1].exact, m["label"].strip()))
        direction = "min" if _MIN_WORDS.search(compute) else "max"
        return ArithExpr(fn, tuple(pairs), direction=direction)
    toks = number_tokens(lhs)
    percent = any(p.percent for _, p in toks)
    return ArithExpr(fn, tuple(p.exact for _, p in toks), percent=percent)


def validate_qa_output(
    text: str,
    tables: Sequence[Table],
    triggers: TriggerLexicon | None = None,
    inventory: frozenset[Fraction] | None = None,
) -> Rationale:
    triggers = triggers or TriggerLexicon()
    inventory = extract_numbers(tables) if inventory is None else inventory
    sec = _sections(text)
    missing = [k for k in ("extraction", "compute", "answer") if k not in sec]
    if "extraction" in sec and _is_na(sec["extraction"]):
        return Rationale(None, sec.get("compute"), None, sec.get("answer"))
    if missing:
        raise OutputViolation([Violation("format", "", f"missing {', '.join(missing)} line")])

    extraction, compute, answer_text = sec["extraction"], sec["compute"], sec["answer"]
    violations: list[Violation] = []
    for tok, parsed in number_tokens(extraction):
        if parsed.exact not in inventory:
            violations.append(Violation("number", tok, f"{tok} does not occur in any table cell"))

    if _is_na(compute) or _is_na(answer_text):
        if violations:
            raise OutputViolation(violations)
        return Rationale(extraction, compute, None, answer_text)

    matched = triggers.match(compute)
    if matched is None:
        violations.append(Violation("trigger", compute.split(" ", 1)[0],
                                    "compute must start with a trigger word"))
    stated = None
    try:
        stated = parse_arith_answer(answer_text)
    except AnswerParseError as exc:
        violations.append(Violation("format", answer_text, str(exc)))
    if violations:
        raise OutputViolation(violations)

    fn, trigger = matched
    flags: list[Violation] = []
    if stated.function is not fn:
        flags.append(Violation("function_mismatch", answer_text,
                               f"answer names {stated.function.value}, compute names {fn.value}"))
    if fn is ArithFunction.COPY and stated.is_numeric and stated.result not in inventory:
        raise OutputViolation([Violation("number", answer_text,
                                         "copied value does not occur in any table cell")])
    try:
        expr = recompute(fn, trigger, compute, stated)
        answer = eval_expr(expr)
    except ArithError as exc:
        raise OutputViolation([Violation("arity", compute, str(exc))]) from None

    if fn is not ArithFunction.COPY:
        claimed = _stated_result(compute)
        if stated.function is fn:
            claimed = stated.rendered.split(" ", 1)[1]
        if claimed is not None and not _same_result(claimed, answer):
            flags.append(Violation("arithmetic_mismatch", claimed,
                                   f"stated {claimed}, recomputed {answer.rendered.split(' ', 1)[1]}"))
    elif stated.percent and not answer.percent:
        answer = ArithAnswer(answer.function, answer.result,
                             render_answer(answer.function, answer.result, True), answer.expr, True)
    return Rationale(extraction, compute, answer, answer_text, tuple(flags))


def _same_result(claimed: str, answer: ArithAnswer) -> bool:
    if isinstance(answer.result, str):
        return claimed.strip().casefold() == answer.result.strip().casefold()
    toks = number_tokens(claimed)
    if not toks:
        return False
    value = toks[0][1].exact
    return format_number(value) == format_number(answer.result)


# ---------------------------------------------------------------- natop query

_OPTION_RE = re.compile(r"\b(EQ|FE|RE|NEG|ALT|IND|COV)\b")


def validate_natop_answer(text: str) -> NatOp:
    m = _OPTION_RE.search(text.upper())
    if not m:
        raise OutputViolation([Violation("format", text[:20], "expected one option code")])
    try:
        return NatOp.parse(m.group(1))
    except NumeralError as exc:  # pragma: no cover - regex guards the codes
        raise OutputViolation([Violation("format", text[:20], str(exc))]) from None
