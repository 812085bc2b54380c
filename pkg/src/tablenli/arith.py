"""Permissible arithmetic functions over evidence and the ``NAME result`` answer grammar."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from fractions import Fraction
from typing import Mapping, Union

from .tables import parse_number


class ArithError(ValueError):
    pass


class ArityError(ArithError):
    """Wrong number of arguments for a function."""


class ArgumentTypeError(ArithError, TypeError):
    """Text passed where a number is required."""


class AnswerParseError(ArithError):
    pass


class ArithFunction(str, Enum):
    COUNT = "COUNT"
    SUM = "SUM"
    DIFF = "DIFF"
    AVERAGE = "AVERAGE"
    MIN = "MIN"
    MAX = "MAX"
    COMP = "COMP"
    SUPER = "SUPER"
    COPY = "COPY"


ALIASES = {"FILTER": ArithFunction.COPY}

ANSWER_RE = re.compile(r"^(COUNT|SUM|DIFF|AVERAGE|MIN|MAX|COMP|SUPER|COPY|FILTER) .+$", re.S)

Number = Union[int, Fraction, Decimal]
Result = Union[Fraction, str]

# The no-computation phrase is matched as a prefix, so "No computation is
# required." and "No computation required." both resolve to COPY.
DEFAULT_TRIGGERS: dict[str, ArithFunction] = {
    "Adding": ArithFunction.SUM,
    "Summing": ArithFunction.SUM,
    "Counting": ArithFunction.COUNT,
    "Subtracting": ArithFunction.DIFF,
    "Comparing": ArithFunction.COMP,
    "Averaging": ArithFunction.AVERAGE,
    "Minimum": ArithFunction.MIN,
    "Maximum": ArithFunction.MAX,
    "Ranking": ArithFunction.SUPER,
    "No computation": ArithFunction.COPY,
}


class TriggerLexicon:
    """Trigger word -> function map; trigger sets must be disjoint."""

    def __init__(self, triggers: Mapping[str, ArithFunction | str] | None = None):
        merged = dict(DEFAULT_TRIGGERS)
        for word, fn in (triggers or {}).items():
            merged[word] = _coerce_function(fn)
        folded: dict[str, ArithFunction] = {}
        for word, fn in merged.items():
            key = word.casefold()
            if key in folded and folded[key] is not fn:
                raise ValueError(f"trigger {word!r} mapped to two functions")
            folded[key] = fn
        self._words = merged
        # longest first so "No computation" beats any shorter overlapping entry
        self._ordered = sorted(folded.items(), key=lambda kv: -len(kv[0]))

    def words_for(self, fn: ArithFunction) -> set[str]:
        return {w for w, f in self._words.items() if f is fn}

    def match(self, compute_line: str) -> tuple[ArithFunction, str] | None:
        text = compute_line.strip().casefold()
        for word, fn in self._ordered:
            if text.startswith(word) and (
                len(text) == len(word) or not text[len(word)].isalnum()
            ):
                return fn, compute_line.strip()[: len(word)]
        return None

    def as_dict(self) -> dict[str, str]:
        return {w: f.value for w, f in self._words.items()}


def _coerce_function(fn: ArithFunction | str) -> ArithFunction:
    if isinstance(fn, ArithFunction):
        return fn
    name = str(fn).upper()
    if name in ALIASES:
        return ALIASES[name]
    try:
        return ArithFunction(name)
    except ValueError:
        raise AnswerParseError(f"unknown function {fn!r}") from None


@dataclass(frozen=True)
class ArithExpr:
    function: ArithFunction
    args: tuple = ()
    direction: str = "max"  # SUPER only
    percent: bool = False

    def __post_init__(self):
        object.__setattr__(self, "function", _coerce_function(self.function))
        object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True)
class ArithAnswer:
    function: ArithFunction
    result: Result
    rendered: str
    expr: ArithExpr | None = field(default=None, compare=False)
    percent: bool = False

    @property
    def is_numeric(self) -> bool:
        return isinstance(self.result, Fraction)

    def __str__(self) -> str:
        return self.rendered


def format_number(value: Number) -> str:
    """Comma thousands separators, at most two decimals, no trailing zeros."""
    frac = Fraction(value)
    if frac.denominator == 1:
        return f"{frac.numerator:,}"
    q = (Decimal(frac.numerator) / Decimal(frac.denominator)).quantize(
        Decimal("0.01"), rounding=ROUND_HALF_UP
    )
    text = f"{q:,.2f}".rstrip("0").rstrip(".")
    return "0" if text in ("-0", "") else text


def render_answer(fn: ArithFunction, result: Result, percent: bool = False) -> str:
    if isinstance(result, str):
        return f"{fn.value} {result}"
    return f"{fn.value} {format_number(result)}{'%' if percent else ''}"


def _num(x) -> Fraction:
    if isinstance(x, bool) or not isinstance(x, (int, Fraction, Decimal)):
        raise ArgumentTypeError(f"expected a number, got {x!r}")
    return Fraction(x)


def _value(arg) -> Result:
    if isinstance(arg, ArithExpr):
        return eval_expr(arg).result
    if isinstance(arg, str):
        return arg
    return _num(arg)


def _check_arity(expr: ArithExpr, n: int) -> None:
    fn = expr.function
    if fn is ArithFunction.COPY and n != 1:
        raise ArityError(f"COPY takes exactly 1 argument, got {n}")
    if fn in (ArithFunction.DIFF, ArithFunction.COMP) and n != 2:
        raise ArityError(f"{fn.value} takes exactly 2 arguments, got {n}")
    if n < 1:
        raise ArityError(f"{fn.value} needs at least 1 argument")


def eval_expr(expr: ArithExpr) -> ArithAnswer:
    """Evaluate ``expr`` bottom-up with exact rational arithmetic."""
    fn = expr.function
    _check_arity(expr, len(expr.args))
    if fn is ArithFunction.SUPER:
        result = _super(expr)
    else:
        vals = [_value(a) for a in expr.args]
        if fn is ArithFunction.COPY:
            result = vals[0]
        elif fn is ArithFunction.COUNT:
            result = Fraction(len(vals))
        else:
            nums = [_num(v) for v in vals]
            if fn is ArithFunction.SUM:
                result = sum(nums, Fraction(0))
            elif fn is ArithFunction.AVERAGE:
                result = sum(nums, Fraction(0)) / len(nums)
            elif fn is ArithFunction.MIN:
                result = min(nums)
            elif fn is ArithFunction.MAX:
                result = max(nums)
            else:  # DIFF and COMP share a formula but not a meaning
                result = nums[0] - nums[1]
    percent = expr.percent and fn is not ArithFunction.COUNT
    return ArithAnswer(fn, result, render_answer(fn, result, percent), expr, percent)


def _super(expr: ArithExpr) -> str:
    if expr.direction not in ("max", "min"):
        raise ArithError(f"SUPER direction must be 'max' or 'min', got {expr.direction!r}")
    pairs = []
    for arg in expr.args:
        if not (isinstance(arg, tuple) and len(arg) == 2):
            raise ArgumentTypeError(f"SUPER expects (value, label) pairs, got {arg!r}")
        value, label = arg
        pairs.append((_num(_value(value)), str(label)))
    pick = max if expr.direction == "max" else min
    # first occurrence wins among equal extremes
    return pick(pairs, key=lambda p: p[0])[1]


def parse_arith_answer(text: str) -> ArithAnswer:
    """Parse ``NAME result``; FILTER is read as COPY."""
    stripped = text.strip()
    head, _, rest = stripped.partition(" ")
    name = head.upper()
    if name in ALIASES:
        fn = ALIASES[name]
    else:
        try:
            fn = ArithFunction(name)
        except ValueError:
            raise AnswerParseError(f"unknown function in answer {text!r}") from None
    rest = rest.strip()
    if not rest:
        raise AnswerParseError(f"answer {text!r} has no result")
    parsed = parse_number(rest.rstrip("."))
    if parsed is not None and not parsed.plus:
        return ArithAnswer(fn, parsed.exact, render_answer(fn, parsed.exact, parsed.percent),
                           None, parsed.percent)
    return ArithAnswer(fn, rest, render_answer(fn, rest))
