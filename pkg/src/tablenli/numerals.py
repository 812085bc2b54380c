"""Set-theoretic reading of numerals.

A claim-side numeral denotes a set of numbers: its reading (exact, at least,
comparative, ...) united with a pragmatic halo. Evidence denotes a set too,
usually a singleton. The NatOp between them falls out of set relations and is
then projected through the monotonicity of the surrounding context.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping

from .arith import ArithAnswer


class NumeralError(ValueError):
    pass


class NatOp(str, Enum):
    EQUIV = "EQ"
    FWD = "FE"
    REV = "RE"
    NEG = "NEG"
    ALT = "ALT"
    COVER = "COV"
    INDEP = "IND"

    @property
    def symbol(self) -> str:
        return _SYMBOLS[self]

    @classmethod
    def parse(cls, text: str) -> "NatOp":
        key = text.strip()
        if key in _BY_TOKEN:
            return _BY_TOKEN[key]
        if key.upper() in _BY_TOKEN:
            return _BY_TOKEN[key.upper()]
        raise NumeralError(f"unknown NatOp {text!r}")


_SYMBOLS = {
    NatOp.EQUIV: "≡", NatOp.FWD: "⊑", NatOp.REV: "⊒", NatOp.NEG: "⋏",
    NatOp.ALT: "|", NatOp.COVER: "⌣", NatOp.INDEP: "#",
}
_BY_TOKEN: dict[str, NatOp] = {}
for _op in NatOp:
    _BY_TOKEN[_op.value] = _op
    _BY_TOKEN[_op.name] = _op
    _BY_TOKEN[_op.symbol] = _op
# ascii spellings seen in printed proofs
_BY_TOKEN.update({"=": NatOp.EQUIV, "<": NatOp.FWD, ">": NatOp.REV, "!": NatOp.NEG,
                  "EQUIVALENCE": NatOp.EQUIV, "INDEPENDENCE": NatOp.INDEP})


# ---------------------------------------------------------------- interval sets

INF = math.inf


@dataclass(frozen=True)
class Interval:
    lo: Fraction | float
    hi: Fraction | float
    lo_closed: bool = True
    hi_closed: bool = True

    def is_empty(self) -> bool:
        if self.lo > self.hi:
            return True
        return self.lo == self.hi and not (self.lo_closed and self.hi_closed)

    def contains_integer(self, floor: int = 0) -> bool:
        lo = max(self.lo, floor) if self.lo != -INF else floor
        lo_closed = self.lo_closed if lo == self.lo else True
        if self.hi == INF:
            return True
        first = math.ceil(lo)
        if first == lo and not lo_closed:
            first += 1
        return first < self.hi or (first == self.hi and self.hi_closed)


class NumberSet:
    """Finite union of real intervals, kept normalized (sorted, merged)."""

    __slots__ = ("parts",)

    def __init__(self, parts: Iterable[Interval] = ()):
        self.parts = _normalize([p for p in parts if not p.is_empty()])

    @classmethod
    def point(cls, v) -> "NumberSet":
        v = Fraction(v)
        return cls([Interval(v, v)])

    @classmethod
    def everything(cls) -> "NumberSet":
        return cls([Interval(-INF, INF, False, False)])

    def union(self, other: "NumberSet") -> "NumberSet":
        return NumberSet(self.parts + other.parts)

    def complement(self) -> "NumberSet":
        out, lo, lo_closed = [], -INF, False
        for p in self.parts:
            out.append(Interval(lo, p.lo, lo_closed, not p.lo_closed))
            lo, lo_closed = p.hi, not p.hi_closed
        out.append(Interval(lo, INF, lo_closed, False))
        return NumberSet(out)

    def intersection(self, other: "NumberSet") -> "NumberSet":
        return self.complement().union(other.complement()).complement()

    def is_empty(self) -> bool:
        return not self.parts

    def issubset(self, other: "NumberSet") -> bool:
        return self.intersection(other.complement()).is_empty()

    def covers_naturals(self) -> bool:
        gaps = self.complement()
        return not any(g.contains_integer(0) for g in gaps.parts if g.hi >= 0)

    def width(self) -> float:
        return float(sum((p.hi - p.lo) for p in self.parts))

    def __contains__(self, v) -> bool:
        return not NumberSet.point(v).intersection(self).is_empty()

    def __eq__(self, other) -> bool:
        return isinstance(other, NumberSet) and self.parts == other.parts

    def __repr__(self) -> str:
        def show(p: Interval) -> str:
            if p.lo == p.hi:
                return f"{{{p.lo}}}"
            return f"{'[' if p.lo_closed else '('}{p.lo}, {p.hi}{']' if p.hi_closed else ')'}"
        return "NumberSet(" + " ∪ ".join(show(p) for p in self.parts) + ")"


def _normalize(parts: list[Interval]) -> list[Interval]:
    if not parts:
        return []
    parts = sorted(parts, key=lambda p: (p.lo, not p.lo_closed))
    merged = [parts[0]]
    for p in parts[1:]:
        last = merged[-1]
        touches = p.lo < last.hi or (p.lo == last.hi and (p.lo_closed or last.hi_closed))
        if touches:
            if p.hi > last.hi or (p.hi == last.hi and p.hi_closed):
                merged[-1] = Interval(last.lo, p.hi, last.lo_closed, p.hi_closed)
        else:
            merged.append(p)
    return merged


# ---------------------------------------------------------------- quantities

class Reading(str, Enum):
    EXACT = "exact"
    AT_LEAST = "at_least"
    AT_MOST = "at_most"
    GREATER_THAN = "greater_than"
    LESS_THAN = "less_than"
    APPROX = "approx"


class Source(str, Enum):
    DIGITS = "digits"
    WORD = "word-numeral"
    SUFFIX_PLUS = "suffix-plus"


@dataclass(frozen=True)
class Quantity:
    value: Fraction
    reading: Reading = Reading.EXACT
    modifier_text: str | None = None
    source: Source = Source.DIGITS
    percent: bool = False
    # +1 for "eight more (...) than", -1 for "eight fewer (...) than"
    relative: int = 0
    text: str = ""

    @property
    def signed_value(self) -> Fraction:
        return -self.value if self.relative < 0 else self.value


@dataclass(frozen=True)
class QuantityMatch:
    start: int
    end: int
    quantity: Quantity


_UNITS = {
    "zero": 0, "one": 1, "two": 2, "three": 3, "four": 4, "five": 5, "six": 6,
    "seven": 7, "eight": 8, "nine": 9, "ten": 10, "eleven": 11, "twelve": 12,
    "thirteen": 13, "fourteen": 14, "fifteen": 15, "sixteen": 16,
    "seventeen": 17, "eighteen": 18, "nineteen": 19, "twenty": 20,
}
_TENS = {"thirty": 30, "forty": 40, "fifty": 50, "sixty": 60, "seventy": 70,
         "eighty": 80, "ninety": 90}
_SCALES = {"hundred": 100, "thousand": 1000, "million": 1_000_000}
_NUMBER_WORDS = {**_UNITS, **_TENS, **_SCALES}
NUMBER_WORDS = frozenset(_NUMBER_WORDS)

_WORD_ALT = "|".join(sorted(_NUMBER_WORDS, key=len, reverse=True))
_WORD_RE = re.compile(
    rf"\b(?:(?P<a>a)\s+(?=(?:hundred|thousand|million)\b))?"
    rf"(?P<words>(?:{_WORD_ALT})(?:(?:\s+|-)(?:{_WORD_ALT}))*)\b",
    re.I,
)
_DIGIT_RE = re.compile(
    r"(?<![\w.,])(?P<num>[+-]?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?)(?P<suffix>%|\+)?(?![\w+])"
)

# cue patterns are matched against the lowercased text just before the numeral
_PRE_CUES: list[tuple[re.Pattern, Reading]] = [
    (re.compile(r"\bno (?:more|greater|larger|higher) than\s+$"), Reading.AT_MOST),
    (re.compile(r"\bno (?:fewer|less|smaller|lower) than\s+$"), Reading.AT_LEAST),
    (re.compile(r"\bat least\s+$"), Reading.AT_LEAST),
    (re.compile(r"\bat most\s+$"), Reading.AT_MOST),
    (re.compile(r"\b(?:larger|more|greater|higher|bigger)\s+than\s+$"), Reading.GREATER_THAN),
    (re.compile(r"\b(?:over|above|exceeding)\s+$"), Reading.GREATER_THAN),
    (re.compile(r"\b(?:fewer|less|smaller|lower)\s+than\s+$"), Reading.LESS_THAN),
    (re.compile(r"\b(?:under|below)\s+$"), Reading.LESS_THAN),
    (re.compile(r"\b(?:about|around|approximately|roughly)\s+$"), Reading.APPROX),
]
_RELATIVE_RE = re.compile(
    r"^\s*(?:\w+\s+){0,2}?(?P<dir>more|fewer|less|greater|larger|higher|lower|smaller)\b"
    r"(?:\s+\w+){0,3}?\s+than\b",
)
_PERCENT_WORD = re.compile(r"^\s*(?:per ?cent|percent)\b", re.I)


def _words_value(words: str) -> int | None:
    total, current = 0, 0
    for w in re.split(r"[\s-]+", words.lower()):
        n = _NUMBER_WORDS[w]
        if n == 100:
            current = (current or 1) * 100
        elif n >= 1000:
            total += (current or 1) * n
            current = 0
        else:
            current += n
    return total + current


def _modifier_of(prefix: str) -> tuple[Reading, str | None]:
    low = prefix.lower()
    for pattern, reading in _PRE_CUES:
        m = pattern.search(low)
        if m:
            return reading, prefix[m.start(): m.end()].strip()
    return Reading.EXACT, None


def find_quantities(text: str) -> list[QuantityMatch]:
    """Every numeral in ``text`` with its character span, in order."""
    hits: list[tuple[int, int, Fraction, Source, bool]] = []
    for m in _DIGIT_RE.finditer(text):
        value = Fraction(Decimal(m["num"].replace(",", "")))
        suffix = m["suffix"]
        src = Source.SUFFIX_PLUS if suffix == "+" else Source.DIGITS
        hits.append((m.start(), m.end(), value, src, suffix == "%"))
    for m in _WORD_RE.finditer(text):
        if any(s < m.end() and m.start() < e for s, e, *_ in hits):
            continue
        hits.append((m.start(), m.end(), Fraction(_words_value(m["words"])), Source.WORD, False))
    hits.sort(key=lambda h: h[0])

    out = []
    for start, end, value, src, percent in hits:
        after = text[end:]
        pm = _PERCENT_WORD.match(after)
        if pm:
            percent = True
        if src is Source.SUFFIX_PLUS:
            reading, modifier = Reading.AT_LEAST, "+"
        else:
            reading, modifier = _modifier_of(text[:start])
        relative = 0
        if reading is Reading.EXACT:
            rm = _RELATIVE_RE.match(after)
            if rm:
                relative = -1 if rm["dir"].lower() in ("fewer", "less", "lower", "smaller") else 1
        q = Quantity(value, reading, modifier, src, percent, relative, text[start:end])
        out.append(QuantityMatch(start, end, q))
    return out


def parse_quantity(span: str) -> Quantity | None:
    """The first numeral in ``span`` with its reading, or None."""
    found = find_quantities(span)
    return found[0].quantity if found else None


# ---------------------------------------------------------------- halo

class HaloMode(str, Enum):
    EMPTY = "empty"
    RELATIVE = "relative"
    ROUNDNESS = "roundness"


ROUNDNESS_BASES = {"10": Fraction(1), "5": Fraction(5), "2.5": Fraction(5, 2)}


def is_round(x, base) -> bool:
    """Whether ``x`` = k * base * 10**y with integer 1 <= k <= 9, y >= 0, x integral."""
    x, base = Fraction(x), Fraction(base)
    if x <= 0 or x.denominator != 1:
        return False
    scale = Fraction(1)
    while base * scale <= x:
        k = x / (base * scale)
        if k.denominator == 1 and 1 <= k <= 9:
            return True
        scale *= 10
    return False


def roundness_class(x) -> str:
    for name, base in ROUNDNESS_BASES.items():
        if is_round(x, base):
            return name
    return "none"


@dataclass(frozen=True)
class HaloPolicy:
    mode: HaloMode = HaloMode.EMPTY
    epsilon: Fraction = Fraction(0)
    roundness_widths: Mapping[str, Fraction] = field(
        default_factory=lambda: {"10": Fraction(1, 20), "5": Fraction(3, 100),
                                 "2.5": Fraction(1, 50), "none": Fraction(0)}
    )
    modifier_widths: Mapping[str, Fraction] = field(default_factory=dict)
    default_modifier_width: Fraction = Fraction(1, 10)

    def __post_init__(self):
        object.__setattr__(self, "mode", HaloMode(self.mode))
        object.__setattr__(self, "epsilon", Fraction(self.epsilon))
        object.__setattr__(self, "default_modifier_width", Fraction(self.default_modifier_width))
        rw = {k: Fraction(v) for k, v in self.roundness_widths.items()}
        mw = {k.lower(): Fraction(v) for k, v in self.modifier_widths.items()}
        if any(w < 0 for w in [self.epsilon, self.default_modifier_width, *rw.values(), *mw.values()]):
            raise NumeralError("halo widths must be non-negative")
        object.__setattr__(self, "roundness_widths", rw)
        object.__setattr__(self, "modifier_widths", mw)

    def modifier_width(self, modifier: str) -> Fraction:
        return self.modifier_widths.get(modifier.lower(), self.default_modifier_width)

    def implicit_width(self, value: Fraction) -> Fraction:
        if self.mode is HaloMode.RELATIVE:
            return self.epsilon
        if self.mode is HaloMode.ROUNDNESS:
            return self.roundness_widths.get(roundness_class(abs(value)), Fraction(0))
        return Fraction(0)


def _band(v: Fraction, w: Fraction) -> NumberSet:
    a, b = v * (1 - w), v * (1 + w)
    return NumberSet([Interval(min(a, b), max(a, b))])


def halo(q: Quantity, policy: HaloPolicy | None = None) -> NumberSet:
    """``{v}`` united with the pragmatic halo H_v under ``policy``."""
    policy = policy or HaloPolicy()
    v = q.signed_value
    width = policy.implicit_width(v)
    if q.reading is Reading.APPROX:
        width = max(width, policy.modifier_width(q.modifier_text or ""))
    return _band(v, width) if width else NumberSet.point(v)


def reading_set(q: Quantity) -> NumberSet:
    v = q.signed_value
    if q.reading is Reading.AT_LEAST:
        return NumberSet([Interval(v, INF, True, False)])
    if q.reading is Reading.AT_MOST:
        return NumberSet([Interval(-INF, v, False, True)])
    if q.reading is Reading.GREATER_THAN:
        return NumberSet([Interval(v, INF, False, False)])
    if q.reading is Reading.LESS_THAN:
        return NumberSet([Interval(-INF, v, False, False)])
    return NumberSet.point(v)


def claim_denotation(q: Quantity, policy: HaloPolicy | None = None) -> NumberSet:
    if q.reading in (Reading.EXACT, Reading.APPROX):
        return reading_set(q).union(halo(q, policy))
    return reading_set(q)


# ---------------------------------------------------------------- environments

class Polarity(str, Enum):
    UPWARD = "upward"
    DOWNWARD = "downward"
    EXACTLY_ONE = "exactly_one"


@dataclass(frozen=True)
class MonotoneEnv:
    polarity: Polarity = Polarity.UPWARD
    trigger: str | None = None
    negated: bool = False


UPWARD = MonotoneEnv()

_NEGATION_RE = re.compile(r"\b(?:not|never|no|without)\b|n't\b", re.I)
_ENV_CUES: list[tuple[re.Pattern, Polarity]] = [
    (re.compile(r"\bexactly one\b", re.I), Polarity.EXACTLY_ONE),
    (re.compile(r"\bat most\b", re.I), Polarity.DOWNWARD),
    (re.compile(r"\bif\b", re.I), Polarity.DOWNWARD),
    (re.compile(r"\b(?:every(?:one|body)?|all|each)\b(?:\s+\w+){0,3}?\s+(?:who|that|which)\b", re.I),
     Polarity.DOWNWARD),
]


def detect_env(text: str) -> MonotoneEnv:
    """Shallow cue-lexicon guess at the monotonicity of a context."""
    m = _NEGATION_RE.search(text)
    if m:
        return MonotoneEnv(Polarity.DOWNWARD, m.group(0), negated=True)
    for pattern, polarity in _ENV_CUES:
        m = pattern.search(text)
        if m:
            return MonotoneEnv(polarity, m.group(0))
    return UPWARD


# ---------------------------------------------------------------- projection

class Projection(str, Enum):
    UP = "up"
    DOWN = "down"
    EXACTLY_ONE = "exactly_one"
    NUM_UP = "num_up"
    NUM_DOWN = "num_down"


_E, _F, _R, _N, _A, _C, _I = (NatOp.EQUIV, NatOp.FWD, NatOp.REV, NatOp.NEG,
                              NatOp.ALT, NatOp.COVER, NatOp.INDEP)
_IDENTITY = {op: op for op in NatOp}
PROJECTION_TABLE: dict[Projection, dict[NatOp, NatOp | tuple[NatOp, ...]]] = {
    Projection.UP: dict(_IDENTITY),
    Projection.DOWN: {_E: _E, _F: _R, _R: _F, _A: _C, _N: _N, _I: _I, _C: _A},
    Projection.EXACTLY_ONE: {op: (_E if op is _E else _I) for op in NatOp},
    Projection.NUM_UP: dict(_IDENTITY),
    Projection.NUM_DOWN: {_E: _F, _F: _R, _R: _F, _A: (_F, _R), _N: _C, _I: _I, _C: _I},
}


def project(rho: Projection | MonotoneEnv, op: NatOp, evidence_lt_claim: bool | None = None) -> NatOp:
    """Apply a projection function.

    ``rho`` may be a MonotoneEnv, read as the general (non-numeric)
    projection for its polarity. Under the at-least reading, alternation
    resolves by value order: a smaller evidence value yields forward
    entailment, as in "everybody who scored 2 goals" ⊑ "... 5 goals".
    """
    if isinstance(rho, MonotoneEnv):
        rho = {Polarity.UPWARD: Projection.UP, Polarity.DOWNWARD: Projection.DOWN,
               Polarity.EXACTLY_ONE: Projection.EXACTLY_ONE}[rho.polarity]
    out = PROJECTION_TABLE[rho][op]
    if isinstance(out, tuple):
        if evidence_lt_claim is None:
            raise NumeralError("alternation under the at-least reading needs the value order")
        return _F if evidence_lt_claim else _R
    return out


def numeric_projection(env: MonotoneEnv, claim: Quantity) -> Projection:
    if env.negated or env.polarity is Polarity.UPWARD:
        return Projection.NUM_UP
    if env.polarity is Polarity.EXACTLY_ONE:
        return Projection.EXACTLY_ONE
    if env.trigger and claim.modifier_text and env.trigger.lower() == claim.modifier_text.lower():
        # the cue is the numeral's own determiner, already in its reading
        return Projection.NUM_UP
    return Projection.NUM_DOWN


# ---------------------------------------------------------------- compare

def relation(x: NumberSet, y: NumberSet, universe_ok: bool = True) -> NatOp:
    """Set relation of ``x`` to ``y`` as a NatOp."""
    if x == y:
        return NatOp.EQUIV
    if x.issubset(y):
        return NatOp.FWD
    if y.issubset(x):
        return NatOp.REV
    if x.intersection(y).is_empty():
        if universe_ok and x.union(y).covers_naturals():
            return NatOp.NEG
        return NatOp.ALT
    return NatOp.INDEP


def _evidence_side(evidence) -> tuple[NumberSet, Fraction]:
    if isinstance(evidence, ArithAnswer):
        if not evidence.is_numeric:
            raise NumeralError(f"non-numeric evidence {evidence.rendered!r}")
        return NumberSet.point(evidence.result), evidence.result
    if isinstance(evidence, Quantity):
        return reading_set(evidence), evidence.signed_value
    if isinstance(evidence, (int, Fraction, Decimal)) and not isinstance(evidence, bool):
        v = Fraction(evidence)
        return NumberSet.point(v), v
    raise NumeralError(f"non-numeric evidence {evidence!r}")


def compare(evidence, claim: Quantity, env: MonotoneEnv | None = None,
            policy: HaloPolicy | None = None) -> NatOp:
    """NatOp relating evidence (left) to the claim numeral (right)."""
    if not isinstance(claim, Quantity):
        raise NumeralError(f"claim side must be a Quantity, got {claim!r}")
    env = env or UPWARD
    x, ev = _evidence_side(evidence)
    y = claim_denotation(claim, policy)
    if env.negated:
        y = y.complement()
    nonneg = ev >= 0 and claim.signed_value >= 0
    op = relation(x, y, universe_ok=nonneg)
    rho = numeric_projection(env, claim)
    return project(rho, op, evidence_lt_claim=ev < claim.signed_value)
