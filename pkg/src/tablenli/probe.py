"""Reading-of-numerals probe: numeral mutations of supported claims and retention scoring."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .numerals import ROUNDNESS_BASES, QuantityMatch, Source, find_quantities

log = logging.getLogger(__name__)


class ProbeError(ValueError):
    pass


YEAR_RE = re.compile(r"^\d{4}$")
MODIFIERS = ("About", "Around", "Approximately")


def _is_year(token: str) -> bool:
    return bool(YEAR_RE.match(token)) and 1000 <= int(token) <= 2099


def qualifying_numeral(claim: str) -> QuantityMatch | None:
    """First digit numeral that is positive and not a year."""
    for m in find_quantities(claim):
        if m.quantity.source is Source.WORD:
            continue
        token = claim[m.start:m.end]
        if _is_year(token) or m.quantity.value <= 0:
            continue
        return m
    return None


def select_base_claims(instances: Iterable[Mapping]) -> list[Mapping]:
    return [
        inst for inst in instances
        if str(inst.get("label", "")).upper() in ("SUPPORTS", "SUPPORTED")
        and qualifying_numeral(inst["claim"]) is not None
    ]


def roundness_candidates(base, upper) -> list[Fraction]:
    """All k * base * 10**y (1 <= k <= 9, y >= 0, integral) up to ``upper``, plus the next one up."""
    base = Fraction(base)
    out, y = [], 0
    while True:
        scale = base * 10 ** y
        for k in range(1, 10):
            c = k * scale
            if c.denominator == 1:
                out.append(c)
        if scale * 9 >= upper:
            return sorted(set(out))
        y += 1


def round_to_class(x, base) -> Fraction:
    """Nearest roundness-class member to ``x``; ties go to the smaller one."""
    x = Fraction(x)
    if x <= 0:
        raise ProbeError(f"round_to_class needs x > 0, got {x}")
    base = ROUNDNESS_BASES.get(str(base), base) if isinstance(base, str) else base
    cands = roundness_candidates(base, 2 * x)
    return min(cands, key=lambda c: (abs(c - x), c))


@dataclass(frozen=True)
class Kind:
    number: int
    klass: str
    label: str
    value: Callable[[Fraction], Fraction]
    modifier: str | None = None


CLASSES = (
    "Inaccuracy Δ+1",
    "Inaccuracy Δ2%",
    "Inaccuracy Δ10%",
    "Inaccuracy Δ25%",
    "Rounding",
    "Modifiers",
    "Cardinal (incorrect)",
    "Cardinal (correct)",
)

_B10, _B5, _B25 = ROUNDNESS_BASES["10"], ROUNDNESS_BASES["5"], ROUNDNESS_BASES["2.5"]
F = Fraction

KINDS: tuple[Kind, ...] = (
    Kind(1, CLASSES[0], "Adding one", lambda x: x + 1),
    Kind(2, CLASSES[1], "Adding 2%", lambda x: x + x * F(2, 100)),
    Kind(3, CLASSES[1], "Subtracting 2%", lambda x: x - x * F(2, 100)),
    Kind(4, CLASSES[2], "Adding 10%", lambda x: x + x * F(1, 10)),
    Kind(5, CLASSES[2], "Subtracting 10%", lambda x: x - x * F(1, 10)),
    Kind(6, CLASSES[3], "Adding 25%", lambda x: x + x * F(1, 4)),
    Kind(7, CLASSES[3], "Subtracting 25%", lambda x: x - x * F(1, 4)),
    Kind(8, CLASSES[4], "10-ness", lambda x: round_to_class(x, _B10)),
    Kind(9, CLASSES[4], "5-ness", lambda x: round_to_class(x, _B5)),
    Kind(10, CLASSES[4], "2.5-ness", lambda x: round_to_class(x, _B25)),
    Kind(11, CLASSES[5], "Modifier 10-ness", lambda x: round_to_class(x, _B10), "*"),
    Kind(12, CLASSES[5], "Modifier 5-ness", lambda x: round_to_class(x, _B5), "*"),
    Kind(13, CLASSES[5], "Modifier 2.5-ness", lambda x: round_to_class(x, _B25), "*"),
    Kind(14, CLASSES[6], "At most, subtracting 10%", lambda x: x - x * F(1, 10), "At most"),
    Kind(15, CLASSES[6], "At least, adding 10%", lambda x: x + x * F(1, 10), "At least"),
    Kind(16, CLASSES[7], "At most, adding 10%", lambda x: x + x * F(1, 10), "At most"),
    Kind(17, CLASSES[7], "At least, subtracting 10%", lambda x: x - x * F(1, 10), "At least"),
)
KIND_CLASS = {k.number: k.klass for k in KINDS}
CLASS_KINDS = {c: tuple(k.number for k in KINDS if k.klass == c) for c in CLASSES}


def render_like(value: Fraction, original: str) -> str:
    """Format ``value`` the way ``original`` was written."""
    suffix = original[-1] if original[-1:] in ("%", "+") else ""
    body = original[: len(original) - len(suffix)]
    grouped = "," in body
    if value.denominator == 1 and "." not in body:
        text = f"{value.numerator:,}" if grouped else str(value.numerator)
    else:
        q = (Decimal(value.numerator) / Decimal(value.denominator)).quantize(
            Decimal("0.01"), rounding=ROUND_HALF_UP)
        text = f"{q:,.2f}" if grouped else f"{q:.2f}"
    return text + suffix


@dataclass(frozen=True)
class Variation:
    kind: int
    klass: str
    original: Fraction
    value: Fraction
    mutated_span: str
    claim: str
    start: int
    end: int


def generate_variations(claim: str, match: QuantityMatch | None = None, rotation: int = 0) -> list[Variation]:
    """The 17 mutations of the first qualifying numeral in ``claim``."""
    match = match or qualifying_numeral(claim)
    if match is None:
        raise ProbeError(f"no qualifying numeral in {claim!r}")
    token = claim[match.start:match.end]
    x = match.quantity.value
    out = []
    for kind in KINDS:
        value = kind.value(x)
        span = render_like(value, token)
        if kind.modifier:
            mod = kind.modifier
            if mod == "*":
                mod = MODIFIERS[(rotation + kind.number - 11) % len(MODIFIERS)]
            if match.start > 0:
                mod = mod.lower()
            span = f"{mod} {span}"
        mutated = claim[:match.start] + span + claim[match.end:]
        out.append(Variation(kind.number, kind.klass, x, value, span, mutated,
                             match.start, match.start + len(span)))
    return out


def generate_probe(instances: Iterable[Mapping]) -> list[dict]:
    """Originals plus 17 variations for every base claim (18 records per claim)."""
    records = []
    for i, inst in enumerate(select_base_claims(instances)):
        base_id = str(inst.get("id", i))
        common = {k: v for k, v in inst.items() if k not in ("id", "claim", "label")}
        records.append({"id": f"{base_id}-v00", "base_id": base_id, "kind": 0,
                        "class": "Original", "claim": inst["claim"],
                        "label": inst.get("label"), **common})
        for v in generate_variations(inst["claim"], rotation=i):
            records.append({"id": f"{base_id}-v{v.kind:02d}", "base_id": base_id,
                            "kind": v.kind, "class": v.klass, "claim": v.claim,
                            "mutated_span": v.mutated_span, **common})
    return records


@dataclass(frozen=True)
class ProbeScore:
    denominator: int
    per_kind: dict[int, float | None]
    per_class: dict[str, float | None]

    def to_dict(self) -> dict:
        return {"denominator": self.denominator,
                "per_kind": {str(k): v for k, v in self.per_kind.items()},
                "per_class": dict(self.per_class)}


def _supported(verdict) -> bool:
    return str(getattr(verdict, "value", verdict)).upper() in ("SUPPORTS", "SUPPORTED")


def score_probe(records: Sequence[Mapping]) -> ProbeScore:
    """Retention of Supported predictions per variation kind and class.

    ``records`` carry ``base_id``, ``kind`` and ``verdict``. Only bases whose
    original was predicted Supported enter the denominator.
    """
    by_base: dict[str, dict[int, object]] = {}
    for r in records:
        by_base.setdefault(str(r["base_id"]), {})[int(r["kind"])] = r.get("verdict")
    kept = [b for b, kinds in by_base.items() if _supported(kinds.get(0))]
    n = len(kept)
    per_kind: dict[int, float | None] = {}
    for kind in KIND_CLASS:
        if n == 0:
            per_kind[kind] = None
            continue
        missing = sum(kind not in by_base[b] for b in kept)
        if missing:
            log.warning("%d supported bases lack a prediction for kind %d", missing, kind)
        per_kind[kind] = sum(_supported(by_base[b].get(kind)) for b in kept) / n
    per_class: dict[str, float | None] = {}
    for c, kinds in CLASS_KINDS.items():
        vals = [per_kind[k] for k in kinds]
        per_class[c] = None if n == 0 else sum(vals) / len(vals)
    return ProbeScore(n, per_kind, per_class)
