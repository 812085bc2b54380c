"""Natural-logic proofs: the DFA, NatOp assignment, span alignment, proof selection."""

from __future__ import annotations

import logging
import re
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Mapping, Sequence

from .arith import AnswerParseError, ArithAnswer, parse_arith_answer
from .numerals import (
    HaloPolicy,
    NUMBER_WORDS,
    MonotoneEnv,
    NatOp,
    Projection,
    UPWARD,
    compare,
    detect_env,
    find_quantities,
    project,
)

log = logging.getLogger(__name__)


class NatlogError(ValueError):
    pass


class State(str, Enum):
    S = "S"
    R = "R"
    N = "N"


class Verdict(str, Enum):
    SUPPORTED = "SUPPORTS"
    REFUTED = "REFUTES"
    NEI = "NEI"

    @classmethod
    def parse(cls, text: str) -> "Verdict":
        key = text.strip().upper().replace(" ", "_")
        aliases = {"SUPPORTS": cls.SUPPORTED, "SUPPORTED": cls.SUPPORTED,
                   "REFUTES": cls.REFUTED, "REFUTED": cls.REFUTED,
                   "NEI": cls.NEI, "NOT_ENOUGH_INFO": cls.NEI,
                   "NOT_ENOUGH_INFORMATION": cls.NEI}
        if key not in aliases:
            raise NatlogError(f"unknown verdict {text!r}")
        return aliases[key]


STATE_VERDICT = {State.S: Verdict.SUPPORTED, State.R: Verdict.REFUTED, State.N: Verdict.NEI}

_TRANSITIONS: dict[State, dict[NatOp, State]] = {
    State.S: {NatOp.EQUIV: State.S, NatOp.FWD: State.S, NatOp.REV: State.N,
              NatOp.INDEP: State.N, NatOp.NEG: State.R, NatOp.ALT: State.R},
    State.R: {NatOp.EQUIV: State.R, NatOp.REV: State.R, NatOp.NEG: State.S,
              NatOp.ALT: State.N, NatOp.FWD: State.N, NatOp.INDEP: State.N},
    State.N: {op: State.N for op in NatOp},
}


def collapse(op: NatOp) -> NatOp:
    """Cover is too rare to model and is read as independence."""
    return NatOp.INDEP if op is NatOp.COVER else op


def dfa_step(state: State, op: NatOp) -> State:
    return _TRANSITIONS[state][collapse(op)]


def execute_proof(ops: Iterable[NatOp]) -> tuple[Verdict, list[State]]:
    trace = [State.S]
    for op in ops:
        trace.append(dfa_step(trace[-1], op))
    return STATE_VERDICT[trace[-1]], trace


# ---------------------------------------------------------------- proofs

@dataclass(frozen=True)
class ProofStep:
    claim_span: str
    natop: NatOp
    evidence: str | None = None
    question: str | None = None
    answer: str | None = None
    start: int = 0
    end: int = 0
    note: str | None = None

    def __post_init__(self):
        if self.evidence is None and self.answer is None and self.natop is not NatOp.INDEP:
            raise NatlogError(f"step {self.claim_span!r} has no evidence but op {self.natop.name}")

    def to_dict(self) -> dict:
        out = {"c": self.claim_span, "e": self.evidence, "q": self.question,
               "a": self.answer, "op": self.natop.value}
        if self.note:
            out["note"] = self.note
        return out

    @classmethod
    def from_dict(cls, d: Mapping) -> "ProofStep":
        return cls(d["c"], NatOp.parse(d["op"]), d.get("e"), d.get("q"), d.get("a"),
                   note=d.get("note"))


@dataclass(frozen=True)
class Proof:
    subclaim: str
    steps: tuple[ProofStep, ...]
    trace: tuple[State, ...]
    verdict: Verdict
    degraded: bool = False

    @classmethod
    def build(cls, subclaim: str, steps: Sequence[ProofStep], degraded: bool = False) -> "Proof":
        steps = tuple(
            s if s.natop is not NatOp.COVER else ProofStep(
                s.claim_span, NatOp.INDEP, s.evidence, s.question, s.answer,
                s.start, s.end, s.note)
            for s in steps
        )
        verdict, trace = execute_proof(s.natop for s in steps)
        return cls(subclaim, steps, tuple(trace), verdict, degraded)

    @property
    def ops(self) -> list[NatOp]:
        return [s.natop for s in self.steps]

    def score_key(self) -> tuple:
        # higher is better: fewer independence ops, decisive verdict, finer grain
        indep = sum(op is NatOp.INDEP for op in self.ops)
        return (-indep, self.verdict is not Verdict.NEI, len(self.steps))

    def to_dict(self) -> dict:
        return {"subclaim": self.subclaim,
                "steps": [s.to_dict() for s in self.steps],
                "trace": [t.value for t in self.trace],
                "verdict": self.verdict.value,
                "degraded": self.degraded}

    @classmethod
    def from_dict(cls, d: Mapping) -> "Proof":
        """Rebuild from serialized form, recomputing the trace from the ops."""
        return cls.build(d.get("subclaim", ""), [ProofStep.from_dict(s) for s in d["steps"]],
                         degraded=bool(d.get("degraded", False)))


def select_proof(candidates: Sequence[Proof]) -> Proof:
    if not candidates:
        raise NatlogError("select_proof needs at least one candidate")
    best = candidates[0]
    for cand in candidates[1:]:
        if cand.score_key() > best.score_key():
            best = cand
    return best


# ---------------------------------------------------------------- lexical tier

STOPWORDS = frozenset("""
a an the in on at of during for to by from with into is are was were be been being
has have had and which that who as its it their there this these those
""".split())
NEGATIONS = frozenset({"not", "never", "no", "without", "n't"})
ANTONYMS = {frozenset(p) for p in [
    ("won", "lost"), ("win", "lose"), ("more", "fewer"), ("more", "less"),
    ("higher", "lower"), ("larger", "smaller"), ("increase", "decrease"),
    ("before", "after"), ("first", "last"), ("maximum", "minimum"),
]}

_TOKEN_RE = re.compile(r"[+-]?\d+(?:,\d{3})*(?:\.\d+)?%?|[^\W_]+(?:'[^\W_]+)?")


def _fold(text: str) -> str:
    decomposed = unicodedata.normalize("NFKD", text.casefold())
    return "".join(ch for ch in decomposed if not unicodedata.combining(ch))


def _norm_token(tok: str) -> str:
    if tok[0].isdigit() or tok[0] in "+-":
        return tok.replace(",", "").rstrip("%")
    if len(tok) > 3 and tok.endswith("s") and not tok.endswith(("ss", "us", "is")):
        return tok[:-1]
    return tok


@dataclass(frozen=True)
class Tok:
    norm: str
    raw: str
    start: int
    end: int


def tokenize(text: str) -> list[Tok]:
    """Normalized tokens (case, diacritics, trailing plural s) with offsets."""
    folded = _fold(text)
    if len(folded) != len(text):
        # offsets must stay aligned with the original string
        folded = "".join(_fold(ch)[:1] or ch for ch in text)
    return [Tok(_norm_token(m.group(0)), text[m.start():m.end()], m.start(), m.end())
            for m in _TOKEN_RE.finditer(folded)]


def content(tokens: Iterable[Tok]) -> list[str]:
    return [t.norm for t in tokens if t.norm not in STOPWORDS]


def _is_numeric(norm: str) -> bool:
    if norm in NUMBER_WORDS:
        return True
    return bool(norm) and (norm[0].isdigit() or (norm[0] in "+-" and norm[1:2].isdigit()))


NatOpOracle = Callable[[str, str], NatOp]


@dataclass(frozen=True)
class Decision:
    op: NatOp
    tier: str
    note: str | None = None


def _answer_text(evidence) -> str:
    if isinstance(evidence, ArithAnswer):
        return evidence.result if isinstance(evidence.result, str) else evidence.rendered.split(" ", 1)[1]
    return evidence


def judge(
    claim_span: str,
    evidence: str | ArithAnswer | None,
    env: MonotoneEnv | None = None,
    *,
    target: tuple[int, int] | None = None,
    policy: HaloPolicy | None = None,
    oracle: NatOpOracle | None = None,
    aliases: Mapping[str, str] | None = None,
) -> Decision:
    """Assign a NatOp and report which tier decided it.

    ``target`` is the character range of the question-targeted span inside
    ``claim_span``; it picks which claim numeral a numeric answer is
    compared against.
    """
    env = env or UPWARD
    if evidence is None or (isinstance(evidence, str) and evidence.strip().upper() in ("", "N/A")):
        return Decision(NatOp.INDEP, "missing")

    claim_q = find_quantities(claim_span)
    if isinstance(evidence, ArithAnswer) and evidence.is_numeric:
        if claim_q:
            pick = claim_q[0]
            if target is not None:
                for m in claim_q:
                    if m.start < target[1] and target[0] < m.end:
                        pick = m
                        break
            num_env = detect_env(claim_span[: pick.end])
            return Decision(compare(evidence, pick.quantity, num_env, policy), "numeric")
        return _delegate(claim_span, evidence.rendered, env, oracle)

    ev_text = _answer_text(evidence)
    lexical = _lexical(claim_span, ev_text, aliases)
    if lexical is not None:
        return Decision(project(env, lexical.op), lexical.tier, lexical.note)

    ev_q = find_quantities(ev_text)
    if claim_q and ev_q:
        c_rest = [t for t in content(tokenize(claim_span)) if not _is_numeric(t)]
        e_rest = [t for t in content(tokenize(ev_text)) if not _is_numeric(t)]
        if set(c_rest) == set(e_rest):
            cq = claim_q[0].quantity
            num_env = detect_env(claim_span)
            ops = [compare(m.quantity, cq, num_env, policy) for m in ev_q]
            for preferred in (NatOp.EQUIV, NatOp.FWD, NatOp.REV):
                if preferred in ops:
                    return Decision(preferred, "numeric")
            return Decision(ops[0], "numeric")

    rendered = evidence.rendered if isinstance(evidence, ArithAnswer) else ev_text
    return _delegate(claim_span, rendered, env, oracle)


def _delegate(claim_span: str, evidence: str, env: MonotoneEnv, oracle: NatOpOracle | None) -> Decision:
    if oracle is None:
        return Decision(NatOp.INDEP, "fallback")
    try:
        op = oracle(claim_span, evidence)
    except Exception as exc:  # any gateway failure degrades to independence
        log.warning("NatOp query failed for %r: %s", claim_span, exc)
        return Decision(NatOp.INDEP, "fallback", f"NatOp query failed: {exc}")
    return Decision(project(env, op), "gateway")


def _lexical(claim_span: str, ev_text: str, aliases: Mapping[str, str] | None) -> Decision | None:
    c_toks, e_toks = tokenize(claim_span), tokenize(ev_text)
    c, e = content(c_toks), content(e_toks)
    if aliases:
        c = _apply_aliases(c, aliases)
        e = _apply_aliases(e, aliases)
    if not c or not e:
        return None
    if c == e:
        note = None
        raw_c = [t.raw.casefold() for t in c_toks if t.norm not in STOPWORDS]
        raw_e = [t.raw.casefold() for t in e_toks if t.norm not in STOPWORDS]
        if raw_c != raw_e:
            note = f"'{claim_span.strip()}' read as equivalent to '{ev_text.strip()}'"
        return Decision(NatOp.EQUIV, "lexical", note)
    cs, es = set(c), set(e)
    diff = cs ^ es
    if diff and diff <= NEGATIONS:
        return Decision(NatOp.NEG, "lexical")
    if cs < es:
        return Decision(NatOp.FWD, "lexical")
    if len(diff) == 2 and frozenset(diff) in ANTONYMS:
        return Decision(NatOp.ALT, "lexical")
    return None


def _apply_aliases(tokens: list[str], aliases: Mapping[str, str]) -> list[str]:
    folded = {_norm_token(_fold(k)): _norm_token(_fold(v)) for k, v in aliases.items()}
    return [folded.get(t, t) for t in tokens]


def assign_natop(
    claim_span: str,
    evidence: str | ArithAnswer | None,
    env: MonotoneEnv | None = None,
    **kwargs,
) -> NatOp:
    """NatOp between a claim span and its evidence or answer.

    Text answers such as ``"COPY Ortegal"`` are parsed as ArithExp answers.
    """
    if isinstance(evidence, str):
        try:
            evidence = parse_arith_answer(evidence)
        except AnswerParseError:
            pass
    return judge(claim_span, evidence, env, **kwargs).op


# ---------------------------------------------------------------- alignment

PREPOSITIONS = frozenset(
    "in on at of during for with by from to after before since until between among within".split()
)
CONJUNCTIONS = frozenset({"and", "but", "which", "while", "who", "whereas"})
_WORD_RE = re.compile(r"\S+")
_EDGE_PUNCT = ".,;:!?\"'()"


@dataclass(frozen=True)
class Chunk:
    start: int
    end: int


def chunk(text: str) -> list[Chunk]:
    """Split a (sub)claim into phrase-like chunks covering every character."""
    words = list(_WORD_RE.finditer(text))
    if not words:
        return [Chunk(0, len(text))] if text else []
    numeral_starts = set()
    for m in find_quantities(text):
        start = m.start
        cue = m.quantity.modifier_text
        if cue and cue != "+":
            k = text.rfind(cue, 0, m.start)
            if k >= 0:
                start = k
        numeral_starts.add(start)

    def bare(w: str) -> str:
        return w.strip(_EDGE_PUNCT)

    def capitalized(i: int) -> bool:
        w = bare(words[i].group(0))
        if not w or not w[0].isupper():
            return False
        return not (i == 0 and w.lower() in STOPWORDS | PREPOSITIONS)

    cuts = [0]
    in_prep = bare(words[0].group(0)).lower() in PREPOSITIONS
    for i in range(1, len(words)):
        w = bare(words[i].group(0))
        lower = w.lower()
        prev = words[i - 1].group(0)
        cut = False
        if prev.endswith(",") and not (capitalized(i - 1) and capitalized(i)):
            cut, in_prep = True, False
        if lower in PREPOSITIONS:
            cut, in_prep = True, True
            cuts.append(i)
            continue
        if lower in CONJUNCTIONS:
            cut, in_prep = True, False
        if not in_prep:
            if any(words[i].start() <= s < words[i].end() for s in numeral_starts):
                cut = True
            elif capitalized(i - 1) and w[:1].islower():
                cut = True
        if cut:
            cuts.append(i)
    chunks = []
    for k, i in enumerate(cuts):
        start = 0 if k == 0 else words[i].start()
        end = words[cuts[k + 1]].start() if k + 1 < len(cuts) else len(text)
        chunks.append(Chunk(start, end))
    return chunks


@dataclass(frozen=True)
class QAPair:
    """A question-targeted claim span with its answer."""
    span: str
    answer: ArithAnswer | None
    question: str | None = None
    extraction: str | None = None


@dataclass(frozen=True)
class Unit:
    start: int
    end: int
    target: int | None = None  # index into the qa pairs


@dataclass(frozen=True)
class Skeleton:
    claim_span: str
    start: int
    end: int
    target: int | None
    evidence: str | None


def display_span(text: str, start: int, end: int) -> str:
    span = text[start:end].strip().rstrip(",;:")
    if end >= len(text.rstrip()):
        span = span.rstrip(".!?")
    return span


def _locate(subclaim: str, span: str, taken: list[tuple[int, int]]) -> tuple[int, int]:
    pos = subclaim.find(span)
    while pos >= 0:
        rng = (pos, pos + len(span))
        if not any(a < rng[1] and rng[0] < b for a, b in taken):
            return rng
        pos = subclaim.find(span, pos + 1)
    first = subclaim.find(span)
    if first < 0:
        raise NatlogError(f"claim span {span!r} not found in {subclaim!r}")
    return first, first + len(span)


def locate_spans(subclaim: str, spans: Sequence[str]) -> list[tuple[int, int]]:
    located: list[tuple[int, int]] = []
    for span in spans:
        located.append(_locate(subclaim, span, located))
    return located


def _cut_at_targets(chunks: list[Chunk], located: Sequence[tuple[int, int]], text: str) -> list[Chunk]:
    """Split chunks so no targeted span boundary falls inside one."""
    cuts = {c.start for c in chunks}
    for a, b in located:
        # snap to whole words so trailing punctuation stays with its word
        while a > 0 and not text[a - 1].isspace():
            a -= 1
        while b < len(text) and not text[b].isspace() and b > 0 and not text[b - 1].isspace():
            b += 1
        while b < len(text) and text[b].isspace():
            b += 1
        cuts.add(a)
        if b < len(text):
            cuts.add(b)
    ordered = sorted(cuts)
    ends = ordered[1:] + [len(text)]
    return [Chunk(a, b) for a, b in zip(ordered, ends) if text[a:b].strip()]


def build_units(subclaim: str, spans: Sequence[str]) -> list[Unit]:
    """Chunk the subclaim and attach each targeted span to the chunks it overlaps."""
    located = locate_spans(subclaim, spans)
    chunks = _cut_at_targets(chunk(subclaim), located, subclaim)
    owner: list[int | None] = []
    for ch in chunks:
        hit = next((k for k, (a, b) in enumerate(located) if a < ch.end and ch.start < b), None)
        owner.append(hit)
    units: list[Unit] = []
    for ch, who in zip(chunks, owner):
        if units and who is not None and units[-1].target == who:
            units[-1] = Unit(units[-1].start, ch.end, who)
        else:
            units.append(Unit(ch.start, ch.end, who))
    return units


def _min_window(toks: Sequence[Tok], wanted: set[str]) -> tuple[int, int]:
    """Shortest token window holding every wanted norm that occurs at all."""
    present = wanted & {t.norm for t in toks}
    best = (0, len(toks) - 1)
    for lo, t in enumerate(toks):
        if t.norm not in present:
            continue
        seen: set[str] = set()
        for hi in range(lo, len(toks)):
            if toks[hi].norm in present:
                seen.add(toks[hi].norm)
            if seen == present:
                if hi - lo < best[1] - best[0]:
                    best = (lo, hi)
                break
    return best


def align_evidence(span: str, extractions: Sequence[str]) -> str | None:
    """Best-overlapping window of an extraction for a residual claim span."""
    c_toks = tokenize(span)
    c_content = {t.norm for t in c_toks if t.norm not in STOPWORDS}
    if not c_content:
        return None
    best, best_score = None, 0
    for ext in extractions:
        if not ext:
            continue
        e_toks = tokenize(ext)
        score = len(c_content & {t.norm for t in e_toks if t.norm not in STOPWORDS})
        if score > best_score:
            best, best_score = (ext, e_toks), score
    if best is None:
        return None
    ext, e_toks = best
    lo, hi = _min_window(e_toks, c_content)
    found = {t.norm for t in e_toks[lo:hi + 1]} & c_content
    matched = [i for i, t in enumerate(c_toks) if t.norm in found]
    lead = matched[0] if matched else 0
    trail = len(c_toks) - 1 - matched[-1] if matched else 0
    while lead and lo > 0 and e_toks[lo - 1].norm in STOPWORDS:
        lo, lead = lo - 1, lead - 1
    while trail and hi + 1 < len(e_toks) and e_toks[hi + 1].norm in STOPWORDS:
        hi, trail = hi + 1, trail - 1
    return ext[e_toks[lo].start: e_toks[hi].end]


def align_spans(subclaim: str, qa_pairs: Sequence[QAPair], extractions: Sequence[str]) -> list[Skeleton]:
    """Finest-grained step skeletons covering the whole subclaim."""
    units = build_units(subclaim, [p.span for p in qa_pairs])
    out = []
    for u in units:
        text = display_span(subclaim, u.start, u.end)
        if u.target is not None:
            ev = qa_pairs[u.target].extraction
        else:
            ev = align_evidence(text, extractions)
        out.append(Skeleton(text, u.start, u.end, u.target, ev))
    return out


# ---------------------------------------------------------------- candidates

MAX_BLOCK = 3


@dataclass
class ProofBuilder:
    """Assembles proof candidates over contiguous unit blocks.

    A block spans 1..MAX_BLOCK consecutive units and holds at most one
    question-targeted unit, so two separately answered facts never fuse into
    one step.
    """

    subclaim: str
    qa_pairs: Sequence[QAPair]
    extractions: Sequence[str]
    policy: HaloPolicy | None = None
    oracle: NatOpOracle | None = None
    aliases: Mapping[str, str] | None = None
    units: list[Unit] = field(init=False)
    located: list[tuple[int, int]] = field(init=False)
    _memo: dict = field(init=False, default_factory=dict)

    def __post_init__(self):
        spans = [p.span for p in self.qa_pairs]
        self.units = build_units(self.subclaim, spans)
        self.located = locate_spans(self.subclaim, spans)

    def block_ok(self, i: int, j: int) -> bool:
        return 0 < j - i <= MAX_BLOCK and sum(u.target is not None for u in self.units[i:j]) <= 1

    def step(self, i: int, j: int) -> ProofStep:
        if (i, j) in self._memo:
            return self._memo[(i, j)]
        start, end = self.units[i].start, self.units[j - 1].end
        text = display_span(self.subclaim, start, end)
        env = detect_env(self.subclaim[:start])
        target = next((u.target for u in self.units[i:j] if u.target is not None), None)
        if target is not None:
            qa = self.qa_pairs[target]
            offset = self.subclaim.find(text, start)
            tstart, tend = self.located[target]
            rel = (tstart - offset, tend - offset)
            d = judge(text, qa.answer, env, target=rel, policy=self.policy,
                      oracle=self.oracle, aliases=self.aliases)
            step = ProofStep(text, collapse(d.op), qa.extraction if qa.answer else None,
                             qa.question, qa.answer.rendered if qa.answer else None,
                             start, end, d.note)
        else:
            ev = align_evidence(text, self.extractions)
            d = judge(text, ev, env, policy=self.policy, oracle=self.oracle, aliases=self.aliases)
            step = ProofStep(text, collapse(d.op), ev, None, None, start, end, d.note)
        self._memo[(i, j)] = step
        return step

    def enumerate(self, limit: int = 5000) -> list[Proof]:
        """All admissible segmentations, finest first (bounded by ``limit``)."""
        n = len(self.units)
        out: list[Proof] = []

        def rec(i: int, acc: list[ProofStep]):
            if len(out) >= limit:
                return
            if i == n:
                out.append(Proof.build(self.subclaim, acc))
                return
            for j in range(i + 1, min(n, i + MAX_BLOCK) + 1):
                if self.block_ok(i, j):
                    rec(j, acc + [self.step(i, j)])

        rec(0, [])
        return out

    def best(self) -> Proof:
        """Best candidate by dynamic programming over (position, DFA state).

        Scores are additive in (independence count, steps) for a fixed end
        state, so the optimum per state is exact; the decisive-verdict
        preference is then applied across end states. Remaining ties go to
        the segmentation that splits earliest, which is also the order
        ``enumerate`` yields candidates in.
        """
        n = len(self.units)
        # table[i][state] = (indep, -steps, block lengths, steps)
        table: list[dict[State, tuple]] = [dict() for _ in range(n + 1)]
        table[0][State.S] = (0, 0, (), [])
        for i in range(n):
            for state, (indep, neg_steps, lens, acc) in list(table[i].items()):
                for j in range(i + 1, min(n, i + MAX_BLOCK) + 1):
                    if not self.block_ok(i, j):
                        continue
                    st = self.step(i, j)
                    nxt = dfa_step(state, st.natop)
                    cand = (indep + (st.natop is NatOp.INDEP), neg_steps - 1, lens + (j - i,), acc + [st])
                    cur = table[j].get(nxt)
                    if cur is None or cand[:3] < cur[:3]:
                        table[j][nxt] = cand
        finals = [
            (indep, state is State.N, neg_steps, lens, acc)
            for state, (indep, neg_steps, lens, acc) in table[n].items()
        ]
        finals.sort(key=lambda f: f[:4])
        return Proof.build(self.subclaim, finals[0][4])


def best_proof(subclaim: str, qa_pairs: Sequence[QAPair], extractions: Sequence[str], **kw) -> Proof:
    return ProofBuilder(subclaim, qa_pairs, extractions, **kw).best()
