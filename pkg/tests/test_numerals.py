from fractions import Fraction

import pytest
from hypothesis import assume, given, strategies as st

from tablenli.arith import parse_arith_answer
from tablenli.numerals import (
    PROJECTION_TABLE, UPWARD, HaloMode, HaloPolicy, MonotoneEnv, NatOp, NumberSet, NumeralError,
    Polarity, Projection, Quantity, Reading, Source, compare, detect_env, find_quantities, halo,
    is_round, parse_quantity, project, relation,
)

E, FE, RE, NEG, ALT, COV, IND = (NatOp.EQUIV, NatOp.FWD, NatOp.REV, NatOp.NEG, NatOp.ALT,
                                 NatOp.COVER, NatOp.INDEP)


def claim_op(evidence, claim_span, policy=None):
    """Compare evidence to the first numeral of a claim span, in the span's own context."""
    m = find_quantities(claim_span)[0]
    ev = parse_quantity(evidence) if isinstance(evidence, str) else evidence
    return compare(ev, m.quantity, detect_env(claim_span[: m.start]), policy)


# -- parsing

@pytest.mark.parametrize("span,value,reading,source", [
    ("larger than 12,000", 12000, Reading.GREATER_THAN, Source.DIGITS),
    ("three", 3, Reading.EXACT, Source.WORD),
    ("2+ goals", 2, Reading.AT_LEAST, Source.SUFFIX_PLUS),
    ("about a hundred goals", 100, Reading.APPROX, Source.WORD),
    ("at most 7", 7, Reading.AT_MOST, Source.DIGITS),
    ("no more than 7", 7, Reading.AT_MOST, Source.DIGITS),
    ("fewer than twenty", 20, Reading.LESS_THAN, Source.WORD),
    ("around 40%", 40, Reading.APPROX, Source.DIGITS),
])
def test_parse_quantity(span, value, reading, source):
    q = parse_quantity(span)
    assert (q.value, q.reading, q.source) == (value, reading, source)


def test_modifier_text_kept():
    assert parse_quantity("about a hundred goals").modifier_text == "about"


def test_no_numeral():
    assert parse_quantity("no numbers here") is None


def test_relative_quantity():
    q = parse_quantity("eight fewer delegates than John McCain")
    assert q.value == 8 and q.signed_value == -8


def test_percent_word():
    assert parse_quantity("12 percent").percent


# -- goal-count panels and worked comparisons

@pytest.mark.parametrize("evidence,claim,op", [
    ("3 goals", "three goals", E),
    ("99 goals", "scored about a hundred goals", FE),
    ("2+ goals", "3 goals", RE),
    ("5 goals", "has scored two goals", ALT),
    ("3 goals", "never scored three goals", NEG),
])
def test_goal_count_panels(evidence, claim, op):
    assert claim_op(evidence, claim) is op


def test_ortegal_answers():
    assert claim_op(parse_arith_answer("SUM 12,238"), "larger than 12,000") is FE
    assert claim_op(parse_arith_answer("COUNT 4"), "three") is ALT


def test_relative_claim_against_comp():
    assert claim_op(parse_arith_answer("COMP -8"), "eight fewer delegates than John McCain") is E


def test_bare_inaccuracy_is_alternation():
    assert claim_op(101, "100") is ALT


def test_non_numeric_evidence_rejected():
    with pytest.raises(NumeralError):
        compare(parse_arith_answer("COPY Ortegal"), parse_quantity("3"))
    with pytest.raises(NumeralError):
        compare(3, "three")


# -- halo

def test_empty_halo_is_point():
    assert halo(parse_quantity("100")) == NumberSet.point(100)


def test_modifier_halo_default_width():
    h = halo(parse_quantity("about 100"))
    assert 90 in h and 110 in h and 89 not in h and 111 not in h


def test_configured_modifier_width():
    h = halo(parse_quantity("about 100"), HaloPolicy(modifier_widths={"about": Fraction(1, 50)}))
    assert 98 in h and 97 not in h


def test_roundness_halo_is_wider_for_round_numbers():
    pol = HaloPolicy(mode=HaloMode.ROUNDNESS)
    assert halo(parse_quantity("100"), pol).width() > halo(parse_quantity("101"), pol).width()


def test_relative_halo():
    pol = HaloPolicy(mode=HaloMode.RELATIVE, epsilon=Fraction(1, 100))
    assert 101 in halo(parse_quantity("100"), pol)


def test_negative_widths_rejected():
    with pytest.raises(NumeralError):
        HaloPolicy(epsilon=-1)


@pytest.mark.parametrize("x,base,ok", [(100, 1, True), (20000, 1, True), (12000, 1, False), (12238, 1, False),
                                       (75, 5, False), (750, 5, False), (45, 5, True), (25, Fraction(5, 2), True)])
def test_is_round(x, base, ok):
    assert is_round(x, base) is ok


# -- environments

@pytest.mark.parametrize("text,polarity", [
    ("never scored", Polarity.DOWNWARD),
    ("Messi scored 50 goals", Polarity.UPWARD),
    ("exactly one title", Polarity.EXACTLY_ONE),
    ("everybody who scored", Polarity.DOWNWARD),
    ("if he scored", Polarity.DOWNWARD),
    ("He didn't score", Polarity.DOWNWARD),
])
def test_detect_env(text, polarity):
    assert detect_env(text).polarity is polarity


# -- projection table

ALL = list(NatOp)


def test_projection_examples():
    assert project(Projection.UP, FE) is FE
    assert project(Projection.DOWN, FE) is RE
    assert project(Projection.EXACTLY_ONE, RE) is IND


def test_env_maps_to_general_rows():
    assert project(MonotoneEnv(Polarity.DOWNWARD, "not", True), ALT) is COV
    assert project(UPWARD, ALT) is ALT


def test_num_down_alternation_needs_order():
    with pytest.raises(NumeralError):
        project(Projection.NUM_DOWN, ALT)
    # "everybody who scored 2 goals" entails "everybody who scored 5 goals" under at-least
    assert project(Projection.NUM_DOWN, ALT, evidence_lt_claim=True) is FE
    assert project(Projection.NUM_DOWN, ALT, evidence_lt_claim=False) is RE


def test_upward_rows_are_identity():
    for op in ALL:
        assert project(Projection.UP, op) is op
        assert project(Projection.NUM_UP, op) is op


def test_downward_is_an_involution():
    for op in (E, FE, RE, NEG, IND):
        assert project(Projection.DOWN, project(Projection.DOWN, op)) is op


def test_every_row_is_total():
    for rho in Projection:
        assert set(PROJECTION_TABLE[rho]) == set(NatOp)


# -- properties

nat = st.integers(0, 10**6)


@given(nat, nat)
def test_exact_reading_is_equality_or_alternation(a, b):
    op = compare(a, Quantity(Fraction(b)))
    assert op is (E if a == b else ALT)


@given(nat, st.integers(1, 10**6), st.sampled_from(["at least", "at most", "about", "more than", "fewer than"]))
def test_duality_under_swap(a, b, cue):
    claim = parse_quantity(f"{cue} {b}")
    ev_point = Quantity(Fraction(a))
    op = compare(ev_point, claim)
    x, y = NumberSet.point(a), _denotation(claim)
    swapped = relation(y, x)
    if op is FE:
        assert swapped is RE
    if op is RE:
        assert swapped is FE


def _denotation(q):
    from tablenli.numerals import claim_denotation
    return claim_denotation(q)


@given(st.integers(1, 10**5), st.integers(1, 10**5), st.fractions(0, 1), st.fractions(0, 1))
def test_widening_never_turns_forward_into_alternation(ev, v, w1, w2):
    lo, hi = sorted([w1, w2])
    q = parse_quantity(f"about {v}")
    narrow = compare(ev, q, policy=HaloPolicy(default_modifier_width=lo))
    wide = compare(ev, q, policy=HaloPolicy(default_modifier_width=hi))
    if narrow is FE:
        assert wide is not ALT


@given(st.sampled_from(ALL))
def test_parse_round_trip(op):
    assert NatOp.parse(op.value) is op
    assert NatOp.parse(op.symbol) is op
