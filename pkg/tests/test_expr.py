"""Parser, printer and evaluator tests."""

import cmath
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from doa.expr import (
    BinOp,
    Call,
    Coord,
    ExprEvalError,
    ExprSyntaxError,
    Lit,
    Neg,
    PiConst,
    Pow,
    evaluate,
    parse,
    to_text,
)


def ev(text, coords=()):
    return evaluate(parse(text), list(coords))


def test_literal():
    assert parse("1") == Lit(1.0)
    assert ev("1") == 1.0


def test_sqrt2_sin_tree():
    # sin(2*pi*0.25) = 1, so the whole thing is sqrt(2)
    assert abs(ev("sqrt(2)*sin(2*pi*k1)", [0.25]) - math.sqrt(2)) < 1e-14


def test_square_minus_twelfth():
    assert abs(ev("k1^2 - 1/12", [0.5]) - (0.25 - 1 / 12)) < 1e-15


def test_eval_pi():
    assert abs(ev("pi") - math.pi) < 1e-15


def test_eval_cos_half():
    assert abs(ev("cos(2*pi*k1)", [0.5]) - (-1.0)) < 1e-14


def test_eval_product_zero():
    assert ev("exp(k1)*sin(k2)", [0.0, 0.0]) == 0.0


# twenty hand-checked (expression, coords, value) triples; the expected
# values come from math/cmath, independent of the tree evaluator
HAND_CHECKED = [
    ("2+3*4", (), 14.0),
    ("(2+3)*4", (), 20.0),
    ("2-3-4", (), -5.0),
    ("2-(3-4)", (), 3.0),
    ("12/4/3", (), 1.0),
    ("2^10", (), 1024.0),
    ("-2^2", (), -4.0),
    ("(-2)^2", (), 4.0),
    ("2i*2i", (), -4.0),
    ("1+1i", (), 1 + 1j),
    ("sqrt(4)", (), 2.0),
    ("sqrt(2i)", (), cmath.sqrt(2j)),
    ("exp(1)", (), math.e),
    ("sin(pi/6)", (), math.sin(math.pi / 6)),
    ("cos(pi/3)", (), math.cos(math.pi / 3)),
    ("k1*k2^2", (3.0, 2.0), 12.0),
    ("-k1/2", (0.5,), -0.25),
    ("exp(k1)*cos(k2)", (1.0, 2.0), math.e * math.cos(2.0)),
    ("1/(1+k1^2)", (2.0,), 0.2),
    ("sqrt(2)*sin(2*pi*k1)", (0.125,), math.sqrt(2) * math.sin(math.pi / 4)),
]


@pytest.mark.parametrize("text,coords,want", HAND_CHECKED)
def test_hand_checked_values(text, coords, want):
    assert abs(ev(text, coords) - complex(want)) <= 1e-14


def test_precedence_power_over_unary_minus():
    assert parse("-k1^2") == Neg(Pow(Coord(1), 2))


def test_left_associativity():
    assert parse("1-2-3") == BinOp("-", BinOp("-", Lit(1.0), Lit(2.0)), Lit(3.0))


def test_whitespace_insensitive():
    assert parse(" 1 +  2*k1 ") == parse("1+2*k1")


def test_complex_literal_suffix():
    assert parse("2i") == Lit(2j)
    assert parse("1.5e-3i") == Lit(1.5e-3j)


@pytest.mark.parametrize(
    "bad,kind",
    [
        ("", ExprSyntaxError),
        ("1.2.3", ExprSyntaxError),
        ("bogus", ExprSyntaxError),
        ("sin 2", ExprSyntaxError),
        ("(1+2", ExprSyntaxError),
        ("1+", ExprSyntaxError),
        ("2^k1", ExprSyntaxError),
        ("2^-3", ExprSyntaxError),
        ("k0", ExprSyntaxError),
        ("1 @ 2", ExprSyntaxError),
    ],
)
def test_syntax_errors(bad, kind):
    with pytest.raises(kind):
        parse(bad)


def test_syntax_error_offset():
    with pytest.raises(ExprSyntaxError) as err:
        parse("1 + bogus")
    assert err.value.offset == 4


def test_unknown_identifier_message():
    with pytest.raises(ExprSyntaxError, match="unknown identifier"):
        parse("lambda")


def test_division_by_zero_has_location():
    with pytest.raises(ExprEvalError) as err:
        ev("1 + 1/(k1-k1)", [0.5])
    assert err.value.offset == 5


def test_sqrt_negative_real_rejected():
    with pytest.raises(ExprEvalError, match="sqrt of negative real"):
        ev("sqrt(-1)")


def test_missing_coordinate():
    with pytest.raises(ExprEvalError, match="missing coordinate k2"):
        ev("k2", [0.5])


def test_zero_power_negative_is_division_error():
    with pytest.raises(ExprEvalError):
        ev("1/k1^2", [0.0])


# --- printer round trips -------------------------------------------------

_leaves = st.one_of(
    st.integers(0, 9).map(lambda n: Lit(complex(n))),
    st.floats(0.0, 100.0, allow_nan=False).map(lambda x: Lit(complex(x))),
    st.integers(0, 50).map(lambda n: Lit(complex(0, n / 4))),
    st.just(PiConst()),
    st.integers(1, 3).map(Coord),
)


def _combine(children):
    binop = st.builds(
        BinOp, st.sampled_from("+-*/"), children, children
    )
    return st.one_of(
        binop,
        st.builds(Neg, children),
        st.builds(Pow, children, st.integers(0, 4)),
        st.builds(Call, st.sampled_from(["sin", "cos", "exp", "sqrt"]), children),
    )


trees = st.recursive(_leaves, _combine, max_leaves=25)


@settings(max_examples=300, deadline=None)
@given(trees)
def test_print_parse_round_trip(tree):
    assert parse(to_text(tree)) == tree


@settings(max_examples=100, deadline=None)
@given(trees)
def test_double_round_trip_stable(tree):
    text = to_text(tree)
    assert to_text(parse(text)) == text


@pytest.mark.parametrize(
    "text",
    [
        "1-(2-3)",
        "(1+2)*3",
        "-(k1+k2)",
        "(-k1)^2",
        "(k1^2)^3",
        "sqrt(2)*sin(2*pi*k1)",
        "k1^2-1/12",
        "--k1",
        "1/(2*k2)",
    ],
)
def test_parse_print_parse_identity(text):
    tree = parse(text)
    assert parse(to_text(tree)) == tree
