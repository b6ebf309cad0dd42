import pytest

from mflab.parser import MAX_EXPONENT, ParseError, parse_factored, parse_poly
from mflab.poly import RingCtx

XY = RingCtx(("x", "y"))
XYUV = RingCtx(("x", "y", "u", "v"))


@pytest.mark.parametrize("src, expect", [
    ("x", {(1, 0): 1}),
    ("-x", {(1, 0): 32002}),
    ("2*x^3 - x^3", {(3, 0): 1}),
    ("(x+y)^2", {(2, 0): 1, (1, 1): 2, (0, 2): 1}),
    ("x*(y*(x))", {(2, 1): 1}),
    ("  x  *  y ", {(1, 1): 1}),
    ("7", {(0, 0): 7}),
    ("x^0", {(0, 0): 1}),
])
def test_grammar(src, expect):
    assert parse_poly(src, XY).terms == expect


@pytest.mark.parametrize("src, pos", [
    ("x +", 3),
    ("x * * y", 4),
    ("(x + y", 6),
    ("x ^ y", 4),
    ("x $ y", 2),
    ("x y", 2),
])
def test_syntax_errors_report_position(src, pos):
    with pytest.raises(ParseError) as err:
        parse_poly(src, XY)
    assert err.value.pos == pos


def test_unknown_variable():
    with pytest.raises(ParseError, match="unknown variable 'z'"):
        parse_poly("x + z", XY)


def test_exponent_cap():
    parse_poly(f"x^{MAX_EXPONENT}", XY)
    with pytest.raises(ParseError, match="exceeds"):
        parse_poly(f"x^{MAX_EXPONENT + 1}", XY)


def test_factored_forms():
    assert [str(g) for g in parse_factored("x * y * (x+y)", XY)] == ["x", "y", "x + y"]
    assert [str(g) for g in parse_factored("x^2 + y^3", XY)] == ["y^3 + x^2"]
    assert [str(g) for g in parse_factored("x*y + u*v", XYUV)] == ["x*y + u*v"]
    assert len(parse_factored("x*(x^2+y^3)", XY)) == 2
    with pytest.raises(ParseError):
        parse_factored("x*y)", XY)
