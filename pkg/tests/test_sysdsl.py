import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fracwin.scenario import BUILTIN, load_config
from fracwin.sysdsl import (
    BinOp,
    Call,
    EvaluationError,
    Neg,
    Num,
    ParseError,
    Time,
    Var,
    evaluate,
    parse,
    parse_expr,
    pretty,
    variables,
)


def ev(text, x=(), t=0.0, dim=None):
    return evaluate(parse_expr(text, dim=dim), x, t)


@pytest.mark.parametrize(
    "text,value",
    [
        ("2+3*4", 14.0),
        ("2*3^2", 18.0),
        ("-2^2", -4.0),
        ("2^3^2", 512.0),
        ("(2^3)^2", 64.0),
        ("10-4-3", 3.0),
        ("12/3/2", 2.0),
        ("2^-1", 0.5),
        ("-(1+2)*3", -9.0),
        ("2*-3", -6.0),
        ("abs(-2.5)", 2.5),
        ("exp(0) + cos(0) + sin(0)", 2.0),
        (".5e1", 5.0),
    ],
)
def test_precedence_fixtures(text, value):
    assert ev(text) == value


def test_state_and_time():
    assert ev("-x1 - x2", (3.0, -5.0), dim=2) == 2.0
    assert ev("3*x1^2 + 2*x1*x2 + 2*x2^2", (7.0, -3.0), dim=2) == 123.0
    assert ev("x2^3", (0.0, -5.0), dim=2) == -125.0
    assert ev("t^2 + 1", t=3.0) == 10.0


def test_example3_component_ast():
    e = parse_expr("-x1 + x2^3", dim=2)
    assert e == BinOp("+", Neg(Var(1)), BinOp("^", Var(2), Num(3.0)))
    assert variables(e) == {1, 2}
    assert parse_expr("0") == Num(0.0)


@pytest.mark.parametrize(
    "text,kind,col",
    [
        ("2x1", "lexical", 2),
        ("x1 $ 2", "lexical", 4),
        ("1 +", "syntax", 4),
        ("(1 + 2", "syntax", 7),
        ("x1 x2", "syntax", 4),
        ("sin(1, 2)", "arity", 1),
        ("cos()", "arity", 1),
        ("x3", "range", 1),
        ("x1^x2", "syntax", 4),
        ("foo(2)", "syntax", 1),
        ("x0", "syntax", 1),
    ],
)
def test_diagnostics(text, kind, col):
    with pytest.raises(ParseError) as info:
        parse_expr(text, dim=2)
    assert info.value.kind == kind
    assert info.value.line == 1
    assert info.value.col == col


def test_expected_token_set():
    with pytest.raises(ParseError) as info:
        parse_expr("2 *")
    assert {"number", "(", "x<i>", "t"} <= set(info.value.expected)


def test_deep_nesting_is_a_diagnostic():
    with pytest.raises(ParseError):
        parse_expr("(" * 5000 + "1" + ")" * 5000)
    with pytest.raises(ParseError):
        parse_expr("-" * 5000 + "1")
    with pytest.raises(ParseError):
        parse_expr("+".join(["1"] * 5000))
    assert ev("(" * 50 + "1" + ")" * 50) == 1.0


@pytest.mark.parametrize(
    "text,x,where",
    [
        ("1/(x1 - 1)", (1.0,), "1 / (x1 - 1)"),
        ("x1^-2", (0.0,), "x1^-2"),
        ("exp(x1)", (1000.0,), "exp(x1)"),
        ("x1^0.5", (-1.0,), "x1^0.5"),
        ("x1*x1*x1", (1e200,), "x1 * x1"),
    ],
)
def test_evaluation_errors_name_the_subexpression(text, x, where):
    with pytest.raises(EvaluationError) as info:
        ev(text, x, dim=1)
    assert pretty(info.value.subexpr) == where
    assert where in str(info.value)


def test_integer_powers_use_repeated_multiplication():
    x = 1.1
    assert ev("x1^7", (x,), dim=1) == x * x * x * x * x * x * x
    assert ev("x1^2.5", (4.0,), dim=1) == 32.0


# ---------------------------------------------------------------- round trip

_num = st.floats(0.0, 1e6, allow_nan=False, allow_infinity=False).map(abs).map(Num)
_leaf = st.one_of(_num, st.integers(1, 3).map(Var), st.just(Time()))
_const = st.recursive(
    _num,
    lambda c: st.one_of(c.map(Neg), st.tuples(st.sampled_from("+-*/"), c, c).map(lambda a: BinOp(*a))),
    max_leaves=4,
)


def _extend(sub):
    return st.one_of(
        sub.map(Neg),
        st.tuples(st.sampled_from("+-*/"), sub, sub).map(lambda a: BinOp(*a)),
        st.tuples(sub, _const).map(lambda a: BinOp("^", *a)),
        st.tuples(st.sampled_from(["sin", "cos", "exp", "abs"]), sub).map(lambda a: Call(*a)),
    )


ASTS = st.recursive(_leaf, _extend, max_leaves=25)


@given(ASTS)
def test_pretty_parse_round_trip(e):
    text = pretty(e)
    assert parse_expr(text) == e
    assert pretty(parse_expr(text)) == text


def test_example3_round_trip():
    ps = parse(BUILTIN["example3"])
    texts = [pretty(c) for c in ps.components]
    assert texts == ["-x1 + x2^3", "-x1 - x2"]
    assert [parse_expr(s, dim=2) for s in texts] == list(ps.components)


# ---------------------------------------------------------------- fuzz

_ALPHABET = list("0123456789.eE+-*/^(), \tx1t") + ["sin", "cos", "exp", "abs", "x2", "x9", "#", "=", "\n", "é", "\x00"]


def _fuzz_strings(n, seed):
    rng = random.Random(seed)
    for _ in range(n):
        yield "".join(rng.choice(_ALPHABET) for _ in range(rng.randint(0, 30)))


def test_parser_fuzz_never_crashes():
    parsed = 0
    for s in _fuzz_strings(10_000, seed=2024):
        try:
            e = parse_expr(s, dim=2)
        except ParseError as exc:
            assert exc.line >= 1 and exc.col >= 1
            continue
        parsed += 1
        assert parse_expr(pretty(e), dim=2) == e
    assert parsed > 100  # the generator does reach valid expressions


@given(st.binary(max_size=200))
def test_document_parser_is_total_on_bytes(blob):
    try:
        parse(blob)
    except ParseError as exc:
        assert exc.line >= 1 and exc.col >= 1


# ---------------------------------------------------------------- documents

def test_document_fields():
    ps = parse("# demo\nalpha = 0.5\nomega = 1\nx0 = 1, 2\nf1 = x2\nf2 = -x1  # spring\nV = x1^2 + x2^2\n")
    assert ps.dim == 2
    assert ps.metadata["alpha"] == 0.5
    assert ps.metadata["x0"] == (1.0, 2.0)
    assert pretty(ps.V) == "x1^2 + x2^2"


@pytest.mark.parametrize(
    "doc,line",
    [
        ("f1 = x1\nf1 = x1\n", 2),
        ("f1 = x1\nbogus = 3\n", 2),
        ("f1 = x1\nalpha = fast\n", 2),
        ("f1 = x1\nf3 = x1\n", 1),
        ("x0 = 1\n", 1),
        ("f1 = x1\nseed = 1.5\n", 2),
        ("f1 = x1\nf2 = x3\n", 2),
        ("f1 = x1\nbox = 1:0\n", 2),
        ("f1 = x1\n  just text\n", 2),
        ("f1 = x1\nx0 = 1, 2\n", 2),
    ],
)
def test_document_diagnostics(doc, line):
    with pytest.raises(ParseError) as info:
        parse(doc)
    assert info.value.line == line


def test_expression_columns_are_document_relative():
    with pytest.raises(ParseError) as info:
        parse("alpha = 0.5\nf1 = x1 + $\n")
    assert (info.value.line, info.value.col) == (2, 11)


# ---------------------------------------------------------------- built-ins

HAND = {
    "example1": lambda x, t: [-x[0]],
    "example2": lambda x, t: [x[1], -x[0] - x[1]],
    "example3": lambda x, t: [-x[0] + x[1] ** 3, -x[0] - x[1]],
}


@pytest.mark.parametrize("name", sorted(BUILTIN))
def test_builtin_fields_match_hand_code(name):
    cfg = load_config(BUILTIN[name], name)
    field = cfg.vector_field()
    rng = np.random.default_rng(0)
    for x in rng.uniform(-10, 10, size=(200, cfg.dim)):
        got = field(x, 0.0)
        want = HAND[name](x, 0.0)
        assert np.max(np.abs(got - want)) <= 1e-15 * max(1.0, float(np.max(np.abs(want))))
