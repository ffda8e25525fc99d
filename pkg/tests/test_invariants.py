import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hcnil.algebra import load_algebra
from hcnil.invariants import DSLSyntaxError, parse_invariant


def test_single_word():
    F = parse_invariant("tr(X Y)")
    assert F.terms == ((1.0, (("X", "Y"),)),)
    assert F.degree == 2 and not F.is_constant


def test_two_terms_with_coefficients():
    F = parse_invariant("2*tr(X X Y)*tr(X Y) - tr(Y Y)")
    assert F.terms == ((2.0, (("X", "X", "Y"), ("X", "Y"))), (-1.0, (("Y", "Y"),)))
    assert F.degree == 5


def test_constants_and_leading_sign():
    assert parse_invariant("1").is_constant
    assert parse_invariant("1").terms == ((1.0, ()),)
    assert parse_invariant("-0.5*tr(X)").terms == ((-0.5, (("X",),)),)
    assert parse_invariant("  tr( X  Y )+3 ").terms == ((1.0, (("X", "Y"),)), (3.0, ()))


@pytest.mark.parametrize(
    "text,pos",
    [("tr()", 3), ("tr(X Z)", 5), ("tr(XY)", 3), ("tr(X Y", 6), ("2*", 2), ("tr(X) tr(Y)", 6), ("", 0),
     ("tr(X) +", 7), ("*tr(X)", 0)],
)
def test_syntax_errors_report_position(text, pos):
    with pytest.raises(DSLSyntaxError) as info:
        parse_invariant(text)
    assert info.value.position == pos
    assert f"position {pos}" in str(info.value)


def test_empty_word_message():
    with pytest.raises(DSLSyntaxError, match="empty trace word"):
        parse_invariant("tr()")


words = st.lists(st.sampled_from("XY"), min_size=1, max_size=4).map(tuple)
term = st.tuples(st.integers(1, 9), st.lists(words, min_size=1, max_size=3).map(tuple))


@given(st.lists(term, min_size=1, max_size=4), st.lists(st.booleans(), min_size=4, max_size=4))
def test_parse_round_trip(terms, signs):
    parts = []
    for k, (c, ws) in enumerate(terms):
        body = "*".join(f"tr({' '.join(w)})" for w in ws)
        sign = "-" if signs[k] else "+"
        parts.append(f"{sign} {c}*{body}")
    text = " ".join(parts)
    F = parse_invariant(text)
    expected = tuple(((-1.0 if signs[k] else 1.0) * c, ws) for k, (c, ws) in enumerate(terms))
    assert F.terms == expected


@given(st.integers(0, 10_000))
def test_conjugation_invariance(seed):
    rng = np.random.default_rng(seed)
    F = parse_invariant("tr(X Y X Y) - 2*tr(X X)*tr(Y) + 0.5*tr(X X Y Y)")
    X = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    Y = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    g = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)) + 2 * np.eye(3)
    gi = np.linalg.inv(g)
    a, b = F.evaluate(X, Y), F.evaluate(g @ X @ gi, g @ Y @ gi)
    assert abs(a - b) <= 1e-10 * max(1, abs(a))


def test_evaluate_on_algebra_elements_and_batches():
    alg = load_algebra("A2")
    F = parse_invariant("tr(X Y)", alg.rep)
    rng = np.random.default_rng(0)
    x = rng.standard_normal((4, alg.sc.dim))
    y = rng.standard_normal((4, alg.sc.dim))
    vals = F(x, y)
    kil = np.einsum("ni,ij,nj->n", x, alg.sc.killing_matrix, y)
    assert np.allclose(vals * alg.rep.index_ratio, kil)
    with pytest.raises(ValueError, match="representation"):
        parse_invariant("tr(X)")(x, y)
