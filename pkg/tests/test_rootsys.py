from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hcnil.chevalley import chevalley_constants
from hcnil.rootsys import (
    CartanMatrix,
    InvalidCartanMatrix,
    WeylGroupTooLarge,
    build_root_system,
    cartan_matrix,
    delta,
    exponents,
    parse_label,
    weyl_act,
    weyl_group,
)
from oracles import coxeter_exponents_oracle, exponent_table, float_root_count

SMALL = ["A1", "A2", "A3", "A4", "B2", "B3", "B4", "C2", "C3", "C4", "D3", "D4", "G2", "F4"]


@pytest.mark.parametrize("label,n_roots,n_pos", [("A1", 2, 1), ("A2", 6, 3), ("G2", 12, 6), ("B2", 8, 4)])
def test_root_counts(label, n_roots, n_pos):
    rs = build_root_system(label)
    assert len(rs.roots) == n_roots
    assert rs.n_pos == n_pos


@pytest.mark.parametrize("label", SMALL + ["E6", "E7", "E8"])
def test_root_count_matches_euclidean_reflections(label):
    rs = build_root_system(label)
    assert len(rs.roots) == float_root_count(rs.cartan.as_array())


@pytest.mark.parametrize("label", SMALL)
def test_root_system_structure(label):
    rs = build_root_system(label)
    coords = {r.coords for r in rs.roots}
    assert 2 * rs.n_pos == len(rs.roots)
    for r in rs.roots:
        assert (-r).coords in coords
        assert r.positive == (all(c >= 0 for c in r.coords) and any(r.coords))
        assert rs.norm2(r) > 0
        for i in range(rs.rank):
            assert rs.reflect(r, i) in coords
    for i in range(rs.rank):
        assert rs.simple_root(i).height == 1


@pytest.mark.parametrize("label,order", [("A1", 2), ("A2", 6), ("B2", 8), ("G2", 12), ("B3", 48), ("F4", 1152)])
def test_weyl_order(label, order):
    assert len(weyl_group(build_root_system(label))) == order


def test_weyl_e6_order():
    assert len(weyl_group(build_root_system("E6"))) == 51840


def test_weyl_a1_signs_and_identity():
    W = weyl_group(build_root_system("A1"))
    assert sorted(w.sign for w in W) == [-1, 1]
    e = W[0]
    assert e.word == () and e.sign == 1
    assert e.perm == tuple(range(2))


@pytest.mark.parametrize("label", ["A3", "B3", "G2"])
def test_weyl_elements_distinct_and_words_reduced(label):
    rs = build_root_system(label)
    W = weyl_group(rs)
    assert len(set(W)) == len(W)
    for w in W:
        assert w.sign == (-1) ** len(w.word)
        # reduced: length equals the number of positive roots sent negative
        neg = sum(1 for k in range(rs.n_pos) if w.perm[k] >= rs.n_pos)
        assert neg == len(w.word)


def test_weyl_cap():
    with pytest.raises(WeylGroupTooLarge, match="Weyl group too large: found at least"):
        weyl_group(build_root_system("B3"), cap=10)


def test_weyl_act_examples():
    rs = build_root_system("A1")
    W = weyl_group(rs)
    assert weyl_act(W[0], [Fraction(3)]) == [Fraction(3)]
    assert list(weyl_act(W[1], [1])) == [-1]
    rs2 = build_root_system("A2")
    s1 = next(w for w in weyl_group(rs2) if w.word == (0,))
    assert list(weyl_act(s1, [0, 1])) == [1, 1]


def test_weyl_act_dimension_mismatch():
    W = weyl_group(build_root_system("A2"))
    with pytest.raises(ValueError, match="dimension mismatch"):
        weyl_act(W[1], [1, 2, 3])


@pytest.mark.parametrize("label,expected", [("A1", [1]), ("A2", [1, 2]), ("G2", [1, 5])])
def test_exponent_examples(label, expected):
    assert sorted(exponents(build_root_system(label))) == expected


@pytest.mark.parametrize("label", SMALL + ["E6", "E7", "E8"])
def test_exponents_match_oracles(label):
    rs = build_root_system(label)
    m = sorted(exponents(rs))
    assert m == coxeter_exponents_oracle(rs.cartan.as_array())
    assert m == exponent_table(label)
    assert sum(m) == rs.n_pos


@pytest.mark.parametrize("label", SMALL)
def test_exponent_product_is_weyl_order(label):
    rs = build_root_system(label)
    assert int(np.prod([m + 1 for m in exponents(rs)])) == len(weyl_group(rs))


def test_delta_examples():
    assert delta(build_root_system("A1"), [Fraction(1)]) == 2
    assert delta(build_root_system("A2"), [Fraction(1), Fraction(0)]) == -2
    for label in ("A1", "B2", "G2"):
        rs = build_root_system(label)
        assert delta(rs, [Fraction(0)] * rs.rank) == 0


def test_delta_vectorised_matches_exact():
    rs = build_root_system("B2")
    H = np.array([[0.5, -1.25], [2.0, 0.75]])
    exact = [float(delta(rs, [Fraction(x) for x in row])) for row in H]
    assert np.allclose(delta(rs, H), exact, rtol=1e-14)


fractions = st.fractions(min_value=-5, max_value=5, max_denominator=7)


@pytest.mark.parametrize("label", ["A2", "B2", "G2"])
@given(data=st.data())
def test_delta_weyl_antisymmetry_exact(label, data):
    rs = build_root_system(label)
    H = data.draw(st.lists(fractions, min_size=rs.rank, max_size=rs.rank))
    d = delta(rs, H)
    for w in weyl_group(rs):
        assert delta(rs, weyl_act(w, H)) == w.sign * d


@given(t=st.fractions(min_value=-3, max_value=3, max_denominator=5), data=st.data())
def test_delta_homogeneous(t, data):
    rs = build_root_system("B2")
    H = data.draw(st.lists(fractions, min_size=2, max_size=2))
    assert delta(rs, [t * h for h in H]) == t**rs.n_pos * delta(rs, H)


@pytest.mark.parametrize("label", ["A2", "B2", "G2", "C3", "F4"])
def test_inner_product_matches_killing(label):
    rs = build_root_system(label)
    sc = chevalley_constants(rs)
    K = sc.killing_matrix
    for r in rs.pos_roots:
        co = np.array(rs.coroot(r))
        bhh = int(co @ K[: rs.rank, : rs.rank] @ co)
        assert rs.norm2(r) == Fraction(4, bhh)


def test_killing_dual_form_matches_rootsys():
    rs = build_root_system("G2")
    sc = chevalley_constants(rs)
    table = sc.killing_dual_form()
    for i in range(rs.rank):
        for j in range(rs.rank):
            assert table[i][j] == rs.inner[i][j]


@pytest.mark.parametrize("label", ["a2", " B3 ", "g2", "E6"])
def test_labels_case_insensitive(label):
    fam, n = parse_label(label)
    assert fam.isupper() and n >= 2


@pytest.mark.parametrize("label", ["Z9", "A0", "B1", "G3", "E9", "", "A-1", "F5"])
def test_unknown_labels(label):
    with pytest.raises(ValueError, match="unknown algebra label"):
        parse_label(label)


@pytest.mark.parametrize(
    "entries,word",
    [
        (((3, -1), (-1, 2)), "diagonal"),
        (((2, -4), (-1, 2)), "off-diagonal"),
        (((2, -1), (0, 2)), "zero"),
        (((2, -2), (-2, 2)), "positive definite"),
        (((2, 0), (0, 2)), "connected"),
    ],
)
def test_invalid_cartan_rejected(entries, word):
    with pytest.raises(InvalidCartanMatrix, match=word):
        CartanMatrix("X2", entries)


def test_catalog_conventions():
    assert cartan_matrix("G2").entries == ((2, -3), (-1, 2))
    assert cartan_matrix("B3").entries[2][1] == -2
    assert cartan_matrix("C3").entries[1][2] == -2
