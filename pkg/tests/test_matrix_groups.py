import numpy as np
import pytest

from src.common import matrix_groups as mg
from src.common import ring_matrix as rm
from src.common.errors import BadLevel, NotAMember, NotInstantiable, ParseError, UnknownFamily, UnsupportedFamily
from src.common.galois_ring import RingElement, construct_ring
from src.common.perm_action import permutation_group


def _group(text):
    return mg.parse_descriptor(text)


def test_parse_descriptor():
    D = _group("GSp(4, W(p=3,r=1,n=1))")
    assert (D.family, D.size, D.level) == ("GSp", 4, 1)
    assert D.has_multiplier
    assert str(D) == "GSp(4, W(p=3,r=1,n=1))"
    Q = _group("SL_mod_mu_m(4, W(p=3,r=1,n=1), m=2)")
    assert Q.quotient_modulus == 2 and Q.is_quotient and Q.cover_family == "SL"
    with pytest.raises(ParseError):
        _group("GSp 4")


@pytest.mark.parametrize("family, size, ring", [
    ("Sp", 3, (3, 1, 1)),
    ("SO_minus", 4, (3, 1, 2)),
    ("SO_plus", 5, (2, 1, 1)),
    ("U", 2, (3, 1, 1)),
    ("SL_mod_mu_m", 4, (2, 1, 1)),
])
def test_not_instantiable(family, size, ring):
    with pytest.raises(NotInstantiable):
        mg.make_group(family, size, construct_ring(*ring), 2 if family == "SL_mod_mu_m" else None)


def test_unknown_family():
    with pytest.raises(UnknownFamily):
        mg.make_group("E8", 248, construct_ring(2, 1, 1))


@pytest.mark.parametrize("text, order", [
    ("GL(2, W(p=2,r=1,n=1))", 6),
    ("SL(2, W(p=3,r=1,n=1))", 24),
    ("PGL(2, W(p=3,r=1,n=1))", 24),
    ("Sp(4, W(p=2,r=1,n=1))", 720),
    ("GSp(4, W(p=3,r=1,n=1))", 103680),
    ("SO_plus(4, W(p=2,r=1,n=1))", 36),
    ("GL(2, W(p=2,r=1,n=2))", 96),
    ("SL_mod_mu_m(2, W(p=3,r=1,n=1), m=2)", 12),
])
def test_group_order_formula(text, order):
    assert mg.group_order(_group(text)) == order


@pytest.mark.parametrize("text, dim", [
    ("GL(3, W(p=2,r=1,n=1))", 9),
    ("PGL(3, W(p=2,r=1,n=1))", 8),
    ("GSp(4, W(p=2,r=1,n=1))", 11),
    ("SO_plus(5, W(p=3,r=1,n=1))", 10),
    ("GSO_plus(6, W(p=2,r=1,n=1))", 16),
])
def test_lie_dimension(text, dim):
    assert mg.lie_dimension(_group(text)) == dim


@pytest.mark.parametrize("text", [
    "GL(2, W(p=2,r=1,n=1))",
    "GL(2, W(p=3,r=1,n=1))",
    "GL(2, W(p=2,r=1,n=2))",
    "PGL(2, W(p=3,r=1,n=1))",
    "Sp(4, W(p=2,r=1,n=1))",
    "SO_plus(4, W(p=2,r=1,n=1))",
])
def test_standard_generators_generate(text):
    D = _group(text)
    gens = mg.standard_generators(D)
    assert permutation_group(D, gens).group.order() == mg.group_order(D)


@pytest.mark.parametrize("text", [
    "SL(3, W(p=2,r=2,n=2))",
    "GSp(4, W(p=3,r=1,n=2))",
    "SO_plus(4, W(p=2,r=1,n=1))",
    "SO_minus(4, W(p=2,r=1,n=1))",
    "SO_plus(5, W(p=3,r=1,n=1))",
    "GSO_plus(4, W(p=3,r=1,n=1))",
])
def test_standard_generators_are_members(text):
    D = _group(text)
    for g in mg.standard_generators(D):
        assert mg.membership_and_multiplier(g, D).member


def test_symplectic_multiplier():
    F = construct_ring(3, 1, 1)
    D = mg.make_group("GSp", 4, F)
    M = rm.from_ints(F, 4, [2, 0, 0, 0, 0, 2, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1])
    res = mg.membership_and_multiplier(M, D)
    assert res.member
    assert res.multiplier == RingElement.of(F, 2)
    sp = mg.membership_and_multiplier(M, D.with_family("Sp"))
    assert not sp.member and sp.reason == "multiplier != 1"


def test_non_members():
    F = construct_ring(3, 1, 1)
    D = mg.make_group("SL", 2, F)
    singular = rm.from_ints(F, 2, [1, 1, 1, 1])
    assert mg.membership_and_multiplier(singular, D).reason == "not invertible"
    with pytest.raises(NotAMember):
        mg.make_element(rm.from_ints(F, 2, [2, 0, 0, 1]), D)
    assert mg.make_element(rm.from_ints(F, 2, [2, 0, 0, 2]), D).multiplier is None


def test_quotient_elements_are_canonical():
    F = construct_ring(3, 1, 1)
    D = mg.make_group("PGL", 2, F)
    a = mg.make_element(rm.from_ints(F, 2, [2, 1, 0, 2]), D)
    b = mg.make_element(rm.from_ints(F, 2, [1, 2, 0, 1]), D)
    assert a.key() == b.key()
    assert rm.to_ints(a.matrix)[0] == 1


def test_reduce_element():
    D = _group("GL(2, W(p=3,r=1,n=2))")
    M = rm.from_ints(D.ring, 2, [4, 3, 0, 1])
    assert rm.to_ints(mg.reduce_element(M, D, 1)) == [1, 0, 0, 1]
    with pytest.raises(BadLevel):
        mg.reduce_element(M, D, 3)


def test_random_element_is_member():
    D = _group("Sp(4, W(p=3,r=1,n=2))")
    M = mg.random_element(D, np.random.default_rng(1))
    assert mg.membership_and_multiplier(M, D).member


def test_weil_restriction_is_a_homomorphism():
    D = _group("GL(2, W(p=2,r=2,n=1))")
    R = mg.weil_restriction(D)
    assert R.size == 4 and R.degree == 2
    rng = np.random.default_rng(3)
    A = mg.random_element(D, rng)
    B = mg.random_element(D, rng)
    TA, TB = R.transport(A), R.transport(B)
    assert np.array_equal(R.transport(rm.mat_mul(D.ring, A, B)), rm.mat_mul(R.ring, TA, TB))
    assert np.array_equal(R.untransport(TA), A)
    assert permutation_group(R, R.generators()).group.order() == R.order()
    with pytest.raises(UnsupportedFamily):
        mg.weil_restriction(_group("Sp(2, W(p=2,r=2,n=1))"))


def test_sc_image():
    img = mg.sc_image(_group("GL(2, W(p=3,r=1,n=1))"))
    assert (img.order, img.index, img.cover) == (24, 2, "SL")
    img = mg.sc_image(_group("PGL(2, W(p=3,r=1,n=1))"))
    assert (img.order, img.index) == (12, 2)
