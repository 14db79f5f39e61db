import numpy as np
import pytest

from src.common import lie_layers as ll
from src.common import matrix_groups as mg
from src.common import ring_matrix as rm
from src.common.errors import BadLevel, NotInKernel, NotInLieAlgebra, WrongParity
from src.common.galois_ring import construct_ring


def _group(family, size, p, r=1, n=1):
    return mg.make_group(family, size, construct_ring(p, r, n))


def _residue(D, ints):
    return rm.from_ints(D.ring.at_level(1), D.size, ints).astype(np.int64)


@pytest.mark.parametrize("family, size, p, dim", [
    ("GL", 2, 2, 4),
    ("SL", 2, 2, 3),
    ("PGL", 2, 3, 3),
    ("Sp", 4, 3, 10),
    ("GSp", 4, 3, 11),
    ("GSp", 4, 2, 11),
    ("SO_plus", 4, 3, 6),
    ("GSO_plus", 4, 3, 7),
])
def test_lie_dimension_matches_linearized_equations(family, size, p, dim):
    D = _group(family, size, p)
    assert len(ll.lie_fp_basis(D)) == dim
    assert dim == mg.lie_dimension(D)


def test_basis_over_extension_field():
    D = _group("SL", 2, 2, r=2)
    assert len(ll.lie_fp_basis(D)) == 6
    assert len(ll.lie_basis(D)) == 3


def test_lie_membership():
    D = _group("SL", 2, 3)
    assert ll.lie_membership(D, _residue(D, [1, 1, 0, 2]))
    assert not ll.lie_membership(D, _residue(D, [1, 0, 0, 0]))


def test_adjoint_action_preserves_lie_algebra():
    D = _group("Sp", 4, 3)
    X = ll.lie_fp_basis(D)[0]
    for g in mg.standard_generators(D):
        assert ll.lie_membership(D, ll.adjoint_action(D, g, X))


def test_bracket_projection_for_quotient():
    D = _group("PGL", 2, 3)
    E, F = _residue(D, [0, 1, 0, 0]), _residue(D, [0, 0, 1, 0])
    Z = ll.bracket(D, E, F)
    assert Z[0, 0, 0] == 0
    assert ll.lie_membership(D, Z)


def test_encode_decode():
    D = _group("GL", 2, 3, n=2)
    X = _residue(D, [1, 2, 0, 1])
    g = ll.encode(D, X, 1)
    assert rm.to_ints(g) == [4, 6, 0, 4]
    assert np.array_equal(ll.decode(D, g, 1), X)
    vec = ll.layer_codec(D, g, 1)
    assert vec.level == 1 and not vec.is_zero()
    s, Y = ll.leading_layer(D, g)
    assert s == 1 and np.array_equal(Y, X)


def test_leading_layer_edge_cases():
    D = _group("GL", 2, 3, n=3)
    assert ll.leading_layer(D, rm.identity(D.ring, 2)) is None
    assert ll.leading_layer(D, rm.from_ints(D.ring, 2, [2, 0, 0, 1])) == (0, None)
    s, X = ll.leading_layer(D, rm.from_ints(D.ring, 2, [1, 9, 0, 1]))
    assert s == 2 and X[0, 1, 0] == 1


def test_decode_errors():
    D = _group("GL", 2, 3, n=2)
    with pytest.raises(BadLevel):
        ll.decode(D, rm.identity(D.ring, 2), 2)
    with pytest.raises(NotInKernel):
        ll.decode(D, rm.from_ints(D.ring, 2, [2, 0, 0, 1]), 1)


def test_encode_rejects_non_lie_matrix():
    D = _group("SL", 2, 3, n=2)
    with pytest.raises(NotInLieAlgebra):
        ll.encode(D, _residue(D, [1, 0, 0, 0]), 1)


def test_quotient_decode_normalizes_scalars():
    D = _group("PGL", 2, 3, n=2)
    g = rm.from_ints(D.ring, 2, [2, 6, 0, 2])
    X = ll.decode(D, g, 1)
    assert X[..., 0].tolist() == [[0, 1], [0, 0]]


def test_commutator_matches_bracket_at_p2():
    D = _group("GL", 2, 2, n=3)
    x = rm.from_ints(D.ring, 2, [1, 2, 0, 1])
    y = rm.from_ints(D.ring, 2, [1, 0, 2, 1])
    check = ll.bracket_and_commutator_check(D, x, y)
    assert check.equal
    assert check.rhs[..., 0].tolist() == [[1, 0], [0, 1]]


def test_bracket_check_needs_p2_and_level3():
    with pytest.raises(WrongParity):
        ll.bracket_and_commutator_check(_group("GL", 2, 3, n=3), None, None)
    D = _group("GL", 2, 2, n=2)
    with pytest.raises(BadLevel):
        ll.bracket_and_commutator_check(D, rm.identity(D.ring, 2), rm.identity(D.ring, 2))


def test_adjoint_module_of_gl2():
    report = ll.adjoint_module_analysis(ll.adjoint_module(_group("GL", 2, 3)))
    assert report.dim == 4
    assert report.derived_dim == 3
    assert report.center_dim == 1
    assert report.quotient_dim == 1
    assert report.is_simple_derived and report.simple_certified


def test_adjoint_module_of_sl2_char3_is_simple():
    module = ll.adjoint_module(_group("SL", 2, 3))
    assert module.dim == 3
    report = ll.adjoint_module_analysis(module)
    assert report.center_dim == 0
    assert report.is_simple_derived
    assert len(report.minimal_submodules) == 1


@pytest.mark.parametrize("family, size, p, dim", [
    ("GL", 2, 3, 1),
    ("SL", 2, 2, 2),
    ("SL", 3, 3, 0),
    ("GL", 2, 2, 1),
    ("Sp", 4, 3, 0),
])
def test_lie_quotient_dim(family, size, p, dim):
    assert ll.lie_quotient_dim(_group(family, size, p)) == dim
