import numpy as np
import pytest

from src.common import ring_matrix as rm
from src.common.errors import NotInvertible, ParseError
from src.common.galois_ring import RingElement, construct_ring, frobenius_auto, zero


def _naive_mul(desc, A, B):
    EA, EB = rm.entries(desc, A), rm.entries(desc, B)
    m = len(EA)
    rows = []
    for i in range(m):
        row = []
        for j in range(m):
            acc = zero(desc)
            for k in range(m):
                acc = acc + EA[i][k] * EB[k][j]
            row.append(acc)
        rows.append(row)
    return rm.from_entries(desc, rows)


@pytest.fixture
def rng():
    return np.random.default_rng(7)


def test_identity_and_keys():
    W = construct_ring(3, 2, 2)
    I = rm.identity(W, 3)
    assert I.shape == (3, 3, 2)
    assert rm.is_identity(I)
    assert not rm.is_identity(rm.zeros(W, 3))
    assert rm.key(I) == rm.key(I.copy())


def test_from_ints_layouts():
    W = construct_ring(2, 2, 2)
    M = rm.from_ints(W, 2, [1, 2, 3, 5])
    assert M[:, :, 0].tolist() == [[1, 2], [3, 1]]
    assert not M[:, :, 1].any()
    N = rm.from_ints(W, 2, [1, 0, 0, 1, 1, 1, 1, 0])
    assert rm.to_ints(N) == [1, 0, 0, 1, 1, 1, 1, 0]
    with pytest.raises(ParseError):
        rm.from_ints(W, 2, [1, 2, 3])


@pytest.mark.parametrize("p, r, n", [(3, 1, 2), (2, 2, 3), (5, 2, 1)])
def test_mat_mul_matches_entrywise(p, r, n, rng):
    W = construct_ring(p, r, n)
    A = rm.random_matrix(W, 3, rng)
    B = rm.random_matrix(W, 3, rng)
    assert np.array_equal(rm.mat_mul(W, A, B), _naive_mul(W, A, B))


def test_batch_products_agree(rng):
    W = construct_ring(2, 2, 2)
    A = np.stack([rm.random_matrix(W, 2, rng) for _ in range(4)])
    B = rm.random_matrix(W, 2, rng)
    batch = rm.mat_mul_batch(W, A, B)
    left = rm.left_mul_batch(W, B, A)
    pair = rm.mat_mul_pairwise(W, A, A[::-1])
    for k in range(4):
        assert np.array_equal(batch[k], rm.mat_mul(W, A[k], B))
        assert np.array_equal(left[k], rm.mat_mul(W, B, A[k]))
        assert np.array_equal(pair[k], rm.mat_mul(W, A[k], A[3 - k]))


def test_apply_to_vectors():
    W = construct_ring(3, 1, 1)
    g = rm.from_ints(W, 2, [1, 1, 0, 1])
    P = np.array([[[0], [1]], [[1], [0]]], dtype=np.int64)
    out = rm.apply_to_vectors(W, g, P)
    assert out[..., 0].tolist() == [[1, 1], [1, 0]]


def test_scalar_mul():
    W = construct_ring(3, 1, 2)
    M = rm.from_ints(W, 2, [1, 2, 3, 4])
    out = rm.scalar_mul(W, RingElement.of(W, 2), M)
    assert rm.to_ints(out) == [2, 4, 6, 8]


def test_det_and_inverse():
    W = construct_ring(3, 1, 2)
    M = rm.from_ints(W, 2, [1, 2, 3, 4])
    assert rm.det(W, M) == RingElement.of(W, 7)
    Minv = rm.inverse(W, M)
    assert rm.is_identity(rm.mat_mul(W, M, Minv))
    assert rm.is_invertible(W, M)


def test_det_without_unit_pivot():
    W = construct_ring(3, 1, 2)
    M = rm.from_ints(W, 2, [3, 1, 0, 3])
    assert rm.det(W, M).is_zero()
    assert not rm.is_invertible(W, M)
    with pytest.raises(NotInvertible):
        rm.inverse(W, M)


def test_det_is_multiplicative(rng):
    W = construct_ring(2, 2, 2)
    A = rm.random_matrix(W, 3, rng)
    B = rm.random_matrix(W, 3, rng)
    assert rm.det(W, rm.mat_mul(W, A, B)) == rm.det(W, A) * rm.det(W, B)


def test_mat_pow():
    W = construct_ring(5, 1, 1)
    M = rm.from_ints(W, 2, [1, 1, 0, 1])
    assert rm.to_ints(rm.mat_pow(W, M, 3)) == [1, 3, 0, 1]
    assert rm.is_identity(rm.mat_pow(W, M, 5))


def test_reduce_and_lift_matrix():
    W = construct_ring(3, 1, 3)
    M = rm.from_ints(W, 2, [10, 4, 26, 1])
    R = rm.reduce_matrix(M, W, 1)
    assert rm.to_ints(R) == [1, 1, 2, 1]
    assert rm.to_ints(rm.lift_matrix(R, W)) == [1, 1, 2, 1]


def test_conjugate_is_entrywise_frobenius(rng):
    W = construct_ring(2, 2, 2)
    M = rm.random_matrix(W, 2, rng)
    C = rm.conjugate(W, M)
    for i in range(2):
        for j in range(2):
            assert rm.entry(W, C, i, j) == frobenius_auto(rm.entry(W, M, i, j))
    assert np.array_equal(rm.conjugate(W, C), M)


def test_transpose_add_sub():
    W = construct_ring(3, 1, 1)
    A = rm.from_ints(W, 2, [1, 2, 0, 1])
    assert rm.to_ints(rm.transpose(A)) == [1, 0, 2, 1]
    assert rm.to_ints(rm.add(W, A, A)) == [2, 1, 0, 2]
    assert not rm.sub(W, A, A).any()
