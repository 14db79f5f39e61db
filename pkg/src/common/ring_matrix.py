from functools import lru_cache
from typing import Hashable, List, Sequence

import numpy as np

from src.common.errors import NotInvertible, ParseError, ShapeMismatch
from src.common.galois_ring import (
    RingDescriptor,
    RingElement,
    frobenius_auto,
    gen_t,
    mult_table,
    one,
    zero,
)

# Matrices over W_n(F_q) are numpy arrays of shape (m, m, r): entry (i, j) holds the
# little-endian coefficient vector of a ring element. Batches carry a leading axis.


def dtype_for(desc: RingDescriptor, m: int):
    N = desc.characteristic
    if max(m, desc.r * desc.r) * N * N < 2 ** 62:
        return np.int64
    return object


def identity(desc: RingDescriptor, m: int) -> np.ndarray:
    M = np.zeros((m, m, desc.r), dtype=dtype_for(desc, m))
    for i in range(m):
        M[i, i, 0] = 1
    return M


def zeros(desc: RingDescriptor, m: int) -> np.ndarray:
    return np.zeros((m, m, desc.r), dtype=dtype_for(desc, m))


def from_entries(desc: RingDescriptor, rows: Sequence[Sequence[RingElement]]) -> np.ndarray:
    m = len(rows)
    M = zeros(desc, m)
    for i, row in enumerate(rows):
        if len(row) != m:
            raise ShapeMismatch("matrix rows must have equal length")
        for j, a in enumerate(row):
            M[i, j] = a.coeffs
    return M


def from_ints(desc: RingDescriptor, m: int, values: Sequence[int]) -> np.ndarray:
    """Row-major integers; over r > 1 each entry is r consecutive coefficients."""
    vals = [int(v) for v in values]
    if len(vals) == m * m and desc.r == 1:
        data = np.array(vals, dtype=object).reshape(m, m, 1)
    elif len(vals) == m * m * desc.r:
        data = np.array(vals, dtype=object).reshape(m, m, desc.r)
    elif len(vals) == m * m:
        data = np.zeros((m, m, desc.r), dtype=object)
        data[:, :, 0] = np.array(vals, dtype=object).reshape(m, m)
    else:
        raise ParseError(f"{len(vals)} integers do not describe a {m}x{m} matrix over {desc}")
    return (data % desc.characteristic).astype(dtype_for(desc, m))


def to_ints(M: np.ndarray) -> List[int]:
    if M.shape[2] == 1:
        return [int(v) for v in M[:, :, 0].reshape(-1)]
    return [int(v) for v in M.reshape(-1)]


def entry(desc: RingDescriptor, M: np.ndarray, i: int, j: int) -> RingElement:
    return RingElement(desc, tuple(int(c) for c in M[i, j]))


def entries(desc: RingDescriptor, M: np.ndarray) -> List[List[RingElement]]:
    m = M.shape[0]
    return [[entry(desc, M, i, j) for j in range(m)] for i in range(m)]


def key(M: np.ndarray) -> Hashable:
    if M.dtype == object:
        return tuple(int(v) for v in M.reshape(-1))
    return M.tobytes()


def is_identity(M: np.ndarray) -> bool:
    m = M.shape[0]
    return bool(np.array_equal(M[..., 0], np.eye(m, dtype=M.dtype)) and not M[..., 1:].any())


# =========================
# ARITHMETIC
# =========================
def _table(desc: RingDescriptor, dtype) -> np.ndarray:
    T = mult_table(desc)
    return T if dtype != object else T.astype(object)


def mat_mul(desc: RingDescriptor, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    N = desc.characteristic
    if desc.r == 1:
        return ((A[..., 0] @ B[..., 0]) % N)[..., None]
    C = np.tensordot(A, B, axes=([1], [0])) % N
    return np.tensordot(C, _table(desc, A.dtype), axes=([1, 3], [0, 1])) % N


def mat_mul_batch(desc: RingDescriptor, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """(b, m, m, r) times (m, m, r)."""
    N = desc.characteristic
    if desc.r == 1:
        return ((A[..., 0] @ B[..., 0]) % N)[..., None]
    C = np.tensordot(A, B, axes=([2], [0])) % N
    return np.tensordot(C, _table(desc, A.dtype), axes=([2, 4], [0, 1])) % N


def mat_mul_pairwise(desc: RingDescriptor, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """A[b] @ B[b] for equally long (or broadcastable) batches."""
    N = desc.characteristic
    if desc.r == 1:
        return ((A[..., 0] @ B[..., 0]) % N)[..., None]
    T = _table(desc, A.dtype)
    shape = np.broadcast_shapes(A.shape[:-3], B.shape[:-3]) + A.shape[-3:-2] + B.shape[-2:]
    out = np.zeros(shape, dtype=A.dtype)
    for k in range(desc.r):
        for l in range(desc.r):
            C = (A[..., k] @ B[..., l]) % N
            for u in range(desc.r):
                if T[k, l, u]:
                    out[..., u] = (out[..., u] + C * T[k, l, u]) % N
    return out


def left_mul_batch(desc: RingDescriptor, A: np.ndarray, Bs: np.ndarray) -> np.ndarray:
    """A times each matrix of the batch Bs."""
    return mat_mul_pairwise(desc, A[None], Bs)


def apply_to_vectors(desc: RingDescriptor, g: np.ndarray, P: np.ndarray) -> np.ndarray:
    """g acting on column vectors stored as (b, m, r)."""
    N = desc.characteristic
    if desc.r == 1:
        return ((P[..., 0] @ g[..., 0].T) % N)[..., None]
    C = np.tensordot(P, g, axes=([1], [1])) % N
    return np.tensordot(C, _table(desc, P.dtype), axes=([1, 3], [0, 1])) % N


def scalar_mul(desc: RingDescriptor, a: RingElement, M: np.ndarray) -> np.ndarray:
    N = desc.characteristic
    x = np.array(a.coeffs, dtype=M.dtype)
    S = np.tensordot(x, _table(desc, M.dtype), axes=([0], [1])) % N
    return np.tensordot(M, S, axes=([2], [0])) % N


def scalar_mul_batch(desc: RingDescriptor, X: np.ndarray, s: np.ndarray) -> np.ndarray:
    """X of shape (b, ..., r) times per-item scalars s of shape (b, r)."""
    N = desc.characteristic
    S = np.tensordot(s, _table(desc, X.dtype), axes=([1], [1])) % N
    shape = X.shape
    flat = X.reshape(shape[0], -1, shape[-1])
    return (np.matmul(flat, S) % N).reshape(shape)


def add(desc: RingDescriptor, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return (A + B) % desc.characteristic


def sub(desc: RingDescriptor, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return (A - B) % desc.characteristic


def transpose(M: np.ndarray) -> np.ndarray:
    return M.transpose(1, 0, 2).copy()


def mat_pow(desc: RingDescriptor, M: np.ndarray, e: int) -> np.ndarray:
    result = identity(desc, M.shape[0]).astype(M.dtype)
    base = M
    while e:
        if e & 1:
            result = mat_mul(desc, result, base)
        base = mat_mul(desc, base, base)
        e >>= 1
    return result


def reduce_matrix(M: np.ndarray, desc: RingDescriptor, m: int) -> np.ndarray:
    target = desc.at_level(m)
    return (M % target.characteristic).astype(dtype_for(target, M.shape[0]))


def lift_matrix(M: np.ndarray, desc: RingDescriptor) -> np.ndarray:
    return M.astype(dtype_for(desc, M.shape[0]))


@lru_cache(maxsize=None)
def _frobenius_matrix(desc: RingDescriptor, times: int) -> np.ndarray:
    # column i holds the coefficients of sigma^times(t^i)
    cols = [frobenius_auto(gen_t(desc, i) if i else one(desc), times).coeffs for i in range(desc.r)]
    return np.array(cols, dtype=np.int64).T


def conjugate(desc: RingDescriptor, M: np.ndarray, times: int = 1) -> np.ndarray:
    if desc.r == 1:
        return M.copy()
    F = _frobenius_matrix(desc, times).astype(M.dtype)
    return np.tensordot(M, F, axes=([2], [1])) % desc.characteristic


# =========================
# DETERMINANT / INVERSE
# =========================
def _laplace_det(desc: RingDescriptor, A: List[List[RingElement]]) -> RingElement:
    m = len(A)
    dp = {0: one(desc)}
    for i in range(m):
        nxt = {}
        for mask, val in dp.items():
            for j in range(m):
                if mask & (1 << j):
                    continue
                above = bin(mask >> (j + 1)).count("1")
                term = val * A[i][j]
                if above % 2:
                    term = -term
                nm = mask | (1 << j)
                nxt[nm] = nxt[nm] + term if nm in nxt else term
        dp = nxt
    return dp.get((1 << m) - 1, one(desc)) if m else one(desc)


def det(desc: RingDescriptor, M: np.ndarray) -> RingElement:
    A = entries(desc, M)
    m = len(A)
    result = one(desc)
    rows = [list(row) for row in A]
    for j in range(m):
        piv = next((i for i in range(j, m) if rows[i][j].is_unit()), None)
        if piv is None:
            return _laplace_det(desc, A)
        if piv != j:
            rows[j], rows[piv] = rows[piv], rows[j]
            result = -result
        pv = rows[j][j]
        result = result * pv
        inv = pv.inverse()
        for i in range(j + 1, m):
            if rows[i][j].is_zero():
                continue
            f = rows[i][j] * inv
            rows[i] = [a - f * b for a, b in zip(rows[i], rows[j])]
    return result


def inverse(desc: RingDescriptor, M: np.ndarray) -> np.ndarray:
    m = M.shape[0]
    A = entries(desc, M)
    I = [[one(desc) if i == j else zero(desc) for j in range(m)] for i in range(m)]
    rows = [A[i] + I[i] for i in range(m)]
    for j in range(m):
        piv = next((i for i in range(j, m) if rows[i][j].is_unit()), None)
        if piv is None:
            raise NotInvertible(f"matrix is not invertible over {desc}")
        rows[j], rows[piv] = rows[piv], rows[j]
        inv = rows[j][j].inverse()
        rows[j] = [a * inv for a in rows[j]]
        for i in range(m):
            if i != j and not rows[i][j].is_zero():
                f = rows[i][j]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[j])]
    out = from_entries(desc, [row[m:] for row in rows])
    return out.astype(M.dtype)


def is_invertible(desc: RingDescriptor, M: np.ndarray) -> bool:
    return det(desc, M).is_unit()


def random_matrix(desc: RingDescriptor, m: int, rng: np.random.Generator) -> np.ndarray:
    vals = rng.integers(0, desc.characteristic, size=(m, m, desc.r))
    return vals.astype(dtype_for(desc, m))
