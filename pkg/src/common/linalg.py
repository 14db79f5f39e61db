from typing import List, Optional, Sequence, Tuple

import numpy as np

# Linear algebra over F_p on int64 arrays; p is small enough that p*p fits.


def row_reduce_p(A: np.ndarray, p: int, truncate: bool = False) -> Tuple[np.ndarray, List[int]]:
    """Reduced row echelon form of A over F_p and the pivot columns."""
    A = np.array(A, dtype=np.int64) % p
    if A.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {A.shape}")
    m, n = A.shape
    pivots: List[int] = []
    i = 0
    for j in range(n):
        if i >= m:
            break
        nz = np.nonzero(A[i:, j])[0]
        if len(nz) == 0:
            continue
        i1 = i + int(nz[0])
        if i1 != i:
            A[[i, i1]] = A[[i1, i]]
        inv = pow(int(A[i, j]), -1, p)
        A[i] = (A[i] * inv) % p
        col = A[:, j].copy()
        col[i] = 0
        rows = np.nonzero(col)[0]
        if len(rows):
            A[rows] = (A[rows] - np.outer(col[rows], A[i])) % p
        pivots.append(j)
        i += 1
    if truncate:
        A = A[: len(pivots)]
    return A, pivots


def rank_p(A: np.ndarray, p: int) -> int:
    if np.size(A) == 0:
        return 0
    return len(row_reduce_p(A, p)[1])


def nullspace_p(A: np.ndarray, p: int) -> np.ndarray:
    """Basis (as rows) of {x : A x = 0} over F_p."""
    A = np.array(A, dtype=np.int64)
    n = A.shape[1]
    if A.shape[0] == 0:
        return np.eye(n, dtype=np.int64)
    R, pivots = row_reduce_p(A, p, truncate=True)
    free = [j for j in range(n) if j not in pivots]
    basis = np.zeros((len(free), n), dtype=np.int64)
    for k, f in enumerate(free):
        basis[k, f] = 1
        for i, pc in enumerate(pivots):
            basis[k, pc] = (-R[i, f]) % p
    return basis


class EchelonBasis:
    """Incrementally maintained echelon basis of a subspace of F_p^dim."""

    def __init__(self, p: int, dim: int):
        self.p = p
        self.dim = dim
        self.rows: List[np.ndarray] = []
        self.pivots: List[int] = []

    def __len__(self) -> int:
        return len(self.rows)

    def reduce(self, v: np.ndarray) -> Tuple[np.ndarray, List[int]]:
        """Remainder of v against the basis and the coefficients used."""
        v = np.array(v, dtype=np.int64).reshape(-1) % self.p
        coeffs = []
        for row, pc in zip(self.rows, self.pivots):
            c = int(v[pc])
            coeffs.append(c)
            if c:
                v = (v - c * row) % self.p
        return v, coeffs

    def contains(self, v: np.ndarray) -> bool:
        return not self.reduce(v)[0].any()

    def add(self, v: np.ndarray) -> bool:
        rem, _ = self.reduce(v)
        nz = np.nonzero(rem)[0]
        if len(nz) == 0:
            return False
        pc = int(nz[0])
        rem = (rem * pow(int(rem[pc].item()), -1, self.p)) % self.p
        # keep rows reduced in the new pivot column
        for k, row in enumerate(self.rows):
            c = int(row[pc])
            if c:
                self.rows[k] = (row - c * rem) % self.p
        self.rows.append(rem)
        self.pivots.append(pc)
        return True

    def extend(self, vectors: Sequence[np.ndarray]) -> int:
        return sum(1 for v in vectors if self.add(v))

    def matrix(self) -> np.ndarray:
        if not self.rows:
            return np.zeros((0, self.dim), dtype=np.int64)
        return np.array(self.rows, dtype=np.int64)

    def is_full(self) -> bool:
        return len(self.rows) == self.dim

    def copy(self) -> "EchelonBasis":
        out = EchelonBasis(self.p, self.dim)
        out.rows = [r.copy() for r in self.rows]
        out.pivots = list(self.pivots)
        return out


def span_basis(vectors: Sequence[np.ndarray], p: int, dim: int) -> EchelonBasis:
    eb = EchelonBasis(p, dim)
    eb.extend(vectors)
    return eb


def complement_basis(sub: EchelonBasis, ambient: Optional[EchelonBasis] = None) -> np.ndarray:
    """Vectors completing sub to the ambient space (standard basis when not given)."""
    p, dim = sub.p, sub.dim
    work = sub.copy()
    candidates = ambient.matrix() if ambient is not None else np.eye(dim, dtype=np.int64)
    out = []
    for v in candidates:
        if work.add(v):
            out.append(np.array(v, dtype=np.int64) % p)
    return np.array(out, dtype=np.int64).reshape(len(out), dim)
