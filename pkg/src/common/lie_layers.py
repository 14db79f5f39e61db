import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.common.config import MODULE_DIM_BOUND, MODULE_EXHAUST_BOUND, SEED
from src.common.errors import (
    BadLevel,
    NotInKernel,
    NotInLieAlgebra,
    TooLarge,
    WrongParity,
)
from src.common.galois_ring import (
    RingDescriptor,
    RingElement,
    elements,
    frobenius_auto,
    gen_t,
    one,
    teichmuller,
)
from src.common.linalg import EchelonBasis, nullspace_p, row_reduce_p, span_basis
from src.common import matrix_groups as mg
from src.common import ring_matrix as rm

log = logging.getLogger(__name__)

# Lie algebra elements are residue-field matrices (m, m, r) with entries in {0..p-1};
# as F_p-vectors they are flattened to length m*m*r.


def residue_ring(D: mg.GroupDescriptor) -> RingDescriptor:
    return D.ring.at_level(1)


def flatten(X: np.ndarray) -> np.ndarray:
    return np.asarray(X, dtype=np.int64).reshape(-1)


def unflatten(D: mg.GroupDescriptor, v: np.ndarray) -> np.ndarray:
    return np.asarray(v, dtype=np.int64).reshape(D.size, D.size, D.ring.r)


def _projects(D: mg.GroupDescriptor) -> bool:
    return D.is_quotient and D.family != "SL_mod_mu_m"


# =========================
# LINEARIZED EQUATIONS
# =========================
def _conditions(D: mg.GroupDescriptor, X: np.ndarray, lam: RingElement) -> List[np.ndarray]:
    """Linear conditions on (X, lambda) whose common zero set projects onto Lie(G_k)."""
    k = residue_ring(D)
    m = D.size
    fam = D.cover_family
    out: List[np.ndarray] = []
    if fam in ("SL",):
        out.append(np.sum([X[i, i] for i in range(m)], axis=0) % k.p)
    elif fam in ("Sp", "GSp"):
        J = mg.symplectic_form(k, m)
        A = rm.add(k, rm.mat_mul(k, rm.transpose(X), J), rm.mat_mul(k, J, X))
        if fam == "GSp":
            A = rm.sub(k, A, rm.scalar_mul(k, lam, J))
        out.append(A)
    elif fam in mg.ORTHOGONAL:
        Dk = D.at_level(1)
        U = mg.quadratic_form(Dk)
        S = rm.add(k, U, rm.transpose(U))
        SX = rm.mat_mul(k, S, X)
        A = rm.add(k, SX, rm.transpose(SX))
        diag = np.array([SX[i, i] for i in range(m)])
        if fam.startswith("GSO"):
            A = rm.sub(k, A, rm.scalar_mul(k, lam, S))
            lu = rm.scalar_mul(k, lam, U)
            diag = (diag - np.array([lu[i, i] for i in range(m)])) % k.p
        out.extend([A, diag])
    elif fam in mg.UNITARY:
        Xs = mg.hermitian_conjugate(D, X)
        out.append(rm.add(k, Xs, X))
        if fam == "SU":
            out.append(np.sum([X[i, i] for i in range(m)], axis=0) % k.p)
    if _projects(D):
        out.append(X[0, 0])
    return out


def _lam_free(D: mg.GroupDescriptor) -> bool:
    return D.cover_family in ("GSp", "GSO_plus", "GSO_minus")


@lru_cache(maxsize=None)
def _lie_fp_basis(D: mg.GroupDescriptor) -> Tuple[Tuple[int, ...], ...]:
    k = residue_ring(D)
    m, r, p = D.size, k.r, k.p
    nx = m * m * r
    nl = r if _lam_free(D) else 0
    cols = []
    for idx in range(nx + nl):
        v = np.zeros(nx + nl, dtype=np.int64)
        v[idx] = 1
        X = unflatten(D, v[:nx])
        lam = RingElement(k, tuple(int(c) for c in v[nx:])) if nl else RingElement.of(k, 0)
        conds = _conditions(D, X, lam)
        cols.append(np.concatenate([np.asarray(c, dtype=np.int64).reshape(-1) for c in conds])
                    if conds else np.zeros(0, dtype=np.int64))
    L = np.array(cols, dtype=np.int64).T % p
    if L.size == 0:
        sols = np.eye(nx + nl, dtype=np.int64)
    else:
        sols = nullspace_p(L, p)
    eb = span_basis([s[:nx] for s in sols], p, nx)
    return tuple(tuple(int(c) for c in row) for row in eb.matrix())


def lie_fp_basis(D: mg.GroupDescriptor) -> List[np.ndarray]:
    """F_p-basis of Lie_{F_p}(G_k) as residue matrices."""
    D1 = D.at_level(1)
    return [unflatten(D1, np.array(row)) for row in _lie_fp_basis(D1)]


def lie_basis(D: mg.GroupDescriptor) -> List[np.ndarray]:
    """Residue-field basis (over F_q, or over the fixed field for unitary algebras)."""
    D1 = D.at_level(1)
    k = residue_ring(D1)
    fp = lie_fp_basis(D1)
    p = k.p
    scalars = _field_scalars(D1)
    nx = D1.size * D1.size * k.r
    span = EchelonBasis(p, nx)
    chosen = []
    for X in fp:
        if span.contains(flatten(X)):
            continue
        chosen.append(X)
        for a in scalars:
            span.add(flatten(rm.scalar_mul(k, a, X)))
    return chosen


def _field_scalars(D: mg.GroupDescriptor) -> List[RingElement]:
    k = residue_ring(D)
    if D.cover_family in mg.UNITARY:
        # basis of the fixed field of the involution over F_p
        half = k.r // 2
        fixed = EchelonBasis(k.p, k.r)
        out = []
        for a in elements(k):
            if frobenius_auto(a, half) == a and fixed.add(np.array(a.coeffs)):
                out.append(a)
        return out
    return [gen_t(k, j) if j else one(k) for j in range(k.r)]


def lie_membership(D: mg.GroupDescriptor, X: np.ndarray) -> bool:
    D1 = D.at_level(1)
    eb = span_basis([np.array(r) for r in _lie_fp_basis(D1)], D1.ring.p, D1.size * D1.size * D1.ring.r)
    return eb.contains(flatten(np.asarray(X) % D1.ring.p))


# =========================
# BRACKET / ADJOINT
# =========================
def project(D: mg.GroupDescriptor, Z: np.ndarray) -> np.ndarray:
    """Complement model of Lie(G)/scalars: subtract Z_00 * I."""
    if not _projects(D):
        return Z
    k = residue_ring(D)
    out = Z.copy()
    z00 = Z[0, 0].copy()
    for i in range(D.size):
        out[i, i] = (out[i, i] - z00) % k.p
    return out


def bracket(D: mg.GroupDescriptor, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    k = residue_ring(D)
    Z = rm.sub(k, rm.mat_mul(k, X, Y), rm.mat_mul(k, Y, X))
    return project(D, Z)


def adjoint_action(D: mg.GroupDescriptor, g: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Ad(g)X = g X g^-1 for a residue-level matrix g."""
    k = residue_ring(D)
    gb = (np.asarray(g) % k.p).astype(np.int64)
    ginv = rm.inverse(k, gb)
    return project(D, rm.mat_mul(k, rm.mat_mul(k, gb, X), ginv))


# =========================
# LAYER CODEC
# =========================
@dataclass
class LayerVector:
    desc: mg.GroupDescriptor
    level: int
    matrix: np.ndarray

    def vector(self) -> np.ndarray:
        return flatten(self.matrix)

    def is_zero(self) -> bool:
        return not np.any(self.matrix)


def _central_normalizer(D: mg.GroupDescriptor, g: np.ndarray) -> Optional[RingElement]:
    """Central unit c with c*g congruent to I when g lies in a congruence kernel."""
    if not D.is_quotient:
        return None
    ring = D.ring
    g00 = rm.entry(ring, g, 0, 0)
    if not g00.is_unit():
        raise NotInKernel("representative is not congruent to a scalar")
    if D.family == "SL_mod_mu_m":
        return teichmuller(g00, ring).inverse()
    return g00.inverse()


def decode(D: mg.GroupDescriptor, g: np.ndarray, s: int) -> np.ndarray:
    """(g - I)/p^s mod p for g congruent to I modulo p^s (up to central scalars)."""
    ring = D.ring
    if s < 1 or s >= D.level:
        raise BadLevel(f"layer {s} needs level at least {s + 1}, have {D.level}")
    g = np.asarray(g) % ring.characteristic
    c = _central_normalizer(D, g)
    if c is not None:
        g = rm.scalar_mul(ring, c, g)
    diff = rm.sub(ring, g, rm.identity(ring, D.size)).astype(object)
    ps = ring.p ** s
    if np.any(diff % ps):
        raise NotInKernel(f"element is not congruent to I modulo p^{s}")
    return ((diff // ps) % ring.p).astype(np.int64)


def leading_layer(D: mg.GroupDescriptor, g: np.ndarray) -> Optional[Tuple[int, Optional[np.ndarray]]]:
    """(s, decode(g, s)) for the largest s with g = I mod p^s; None for the identity, (0, None) off Ker_1."""
    ring = D.ring
    N = ring.characteristic
    g = np.asarray(g) % N
    if D.is_quotient:
        try:
            c = _central_normalizer(D, g)
        except NotInKernel:
            return 0, None
        g = rm.scalar_mul(ring, c, g)
    diff = rm.sub(ring, g, rm.identity(ring, D.size)).astype(object)
    if not diff.any():
        return None
    s = 0
    while not np.any(diff % ring.p ** (s + 1)):
        s += 1
    if s == 0:
        return 0, None
    return s, ((diff // ring.p ** s) % ring.p).astype(np.int64)


def encode(D: mg.GroupDescriptor, X: np.ndarray, s: int, check: bool = True) -> np.ndarray:
    """I + p^s * lift(X) at level s+1 (canonical representative for quotients)."""
    if s < 1:
        raise BadLevel("layers start at s = 1")
    if check and not lie_membership(D, X):
        raise NotInLieAlgebra("matrix does not satisfy the linearized equations")
    Dn = D.at_level(s + 1)
    ring = Dn.ring
    M = rm.identity(ring, D.size).astype(object)
    M = (M + (ring.p ** s) * np.asarray(X, dtype=object)) % ring.characteristic
    M = M.astype(rm.dtype_for(ring, D.size))
    if Dn.is_quotient:
        M = Dn.canon(M[None])[0]
    return M


def layer_codec(D: mg.GroupDescriptor, obj: np.ndarray, s: int, direction: str = "decode"):
    if direction == "decode":
        return LayerVector(D, s, decode(D, obj, s))
    return encode(D, obj, s)


def commutator(D: mg.GroupDescriptor, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    ring = D.ring
    xy = rm.mat_mul(ring, x, y)
    inv = rm.mat_mul(ring, rm.inverse(ring, x), rm.inverse(ring, y))
    c = rm.mat_mul(ring, xy, inv)
    return D.canon(c[None])[0] if D.is_quotient else c


@dataclass
class BracketCheck:
    lhs: np.ndarray
    rhs: np.ndarray
    equal: bool


def bracket_and_commutator_check(D: mg.GroupDescriptor, x: np.ndarray, y: np.ndarray) -> BracketCheck:
    if D.ring.p != 2:
        raise WrongParity(f"the commutator-bracket identity is checked for p = 2, got p = {D.ring.p}")
    if D.level < 3:
        raise BadLevel("need ring level at least 3")
    D3 = D.at_level(3)
    D2 = D.at_level(2)
    x3 = mg.reduce_element(x, D, 3)
    y3 = mg.reduce_element(y, D, 3)
    lhs = decode(D3, commutator(D3, x3, y3), 2)
    X = decode(D2, mg.reduce_element(x, D, 2), 1)
    Y = decode(D2, mg.reduce_element(y, D, 2), 1)
    rhs = bracket(D, X, Y)
    return BracketCheck(lhs=lhs, rhs=rhs, equal=bool(np.array_equal(lhs % 2, rhs % 2)))


# =========================
# ADJOINT MODULE
# =========================
class Coordinates:
    """Coordinates of F_p-vectors with respect to a fixed (independent) basis."""

    def __init__(self, basis: np.ndarray, p: int):
        self.p = p
        self.basis = np.asarray(basis, dtype=np.int64) % p
        d, n = self.basis.shape
        aug = np.hstack([self.basis, np.eye(d, dtype=np.int64)])
        R, piv = row_reduce_p(aug, p)
        self.pivots = [c for c in piv if c < n]
        if len(self.pivots) != d:
            raise ValueError("basis vectors are dependent")
        self.transform = R[:d, n:]

    def __call__(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.int64) % self.p
        c = v[..., self.pivots]
        return (c @ self.transform) % self.p


@dataclass
class AdjointModule:
    desc: mg.GroupDescriptor
    basis: List[np.ndarray]
    acting: List[np.ndarray]
    k1_structure: bool = False
    actions: List[np.ndarray] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def p(self) -> int:
        return self.desc.ring.p


def adjoint_module(D: mg.GroupDescriptor, acting: Optional[Sequence[np.ndarray]] = None,
                   basis: Optional[Sequence[np.ndarray]] = None) -> AdjointModule:
    D1 = D.at_level(1)
    if basis is None:
        basis = lie_fp_basis(D1)
    if len(basis) > MODULE_DIM_BOUND:
        raise TooLarge(f"module dimension {len(basis)} exceeds {MODULE_DIM_BOUND}")
    if acting is None:
        acting = mg.standard_generators(D1)
    acting = [(np.asarray(g) % D1.ring.p).astype(np.int64) for g in acting]
    acting = [g for g in acting if not rm.is_identity(g)]
    coords = Coordinates(np.array([flatten(b) for b in basis]), D1.ring.p) if basis else None
    actions = []
    for g in acting:
        rows = [coords(flatten(adjoint_action(D1, g, b))) for b in basis]
        actions.append(np.array(rows, dtype=np.int64).reshape(len(basis), len(basis)))
    return AdjointModule(desc=D1, basis=list(basis), acting=acting, actions=actions)


def spin(module: AdjointModule, vectors: Sequence[np.ndarray]) -> EchelonBasis:
    """Smallest submodule containing the vectors (row vectors in module coordinates)."""
    eb = EchelonBasis(module.p, module.dim)
    queue = []
    for v in vectors:
        if eb.add(v):
            queue.append(np.asarray(v, dtype=np.int64) % module.p)
    while queue:
        w = queue.pop()
        for A in module.actions:
            img = (w @ A) % module.p
            if eb.add(img):
                queue.append(img)
    return eb


def _key(eb: EchelonBasis) -> Tuple[Tuple[int, ...], ...]:
    R, _ = row_reduce_p(eb.matrix(), eb.p, truncate=True) if len(eb) else (np.zeros((0, eb.dim)), [])
    return tuple(tuple(int(c) for c in row) for row in R)


def _common_eigenvectors(actions: Sequence[np.ndarray], p: int, d: int) -> bool:
    spaces = [np.eye(d, dtype=np.int64)]
    for A in actions:
        nxt = []
        for B in spaces:
            for lam in range(1, p):
                M = ((A - lam * np.eye(d, dtype=np.int64)) @ B.T) % p
                ns = nullspace_p(M, p)
                if len(ns):
                    nxt.append((ns @ B) % p)
        spaces = nxt
        if not spaces:
            return False
    return any(len(B) for B in spaces)


@dataclass
class ModuleReport:
    dim: int
    derived_dim: int
    center_dim: int
    quotient_dim: int
    derived: np.ndarray
    center: np.ndarray
    minimal_submodules: List[np.ndarray]
    has_codim1_invariant: bool
    is_simple_derived: bool
    simple_certified: bool


def adjoint_module_analysis(module: AdjointModule, seed: int = SEED) -> ModuleReport:
    d, p = module.dim, module.p
    if d > MODULE_DIM_BOUND:
        raise TooLarge(f"module dimension {d} exceeds {MODULE_DIM_BOUND}")
    D = module.desc
    coords = Coordinates(np.array([flatten(b) for b in module.basis]), p)
    brackets = {}
    derived = EchelonBasis(p, d)
    for i in range(d):
        for j in range(i + 1, d):
            c = coords(flatten(bracket(D, module.basis[i], module.basis[j])))
            brackets[(i, j)] = c
            brackets[(j, i)] = (-c) % p
            derived.add(c)
    # center: coefficient vectors c with sum_i c_i [b_i, b_j] = 0 for every j
    rows = []
    for i in range(d):
        parts = [brackets.get((i, j), np.zeros(d, dtype=np.int64)) for j in range(d)]
        rows.append(np.concatenate(parts))
    big = np.array(rows, dtype=np.int64).reshape(d, d * d)
    center = nullspace_p(big.T, p) if d else np.zeros((0, 0), dtype=np.int64)

    candidates = [np.eye(d, dtype=np.int64)[i] for i in range(d)]
    candidates += list(derived.matrix()) + list(center)
    seen: Dict[Tuple, EchelonBasis] = {}
    for v in candidates:
        eb = spin(module, [v])
        if len(eb):
            seen.setdefault(_key(eb), eb)
    subs = list(seen.values())
    minimal = []
    for eb in subs:
        if not any(len(o) < len(eb) and all(eb.contains(r) for r in o.matrix()) for o in subs):
            minimal.append(eb.matrix())

    dl = len(derived)
    simple = dl > 0
    certified = True
    if dl:
        dmat = derived.matrix()
        if p ** dl <= MODULE_EXHAUST_BOUND:
            tests = _projective_points(dl, p)
        else:
            certified = False
            rng = np.random.default_rng(seed)
            tests = list(np.eye(dl, dtype=np.int64)) + [rng.integers(0, p, size=dl) for _ in range(64)]
        for coeff in tests:
            v = (np.asarray(coeff, dtype=np.int64) @ dmat) % p
            if not v.any():
                continue
            if len(spin(module, [v])) != dl:
                simple = False
                certified = True
                break
    has_codim1 = d > 0 and (not module.actions or _common_eigenvectors(module.actions, p, d))
    log.info("adjoint module %s: dim %d, derived %d, center %d", D, d, dl, len(center))
    return ModuleReport(
        dim=d,
        derived_dim=dl,
        center_dim=len(center),
        quotient_dim=d - dl,
        derived=derived.matrix(),
        center=np.asarray(center),
        minimal_submodules=minimal,
        has_codim1_invariant=bool(has_codim1),
        is_simple_derived=bool(simple),
        simple_certified=certified,
    )


def _projective_points(n: int, p: int) -> List[np.ndarray]:
    out = []
    for lead in range(n):
        free = n - lead - 1
        for k in range(p ** free):
            v = np.zeros(n, dtype=np.int64)
            v[lead] = 1
            for j in range(free):
                v[lead + 1 + j] = (k // p ** j) % p
            out.append(v)
    return out


def lie_quotient_dim(D: mg.GroupDescriptor) -> int:
    """dim_k(Lie / [Lie, Lie]) by rank computation."""
    D1 = D.at_level(1)
    basis = lie_fp_basis(D1)
    p = D1.ring.p
    n = D1.size * D1.size * D1.ring.r
    derived = EchelonBasis(p, n)
    for i in range(len(basis)):
        for j in range(i + 1, len(basis)):
            derived.add(flatten(bracket(D1, basis[i], basis[j])))
    return (len(basis) - len(derived)) // D1.ring.r
