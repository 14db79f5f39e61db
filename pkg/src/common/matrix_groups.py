import re
import math
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.common.config import ENUM_BOUND, WEIL_RESTRICTION_BOUND
from src.common.errors import (
    BadLevel,
    NotAMember,
    NotInstantiable,
    NotInvertible,
    ParseError,
    ShapeMismatch,
    TooLarge,
    UnknownFamily,
    UnsupportedFamily,
)
from src.common.galois_ring import (
    RingDescriptor,
    RingElement,
    construct_ring,
    elements,
    gen_t,
    one,
    parse_ring,
    primitive_root,
    reduce_level,
    teichmuller,
    units,
    zero,
)
from src.common import ring_matrix as rm
from src.common.linalg import rank_p
from src.common import perm_action

log = logging.getLogger(__name__)

# =========================
# FAMILIES
# =========================
LINEAR = ("GL", "SL")
SYMPLECTIC = ("Sp", "GSp", "PGSp")
ORTHOGONAL = ("SO_plus", "SO_minus", "GSO_plus", "GSO_minus", "PGSO_plus", "PGSO_minus")
UNITARY = ("U", "SU")
QUOTIENT_COVER = {
    "PGL": "GL",
    "PGSp": "GSp",
    "PGSO_plus": "GSO_plus",
    "PGSO_minus": "GSO_minus",
    "SL_mod_mu_m": "SL",
}
FAMILIES = LINEAR + SYMPLECTIC + ORTHOGONAL + UNITARY + ("PGL", "SL_mod_mu_m")
SIMILITUDE = ("GSp", "PGSp", "GSO_plus", "GSO_minus", "PGSO_plus", "PGSO_minus")


@dataclass(frozen=True)
class GroupDescriptor:
    family: str
    size: int
    ring: RingDescriptor
    quotient_modulus: Optional[int] = None

    @property
    def level(self) -> int:
        return self.ring.n

    @property
    def is_quotient(self) -> bool:
        return self.family in QUOTIENT_COVER

    @property
    def cover_family(self) -> str:
        return QUOTIENT_COVER.get(self.family, self.family)

    @property
    def is_orthogonal(self) -> bool:
        return self.family in ORTHOGONAL

    @property
    def is_minus(self) -> bool:
        return self.family.endswith("_minus")

    @property
    def has_multiplier(self) -> bool:
        return self.family in SIMILITUDE

    def at_level(self, n: int) -> "GroupDescriptor":
        return make_group(self.family, self.size, self.ring.at_level(n), self.quotient_modulus)

    def with_family(self, family: str) -> "GroupDescriptor":
        m = self.quotient_modulus if family == "SL_mod_mu_m" else None
        return make_group(family, self.size, self.ring, m)

    def canon(self, Ms: np.ndarray) -> np.ndarray:
        return canonical_batch(self, Ms)

    def canon_points(self, P: np.ndarray) -> np.ndarray:
        return canonical_points(self, P)

    def mul(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        return self.canon(rm.mat_mul(self.ring, A, B)[None])[0]

    def __str__(self) -> str:
        if self.family == "SL_mod_mu_m":
            return f"SL_mod_mu_m({self.size}, {self.ring}, m={self.quotient_modulus})"
        return f"{self.family}({self.size}, {self.ring})"


def make_group(family: str, size: int, ring: RingDescriptor, m: Optional[int] = None) -> GroupDescriptor:
    if family not in FAMILIES:
        raise UnknownFamily(f"unknown family {family!r}")
    if size < 1:
        raise ShapeMismatch(f"size must be positive, got {size}")
    if family in SYMPLECTIC and size % 2:
        raise NotInstantiable(f"{family} needs even size, got {size}")
    if family in ORTHOGONAL:
        if ring.p == 2 and size % 2:
            raise NotInstantiable("odd orthogonal groups need odd p")
        if family.startswith(("GSO", "PGSO")) and size % 2:
            raise NotInstantiable(f"{family} needs even size")
        if family.endswith("_minus") and (size < 4 or size % 2 or ring.n > 1):
            raise NotInstantiable("minus forms are field-level with even size at least 4")
    if family in UNITARY and (ring.n != 1 or ring.r % 2):
        raise NotInstantiable("unitary groups live over F_{q^2} at level 1")
    if family == "SL_mod_mu_m":
        if not m or size % m:
            raise NotInstantiable(f"mu_{m} is not central in SL_{size}")
        if m % ring.p == 0:
            raise NotInstantiable(f"mu_{m} has no unit-scalar realization when p={ring.p} divides m")
    else:
        m = None
    return GroupDescriptor(family=family, size=size, ring=ring, quotient_modulus=m)


_DESC_RE = re.compile(r"^\s*(\w+)\(\s*(\d+)\s*,\s*(W\([^)]*\))\s*(?:,\s*m\s*=\s*(\d+))?\s*\)\s*$")


def parse_descriptor(text: str) -> GroupDescriptor:
    match = _DESC_RE.match(text)
    if not match:
        raise ParseError(f"bad group descriptor: {text!r}")
    family, size, ring_text, m = match.groups()
    return make_group(family, int(size), parse_ring(ring_text), int(m) if m else None)


# =========================
# FORMS
# =========================
def _ring_matrix_from_ints(ring: RingDescriptor, A: np.ndarray) -> np.ndarray:
    m = A.shape[0]
    M = rm.zeros(ring, m)
    M[:, :, 0] = A % ring.characteristic
    return M


def symplectic_form(ring: RingDescriptor, size: int) -> np.ndarray:
    k = size // 2
    J = np.zeros((size, size), dtype=np.int64)
    J[:k, k:] = np.eye(k, dtype=np.int64)
    J[k:, :k] = -np.eye(k, dtype=np.int64)
    return _ring_matrix_from_ints(ring, J)


@lru_cache(maxsize=None)
def minus_parameter(ring: RingDescriptor) -> RingElement:
    """First a (enumeration order) with t^2 + t + a irreducible over the residue field."""
    field_ = ring.at_level(1)
    field_elems = list(elements(field_))
    for a in field_elems:
        if all(not (x * x + x + a).is_zero() for x in field_elems):
            return RingElement.of(ring, a.coeffs)
    raise RuntimeError(f"no anisotropic plane over {field_}")


def hyperbolic_pairs(D: GroupDescriptor) -> int:
    return D.size // 2 - 1 if D.is_minus else D.size // 2


def quadratic_form(D: GroupDescriptor) -> np.ndarray:
    """Upper-triangular U with Q(x) = x^T U x."""
    m, ring = D.size, D.ring
    U = rm.zeros(ring, m)
    h = hyperbolic_pairs(D)
    for i in range(h):
        U[i, m - 1 - i, 0] = 1
    if m % 2:
        U[h, h, 0] = 1
    elif D.is_minus:
        U[h, h, 0] = 1
        U[h, h + 1, 0] = 1
        U[h + 1, h + 1] = minus_parameter(ring).coeffs
    return U


def form_of(D: GroupDescriptor) -> Optional[np.ndarray]:
    """Gram matrix J (symplectic), S = U + U^T (orthogonal) or I (hermitian)."""
    if D.family in SYMPLECTIC:
        return symplectic_form(D.ring, D.size)
    if D.is_orthogonal:
        U = quadratic_form(D)
        return rm.add(D.ring, U, rm.transpose(U))
    if D.family in UNITARY:
        return rm.identity(D.ring, D.size)
    return None


def hermitian_conjugate(D: GroupDescriptor, M: np.ndarray) -> np.ndarray:
    return rm.transpose(rm.conjugate(D.ring, M, D.ring.r // 2))


# =========================
# MEMBERSHIP
# =========================
@dataclass
class Membership:
    member: bool
    multiplier: Optional[RingElement] = None
    reason: str = ""


def _diag(M: np.ndarray) -> np.ndarray:
    m = M.shape[0]
    return np.array([M[i, i] for i in range(m)])


def dickson_invariant(ring: RingDescriptor, M: np.ndarray) -> int:
    field_ = ring.at_level(1)
    Mb = rm.reduce_matrix(M, ring, 1)
    A = rm.sub(field_, Mb, rm.identity(field_, M.shape[0]))
    if field_.r == 1:
        return rank_p(A[..., 0], field_.p) % 2
    return _rank_over_field(field_, A) % 2


def _rank_over_field(field_: RingDescriptor, A: np.ndarray) -> int:
    rows = rm.entries(field_, A)
    m, n = len(rows), len(rows[0]) if rows else 0
    rank = 0
    for j in range(n):
        piv = next((i for i in range(rank, m) if not rows[i][j].is_zero()), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = rows[rank][j].inverse()
        rows[rank] = [a * inv for a in rows[rank]]
        for i in range(m):
            if i != rank and not rows[i][j].is_zero():
                f = rows[i][j]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[rank])]
        rank += 1
    return rank


def membership_and_multiplier(M: np.ndarray, D: GroupDescriptor) -> Membership:
    m, ring = D.size, D.ring
    if M.shape != (m, m, ring.r):
        raise ShapeMismatch(f"expected shape {(m, m, ring.r)}, got {M.shape}")
    M = np.asarray(M) % ring.characteristic
    det = rm.det(ring, M)
    if not det.is_unit():
        return Membership(False, reason="not invertible")
    fam = D.cover_family
    if fam == "GL":
        return Membership(True)
    if fam == "SL":
        return Membership(det == one(ring), reason="" if det == one(ring) else "det != 1")
    if fam in UNITARY:
        ok = np.array_equal(rm.mat_mul(ring, hermitian_conjugate(D, M), M), rm.identity(ring, m))
        if ok and fam == "SU":
            ok = det == one(ring)
        return Membership(bool(ok), reason="" if ok else "not unitary")
    if fam in ("Sp", "GSp"):
        J = symplectic_form(ring, m)
        A = rm.mat_mul(ring, rm.mat_mul(ring, rm.transpose(M), J), M)
        mu = rm.entry(ring, A, 0, m // 2)
        if fam == "Sp" and mu != one(ring):
            return Membership(False, reason="multiplier != 1")
        if not mu.is_unit() or not np.array_equal(A, rm.scalar_mul(ring, mu, J)):
            return Membership(False, reason="not a symplectic similitude")
        return Membership(True, multiplier=mu)
    # orthogonal and similitude orthogonal
    U = quadratic_form(D)
    S = rm.add(ring, U, rm.transpose(U))
    Mt = rm.transpose(M)
    A = rm.mat_mul(ring, rm.mat_mul(ring, Mt, S), M)
    B = rm.mat_mul(ring, rm.mat_mul(ring, Mt, U), M)
    mu = rm.entry(ring, A, 0, m - 1)
    similitude = fam.startswith("GSO")
    if not similitude and mu != one(ring):
        return Membership(False, reason="multiplier != 1")
    if not mu.is_unit():
        return Membership(False, reason="multiplier not a unit")
    if not np.array_equal(A, rm.scalar_mul(ring, mu, S)):
        return Membership(False, reason="polar form not preserved")
    if not np.array_equal(_diag(B), _diag(rm.scalar_mul(ring, mu, U))):
        return Membership(False, reason="quadratic form not preserved")
    if ring.p == 2:
        Mb = M
        if similitude:
            field_ = ring.at_level(1)
            mu_bar = reduce_level(mu, 1)
            root = mu_bar ** (field_.q // 2)
            Mb = rm.scalar_mul(field_, root.inverse(), rm.reduce_matrix(M, ring, 1))
            if dickson_invariant(field_, Mb):
                return Membership(False, reason="Dickson invariant 1")
        elif dickson_invariant(ring, Mb):
            return Membership(False, reason="Dickson invariant 1")
    else:
        target = mu ** (m // 2) if similitude else one(ring)
        if m % 2 == 0 and det != target:
            return Membership(False, reason="wrong determinant")
        if m % 2 and det != one(ring):
            return Membership(False, reason="det != 1")
    return Membership(True, multiplier=mu if similitude else None)


@dataclass(frozen=True)
class GroupElement:
    desc: GroupDescriptor
    matrix: np.ndarray = field(compare=False)
    multiplier: Optional[RingElement] = None

    def key(self):
        return rm.key(self.matrix)


def make_element(M: np.ndarray, D: GroupDescriptor) -> GroupElement:
    M = (np.asarray(M) % D.ring.characteristic).astype(rm.dtype_for(D.ring, D.size))
    res = membership_and_multiplier(M, D)
    if not res.member:
        raise NotAMember(f"matrix is not in {D}: {res.reason}")
    if D.is_quotient:
        M = adjoint_representative(M, D)
    return GroupElement(D, M, res.multiplier)


# =========================
# ORDERS
# =========================
def _prod(values) -> int:
    out = 1
    for v in values:
        out *= v
    return out


def lie_dimension(D: GroupDescriptor) -> int:
    m = D.size
    fam = D.family
    if fam == "GL":
        return m * m
    if fam in ("SL", "PGL", "SL_mod_mu_m"):
        return m * m - 1
    if fam in ("Sp", "PGSp"):
        k = m // 2
        return k * (2 * k + 1)
    if fam == "GSp":
        k = m // 2
        return k * (2 * k + 1) + 1
    if fam.startswith("GSO"):
        return m * (m - 1) // 2 + 1
    if fam in ORTHOGONAL:
        return m * (m - 1) // 2
    if fam == "U":
        return m * m
    if fam == "SU":
        return m * m - 1
    raise NotInstantiable(f"no dimension for {fam}")


def field_order(D: GroupDescriptor) -> int:
    m, q = D.size, D.ring.q
    fam = D.family
    if fam in ("GL",):
        return q ** (m * (m - 1) // 2) * _prod(q ** i - 1 for i in range(1, m + 1))
    if fam in ("SL", "PGL"):
        return q ** (m * (m - 1) // 2) * _prod(q ** i - 1 for i in range(2, m + 1))
    if fam == "SL_mod_mu_m":
        return field_order(D.with_family("SL")) // math.gcd(D.quotient_modulus, q - 1)
    if fam in ("Sp", "PGSp", "GSp"):
        k = m // 2
        sp = q ** (k * k) * _prod(q ** (2 * i) - 1 for i in range(1, k + 1))
        return sp * (q - 1) if fam == "GSp" else sp
    if fam in ORTHOGONAL:
        if m % 2:
            k = m // 2
            so = q ** (k * k) * _prod(q ** (2 * i) - 1 for i in range(1, k + 1))
        else:
            k = m // 2
            eps = 1 if D.is_minus else -1
            so = q ** (k * (k - 1)) * (q ** k + eps) * _prod(q ** (2 * i) - 1 for i in range(1, k))
        return so * (q - 1) if fam.startswith("GSO") else so
    if fam in UNITARY:
        q0 = D.ring.p ** (D.ring.r // 2)
        u = q0 ** (m * (m - 1) // 2) * _prod(q0 ** i - (-1) ** i for i in range(1, m + 1))
        return u // (q0 + 1) if fam == "SU" else u
    raise NotInstantiable(f"no order formula for {fam}")


def group_order(D: GroupDescriptor) -> int:
    base = field_order(D)
    if D.level == 1:
        return base
    if D.family in UNITARY:
        raise NotInstantiable("unitary groups are field-level only")
    return base * D.ring.p ** (D.ring.r * lie_dimension(D) * (D.level - 1))


# =========================
# CENTRAL QUOTIENTS
# =========================
@lru_cache(maxsize=None)
def central_scalars(D: GroupDescriptor) -> Tuple[RingElement, ...]:
    """mu_m(R) as Teichmuller lifts; only used by SL_mod_mu_m."""
    ring = D.ring
    field_ = ring.at_level(1)
    roots = [x for x in units(field_) if x ** D.quotient_modulus == one(field_)]
    return tuple(teichmuller(x, ring) for x in roots)


@lru_cache(maxsize=None)
def _inverse_table(ring: RingDescriptor) -> Optional[np.ndarray]:
    N, r = ring.characteristic, ring.r
    if N ** r > 2 ** 20 or rm.dtype_for(ring, 1) == object:
        return None
    table = np.zeros((N ** r, r), dtype=np.int64)
    for a in units(ring):
        idx = sum(c * N ** i for i, c in enumerate(a.coeffs))
        table[idx] = a.inverse().coeffs
    return table


def batch_inverse(ring: RingDescriptor, vals: np.ndarray) -> np.ndarray:
    table = _inverse_table(ring)
    if table is not None:
        N = ring.characteristic
        weights = np.array([N ** i for i in range(ring.r)], dtype=np.int64)
        return table[vals.astype(np.int64) @ weights].astype(vals.dtype)
    out = np.empty_like(vals)
    for b in range(len(vals)):
        out[b] = RingElement(ring, tuple(int(c) for c in vals[b])).inverse().coeffs
    return out


def _normalize_first_unit(ring: RingDescriptor, X: np.ndarray) -> np.ndarray:
    unit = ((X % ring.p) != 0).any(axis=2)
    has = unit.any(axis=1)
    if not np.all(has):
        raise NotInvertible("no unit entry to normalize")
    first = unit.argmax(axis=1)
    vals = X[np.arange(len(X)), first]
    return rm.scalar_mul_batch(ring, X, batch_inverse(ring, vals))


def _lexmin_over_scalars(ring: RingDescriptor, X: np.ndarray, scalars: Sequence[RingElement]) -> np.ndarray:
    b = len(X)
    best = None
    for z in scalars:
        s = np.tile(np.array(z.coeffs, dtype=X.dtype), (b, 1))
        cand = rm.scalar_mul_batch(ring, X, s).reshape(b, -1)
        if best is None:
            best = cand.copy()
            continue
        diff = cand != best
        has = diff.any(axis=1)
        idx = diff.argmax(axis=1)
        rows = np.arange(b)
        better = has & (cand[rows, idx] < best[rows, idx])
        best[better] = cand[better]
    return best.reshape(X.shape)


def canonical_batch(D: GroupDescriptor, Ms: np.ndarray) -> np.ndarray:
    if not D.is_quotient:
        return Ms
    b, m = Ms.shape[0], D.size
    flat = Ms.reshape(b, m * m, D.ring.r)
    if D.family == "SL_mod_mu_m":
        out = _lexmin_over_scalars(D.ring, flat, central_scalars(D))
    else:
        out = _normalize_first_unit(D.ring, flat)
    return out.reshape(Ms.shape)


def canonical_points(D: GroupDescriptor, P: np.ndarray) -> np.ndarray:
    if not D.is_quotient:
        return P
    if D.family == "SL_mod_mu_m":
        return _lexmin_over_scalars(D.ring, P, central_scalars(D))
    return _normalize_first_unit(D.ring, P)


def adjoint_representative(M: np.ndarray, D: GroupDescriptor) -> np.ndarray:
    if not D.is_quotient:
        raise UnsupportedFamily(f"{D.family} is not a central quotient")
    if not rm.is_invertible(D.ring, M):
        raise NotInvertible("matrix is not invertible")
    return canonical_batch(D, np.asarray(M)[None])[0]


# =========================
# GENERATORS
# =========================
def unit_generators(ring: RingDescriptor) -> List[RingElement]:
    """Generators of R^*: a Teichmuller primitive root and 1 + p t^k, 1 + p^2 t^k."""
    gens = []
    g = primitive_root(ring)
    if g != one(ring):
        gens.append(g)
    p = RingElement.of(ring, ring.p)
    for k in range(ring.r):
        tk = gen_t(ring, k) if k else one(ring)
        for c in (p, p * p):
            u = one(ring) + c * tk
            if u != one(ring) and u not in gens:
                gens.append(u)
    return gens


def _scalars(ring: RingDescriptor) -> List[RingElement]:
    return [gen_t(ring, k) if k else one(ring) for k in range(ring.r)]


def _elementary(ring: RingDescriptor, m: int, i: int, j: int, a: RingElement) -> np.ndarray:
    M = rm.identity(ring, m)
    M[i, j] = a.coeffs
    return M


def _diag_matrix(ring: RingDescriptor, values: Sequence[RingElement]) -> np.ndarray:
    m = len(values)
    M = rm.zeros(ring, m)
    for i, v in enumerate(values):
        M[i, i] = v.coeffs
    return M


def _sl_generators(ring: RingDescriptor, m: int) -> List[np.ndarray]:
    gens = []
    for i in range(m - 1):
        for a in _scalars(ring):
            gens.append(_elementary(ring, m, i, i + 1, a))
            gens.append(_elementary(ring, m, i + 1, i, a))
    return gens


def _sp_generators(ring: RingDescriptor, m: int) -> List[np.ndarray]:
    k = m // 2
    gens = []
    for a in _scalars(ring):
        for i in range(k):
            for j in range(i, k):
                up = rm.identity(ring, m)
                lo = rm.identity(ring, m)
                up[i, k + j] = a.coeffs
                up[j, k + i] = a.coeffs
                lo[k + i, j] = a.coeffs
                lo[k + j, i] = a.coeffs
                gens.extend([up, lo])
        for i in range(k):
            for j in range(k):
                if i == j:
                    continue
                M = rm.identity(ring, m)
                M[i, j] = a.coeffs
                M[k + j, k + i] = (-a).coeffs
                gens.append(M)
    return gens


def _vector(ring: RingDescriptor, m: int, idx: int, a: RingElement) -> List[RingElement]:
    v = [zero(ring)] * m
    v[idx] = a
    return v


def _eichler(D: GroupDescriptor, e_idx: int, w: List[RingElement]) -> np.ndarray:
    """x -> x + B(x,e) w - B(x,w) e - Q(w) B(x,e) e, with e a standard isotropic vector."""
    ring, m = D.ring, D.size
    U = rm.entries(ring, quadratic_form(D))
    S = [[U[i][j] + U[j][i] for j in range(m)] for i in range(m)]
    Q = zero(ring)
    for i in range(m):
        for j in range(m):
            Q = Q + w[i] * U[i][j] * w[j]
    eS = S[e_idx]  # row e^T S
    wS = [sum((w[i] * S[i][j] for i in range(m)), zero(ring)) for j in range(m)]
    rows = []
    for i in range(m):
        row = []
        for j in range(m):
            val = one(ring) if i == j else zero(ring)
            val = val + w[i] * eS[j]
            if i == e_idx:
                val = val - wS[j] - Q * eS[j]
            row.append(val)
        rows.append(row)
    return rm.from_entries(ring, rows)


def _orthogonal_generators(D: GroupDescriptor) -> List[np.ndarray]:
    ring, m = D.ring, D.size
    h = hyperbolic_pairs(D)
    gens = []
    for i in range(h):
        for e_idx in (i, m - 1 - i):
            for b in range(m):
                if b in (i, m - 1 - i):
                    continue
                for a in _scalars(ring):
                    gens.append(_eichler(D, e_idx, _vector(ring, m, b, a)))
    if h:
        for u in unit_generators(ring):
            vals = [one(ring)] * m
            vals[0] = u
            vals[m - 1] = u.inverse()
            gens.append(_diag_matrix(ring, vals))
    return gens


def _orthogonal_similitudes(D: GroupDescriptor) -> List[np.ndarray]:
    ring, m = D.ring, D.size
    h = hyperbolic_pairs(D)
    out = []
    if not D.is_minus:
        for u in unit_generators(ring):
            out.append(_diag_matrix(ring, [u] * (m // 2) + [one(ring)] * (m // 2)))
        return out
    # field level: norm-u multiplication on the anisotropic plane
    u = primitive_root(ring)
    a = minus_parameter(ring)
    field_elems = list(elements(ring))
    for c in field_elems:
        for d in field_elems:
            if c * c + c * d + a * d * d == u:
                M = _diag_matrix(ring, [u] * h + [one(ring), one(ring)] + [one(ring)] * h)
                M[h, h] = c.coeffs
                M[h, h + 1] = (-(a * d)).coeffs
                M[h + 1, h] = d.coeffs
                M[h + 1, h + 1] = (c + d).coeffs
                return [M]
    raise RuntimeError("norm map not surjective")


def _random_unitary(D: GroupDescriptor, rng: np.random.Generator) -> np.ndarray:
    ring, m = D.ring, D.size
    cols: List[List[RingElement]] = []
    N = ring.characteristic
    while len(cols) < m:
        vec = [RingElement.of(ring, rng.integers(0, N, size=ring.r).tolist()) for _ in range(m)]
        conj = [rm_conj(D, x) for x in vec]
        norm = sum((c * x for c, x in zip(conj, vec)), zero(ring))
        if norm != one(ring):
            continue
        ok = True
        for col in cols:
            inner = sum((rm_conj(D, x) * y for x, y in zip(col, vec)), zero(ring))
            if not inner.is_zero():
                ok = False
                break
        if ok:
            cols.append(vec)
    rows = [[cols[j][i] for j in range(m)] for i in range(m)]
    M = rm.from_entries(ring, rows)
    if D.family == "SU":
        dinv = rm.det(ring, M).inverse()
        for i in range(m):
            M[i, m - 1] = (rm.entry(ring, M, i, m - 1) * dinv).coeffs
    return M


def rm_conj(D: GroupDescriptor, x: RingElement) -> RingElement:
    from src.common.galois_ring import frobenius_auto

    return frobenius_auto(x, D.ring.r // 2)


def _unitary_generators(D: GroupDescriptor, seed: int = 0) -> List[np.ndarray]:
    rng = np.random.default_rng(seed)
    target = field_order(D)
    gens: List[np.ndarray] = []
    order = 1
    attempts = 0
    while order < target:
        attempts += 1
        if attempts > 200:
            raise RuntimeError(f"could not generate {D} from random frames")
        M = _random_unitary(D, rng)
        trial = gens + [M]
        new_order = perm_action.permutation_group(D, trial).group.order()
        if new_order > order:
            gens, order = trial, new_order
    log.debug("unitary generators for %s: %d frames", D, len(gens))
    return gens


def standard_generators(D: GroupDescriptor) -> List[np.ndarray]:
    ring, m = D.ring, D.size
    fam = D.cover_family
    if fam == "SL":
        gens = _sl_generators(ring, m)
    elif fam == "GL":
        gens = _sl_generators(ring, m)
        for u in unit_generators(ring):
            gens.append(_diag_matrix(ring, [u] + [one(ring)] * (m - 1)))
    elif fam == "Sp":
        gens = _sp_generators(ring, m)
    elif fam == "GSp":
        gens = _sp_generators(ring, m)
        for u in unit_generators(ring):
            gens.append(_diag_matrix(ring, [u] * (m // 2) + [one(ring)] * (m // 2)))
    elif fam in ORTHOGONAL:
        gens = _orthogonal_generators(D)
        if fam.startswith("GSO"):
            gens += _orthogonal_similitudes(D)
    elif fam in UNITARY:
        gens = _unitary_generators(D)
    else:
        raise NotInstantiable(f"no generators for {D.family}")
    if not gens:
        gens = [rm.identity(ring, m)]
    if D.is_quotient:
        gens = list(canonical_batch(D, np.array(gens)))
    return gens


# =========================
# REDUCTION / SAMPLING
# =========================
def reduce_element(M: np.ndarray, D: GroupDescriptor, m: int) -> np.ndarray:
    if m < 1 or m > D.level:
        raise BadLevel(f"cannot reduce {D} to level {m}")
    out = rm.reduce_matrix(M, D.ring, m)
    if D.is_quotient:
        out = canonical_batch(D.at_level(m), out[None])[0]
    return out


def random_element(D: GroupDescriptor, rng: np.random.Generator, length: int = 24,
                   gens: Optional[Sequence[np.ndarray]] = None) -> np.ndarray:
    gens = list(gens) if gens is not None else standard_generators(D)
    M = rm.identity(D.ring, D.size)
    for _ in range(length):
        M = D.mul(M, gens[int(rng.integers(len(gens)))])
    return M


# =========================
# WEIL RESTRICTION
# =========================
@dataclass(frozen=True)
class WeilRestriction:
    """Res_{R'/R} of a linear family: R' = W_n(F_{p^s}) over R = Z/p^n via the basis 1, t, ..., t^(s-1)."""

    original: GroupDescriptor
    ring: RingDescriptor
    degree: int

    @property
    def size(self) -> int:
        return self.original.size * self.degree

    @property
    def is_quotient(self) -> bool:
        return self.original.is_quotient

    def regular(self, a: RingElement) -> np.ndarray:
        s = self.degree
        cols = []
        for k in range(s):
            tk = gen_t(a.desc, k) if k else one(a.desc)
            cols.append((a * tk).coeffs)
        return np.array(cols, dtype=np.int64).T

    def transport(self, M: np.ndarray) -> np.ndarray:
        m, s = self.original.size, self.degree
        big = rm.zeros(self.ring, m * s)
        src = self.original.ring
        for i in range(m):
            for j in range(m):
                block = self.regular(rm.entry(src, M, i, j))
                big[i * s:(i + 1) * s, j * s:(j + 1) * s, 0] = block
        return big

    def untransport(self, B: np.ndarray) -> np.ndarray:
        m, s = self.original.size, self.degree
        out = rm.zeros(self.original.ring, m)
        for i in range(m):
            for j in range(m):
                out[i, j] = B[i * s:(i + 1) * s, j * s, 0]
        return out

    def _vector_to_original(self, P: np.ndarray) -> np.ndarray:
        b = P.shape[0]
        m, s = self.original.size, self.degree
        return P[..., 0].reshape(b, m, s).astype(rm.dtype_for(self.original.ring, m))

    def _vector_from_original(self, V: np.ndarray) -> np.ndarray:
        b = V.shape[0]
        return V.reshape(b, -1)[..., None].astype(rm.dtype_for(self.ring, self.size))

    def canon(self, Ms: np.ndarray) -> np.ndarray:
        if not self.is_quotient:
            return Ms
        out = [self.transport(self.original.canon(self.untransport(B)[None])[0]) for B in Ms]
        return np.array(out)

    def canon_points(self, P: np.ndarray) -> np.ndarray:
        if not self.is_quotient:
            return P
        V = self.original.canon_points(self._vector_to_original(P))
        return self._vector_from_original(V)

    def mul(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        return self.canon(rm.mat_mul(self.ring, A, B)[None])[0]

    def generators(self) -> List[np.ndarray]:
        return [self.transport(g) for g in standard_generators(self.original)]

    def order(self) -> int:
        return group_order(self.original)

    def __str__(self) -> str:
        return f"Res[{self.degree}]{self.original}"


def weil_restriction(D: GroupDescriptor) -> WeilRestriction:
    if D.family not in ("GL", "SL", "PGL"):
        raise UnsupportedFamily(f"Weil restriction is implemented for GL, SL, PGL, not {D.family}")
    if D.size * D.ring.r > WEIL_RESTRICTION_BOUND:
        raise TooLarge(f"restricted size {D.size * D.ring.r} exceeds {WEIL_RESTRICTION_BOUND}")
    base = construct_ring(D.ring.p, 1, D.ring.n)
    return WeilRestriction(original=D, ring=base, degree=D.ring.r)


# =========================
# F(R)'
# =========================
SC_COVER = {"GL": "SL", "PGL": "SL", "GSp": "Sp", "PGSp": "Sp", "SL": "SL", "Sp": "Sp",
            "SU": "SU", "SL_mod_mu_m": "SL"}


@dataclass
class ScImage:
    generators: List[np.ndarray]
    order: int
    index: int
    cover: str


def sc_image(D: GroupDescriptor, bound: int = ENUM_BOUND) -> ScImage:
    if D.family not in SC_COVER:
        raise UnsupportedFamily(f"no simply connected cover implemented for {D.family}")
    if group_order(D) > bound:
        raise TooLarge(f"|{D}| exceeds {bound}")
    cover = D.with_family(SC_COVER[D.family]) if D.family != "SL_mod_mu_m" else D.with_family("SL")
    gens = standard_generators(cover)
    if D.is_quotient:
        gens = list(canonical_batch(D, np.array(gens)))
    if SC_COVER[D.family] == D.family or D.family == "SL_mod_mu_m":
        order = group_order(D)
    else:
        order = int(perm_action.permutation_group(D, gens).group.order())
    return ScImage(generators=gens, order=order, index=group_order(D) // order, cover=cover.family)
