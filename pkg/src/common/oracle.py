import hashlib
import logging
import os
from dataclasses import dataclass, field
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np
import sympy
from sympy.combinatorics import Permutation, PermutationGroup

from src.common.config import (
    CACHE_DIR,
    CACHE_VERSION,
    COMPOSITION_BOUND,
    ENUM_BOUND,
    SECTION_RELATION_BUDGET,
    SEED,
    USE_CACHE,
)
from src.common.errors import BadLevel, BoundExceeded, BudgetExceeded, UnsupportedFamily
from src.common import lie_layers as ll
from src.common import matrix_groups as mg
from src.common import perm_action
from src.common import ring_matrix as rm

log = logging.getLogger(__name__)


# =========================
# ENUMERATION
# =========================
@dataclass
class EnumeratedGroup:
    """All elements of a generated group in BFS order, with the right Cayley graph on the generators."""

    ctx: object
    generators: List[np.ndarray]
    elements: np.ndarray
    index: Dict[Hashable, int]
    parent: np.ndarray
    parent_gen: np.ndarray
    depth: np.ndarray
    cayley: np.ndarray  # cayley[c, x] = index of elements[x] * generators[c]
    provenance: str = ""

    @property
    def order(self) -> int:
        return len(self.elements)

    def __len__(self) -> int:
        return self.order

    def key_of(self, M: np.ndarray) -> Hashable:
        return _keys(self.ctx, np.asarray(M)[None])[0]

    def contains(self, M: np.ndarray) -> bool:
        return self.key_of(M) in self.index

    def index_of(self, M: np.ndarray) -> int:
        return self.index[self.key_of(M)]

    def mul(self, i: int, j: int) -> int:
        return self.index_of(self.ctx.mul(self.elements[i], self.elements[j]))

    def word(self, i: int) -> List[int]:
        """Generator indices whose product (left to right) is element i."""
        out = []
        while i:
            out.append(int(self.parent_gen[i]))
            i = int(self.parent[i])
        return out[::-1]


def _keys(ctx, Ms: np.ndarray) -> List[Hashable]:
    flat = Ms.reshape(Ms.shape[0], -1)
    if flat.dtype == object:
        return [tuple(int(v) for v in row) for row in flat]
    flat = np.ascontiguousarray(flat.astype(np.int64))
    return [row.tobytes() for row in flat]


def _identity(ctx) -> np.ndarray:
    ident = rm.identity(ctx.ring, ctx.size)
    return ctx.canon(ident[None])[0]


def _cache_path(ctx, gens: Sequence[np.ndarray]) -> str:
    h = hashlib.sha256()
    h.update(f"{CACHE_VERSION}|{ctx}".encode())
    for g in gens:
        h.update(np.ascontiguousarray(np.asarray(g, dtype=np.int64)).tobytes())
    return os.path.join(CACHE_DIR, f"{h.hexdigest()}.npz")


def enumerate_closure(ctx, generators: Sequence[np.ndarray], bound: int = ENUM_BOUND,
                      use_cache: bool = USE_CACHE) -> EnumeratedGroup:
    """Breadth-first closure of the generators under right multiplication."""
    gens = [np.asarray(g) for g in generators]
    dtype = rm.dtype_for(ctx.ring, ctx.size)
    path = _cache_path(ctx, gens) if use_cache and dtype != object else None
    if path and os.path.exists(path):
        data = np.load(path)
        elements = data["elements"]
        index = {k: i for i, k in enumerate(_keys(ctx, elements))}
        log.info("loaded %d elements of %s from cache", len(elements), ctx)
        return EnumeratedGroup(ctx, gens, elements, index, data["parent"], data["parent_gen"],
                               data["depth"], data["cayley"], provenance=str(ctx))

    ident = _identity(ctx).astype(dtype)
    chunks = [ident[None]]
    index: Dict[Hashable, int] = {_keys(ctx, ident[None])[0]: 0}
    parent, parent_gen, depth = [0], [-1], [0]
    edges: List[List[Tuple[int, int]]] = [[] for _ in gens]
    frontier = ident[None]
    frontier_ids = np.array([0])
    level = 0
    while len(frontier):
        level += 1
        new_rows, new_ids = [], []
        for c, g in enumerate(gens):
            prods = ctx.canon(rm.mat_mul_batch(ctx.ring, frontier, g.astype(dtype)))
            for src, key, row in zip(frontier_ids, _keys(ctx, prods), prods):
                tgt = index.get(key)
                if tgt is None:
                    tgt = len(index)
                    index[key] = tgt
                    parent.append(int(src))
                    parent_gen.append(c)
                    depth.append(level)
                    new_rows.append(row)
                    new_ids.append(tgt)
                edges[c].append((int(src), tgt))
            if len(index) > bound:
                raise BoundExceeded(f"closure exceeds {bound} elements")
        frontier = np.array(new_rows) if new_rows else np.zeros((0,) + ident.shape, dtype=dtype)
        frontier_ids = np.array(new_ids, dtype=np.int64)
        if len(frontier):
            chunks.append(frontier)
    elements = np.concatenate(chunks, axis=0)
    n = len(elements)
    cayley = np.zeros((len(gens), n), dtype=np.int64)
    for c, pairs in enumerate(edges):
        for src, tgt in pairs:
            cayley[c, src] = tgt
    group = EnumeratedGroup(ctx, gens, elements, index, np.array(parent), np.array(parent_gen),
                            np.array(depth), cayley, provenance=str(ctx))
    log.info("enumerated %d elements of %s (depth %d)", n, ctx, level - 1)
    if path:
        os.makedirs(CACHE_DIR, exist_ok=True)
        np.savez_compressed(path, elements=elements, parent=group.parent,
                            parent_gen=group.parent_gen, depth=group.depth, cayley=cayley)
    return group


def enumerate_group(D: mg.GroupDescriptor, bound: int = ENUM_BOUND) -> EnumeratedGroup:
    return enumerate_closure(D, mg.standard_generators(D), bound)


def permutation_group_of(G: EnumeratedGroup) -> PermutationGroup:
    return perm_action.permutation_group(G.ctx, G.generators).group


# =========================
# BATCH ORDERS
# =========================
def batch_pow(ctx, Ms: np.ndarray, e: int) -> np.ndarray:
    result = np.broadcast_to(_identity(ctx).astype(Ms.dtype), Ms.shape).copy()
    base = Ms
    while e:
        if e & 1:
            result = ctx.canon(rm.mat_mul_pairwise(ctx.ring, result, base))
        e >>= 1
        if e:
            base = ctx.canon(rm.mat_mul_pairwise(ctx.ring, base, base))
    return result


def _is_identity_batch(ctx, Ms: np.ndarray) -> np.ndarray:
    ident = _identity(ctx)
    return np.all(Ms.reshape(len(Ms), -1) == ident.reshape(-1), axis=1)


def element_order(ctx, M: np.ndarray, limit: int = 10 ** 7) -> int:
    ident = _identity(ctx)
    acc = np.asarray(M)
    k = 1
    while not np.array_equal(acc, ident):
        acc = ctx.mul(acc, M)
        k += 1
        if k > limit:
            raise BoundExceeded(f"element order exceeds {limit}")
    return k


def has_order(ctx, Ms: np.ndarray, e: int) -> np.ndarray:
    """Mask of the batch elements whose order is exactly e."""
    ok = _is_identity_batch(ctx, batch_pow(ctx, Ms, e))
    for ell in sympy.factorint(e) if e > 1 else []:
        ok &= ~_is_identity_batch(ctx, batch_pow(ctx, Ms, e // ell))
    return ok


# =========================
# SECTIONS
# =========================
@dataclass
class SectionResult:
    found: bool
    base_order: int
    kernel_order: int
    base_generators: List[np.ndarray]
    lifts: List[np.ndarray]
    certificate: Dict[str, int] = field(default_factory=dict)


def _reduce_batch(cover: mg.GroupDescriptor, base: mg.GroupDescriptor, Ms: np.ndarray) -> np.ndarray:
    out = (Ms % base.ring.characteristic).astype(rm.dtype_for(base.ring, base.size))
    return base.canon(out)


def kernel_elements(cover: mg.GroupDescriptor) -> np.ndarray:
    """Ker(G(W_s) -> G(W_{s-1})) for s = cover.level, as encoded Lie vectors."""
    s = cover.level - 1
    basis = ll.lie_fp_basis(cover)
    p = cover.ring.p
    d = len(basis)
    out = []
    for k in range(p ** d):
        X = np.zeros_like(basis[0]) if d else np.zeros((cover.size, cover.size, cover.ring.r), dtype=np.int64)
        for j in range(d):
            c = (k // p ** j) % p
            if c:
                X = (X + c * basis[j]) % p
        out.append(ll.encode(cover, X, s, check=False))
    return np.array(out)


def _tree_lifts(cover: mg.GroupDescriptor, base_group: EnumeratedGroup, cover_gens: Sequence[np.ndarray]) -> np.ndarray:
    """Lift of every base element along the BFS tree, using lifted generators."""
    dtype = rm.dtype_for(cover.ring, cover.size)
    lifts = np.zeros((base_group.order,) + cover_gens[0].shape, dtype=dtype)
    lifts[0] = _identity(cover)
    depth = base_group.depth
    for level in range(1, int(depth.max()) + 1):
        ids = np.nonzero(depth == level)[0]
        for c in range(len(cover_gens)):
            sel = ids[base_group.parent_gen[ids] == c]
            if len(sel):
                lifts[sel] = cover.canon(rm.mat_mul_batch(cover.ring, lifts[base_group.parent[sel]], cover_gens[c]))
    return lifts


_PAIR_WORDS = ("ab", "aab", "abb", "abab", "aabb")


def _word(ctx, letters: str, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = None
    for ch in letters:
        m = a if ch == "a" else b
        out = m if out is None else ctx.canon(rm.mat_mul_pairwise(ctx.ring, out, m))
    return out


def _generating_pair(base: mg.GroupDescriptor, G: EnumeratedGroup, rng: np.random.Generator,
                     tries: int = 400) -> Optional[Tuple[int, int]]:
    target = G.order
    for _ in range(tries):
        i, j = (int(v) for v in rng.integers(0, target, size=2))
        gens = [G.elements[i], G.elements[j]]
        if perm_action.permutation_group(base, gens).group.order() == target:
            return i, j
    return None


def find_section(cover: mg.GroupDescriptor, base: mg.GroupDescriptor,
                 relation_budget: int = SECTION_RELATION_BUDGET, seed: int = SEED) -> SectionResult:
    """Search a subgroup of G(W_s) mapping isomorphically onto G(W_{s-1})."""
    if base.family != cover.family or base.size != cover.size:
        raise UnsupportedFamily("section search needs the same family on both levels")
    if base.level != cover.level - 1:
        raise BadLevel("section search is implemented for one-step reductions")
    base_full = enumerate_group(base)
    cover_gens = mg.standard_generators(cover)
    K = kernel_elements(cover)
    if base_full.order == 1:
        ident = _identity(cover)
        return SectionResult(True, 1, len(K), [], [ident], {"pairs_checked": 0, "pairs_pruned": 0})

    rng = np.random.default_rng(seed)
    pair = _generating_pair(base, base_full, rng)
    if pair is None:
        raise BoundExceeded(f"no generating pair of {base} found")
    a, b = (base_full.elements[i] for i in pair)
    # lifts of a and b along the tree of the reduced standard generators
    reduced = [mg.reduce_element(g, cover, base.level) for g in cover_gens]
    tree = enumerate_closure(base, reduced)
    tree_lifts = _tree_lifts(cover, tree, cover_gens)
    a_hat = tree_lifts[tree.index_of(a)]
    b_hat = tree_lifts[tree.index_of(b)]

    ord_a, ord_b = element_order(base, a), element_order(base, b)
    cand_a = cover.canon(rm.left_mul_batch(cover.ring, a_hat, K))
    cand_b = cover.canon(rm.left_mul_batch(cover.ring, b_hat, K))
    n_a_all, n_b_all = len(cand_a), len(cand_b)
    cand_a = cand_a[has_order(cover, cand_a, ord_a)]
    cand_b = cand_b[has_order(cover, cand_b, ord_b)]
    # conjugating a section by a kernel element gives a section
    K_inv = _inverses(cover, K)
    reps, seen = [], set()
    for A in cand_a:
        key = _keys(cover, A[None])[0]
        if key in seen:
            continue
        reps.append(A)
        seen.update(_keys(cover, _conjugates(cover, A, K, K_inv)))
    word_orders = {w: element_order(base, _word(base, w, a[None], b[None])[0]) for w in _PAIR_WORDS}

    # relations: lift(x) * lift(c) = lift(x c) along the BFS tree of <a, b>
    ab_tree = enumerate_closure(base, [a, b])
    checked = pruned = 0
    relation_checks = 0
    witness = None
    for A in reps:
        B = cand_b
        mask = np.ones(len(B), dtype=bool)
        for w, e in word_orders.items():
            if not mask.any():
                break
            idx = np.nonzero(mask)[0]
            Ws = _word(cover, w, np.broadcast_to(A, B[idx].shape), B[idx])
            mask[idx] = has_order(cover, Ws, e)
        pruned += int((~mask).sum())
        for B1 in B[mask]:
            checked += 1
            relation_checks += 2 * ab_tree.order
            if relation_checks > relation_budget:
                raise BudgetExceeded(f"section search exceeded {relation_budget} relation checks")
            lifts = _tree_lifts(cover, ab_tree, [A, B1])
            ok = True
            for c, C in enumerate((A, B1)):
                prods = cover.canon(rm.mat_mul_batch(cover.ring, lifts, C))
                if not np.array_equal(prods, lifts[ab_tree.cayley[c]]):
                    ok = False
                    break
            if ok:
                witness = (A, B1, lifts)
                break
        if witness is not None:
            break
    cert = {
        "candidates_a": n_a_all,
        "candidates_b": n_b_all,
        "order_filtered_a": len(cand_a),
        "orbit_representatives_a": len(reps),
        "order_filtered_b": len(cand_b),
        "pairs_checked": checked,
        "pairs_pruned": pruned,
        "relation_checks": relation_checks,
    }
    log.info("section search %s -> %s: %s (%s)", cover, base, "found" if witness else "exhausted", cert)
    if witness is None:
        return SectionResult(False, base_full.order, len(K), [a, b], [], cert)
    return SectionResult(True, base_full.order, len(K), [a, b], list(witness[2]), cert)


def _inverses(ctx, Ms: np.ndarray) -> np.ndarray:
    return np.array([rm.inverse(ctx.ring, M) for M in Ms]).astype(Ms.dtype)


def _conjugates(ctx, A: np.ndarray, K: np.ndarray, K_inv: np.ndarray) -> np.ndarray:
    """k A k^-1 for every k in K."""
    left = rm.left_mul_batch(ctx.ring, A, K_inv)
    return ctx.canon(rm.mat_mul_pairwise(ctx.ring, K, left))


# =========================
# COMPOSITION FACTORS
# =========================
@dataclass(frozen=True)
class Factor:
    order: int
    abelian: bool
    simple: bool = True

    @property
    def label(self) -> str:
        return f"C_{self.order}" if self.abelian else f"simple({self.order})"


def _trivial(degree: int) -> PermutationGroup:
    return PermutationGroup([Permutation(list(range(degree)))])


def _join(A: PermutationGroup, B: PermutationGroup) -> PermutationGroup:
    return PermutationGroup(list(A.generators) + list(B.generators))


def _factors(A: PermutationGroup, B: PermutationGroup) -> List[Factor]:
    """Composition factors of A/B for B normal in A."""
    index = A.order() // B.order()
    if index == 1:
        return []
    DB = _join(A.derived_subgroup(), B)
    if DB.order() < A.order():
        out = []
        for ell, e in sorted(sympy.factorint(A.order() // DB.order()).items()):
            out.extend([Factor(ell, True)] * e)
        return _factors(DB, B) + out
    # A/B is perfect: split at a proper normal closure when one exists
    for cls in A.conjugacy_classes():
        x = next(iter(cls))
        if B.contains(x):
            continue
        N = A.normal_closure(list(B.generators) + [x])
        if N.order() < A.order():
            return _factors(N, B) + _factors(A, N)
    return [Factor(index, False)]


def composition_factors(G, bound: int = COMPOSITION_BOUND) -> List[Factor]:
    """Composition factors of an EnumeratedGroup or a sympy PermutationGroup, smallest first."""
    P = permutation_group_of(G) if isinstance(G, EnumeratedGroup) else G
    if P.order() > bound:
        raise BoundExceeded(f"group order {P.order()} exceeds {bound}")
    out = _factors(P, _trivial(P.degree))
    log.info("composition factors: %s", ", ".join(f.label for f in out) or "none")
    return sorted(out, key=lambda f: (f.order, f.abelian))


# =========================
# GENERATION PROPERTIES
# =========================
ADJOINT_OF = {
    "GL": "PGL", "SL": "PGL", "PGL": "PGL", "SL_mod_mu_m": "PGL",
    "Sp": "PGSp", "GSp": "PGSp", "PGSp": "PGSp",
    "GSO_plus": "PGSO_plus", "PGSO_plus": "PGSO_plus",
    "GSO_minus": "PGSO_minus", "PGSO_minus": "PGSO_minus",
}
SC_OF = {"GL": "SL", "SL": "SL", "PGL": "SL", "SL_mod_mu_m": "SL", "Sp": "Sp", "GSp": "Sp",
         "PGSp": "Sp", "U": "SU", "SU": "SU"}


@dataclass
class GenerationReport:
    family: str
    premise: Optional[bool] = None
    conclusion: Optional[bool] = None
    implication_holds: Optional[bool] = None
    sc_order: Optional[int] = None
    order_p_subgroup_order: Optional[int] = None
    generated_by_order_p: Optional[bool] = None
    notes: List[str] = field(default_factory=list)


def _order_p_closure(P: PermutationGroup, p: int) -> PermutationGroup:
    reps = [next(iter(cls)) for cls in P.conjugacy_classes()]
    gens = [x for x in reps if x.order() == p]
    if not gens:
        return _trivial(P.degree)
    return P.normal_closure(gens)


def verify_generation_props(D: mg.GroupDescriptor, S: Optional[Sequence[np.ndarray]] = None,
                            bound: int = COMPOSITION_BOUND) -> GenerationReport:
    """Derived-subgroup containment through G^ad(k) and generation of G^sc(k) by order-p elements."""
    D1 = D.at_level(1)
    report = GenerationReport(family=D1.family)
    if D1.family in ADJOINT_OF and S is not None:
        ad = D1.with_family(ADJOINT_OF[D1.family])
        S1 = [rm.reduce_matrix(np.asarray(g), D.ring, 1) for g in S]
        S_ad = list(ad.canon(np.array(S1))) if S1 else []
        ad_action = perm_action.permutation_group(ad, mg.standard_generators(ad), extra=S_ad)
        ad_derived = ad_action.group.derived_subgroup()
        S_ad_group = perm_action.subgroup_of(ad_action, ad_action.extra)
        report.premise = perm_action.contains_all(S_ad_group, ad_derived.generators)
        full = perm_action.permutation_group(D1, mg.standard_generators(D1), extra=S1)
        if full.group.order() > bound:
            raise BoundExceeded(f"|{D1}| exceeds {bound}")
        derived = full.group.derived_subgroup()
        S_group = perm_action.subgroup_of(full, full.extra)
        report.conclusion = perm_action.contains_all(S_group, derived.generators)
        report.implication_holds = (not report.premise) or report.conclusion
    elif S is not None:
        report.notes.append(f"no adjoint quotient implemented for {D1.family}")
    if D1.family in SC_OF:
        sc = D1.with_family(SC_OF[D1.family])
        P = perm_action.permutation_group(sc, mg.standard_generators(sc)).group
        if P.order() > bound:
            raise BoundExceeded(f"|{sc}| exceeds {bound}")
        Q = _order_p_closure(P, D1.ring.p)
        report.sc_order = int(P.order())
        report.order_p_subgroup_order = int(Q.order())
        report.generated_by_order_p = report.sc_order == report.order_p_subgroup_order
    log.info("generation properties of %s: %s", D1, report)
    return report
