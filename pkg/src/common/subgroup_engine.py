import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np

from src.common.config import SCHREIER_NODE_BUDGET, SEED, WORD_BUDGET
from src.common.criteria import ConditionReport, check_2_3_exceptions, exception_hits
from src.common.dynkin import datum_for
from src.common.errors import (
    BadLevel,
    ExceptionListHit,
    HypothesisMissing,
    NotExactFiltration,
    TooLarge,
    UnsupportedFamily,
)
from src.common.galois_ring import gen_t, one
from src.common.linalg import EchelonBasis, complement_basis
from src.common import lie_layers as ll
from src.common import matrix_groups as mg
from src.common import perm_action
from src.common import ring_matrix as rm

log = logging.getLogger(__name__)

HYP_AB_FULL = "abelianization image is full"
HYP_DISJOINT = "E linearly disjoint from Q(mu_p^inf)"

FULL, TILDE, NORMAL_DERIVED, THM_4_1 = "FULL", "TILDE", "NORMAL_DERIVED", "THM_4_1"
MODES = (FULL, TILDE, NORMAL_DERIVED, THM_4_1)

OUTCOME_EXIT = {
    "FullGroup": 0,
    "FullOnQuotient": 10,
    "NormalSubgroupContained": 10,
    "NotSurjective": 20,
    "Inconclusive": 30,
}

TILDE_FAMILY = {"GL": "PGL", "GSp": "PGSp", "GSO_plus": "PGSO_plus", "GSO_minus": "PGSO_minus"}
DERIVED_FAMILY = {"GL": "SL", "SL": "SL", "GSp": "Sp", "Sp": "Sp", "GSO_plus": "SO_plus",
                  "GSO_minus": "SO_minus", "SO_plus": "SO_plus", "SO_minus": "SO_minus"}


# =========================
# INPUT
# =========================
@dataclass
class GeneratedSubgroup:
    desc: mg.GroupDescriptor
    generators: List[np.ndarray]
    hypotheses: Tuple[str, ...] = ()

    @property
    def level(self) -> int:
        return self.desc.level

    def at_level(self, n: int) -> "GeneratedSubgroup":
        if n > self.level:
            raise BadLevel(f"cannot lift generators from level {self.level} to {n}")
        D = self.desc.at_level(n)
        return GeneratedSubgroup(D, [mg.reduce_element(g, self.desc, n) for g in self.generators], self.hypotheses)

    def in_family(self, family: str) -> "GeneratedSubgroup":
        D = self.desc.with_family(family)
        gens = [np.asarray(g) for g in self.generators]
        if D.is_quotient and gens:
            gens = list(D.canon(np.array(gens)))
        return GeneratedSubgroup(D, gens, self.hypotheses)


def generated_subgroup(D: mg.GroupDescriptor, generators: Sequence[np.ndarray],
                       hypotheses: Sequence[str] = ()) -> GeneratedSubgroup:
    """Validates every generator (NotAMember otherwise)."""
    gens = [mg.make_element(g, D).matrix for g in generators]
    return GeneratedSubgroup(D, gens, tuple(hypotheses))


# =========================
# RESIDUE IMAGE
# =========================
@dataclass
class ResidueImage:
    generators: List[np.ndarray]
    order: Optional[int] = None
    target_order: Optional[int] = None
    full: Optional[bool] = None
    contains_derived: Optional[bool] = None
    tilde_full: Optional[bool] = None
    too_large: bool = False


def _residue_gens(K: GeneratedSubgroup) -> List[np.ndarray]:
    return [mg.reduce_element(g, K.desc, 1) for g in K.generators]


def _image_order(D1: mg.GroupDescriptor, gens: Sequence[np.ndarray]) -> int:
    if not gens:
        return 1
    return int(perm_action.permutation_group(D1, gens).group.order())


def residue_image(K: GeneratedSubgroup) -> ResidueImage:
    D1 = K.desc.at_level(1)
    gens = _residue_gens(K)
    out = ResidueImage(generators=gens, target_order=mg.group_order(D1))
    try:
        sc_gens: List[np.ndarray] = []
        try:
            sc_gens = mg.sc_image(D1).generators
        except (UnsupportedFamily, TooLarge) as exc:
            log.debug("no derived subgroup check for %s: %s", D1, exc)
        act = perm_action.permutation_group(D1, gens, extra=sc_gens)
        out.order = int(act.group.order()) if gens else 1
        out.full = out.order == out.target_order
        if sc_gens:
            out.contains_derived = perm_action.contains_all(act.group, act.extra) if gens else False
        if K.desc.family in TILDE_FAMILY:
            T1 = D1.with_family(TILDE_FAMILY[K.desc.family])
            tgens = list(T1.canon(np.array(gens))) if gens else []
            out.tilde_full = _image_order(T1, tgens) == mg.group_order(T1)
        elif K.desc.is_quotient:
            out.tilde_full = out.full
    except TooLarge as exc:
        log.warning("residue image of %s not computed: %s", K.desc, exc)
        out.too_large = True
    log.info("residue image of %s: order %s of %s", K.desc, out.order, out.target_order)
    return out


# =========================
# LAYER FILTRATION
# =========================
@dataclass
class LayerFiltration:
    desc: mg.GroupDescriptor
    residue: ResidueImage
    layers: Dict[int, np.ndarray]
    lie_dim: int
    exact: bool
    reps: Dict[int, List[np.ndarray]] = field(default_factory=dict)
    reason: str = ""

    @property
    def dims(self) -> Dict[int, int]:
        return {s: int(len(b)) for s, b in self.layers.items()}

    @property
    def kernel_order(self) -> int:
        return self.desc.ring.p ** sum(self.dims.values())

    @property
    def order(self) -> Optional[int]:
        if self.residue.order is None:
            return None
        return self.residue.order * self.kernel_order

    def is_full(self, upto: Optional[int] = None) -> bool:
        return all(d == self.lie_dim for s, d in self.dims.items() if upto is None or s < upto)

    def first_missing(self) -> Optional[int]:
        for s in sorted(self.layers):
            if len(self.layers[s]) < self.lie_dim:
                return s
        return None


class _Sifter:
    """Layered basis of K cap Ker(G(W_N) -> G(k)) closed under p-th powers, commutators and conjugation."""

    def __init__(self, D: mg.GroupDescriptor, gens: Sequence[np.ndarray]):
        self.D = D
        self.ring = D.ring
        self.p = D.ring.p
        self.N = D.level
        self.lie_dim = len(ll.lie_fp_basis(D))
        self.rows: Dict[int, List[np.ndarray]] = {s: [] for s in range(1, self.N)}
        self.pivots: Dict[int, List[int]] = {s: [] for s in range(1, self.N)}
        self.reps: Dict[int, List[np.ndarray]] = {s: [] for s in range(1, self.N)}
        self.inv_pows: Dict[int, List[List[np.ndarray]]] = {s: [] for s in range(1, self.N)}
        self.gens = [np.asarray(g) for g in gens]
        self.gens_inv = [self.canon(rm.inverse(self.ring, g)) for g in self.gens]
        self.queue: deque = deque()
        self.sifted = 0

    def canon(self, M: np.ndarray) -> np.ndarray:
        return self.D.canon(np.asarray(M)[None])[0]

    def mul(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        return self.canon(rm.mat_mul(self.ring, A, B))

    def full(self) -> bool:
        return all(len(self.rows[s]) == self.lie_dim for s in self.rows)

    def _add(self, s: int, x: np.ndarray, v: np.ndarray) -> None:
        piv = int(np.flatnonzero(v)[0])
        a = pow(int(v[piv].item()), -1, self.p)
        rep = self.canon(rm.mat_pow(self.ring, x, a)) if a != 1 else x
        inv = self.canon(rm.inverse(self.ring, rep))
        pows = [inv]
        for _ in range(self.p - 2):
            pows.append(self.mul(pows[-1], inv))
        self.rows[s].append((a * v) % self.p)
        self.pivots[s].append(piv)
        self.reps[s].append(rep)
        self.inv_pows[s].append(pows)
        self.queue.append(self.canon(rm.mat_pow(self.ring, rep, self.p)))
        for t, others in self.reps.items():
            if s + t >= self.N:
                continue
            for other in others:
                if other is not rep:
                    self.queue.append(ll.commutator(self.D, rep, other))
        for g, gi in zip(self.gens, self.gens_inv):
            self.queue.append(self.mul(self.mul(gi, rep), g))
        log.debug("layer %d: basis grows to %d", s, len(self.rows[s]))

    def sift(self, x: np.ndarray) -> Optional[int]:
        """Reduce x against the basis; returns the layer that grew, if any."""
        self.sifted += 1
        while True:
            lead = ll.leading_layer(self.D, x)
            if lead is None:
                return None
            s, v = lead
            if s == 0:
                raise ValueError("sifted element is not in the first congruence kernel")
            v = ll.flatten(v)
            for row, piv, pows in zip(self.rows[s], self.pivots[s], self.inv_pows[s]):
                c = int(v[piv].item()) % self.p
                if c:
                    v = (v - c * row) % self.p
                    x = self.mul(x, pows[c - 1])
            if np.any(v):
                self._add(s, x, v)
                return s

    def push(self, x: np.ndarray) -> None:
        self.queue.append(x)

    def saturate(self) -> None:
        while self.queue:
            if self.full():
                self.queue.clear()
                return
            self.sift(self.queue.popleft())

    def layers(self) -> Dict[int, np.ndarray]:
        n = self.D.size * self.D.size * self.ring.r
        out = {}
        for s in self.rows:
            eb = EchelonBasis(self.p, n)
            eb.extend(self.rows[s])
            out[s] = eb.matrix()
        return out


def _residue_keys(D1: mg.GroupDescriptor, Ms: np.ndarray) -> List[Hashable]:
    red = (np.asarray(Ms) % D1.ring.characteristic).astype(rm.dtype_for(D1.ring, D1.size))
    red = D1.canon(red)
    return [row.tobytes() for row in np.ascontiguousarray(red.reshape(len(red), -1).astype(np.int64))]


def layer_filtration(K: GeneratedSubgroup, word_budget: int = WORD_BUDGET,
                     node_budget: int = SCHREIER_NODE_BUDGET) -> LayerFiltration:
    """Layers of K via Schreier generators over a BFS transversal of the residue image."""
    D = K.desc
    if D.level < 2:
        raise BadLevel("layers need level at least 2")
    residue = residue_image(K)
    D1 = D.at_level(1)
    dtype = rm.dtype_for(D.ring, D.size)
    gens = [np.asarray(g).astype(dtype) for g in K.generators]
    sifter = _Sifter(D, gens)
    for g in gens:
        lead = ll.leading_layer(D, g)
        if lead is not None and lead[0] > 0:
            sifter.push(g)
    sifter.saturate()

    ident = sifter.canon(rm.identity(D.ring, D.size).astype(dtype))
    index: Dict[Hashable, int] = {_residue_keys(D1, ident[None])[0]: 0}
    lifts = [ident]
    lifts_inv = [ident]
    frontier = [0]
    depth = 0
    complete = not gens
    truncated = ""
    while frontier and not sifter.full():
        if depth >= word_budget:
            truncated = f"word budget {word_budget} reached"
            break
        depth += 1
        T = np.array([lifts[i] for i in frontier])
        Tinv = np.array([lifts_inv[i] for i in frontier])
        nxt: List[int] = []
        for g, gi in zip(sifter.gens, sifter.gens_inv):
            Y = D.canon(rm.mat_mul_batch(D.ring, T, g))
            keys = _residue_keys(D1, Y)
            Yinv = rm.left_mul_batch(D.ring, gi, Tinv)
            for y, yinv, key in zip(Y, Yinv, keys):
                j = index.get(key)
                if j is None:
                    if len(index) >= node_budget:
                        truncated = f"node budget {node_budget} reached"
                        continue
                    index[key] = len(lifts)
                    lifts.append(y)
                    lifts_inv.append(sifter.canon(yinv))
                    nxt.append(len(lifts) - 1)
                else:
                    sifter.push(sifter.mul(y, lifts_inv[j]))
        sifter.saturate()
        frontier = nxt
        if truncated:
            break
    if not frontier and not truncated:
        complete = True
    if residue.order is not None and len(index) != residue.order and complete:
        log.warning("transversal has %d cosets, residue order is %s", len(index), residue.order)
    full = sifter.full()
    exact = complete or full
    if exact:
        reason = "transversal complete" if complete else "all layers full"
    else:
        reason = truncated or "transversal incomplete"
    filtration = LayerFiltration(desc=D, residue=residue, layers=sifter.layers(), lie_dim=sifter.lie_dim,
                                 exact=exact, reps={s: list(r) for s, r in sifter.reps.items()}, reason=reason)
    log.info("layer filtration of %s: dims %s of %d, exact=%s (%s), %d cosets, %d sifts",
             D, filtration.dims, sifter.lie_dim, exact, reason, len(index), sifter.sifted)
    return filtration


# =========================
# VERDICTS
# =========================
@dataclass
class SurjectivityVerdict:
    outcome: str
    target: str
    mode: str
    trail: List[Dict] = field(default_factory=list)
    witness_level: Optional[int] = None
    missing: Optional[List[List[int]]] = None
    reason: str = ""
    layer_dims: Dict[int, int] = field(default_factory=dict)
    index: Dict[str, int] = field(default_factory=dict)
    hypotheses: Tuple[str, ...] = ()
    exception_checks: List[Dict] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return OUTCOME_EXIT[self.outcome]

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "target": self.target,
            "mode": self.mode,
            "trail": self.trail,
            "witness_level": self.witness_level,
            "missing": self.missing,
            "reason": self.reason,
            "layer_dims": {str(s): d for s, d in self.layer_dims.items()},
            "index": self.index,
            "hypotheses": list(self.hypotheses),
            "exception_checks": self.exception_checks,
        }


def _threshold(p: int) -> int:
    return 2 if p >= 3 else 3


def _missing(filtration: LayerFiltration, s: int) -> List[List[int]]:
    D = filtration.desc
    n = D.size * D.size * D.ring.r
    sub = EchelonBasis(D.ring.p, n)
    sub.extend(list(filtration.layers[s]))
    ambient = EchelonBasis(D.ring.p, n)
    ambient.extend([ll.flatten(X) for X in ll.lie_fp_basis(D)])
    return [[int(c) for c in row] for row in complement_basis(sub, ambient)]


def _decide_full(K: GeneratedSubgroup, word_budget: int, node_budget: int) -> SurjectivityVerdict:
    p = K.desc.ring.p
    t = _threshold(p)
    if K.level < t:
        raise BadLevel(f"lifting criterion needs level {t} for p={p}, have {K.level}")
    verdict = SurjectivityVerdict("Inconclusive", str(K.desc), FULL, hypotheses=K.hypotheses)
    residue = residue_image(K)
    if residue.too_large:
        verdict.reason = "residue image too large to certify"
        return verdict
    if not residue.full:
        verdict.outcome = "NotSurjective"
        verdict.witness_level = 0
        verdict.reason = f"residue image has order {residue.order} of {residue.target_order}"
        return verdict
    filtration = layer_filtration(K.at_level(t), word_budget, node_budget)
    verdict.layer_dims = filtration.dims
    verdict.trail.append({"key": "2.2.1a", "conditions": {"residue_full": True, "threshold_level": t,
                                                          "layers_full": filtration.is_full()}})
    if filtration.is_full():
        verdict.outcome = "FullGroup"
        verdict.reason = f"residue image full and layers 1..{t - 1} full"
        return verdict
    s = filtration.first_missing()
    if not filtration.exact:
        verdict.reason = f"layer {s} incomplete and filtration not exact ({filtration.reason})"
        return verdict
    verdict.outcome = "NotSurjective"
    verdict.witness_level = s
    verdict.missing = _missing(filtration, s)
    verdict.reason = f"layer {s} has dimension {filtration.dims[s]} of {filtration.lie_dim}"
    return verdict


def _is_k1_subspace(filtration: LayerFiltration, s: int) -> bool:
    D = filtration.desc
    k = D.ring.at_level(1)
    if k.r == 1:
        return True
    n = D.size * D.size * k.r
    eb = EchelonBasis(k.p, n)
    eb.extend(list(filtration.layers[s]))
    t = gen_t(k)
    for row in filtration.layers[s]:
        X = ll.unflatten(D, row)
        if not eb.contains(ll.flatten(rm.scalar_mul(k, t, X))):
            return False
    return True


def _decide_tilde(K: GeneratedSubgroup, report: Optional[ConditionReport], word_budget: int,
                  node_budget: int) -> SurjectivityVerdict:
    D = K.desc
    if HYP_AB_FULL not in K.hypotheses:
        raise HypothesisMissing(f"mode TILDE needs the asserted hypothesis {HYP_AB_FULL!r}")
    if report is None:
        raise HypothesisMissing("mode TILDE needs a criteria report for the 2.4 conditions")
    if D.family not in TILDE_FAMILY:
        raise UnsupportedFamily(f"no quotient by the central torus implemented for {D.family}")
    if report.q != D.ring.q:
        raise HypothesisMissing(f"criteria report is for q={report.q}, group lives over q={D.ring.q}")
    tilde = TILDE_FAMILY[D.family]
    verdict = SurjectivityVerdict("Inconclusive", str(D.with_family(tilde)), TILDE, hypotheses=K.hypotheses)
    verdict.exception_checks.append({"list": "2.2.4", "condition": "2.4(ii)",
                                     "passed": report.conditions.get("2.4(ii)"),
                                     "evidence": report.evidence.get("2.4(ii)", "")})
    residue = residue_image(K)
    if residue.too_large:
        verdict.reason = "residue image too large to certify"
        return verdict
    if not residue.tilde_full:
        verdict.outcome = "NotSurjective"
        verdict.witness_level = 0
        verdict.reason = f"residue image does not map onto {tilde}(k)"
        return verdict
    key = report.conclusion
    if key is None:
        verdict.reason = f"no 2.4.1/2.4.2 variant applies; failed: {', '.join(report.failed()) or 'none'}"
        verdict.trail.append({"key": "2.4", "conditions": dict(report.conditions)})
        return verdict
    verdict.trail.append({"key": key.replace("(", "").replace(")", ""), "conditions": dict(report.conditions),
                          "clause": report.clause})

    Kt = K.in_family(tilde)
    if D.ring.p == 2 and report.clause == "vb":
        if K.level < 3:
            raise BadLevel("the (vb) subspace check needs level 3")
        k3 = layer_filtration(Kt.at_level(3), word_budget, node_budget)
        if not _is_k1_subspace(k3, 2):
            verdict.reason = "layer 2 of the image in level 3 is not a k_1-subspace"
            return verdict
        verdict.trail.append({"key": "2.4.1b(vb)", "conditions": {"k1_subspace": True}})

    # finite-level cross-check of the conclusion
    t = min(K.level, _threshold(D.ring.p))
    if t >= 2:
        check = layer_filtration(Kt.at_level(t), word_budget, node_budget)
        verdict.layer_dims = check.dims
        if check.exact and not check.is_full():
            verdict.reason = "layer data contradicts the asserted hypotheses"
            return verdict
    verdict.outcome = "FullOnQuotient"
    verdict.reason = f"{key} applies; residue maps onto {tilde}(k)"
    return verdict


def _decide_normal_derived(K: GeneratedSubgroup) -> SurjectivityVerdict:
    D = K.desc
    if D.family not in DERIVED_FAMILY:
        raise UnsupportedFamily(f"no derived subgroup implemented for {D.family}")
    F = D.with_family(DERIVED_FAMILY[D.family])
    datum = datum_for(F.family, F.size)
    report = check_2_3_exceptions(datum, D.ring.q)
    verdict = SurjectivityVerdict("Inconclusive", str(F), NORMAL_DERIVED, hypotheses=K.hypotheses)
    verdict.exception_checks.append({"list": "2.3", "q": D.ring.q, "passed": report.conditions["2.3(list)"],
                                     "evidence": report.evidence["2.3(list)"]})
    hits = exception_hits("2.3", [datum], D.ring.q)
    if hits:
        raise ExceptionListHit(f"{hits[0]} at q={D.ring.q} is excluded from the normal subgroup criterion",
                               factor=hits[0])
    if not report.conditions["2.3(c)"]:
        verdict.reason = report.evidence["2.3(c)"]
        return verdict
    F1 = F.at_level(1)
    gens = _residue_gens(K)
    f_gens = [np.asarray(g).astype(rm.dtype_for(F1.ring, F1.size)) for g in mg.standard_generators(F1)]
    act = perm_action.permutation_group(D.at_level(1), gens, extra=f_gens)
    if gens and perm_action.contains_all(act.group, act.extra):
        verdict.outcome = "NormalSubgroupContained"
        verdict.reason = f"{F.family}(k) lies in the residue image"
        verdict.trail.append({"key": "2.3", "conditions": {"c_coprime": True, "F(k)_in_K1": True}})
        return verdict
    from_f = perm_action.subgroup_of(act, act.extra)
    derived = from_f.derived_subgroup()
    if gens and all(act.group.contains(x) for x in derived.generators):
        verdict.outcome = "NormalSubgroupContained"
        verdict.target = f"Ker({F} -> {F1})"
        verdict.reason = f"{F.family}(k)' lies in the residue image"
        verdict.trail.append({"key": "2.3", "conditions": {"c_coprime": True, "F(k)'_in_K1": True}})
        verdict.index["cokernel_divides"] = datum.o_G
        return verdict
    verdict.outcome = "NotSurjective"
    verdict.witness_level = 0
    verdict.reason = f"residue image misses {F.family}(k)'"
    return verdict


def _decide_thm_4_1(K: GeneratedSubgroup) -> SurjectivityVerdict:
    D = K.desc
    if D.family != "GSp" or D.ring.r != 1:
        raise UnsupportedFamily("the symplectic criterion needs GSp over Z/p^N")
    d, p = D.size // 2, D.ring.p
    if (p == 2 and d < 3) or (p == 3 and d < 2):
        raise HypothesisMissing(f"the symplectic criterion needs d >= {3 if p == 2 else 2} for p={p}, got d={d}")
    if HYP_DISJOINT not in K.hypotheses:
        raise HypothesisMissing(f"mode THM_4_1 needs the asserted hypothesis {HYP_DISJOINT!r}")
    verdict = SurjectivityVerdict("Inconclusive", str(D), THM_4_1, hypotheses=K.hypotheses)
    residue = residue_image(K)
    if residue.too_large or residue.tilde_full is None:
        verdict.reason = "residue image too large to certify"
        return verdict
    verdict.trail.append({"key": "4.1", "conditions": {"onto_PGSp": bool(residue.tilde_full)}})
    if residue.tilde_full:
        verdict.outcome = "FullGroup"
        verdict.reason = f"residue image maps onto PGSp_{2 * d}(F_{p})"
    else:
        verdict.outcome = "NotSurjective"
        verdict.witness_level = 0
        verdict.reason = f"residue image does not map onto PGSp_{2 * d}(F_{p})"
    return verdict


def decide_surjectivity(K: GeneratedSubgroup, mode: str = FULL, criteria_report: Optional[ConditionReport] = None,
                        word_budget: int = WORD_BUDGET, node_budget: int = SCHREIER_NODE_BUDGET) -> SurjectivityVerdict:
    if mode == FULL:
        verdict = _decide_full(K, word_budget, node_budget)
    elif mode == TILDE:
        verdict = _decide_tilde(K, criteria_report, word_budget, node_budget)
    elif mode == NORMAL_DERIVED:
        verdict = _decide_normal_derived(K)
    elif mode == THM_4_1:
        verdict = _decide_thm_4_1(K)
    else:
        raise UnsupportedFamily(f"unknown mode {mode!r}")
    log.info("%s verdict for %s: %s (%s)", mode, K.desc, verdict.outcome, verdict.reason)
    return verdict


# =========================
# INDEX DECOMPOSITION
# =========================
@dataclass
class IndexDecomposition:
    total_index: int
    center_split: Tuple[int, int]
    derived_split: Tuple[int, int]
    order: int
    group_order: int

    def to_dict(self) -> dict:
        return {
            "total_index": self.total_index,
            "center_split": list(self.center_split),
            "derived_split": list(self.derived_split),
            "order": self.order,
            "group_order": self.group_order,
        }


def _exact_order(K: GeneratedSubgroup, word_budget: int, node_budget: int) -> int:
    if K.level == 1:
        res = residue_image(K)
        if res.too_large:
            raise TooLarge(f"residue image of {K.desc} too large")
        return res.order
    filtration = layer_filtration(K, word_budget, node_budget)
    if not filtration.exact or filtration.order is None:
        raise NotExactFiltration(f"filtration of {K.desc} is not exact ({filtration.reason})")
    return filtration.order


def _abelian_value(D: mg.GroupDescriptor, M: np.ndarray):
    if D.family == "GL":
        return rm.det(D.ring, M)
    return mg.membership_and_multiplier(M, D).multiplier


def _unit_subgroup_order(D: mg.GroupDescriptor, values) -> int:
    ring = D.ring
    seen = {v.coeffs for v in values}
    one_ = one(ring)
    group = {one_.coeffs: one_}
    frontier = [one_]
    while frontier:
        nxt = []
        for x in frontier:
            for v in values:
                y = x * v
                if y.coeffs not in group:
                    group[y.coeffs] = y
                    nxt.append(y)
        frontier = nxt
    log.debug("abelianization image generated by %d values has order %d", len(seen), len(group))
    return len(group)


def index_decomposition(K: GeneratedSubgroup, word_budget: int = WORD_BUDGET,
                        node_budget: int = SCHREIER_NODE_BUDGET) -> IndexDecomposition:
    """Finite-level index [G:K] split along the central torus and along the derived group."""
    D = K.desc
    if D.family not in TILDE_FAMILY:
        raise UnsupportedFamily(f"index decomposition needs GL, GSp or GSO, got {D.family}")
    order_K = _exact_order(K, word_budget, node_budget)
    order_G = mg.group_order(D)
    total = order_G // order_K

    Kt = K.in_family(TILDE_FAMILY[D.family])
    order_Kt = _exact_order(Kt, word_budget, node_budget)
    order_Gt = mg.group_order(Kt.desc)
    torus = D.ring.unit_count
    center_part = order_K // order_Kt
    center_split = (torus // center_part, order_Gt // order_Kt)

    values = [_abelian_value(D, g) for g in K.generators]
    image = _unit_subgroup_order(D, values)
    F = D.with_family(DERIVED_FAMILY[D.family])
    derived_part = order_K // image
    derived_split = (mg.group_order(F) // derived_part, torus // image)
    out = IndexDecomposition(total, center_split, derived_split, order_K, order_G)
    log.info("index decomposition for %s: %s", D, out.to_dict())
    return out


# =========================
# SAMPLES / SHAPES
# =========================
def congruence_kernel_sample(D: mg.GroupDescriptor, s: int, rng: Optional[np.random.Generator] = None,
                             count: int = 8) -> List[np.ndarray]:
    """Random elements of Ker(G(W_N) -> G(W_s)) built from the layer basis of the full group."""
    if s < 1 or s >= D.level:
        raise BadLevel(f"kernel level {s} must lie in 1..{D.level - 1}")
    rng = rng if rng is not None else np.random.default_rng(SEED)
    K = GeneratedSubgroup(D, mg.standard_generators(D))
    filtration = layer_filtration(K)
    pool = [r for t, reps in filtration.reps.items() if t >= s for r in reps]
    ident = D.canon(rm.identity(D.ring, D.size)[None])[0]
    out = []
    for _ in range(count):
        x = ident
        for r in pool:
            e = int(rng.integers(0, D.ring.p))
            if e:
                x = D.mul(x, D.canon(rm.mat_pow(D.ring, r, e)[None])[0])
        out.append(x)
    return out


def check_3_3_2_shape(filtration: LayerFiltration) -> Dict[str, object]:
    """Every layer of a subgroup of PGL_2 over Z/3^N is 0 or all of pgl_2."""
    D = filtration.desc
    if D.family != "PGL" or D.size != 2 or D.ring.p != 3:
        raise UnsupportedFamily(f"the layer-shape property is stated for PGL_2 over p=3, got {D}")
    dims = filtration.dims
    ok = all(d in (0, filtration.lie_dim) for d in dims.values())
    return {"holds": ok, "dims": dims, "index_exponents": {s: filtration.lie_dim - d for s, d in dims.items()}}
