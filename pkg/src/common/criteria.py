import math
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import pandas as pd
import sympy

from src.common import matrix_groups as mg
from src.common import ring_matrix as rm
from src.common.dynkin import DynkinDatum, adjoint_label, datum_for, parse_datum, tilde_datum
from src.common.errors import (
    IncompleteDatum,
    NonPrime,
    NotInstantiable,
    TooLarge,
    UnknownFamily,
    UnsupportedFamily,
)
from src.common.galois_ring import RingElement, construct_ring, elements, lift, one, units
from src.common.lie_layers import lie_quotient_dim

log = logging.getLogger(__name__)

DATA_DIR = Path(__file__).resolve().parents[2] / "data"

# order in which applicable conclusions are preferred
CONCLUSIONS = ("2.4.1(a)", "2.4.1(b)", "2.4.2(a)", "2.4.2(b)")


# =========================
# REPORTS
# =========================
@dataclass
class TorusFactor:
    """One factor h_i: T_i -> T_i' of the isogeny Z^0(G) -> G^ab, acting as x -> x^degree."""

    rank: int
    degree: int
    split: bool = True
    p_power: Optional[bool] = None  # defaults to p | degree


@dataclass
class IsogenyDecomposition:
    tori: List[TorusFactor]
    p: int
    ab_rank: Optional[int] = None

    def __post_init__(self):
        for t in self.tori:
            if t.rank < 1 or t.degree < 1:
                raise IncompleteDatum(f"torus factor needs positive rank and degree, got {t}")
            if t.p_power is None:
                t.p_power = t.degree % self.p == 0
        if self.ab_rank is None:
            self.ab_rank = sum(t.rank for t in self.tori)
        elif self.ab_rank != sum(t.rank for t in self.tori):
            raise IncompleteDatum(f"torus ranks sum to {sum(t.rank for t in self.tori)}, "
                                  f"target abelianization has rank {self.ab_rank}")

    @property
    def I_p(self) -> List[int]:
        return [i for i, t in enumerate(self.tori) if t.p_power]

    def others_prime_to_p(self) -> bool:
        return all(t.degree % self.p for i, t in enumerate(self.tori) if i not in self.I_p)


@dataclass
class ConditionReport:
    subject: str
    q: int
    conditions: Dict[str, Optional[bool]] = field(default_factory=dict)
    evidence: Dict[str, str] = field(default_factory=dict)
    applicable: Dict[str, bool] = field(default_factory=dict)
    bounds: Dict[str, int] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)
    clause: Optional[str] = None

    def set(self, key: str, value: Optional[bool], evidence: str) -> None:
        self.conditions[key] = value
        self.evidence[key] = evidence

    def failed(self) -> List[str]:
        return [k for k, v in self.conditions.items() if v is False]

    @property
    def conclusion(self) -> Optional[str]:
        for key in CONCLUSIONS:
            if self.applicable.get(key):
                return key
        for key, ok in self.applicable.items():
            if ok:
                return key
        return None

    def to_dict(self) -> dict:
        return {
            "subject": self.subject,
            "q": self.q,
            "conditions": dict(self.conditions),
            "evidence": dict(self.evidence),
            "applicable": dict(self.applicable),
            "bounds": dict(self.bounds),
            "notes": list(self.notes),
            "clause": self.clause,
            "conclusion": self.conclusion,
        }


# =========================
# EXCEPTION LISTS
# =========================
@lru_cache(maxsize=None)
def exception_lists() -> pd.DataFrame:
    return pd.read_csv(DATA_DIR / "exception_lists.csv", dtype={"list": str, "key": str, "label": str})


def listed(list_name: str, value: int, key: str = "q") -> List[str]:
    df = exception_lists()
    rows = df[(df["list"] == list_name) & (df["key"] == key) & (df["value"] == value)]
    return list(rows["label"])


def exception_hits(list_name: str, data: Sequence[DynkinDatum], value: int, key: str = "q") -> List[str]:
    df = exception_lists()
    rows = df[(df["list"] == list_name) & (df["key"] == key) & (df["value"] == value)]
    entries = set(zip(rows["label"], rows["k1"].astype(int)))
    hits = []
    for d in data:
        label = d.adjoint_label
        if d.dynkin_type == "G" and not d.split:
            continue
        if (label, d.k1_degree) in entries:
            hits.append(label)
    return hits


def prime_of(q: int) -> int:
    factors = sympy.factorint(q)
    if len(factors) != 1:
        raise NonPrime(f"{q} is not a prime power")
    return next(iter(factors))


def _as_list(data: Union[DynkinDatum, Sequence[DynkinDatum]]) -> List[DynkinDatum]:
    if isinstance(data, DynkinDatum):
        return [data]
    data = list(data)
    if not data:
        raise IncompleteDatum("no simple factors given")
    return data


def _c_of(data: Sequence[DynkinDatum]) -> int:
    out = 1
    for d in data:
        out *= d.c_G
    return out


def _require(data: Sequence[DynkinDatum]) -> None:
    for d in data:
        d.require("dynkin_type", "rank", "o_G", "o_Gsc")


# =========================
# THM 2.2.5 / PROP 2.3
# =========================
def check_2_2_5(data: Union[DynkinDatum, Sequence[DynkinDatum]], q: int) -> ConditionReport:
    data = _as_list(data)
    _require(data)
    p = prime_of(q)
    report = ConditionReport(" x ".join(d.label for d in data), q)
    c = _c_of(data)
    report.set("2.2.5(i)", math.gcd(p, c) == 1, f"gcd(p={p}, c(G)={c}) = {math.gcd(p, c)}")
    hits = exception_hits("2.2.5", data, q)
    report.set("2.2.5(ii)", not hits,
               f"listed factor(s) at q={q}: {', '.join(hits)}" if hits
               else f"no simple adjoint factor among {listed('2.2.5', q) or 'the (empty) list'} at q={q}")
    report.applicable["2.2.5"] = report.conditions["2.2.5(i)"] and report.conditions["2.2.5(ii)"]
    return report


def check_2_3_exceptions(data: Union[DynkinDatum, Sequence[DynkinDatum]], q: int) -> ConditionReport:
    data = _as_list(data)
    _require(data)
    p = prime_of(q)
    report = ConditionReport(" x ".join(d.label for d in data), q)
    c = _c_of(data)
    report.set("2.3(c)", math.gcd(p, c) == 1, f"gcd(p={p}, c(F)={c}) = {math.gcd(p, c)}")
    hits = exception_hits("2.3", data, q)
    report.set("2.3(list)", not hits,
               f"listed factor(s) at q={q}: {', '.join(hits)}" if hits else f"no listed factor at q={q}")
    if "PGSp_4" in hits:
        report.notes.append("PGSp_4 at q=2 is excluded here although 2.2.5(ii) does not list it")
    report.applicable["2.3"] = report.conditions["2.3(c)"] and report.conditions["2.3(list)"]
    return report


# =========================
# SECTION 2.4 CONDITIONS
# =========================
def _size_of(datum: DynkinDatum) -> int:
    t, n = datum.dynkin_type, datum.rank
    if t == "A":
        return n + 1
    if t == "B":
        return 2 * n + 1
    if t in ("C", "D"):
        return 2 * n
    raise IncompleteDatum(f"{datum.label}: no matrix size for type {t}")


def abelian_part(datum: DynkinDatum, q: int) -> int:
    """Product of the cyclic composition factors of G~(k), i.e. |Z(G^sc)(k)|."""
    datum.require("dynkin_type", "rank")
    t, n = datum.dynkin_type, datum.rank
    qq = q ** datum.k1_degree
    if t == "A":
        return math.gcd(n + 1, qq - 1) if datum.split else math.gcd(n + 1, qq + 1)
    if t in ("B", "C"):
        return math.gcd(2, qq - 1)
    if t == "D":
        eps = 1 if datum.split else -1
        return math.gcd(4, qq ** n - eps)
    if t == "G":
        return 1
    raise IncompleteDatum(f"{datum.label}: abelian part unknown for type {t}")


def lie_quotient_table(datum: DynkinDatum, p: int) -> Optional[int]:
    """dim_k(Lie/[Lie, Lie]) of G~_k from the classification; None when not tabulated."""
    t, n = datum.dynkin_type, datum.rank
    if t == "A":
        # SL_{n+1}/mu_m: the quotient is (X^v / Q^v) (x) k = Z/m (x) k once n >= 2
        if datum.adjoint:
            return datum.k1_degree if (n + 1) % p == 0 else 0
        if not datum.o_G:
            return None
        m = (n + 1) // datum.o_G
        if n == 1 and p == 2 and m == 1:
            return 2 * datum.k1_degree
        return datum.k1_degree if m % p == 0 else 0
    if t in ("B", "C"):
        return datum.k1_degree if p == 2 else 0
    if t == "D":
        if p != 2:
            return 0
        if datum.adjoint:
            return datum.k1_degree if n % 2 else 2 * datum.k1_degree
        if datum.o_G == 2:
            return datum.k1_degree
        return None
    if t == "G":
        return 0
    return None


def lie_quotient_computed(datum: DynkinDatum, q: int) -> Optional[int]:
    """Rank computation on the realized Lie algebra of G~ when the family is instantiable over k."""
    if not datum.instantiable or datum.k1_degree != 1 or not datum.adjoint:
        return None
    p = prime_of(q)
    r = round(math.log(q, p))
    try:
        D = mg.make_group(datum.instantiable, _size_of(datum), construct_ring(p, r, 1))
        return lie_quotient_dim(D)
    except (NotInstantiable, UnknownFamily, UnsupportedFamily, TooLarge) as exc:
        log.debug("lie quotient of %s not computed: %s", datum.label, exc)
        return None


def unit_power_image(p: int, r: int, degree: int) -> int:
    """|{x^degree : x in W_3(F_{p^r})^*}| via W_3^* = Teichmuller units x (1 + pW_3)."""
    ring = construct_ring(p, r, 3)
    q = p ** r
    teich = (q - 1) // math.gcd(degree, q - 1)
    pe = RingElement.of(ring, p)
    principal = {((one(ring) + pe * lift(a, ring)) ** degree).coeffs for a in elements(ring.at_level(2))}
    return teich * len(principal)


def _ab_points_w2(iso: IsogenyDecomposition, q: int) -> int:
    out = 1
    for t in iso.tori:
        if not t.split:
            raise IncompleteDatum("|G^ab(W_2(k))| needs split tori")
        out *= ((q - 1) * q) ** t.rank
    return out


def _vb_holds(datum: DynkinDatum, q: int) -> bool:
    label = adjoint_label(datum.dynkin_type, datum.rank, datum.split)
    pgu_even = label.startswith("PGU_") and int(label.split("_")[1]) % 2 == 0
    return q ** datum.k1_degree >= 4 and (datum.split or pgu_even)


def _i_prime(datum: DynkinDatum, p: int) -> Optional[str]:
    t, n = datum.dynkin_type, datum.rank
    if t == "A" and datum.o_G and (n + 1) % (p * p) == 0:
        m = (n + 1) // datum.o_G
        if sympy.multiplicity(p, m) == 1:
            return f"A_{n}: SL_{n + 1}/mu_{p} -> SL_{n + 1}/mu_{m} has degree {m // p}, prime to p"
    if t == "D" and p == 2 and n >= 3 and not datum.adjoint and datum.o_G == 2:
        return f"D_{n}: G~ is Spin/mu_2"
    return None


def check_2_4(datum: DynkinDatum, iso: IsogenyDecomposition, q: int,
              lie_quotient: Optional[int] = None, compute: bool = True) -> ConditionReport:
    """Conditions (i)-(v) for G~ = datum and the isogeny Z^0(G) -> G^ab described by iso."""
    _require([datum])
    p = prime_of(q)
    if p != iso.p:
        raise IncompleteDatum(f"isogeny data is for p={iso.p}, residue field has q={q}")
    r = round(math.log(q, p))
    report = ConditionReport(datum.label, q)

    # (i)
    o = datum.o_G ** datum.k1_degree
    cond_i = math.gcd(p, o) == 1
    report.set("2.4(i)", cond_i, f"G~ simple of type {datum.dynkin_type}_{datum.rank}, gcd(p={p}, o(G~)={o}) = {math.gcd(p, o)}")

    # (ii) and its weaker variant
    hits = exception_hits("2.2.4", [datum], q)
    ab = abelian_part(datum, q)
    ab_w2 = _ab_points_w2(iso, q)
    if hits:
        msg = f"2.2.4 lists {', '.join(hits)} at q={q}; composition factors not certified"
        report.set("2.4(ii)", False, msg)
        report.set("2.4.2(ii')", False, msg)
    else:
        report.set("2.4(ii)", math.gcd(ab, ab_w2) == 1,
                   f"abelian part of G~(k) has order {ab}, |G^ab(W_2(k))| = {ab_w2}")
        report.set("2.4.2(ii')", math.gcd(ab, p) == 1, f"abelian part of G~(k) has order {ab}, p = {p}")

    # (iii)
    cond_iii = bool(iso.I_p) and iso.others_prime_to_p()
    report.set("2.4(iii)", cond_iii,
               f"I_p = {iso.I_p}, degrees {[t.degree for t in iso.tori]}")

    # (iv)
    table = lie_quotient_table(datum, p)
    computed = lie_quotient if lie_quotient is not None else (lie_quotient_computed(datum, q) if compute else None)
    if computed is not None and table is not None and computed != table:
        report.notes.append(f"computed dim Lie/[Lie,Lie] = {computed} differs from table value {table}")
    dim = computed if computed is not None else table
    sigma = sum(iso.tori[i].rank for i in iso.I_p)
    if dim is None:
        report.set("2.4(iv)", None, "dim Lie/[Lie,Lie] neither tabulated nor computable")
    else:
        source = "computed" if computed is not None else "table"
        report.set("2.4(iv)", sigma == dim, f"sum over I_p of ranks = {sigma}, dim Lie/[Lie,Lie] = {dim} ({source})")
        if 1 <= sigma < dim:
            report.bounds["2.4.4_exponent"] = r * (dim - sigma)
            report.notes.append(f"Lie/K has order at most p^{r * (dim - sigma)}")

    # (v)
    if p != 2:
        report.set("2.4(v)", True, "only needed for p = 2")
        v_ok = True
    else:
        va: Optional[bool]
        if any(not iso.tori[i].split for i in iso.I_p):
            va = None
            report.set("2.4(va)", None, "non-split torus in I_p")
        else:
            order = 1
            for i in iso.I_p:
                order *= unit_power_image(p, r, iso.tori[i].degree) ** iso.tori[i].rank
            va = order % 2 == 1
            report.set("2.4(va)", va, f"image in G^ab(W_3(k)) has order {order}")
        vb = _vb_holds(datum, q)
        report.set("2.4(vb)", vb, f"|k_1| = {q ** datum.k1_degree}, G~_1^ad = {adjoint_label(datum.dynkin_type, datum.rank, datum.split)}")
        v_ok = bool(va) or vb
        report.clause = "va" if va else ("vb" if vb else None)
        report.set("2.4(v)", v_ok if va is not None or vb else None, f"(va) = {va}, (vb) = {vb}")

    core = report.conditions["2.4(iii)"] and report.conditions["2.4(iv)"] is True and v_ok
    ii, ii_weak = report.conditions["2.4(ii)"], report.conditions["2.4.2(ii')"]
    report.applicable["2.4.1(a)"] = p > 2 and cond_i and ii and core
    report.applicable["2.4.1(b)"] = p == 2 and cond_i and ii and core
    report.applicable["2.4.2(a)"] = bool(cond_i and ii_weak and core)

    i_prime = _i_prime(datum, p)
    excluded = q == 2 and adjoint_label(datum.dynkin_type, datum.rank, datum.split) == "PGU_4"
    report.set("2.4.2(i')", bool(i_prime) and not excluded,
               "PGU_4 at q=2 is excluded" if excluded and i_prime else (i_prime or "type or isogeny condition fails"))
    report.applicable["2.4.2(b)"] = bool(i_prime and not excluded and ii and core)
    if report.applicable["2.4.2(a)"]:
        report.notes.append("2.4.2(a) also needs Ker(G^ab(W(k)) -> G^ab(k)) inside the image of K")
    log.info("2.4 conditions for %s at q=%d: failed=%s conclusion=%s", datum.label, q, report.failed(), report.conclusion)
    return report


# =========================
# CENTER
# =========================
DERIVED_FAMILY = {"GL": "SL", "SL": "SL", "GSp": "Sp", "Sp": "Sp", "GSO_plus": "SO_plus", "GSO_minus": "SO_minus",
                  "SO_plus": "SO_plus", "SO_minus": "SO_minus", "U": "SU", "SU": "SU"}


def _expected_center_points(D: mg.GroupDescriptor) -> int:
    fam, m, q = D.family, D.size, D.ring.q
    if fam == "SL":
        return math.gcd(m, q - 1)
    if fam == "Sp":
        return math.gcd(2, q - 1)
    if fam in ("SO_plus", "SO_minus"):
        return math.gcd(2, q - 1) if m % 2 == 0 else 1
    if fam == "SU":
        q0 = D.ring.p ** (D.ring.r // 2)
        return math.gcd(m, q0 + 1)
    raise UnknownFamily(f"no center formula for {fam}")


def center_points(D: mg.GroupDescriptor) -> int:
    """Scalar matrices of F(k) for the derived family F, by brute force over k^*."""
    F = mg.make_group(DERIVED_FAMILY[D.family], D.size, D.ring.at_level(1))
    count = 0
    for u in units(F.ring):
        M = rm.scalar_mul(F.ring, u, rm.identity(F.ring, F.size))
        if mg.membership_and_multiplier(M, F).member:
            count += 1
    return count


def center_invariants(obj: Union[DynkinDatum, mg.GroupDescriptor, str]) -> dict:
    if isinstance(obj, str):
        obj = parse_datum(obj)
    if isinstance(obj, DynkinDatum):
        obj.require("o_G", "o_Gsc")
        return {"label": obj.label, "o_G": obj.o_G, "o_Gsc": obj.o_Gsc, "c_G": obj.c_G}
    D = obj
    if D.family not in DERIVED_FAMILY:
        raise UnknownFamily(f"no derived group data for {D.family}")
    datum = datum_for(D.family, D.size, m=D.quotient_modulus)
    out = {"label": datum.label, "o_G": datum.o_G, "o_Gsc": datum.o_Gsc, "c_G": datum.c_G}
    points = center_points(D)
    expected = _expected_center_points(D.with_family(DERIVED_FAMILY[D.family]).at_level(1))
    out.update({"center_points": points, "center_points_expected": expected, "consistent": points == expected})
    if points != expected:
        log.warning("center of %s over F_%d: counted %d, expected %d", datum.label, D.ring.q, points, expected)
    return out


# =========================
# SECTION 3 CRITERIA
# =========================
def check_3_3_1(datum_der: DynkinDatum, datum_tilde: DynkinDatum, p: int,
                disjoint_asserted: bool = False, torus_rank: int = 1) -> ConditionReport:
    _require([datum_der, datum_tilde])
    report = ConditionReport(f"{datum_der.label} / {datum_tilde.label}", p)
    c_der, c_tilde = datum_der.c_G, datum_tilde.c_G
    report.set("3.3.1(c_der)", math.gcd(p, c_der) == 1, f"gcd(p={p}, c(H^der)={c_der})")
    report.set("3.3.1(T)", torus_rank == 1, f"T has rank {torus_rank}")
    hits = exception_hits("3.3.1", [datum_tilde], p, key="p")
    report.set("3.3.1(list)", not hits, f"listed factor(s) at p={p}: {', '.join(hits)}" if hits else "no listed factor")
    base = all(report.conditions[k] for k in ("3.3.1(c_der)", "3.3.1(T)", "3.3.1(list)"))
    tilde_ok = math.gcd(p, c_tilde) == 1
    report.set("3.3.1(c_tilde)", tilde_ok, f"gcd(p={p}, c(G~)={c_tilde})")
    report.set("3.3.1(disjoint)", disjoint_asserted, "asserted by caller" if disjoint_asserted else "not asserted")

    report.applicable["3.3.1(a)"] = base and tilde_ok
    type_ok = p != 2 or datum_tilde.dynkin_type == "A"
    report.applicable["3.3.1(b)"] = base and tilde_ok and disjoint_asserted and type_ok
    report.applicable["3.3.1(c)"] = base and disjoint_asserted
    report.applicable["3.3.1(d)"] = base and disjoint_asserted
    if report.applicable["3.3.1(a)"]:
        report.notes.append("full mod p image <=> K^T onto T(k) <=> index is a power of p")
    if report.applicable["3.3.1(b)"]:
        report.bounds["index_divides"] = 2 * (p - 1)
    if report.applicable["3.3.1(c)"]:
        o = datum_der.o_G ** datum_der.k1_degree
        report.bounds["index_divides_o"] = o
        if datum_der.simply_connected:
            report.notes.append("H^der simply connected: index is 1")
    if report.applicable["3.3.1(d)"]:
        report.notes.append("full mod p image gives index 1")
    return report


def check_3_4_1(datum: DynkinDatum, p: int) -> ConditionReport:
    """Admissible Dynkin types (of H^der) for the p = 2 criterion with a rank one torus."""
    _require([datum])
    report = ConditionReport(datum.label, p)
    t, n = datum.dynkin_type, datum.rank
    report.set("3.4.1(p)", p == 2, f"p = {p}")
    if t == "A":
        ok = n % 2 == 1 and n >= 3
        why = f"A_{n}" + ("" if ok else " is not A_{2n+1} with n >= 1")
        if ok and n == 3 and not datum.split:
            ok, why = False, "A_3 needs a split derived group"
    elif t in ("B", "C"):
        ok, why = n >= 3, f"{t}_{n}" + ("" if n >= 3 else " needs rank at least 3")
    elif t == "D":
        ok, why = n >= 4, f"D_{n}" + ("" if n >= 4 else " needs rank at least 4")
        if ok and n % 2 == 0 and not datum.simply_connected:
            ok, why = False, f"D_{n} needs a simply connected derived group"
    else:
        ok, why = False, f"type {t} not covered"
    report.set("3.4.1(type)", ok, why)
    admissible = report.conditions["3.4.1(p)"] and ok
    report.applicable["3.4.1.1(a)"] = admissible
    needs_odd = (t == "A" and (n + 1) % 4 == 0) or (t == "D" and n % 2 == 1 and n >= 5)
    c_odd = datum.c_G % 2 == 1
    if needs_odd:
        report.set("3.4.1.1(b)(c odd)", c_odd, f"c(H^der) = {datum.c_G}")
    report.applicable["3.4.1.1(b)"] = admissible and (c_odd or not needs_odd)
    return report


# =========================
# FIXTURES
# =========================
@lru_cache(maxsize=None)
def criteria_fixtures() -> pd.DataFrame:
    return pd.read_csv(DATA_DIR / "criteria_fixtures.csv", dtype={"expected": str, "clause": str, "m": str},
                       keep_default_na=False)


def fixture_inputs(name: str):
    df = criteria_fixtures()
    rows = df[df["fixture"] == name]
    if rows.empty:
        raise UnknownFamily(f"no criteria fixture named {name!r}")
    row = rows.iloc[0]
    q = int(row["q"])
    if row["m"]:
        datum = datum_for(row["family"], int(row["size"]), int(row["k1"]), int(row["m"]))
    else:
        datum = tilde_datum(row["family"], int(row["size"]), int(row["k1"]))
    iso = IsogenyDecomposition([TorusFactor(int(row["torus_rank"]), int(row["torus_degree"]),
                                            bool(int(row["torus_split"])))], prime_of(q))
    return datum, iso, q


def run_fixture(name: str, compute: bool = True) -> ConditionReport:
    datum, iso, q = fixture_inputs(name)
    report = check_2_4(datum, iso, q, compute=compute)
    report.subject = f"{name}: {report.subject}"
    return report
