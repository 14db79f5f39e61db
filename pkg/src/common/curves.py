import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np
import pandas as pd
import sympy
from sympy import Poly, Symbol
from sympy.polys.domains import ZZ
from sympy.polys.galoistools import gf_ddf_zassenhaus, gf_from_int_poly, gf_monic, gf_mul, gf_quo

from src.common.config import DISC_BITS, POINT_COUNT_BOUND, PRIME_BUDGET, THREADS
from src.common.errors import (
    BadDegree,
    BadPrime,
    BadReduction,
    BudgetExhausted,
    FactorizationTimeout,
    ParseError,
    TooLarge,
    ZeroDiscriminant,
)
from src.common.galois_ring import RingDescriptor, construct_ring, mult_table

log = logging.getLogger(__name__)

X = Symbol("x")
EXCLUDED_SQUAREFREE = (-1, 2, -2)
COUNT_DEGREES = (3, 5, 6, 7, 8)
VERDICT_DEGREES = (3, 6)

SURJECTIVE, NOT_SURJECTIVE, UNKNOWN = "Surjective", "NotSurjective", "Unknown"
SN_CERTIFIED, NOT_SN, SN_UNKNOWN = "S_n certified", "not S_n", "unknown"


# =========================
# INPUT
# =========================
@dataclass(frozen=True)
class HyperellipticInput:
    """y^2 = f(x); coefficients of f in descending order."""

    coeffs: Tuple[int, ...]

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def genus(self) -> int:
        return (self.degree - 1) // 2

    @property
    def lead(self) -> int:
        return self.coeffs[0]

    @property
    def poly(self) -> Poly:
        return Poly(list(self.coeffs), X, domain=ZZ)

    def __str__(self) -> str:
        return str(self.poly.as_expr()).replace("**", "^")


def make_input(coeffs: Sequence[int]) -> HyperellipticInput:
    vals = [int(c) for c in coeffs]
    while vals and vals[0] == 0:
        vals.pop(0)
    if len(vals) < 3:
        raise BadDegree(f"f must have degree at least 2, got {vals}")
    f = HyperellipticInput(tuple(vals))
    if disc(f) == 0:
        raise ZeroDiscriminant(f"{f} has a repeated root")
    return f


def parse_polynomial(text: str) -> HyperellipticInput:
    """'x^6-x-1' or a descending coefficient list '1,0,0,0,0,-1,-1'."""
    raw = text.strip()
    if raw and all(ch in "0123456789-+, []" for ch in raw):
        parts = [p for p in raw.strip("[]").replace(",", " ").split() if p]
        try:
            return make_input([int(p) for p in parts])
        except ValueError as exc:
            raise ParseError(f"bad coefficient list {text!r}") from exc
    try:
        expr = sympy.sympify(raw.replace("^", "**"), locals={"x": X})
        poly = Poly(expr, X)
    except (sympy.SympifyError, sympy.PolynomialError, TypeError) as exc:
        raise ParseError(f"bad polynomial {text!r}") from exc
    coeffs = poly.all_coeffs()
    if any(not c.is_Integer for c in coeffs):
        raise ParseError(f"{text!r} does not have integer coefficients")
    return make_input([int(c) for c in coeffs])


# =========================
# DISCRIMINANT
# =========================
@dataclass
class DiscriminantData:
    disc: int
    squarefree_part: int
    factors: Dict[int, int]

    def to_dict(self) -> dict:
        return {"disc": self.disc, "squarefree_part": self.squarefree_part,
                "factors": {str(p): e for p, e in sorted(self.factors.items())}}


@lru_cache(maxsize=1024)
def disc(f: HyperellipticInput) -> int:
    return int(f.poly.discriminant())


def disc_sqfree(f: HyperellipticInput) -> DiscriminantData:
    d = disc(f)
    if d == 0:
        raise ZeroDiscriminant(f"{f} has a repeated root")
    n = abs(d)
    if n.bit_length() > DISC_BITS:
        factors = sympy.factorint(n, limit=2 ** 24)
        stubborn = [p for p in factors if not sympy.isprime(p)]
        if stubborn:
            raise FactorizationTimeout(f"|disc| = {n} left unfactored cofactor(s) {stubborn}")
    else:
        factors = sympy.factorint(n)
    part = 1
    for p, e in factors.items():
        if e % 2:
            part *= p
    part = part if d > 0 else -part
    log.debug("disc(%s) = %s, squarefree part %s", f, d, part)
    return DiscriminantData(d, part, {int(p): int(e) for p, e in factors.items()})


def is_square(n: int) -> bool:
    return n >= 0 and math.isqrt(n) ** 2 == n


# =========================
# FACTOR PATTERNS
# =========================
def _check_good_prime(f: HyperellipticInput, ell: int) -> None:
    if not sympy.isprime(ell):
        raise BadPrime(f"{ell} is not prime")
    if f.lead % ell == 0 or disc(f) % ell == 0:
        raise BadPrime(f"{ell} divides disc(f) * lead(f) for {f}")


def factor_pattern_mod(f: HyperellipticInput, ell: int) -> Tuple[int, ...]:
    """Degrees of the irreducible factors of f over F_ell, sorted."""
    _check_good_prime(f, ell)
    g = gf_from_int_poly(list(f.coeffs), ell)
    _, g = gf_monic(g, ell, ZZ)
    degrees: List[int] = []
    for h, d in gf_ddf_zassenhaus(g, ell, ZZ):
        degrees.extend([int(d)] * ((len(h) - 1) // int(d)))
    return tuple(sorted(degrees))


def good_primes(f: HyperellipticInput, start: int = 2) -> Iterable[int]:
    d = disc(f)
    ell = start - 1
    while True:
        ell = int(sympy.nextprime(ell))
        if f.lead % ell and d % ell:
            yield ell


def _subset_sums(pattern: Sequence[int]) -> Set[int]:
    sums = {0}
    for part in pattern:
        sums |= {s + part for s in sums}
    return sums


def _is_transposition_pattern(pattern: Sequence[int]) -> bool:
    return pattern.count(2) == 1 and all(part % 2 for part in pattern if part != 2)


def rational_roots(f: HyperellipticInput) -> List[sympy.Rational]:
    return sorted(sympy.Rational(r) for r in Poly(list(f.coeffs), X, domain="QQ").ground_roots())


# =========================
# GALOIS CERTIFICATE
# =========================
@dataclass
class GaloisCertificate:
    degree: int
    primes: List[int] = field(default_factory=list)
    patterns: Dict[int, Tuple[int, ...]] = field(default_factory=dict)
    irreducible: bool = False
    long_cycle_seen: bool = False
    transposition_seen: bool = False
    verdict: str = SN_UNKNOWN
    witness: str = ""

    def to_dict(self) -> dict:
        return {
            "degree": self.degree,
            "primes_used": len(self.primes),
            "patterns": sorted({" ".join(map(str, p)) for p in self.patterns.values()}),
            "irreducibility_certified": self.irreducible,
            "long_cycle_seen": self.long_cycle_seen,
            "transposition_pattern_seen": self.transposition_seen,
            "verdict": self.verdict,
            "witness": self.witness,
        }


def certify_Sn(f: HyperellipticInput, prime_budget: int = PRIME_BUDGET) -> GaloisCertificate:
    """Cycle types by Dedekind's criterion; S_n once irreducible with an (n-1)-cycle (n-cycle for prime n) and a transposition."""
    n = f.degree
    if n < 2:
        raise BadDegree("degree must be at least 2")
    cert = GaloisCertificate(degree=n)
    d = disc(f)
    if is_square(d):
        cert.verdict = NOT_SN
        cert.witness = f"disc = {d} is a perfect square, Gal lies in A_{n}"
        return cert
    if n == 3:
        roots = rational_roots(f)
        if roots:
            cert.verdict = NOT_SN
            cert.witness = f"rational root {roots[0]}"
            return cert
        cert.irreducible = True
        cert.witness = "no rational root and disc not a square"
        cert.verdict = SN_CERTIFIED
        return cert

    # proper degrees a factor over Q could have, pruned by every pattern seen
    open_degrees = set(range(1, n))
    for ell in good_primes(f):
        if len(cert.primes) >= prime_budget:
            break
        pattern = factor_pattern_mod(f, ell)
        cert.primes.append(ell)
        cert.patterns[ell] = pattern
        open_degrees &= _subset_sums(pattern)
        if not open_degrees:
            cert.irreducible = True
        if pattern == (1, n - 1) or (pattern == (n,) and sympy.isprime(n)):
            cert.long_cycle_seen = True
        if _is_transposition_pattern(pattern):
            cert.transposition_seen = True
        if cert.irreducible and cert.long_cycle_seen and cert.transposition_seen:
            cert.verdict = SN_CERTIFIED
            cert.witness = f"irreducible, long cycle and transposition seen within {len(cert.primes)} primes"
            log.info("S_%d certified for %s after %d primes", n, f, len(cert.primes))
            return cert
    cert.witness = f"budget of {prime_budget} primes exhausted"
    log.warning("no S_%d certificate for %s: %s", n, f, cert.witness)
    return cert


# =========================
# THE MOD-2 CRITERION
# =========================
@dataclass
class ImageVerdict:
    outcome: str
    polynomial: str
    d: int
    disc: DiscriminantData
    certificate: GaloisCertificate
    trail: List[Dict] = field(default_factory=list)
    hypotheses: Tuple[str, ...] = ()
    reason: str = ""

    @property
    def exit_code(self) -> int:
        return {SURJECTIVE: 0, NOT_SURJECTIVE: 20, UNKNOWN: 30}[self.outcome]

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "polynomial": self.polynomial,
            "d": self.d,
            "target": f"GSp_{2 * self.d}(Z_2)",
            "discriminant": self.disc.to_dict(),
            "certificate": self.certificate.to_dict(),
            "trail": self.trail,
            "hypotheses": list(self.hypotheses),
            "reason": self.reason,
        }


def verdict_4_2_1(f: HyperellipticInput, d: Optional[int] = None, assert_E_is_Q: bool = False,
                  prime_budget: int = PRIME_BUDGET) -> ImageVerdict:
    """Im(rho_{A,2}) = GSp_{2d}(Z_2) for the Jacobian of y^2 = f(x), deg f = 3d."""
    if f.degree not in VERDICT_DEGREES:
        raise BadDegree(f"the criterion needs deg f = 3d with d in (1, 2), got degree {f.degree}")
    d = d if d is not None else f.degree // 3
    if 3 * d != f.degree:
        raise BadDegree(f"deg f = {f.degree} is not 3d for d = {d}")
    dd = disc_sqfree(f)
    cert = certify_Sn(f, prime_budget)
    hypotheses = ("E = Q",) if assert_E_is_Q else ()
    out = ImageVerdict(UNKNOWN, str(f), d, dd, cert, hypotheses=hypotheses)
    in_excluded = dd.squarefree_part in EXCLUDED_SQUAREFREE
    out.trail.append({"key": "4.2.1(i)", "conditions": {"Gal_is_S_n": cert.verdict}})
    out.trail.append({"key": "4.2.1(ii)", "conditions": {
        "squarefree_part": dd.squarefree_part,
        "avoids Q(i), Q(sqrt 2), Q(sqrt -2)": not in_excluded,
        "reduction": "with Gal = S_n the only quadratic subfield of F is Q(sqrt disc)",
    }})
    if in_excluded:
        out.outcome = NOT_SURJECTIVE
        out.reason = f"Q(sqrt {dd.squarefree_part}) lies in the splitting field"
    elif cert.verdict == NOT_SN:
        out.outcome = NOT_SURJECTIVE
        out.reason = f"Galois group is not S_{f.degree}: {cert.witness}"
    elif cert.verdict == SN_CERTIFIED:
        out.outcome = SURJECTIVE
        out.reason = f"Gal = S_{f.degree} and squarefree part {dd.squarefree_part} not in {EXCLUDED_SQUAREFREE}"
    else:
        out.reason = f"S_{f.degree} not certified: {cert.witness}"
    log.info("4.2.1 verdict for %s: %s (%s)", f, out.outcome, out.reason)
    return out


def search_cubic(targets: Iterable[int], bound: int, prime_budget: int = PRIME_BUDGET) -> HyperellipticInput:
    """First monic cubic x^3+ax^2+bx+c, |a|,|b|,|c| <= bound by height, with Gal = S_3 and squarefree disc part in targets."""
    wanted = set(int(t) for t in targets)
    for height in range(bound + 1):
        for a in range(-height, height + 1):
            for b in range(-height, height + 1):
                for c in range(-height, height + 1):
                    if max(abs(a), abs(b), abs(c)) != height:
                        continue
                    f = HyperellipticInput((1, a, b, c))
                    if disc(f) == 0 or disc_sqfree(f).squarefree_part not in wanted:
                        continue
                    if certify_Sn(f, prime_budget).verdict == SN_CERTIFIED:
                        log.info("found %s with squarefree disc part in %s", f, sorted(wanted))
                        return f
    raise BudgetExhausted(f"no S_3 cubic with coefficients bounded by {bound} hits {sorted(wanted)}")


# =========================
# POINT COUNTING
# =========================
def _field(ell: int, i: int) -> RingDescriptor:
    return construct_ring(ell, i, 1)


@lru_cache(maxsize=32)
def _field_elements(ell: int, i: int) -> np.ndarray:
    """All elements of F_{ell^i} as digit rows; row k holds the base-ell digits of k."""
    k = np.arange(ell ** i, dtype=np.int64)
    return np.stack([(k // ell ** j) % ell for j in range(i)], axis=1)


def _index(ell: int, A: np.ndarray) -> np.ndarray:
    weights = ell ** np.arange(A.shape[1], dtype=np.int64)
    return A @ weights


def _fmul(F: RingDescriptor, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    if F.r == 1:
        return (A * B) % F.p
    return np.einsum("bk,bl,klu->bu", A, B, mult_table(F)) % F.p


def _evaluate(F: RingDescriptor, coeffs: Sequence[int], xs: np.ndarray) -> np.ndarray:
    val = np.zeros_like(xs)
    for c in coeffs:
        val = _fmul(F, val, xs)
        val[:, 0] = (val[:, 0] + c) % F.p
    return val


def count_points(f: HyperellipticInput, ell: int, i: int) -> int:
    """#C(F_{ell^i}) for the smooth model of y^2 = f(x)."""
    F = _field(ell, i)
    xs = _field_elements(ell, i)
    roots = np.bincount(_index(ell, _fmul(F, xs, xs)), minlength=ell ** i)
    affine = int(roots[_index(ell, _evaluate(F, f.coeffs, xs))].sum())
    if f.degree % 2:
        return affine + 1
    lead = np.zeros((1, i), dtype=np.int64)
    lead[0, 0] = f.lead % ell
    return affine + int(roots[_index(ell, lead)][0])


def lpoly_from_counts(counts: Sequence[int], ell: int, genus: int) -> List[int]:
    """Ascending coefficients of L(T) from #C(F_{ell^i}), i = 1..genus."""
    power_sums = [ell ** i + 1 - counts[i - 1] for i in range(1, genus + 1)]
    e = [1]
    for j in range(1, genus + 1):
        acc = sum((-1) ** (i - 1) * e[j - i] * power_sums[i - 1] for i in range(1, j + 1))
        e.append(acc // j)
    low = [(-1) ** j * e[j] for j in range(genus + 1)]
    high = [ell ** (genus - j) * low[j] for j in range(genus - 1, -1, -1)]
    return low + high


def predicted_count(lpoly: Sequence[int], ell: int, i: int) -> int:
    """#C(F_{ell^i}) predicted by L(T)."""
    alphas = np.roots(list(lpoly))
    s = sum(complex(a) ** i for a in alphas)
    return int(round(ell ** i + 1 - s.real))


def weil_ok(lpoly: Sequence[int], ell: int, tol: float = 1e-6) -> bool:
    alphas = np.roots(list(lpoly))
    return bool(np.all(np.abs(np.abs(alphas) - math.sqrt(ell)) <= tol * math.sqrt(ell)))


def functional_equation_ok(lpoly: Sequence[int], ell: int) -> bool:
    g = (len(lpoly) - 1) // 2
    return all(lpoly[2 * g - j] == ell ** (g - j) * lpoly[j] for j in range(g + 1))


@dataclass
class FrobeniusData:
    ell: int
    genus: int
    counts: List[int]
    lpoly: List[int]
    weil_ok: bool
    functional_equation_ok: bool
    extra_count_ok: Optional[bool] = None

    @property
    def lpoly_mod2(self) -> List[int]:
        return [c % 2 for c in self.lpoly]

    @property
    def jacobian_order(self) -> int:
        return sum(self.lpoly)

    def to_dict(self) -> dict:
        return {
            "ell": self.ell,
            "genus": self.genus,
            "counts": self.counts,
            "lpoly": self.lpoly,
            "lpoly_mod2": self.lpoly_mod2,
            "jacobian_order": self.jacobian_order,
            "weil_ok": self.weil_ok,
            "functional_equation_ok": self.functional_equation_ok,
            "extra_count_ok": self.extra_count_ok,
        }


def count_points_lpoly(f: HyperellipticInput, ell: int, check_extra: bool = True) -> FrobeniusData:
    if f.degree not in COUNT_DEGREES:
        raise BadDegree(f"point counting supports degrees {COUNT_DEGREES}, got {f.degree}")
    if ell == 2 or not sympy.isprime(ell) or f.lead % ell == 0 or disc(f) % ell == 0:
        raise BadReduction(f"{ell} is not an odd prime of good reduction for {f}")
    g = f.genus
    if ell ** g > POINT_COUNT_BOUND:
        raise TooLarge(f"{ell}^{g} points exceed the counting bound {POINT_COUNT_BOUND}")
    counts = [count_points(f, ell, i) for i in range(1, g + 1)]
    lpoly = lpoly_from_counts(counts, ell, g)
    extra = None
    if check_extra and ell ** (g + 1) <= POINT_COUNT_BOUND:
        extra = count_points(f, ell, g + 1) == predicted_count(lpoly, ell, g + 1)
    data = FrobeniusData(ell, g, counts, lpoly, weil_ok(lpoly, ell), functional_equation_ok(lpoly, ell), extra)
    log.debug("L-polynomial of %s at %d: %s", f, ell, lpoly)
    return data


def frobenius_table(f: HyperellipticInput, primes: Sequence[int], threads: int = THREADS) -> List[FrobeniusData]:
    """Per-prime data ordered by ell."""
    primes = sorted(primes)
    if threads <= 1:
        return [count_points_lpoly(f, ell) for ell in primes]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda ell: count_points_lpoly(f, ell), primes))


def frobenius_frame(rows: Sequence[FrobeniusData]) -> pd.DataFrame:
    return pd.DataFrame([r.to_dict() for r in rows]).set_index("ell")


# =========================
# PLANE QUARTIC
# =========================
def plane_quartic_count(ell: int) -> int:
    """Projective F_ell-points of xz^3+zx^3+zx^2y+zy^3+x^4+x^3y+x^2y^2+y^4 = 0."""
    if not sympy.isprime(ell):
        raise BadPrime(f"{ell} is not prime")

    def form(x, y, z):
        return (x * z ** 3 + z * x ** 3 + z * x ** 2 * y + z * y ** 3
                + x ** 4 + x ** 3 * y + x ** 2 * y ** 2 + y ** 4) % ell

    grid = np.arange(ell, dtype=np.int64)
    xs, ys = np.meshgrid(grid, grid, indexing="ij")
    total = int(np.count_nonzero(form(xs, ys, 1) == 0))
    total += int(np.count_nonzero(form(grid, 1, 0) == 0))
    total += int(form(1, 0, 0) == 0)
    return total


# =========================
# 2-TORSION CROSS-CHECK
# =========================
def permutation_charpoly_mod2(pattern: Sequence[int]) -> List[int]:
    """Charpoly over F_2 of a permutation of cycle type pattern on the 2-torsion of the Jacobian."""
    n = sum(pattern)
    poly = [1]
    for c in pattern:
        poly = gf_mul(poly, [1] + [0] * (c - 1) + [1], 2, ZZ)
    trivial = 1 if n % 2 else 2
    for _ in range(trivial):
        poly = gf_quo(poly, [1, 1], 2, ZZ)
    return [int(c) for c in poly]


@dataclass
class Mod2Consistency:
    ell: int
    pattern: Tuple[int, ...]
    lpoly_mod2: List[int]
    permutation_charpoly_mod2: List[int]

    @property
    def equal(self) -> bool:
        return self.lpoly_mod2 == self.permutation_charpoly_mod2

    def to_dict(self) -> dict:
        return {"ell": self.ell, "pattern": list(self.pattern), "lpoly_mod2": self.lpoly_mod2,
                "permutation_charpoly_mod2": self.permutation_charpoly_mod2, "equal": self.equal}


def mod2_consistency(f: HyperellipticInput, ell: int) -> Mod2Consistency:
    if f.degree not in (3, 5, 6):
        raise BadDegree(f"mod-2 consistency supports degrees 3, 5, 6, got {f.degree}")
    if ell == 2:
        raise BadPrime("ell must be odd")
    pattern = factor_pattern_mod(f, ell)
    data = count_points_lpoly(f, ell, check_extra=False)
    # descending coefficients of t^{2g} L(1/t) are the ascending ones of L
    result = Mod2Consistency(ell, pattern, data.lpoly_mod2, permutation_charpoly_mod2(pattern))
    if not result.equal:
        log.warning("mod-2 mismatch for %s at %d: %s", f, ell, result.to_dict())
    return result
