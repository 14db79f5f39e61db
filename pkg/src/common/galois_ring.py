import re
import itertools
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
import sympy
from sympy.polys.domains import ZZ
from sympy.polys.galoistools import gf_irreducible_p

from src.common.config import MAX_RING_DEGREE, MAX_RING_LEVEL
from src.common.errors import (
    BadLevel,
    DescriptorMismatch,
    NonPrime,
    NotAUnit,
    ParseError,
    SizeOverflow,
)

log = logging.getLogger(__name__)


# =========================
# DESCRIPTOR
# =========================
@dataclass(frozen=True)
class RingDescriptor:
    """W_n(F_{p^r}) realized as (Z/p^n)[t]/(modulus); modulus little-endian and monic."""

    p: int
    r: int
    n: int
    modulus: Tuple[int, ...]

    @property
    def characteristic(self) -> int:
        return self.p ** self.n

    @property
    def q(self) -> int:
        return self.p ** self.r

    @property
    def order(self) -> int:
        return self.p ** (self.r * self.n)

    @property
    def unit_count(self) -> int:
        return self.p ** (self.r * (self.n - 1)) * (self.q - 1)

    def at_level(self, m: int) -> "RingDescriptor":
        return construct_ring(self.p, self.r, m)

    def __str__(self) -> str:
        return f"W(p={self.p},r={self.r},n={self.n})"


def canonical_modulus(p: int, r: int) -> Tuple[int, ...]:
    # candidates ordered by the integer whose base-p digits are the low coefficients
    for k in range(p ** r):
        low = [(k // p ** i) % p for i in range(r)]
        poly = tuple(low) + (1,)
        if gf_irreducible_p([ZZ(c) for c in reversed(poly)], p, ZZ):
            return poly
    raise RuntimeError(f"no irreducible polynomial of degree {r} over F_{p}")


@lru_cache(maxsize=None)
def construct_ring(p: int, r: int, n: int) -> RingDescriptor:
    if not isinstance(p, int) or p < 2 or p > 2 ** 31 or not sympy.isprime(p):
        raise NonPrime(f"p={p} is not a prime in range")
    if r < 1 or n < 1:
        raise SizeOverflow(f"degree and level must be positive (r={r}, n={n})")
    if r > MAX_RING_DEGREE or n > MAX_RING_LEVEL:
        raise SizeOverflow(f"W(p={p},r={r},n={n}) exceeds configured size")
    return RingDescriptor(p=p, r=r, n=n, modulus=canonical_modulus(p, r))


@lru_cache(maxsize=None)
def mult_table(desc: RingDescriptor) -> np.ndarray:
    """T[i, j] = coefficients of t^(i+j) reduced by the modulus, shape (r, r, r)."""
    r, N = desc.r, desc.characteristic
    powers: List[List[int]] = []
    cur = [1] + [0] * (r - 1)
    for _ in range(2 * r - 1):
        powers.append(cur)
        # multiply by t, then reduce t^r = -sum(modulus[i] t^i)
        top = cur[-1]
        shifted = [0] + cur[:-1]
        cur = [(shifted[i] - top * desc.modulus[i]) % N for i in range(r)]
    table = np.zeros((r, r, r), dtype=np.int64)
    for i in range(r):
        for j in range(r):
            table[i, j] = powers[i + j]
    return table


_TEXT_RE = re.compile(r"^\s*W\(\s*p\s*=\s*(\d+)\s*,\s*r\s*=\s*(\d+)\s*,\s*n\s*=\s*(\d+)\s*\)\s*$")


def parse_ring(text: str) -> RingDescriptor:
    m = _TEXT_RE.match(text)
    if not m:
        raise ParseError(f"bad ring descriptor: {text!r}")
    return construct_ring(int(m.group(1)), int(m.group(2)), int(m.group(3)))


# =========================
# ELEMENTS
# =========================
@dataclass(frozen=True)
class RingElement:
    desc: RingDescriptor
    coeffs: Tuple[int, ...]

    @classmethod
    def of(cls, desc: RingDescriptor, coeffs: Union[int, Sequence[int]]) -> "RingElement":
        N = desc.characteristic
        if isinstance(coeffs, (int, np.integer)):
            vals = [int(coeffs)] + [0] * (desc.r - 1)
        else:
            vals = [int(c) for c in coeffs]
            if len(vals) > desc.r:
                raise ParseError(f"{len(vals)} coefficients for degree {desc.r}")
            vals = vals + [0] * (desc.r - len(vals))
        return cls(desc, tuple(v % N for v in vals))

    def _check(self, other: "RingElement") -> None:
        if other.desc != self.desc:
            raise DescriptorMismatch(f"{self.desc} vs {other.desc}")

    def __add__(self, other: "RingElement") -> "RingElement":
        self._check(other)
        N = self.desc.characteristic
        return RingElement(self.desc, tuple((a + b) % N for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "RingElement") -> "RingElement":
        self._check(other)
        N = self.desc.characteristic
        return RingElement(self.desc, tuple((a - b) % N for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> "RingElement":
        N = self.desc.characteristic
        return RingElement(self.desc, tuple((-a) % N for a in self.coeffs))

    def __mul__(self, other: "RingElement") -> "RingElement":
        self._check(other)
        r, N = self.desc.r, self.desc.characteristic
        T = mult_table(self.desc)
        out = [0] * r
        for i, a in enumerate(self.coeffs):
            if not a:
                continue
            for j, b in enumerate(other.coeffs):
                if not b:
                    continue
                ab = a * b
                for k in range(r):
                    out[k] += ab * int(T[i, j, k])
        return RingElement(self.desc, tuple(v % N for v in out))

    def __pow__(self, e: int) -> "RingElement":
        if e < 0:
            return self.inverse() ** (-e)
        result = one(self.desc)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def is_unit(self) -> bool:
        p = self.desc.p
        return any(c % p for c in self.coeffs)

    def inverse(self) -> "RingElement":
        if not self.is_unit():
            raise NotAUnit(f"{self} is not a unit in {self.desc}")
        return self ** (self.desc.unit_count - 1)

    def valuation(self) -> int:
        """p-adic valuation (n for zero)."""
        p = self.desc.p
        v = self.desc.n
        for c in self.coeffs:
            if c:
                k = 0
                while c % p == 0:
                    c //= p
                    k += 1
                v = min(v, k)
        return v

    def __str__(self) -> str:
        return "[" + ",".join(str(c) for c in self.coeffs) + "]"


def zero(desc: RingDescriptor) -> RingElement:
    return RingElement(desc, (0,) * desc.r)


def one(desc: RingDescriptor) -> RingElement:
    return RingElement.of(desc, 1)


def gen_t(desc: RingDescriptor, k: int = 1) -> RingElement:
    """t^k (for r = 1 the modulus is x, so t = 0 and t^0 = 1)."""
    if desc.r == 1:
        return one(desc) if k == 0 else zero(desc)
    return RingElement.of(desc, [0, 1]) ** k


def parse_element(text: str, desc: RingDescriptor) -> RingElement:
    body = text.strip()
    if body.startswith("[") and body.endswith("]"):
        body = body[1:-1]
    try:
        vals = [int(v) for v in body.split(",") if v.strip()]
    except ValueError:
        raise ParseError(f"bad ring element: {text!r}")
    return RingElement.of(desc, vals)


def elements(desc: RingDescriptor) -> Iterator[RingElement]:
    N = desc.characteristic
    for combo in itertools.product(range(N), repeat=desc.r):
        yield RingElement(desc, tuple(reversed(combo)))


def units(desc: RingDescriptor) -> Iterator[RingElement]:
    return (a for a in elements(desc) if a.is_unit())


# =========================
# OPERATIONS
# =========================
def ring_arith(a: RingElement, b: Optional[RingElement], op: str) -> Union[RingElement, bool]:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "inv":
        return a.inverse()
    if op == "is_unit":
        return a.is_unit()
    raise ParseError(f"unknown ring op {op!r}")


def reduce_level(a: RingElement, m: int) -> RingElement:
    if m < 1 or m > a.desc.n:
        raise BadLevel(f"cannot reduce {a.desc} to level {m}")
    if m == a.desc.n:
        return a
    target = a.desc.at_level(m)
    N = target.characteristic
    return RingElement(target, tuple(c % N for c in a.coeffs))


def lift(a: RingElement, desc: RingDescriptor) -> RingElement:
    """Coefficient-wise canonical lift to a higher level of the same residue field."""
    if desc.p != a.desc.p or desc.r != a.desc.r or desc.n < a.desc.n:
        raise DescriptorMismatch(f"cannot lift {a.desc} to {desc}")
    return RingElement(desc, a.coeffs)


def residue(a: RingElement) -> RingElement:
    return reduce_level(a, 1)


def teichmuller(x: RingElement, desc: RingDescriptor) -> RingElement:
    """Multiplicative section of the residue map, x given over the residue field."""
    y = lift(residue(x), desc)
    if y.is_zero():
        return y
    return y ** (desc.q ** (desc.n - 1))


def primitive_root(desc: RingDescriptor) -> RingElement:
    """Teichmuller lift of the first generator of F_q^* in enumeration order."""
    field = desc.at_level(1)
    order = field.q - 1
    primes = list(sympy.factorint(order)) if order > 1 else []
    for x in units(field):
        if all(x ** (order // ell) != one(field) for ell in primes):
            return teichmuller(x, desc)
    raise RuntimeError(f"no primitive root in {field}")


def _poly_eval(coeffs: Sequence[int], z: RingElement) -> RingElement:
    acc = zero(z.desc)
    for c in reversed(coeffs):
        acc = acc * z + RingElement.of(z.desc, c)
    return acc


@lru_cache(maxsize=None)
def _frobenius_image_of_t(desc: RingDescriptor) -> RingElement:
    if desc.r == 1:
        return zero(desc)
    f = desc.modulus
    df = [i * f[i] for i in range(1, len(f))]
    z = gen_t(desc) ** desc.p
    for _ in range(desc.n + 1):
        z = z - _poly_eval(f, z) * _poly_eval(df, z).inverse()
    return z


def frobenius_auto(a: RingElement, times: int = 1) -> RingElement:
    desc = a.desc
    if desc.r == 1:
        return a
    sigma_t = _frobenius_image_of_t(desc)
    out = a
    for _ in range(times % desc.r):
        out = _poly_eval(out.coeffs, sigma_t)
    return out
