"""Exact bias constants R_Q(d; a) of the sieved Cramer model.

Two independent routes compute the same rationals:

* brute force over the double sum of least positive residues <t - s>_Q, and
* the prime-by-prime recursion that grows Q from Q = d, which is the only
  practical route for primorial moduli such as 1000#.

All arithmetic is in :class:`fractions.Fraction`; decimals appear only when
rendering.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal, localcontext
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import ArgumentError, ResourceError
from .primes import factorize, reduced_residues, simple_sieve, totient

BRUTE_FORCE_GUARD = 10**10


@dataclass(frozen=True)
class FactoredModulus:
    """An integer Q >= 1 carried together with its factorization."""

    value: int
    factors: tuple[tuple[int, int], ...]
    label: str = ""

    def __post_init__(self):
        prod = 1
        for p, e in self.factors:
            prod *= p**e
        if prod != self.value:
            raise ArgumentError(f"factors {self.factors} do not multiply to {self.value}")
        if not self.label:
            object.__setattr__(self, "label", str(self.value))

    @classmethod
    def of(cls, n: int, label: str = "") -> "FactoredModulus":
        return cls(n, tuple(factorize(n)), label)

    @property
    def primes(self) -> list[int]:
        return [p for p, _ in self.factors]

    @property
    def totient(self) -> int:
        t = self.value
        for p, _ in self.factors:
            t = t // p * (p - 1)
        return t

    @property
    def radical(self) -> int:
        return math.prod(self.primes)

    def times_prime(self, p: int, label: str = "") -> "FactoredModulus":
        if self.value % p == 0:
            raise ArgumentError(f"{p} already divides {self.value}")
        factors = tuple(sorted(self.factors + ((p, 1),)))
        return FactoredModulus(self.value * p, factors, label)

    def __str__(self):
        return self.label


def primorial(T: int) -> FactoredModulus:
    """T# = product of the primes <= T."""
    if T < 2:
        raise ArgumentError(f"primorial needs T >= 2, got {T}")
    ps = simple_sieve(T).tolist()
    return FactoredModulus(math.prod(ps), tuple((p, 1) for p in ps), f"{T}#")


_QSPEC = re.compile(r"^\s*(?:(\d+)\s*\*\s*)?(\d+)(#?)\s*$")


def parse_modulus(spec: str) -> FactoredModulus:
    """Parse a sieve-modulus spec: ``"30"``, ``"1000#"`` or ``"9*10#"`` (a product)."""
    m = _QSPEC.match(str(spec))
    if not m:
        raise ArgumentError(f"cannot parse modulus spec {spec!r}")
    coef, body, hash_ = m.groups()
    if hash_:
        base = primorial(int(body))
    else:
        if coef:
            raise ArgumentError(f"cannot parse modulus spec {spec!r}")
        n = int(body)
        if n < 1:
            raise ArgumentError("modulus must be positive")
        return FactoredModulus.of(n)
    if not coef:
        return base
    c = int(coef)
    if c < 1:
        raise ArgumentError("coefficient must be positive")
    merged: dict[int, int] = dict(base.factors)
    for p, e in factorize(c):
        merged[p] = merged.get(p, 0) + e
    return FactoredModulus(c * base.value, tuple(sorted(merged.items())), spec.replace(" ", ""))


def least_positive_residue(n: int, Q: int) -> int:
    """The representative of n mod Q in [1, Q]."""
    if Q < 1:
        raise ArgumentError(f"modulus must be >= 1, got {Q}")
    return (n - 1) % Q + 1


def crt_residue(pairs: Sequence[tuple[int, int]]) -> int:
    """The unique r in [1, prod Q_i] with r = n_i mod Q_i for every pair (n_i, Q_i)."""
    r, M = 0, 1
    for n, q in pairs:
        if q < 1:
            raise ArgumentError(f"modulus must be >= 1, got {q}")
        if math.gcd(M, q) != 1:
            raise ArgumentError("CRT moduli must be pairwise coprime")
        # r + M*k = n (mod q)
        k = ((n - r) * pow(M, -1, q)) % q if q > 1 else 0
        r += M * k
        M *= q
    return least_positive_residue(r, M)


def _as_modulus(Q) -> FactoredModulus:
    return Q if isinstance(Q, FactoredModulus) else FactoredModulus.of(int(Q))


def _check_class(Q: FactoredModulus, d: int, a: int) -> int:
    if d < 2:
        raise ArgumentError(f"modulus d must be >= 2, got {d}")
    if Q.value % d:
        raise ArgumentError(f"d={d} does not divide Q={Q.value}")
    if math.gcd(a, d) != 1:
        raise ArgumentError(f"{a} is not a reduced residue mod {d}")
    return a % d


def r_bar(Q, d: int) -> Fraction:
    """(1/phi(d)) * (Q/phi(Q)) * (phi(Q) + 1)/2."""
    Q = _as_modulus(Q)
    if Q.value % d:
        raise ArgumentError(f"d={d} does not divide Q={Q.value}")
    phq = Q.totient
    return Fraction(Q.value * (phq + 1), 2 * totient(d) * phq)


def _reduced_array(Q: int) -> np.ndarray:
    n = np.arange(1, Q + 1, dtype=np.int64)
    return n[np.gcd(n, Q) == 1]


def _guard(Q: FactoredModulus) -> None:
    if Q.totient**2 > BRUTE_FORCE_GUARD:
        raise ResourceError(
            f"brute force over phi(Q)^2 = {Q.totient**2} pairs exceeds {BRUTE_FORCE_GUARD}; use the recursion"
        )


def _star_numerators(Q: FactoredModulus, d: int) -> dict[int, int]:
    """phi(Q)^2 * R*_Q(d; a) for every reduced a mod d, as exact integers.

    For reduced s, sum_t <t - s>_Q = sum_t t - phi(Q)*s + Q*#{t <= s}; with
    the reduced t sorted, #{t <= s} is the rank of s.
    """
    _guard(Q)
    T = _reduced_array(Q.value)
    total_t = int(T.sum())
    rank = np.arange(1, T.size + 1, dtype=np.int64)
    cls = T % d
    out = {}
    for a in reduced_residues(d):
        sel = cls == a
        out[a] = int(sel.sum()) * total_t - T.size * int(T[sel].sum()) + Q.value * int(rank[sel].sum())
    return out


def r_star_brute(Q, d: int, a: int) -> Fraction:
    """R*_Q(d; a) = phi(Q)^-2 * sum over reduced s, t in [1, Q] with s = a mod d of <t - s>_Q."""
    Q = _as_modulus(Q)
    a = _check_class(Q, d, a)
    return Fraction(_star_numerators(Q, d)[a], Q.totient**2)


def r_bias_brute(Q, d: int, a: int) -> Fraction:
    """R_Q(d; a) = R*_Q(d; a) - R-bar_Q(d), by brute force."""
    Q = _as_modulus(Q)
    return r_star_brute(Q, d, a) - r_bar(Q, d)


@dataclass(frozen=True)
class BiasVector:
    """Exact R_Q(d; a) for every reduced a mod d."""

    d: int
    Q: FactoredModulus
    entries: dict[int, Fraction] = field(repr=False)
    r_bar: Fraction = field(repr=False)

    def __getitem__(self, a: int) -> Fraction:
        return self.entries[a % self.d]

    def decimal(self, a: int, places: int = 4) -> Decimal:
        return to_decimal(self[a], places)

    def to_dict(self, places: int = 4) -> dict:
        return {
            "d": self.d,
            "Q_description": self.Q.label,
            "Q_value": str(self.Q.value),
            "entries": [
                {"a": a, "rational": rational_str(v), "decimal": str(to_decimal(v, places))}
                for a, v in sorted(self.entries.items())
            ],
            "r_bar": rational_str(self.r_bar),
        }

    def csv_rows(self, places: int = 4) -> list[list[str]]:
        return [[str(a), str(to_decimal(v, places)), rational_str(v)] for a, v in sorted(self.entries.items())]


def rational_str(v: Fraction) -> str:
    return f"{v.numerator}/{v.denominator}"


def to_decimal(v: Fraction, places: int = 4) -> Decimal:
    """Round an exact rational to ``places`` decimals, half-to-even."""
    with localcontext() as ctx:
        ctx.prec = max(50, places + len(str(v.numerator // v.denominator)) + 10)
        q = Decimal(v.numerator) / Decimal(v.denominator)
        return q.quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_EVEN)


def brute_bias_vector(Q, d: int) -> BiasVector:
    Q = _as_modulus(Q)
    _check_class(Q, d, 1)
    nums = _star_numerators(Q, d)
    rb = r_bar(Q, d)
    ph2 = Q.totient**2
    return BiasVector(d, Q, {a: Fraction(n, ph2) - rb for a, n in nums.items()}, rb)


def base_case(d: int, a: int) -> Fraction:
    """R_d(d; a), the bias constant with sieve modulus Q = d.

    Prime d has the closed form d/phi(d)^2 * (a/d - 1/2); composite d falls
    back to the single sum over t (s is pinned to a when Q = d).
    """
    if d < 2 or math.gcd(a, d) != 1 or not 1 <= a <= d - 1:
        raise ArgumentError(f"base case needs 1 <= a < d with gcd(a, d) = 1, got d={d}, a={a}")
    ph = totient(d)
    if ph == d - 1:
        return Fraction(d, ph * ph) * (Fraction(a, d) - Fraction(1, 2))
    star = sum(least_positive_residue(t - a, d) for t in reduced_residues(d))
    return Fraction(star, ph * ph) - r_bar(d, d)


def base_vector(d: int) -> BiasVector:
    Q = FactoredModulus.of(d)
    return BiasVector(d, Q, {a: base_case(d, a) for a in reduced_residues(d)}, r_bar(Q, d))


def recursion_step(current: BiasVector, p: int, label: str = "") -> BiasVector:
    """Grow the sieve modulus from Q to pQ for a prime p coprime to Q and d.

    R_pQ(d; b) = (phi(p)^2 - 1)/phi(p)^2 * R_Q(d; b) + p/phi(p)^2 * R_Q(d; b/p mod d).
    """
    d = current.d
    if current.Q.value % p == 0 or d % p == 0:
        raise ArgumentError(f"p={p} must not divide Q={current.Q.value} or d={d}")
    if p < 2 or factorize(p) != [(p, 1)]:
        raise ArgumentError(f"{p} is not prime")
    ph2 = (p - 1) ** 2
    keep = Fraction(ph2 - 1, ph2)
    mix = Fraction(p, ph2)
    p_inv = pow(p, -1, d)
    old = current.entries
    entries = {b: keep * old[b] + mix * old[(p_inv * b) % d] for b in old}
    Q = current.Q.times_prime(p, label)
    return BiasVector(d, Q, entries, r_bar(Q, d))


def recursion_chain(start: BiasVector, primes: Iterable[int], label: str = "") -> BiasVector:
    vec = start
    for p in primes:
        vec = recursion_step(vec, p)
    if label:
        vec = BiasVector(vec.d, FactoredModulus(vec.Q.value, vec.Q.factors, label), vec.entries, vec.r_bar)
    return vec


def recursion_bias_vector(Q, d: int) -> BiasVector:
    """R_Q(d; .) by recursion from Q = d.

    The model only sees the integers coprime to Q, so R_Q(d; a) depends on Q
    only through lcm(d, rad Q); the chain multiplies in the primes of Q that
    do not divide d, in ascending order.
    """
    Q = _as_modulus(Q)
    _check_class(Q, d, 1)
    extra = [p for p in Q.primes if d % p]
    vec = recursion_chain(base_vector(d), extra)
    return BiasVector(d, Q, vec.entries, r_bar(Q, d))


def bias_vector(Q, d: int, method: str = "auto") -> BiasVector:
    """R_Q(d; .) by ``brute``, ``recursion`` or ``auto`` (brute force under the guard)."""
    Q = _as_modulus(Q)
    if method == "brute":
        return brute_bias_vector(Q, d)
    if method == "recursion":
        return recursion_bias_vector(Q, d)
    if method == "auto":
        if Q.totient**2 <= BRUTE_FORCE_GUARD and Q.value <= 10**6:
            return brute_bias_vector(Q, d)
        return recursion_bias_vector(Q, d)
    raise ArgumentError(f"unknown method {method!r}")


def primorial_bias_table(d: int, T: int) -> BiasVector:
    """R_Q(d; .) for Q = lcm(d, T#): start at Q = d and multiply in each prime p <= T with p not dividing d."""
    if d < 2:
        raise ArgumentError(f"modulus d must be >= 2, got {d}")
    prim = primorial(T)
    ps = [p for p in prim.primes if d % p]
    label = f"{T}#" if prim.value % d == 0 else f"lcm({d},{T}#)"
    return recursion_chain(base_vector(d), ps, label)


def q_t_primes(d: int, T: int) -> list[int]:
    return [p for p in simple_sieve(T).tolist() if p % d == 1]


def q_t_product(d: int, a: int, T: int) -> Fraction:
    """R_{Q_T}(d; a) for Q_T = d * prod(p <= T, p = 1 mod d), via the product of p/(p - 1)."""
    if d < 2 or factorize(d) != [(d, 1)]:
        raise ArgumentError(f"d={d} must be prime")
    factor = Fraction(1)
    for p in q_t_primes(d, T):
        factor *= Fraction(p, p - 1)
    return factor * base_case(d, a % d)


def radical(n: int) -> int:
    return math.prod(p for p, _ in factorize(n))


def radical_transfer(Q, d: int, a: int, method: str = "auto") -> Fraction:
    """(phi(rad d)/phi(d)) * R_Q(rad d; a mod rad d), which equals R_Q(d; a)."""
    Q = _as_modulus(Q)
    a = _check_class(Q, d, a)
    d_sf = radical(d)
    if d_sf == d:
        return bias_vector(Q, d, method)[a]
    return Fraction(totient(d_sf), totient(d)) * bias_vector(Q, d_sf, method)[a % d_sf]
