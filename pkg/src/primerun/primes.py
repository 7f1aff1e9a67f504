"""Segmented odd-only sieve of Eratosthenes and prime-indexed queries.

Every other module consumes primes through :func:`iter_prime_chunks`, which
streams ascending numpy arrays of primes segment by segment so that ranges up
to 10^9 fit in a fixed memory budget.
"""

from __future__ import annotations

import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .errors import ArgumentError, ResourceError

DEFAULT_SEGMENT_SIZE = 1 << 22
DEFAULT_MAX_SPAN = 1 << 32
MAX_HI = 1 << 63

_base_lock = threading.Lock()
_base_primes = np.array([2, 3, 5, 7], dtype=np.int64)
_base_limit = 10


def simple_sieve(limit: int) -> np.ndarray:
    """All primes <= limit from a plain (unsegmented) sieve."""
    if limit < 2:
        return np.empty(0, dtype=np.int64)
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if is_prime[p]:
            is_prime[p * p :: p] = False
    return np.flatnonzero(is_prime).astype(np.int64)


def base_primes(limit: int) -> np.ndarray:
    """Primes <= limit, served from a growing module-level cache."""
    global _base_primes, _base_limit
    with _base_lock:
        if limit > _base_limit:
            new_limit = max(limit, 2 * _base_limit)
            _base_primes = simple_sieve(new_limit)
            _base_limit = new_limit
        primes = _base_primes
    return primes[: np.searchsorted(primes, limit, side="right")]


def _odd_mask(lo: int, hi: int) -> tuple[int, np.ndarray]:
    """Primality of the odd numbers in [lo, hi).

    Returns (first_odd, mask) where mask[i] is True iff first_odd + 2*i is an
    odd prime.
    """
    first = lo | 1
    count = max(0, (hi - first + 1) // 2)
    mask = np.ones(count, dtype=bool)
    if count == 0:
        return first, mask
    if first == 1:
        mask[0] = False
    for p in base_primes(math.isqrt(hi - 1))[1:].tolist():
        start = p * p
        if start < first:
            start = -(-first // p) * p
            if not start & 1:
                start += p
        if start >= hi:
            continue
        mask[(start - first) // 2 :: p] = False
    return first, mask


def _segment_primes(lo: int, hi: int) -> np.ndarray:
    first, mask = _odd_mask(lo, hi)
    primes = first + 2 * np.flatnonzero(mask).astype(np.int64)
    if lo <= 2 < hi:
        primes = np.concatenate(([2], primes)).astype(np.int64)
    return primes


def _check_range(lo: int, hi: int) -> None:
    if not 0 <= lo < hi:
        raise ArgumentError(f"need 0 <= lo < hi, got lo={lo}, hi={hi}")
    if hi > MAX_HI:
        raise ArgumentError(f"hi={hi} exceeds 2^63")


@dataclass(frozen=True)
class SieveSegment:
    """Primality flags for every integer in [lo, hi), bit-packed (little-endian bit order)."""

    lo: int
    hi: int
    bits: np.ndarray = field(repr=False)

    @classmethod
    def from_primes(cls, lo: int, hi: int, primes: np.ndarray) -> "SieveSegment":
        flags = np.zeros(hi - lo, dtype=bool)
        flags[primes - lo] = True
        return cls(lo, hi, np.packbits(flags, bitorder="little"))

    def __len__(self) -> int:
        return self.hi - self.lo

    @property
    def flags(self) -> np.ndarray:
        """Unpacked boolean view; flags[n - lo] is True iff n is prime."""
        return np.unpackbits(self.bits, count=self.hi - self.lo, bitorder="little").astype(bool)

    def is_prime(self, n: int) -> bool:
        if not self.lo <= n < self.hi:
            raise ArgumentError(f"{n} outside segment [{self.lo}, {self.hi})")
        i = n - self.lo
        return bool((self.bits[i >> 3] >> (i & 7)) & 1)

    def primes(self) -> np.ndarray:
        return self.lo + np.flatnonzero(self.flags).astype(np.int64)

    def count(self) -> int:
        return int(np.unpackbits(self.bits, count=self.hi - self.lo).sum())


def sieve_range(lo: int, hi: int, max_span: int = DEFAULT_MAX_SPAN) -> SieveSegment:
    """Sieve [lo, hi) into a single bit-packed segment.

    Raises ResourceError when hi - lo exceeds ``max_span`` bits; stream larger
    ranges with :func:`iter_segments` or :func:`iter_prime_chunks`.
    """
    _check_range(lo, hi)
    if hi - lo > max_span:
        raise ResourceError(
            f"range of {hi - lo} integers exceeds the memory budget of {max_span}; stream it in segments"
        )
    primes = np.concatenate(list(iter_prime_chunks(lo, hi)) or [np.empty(0, np.int64)])
    return SieveSegment.from_primes(lo, hi, primes)


def _bounds(lo: int, hi: int, segment_size: int) -> Iterator[tuple[int, int]]:
    while lo < hi:
        top = min(lo + segment_size, hi)
        yield lo, top
        lo = top


def iter_prime_chunks(
    lo: int,
    hi: int,
    segment_size: int = DEFAULT_SEGMENT_SIZE,
    threads: int = 1,
) -> Iterator[np.ndarray]:
    """Yield ascending int64 arrays of the primes in [lo, hi), one per segment.

    With ``threads > 1`` segments are sieved concurrently but always yielded in
    ascending order, so the stream is identical to the sequential one.
    """
    _check_range(lo, hi)
    if segment_size < 2 or segment_size & (segment_size - 1):
        raise ArgumentError(f"segment size must be a power of two >= 2, got {segment_size}")
    base_primes(math.isqrt(hi - 1))
    bounds = _bounds(lo, hi, segment_size)
    if threads <= 1:
        for a, b in bounds:
            yield _segment_primes(a, b)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        pending = []
        for a, b in bounds:
            pending.append(pool.submit(_segment_primes, a, b))
            if len(pending) >= 2 * threads:
                yield pending.pop(0).result()
        for fut in pending:
            yield fut.result()


def iter_segments(lo: int, hi: int, segment_size: int = DEFAULT_SEGMENT_SIZE) -> Iterator[SieveSegment]:
    for (a, b), primes in zip(_bounds(lo, hi, segment_size), iter_prime_chunks(lo, hi, segment_size)):
        yield SieveSegment.from_primes(a, b, primes)


def next_prime(n: int) -> int:
    """Smallest prime strictly greater than n."""
    width = 64
    lo = max(n + 1, 0)
    while True:
        chunk = _segment_primes(lo, lo + width)
        if chunk.size:
            return int(chunk[0])
        lo += width
        width *= 2


def prime_floor(n: int) -> int:
    """Largest prime <= n, with prime_floor(1) = 0."""
    if n < 1:
        raise ArgumentError(f"prime_floor needs n >= 1, got {n}")
    if n == 1:
        return 0
    width = 64
    while True:
        lo = max(0, n + 1 - width)
        chunk = _segment_primes(lo, n + 1)
        if chunk.size:
            return int(chunk[-1])
        width *= 2


class PrimeCursor:
    """Streaming prime_floor for nondecreasing queries.

    Keeps the last sieved segment so a scan over increasing n costs one sieve
    pass in total.
    """

    def __init__(self, segment_size: int = 1 << 16):
        self.segment_size = segment_size
        self._lo = 0
        self._hi = 0
        self._primes = np.empty(0, dtype=np.int64)
        self._last = 0
        self._query = 0

    def floor(self, n: int) -> int:
        if n < 1:
            raise ArgumentError(f"prime_floor needs n >= 1, got {n}")
        if n < self._query:
            raise ArgumentError("PrimeCursor queries must be nondecreasing")
        self._query = n
        while n >= self._hi:
            if self._primes.size:
                self._last = int(self._primes[-1])
            self._lo = self._hi
            self._hi = max(self._lo + self.segment_size, n + 1)
            self._primes = _segment_primes(self._lo, self._hi)
        i = int(np.searchsorted(self._primes, n, side="right"))
        return int(self._primes[i - 1]) if i else self._last


@dataclass(frozen=True)
class ResidueClass:
    """The class a mod d; ``reduced`` records gcd(a, d) == 1."""

    d: int
    a: int
    reduced: bool = field(init=False)

    def __post_init__(self):
        if self.d < 2:
            raise ArgumentError(f"modulus must be >= 2, got {self.d}")
        if not 0 <= self.a < self.d:
            raise ArgumentError(f"residue must lie in [0, {self.d - 1}], got {self.a}")
        object.__setattr__(self, "reduced", math.gcd(self.a, self.d) == 1)

    @classmethod
    def of(cls, a: int, d: int) -> "ResidueClass":
        return cls(d, a % d)


def reduced_residues(d: int) -> list[int]:
    return [a for a in range(1, d) if math.gcd(a, d) == 1]


def prime_pi(x: int) -> int:
    if x < 2:
        return 0
    return sum(int(c.size) for c in iter_prime_chunks(0, x + 1))


def pi_ap(x: int, cls: ResidueClass) -> int:
    """Number of primes p <= x with p = a mod d."""
    if x < 2:
        return 0
    return sum(int(np.count_nonzero(c % cls.d == cls.a)) for c in iter_prime_chunks(0, x + 1))


def factorize(n: int) -> list[tuple[int, int]]:
    """Prime factorization by trial division, ascending primes."""
    if n < 1:
        raise ArgumentError(f"cannot factor {n}")
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        p += 1 if p == 2 else 2
    if n > 1:
        out.append((n, 1))
    return out


def totient(n: int) -> int:
    result = n
    for p, _ in factorize(n):
        result -= result // p
    return result
