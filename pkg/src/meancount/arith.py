"""Small number-theoretic helpers: primes and factorization of indices."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

_SIEVE_LIMIT = 1 << 17


@lru_cache(maxsize=None)
def _small_primes() -> tuple[int, ...]:
    sieve = np.ones(_SIEVE_LIMIT + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, int(_SIEVE_LIMIT**0.5) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return tuple(int(p) for p in np.nonzero(sieve)[0])


def first_primes(m: int) -> tuple[int, ...]:
    if m < 0:
        raise ValueError("m must be non-negative")
    ps = _small_primes()
    if m > len(ps):
        raise ValueError(f"only {len(ps)} primes available")
    return ps[:m]


def _strip(n: int, p: int) -> tuple[int, int]:
    """Divide out every factor p; returns (exponent, cofactor)."""
    if p == 2:
        e = (n & -n).bit_length() - 1
        return e, n >> e
    e = 0
    step, q = 1, p
    while n % q == 0:
        # squaring keeps big powers of p cheap
        n //= q
        e += step
        step, q = step * 2, q * q
    while n % p == 0:
        n //= p
        e += 1
    return e, n


@lru_cache(maxsize=65536)
def factor(n: int) -> tuple[tuple[int, int], ...]:
    """Prime factorization of ``n`` as ((p, e), ...) with p increasing."""
    if n < 1:
        raise ValueError("index must be a positive integer")
    out = []
    for p in _small_primes():
        if n == 1:
            break
        if p * p > n:
            break
        if n % p == 0:
            e, n = _strip(n, p)
            out.append((p, e))
    if n > 1:
        if n > _SIEVE_LIMIT * _SIEVE_LIMIT:
            raise ValueError(f"cannot certify the remaining factor {n}")
        out.append((n, 1))
    return tuple(out)


def prime_index(p: int) -> int:
    """Position of the prime ``p`` in the sequence 2, 3, 5, ... (0-based)."""
    ps = _small_primes()
    i = int(np.searchsorted(ps, p))
    if i >= len(ps) or ps[i] != p:
        raise ValueError(f"{p} is not a tabulated prime")
    return i


def is_power_of(n: int, p: int) -> int | None:
    """Return k with n == p**k, or None."""
    if n < 1:
        return None
    if n == 1:
        return 0
    if p == 2:
        k = n.bit_length() - 1
        return k if n == 1 << k else None
    k = max(0, int(round(math.log(n) / math.log(p))))
    for j in (k, k - 1, k + 1):
        if j >= 0 and p**j == n:
            return j
    return None
