"""Prime basis generation and exact smoothness arithmetic on big integers.

Everything here works on Python ints of arbitrary size; the only factoring
method is trial division over a fixed small prime basis.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import prod

from .errors import InvalidBoundError, UndefinedValuationError

ExponentVector = tuple[int, ...]


@dataclass(frozen=True)
class SmoothBasis:
    """The ordered primes p_1 < ... < p_t <= bound, plus their product v."""

    bound: int
    primes: tuple[int, ...]
    v: int

    def __post_init__(self):
        if not self.primes:
            raise InvalidBoundError(f"no primes <= {self.bound}")
        if list(self.primes) != sorted(set(self.primes)):
            raise ValueError("basis primes must be strictly increasing")
        if self.v != prod(self.primes):
            raise ValueError("v must equal the product of the basis primes")

    @property
    def size(self) -> int:
        return len(self.primes)

    def index_of(self, p: int) -> int:
        return self.primes.index(p)


def _sieve(limit: int) -> list[int]:
    if limit < 2:
        return []
    flags = bytearray([1]) * (limit + 1)
    flags[0] = flags[1] = 0
    for i in range(2, int(limit**0.5) + 1):
        if flags[i]:
            flags[i * i :: i] = bytearray(len(flags[i * i :: i]))
    return [i for i in range(2, limit + 1) if flags[i]]


def gen_basis(k: int) -> SmoothBasis:
    """All primes <= k, in increasing order, with their product precomputed."""
    if k < 2:
        raise InvalidBoundError(f"bound must be >= 2, got {k}")
    primes = tuple(_sieve(k))
    return SmoothBasis(bound=k, primes=primes, v=prod(primes))


def valuation(n: int, p: int) -> int:
    """Largest e with p^e | n.  Undefined (raises) for n = 0."""
    if n == 0:
        raise UndefinedValuationError("valuation of 0 is undefined")
    n = abs(n)
    if n % p:
        return 0
    # binary ladder of p-powers keeps the division count at O(log e)
    ladder = [p]
    while ladder[-1] ** 2 <= n:
        ladder.append(ladder[-1] ** 2)
    e = 0
    for i in reversed(range(len(ladder))):
        pk = ladder[i]
        while n % pk == 0:
            n //= pk
            e += 1 << i
    return e


def smooth_split(n: int, basis: SmoothBasis) -> tuple[int, int, ExponentVector]:
    """Split |n| = smooth_part * cofactor with gcd(cofactor, v) = 1.

    Returns (smooth_part, cofactor, exponents); smooth_part is the product of
    basis primes to their exact multiplicities in |n|.
    """
    if n == 0:
        raise UndefinedValuationError("cannot split 0 over a prime basis")
    rem = abs(n)
    exps = []
    smooth = 1
    for p in basis.primes:
        e = 0
        while rem % p == 0:
            rem //= p
            e += 1
        if e:
            smooth *= p**e
        exps.append(e)
    return smooth, rem, tuple(exps)


def is_smooth(n: int, basis: SmoothBasis) -> bool:
    """True iff |n| has no prime factor outside the basis (|n| = 1 counts)."""
    if n == 0:
        raise UndefinedValuationError("smoothness of 0 is undefined here")
    rem = abs(n)
    for p in basis.primes:
        while rem % p == 0:
            rem //= p
        if rem == 1:
            return True
    return rem == 1


def recompose(exponents: ExponentVector, basis: SmoothBasis) -> int:
    """Product of basis primes raised to the given exponents."""
    if len(exponents) != basis.size:
        raise ValueError("exponent vector length does not match basis size")
    return prod(p**e for p, e in zip(basis.primes, exponents))
