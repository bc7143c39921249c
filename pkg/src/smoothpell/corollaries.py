"""Read-only analytics over a complete solution set: largest solutions,
perfect-power solutions, first-k-primes factorizations, consecutive smooth
runs, exponent statistics, and the largest smooth triangular number.

Every operation re-verifies what it reports by direct trial division and
refuses to run on an incomplete set: a "largest" claim over a set with
audited gaps would be meaningless.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import isqrt

from .errors import IncompleteSetError
from .primes import SmoothBasis, is_smooth
from .sieve import SearchResult, SolutionRecord


@dataclass(frozen=True)
class SolutionSet:
    records: tuple[SolutionRecord, ...]
    basis: SmoothBasis
    complete: bool

    def __post_init__(self):
        prev = 1
        for rec in self.records:
            if rec.x <= prev:
                raise ValueError("records must be strictly increasing in x")
            prev = rec.x
            if not rec.verify(self.basis):
                raise ValueError(f"record x={rec.x} failed independent re-verification")

    @classmethod
    def from_search(cls, result: SearchResult) -> "SolutionSet":
        return cls(
            records=tuple(result.records),
            basis=result.basis,
            complete=result.complete,
        )


def _require_complete(s: SolutionSet):
    if not s.complete:
        raise IncompleteSetError(
            "operation requires a complete solution set (empty audit log)"
        )


def largest(s: SolutionSet, count: int) -> list[int]:
    """Top `count` solutions by x, descending."""
    _require_complete(s)
    if count <= 0:
        return []
    return [rec.x for rec in s.records[-count:]][::-1]


def iroot(n: int, e: int) -> int:
    """floor(n ** (1/e)) exactly."""
    if n < 0 or e < 1:
        raise ValueError("iroot needs n >= 0, e >= 1")
    if e == 1 or n < 2:
        return n
    r = int(round(n ** (1.0 / e)))
    while r > 0 and r**e > n:
        r -= 1
    while (r + 1) ** e <= n:
        r += 1
    return r


def power_solutions(s: SolutionSet, e: int) -> list[tuple[int, int]]:
    """Records whose x is a perfect e-th power, as (root, x) pairs ascending.

    root**(2e) - 1 is smooth iff root**e appears in the set, since
    r^(2e) - 1 = (r^e)^2 - 1."""
    _require_complete(s)
    if e < 1:
        raise ValueError("power must be >= 1")
    out = []
    for rec in s.records:
        r = iroot(rec.x, e)
        if r**e == rec.x:
            out.append((r, rec.x))
    return out


def largest_power_index(s: SolutionSet, min_root: int = 2) -> tuple[int, int] | None:
    """The largest e such that some root >= min_root has root**e in the set,
    with the witnessing root; None when even e = 1 has no witness."""
    _require_complete(s)
    xs = {rec.x for rec in s.records}
    if not xs:
        return None
    top = max(xs)
    best: tuple[int, int] | None = None
    e = 1
    while min_root**e <= top:
        for x in xs:
            r = iroot(x, e)
            if r >= min_root and r**e == x:
                best = (e, r)
                break
        e += 1
    return best


def dabrowski_check(s: SolutionSet, k: int) -> list[tuple[int, tuple[int, ...]]]:
    """Solutions of x^2 - 1 = p_1^a1 * ... * p_k^ak with every a_i >= 1:
    exactly the records whose exponent support is the first k basis primes."""
    _require_complete(s)
    if not 1 <= k <= s.basis.size:
        raise ValueError(f"k must be in 1..{s.basis.size}")
    out = []
    for rec in s.records:
        exps = rec.exponents
        if all(e >= 1 for e in exps[:k]) and all(e == 0 for e in exps[k:]):
            out.append((rec.x, tuple(exps[:k])))
    return out


@dataclass(frozen=True)
class RunResult:
    """Answer for "largest x with x, x+1, ..., x+n all smooth"."""

    length_requested: int
    start: int | None
    # gap-2 variants (independent of n): largest consecutive even smooth pair
    # starts at largest_odd - 1, largest consecutive odd pair at largest_even - 1
    even_pair_start: int | None
    odd_pair_start: int | None


def _pair_starts(s: SolutionSet) -> list[int]:
    # every odd solution x gives the consecutive smooth pair (x-1)/2, (x+1)/2
    return sorted({(rec.x - 1) // 2 for rec in s.records if rec.x % 2 == 1})


def consecutive_runs(s: SolutionSet, n: int) -> RunResult:
    """Largest start of a run of n+1 consecutive smooth integers, built from
    the consecutive-smooth pairs contributed by odd solutions and merged at
    overlaps.  Verifies the winning run by direct trial division."""
    _require_complete(s)
    if n < 1:
        raise ValueError("run length parameter must be >= 1")
    starts = _pair_starts(s)
    best: int | None = None
    i = 0
    while i < len(starts):
        j = i
        while j + 1 < len(starts) and starts[j + 1] == starts[j] + 1:
            j += 1
        block_len = j - i + 1  # consecutive pair-starts: smooth run length block_len+1
        if block_len >= n:
            candidate = starts[i] + block_len - n  # largest window start inside the run
            if best is None or candidate > best:
                best = candidate
        i = j + 1

    if best is not None:
        for m in range(best, best + n + 1):
            if not is_smooth(m, s.basis):
                raise ValueError(f"run verification failed at {m}")

    odd = [rec.x for rec in s.records if rec.x % 2 == 1]
    even = [rec.x for rec in s.records if rec.x % 2 == 0]
    return RunResult(
        length_requested=n,
        start=best,
        even_pair_start=(max(odd) - 1) if odd else None,
        odd_pair_start=(max(even) - 1) if even else None,
    )


@dataclass(frozen=True)
class ExtremalStat:
    x: int
    value: int
    tie: bool


@dataclass(frozen=True)
class ExponentStats:
    max_support: ExtremalStat
    max_sum: ExtremalStat
    max_single: ExtremalStat
    max_single_prime: int


def exponent_stats(s: SolutionSet) -> ExponentStats:
    """The records with the most distinct primes, the largest exponent total,
    and the single largest exponent; ties broken toward larger x and flagged."""
    _require_complete(s)
    if not s.records:
        raise ValueError("empty solution set")

    def extremal(keyfn):
        best_val = -1
        best_x = -1
        tie = False
        for rec in s.records:
            v = keyfn(rec)
            if v > best_val:
                best_val, best_x, tie = v, rec.x, False
            elif v == best_val:
                tie = True
                best_x = max(best_x, rec.x)
        return ExtremalStat(x=best_x, value=best_val, tie=tie)

    support = extremal(lambda r: sum(1 for e in r.exponents if e))
    total = extremal(lambda r: sum(r.exponents))
    single = extremal(lambda r: max(r.exponents))
    prime = 0
    for rec in s.records:
        if rec.x == single.x:
            idx = max(range(len(rec.exponents)), key=lambda i: rec.exponents[i])
            prime = s.basis.primes[idx]
    return ExponentStats(
        max_support=support, max_sum=total, max_single=single, max_single_prime=prime
    )


def triangular_largest(s: SolutionSet) -> int:
    """(t^2 - 1)/8 for t the largest odd solution: the largest smooth
    triangular number.  Verified triangular and smooth before returning."""
    _require_complete(s)
    odd = [rec.x for rec in s.records if rec.x % 2 == 1]
    if not odd:
        raise ValueError("no odd solutions in the set")
    t = max(odd)
    tri = (t * t - 1) // 8
    k = (t - 1) // 2
    if tri != k * (k + 1) // 2:
        raise ValueError("triangular identity failed")
    if not is_smooth(tri, s.basis):
        raise ValueError("triangular candidate is not smooth")
    return tri
