"""Exact arithmetic in Z[sqrt(d)]: periodic continued fractions, fundamental
Pell solutions, high-precision unit logarithms, and powering of solution
towers both exactly and modulo m.

All Pell work targets x^2 - d*y^2 = 1 over the order Z[sqrt(d)] (discriminant
4d).  When the continued-fraction period is odd the minimal unit has norm -1
and the fundamental Pell solution is its square.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import isqrt

import mpmath

from .errors import InvalidModulusError, SizeGuardExceeded

EXACT_DIGIT_LIMIT = 10**7  # default guard for exact tower expansion


@dataclass(frozen=True)
class QuadInt:
    """(a + b*sqrt(d)) / denom with denom in {1, 2}.

    With denom = 2 the pair must satisfy a == b*d (mod 2) so that the value
    lies in a lattice closed under multiplication.
    """

    a: int
    b: int
    denom: int
    d: int

    def __post_init__(self):
        if self.denom not in (1, 2):
            raise ValueError("denom must be 1 or 2")
        if self.denom == 2 and (self.a - self.b * self.d) % 2 != 0:
            raise ValueError("half-integer pair must satisfy a == b*d (mod 2)")

    def __mul__(self, other: "QuadInt") -> "QuadInt":
        if self.d != other.d:
            raise ValueError("mixed d")
        a = self.a * other.a + self.b * other.b * self.d
        b = self.a * other.b + self.b * other.a
        denom = self.denom * other.denom
        if denom == 4:
            # product of two half-integers is again half-integral here
            if a % 2 or b % 2:
                raise ValueError("product left the half-integer lattice")
            a, b, denom = a // 2, b // 2, 2
        return QuadInt(a, b, denom, self.d)

    def conjugate(self) -> "QuadInt":
        return QuadInt(self.a, -self.b, self.denom, self.d)

    def norm_num(self) -> int:
        """Numerator of the field norm: (a^2 - d*b^2) / denom^2 times denom^2."""
        return self.a * self.a - self.d * self.b * self.b


@dataclass(frozen=True)
class PellSolution:
    """Fundamental solution (x1, y1) of x^2 - d*y^2 = 1."""

    d: int
    x1: int
    y1: int

    def __post_init__(self):
        if self.x1 * self.x1 - self.d * self.y1 * self.y1 != 1:
            raise ValueError("not a Pell solution")
        if self.x1 < 2 or self.y1 < 1:
            raise ValueError("fundamental solution must have x1 >= 2, y1 >= 1")


@dataclass(frozen=True)
class CFExpansion:
    """sqrt(d) = [a0; period repeated], minimal period."""

    d: int
    a0: int
    period: tuple[int, ...]


def _check_d(d: int) -> int:
    if d < 2:
        raise InvalidModulusError(f"d must be >= 2, got {d}")
    s = isqrt(d)
    if s * s == d:
        raise InvalidModulusError(f"d = {d} is a perfect square")
    return s


def _cf_states(d: int, s: int):
    """Yield (P_k, Q_k, a_k) for k = 1, 2, ... where a_k is the partial
    quotient taken at state k.  The state sequence is purely periodic."""
    P, Q, a = 0, 1, s
    while True:
        P = a * Q - P
        Q = (d - P * P) // Q
        a = (P + s) // Q
        yield P, Q, a


def cf_expand(d: int) -> CFExpansion:
    """Continued fraction of sqrt(d): a0 and the full minimal period."""
    s = _check_d(d)
    period = []
    first = None
    for P, Q, a in _cf_states(d, s):
        if first is None:
            first = (P, Q)
        elif (P, Q) == first:
            break
        period.append(a)
    return CFExpansion(d=d, a0=s, period=tuple(period))


def iter_convergents(d: int):
    """Yield all convergents (p, q) of sqrt(d) in expansion order, starting
    with (a0, 1).  Consecutive q are non-decreasing (equal only at q = 1)."""
    s = _check_d(d)
    p_prev, p_cur = 1, s
    q_prev, q_cur = 0, 1
    yield p_cur, q_cur
    for _P, _Q, a in _cf_states(d, s):
        p_prev, p_cur = p_cur, a * p_cur + p_prev
        q_prev, q_cur = q_cur, a * q_cur + q_prev
        yield p_cur, q_cur


def convergents_below(d: int, bound: int) -> list[tuple[int, int]]:
    """Convergents p/q of sqrt(d) with q < bound, strictly increasing q.

    Where two consecutive convergents share q = 1 the first is kept, so the
    returned q are strictly increasing.
    """
    out: list[tuple[int, int]] = []
    for p, q in iter_convergents(d):
        if q >= bound:
            break
        if not out or q > out[-1][1]:
            out.append((p, q))
    return out


def fundamental_solution(d: int) -> PellSolution:
    """Minimal positive solution of x^2 - d*y^2 = 1 via the continued fraction.

    Odd period means the minimal unit has norm -1; the Pell solution is its
    square.
    """
    s = _check_d(d)
    p_prev, p_cur = 1, s
    q_prev, q_cur = 0, 1
    k = 0
    for _P, Q, a in _cf_states(d, s):
        k += 1
        if Q == 1:
            break
        p_prev, p_cur = p_cur, a * p_cur + p_prev
        q_prev, q_cur = q_cur, a * q_cur + q_prev
    # (p_cur, q_cur) now satisfies p^2 - d q^2 = (-1)^k
    if p_cur * p_cur - d * q_cur * q_cur == 1:
        return PellSolution(d=d, x1=p_cur, y1=q_cur)
    return PellSolution(d=d, x1=p_cur * p_cur + d * q_cur * q_cur, y1=2 * p_cur * q_cur)


def log_unit(s: PellSolution, precision: int = 96) -> mpmath.mpf:
    """log(x1 + y1*sqrt(d)) with absolute error below 2^(-precision/2).

    All conversions stay in arbitrary precision (mpmath rounds the big
    integers to the working mantissa from their bit representation); nothing
    is squeezed through a machine float.
    """
    with mpmath.workprec(precision + 32):
        val = mpmath.log(
            mpmath.mpf(s.x1) + mpmath.mpf(s.y1) * mpmath.sqrt(mpmath.mpf(s.d))
        )
        return +val


def pell_power_mod(x1m: int, y1m: int, n: int, d: int, m: int) -> tuple[int, int]:
    """(x_n mod m, y_n mod m) from residues of the fundamental solution.

    Uses only the integer doubling/addition identities
        x_{2k} = 2 x_k^2 - 1,          y_{2k} = 2 x_k y_k,
        x_{k+1} = x_k x_1 + d y_k y_1, y_{k+1} = x_k y_1 + y_k x_1,
    so no division is ever needed and m may be arbitrary >= 2.
    """
    if n < 1:
        raise ValueError("tower index must be >= 1")
    if m < 2:
        raise ValueError("modulus must be >= 2")
    x1m %= m
    y1m %= m
    dm = d % m
    x, y = x1m, y1m
    for bit in bin(n)[3:]:
        x, y = (2 * x * x - 1) % m, (2 * x * y) % m
        if bit == "1":
            x, y = (x * x1m + dm * y * y1m) % m, (x * y1m + y * x1m) % m
    return x, y


def pell_power_exact(s: PellSolution, n: int, digit_limit: int = EXACT_DIGIT_LIMIT) -> tuple[int, int]:
    """Exact (x_n, y_n) = components of (x1 + y1*sqrt(d))^n.

    Refuses when the estimated decimal size of x_n exceeds digit_limit.
    """
    if n < 1:
        raise ValueError("tower index must be >= 1")
    est_digits = n * (len(str(s.x1)) + 1)
    if est_digits > digit_limit:
        raise SizeGuardExceeded(
            f"x_{n} for d={s.d} would have ~{est_digits} digits (limit {digit_limit})"
        )
    x, y = s.x1, s.y1
    for bit in bin(n)[3:]:
        x, y = 2 * x * x - 1, 2 * x * y
        if bit == "1":
            x, y = x * s.x1 + s.d * y * s.y1, x * s.y1 + y * s.x1
    return x, y
