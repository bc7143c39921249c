"""The main search: for every nonempty subset of the prime basis, solve the
Pell equation x^2 - d y^2 = 1 for d the subset product, bound the solution
tower by the Primitive Divisor Theorem, test each tower member for smoothness
without ever expanding it, and emit verified solution records.

A solution at tower index n exists iff y_n is fully smooth; since y_1 | y_n,
a non-smooth y_1 kills the whole tower, and more generally a non-smooth y_k
kills every y_{k*l}.  Candidate indices pass a logarithmic size test first
and are then confirmed exactly: y_n smooth with smooth part z_n means
x_n = sqrt(d*z_n^2 + 1) must be an integer, which is checked with exact
integer arithmetic.  Float drift therefore cannot create or destroy a
solution; it can only trip the loud forbidden-band diagnostic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from math import isqrt, log

from .errors import (
    ForbiddenBandError,
    InconsistentSearchError,
    InternalLimitError,
    SizeGuardExceeded,
)
from .infrastructure import (
    DEFAULT_GIANT_BUDGET,
    compact_eval_mod,
    compact_rep_build,
    regulator_bsgs,
)
from .primes import ExponentVector, SmoothBasis, gen_basis, recompose, smooth_split, valuation
from .quadfield import (
    PellSolution,
    fundamental_solution,
    iter_convergents,
    log_unit,
    pell_power_mod,
)

VALUATION_C_CAP = 1 << 20
CHUNK_SIZE = 256


class Verdict(Enum):
    VERIFIED = "verified"
    REFUTED_SOLUTION_FREE = "refuted-solution-free"
    INCONSISTENT = "inconsistent"


@dataclass(frozen=True)
class SolutionRecord:
    """One solution x, with its Pell provenance (d, tower index n) and the
    exponent vector of x^2 - 1 over the search basis."""

    x: int
    d: int
    n: int
    exponents: ExponentVector

    def verify(self, basis: SmoothBasis) -> bool:
        """Re-derive everything by trial division; trusts nothing upstream."""
        if self.x < 2 or self.n < 1:
            return False
        value = self.x * self.x - 1
        smooth, cofactor, exps = smooth_split(value, basis)
        if cofactor != 1 or exps != tuple(self.exponents):
            return False
        squarefree_part = recompose(tuple(e % 2 for e in exps), basis)
        return squarefree_part == self.d


@dataclass(frozen=True)
class SearchConfig:
    bound: int
    c_start: int = 15
    approx_tol: float = 0.5
    exact_path_threshold: float = 5e4
    giant_step_budget: int = DEFAULT_GIANT_BUDGET
    worker_count: int = 1
    checkpoint_path: str | None = None
    mode: str = "auto"

    def __post_init__(self):
        if self.bound < 2:
            raise ValueError("bound must be >= 2")
        if not 0 < self.approx_tol < 2.3:
            raise ValueError("approx_tol must lie in (0, 2.3)")
        if self.c_start < 1:
            raise ValueError("c_start must be >= 1")
        if self.mode not in ("auto", "exact", "compact"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.worker_count < 1:
            raise ValueError("worker_count must be >= 1")


@dataclass
class Diagnostics:
    """Aggregated log-test telemetry; the forbidden band must stay empty."""

    log_tests: int = 0
    max_pass_value: float = 0.0
    min_fail_value: float = math.inf
    convergent_checks: int = 0
    inconsistent_verdicts: int = 0

    def record(self, value: float, passed: bool):
        self.log_tests += 1
        if passed:
            self.max_pass_value = max(self.max_pass_value, value)
        else:
            self.min_fail_value = min(self.min_fail_value, value)

    def merge(self, other: "Diagnostics"):
        self.log_tests += other.log_tests
        self.max_pass_value = max(self.max_pass_value, other.max_pass_value)
        self.min_fail_value = min(self.min_fail_value, other.min_fail_value)
        self.convergent_checks += other.convergent_checks
        self.inconsistent_verdicts += other.inconsistent_verdicts


def next_prime_above(k: int) -> int:
    n = k + 1
    while True:
        if n >= 2 and all(n % i for i in range(2, isqrt(n) + 1)):
            return n
        n += 1


def separation_gap(basis: SmoothBasis) -> float:
    """log of the smallest prime outside the basis: any non-smooth cofactor
    of a tower member is at least this large."""
    return log(next_prime_above(basis.bound))


def n_max(basis: SmoothBasis) -> int:
    """Largest tower index that can possibly be smooth over the basis.

    For n > 12, u_n = y_n/y_1 has a primitive divisor p == +-1 (mod n), so
    p >= n - 1; once n - 1 exceeds the largest basis prime that divisor is
    outside the basis and y_n cannot be smooth."""
    return max(12, basis.primes[-1] + 1)


class ExactUnitAccess:
    """Residues of the fundamental solution from exact big integers."""

    def __init__(self, sol: PellSolution):
        self.sol = sol
        self._cache: dict[int, tuple[int, int]] = {}

    def residues(self, m: int) -> tuple[int, int]:
        hit = self._cache.get(m)
        if hit is None:
            hit = (self.sol.x1 % m, self.sol.y1 % m)
            self._cache[m] = hit
        return hit


class CompactUnitAccess:
    """Residues of the fundamental solution from a compact representation."""

    def __init__(self, rep):
        self.rep = rep
        self._cache: dict[int, tuple[int, int]] = {}

    def residues(self, m: int) -> tuple[int, int]:
        hit = self._cache.get(m)
        if hit is None:
            hit = compact_eval_mod(self.rep, m)
            self._cache[m] = hit
        return hit


def _tower_valuations(d, access, basis, n, c_start) -> tuple[int, ExponentVector]:
    """Smooth part and exponent vector of y_n, from modular data only.

    First y_n mod v (v = product of basis primes) decides which primes
    divide; each dividing prime's valuation is pinned modulo p^c, doubling c
    while the residue keeps vanishing."""
    x1v, y1v = access.residues(basis.v)
    yn_v = pell_power_mod(x1v, y1v, n, d, basis.v)[1] if n > 1 else y1v
    exps = [0] * basis.size
    z = 1
    for i, p in enumerate(basis.primes):
        if yn_v % p:
            continue
        c = c_start
        while True:
            m = p**c
            x1m, y1m = access.residues(m)
            ynm = pell_power_mod(x1m, y1m, n, d, m)[1] if n > 1 else y1m
            if ynm:
                break
            c *= 2
            if c > VALUATION_C_CAP:
                raise InternalLimitError(
                    f"valuation modulus cap hit at p={p}, n={n}, d={d}"
                )
        e = valuation(ynm, p)
        exps[i] = e
        z *= p**e
    return z, tuple(exps)


def smooth_valuations_of_y(d, access, basis: SmoothBasis, c_start: int = 15):
    """Smooth part z of y_1 and its exponent vector over the basis."""
    return _tower_valuations(d, access, basis, 1, c_start)


def _log_test_value(rstar_n: float, d: int, z: int) -> float:
    return abs(rstar_n - log(2) - 0.5 * log(d) - log(z))


def _classify(value: float, tol: float, gap: float, diag: Diagnostics | None, d, n) -> bool:
    """True = smooth at this index; False = refuted; forbidden band raises."""
    if value < tol:
        if diag is not None:
            diag.record(value, True)
        return True
    if value <= gap - tol:
        raise ForbiddenBandError(
            f"log test landed in the forbidden band ({tol}, {gap - tol:.4f}): "
            f"value {value:.6f} at d={d}, n={n}"
        )
    if diag is not None:
        diag.record(value, False)
    return False


def unconditional_check(
    d: int,
    rstar: float,
    z: int,
    tol: float = 0.5,
    gap: float = math.log(101),
    diag: Diagnostics | None = None,
) -> Verdict:
    """The fundamental-solution check that removes any dependence on how the
    regulator was obtained.

    Every convergent denominator q < z is tested against the Pell equation: a
    hit would mean the "fundamental" solution we used was not minimal, which
    the unconditional regulator rules out, so a hit is reported as
    INCONSISTENT and treated by callers as a whole-pipeline failure.  The log
    size test then decides between y_1 = z (VERIFIED) and y_1 carrying a
    non-smooth cofactor (REFUTED_SOLUTION_FREE)."""
    if z >= 2:
        for p, q in iter_convergents(d):
            if q >= z:
                break
            if p * p - d * q * q == 1:
                if diag is not None:
                    diag.inconsistent_verdicts += 1
                return Verdict.INCONSISTENT
    if diag is not None:
        diag.convergent_checks += 1
    if _classify(_log_test_value(rstar, d, z), tol, gap, diag, d, 1):
        return Verdict.VERIFIED
    return Verdict.REFUTED_SOLUTION_FREE


def _unit_access_for(d: int, rstar: float, config: SearchConfig):
    """Pick the exact or compact route for residues of (x1, y1)."""
    mode = config.mode
    if mode == "auto":
        mode = "exact" if rstar < config.exact_path_threshold else "compact"
    if mode == "exact":
        if rstar > max(4 * config.exact_path_threshold, 2e5):
            raise SizeGuardExceeded(
                f"exact path forced but R*={rstar:.0f} is too large for d={d}"
            )
        sol = fundamental_solution(d)
        if abs(float(log_unit(sol)) - rstar) > 1e-5:
            raise InconsistentSearchError(
                f"continued-fraction unit and BSGS regulator disagree for d={d}"
            )
        return ExactUnitAccess(sol)
    rep = compact_rep_build(d, rstar)
    return CompactUnitAccess(rep)


def scan_d(
    d: int,
    config: SearchConfig,
    basis: SmoothBasis,
    diag: Diagnostics | None = None,
) -> list[SolutionRecord]:
    """All solutions arising from the Pell tower of one squarefree smooth d."""
    if d < 2:
        raise ValueError("d must be >= 2")
    tol = config.approx_tol
    gap = separation_gap(basis)
    if not tol < gap / 2:
        raise ValueError(
            f"approx_tol {tol} leaves no forbidden band below the separation gap {gap:.3f}"
        )
    rstar = regulator_bsgs(d, budget=config.giant_step_budget)
    access = _unit_access_for(d, rstar, config)

    z1, _ = smooth_valuations_of_y(d, access, basis, config.c_start)
    verdict = unconditional_check(d, rstar, z1, tol, gap, diag)
    if verdict is Verdict.INCONSISTENT:
        raise InconsistentSearchError(
            f"a convergent below z solved the Pell equation for d={d}"
        )

    records: list[SolutionRecord] = []
    if verdict is Verdict.REFUTED_SOLUTION_FREE:
        return records

    records.append(_confirmed_record(d, 1, z1, basis))
    limit = n_max(basis)
    bad = [False] * (limit + 1)
    for n in range(2, limit + 1):
        if any(bad[k] for k in range(2, n) if n % k == 0):
            continue
        zn, _ = _tower_valuations(d, access, basis, n, config.c_start)
        value = _log_test_value(n * rstar, d, zn)
        if not _classify(value, tol, gap, diag, d, n):
            bad[n] = True
            continue
        records.append(_confirmed_record(d, n, zn, basis))
    return records


def _confirmed_record(d: int, n: int, zn: int, basis: SmoothBasis) -> SolutionRecord:
    # exact confirmation: y_n smooth with smooth part z_n forces
    # d*z_n^2 + 1 to be a perfect square, namely x_n^2
    x = isqrt(d * zn * zn + 1)
    if x * x - d * zn * zn != 1:
        raise ForbiddenBandError(
            f"log test passed but exact confirmation failed at d={d}, n={n}"
        )
    return _make_record(x, d, n, basis)


def _make_record(x: int, d: int, n: int, basis: SmoothBasis) -> SolutionRecord:
    value = x * x - 1
    smooth, cofactor, exps = smooth_split(value, basis)
    if cofactor != 1:
        raise InconsistentSearchError(
            f"claimed solution x={x} has non-smooth cofactor {cofactor}"
        )
    if recompose(tuple(e % 2 for e in exps), basis) != d:
        raise InconsistentSearchError(
            f"squarefree part of x^2-1 does not equal d={d} for x={x}"
        )
    return SolutionRecord(x=x, d=d, n=n, exponents=exps)


# --- full search ------------------------------------------------------------


@dataclass(frozen=True)
class AuditEntry:
    """A modulus that was skipped instead of scanned; any nonempty audit list
    voids every exhaustiveness claim downstream."""

    d: int
    reason: str


@dataclass
class SearchResult:
    basis: SmoothBasis
    records: list[SolutionRecord]
    audit: list[AuditEntry]
    diagnostics: Diagnostics

    @property
    def complete(self) -> bool:
        return not self.audit


def _mask_to_d(mask: int, primes: tuple[int, ...]) -> int:
    d = 1
    i = 0
    while mask:
        if mask & 1:
            d *= primes[i]
        mask >>= 1
        i += 1
    return d


def scan_chunk(
    chunk_id: int, config: SearchConfig, basis: SmoothBasis
) -> tuple[int, list[SolutionRecord], list[AuditEntry], Diagnostics]:
    """Scan masks [chunk_id*CHUNK_SIZE, ...) of the subset enumeration; the
    unit of parallelism and of checkpointing."""
    total = (1 << basis.size) - 1
    lo = max(1, chunk_id * CHUNK_SIZE)
    hi = min(total, (chunk_id + 1) * CHUNK_SIZE - 1)
    records: list[SolutionRecord] = []
    audit: list[AuditEntry] = []
    diag = Diagnostics()
    for mask in range(lo, hi + 1):
        d = _mask_to_d(mask, basis.primes)
        if d < 2:
            continue
        try:
            records.extend(scan_d(d, config, basis, diag))
        except (SizeGuardExceeded, InternalLimitError) as exc:
            audit.append(AuditEntry(d=d, reason=f"{type(exc).__name__}: {exc}"))
        except Exception as exc:
            exc.args = (f"[d={d}] {exc}",) + exc.args[1:]
            raise
    return chunk_id, records, audit, diag


def chunk_count(basis: SmoothBasis) -> int:
    total = (1 << basis.size) - 1
    return (total + CHUNK_SIZE) // CHUNK_SIZE


def _scan_chunk_star(args):
    return scan_chunk(*args)


def run_search(
    config: SearchConfig,
    checkpoint=None,
    progress=None,
) -> SearchResult:
    """Union of scan_d over every nonempty subset of the basis.

    Deterministic: records are merged order-insensitively and sorted by x at
    the end, so worker count and interruption pattern cannot change the
    output.  `checkpoint`, when given, must provide completed_ids() and
    store_chunk()/load_chunk() (see resultfile.Checkpoint); completed chunks
    are loaded instead of re-scanned.

    Budget overruns never vanish silently: each skipped d lands in the audit
    list, and complete=True requires that list to be empty."""
    basis = gen_basis(config.bound)
    nchunks = chunk_count(basis)
    done: dict[int, tuple[list[SolutionRecord], list[AuditEntry]]] = {}
    diag = Diagnostics()

    if checkpoint is not None:
        for cid in checkpoint.completed_ids():
            if cid >= nchunks:
                raise ValueError(f"checkpoint contains out-of-range chunk {cid}")
            done[cid] = checkpoint.load_chunk(cid)

    todo = [cid for cid in range(nchunks) if cid not in done]
    tasks = [(cid, config, basis) for cid in todo]

    def consume(result):
        cid, records, audit, chunk_diag = result
        diag.merge(chunk_diag)
        done[cid] = (records, audit)
        if checkpoint is not None:
            checkpoint.store_chunk(cid, records, audit)
        if progress is not None:
            progress(cid, len(done), nchunks, len(records))

    if config.worker_count > 1 and len(tasks) > 1:
        import multiprocessing

        with multiprocessing.Pool(config.worker_count) as pool:
            for result in pool.imap_unordered(_scan_chunk_star, tasks):
                consume(result)
    else:
        for t in tasks:
            consume(scan_chunk(*t))

    records: list[SolutionRecord] = []
    audit: list[AuditEntry] = []
    for cid in range(nchunks):
        chunk_records, chunk_audit = done[cid]
        records.extend(chunk_records)
        audit.extend(chunk_audit)

    records.sort(key=lambda r: r.x)
    for earlier, later in zip(records, records[1:]):
        if earlier.x == later.x:
            raise InconsistentSearchError(
                f"duplicate solution x={earlier.x} from d={earlier.d} and d={later.d}"
            )
    audit.sort(key=lambda a: a.d)
    return SearchResult(basis=basis, records=records, audit=audit, diagnostics=diag)


# --- independent oracle -------------------------------------------------------


def brute_force_oracle(limit: int, basis: SmoothBasis) -> list[int]:
    """All 2 <= x <= limit with x^2 - 1 smooth over the basis, by direct
    trial division.  Entirely independent of the Pell machinery."""
    if limit < 2:
        return []
    from . import kernels

    if limit <= kernels.INT64_X_LIMIT:
        mask = kernels.smooth_x2m1_mask(limit, basis.primes)
        import numpy as np

        return [int(x) for x in np.nonzero(mask)[0]]
    out = []
    for x in range(2, limit + 1):  # pragma: no cover - beyond int64, rare
        n = x * x - 1
        for p in basis.primes:
            while n % p == 0:
                n //= p
            if n == 1:
                break
        if n == 1:
            out.append(x)
    return out


def tower_index_of(x: int, d: int, y: int) -> int:
    """The index n with (x, y) = (x_n, y_n) in the tower of d's fundamental
    solution.  Cheap because x_1 <= x: the continued fraction reaches the
    fundamental solution within O(log x) convergents."""
    for p, q in iter_convergents(d):
        if p * p - d * q * q == 1:
            x1, y1 = p, q
            break
        if p > x:
            raise ValueError(f"(x={x}, y={y}) is not a Pell solution for d={d}")
    xn, yn, n = x1, y1, 1
    while xn < x:
        xn, yn = xn * x1 + d * yn * y1, xn * y1 + yn * x1
        n += 1
    if (xn, yn) != (x, y):
        raise ValueError(f"(x={x}, y={y}) not found in the tower of d={d}")
    return n


def oracle_records(limit: int, basis: SmoothBasis) -> list[SolutionRecord]:
    """Brute-force solutions with full provenance (d, n, exponents), suitable
    for record-level diffing against search output."""
    out = []
    for x in brute_force_oracle(limit, basis):
        value = x * x - 1
        _, cofactor, exps = smooth_split(value, basis)
        assert cofactor == 1
        d = recompose(tuple(e % 2 for e in exps), basis)
        y = isqrt(value // d)
        n = tower_index_of(x, d, y)
        out.append(SolutionRecord(x=x, d=d, n=n, exponents=exps))
    return out
