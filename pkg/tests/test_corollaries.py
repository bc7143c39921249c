import pytest

from smoothpell.corollaries import (
    SolutionSet,
    consecutive_runs,
    dabrowski_check,
    exponent_stats,
    iroot,
    largest,
    largest_power_index,
    power_solutions,
    triangular_largest,
)
from smoothpell.errors import IncompleteSetError
from smoothpell.primes import gen_basis
from smoothpell.sieve import SearchConfig, SolutionRecord, run_search


@pytest.fixture(scope="module")
def k7_set():
    return SolutionSet.from_search(run_search(SearchConfig(bound=7)))


@pytest.fixture(scope="module")
def k13_set():
    return SolutionSet.from_search(run_search(SearchConfig(bound=13)))


def test_solution_set_rejects_bad_records():
    b = gen_basis(3)
    with pytest.raises(ValueError):
        SolutionSet(
            records=(SolutionRecord(x=10, d=11, n=1, exponents=(0, 0)),),
            basis=b,
            complete=True,
        )


def test_incomplete_set_refused(k7_set):
    partial = SolutionSet(records=k7_set.records, basis=k7_set.basis, complete=False)
    for op in (
        lambda s: largest(s, 3),
        lambda s: power_solutions(s, 2),
        lambda s: dabrowski_check(s, 1),
        lambda s: consecutive_runs(s, 1),
        lambda s: exponent_stats(s),
        lambda s: triangular_largest(s),
    ):
        with pytest.raises(IncompleteSetError):
            op(partial)


def test_iroot_exact():
    for n in [0, 1, 7, 8, 9, 63, 64, 65, 10**18, 2**60 - 1, 2**60]:
        for e in [1, 2, 3, 5, 10]:
            r = iroot(n, e)
            assert r**e <= n < (r + 1) ** e, (n, e)


def test_largest(k7_set):
    assert largest(k7_set, 3) == [8749, 4801, 449]
    assert largest(k7_set, 0) == []
    assert largest(k7_set, 1000)[-1] == 2


def test_power_solutions(k7_set):
    squares = power_solutions(k7_set, 2)
    assert (7, 49) in squares and (3, 9) in squares and (2, 4) in squares
    cubes = power_solutions(k7_set, 3)
    assert cubes == [(2, 8)]
    assert power_solutions(k7_set, 7) == []


def test_largest_power_index(k7_set):
    # 8 = 2^3 is in the set, nothing higher with root >= 2
    assert largest_power_index(k7_set, 2) == (3, 2)
    # 9 = 3^2 with root >= 3
    assert largest_power_index(k7_set, 3) == (2, 3)


def test_dabrowski_groups_small(k7_set):
    assert dabrowski_check(k7_set, 1) == [(3, (3,))]
    assert dabrowski_check(k7_set, 2) == [(5, (3, 1)), (7, (4, 1)), (17, (5, 2))]
    assert dabrowski_check(k7_set, 3) == [
        (11, (3, 1, 1)),
        (19, (3, 2, 1)),
        (31, (6, 1, 1)),
        (49, (5, 1, 2)),
        (161, (6, 4, 1)),
    ]
    assert dabrowski_check(k7_set, 4) == [
        (29, (3, 1, 1, 1)),
        (41, (4, 1, 1, 1)),
        (71, (4, 2, 1, 1)),
        (251, (3, 2, 3, 1)),
        (449, (7, 2, 2, 1)),
        (4801, (7, 1, 2, 4)),
        (8749, (3, 7, 4, 1)),
    ]


def test_dabrowski_disjoint_support(k13_set):
    seen = set()
    for k in range(1, k13_set.basis.size + 1):
        for x, _exps in dabrowski_check(k13_set, k):
            assert x not in seen
            seen.add(x)


def test_consecutive_runs_monotone(k13_set):
    prev = None
    for n in range(1, 9):
        cur = consecutive_runs(k13_set, n).start
        if prev is not None and cur is not None:
            assert cur <= prev
        prev = cur if cur is not None else prev


def test_consecutive_runs_k7_top_pair(k7_set):
    # 4374 = 2*3^7 and 4375 = 5^4*7: the classical largest 7-smooth pair
    run = consecutive_runs(k7_set, 1)
    assert run.start == 4374
    assert run.even_pair_start == 8748  # t-1 for the largest odd solution t = 8749
    assert run.odd_pair_start == 243  # s-1 for the largest even solution s = 244


def test_consecutive_runs_brute_force_agreement(k13_set):
    # independent check: scan every m <= 130000 for runs of smooth integers
    # (the largest 13-smooth pair starts at 123200, inside the window)
    from smoothpell.kernels import smooth_range_mask

    limit = 130_000
    smooth = smooth_range_mask(limit, k13_set.basis.primes)
    for n in range(1, 7):
        best = None
        for m in range(1, limit - n):
            if all(smooth[m + i] for i in range(n + 1)):
                best = m
        got = consecutive_runs(k13_set, n).start
        assert got == best, n


def test_exponent_stats_k7(k7_set):
    stats = exponent_stats(k7_set)
    assert stats.max_sum.x == 8749 and stats.max_sum.value == 15
    assert stats.max_single.x == 127 and stats.max_single.value == 8
    assert stats.max_single_prime == 2
    assert stats.max_support.value == 4
    assert stats.max_support.x == 8749 and stats.max_support.tie


def test_triangular_largest_toy_sets():
    b2 = gen_basis(2)
    s_t3 = SolutionSet(
        records=(SolutionRecord(x=3, d=2, n=1, exponents=(3,)),),
        basis=b2,
        complete=True,
    )
    assert triangular_largest(s_t3) == 1
    b3 = gen_basis(3)
    s_t7 = SolutionSet(
        records=(
            SolutionRecord(x=2, d=3, n=1, exponents=(0, 1)),
            SolutionRecord(x=3, d=2, n=1, exponents=(3, 0)),
            SolutionRecord(x=7, d=3, n=2, exponents=(4, 1)),
        ),
        basis=b3,
        complete=True,
    )
    assert triangular_largest(s_t7) == 6


def test_triangular_largest_k7(k7_set):
    # (8749^2 - 1)/8 must be triangular and 7-smooth
    tri = triangular_largest(k7_set)
    assert tri == (8749**2 - 1) // 8
