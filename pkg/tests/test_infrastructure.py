import math
import random
from math import isqrt

import pytest

from smoothpell.errors import (
    CompactRepError,
    CorruptRepresentationError,
    InvalidModulusError,
    RegulatorBudgetExceeded,
)
from smoothpell.infrastructure import (
    CompactRep,
    ReducedForm,
    compact_eval_log,
    compact_eval_mod,
    compact_rep_build,
    giant_step,
    principal_form,
    regulator_bsgs,
    rho_step,
)
from smoothpell.quadfield import fundamental_solution, log_unit


def squarefree_sample(rng, lo, hi, count):
    out = []
    while len(out) < count:
        d = rng.randrange(lo, hi)
        if isqrt(d) ** 2 == d:
            continue
        n, sf = d, True
        for p in range(2, 1000):
            if p * p > n:
                break
            if n % (p * p) == 0:
                sf = False
                break
        if sf:
            out.append(d)
    return out


def test_principal_form_examples():
    f3 = principal_form(3)
    assert (f3.a, f3.b, f3.c) == (1, 2, -2)
    assert f3.distance == 0.0
    f2 = principal_form(2)
    assert (f2.a, f2.b, f2.c) == (1, 2, -1)
    assert principal_form(9871).distance == 0.0


def test_principal_form_rejects_squares():
    with pytest.raises(InvalidModulusError):
        principal_form(16)


def reduced_ok(f: ReducedForm) -> bool:
    d = f.d
    s = isqrt(d)
    P, Q = f.state()
    return Q > 0 and 1 <= P <= s and s - P + 1 <= Q <= s + P


def test_rho_step_walks_cycle_with_positive_increments():
    for d in [2, 3, 7, 19, 61, 94, 151]:
        f = principal_form(d)
        start = f.state()
        seen = 0
        bound = math.log(4 * d)
        while True:
            g = rho_step(f)
            assert g.distance > f.distance
            assert g.distance - f.distance < bound
            assert reduced_ok(g)
            f = g
            seen += 1
            if f.state() == start:
                break
            assert seen < 10000
        # closure distance is log of the minimal unit (of either norm)
        sol = fundamental_solution(d)
        rstar = float(log_unit(sol))
        assert abs(f.distance - rstar) < 1e-9 or abs(2 * f.distance - rstar) < 1e-9, d


def test_rho_closure_values():
    # d=3: unit 2+sqrt(3) has norm +1, cycle closes at R* itself
    f = principal_form(3)
    f = rho_step(rho_step(f))
    assert f.state() == principal_form(3).state()
    assert abs(f.distance - math.log(2 + math.sqrt(3))) < 1e-12
    # d=2: unit 1+sqrt(2) has norm -1, cycle closes at R*/2
    f = principal_form(2)
    f = rho_step(f)
    assert f.state() == principal_form(2).state()
    assert abs(f.distance - math.log(1 + math.sqrt(2))) < 1e-12


def walk_states(d, max_steps=4000):
    f = principal_form(d)
    start = f.state()
    out = [f]
    while True:
        f = rho_step(f)
        if f.state() == start:
            return out, f.distance
        out.append(f)
        assert len(out) < max_steps


def test_giant_step_identity():
    for d in [3, 7, 61, 9871]:
        states, _r0 = walk_states(d)
        e = states[0]
        for f in states[1 : min(6, len(states))]:
            g = giant_step(e, f)
            assert g.state() == f.state()
            assert abs(g.distance - f.distance) < 1e-9


def circ_diff(a, b, r0):
    dev = abs(a - b) % r0
    return min(dev, r0 - dev)


def test_giant_step_doubling_against_baby_walk():
    rng = random.Random(3)
    for d in squarefree_sample(rng, 300, 10**4, 30):
        states, r0 = walk_states(d)
        if len(states) < 4:
            continue
        f = states[len(states) // 2]
        g = giant_step(f, f)
        # distance lands within log(4d) of 2*distance(f), modulo the cycle
        assert circ_diff(g.distance, 2 * f.distance, r0) < math.log(4 * d) + 1e-6, d
        # and the landed form is the cycle state at that tracked distance
        match = [h for h in states if h.state() == g.state()]
        assert match and any(circ_diff(h.distance, g.distance, r0) < 1e-6 for h in match), d


def test_giant_step_associativity_up_to_rho():
    rng = random.Random(17)
    for d in squarefree_sample(rng, 300, 5000, 10):
        states, r0 = walk_states(d)
        if len(states) < 7:
            continue
        a, b, c = states[1], states[len(states) // 3], states[2 * len(states) // 3]
        lhs = giant_step(giant_step(a, b), c)
        rhs = giant_step(a, giant_step(b, c))
        dev = (lhs.distance - rhs.distance) % r0
        dev = min(dev, r0 - dev)
        assert dev < 2 * math.log(4 * d) + 1e-6, d


def test_regulator_examples():
    assert abs(regulator_bsgs(3) - math.log(2 + math.sqrt(3))) < 1e-9
    assert abs(regulator_bsgs(5) - math.log(9 + 4 * math.sqrt(5))) < 1e-9
    assert abs(regulator_bsgs(2) - math.log(3 + 2 * math.sqrt(2))) < 1e-9


def test_regulator_agrees_with_cf_exhaustive_small():
    for d in range(2, 2000):
        if isqrt(d) ** 2 == d:
            continue
        want = float(log_unit(fundamental_solution(d)))
        got = regulator_bsgs(d)
        assert abs(got - want) < 1e-6, d


def test_regulator_agrees_with_cf_random_medium():
    rng = random.Random(23)
    for d in squarefree_sample(rng, 10**4, 10**7, 60):
        want = float(log_unit(fundamental_solution(d)))
        got = regulator_bsgs(d)
        assert abs(got - want) < 1e-6, d


def test_regulator_budget_error():
    # d with a large regulator: a tiny budget must fail loudly, not silently
    with pytest.raises(RegulatorBudgetExceeded):
        regulator_bsgs(100000004091, budget=20)


def test_compact_rep_d3_single_level():
    r = regulator_bsgs(3)
    rep = compact_rep_build(3, r)
    assert rep.k == 1
    a, b, dj = rep.parts[0]
    assert (a + b * math.sqrt(3)) / (2 * dj) == pytest.approx(2 + math.sqrt(3))
    assert compact_eval_mod(rep, 101) == (2, 1)


def test_compact_rep_d5_even_modulus():
    rep = compact_rep_build(5, regulator_bsgs(5))
    assert compact_eval_mod(rep, 4) == (9 % 4, 4 % 4)


def test_compact_eval_log_examples():
    rep3 = compact_rep_build(3, regulator_bsgs(3))
    assert abs(compact_eval_log(rep3) - math.log(2 + math.sqrt(3))) < 1e-6
    rep2 = compact_rep_build(2, regulator_bsgs(2))
    assert abs(compact_eval_log(rep2) - math.log(3 + 2 * math.sqrt(2))) < 1e-6


def test_compact_roundtrip_random_small():
    rng = random.Random(41)
    for d in squarefree_sample(rng, 2, 3000, 60):
        sol = fundamental_solution(d)
        rstar = regulator_bsgs(d)
        rep = compact_rep_build(d, rstar)
        for _ in range(4):
            m = rng.randrange(2, 10**9)
            assert compact_eval_mod(rep, m) == (sol.x1 % m, sol.y1 % m), (d, m)
        assert abs(compact_eval_log(rep) - float(log_unit(sol))) < 1e-4


def test_compact_roundtrip_random_medium():
    rng = random.Random(43)
    for d in squarefree_sample(rng, 10**5, 10**6, 25):
        sol = fundamental_solution(d)
        rep = compact_rep_build(d, regulator_bsgs(d))
        for _ in range(3):
            m = rng.randrange(2, 10**9)
            assert compact_eval_mod(rep, m) == (sol.x1 % m, sol.y1 % m), (d, m)


def test_compact_part_size_bounds():
    rng = random.Random(47)
    for d in squarefree_sample(rng, 2, 10**6, 40):
        rep = compact_rep_build(d, regulator_bsgs(d))
        assert rep.k <= 2 * math.ceil(math.log2(max(regulator_bsgs(d), 2.0))) + 8
        for a, b, dj in rep.parts:
            assert 0 < dj <= 4 * d
            assert abs(a) <= 16 * d * d
            assert abs(b) <= 16 * d * d


def test_compact_eval_detects_corruption():
    rep = compact_rep_build(61, regulator_bsgs(61))
    assert rep.k > 1
    # tamper with one denominator: some exact division must now fail
    parts = list(rep.parts)
    a, b, dj = parts[-1]
    parts[-1] = (a, b, dj + 1)
    bad = CompactRep(d=rep.d, parts=tuple(parts))
    with pytest.raises(CorruptRepresentationError):
        compact_eval_mod(bad, 101)


def test_reduced_forms_everywhere():
    rng = random.Random(53)
    for d in squarefree_sample(rng, 100, 10**5, 20):
        states, _ = walk_states(d, max_steps=100000)
        f = states[min(3, len(states) - 1)]
        g = giant_step(f, f)
        assert reduced_ok(g)
        h = rho_step(g)
        assert reduced_ok(h)


def test_distance_error_accounting_small():
    for d in [3, 7, 61, 9871]:
        f = principal_form(d)
        for _ in range(50):
            f = rho_step(f)
        assert f.dist_err < 1e-10
