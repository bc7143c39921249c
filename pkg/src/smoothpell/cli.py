"""Command-line front end.

Subcommands: search (run the full enumeration), oracle (brute-force scan in
the same file format, for diffing), verify (re-check a result file by trial
division), report (render every headline statistic from a complete result
file), pell (inspect a single modulus).

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 refusal to
operate on an incomplete search.
"""
from __future__ import annotations

import argparse
import sys

from . import corollaries
from .errors import (
    CheckpointError,
    IncompleteSetError,
    InvalidModulusError,
    ResultParseError,
    SizeGuardExceeded,
)
from .infrastructure import compact_rep_build, regulator_bsgs
from .primes import gen_basis, smooth_split
from .quadfield import fundamental_solution, pell_power_exact, pell_power_mod
from .resultfile import Checkpoint, ResultData, format_result, read_result
from .sieve import SearchConfig, chunk_count, oracle_records, run_search, scan_d

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_INCOMPLETE = 3


def _echo(msg: str = ""):
    print(msg, file=sys.stderr)


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w") as fp:
            fp.write(text)
    else:
        sys.stdout.write(text)


def cmd_search(args) -> int:
    try:
        config = SearchConfig(
            bound=args.k,
            approx_tol=args.tolerance,
            worker_count=args.jobs,
            checkpoint_path=args.checkpoint,
            mode=args.mode,
        )
    except ValueError as exc:
        _echo(f"error: {exc}")
        return EXIT_USAGE

    basis = gen_basis(args.k)
    checkpoint = None
    if args.checkpoint:
        import os

        total = chunk_count(basis)
        exists = os.path.exists(args.checkpoint)
        try:
            if args.resume:
                checkpoint = Checkpoint.resume(args.checkpoint, args.k, basis.primes, total)
                _echo(f"resuming: {len(checkpoint.completed_ids())}/{total} chunks done")
            elif exists and not args.restart:
                _echo(
                    f"error: checkpoint {args.checkpoint} already exists; "
                    "pass --resume to continue it or --restart to discard it"
                )
                return EXIT_USAGE
            else:
                checkpoint = Checkpoint.create(args.checkpoint, args.k, basis.primes, total)
        except CheckpointError as exc:
            _echo(f"error: {exc}")
            return EXIT_USAGE

    def progress(cid, done, total, nrec):
        _echo(f"chunk {cid} done ({done}/{total}), {nrec} records")

    result = run_search(config, checkpoint=checkpoint, progress=progress)
    data = ResultData(
        k=args.k,
        primes=basis.primes,
        mode=args.mode,
        tolerance=args.tolerance,
        complete=result.complete,
        records=result.records,
        audit=result.audit,
    )
    _emit(format_result(data), args.out)
    diag = result.diagnostics
    _echo(
        f"{len(result.records)} solutions; complete={result.complete}; "
        f"log tests: {diag.log_tests}, max pass {diag.max_pass_value:.4f}, "
        f"min fail {diag.min_fail_value:.4f}, "
        f"inconsistent verdicts: {diag.inconsistent_verdicts}"
    )
    return EXIT_OK


def cmd_oracle(args) -> int:
    basis = gen_basis(args.k)
    records = oracle_records(args.limit, basis)
    data = ResultData(
        k=args.k,
        primes=basis.primes,
        mode="oracle",
        tolerance=0.0,
        complete=False,
        records=records,
        oracle_limit=args.limit,
    )
    _emit(format_result(data), args.out)
    _echo(f"{len(records)} solutions up to {args.limit} by trial division")
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        data = read_result(args.input)
    except (ResultParseError, OSError) as exc:
        _echo(f"parse error: {exc}")
        return EXIT_VERIFY_FAILED
    basis = gen_basis(data.k)
    if basis.primes != data.primes:
        _echo("error: header primes do not match the stated bound")
        return EXIT_VERIFY_FAILED
    failures = 0
    for rec in data.records:
        if not rec.verify(basis):
            failures += 1
            _echo(f"FAIL x={rec.x}: record does not re-verify by trial division")
    print(
        f"verified {len(data.records) - failures}/{len(data.records)} records "
        f"against the {data.k}-smooth basis"
    )
    return EXIT_OK if failures == 0 else EXIT_VERIFY_FAILED


def _fmt_big(n: int, head: int = 24) -> str:
    s = str(n)
    if len(s) <= 2 * head + 6:
        return s
    return f"{s[:head]}...{s[-head:]} ({len(s)} digits)"


def cmd_report(args) -> int:
    try:
        data = read_result(args.input)
    except (ResultParseError, OSError) as exc:
        _echo(f"parse error: {exc}")
        return EXIT_VERIFY_FAILED
    if not data.complete:
        _echo("refusing to report on an incomplete search; audited skips:")
        for entry in data.audit:
            _echo(f"  d={entry.d}: {entry.reason}")
        return EXIT_INCOMPLETE
    basis = gen_basis(data.k)
    sset = corollaries.SolutionSet(
        records=tuple(data.records), basis=basis, complete=True
    )
    w = sys.stdout.write
    w(f"solutions of largest-prime-factor(x^2-1) <= {data.k}\n")
    w(f"total: {len(data.records)}\n")
    odd = sum(1 for r in data.records if r.x % 2 == 1)
    w(f"odd: {odd}   even: {len(data.records) - odd}\n")
    w("\nlargest solutions:\n")
    for x in corollaries.largest(sset, 3):
        w(f"  {x}\n")
    w("\nperfect powers in the solution set:\n")
    for e in range(2, 11):
        sols = corollaries.power_solutions(sset, e)
        if sols:
            r, x = sols[-1]
            w(f"  e={e}: largest root {r} (x = {x}), {len(sols)} total\n")
    both = corollaries.largest_power_index(sset, 2)
    if both:
        w(f"  largest power index with root > 1: {both[0]} (root {both[1]})\n")
    both3 = corollaries.largest_power_index(sset, 3)
    if both3:
        w(f"  largest power index with root > 2: {both3[0]} (root {both3[1]})\n")
    w("\nfirst-k-primes factorizations (x^2-1 = p_1^a1...p_k^ak, all a_i >= 1):\n")
    total_tuples = 0
    for k in range(1, basis.size + 1):
        tuples = corollaries.dabrowski_check(sset, k)
        total_tuples += len(tuples)
        for x, exps in tuples:
            w(f"  k={k}: ({x}; {','.join(str(e) for e in exps)})\n")
    w(f"  total tuples: {total_tuples}\n")
    w("\nconsecutive smooth runs (largest x with x..x+n all smooth):\n")
    for n in range(1, 9):
        run = corollaries.consecutive_runs(sset, n)
        w(f"  n={n}: {run.start if run.start is not None else 'none'}\n")
    run1 = corollaries.consecutive_runs(sset, 1)
    w("\nparity extremes:\n")
    w(f"  largest consecutive even smooth pair starts at {run1.even_pair_start}\n")
    w(f"  largest consecutive odd smooth pair starts at {run1.odd_pair_start}\n")
    stats = corollaries.exponent_stats(sset)
    w("\nexponent statistics:\n")
    w(
        f"  most nonzero exponents: x={stats.max_support.x} "
        f"({stats.max_support.value} primes{', tie' if stats.max_support.tie else ''})\n"
    )
    w(
        f"  largest exponent sum: x={stats.max_sum.x} "
        f"(sum {stats.max_sum.value}{', tie' if stats.max_sum.tie else ''})\n"
    )
    w(
        f"  largest single exponent: x={stats.max_single.x} "
        f"(p={stats.max_single_prime}, a={stats.max_single.value}"
        f"{', tie' if stats.max_single.tie else ''})\n"
    )
    w("\nlargest smooth triangular number:\n")
    w(f"  {_fmt_big(corollaries.triangular_largest(sset))}\n")
    return EXIT_OK


def cmd_pell(args) -> int:
    d = args.d
    try:
        rstar = regulator_bsgs(d)
    except InvalidModulusError as exc:
        _echo(f"error: {exc}")
        return EXIT_USAGE
    print(f"d = {d}")
    print(f"R* = {rstar:.10f}")
    exact_ok = rstar < 5e4
    if exact_ok:
        sol = fundamental_solution(d)
        print(f"x1 = {_fmt_big(sol.x1)}")
        print(f"y1 = {_fmt_big(sol.y1)}")
    else:
        rep = compact_rep_build(d, rstar)
        print(f"fundamental solution too large to expand; compact representation with k={rep.k} parts")
    if args.n is not None:
        if args.mod is not None:
            if exact_ok:
                sol = fundamental_solution(d)
                xm, ym = sol.x1 % args.mod, sol.y1 % args.mod
            else:
                from .infrastructure import compact_eval_mod

                xm, ym = compact_eval_mod(rep, args.mod)
            xn, yn = pell_power_mod(xm, ym, args.n, d, args.mod)
            print(f"x_{args.n} mod {args.mod} = {xn}")
            print(f"y_{args.n} mod {args.mod} = {yn}")
        else:
            if not exact_ok:
                _echo("error: tower member too large; pass --mod to reduce")
                return EXIT_USAGE
            try:
                xn, yn = pell_power_exact(fundamental_solution(d), args.n)
            except SizeGuardExceeded as exc:
                _echo(f"error: {exc}")
                return EXIT_USAGE
            print(f"x_{args.n} = {_fmt_big(xn)}")
            print(f"y_{args.n} = {_fmt_big(yn)}")
    if args.k is not None:
        basis = gen_basis(args.k)
        _, cof, _ = smooth_split(d, basis)
        if cof != 1:
            _echo(f"error: d={d} is not squarefree-smooth over the {args.k} basis")
            return EXIT_USAGE
        config = SearchConfig(bound=args.k)
        records = scan_d(d, config, basis)
        print(f"solutions from this tower under K={args.k}: {len(records)}")
        for rec in records:
            print(f"  n={rec.n}: x = {_fmt_big(rec.x)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="smoothpell",
        description="find every x >= 2 whose x^2 - 1 has no prime factor above K",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("search", help="run the full Pell-tower enumeration")
    sp.add_argument("--k", type=int, required=True, help="prime bound K")
    sp.add_argument("--jobs", type=int, default=1, help="worker processes")
    sp.add_argument("--checkpoint", help="checkpoint file path")
    sp.add_argument("--resume", action="store_true", help="resume from checkpoint")
    sp.add_argument("--restart", action="store_true", help="discard an existing checkpoint")
    sp.add_argument(
        "--mode", choices=("auto", "exact", "compact"), default="auto",
        help="fundamental-solution handling",
    )
    sp.add_argument("--tolerance", type=float, default=0.5, help="log-test tolerance")
    sp.add_argument("--out", help="output file (stdout when omitted)")
    sp.set_defaults(func=cmd_search)

    op = sub.add_parser("oracle", help="brute-force scan, same output format")
    op.add_argument("--k", type=int, required=True)
    op.add_argument("--limit", type=int, required=True)
    op.add_argument("--out", help="output file (stdout when omitted)")
    op.set_defaults(func=cmd_oracle)

    vp = sub.add_parser("verify", help="re-check a result file by trial division")
    vp.add_argument("input")
    vp.set_defaults(func=cmd_verify)

    rp = sub.add_parser("report", help="render statistics from a complete result file")
    rp.add_argument("input")
    rp.set_defaults(func=cmd_report)

    pp = sub.add_parser("pell", help="inspect one Pell modulus")
    pp.add_argument("--d", type=int, required=True)
    pp.add_argument("--n", type=int, help="tower index to expand")
    pp.add_argument("--mod", type=int, help="reduce the tower member modulo this")
    pp.add_argument("--k", type=int, help="scan the tower for solutions under this bound")
    pp.set_defaults(func=cmd_pell)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except IncompleteSetError as exc:
        _echo(f"error: {exc}")
        return EXIT_INCOMPLETE
    except CheckpointError as exc:
        _echo(f"error: {exc}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
