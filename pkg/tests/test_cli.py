import subprocess
import sys

import pytest

from smoothpell.cli import main
from smoothpell.primes import gen_basis, smooth_split
from smoothpell.resultfile import ResultData, format_result, read_result
from smoothpell.sieve import SolutionRecord


def run_cli(args):
    return main(args)


def test_search_writes_result(tmp_path, capsys):
    out = tmp_path / "s7.txt"
    assert run_cli(["search", "--k", "7", "--out", str(out)]) == 0
    data = read_result(str(out))
    assert data.k == 7 and data.complete
    assert [r.x for r in data.records][:5] == [2, 3, 4, 5, 6]


def test_search_stdout_when_no_out(capsys):
    assert run_cli(["search", "--k", "3"]) == 0
    captured = capsys.readouterr()
    assert captured.out.startswith("# smoothpell-result v1")
    from smoothpell.resultfile import parse_result

    parsed = parse_result(captured.out)
    assert [r.x for r in parsed.records] == [2, 3, 5, 7, 17]


def test_verify_accepts_search_output(tmp_path):
    out = tmp_path / "s13.txt"
    assert run_cli(["search", "--k", "13", "--out", str(out)]) == 0
    assert run_cli(["verify", str(out)]) == 0


def test_verify_rejects_bad_record(tmp_path):
    b = gen_basis(7)
    # x=10: 99 = 9*11 is not 7-smooth, so this record must fail
    bad = ResultData(
        k=7,
        primes=b.primes,
        mode="auto",
        tolerance=0.5,
        complete=True,
        records=[SolutionRecord(x=10, d=11, n=1, exponents=(0, 2, 0, 0))],
    )
    path = tmp_path / "bad.txt"
    path.write_text(format_result(bad))
    assert run_cli(["verify", str(path)]) == 1


def test_verify_parse_error_with_line_number(tmp_path, capsys):
    out = tmp_path / "s3.txt"
    assert run_cli(["search", "--k", "3", "--out", str(out)]) == 0
    text = out.read_text().splitlines()
    text[6] = "x=oops"
    out.write_text("\n".join(text) + "\n")
    assert run_cli(["verify", str(out)]) == 1
    captured = capsys.readouterr()
    assert "line 7" in captured.err


def test_report_requires_complete(tmp_path, capsys):
    out = tmp_path / "s7.txt"
    assert run_cli(["search", "--k", "7", "--out", str(out)]) == 0
    text = out.read_text().replace("# complete: true", "# complete: false")
    out.write_text(text)
    assert run_cli(["report", str(out)]) == 3


def test_report_sections(tmp_path, capsys):
    out = tmp_path / "s7.txt"
    assert run_cli(["search", "--k", "7", "--out", str(out)]) == 0
    capsys.readouterr()
    assert run_cli(["report", str(out)]) == 0
    text = capsys.readouterr().out
    for section in (
        "largest solutions:",
        "perfect powers",
        "first-k-primes factorizations",
        "consecutive smooth runs",
        "exponent statistics:",
        "triangular",
    ):
        assert section in text
    assert "8749" in text


def test_oracle_diffs_clean_against_search(tmp_path):
    s_out = tmp_path / "s7.txt"
    o_out = tmp_path / "o7.txt"
    assert run_cli(["search", "--k", "7", "--out", str(s_out)]) == 0
    assert run_cli(["oracle", "--k", "7", "--limit", "1000000", "--out", str(o_out)]) == 0
    s = read_result(str(s_out))
    o = read_result(str(o_out))
    in_range = [r for r in s.records if r.x <= 10**6]
    assert in_range == o.records
    assert run_cli(["verify", str(o_out)]) == 0


def test_oracle_tiny_limit(tmp_path):
    o_out = tmp_path / "o.txt"
    assert run_cli(["oracle", "--k", "2", "--limit", "2", "--out", str(o_out)]) == 0
    assert read_result(str(o_out)).records == []
    assert run_cli(["oracle", "--k", "2", "--limit", "3", "--out", str(o_out)]) == 0
    assert [r.x for r in read_result(str(o_out)).records] == [3]


def test_pell_basic(capsys):
    assert run_cli(["pell", "--d", "3"]) == 0
    text = capsys.readouterr().out
    assert "x1 = 2" in text and "y1 = 1" in text
    assert "1.3169578969" in text


def test_pell_d5(capsys):
    assert run_cli(["pell", "--d", "5"]) == 0
    text = capsys.readouterr().out
    assert "x1 = 9" in text and "y1 = 4" in text


def test_pell_tower_member(capsys):
    assert run_cli(["pell", "--d", "3", "--n", "18"]) == 0
    text = capsys.readouterr().out
    assert "x_18 = 9863382151" in text


def test_pell_mod(capsys):
    assert run_cli(["pell", "--d", "3", "--n", "2", "--mod", "1000000000"]) == 0
    text = capsys.readouterr().out
    assert "x_2 mod 1000000000 = 7" in text
    assert "y_2 mod 1000000000 = 4" in text


def test_pell_rejects_square(capsys):
    assert run_cli(["pell", "--d", "16"]) == 2


def test_pell_scan_flag(capsys):
    assert run_cli(["pell", "--d", "3", "--k", "100"]) == 0
    text = capsys.readouterr().out
    assert "solutions from this tower under K=100: 10" in text
    assert "n=18" in text


def test_usage_error_exit_code():
    assert run_cli(["search"]) == 2
    assert run_cli(["definitely-not-a-command"]) == 2


def test_checkpoint_resume_flow(tmp_path, capsys):
    out1 = tmp_path / "a.txt"
    out2 = tmp_path / "b.txt"
    cp = tmp_path / "cp.json"
    assert run_cli(["search", "--k", "13", "--out", str(out1), "--checkpoint", str(cp)]) == 0
    # rerun without --resume refuses
    assert run_cli(["search", "--k", "13", "--out", str(out2), "--checkpoint", str(cp)]) == 2
    # resume completes instantly and reproduces the bytes
    assert (
        run_cli(
            ["search", "--k", "13", "--out", str(out2), "--checkpoint", str(cp), "--resume"]
        )
        == 0
    )
    assert out1.read_bytes() == out2.read_bytes()
    # mismatched K refuses
    assert (
        run_cli(
            ["search", "--k", "7", "--out", str(out2), "--checkpoint", str(cp), "--resume"]
        )
        == 2
    )
    # restart discards
    assert (
        run_cli(
            ["search", "--k", "7", "--out", str(out2), "--checkpoint", str(cp), "--restart"]
        )
        == 0
    )


def test_resume_after_partial_run_byte_identical(tmp_path):
    from smoothpell.resultfile import Checkpoint
    from smoothpell.sieve import SearchConfig, chunk_count, scan_chunk

    basis = gen_basis(23)
    total = chunk_count(basis)
    cp_path = tmp_path / "cp.json"
    cfg = SearchConfig(bound=23)
    cp = Checkpoint.create(str(cp_path), 23, basis.primes, total)
    _, records, audit, _ = scan_chunk(0, cfg, basis)
    cp.store_chunk(0, records, audit)

    out_resumed = tmp_path / "resumed.txt"
    out_fresh = tmp_path / "fresh.txt"
    assert (
        run_cli(
            [
                "search",
                "--k",
                "23",
                "--out",
                str(out_resumed),
                "--checkpoint",
                str(cp_path),
                "--resume",
            ]
        )
        == 0
    )
    assert run_cli(["search", "--k", "23", "--out", str(out_fresh)]) == 0
    assert out_resumed.read_bytes() == out_fresh.read_bytes()


def test_console_entrypoint_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "smoothpell", "pell", "--d", "2"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "x1 = 3" in proc.stdout
