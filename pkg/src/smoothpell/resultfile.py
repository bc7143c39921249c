"""Persistence: the plain-text result format and the resumable checkpoint.

Result files are line-oriented and canonical: writing, parsing, and
re-writing is byte-identical, headers carry everything needed to re-verify,
and a count footer guards against truncation.  Checkpoints pair a small JSON
status file (which chunks completed) with an append-only sidecar holding the
records of completed chunks.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .errors import CheckpointError, ResultParseError
from .sieve import CHUNK_SIZE, AuditEntry, SolutionRecord

RESULT_MAGIC = "# smoothpell-result v1"
CHECKPOINT_VERSION = 1


@dataclass
class ResultData:
    k: int
    primes: tuple[int, ...]
    mode: str
    tolerance: float
    complete: bool
    records: list[SolutionRecord]
    audit: list[AuditEntry] = field(default_factory=list)
    oracle_limit: int | None = None


def _format_record(rec: SolutionRecord) -> str:
    exps = ",".join(str(e) for e in rec.exponents)
    return f"x={rec.x} d={rec.d} n={rec.n} a={exps}"


def _parse_record(line: str, line_no: int, nprimes: int) -> SolutionRecord:
    fields = line.split()
    if len(fields) != 4:
        raise ResultParseError(f"expected 4 fields, got {len(fields)}", line_no)
    vals = {}
    for want, tok in zip(("x", "d", "n", "a"), fields):
        key, eq, raw = tok.partition("=")
        if key != want or eq != "=":
            raise ResultParseError(f"expected {want}=..., got {tok!r}", line_no)
        vals[key] = raw
    try:
        x = int(vals["x"])
        d = int(vals["d"])
        n = int(vals["n"])
        exps = tuple(int(e) for e in vals["a"].split(","))
    except ValueError as exc:
        raise ResultParseError(str(exc), line_no) from None
    if len(exps) != nprimes:
        raise ResultParseError(
            f"exponent vector has {len(exps)} entries, basis has {nprimes}", line_no
        )
    return SolutionRecord(x=x, d=d, n=n, exponents=exps)


def format_result(data: ResultData) -> str:
    lines = [RESULT_MAGIC]
    lines.append(f"# k: {data.k}")
    lines.append("# primes: " + ",".join(str(p) for p in data.primes))
    lines.append(f"# mode: {data.mode}")
    lines.append(f"# tolerance: {data.tolerance!r}")
    if data.oracle_limit is not None:
        lines.append(f"# limit: {data.oracle_limit}")
    lines.append(f"# complete: {'true' if data.complete else 'false'}")
    for entry in data.audit:
        lines.append(f"# skip: d={entry.d} reason={entry.reason}")
    for rec in data.records:
        lines.append(_format_record(rec))
    lines.append(f"# count: {len(data.records)}")
    return "\n".join(lines) + "\n"


def write_result(path: str, data: ResultData):
    with open(path, "w") as fp:
        fp.write(format_result(data))


def parse_result(text: str) -> ResultData:
    lines = text.splitlines()
    if not lines or lines[0] != RESULT_MAGIC:
        raise ResultParseError("missing result header", 1)
    header: dict[str, str] = {}
    audit: list[AuditEntry] = []
    records: list[SolutionRecord] = []
    count: int | None = None
    nprimes: int | None = None
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            raise ResultParseError("blank line not allowed", line_no)
        if line.startswith("# skip: "):
            body = line[len("# skip: ") :]
            dpart, _, reason = body.partition(" reason=")
            if not dpart.startswith("d=") or not reason:
                raise ResultParseError("malformed skip entry", line_no)
            audit.append(AuditEntry(d=int(dpart[2:]), reason=reason))
            continue
        if line.startswith("# count: "):
            if count is not None:
                raise ResultParseError("duplicate count footer", line_no)
            count = int(line[len("# count: ") :])
            continue
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            if not value:
                raise ResultParseError(f"malformed header line {line!r}", line_no)
            header[key] = value
            if key == "primes":
                nprimes = len(value.split(","))
            continue
        if nprimes is None:
            raise ResultParseError("record before primes header", line_no)
        records.append(_parse_record(line, line_no, nprimes))
    for key in ("k", "primes", "mode", "tolerance", "complete"):
        if key not in header:
            raise ResultParseError(f"missing header field {key!r}", None)
    if count is None:
        raise ResultParseError("missing count footer", None)
    if count != len(records):
        raise ResultParseError(
            f"count footer says {count}, file has {len(records)} records", None
        )
    prev = 1
    for rec in records:
        if rec.x <= prev:
            raise ResultParseError(f"records not strictly increasing at x={rec.x}", None)
        prev = rec.x
    return ResultData(
        k=int(header["k"]),
        primes=tuple(int(p) for p in header["primes"].split(",")),
        mode=header["mode"],
        tolerance=float(header["tolerance"]),
        complete=header["complete"] == "true",
        records=records,
        audit=audit,
        oracle_limit=int(header["limit"]) if "limit" in header else None,
    )


def read_result(path: str) -> ResultData:
    with open(path) as fp:
        return parse_result(fp.read())


# --- checkpoint ---------------------------------------------------------------


class Checkpoint:
    """Resumable search state: JSON status plus an append-only records sidecar.

    The JSON is rewritten atomically after every chunk; the sidecar is append
    only.  A record line is trusted only when its chunk id is listed as
    completed, so a crash between the two writes at worst re-scans one chunk
    (duplicates are dropped on load)."""

    def __init__(self, path: str, k: int, primes: tuple[int, ...], total_chunks: int):
        self.path = path
        self.records_path = path + ".records"
        self.k = k
        self.primes = primes
        self.total_chunks = total_chunks
        self._completed: set[int] = set()
        self._chunks: dict[int, tuple[list[SolutionRecord], list[AuditEntry]]] = {}

    # -- construction --

    @classmethod
    def create(cls, path: str, k: int, primes, total_chunks: int) -> "Checkpoint":
        cp = cls(path, k, tuple(primes), total_chunks)
        for stale in (cp.path, cp.records_path):
            if os.path.exists(stale):
                os.unlink(stale)
        open(cp.records_path, "w").close()
        cp._write_status()
        return cp

    @classmethod
    def resume(cls, path: str, k: int, primes, total_chunks: int) -> "Checkpoint":
        primes = tuple(primes)
        try:
            with open(path) as fp:
                status = json.load(fp)
        except FileNotFoundError:
            raise CheckpointError(f"no checkpoint at {path}") from None
        except (json.JSONDecodeError, OSError) as exc:
            raise CheckpointError(
                f"checkpoint {path} is corrupt ({exc}); pass --restart to discard it"
            ) from None
        for key in ("version", "k", "primes", "chunk_size", "total_chunks", "completed"):
            if key not in status:
                raise CheckpointError(
                    f"checkpoint {path} is missing {key!r}; pass --restart to discard it"
                )
        if status["version"] != CHECKPOINT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {status['version']}")
        if status["k"] != k or tuple(status["primes"]) != primes:
            raise CheckpointError(
                f"checkpoint {path} was written for k={status['k']}; refusing to resume"
            )
        if status["chunk_size"] != CHUNK_SIZE or status["total_chunks"] != total_chunks:
            raise CheckpointError(f"checkpoint {path} chunking does not match")
        cp = cls(path, k, primes, total_chunks)
        completed = set(status["completed"])
        if any(not (0 <= cid < total_chunks) for cid in completed):
            raise CheckpointError("checkpoint contains out-of-range chunk ids")
        cp._load_sidecar(completed)
        return cp

    # -- queries --

    def completed_ids(self) -> list[int]:
        return sorted(self._completed)

    def load_chunk(self, cid: int):
        return self._chunks[cid]

    # -- updates --

    def store_chunk(self, cid: int, records, audit):
        with open(self.records_path, "a") as fp:
            for rec in records:
                exps = ",".join(str(e) for e in rec.exponents)
                fp.write(f"chunk={cid} x={rec.x} d={rec.d} n={rec.n} a={exps}\n")
            for entry in audit:
                fp.write(f"chunk={cid} skip d={entry.d} reason={entry.reason}\n")
        self._completed.add(cid)
        self._chunks[cid] = (list(records), list(audit))
        self._write_status()

    # -- internals --

    def _write_status(self):
        status = {
            "version": CHECKPOINT_VERSION,
            "k": self.k,
            "primes": list(self.primes),
            "chunk_size": CHUNK_SIZE,
            "total_chunks": self.total_chunks,
            "completed": sorted(self._completed),
            "records_file": os.path.basename(self.records_path),
        }
        tmp = self.path + ".tmp"
        with open(tmp, "w") as fp:
            json.dump(status, fp)
        os.replace(tmp, self.path)

    @staticmethod
    def _parse_sidecar_line(line: str):
        """(cid, record-or-audit) for a well-formed line; ValueError otherwise."""
        head, _, rest = line.partition(" ")
        if not head.startswith("chunk="):
            raise ValueError("missing chunk tag")
        cid = int(head[len("chunk=") :])
        if rest.startswith("skip "):
            body = rest[len("skip ") :]
            dpart, sep, reason = body.partition(" reason=")
            if not dpart.startswith("d=") or not sep:
                raise ValueError("malformed skip entry")
            return cid, AuditEntry(d=int(dpart[2:]), reason=reason)
        fields = dict(tok.split("=", 1) for tok in rest.split())
        return cid, SolutionRecord(
            x=int(fields["x"]),
            d=int(fields["d"]),
            n=int(fields["n"]),
            exponents=tuple(int(e) for e in fields["a"].split(",")),
        )

    def _load_sidecar(self, completed: set[int]):
        chunks: dict[int, tuple[list[SolutionRecord], list[AuditEntry]]] = {
            cid: ([], []) for cid in completed
        }
        seen: set[str] = set()
        try:
            with open(self.records_path) as fp:
                lines = fp.read().splitlines()
        except OSError:
            raise CheckpointError(
                f"records sidecar {self.records_path} unreadable; pass --restart"
            ) from None
        for line_no, line in enumerate(lines, start=1):
            try:
                cid, obj = self._parse_sidecar_line(line)
            except (ValueError, KeyError):
                # a torn trailing write belongs to a chunk whose completion was
                # never committed to the status file; data for committed chunks
                # must parse, anything else there is real corruption
                head = line.partition(" ")[0]
                cid = None
                if head.startswith("chunk="):
                    try:
                        cid = int(head[len("chunk=") :])
                    except ValueError:
                        cid = None
                if cid is not None and cid in completed:
                    raise CheckpointError(
                        f"sidecar {self.records_path} line {line_no} is corrupt; "
                        "pass --restart to discard the checkpoint"
                    ) from None
                continue
            if cid not in completed or line in seen:
                continue
            seen.add(line)
            if isinstance(obj, AuditEntry):
                chunks[cid][1].append(obj)
            else:
                chunks[cid][0].append(obj)
        self._completed = set(completed)
        self._chunks = chunks
