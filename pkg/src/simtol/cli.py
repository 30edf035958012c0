"""Command-line interface.

Input files are UTF-8 with one record per line; the 1-based line number is
the record id.  Results go to stdout (or ``--out``) as sorted TSV and a
one-line run summary goes to stderr.  Exit status: 0 on success, 2 for a
bad parameter, 3 for bad input.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import oracle
from .core import InputError, ParameterError, RunStats, Sim, SimilaritySpec
from .faerie_extract import Pruning, extract
from .pass_join import Strategy, join_ed, join_eds
from .pivotal_search import PivotMode, build_index, search_many
from .set_join import Selection, join_set

__all__ = ["RunReport", "main", "read_lines", "read_sets", "format_value"]

EXIT_PARAMETER = 2
EXIT_INPUT = 3


@dataclass
class RunReport:
    command: str
    results: int = 0
    candidates: int = 0
    probed: int = 0
    seconds: float = 0.0
    params: dict = field(default_factory=dict)

    def line(self) -> str:
        opts = " ".join(f"{k}={v}" for k, v in self.params.items())
        return (
            f"{self.command}: results={self.results} candidates={self.candidates} "
            f"probed={self.probed} time={self.seconds:.3f}s {opts}"
        ).rstrip()


# --------------------------------------------------------------------------
# file formats


def read_lines(path: str) -> list[str]:
    """Records of a text file; CR stripped, trailing newline optional."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    parts = raw.split(b"\n")
    if parts and parts[-1] == b"":
        parts.pop()
    out = []
    for no, b in enumerate(parts, 1):
        try:
            out.append(b.decode("utf-8").rstrip("\r"))
        except UnicodeDecodeError as exc:
            raise InputError(f"{path}:{no}: not valid UTF-8") from exc
    return out


def read_sets(path: str) -> list[list[str]]:
    """One set per line, tokens separated by single spaces.  Repeated
    tokens are collapsed with a warning on stderr."""
    out = []
    for no, line in enumerate(read_lines(path), 1):
        toks = line.split(" ") if line else []
        if any(t == "" for t in toks):
            raise InputError(f"{path}:{no}: tokens must be separated by single spaces")
        if not toks:
            raise InputError(f"{path}:{no}: empty set")
        uniq = list(dict.fromkeys(toks))
        if len(uniq) != len(toks):
            print(f"warning: {path}:{no}: {len(toks) - len(uniq)} duplicate token(s) collapsed", file=sys.stderr)
        out.append(uniq)
    return out


def format_value(v) -> str:
    if isinstance(v, int):
        return str(v)
    if isinstance(v, Fraction):
        return f"{float(v):.6f}"
    return f"{v:.6f}"


def _emit(rows: Sequence[Sequence], out_path: str | None) -> None:
    text = "".join("\t".join(format_value(x) if k == len(r) - 1 else str(x) for k, x in enumerate(r)) + "\n" for r in rows)
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# commands


def _threads(args) -> int:
    if args.threads is not None:
        n = args.threads
    else:
        env = os.environ.get("SIMTOL_THREADS", "1")
        try:
            n = int(env)
        except ValueError as exc:
            raise ParameterError(f"SIMTOL_THREADS must be an integer, got {env!r}") from exc
    if n < 1:
        raise ParameterError(f"thread count must be positive, got {n}")
    return n


def _pairs(R, S) -> int:
    return len(R) * (len(R) - 1) // 2 if S is None else len(R) * len(S)


def _cmd_extract(args, stats: RunStats, report: RunReport):
    if (args.tau is None) == (args.delta is None):
        raise ParameterError("give exactly one of --tau and --delta")
    if args.sim == "ed":
        if args.tau is None:
            raise ParameterError("ed needs --tau")
        spec = SimilaritySpec.of("ed", args.tau, args.q)
    else:
        if args.delta is None:
            raise ParameterError(f"{args.sim} needs --delta")
        spec = SimilaritySpec.of(args.sim, args.delta, args.q)
    entities = read_lines(args.dict)
    doc = "\n".join(read_lines(args.doc))
    report.params.update(sim=args.sim, threshold=spec.threshold, q=args.q, pruning=args.pruning)
    if args.oracle:
        n = len(doc) if spec.char_based else len(doc.split())
        stats.candidates = len(entities) * n * (n + 1) // 2
        return [list(m) for m in oracle.brute_extract(entities, doc, spec)]
    matches = extract(entities, doc, spec, Pruning(args.pruning), stats)
    stats.results += len(matches)
    return [[m.entity, m.start, m.end, m.value] for m in matches]


def _cmd_join_ed(args, stats, report):
    R = read_lines(args.input)
    S = read_lines(args.input2) if args.input2 else None
    report.params.update(tau=args.tau, strategy=args.strategy)
    if args.oracle:
        stats.candidates = _pairs(R, S)
        return oracle.brute_join_ed(R, S, args.tau)
    return join_ed(R, S, args.tau, Strategy(args.strategy), stats=stats, threads=_threads(args))


def _cmd_join_eds(args, stats, report):
    R = read_lines(args.input)
    report.params.update(delta=args.delta, strategy=args.strategy)
    if args.oracle:
        for i, r in enumerate(R, 1):
            if not r:
                raise InputError(f"{args.input}:{i}: empty string")
        stats.candidates = _pairs(R, None)
        return oracle.brute_join_eds(R, args.delta)
    return join_eds(R, args.delta, Strategy(args.strategy), stats=stats)


def _cmd_join_set(args, stats, report):
    R = read_sets(args.input)
    S = read_sets(args.input2) if args.input2 else None
    report.params.update(sim=args.sim, delta=args.delta, selection=args.selection, alpha=args.alpha)
    if args.oracle:
        SimilaritySpec.of(args.sim, args.delta)
        stats.candidates = _pairs(R, S)
        return oracle.brute_join_set(R, S, args.sim, args.delta)
    return join_set(
        R, S, Sim(args.sim), args.delta, Selection(args.selection), args.alpha, stats=stats, threads=_threads(args)
    )


def _cmd_search(args, stats, report):
    if not (0 <= args.tau <= args.tau_max):
        raise ParameterError(f"--tau must lie in [0, --tau-max = {args.tau_max}]")
    data = read_lines(args.data)
    queries = read_lines(args.queries)
    report.params.update(tau=args.tau, tau_max=args.tau_max, q=args.q, pivots=args.pivots, align=not args.no_align_filter)
    if args.oracle:
        for i, r in enumerate(data, 1):
            if len(r) < args.q:
                raise InputError(f"{args.data}:{i}: record shorter than q = {args.q}")
        stats.candidates = len(data) * len(queries)
        return [(qi, rid, d) for qi, s in enumerate(queries, 1) for rid, d in oracle.brute_search(data, s, args.tau)]
    try:
        index = build_index(data, args.q, args.tau_max, pivots=PivotMode(args.pivots))
    except InputError as exc:
        raise InputError(f"{args.data}: {exc}") from exc
    return search_many(
        index, queries, args.tau, PivotMode(args.pivots), not args.no_align_filter, stats, threads=_threads(args)
    )


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="simtol", description="Error-tolerant matching and similarity joins.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", help="write results here instead of stdout")
        sp.add_argument("--threads", type=int, help="worker threads (default: $SIMTOL_THREADS or 1)")
        sp.add_argument("--oracle", action="store_true", help="use the brute-force reference instead")

    sp = sub.add_parser("extract", help="approximate dictionary entity extraction")
    sp.add_argument("--dict", required=True)
    sp.add_argument("--doc", required=True)
    sp.add_argument("--sim", required=True, choices=[s.value for s in Sim])
    sp.add_argument("--tau", type=int)
    sp.add_argument("--delta", type=str)
    sp.add_argument("-q", type=int, default=2)
    sp.add_argument("--pruning", choices=[x.value for x in Pruning], default=Pruning.BATCH_BINARY.value)
    common(sp)
    sp.set_defaults(run=_cmd_extract)

    sp = sub.add_parser("join-ed", help="edit-distance similarity join")
    sp.add_argument("--input", required=True)
    sp.add_argument("--input2")
    sp.add_argument("--tau", type=int, required=True)
    sp.add_argument("--strategy", choices=[x.value for x in Strategy], default=Strategy.MULTIMATCH.value)
    common(sp)
    sp.set_defaults(run=_cmd_join_ed)

    sp = sub.add_parser("join-eds", help="normalised edit-similarity self join")
    sp.add_argument("--input", required=True)
    sp.add_argument("--delta", type=str, required=True)
    sp.add_argument("--strategy", choices=[x.value for x in Strategy], default=Strategy.MULTIMATCH.value)
    common(sp)
    sp.set_defaults(run=_cmd_join_eds)

    sp = sub.add_parser("join-set", help="set similarity join")
    sp.add_argument("--input", required=True)
    sp.add_argument("--input2")
    sp.add_argument("--sim", required=True, choices=["jac", "cos", "dice"])
    sp.add_argument("--delta", type=str, required=True)
    sp.add_argument("--selection", choices=[x.value for x in Selection], default=Selection.OPTIMAL.value)
    sp.add_argument("--alpha", type=float, default=1.0)
    common(sp)
    sp.set_defaults(run=_cmd_join_set)

    sp = sub.add_parser("search", help="threshold edit-distance search")
    sp.add_argument("--data", required=True)
    sp.add_argument("--queries", required=True)
    sp.add_argument("--tau-max", type=int, required=True)
    sp.add_argument("--tau", type=int, required=True)
    sp.add_argument("-q", type=int, default=2)
    sp.add_argument("--pivots", choices=[x.value for x in PivotMode], default=PivotMode.OPTIMAL.value)
    sp.add_argument("--no-align-filter", action="store_true")
    common(sp)
    sp.set_defaults(run=_cmd_search)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    stats = RunStats()
    report = RunReport(args.command)
    if args.oracle:
        report.params["oracle"] = "yes"
    start = time.perf_counter()
    try:
        _threads(args)
        rows = args.run(args, stats, report)
        rows = sorted(rows, key=lambda r: tuple(r[:-1]))
        _emit(rows, args.out)
    except ParameterError as exc:
        print(f"simtol: parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAMETER
    except InputError as exc:
        print(f"simtol: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report.seconds = time.perf_counter() - start
    report.results = len(rows)
    report.candidates = stats.candidates
    report.probed = stats.probed
    print(report.line(), file=sys.stderr)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
