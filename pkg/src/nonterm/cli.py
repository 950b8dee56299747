"""Command-line front end: analyze programs and report per-query rows.

One row per (program, query directive): the witness found (or "?"), the
number of unfolded rules, elapsed time, and a status.  Directories are
analyzed in lexicographic order of their .pl files.  Debug flags dump the
seed pattern rules or a bounded binary unfolding instead of analyzing.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, TextIO

from .binrules import saturate as binary_saturate
from .detect import ProofOutcome, prove
from .pattern import initial_rules
from .program import ParseError, Program, parse_program
from .terms import render
from .unfold import UnfoldBudget


@dataclass(frozen=True)
class RunConfig:
    inputs: tuple[Path, ...]
    timeout: float = 10.0
    max_iterations: int = 10
    max_rules: int = 100_000
    validate_steps: int = 0
    as_json: bool = False
    trace: bool = False
    dump_binunf: Optional[int] = None
    dump_initial: bool = False


@dataclass(frozen=True)
class ReportRow:
    program: str
    rules: int
    relations: int
    mode: str
    witness: str
    unfolded: int
    time_ms: float
    status: str
    outcome: Optional[ProofOutcome] = None

    def to_dict(self) -> dict:
        out = {
            "program": self.program,
            "rules": self.rules,
            "relations": self.relations,
            "mode": self.mode,
            "status": self.status,
            "witness": None if self.witness == "?" else self.witness,
            "unfolded": self.unfolded,
            "time_ms": round(self.time_ms, 3),
        }
        if self.outcome is not None:
            out.update(
                {
                    "n": self.outcome.witness.n if self.outcome.witness else None,
                    "alpha": str(self.outcome.witness.data.alpha) if self.outcome.witness else None,
                    "k": self.outcome.witness.data.k if self.outcome.witness else None,
                    "reason": self.outcome.reason,
                    "validated": self.outcome.validated,
                }
            )
        return out


def count_relations(program: Program) -> int:
    """Distinct root symbols of rule heads."""
    return len(program.head_symbols())


_STATUS = {
    "timeout": "Unknown-timeout",
    "fixpoint": "Unknown-fixpoint",
    "iteration-cap": "Unknown-cap",
    "rule-cap": "Unknown-cap",
    "validation-failed": "Unknown-cap",
}


def analyze_file(path: Path, config: RunConfig, err: TextIO) -> list[ReportRow]:
    text = path.read_text(encoding="utf-8")
    program = parse_program(text, path.stem)
    budget = UnfoldBudget(
        wall_clock=config.timeout,
        max_iterations=config.max_iterations,
        max_rules=config.max_rules,
    )
    rows = []
    if not program.queries:
        err.write(f"note: {path} declares no %query directive; nothing to analyze\n")
    for query in program.queries:
        outcome = prove(
            program,
            query,
            budget,
            validate_steps=config.validate_steps,
            trace=err if config.trace else None,
        )
        if outcome.proven:
            status = "Proven"
            witness = render(outcome.witness.term)
        else:
            status = _STATUS.get(outcome.reason or "", "Unknown-cap")
            witness = "?"
        rows.append(
            ReportRow(
                program=program.name,
                rules=len(program.rules),
                relations=count_relations(program),
                mode=str(query),
                witness=witness,
                unfolded=outcome.unfolded,
                time_ms=outcome.time_ms,
                status=status,
                outcome=outcome,
            )
        )
    return rows


def _collect(inputs: tuple[Path, ...]) -> tuple[list[Path], list[str]]:
    files: list[Path] = []
    errors: list[str] = []
    for p in inputs:
        if p.is_dir():
            files.extend(sorted(p.glob("*.pl")))
        elif p.exists():
            files.append(p)
        else:
            errors.append(f"no such file: {p}")
    return files, errors


def _print_table(rows: list[ReportRow], out: TextIO) -> None:
    header = ("Program (#rules, #rel)", "Mode", "Witness", "#unf", "Time(ms)", "Status")
    cells = [
        (
            f"{r.program} ({r.rules}, {r.relations})",
            r.mode,
            r.witness,
            str(r.unfolded),
            str(int(r.time_ms)),
            r.status,
        )
        for r in rows
    ]
    widths = [max(len(h), *(len(c[i]) for c in cells)) if cells else len(h) for i, h in enumerate(header)]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    out.write(fmt.format(*header).rstrip() + "\n")
    for c in cells:
        out.write(fmt.format(*c).rstrip() + "\n")


def run(config: RunConfig, out: Optional[TextIO] = None, err: Optional[TextIO] = None) -> int:
    """Analyze all inputs; 0 when every file was processed, 1 on any error."""
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    files, errors = _collect(config.inputs)
    for e in errors:
        err.write(f"error: {e}\n")
    corpus_mode = len(files) > 1 or any(p.is_dir() for p in config.inputs)

    if config.dump_initial or config.dump_binunf is not None:
        for path in files:
            try:
                program = parse_program(path.read_text(encoding="utf-8"), path.stem)
            except ParseError as exc:
                err.write(f"error: {path}: {exc}\n")
                errors.append(str(exc))
                continue
            out.write(f"% {path.stem}\n")
            if config.dump_initial:
                for rule in initial_rules(program):
                    out.write(f"{rule}\n")
            else:
                for rule in binary_saturate(program, config.dump_binunf):
                    out.write(f"{rule}\n")
        return 1 if errors else 0

    rows: list[ReportRow] = []
    for path in files:
        try:
            rows.extend(analyze_file(path, config, err))
        except ParseError as exc:
            err.write(f"error: {path}: {exc}\n")
            errors.append(str(exc))
            if not corpus_mode:
                return 1
    if config.as_json:
        json.dump([r.to_dict() for r in rows], out, indent=2)
        out.write("\n")
    else:
        _print_table(rows, out)
    return 1 if errors else 0


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="nonterm",
        description="Prove non-termination of pure logic programs.",
    )
    parser.add_argument("inputs", nargs="+", type=Path, help="program files or directories of .pl files")
    parser.add_argument("--timeout", type=float, default=10.0, metavar="SECS", help="wall-clock budget per query (default 10)")
    parser.add_argument("--max-iter", type=int, default=10, metavar="N", help="unfolding rounds per query (default 10)")
    parser.add_argument("--max-rules", type=int, default=100_000, metavar="N", help="cap on generated rules (default 100000)")
    parser.add_argument("--validate", type=int, default=0, metavar="STEPS", help="re-run each witness in the interpreter for STEPS steps (0 disables)")
    parser.add_argument("--json", action="store_true", help="emit rows as a JSON array")
    parser.add_argument("--trace", action="store_true", help="stream generated pattern rules to stderr")
    parser.add_argument("--dump-initial", action="store_true", help="print the seed pattern rules and exit")
    parser.add_argument("--dump-binunf", type=int, default=None, metavar="DEPTH", help="print a bounded binary unfolding and exit")
    args = parser.parse_args(argv)
    if args.timeout <= 0:
        parser.error("--timeout must be positive")
    config = RunConfig(
        inputs=tuple(args.inputs),
        timeout=args.timeout,
        max_iterations=args.max_iter,
        max_rules=args.max_rules,
        validate_steps=args.validate,
        as_json=args.json,
        trace=args.trace,
        dump_binunf=args.dump_binunf,
        dump_initial=args.dump_initial,
    )
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
