"""Command-line frontend: ``ipw <subcommand> [options]``.

Exit status is 0 on success, 1 on a domain error (infeasible constraints,
invalid partition, ...) and 2 on usage or parse errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field
from typing import Any, Sequence

from .credal import CredalConstraint, CredalError, feasible, merge_experts, query_bounds
from .defaults import MODES, AuditConfig, TheoryError, audit_rule, compute_extensions
from .kb import KBError, KnowledgeBase, load_kb
from .logic import TRUE, Atom, FormulaError, Not, VocabularyError, parse_formula, render
from .policies import (
    PartitionError,
    UndefinedRatioError,
    laplace_sequence,
    point_belief,
    possibility_ratio,
    reliable_belief,
    table1,
)
from .simulate import (
    PARTITION_SOURCES,
    ReliabilityAuditConfig,
    TwoExpertsConfig,
    reliability_audit,
    run_two_experts,
)

FORMATS = ("text", "json", "csv")


class DomainError(Exception):
    pass


@dataclass
class Table:
    """One block of output: a title, column names and rows."""

    name: str
    columns: list[str]
    rows: list[list[Any]] = field(default_factory=list)


def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return f"{v:.6g}"
    if v is None:
        return ""
    return str(v)


def _emit(tables: list[Table], fmt: str, out) -> None:
    if fmt == "json":
        doc = {t.name: [dict(zip(t.columns, r)) for r in t.rows] for t in tables}
        json.dump(doc, out, indent=2, default=str)
        out.write("\n")
    elif fmt == "csv":
        w = csv.writer(out, lineterminator="\n")
        for i, t in enumerate(tables):
            if i:
                out.write("\n")
            w.writerow(["table"] + t.columns)
            for r in t.rows:
                w.writerow([t.name] + [repr(v) if isinstance(v, float) else _fmt(v) for v in r])
    else:
        for i, t in enumerate(tables):
            if i:
                out.write("\n")
            cells = [t.columns] + [[_fmt(v) for v in r] for r in t.rows]
            widths = [max(len(row[k]) for row in cells) for k in range(len(t.columns))]
            out.write(f"{t.name}\n")
            for row in cells:
                out.write("  ".join(c.ljust(wd) for c, wd in zip(row, widths)).rstrip() + "\n")


def _formula(text: str, kb: KnowledgeBase):
    return parse_formula(text, kb.vocab)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_table1(args) -> list[Table]:
    t = Table("table1", ["belief_a", "belief_b", "expected_error", "reliability", "policy"])
    for r in table1(args.p_a, args.p_b):
        t.rows.append([r.belief_a, r.belief_b, r.expected_error, r.reliability, r.policy])
    return [t]


def cmd_laplace(args) -> list[Table]:
    t = Table("laplace", ["observations", "ratio", "value"])
    for n, pr in enumerate(laplace_sequence(args.observations, args.free_atoms)):
        t.rows.append([n, str(pr), float(pr)])
    return [t]


def cmd_eval(args) -> list[Table]:
    kb = load_kb(args.kb)
    worlds = kb.worlds()
    t = Table("beliefs", ["statement", "belief", "exact", "policy"])
    for text in args.query:
        q = _formula(text, kb)
        exact = None
        if args.policy == "ratio":
            value = possibility_ratio(worlds, q)
            exact = str(value)
        elif args.policy == "reliable":
            if kb.partition is None:
                raise DomainError("reliable policy needs a partition declaration")
            value = reliable_belief(worlds, kb.partition, q)
        else:
            value = point_belief(worlds, kb.point_statements(), q)
        t.rows.append([render(q), float(value), exact, args.policy])
    return [t]


def _kb_constraints(kb: KnowledgeBase) -> list[CredalConstraint]:
    cons = list(kb.constraints)
    if kb.partition is not None:
        cons += [CredalConstraint.point(f, p) for f, p in kb.partition.cells]
    if kb.experts:
        cons += merge_experts(kb.experts)
    return cons


def cmd_bounds(args) -> list[Table]:
    kb = load_kb(args.kb)
    given = _formula(args.given, kb) if args.given else TRUE
    cons = _kb_constraints(kb)
    t = Table("bounds", ["query", "given", "lo", "hi"])
    for text in args.query:
        q = _formula(text, kb)
        b = query_bounds(kb.worlds(), cons, q, given)
        t.rows.append([render(q), render(given), b.lo, b.hi])
    return [t]


def cmd_merge(args) -> list[Table]:
    kb = load_kb(args.kb)
    if not kb.experts:
        raise DomainError("knowledge base declares no experts")
    worlds = kb.worlds()
    merged = merge_experts(kb.experts, worlds)
    t = Table("merged", ["statement", "lo", "hi", "experts"])
    for c in merged:
        key = render(c.target)
        who = [e.expert for e in kb.experts if any(render(f) == key for f, _ in e.statements)]
        t.rows.append([key, c.lo, c.hi, " ".join(who)])
    status = Table("status", ["feasible"], [[feasible(worlds, merged)]])
    return [t, status]


def cmd_extensions(args) -> list[Table]:
    kb = load_kb(args.kb)
    theory = kb.theory()
    exts = compute_extensions(theory)
    t = Table("extensions", ["extension", "applied", "literals", "worlds"])
    for k, e in enumerate(exts, start=1):
        lits = []
        for a in kb.vocab.atoms:
            if e.entails(Atom(a)):
                lits.append(a)
            elif e.entails(Not(Atom(a))):
                lits.append("!" + a)
        applied = " ".join(str(i + 1) for i in sorted(e.applied))
        t.rows.append([k, applied, " ".join(lits), len(e.believed)])
    tables = [t]
    if args.audit:
        config = AuditConfig(args.tau_justify, args.tau_believe)
        modes = MODES if args.mode == "both" else (args.mode,)
        audit = Table("audit", ["rule", "default", "mode", "verdict", "upper_bound"])
        applicable = sorted(set().union(*(e.applied for e in exts)))
        for i in applicable:
            for mode in modes:
                v = audit_rule(theory, i, mode, config)
                audit.rows.append(
                    [i + 1, str(theory.defaults[i]), mode, v.verdict, v.upper_bound]
                )
        tables.append(audit)
    return tables


def cmd_simulate(args) -> list[Table]:
    if args.scenario == "two-experts":
        cfg = TwoExpertsConfig(
            trials=args.trials,
            seed=args.seed,
            quality1=args.quality1,
            quality2=args.quality2,
            redundancy=args.redundancy,
            base_rate=args.base_rate,
            bins=args.bins,
            min_bin_count=args.min_bin_count,
        )
        reports = list(run_two_experts(cfg, workers=args.workers).values())
    else:
        cfg = ReliabilityAuditConfig(
            trials=args.trials,
            seed=args.seed,
            vocab_size=args.vocab_size,
            axiom_density=args.axiom_density,
            partition_source=args.partition_source,
            bins=args.bins,
            min_bin_count=args.min_bin_count,
        )
        reports = [reliability_audit(cfg, workers=args.workers)]
    bins = Table("bins", ["policy", "lo", "hi", "count", "mean_belief", "truth_fraction"])
    summary = Table("summary", ["policy", "calibration_error", "brier", "n"])
    for r in reports:
        for b in r.bins:
            bins.rows.append([r.policy, b.lo, b.hi, b.count, b.mean_belief, b.truth_fraction])
        summary.rows.append([r.policy, r.calibration_error, r.brier, r.n])
    return [bins, summary]


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _probability(text: str) -> float:
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"{text} is not in [0, 1]")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ipw", description="Possible-worlds inference policies and reliability checks."
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=FORMATS, default="text")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("table1", parents=[common], help="accuracy/reliability tradeoff table")
    p.add_argument("--p-a", type=_probability, default=0.8)
    p.add_argument("--p-b", type=_probability, default=0.6)
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("laplace", parents=[common], help="causal-chain rule of succession")
    p.add_argument("--observations", type=int, default=3)
    p.add_argument("--free-atoms", type=int, default=0)
    p.set_defaults(func=cmd_laplace)

    p = sub.add_parser("eval", parents=[common], help="belief values under a policy")
    p.add_argument("--kb", required=True)
    p.add_argument("--policy", choices=("ratio", "reliable", "point"), default="ratio")
    p.add_argument("--query", action="append", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bounds", parents=[common], help="sharpest probability bounds")
    p.add_argument("--kb", required=True)
    p.add_argument("--query", action="append", required=True)
    p.add_argument("--given")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("merge", parents=[common], help="envelope of expert assessments")
    p.add_argument("--kb", required=True)
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("extensions", parents=[common], help="default-logic extensions")
    p.add_argument("--kb", required=True)
    p.add_argument("--audit", action="store_true")
    p.add_argument("--mode", choices=MODES + ("both",), default="standard")
    p.add_argument("--tau-justify", type=float, default=0.9)
    p.add_argument("--tau-believe", type=float, default=0.9)
    p.set_defaults(func=cmd_extensions)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo reliability checks")
    p.add_argument("--scenario", choices=("two-experts", "reliability-audit"), required=True)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--min-bin-count", type=int, default=30)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--quality1", type=float, default=0.9)
    p.add_argument("--quality2", type=float, default=0.7)
    p.add_argument("--redundancy", type=float, default=0.0)
    p.add_argument("--base-rate", type=float, default=0.5)
    p.add_argument("--vocab-size", type=int, default=3)
    p.add_argument("--axiom-density", type=float, default=0.5)
    p.add_argument("--partition-source", choices=PARTITION_SOURCES, default="single-marginal")
    p.set_defaults(func=cmd_simulate)
    return parser


_DOMAIN_ERRORS = (
    DomainError,
    CredalError,
    PartitionError,
    UndefinedRatioError,
    TheoryError,
)
_PARSE_ERRORS = (KBError, FormulaError, VocabularyError, OSError)


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    buf = io.StringIO()
    try:
        _emit(args.func(args), args.format, buf)
    except _PARSE_ERRORS as e:
        print(f"ipw: error: {e}", file=stderr)
        return 2
    except _DOMAIN_ERRORS as e:
        print(f"ipw: error: {e}", file=stderr)
        return 1
    except ValueError as e:
        # configuration and numeric validation failures from the library
        print(f"ipw: error: {e}", file=stderr)
        return 1
    stdout.write(buf.getvalue())
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
