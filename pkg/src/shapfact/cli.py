"""Command-line front end.

Commands
--------
classify    place each rule of a query in the tractability landscape
shapley     attribute a query's truth value to endogenous facts
relevance   decide whether a fact can affect the query at all
prob        evaluate query probability over independent uncertain facts
gen-gap     emit a ready-to-run instance family with known tiny values

Exit codes: 0 success, 1 malformed input, 2 refused computation (the
requested method does not apply, or a cap would be exceeded).
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import approx, exact, naive, prob, rewriting
from .relevance import relevance as compute_relevance
from .errors import InputError, RefusedError, UnknownFactError
from .model import Database, Fact, Query, Schema, disjuncts_of, single_disjunct
from .parsing import (format_database, format_query, format_schema,
                      parse_fact_reference, parse_facts, parse_query,
                      parse_schema)
from .reporting import (FactRecord, Report, decimal_string, rational_string,
                        render_json, render_table)
from .structure import VerdictKind, classify_query

DEFAULT_EPSILON = 0.05
DEFAULT_DELTA = 0.1
CAP_ENV_VAR = "SHAPFACT_CAP"


@dataclass
class Invocation:
    """A fully parsed command line, decoupled from argparse for testing."""

    command: str
    schema: Optional[str] = None
    facts: Optional[str] = None
    query: Optional[str] = None
    fact: Optional[str] = None
    all_facts: bool = False
    method: str = "auto"
    epsilon: float = DEFAULT_EPSILON
    delta: float = DEFAULT_DELTA
    seed: int = 0
    workers: int = 1
    cap: Optional[int] = None
    fmt: str = "json"
    trace: bool = False
    n: int = 1
    out: str = "."
    extra_args: Sequence[str] = field(default_factory=tuple)


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on usage errors; we reserve 2 for
    refused computations, so usage problems are re-raised as input errors
    (exit 1)."""

    def error(self, message: str):  # noqa: A003 - argparse API
        raise InputError(f"{self.prog}: {message}")


def _read_text(path: str, what: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {what} file {path!r}: {exc}") from exc


def _load_query(inv: Invocation, schema: Optional[Schema]) -> Query:
    if inv.query is None:
        raise InputError("--query is required")
    text = inv.query
    if ":-" not in text:  # a path, not inline rule text
        text = _read_text(text, "query")
    return parse_query(text, schema)


def _load_schema(inv: Invocation) -> Optional[Schema]:
    if inv.schema is None:
        return None
    return parse_schema(_read_text(inv.schema, "schema"))


def _load_database(inv: Invocation, schema: Optional[Schema]) -> Database:
    if inv.facts is None:
        raise InputError("--facts is required")
    if schema is None:
        raise InputError("--schema is required when --facts is given")
    return parse_facts(_read_text(inv.facts, "facts"), schema)


def _lookup_fact(db: Database, reference: str) -> Fact:
    name, args = parse_fact_reference(reference)
    found = db.get(name, args)
    if found is None:
        raise UnknownFactError(f"no such fact in the database: {reference}")
    return found


def _brute_cap(inv: Invocation) -> int:
    if inv.cap is not None:
        return inv.cap
    env = os.environ.get(CAP_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise InputError(f"{CAP_ENV_VAR} must be an integer, "
                             f"got {env!r}") from exc
    return naive.DEFAULT_CAP


def resolve_method(query: Query, db: Database, requested: str,
                   cap: int) -> str:
    """Map ``auto`` to the cheapest applicable method.

    Single tractable rules get the dedicated engines; everything else is
    enumerated exactly while small and sampled beyond the cap.  ``auto``
    never falls back to enumeration when a polynomial engine applies.
    """
    if requested != "auto":
        return requested
    disjuncts = disjuncts_of(query)
    if len(disjuncts) == 1:
        kind = classify_query(query)[0].kind
        if kind is VerdictKind.PTIME_HIERARCHICAL:
            return "exact"
        if kind is VerdictKind.PTIME_EXO_REWRITE:
            return "exo"
    return "brute" if db.n_endogenous <= cap else "approx"


def _target_facts(inv: Invocation, db: Database) -> list[Fact]:
    if inv.all_facts:
        if inv.fact is not None:
            raise InputError("--fact and --all are mutually exclusive")
        return list(db.endogenous)
    if inv.fact is None:
        raise InputError("one of --fact or --all is required")
    return [_lookup_fact(db, inv.fact)]


def _cmd_classify(inv: Invocation) -> Report:
    schema = _load_schema(inv)
    query = _load_query(inv, schema)
    verdicts = classify_query(query)
    return Report(method="classify", query=format_query(query),
                  classification=[v.to_json() for v in verdicts])


def _cmd_shapley(inv: Invocation) -> Report:
    schema = _load_schema(inv)
    query = _load_query(inv, schema)
    db = _load_database(inv, schema)
    cap = _brute_cap(inv)
    method = resolve_method(query, db, inv.method, cap)
    targets = _target_facts(inv, db)

    seed: Optional[int] = None
    samples: Optional[int] = None
    extra: dict = {}
    values: dict[Fact, Fraction] = {}
    if method == "exact":
        rule = single_disjunct(query)
        if inv.all_facts:
            values = exact.shapley_exact_all(db, rule)
        else:
            values = {f: exact.shapley_exact(db, rule, f) for f in targets}
    elif method == "exo":
        rule = single_disjunct(query)
        new_db, new_rule, trace = rewriting.rewrite(db, rule)
        if inv.trace:
            extra["trace"] = trace.describe().splitlines()
        if inv.all_facts:
            rewritten = exact.shapley_exact_all(new_db, new_rule)
            values = {f: rewritten[f] for f in targets}
        else:
            values = {f: exact.shapley_exact(new_db, new_rule, f)
                      for f in targets}
    elif method == "brute":
        if inv.all_facts:
            values = naive.brute_shapley_all(db, query, cap=cap)
        else:
            values = {f: naive.brute_shapley(db, query, f, cap=cap)
                      for f in targets}
    elif method == "approx":
        plan = approx.make_plan(inv.epsilon, inv.delta, seed=inv.seed,
                                workers=inv.workers)
        for f in targets:
            values[f], plan = approx.shapley_additive_fpras(db, query, f,
                                                            plan)
        seed, samples = plan.seed, plan.samples
    else:
        raise InputError(f"unknown method {method!r}")

    records = [FactRecord.for_fact(f, values[f]) for f in targets]
    verdicts = [v.to_json() for v in classify_query(query)]
    return Report(method=method, query=format_query(query), facts=records,
                  classification=verdicts, seed=seed, samples=samples,
                  extra=extra)


def _witness_json(witness) -> Optional[dict]:
    if witness is None:
        return None
    return {
        "side": witness.side,
        "disjunct": witness.disjunct,
        "assignment": {var: value for var, value in witness.assignment},
        "coalition": [str(f) for f in witness.coalition],
    }


def _cmd_relevance(inv: Invocation) -> Report:
    schema = _load_schema(inv)
    query = _load_query(inv, schema)
    db = _load_database(inv, schema)
    if inv.fact is None:
        raise InputError("--fact is required")
    fact = _lookup_fact(db, inv.fact)
    result = compute_relevance(db, query, fact)
    extra = {"relevance": {
        "relevant": result.relevant,
        "pos_relevant": result.pos_relevant,
        "neg_relevant": result.neg_relevant,
        "witness": _witness_json(result.witness),
    }}
    return Report(method="relevance", query=format_query(query),
                  facts=[FactRecord.for_fact(fact)], extra=extra)


def _cmd_prob(inv: Invocation) -> Report:
    schema = _load_schema(inv)
    query = _load_query(inv, schema)
    db = _load_database(inv, schema)
    if inv.method == "brute":
        method = "brute"
        answer = prob.brute_prob(db, query, cap=_brute_cap(inv))
    elif inv.method in ("auto", "lifted"):
        method = "lifted"
        answer = prob.prob_eval(db, single_disjunct(query))
    else:
        raise InputError(f"unknown probability method {inv.method!r}; "
                         "expected auto, lifted or brute")
    extra = {"probability": {"value": rational_string(answer),
                             "decimal": decimal_string(answer)}}
    return Report(method=method, query=format_query(query), extra=extra)


def _cmd_gen_gap(inv: Invocation) -> Report:
    if inv.n < 1:
        raise InputError("--n must be at least 1")
    instance = naive.gen_gap_instance(inv.n)
    out = Path(inv.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "schema": out / "schema.txt",
            "facts": out / "facts.txt",
            "query": out / "query.txt",
        }
        paths["schema"].write_text(format_schema(instance.db.schema))
        paths["facts"].write_text(format_database(instance.db))
        paths["query"].write_text(format_query(instance.query) + "\n")
    except OSError as exc:
        raise InputError(f"cannot write to {inv.out!r}: {exc}") from exc
    value = instance.expected_value
    fact_text = (f"{instance.fact.relation.name}"
                 f"({', '.join(instance.fact.args)})")
    extra = {
        "n": instance.n,
        "files": {kind: str(p) for kind, p in paths.items()},
        "fact": fact_text,
        "endogenous_count": instance.db.n_endogenous,
        "expected_value": {"value": rational_string(value),
                           "decimal": decimal_string(value)},
    }
    return Report(method="gen-gap", query=format_query(instance.query),
                  facts=[FactRecord.for_fact(instance.fact)], extra=extra)


_COMMANDS = {
    "classify": _cmd_classify,
    "shapley": _cmd_shapley,
    "relevance": _cmd_relevance,
    "prob": _cmd_prob,
    "gen-gap": _cmd_gen_gap,
}


def run(inv: Invocation, stdout=None, stderr=None) -> int:
    """Execute one invocation; returns the process exit code."""
    stdout = stdout if stdout is not None else sys.stdout
    stderr = stderr if stderr is not None else sys.stderr
    handler = _COMMANDS.get(inv.command)
    if handler is None:
        print(f"unknown command {inv.command!r}", file=stderr)
        return 1
    try:
        report = handler(inv)
    except RefusedError as exc:
        print(f"refused: {exc}", file=stderr)
        return 2
    except InputError as exc:
        print(f"error: {exc}", file=stderr)
        return 1
    text = render_json(report) if inv.fmt == "json" else render_table(report)
    stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="shapfact",
                     description="Attribute boolean query answers to "
                                 "database facts.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_io(p, facts=True):
        p.add_argument("--query", required=True,
                       help="rule file, or inline rule text containing ':-'")
        p.add_argument("--schema", help="relation declarations file")
        if facts:
            p.add_argument("--facts", help="database file")
        p.add_argument("--format", dest="fmt", choices=("json", "table"),
                       default="json")

    p = sub.add_parser("classify", help="tractability analysis of a query")
    add_io(p, facts=False)

    p = sub.add_parser("shapley", help="attribution values for facts")
    add_io(p)
    target = p.add_mutually_exclusive_group(required=True)
    target.add_argument("--fact", help="one fact, e.g. 'TA(Adam)'")
    target.add_argument("--all", dest="all_facts", action="store_true",
                        help="every endogenous fact")
    p.add_argument("--method",
                   choices=("auto", "exact", "exo", "brute", "approx"),
                   default="auto")
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--cap", type=int,
                   help=f"endogenous-fact limit for enumeration "
                        f"(default {naive.DEFAULT_CAP}, or ${CAP_ENV_VAR})")
    p.add_argument("--trace", action="store_true",
                   help="include the rewrite steps in the output")

    p = sub.add_parser("relevance", help="can this fact matter at all?")
    add_io(p)
    p.add_argument("--fact", required=True)

    p = sub.add_parser("prob", help="query probability over uncertain facts")
    add_io(p)
    p.add_argument("--method", choices=("auto", "lifted", "brute"),
                   default="auto")
    p.add_argument("--cap", type=int)

    p = sub.add_parser("gen-gap",
                       help="emit a family instance whose attribution "
                            "values shrink super-exponentially")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--format", dest="fmt", choices=("json", "table"),
                   default="json")

    return parser


def invocation_from_args(namespace: argparse.Namespace) -> Invocation:
    inv = Invocation(command=namespace.command)
    for name in vars(inv):
        if hasattr(namespace, name):
            setattr(inv, name, getattr(namespace, name))
    return inv


def main(argv: Optional[Sequence[str]] = None) -> None:
    parser = build_parser()
    try:
        namespace = parser.parse_args(argv)
        code = run(invocation_from_args(namespace))
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = 1
    sys.exit(code)


if __name__ == "__main__":
    main()
