"""Data model: relations, facts, databases, and Boolean queries with negation.

A database is a finite set of facts over a relational schema.  Each fact is
either *exogenous* (taken for granted; never attributed a share of the query
answer) or *endogenous* (a candidate cause whose contribution is measured).
Fact identity is content-addressed: two facts are the same fact iff they agree
on relation name and argument tuple; provenance and probability are attributes
of the fact, not part of its identity.

Queries are Boolean conjunctive queries with safe negation (`CQNeg`), or
unions of such (`UCQNeg`) written as repeated rules with the same head.
Evaluation is by homomorphism: the query is true on a fact set ``W`` iff some
assignment of constants to variables sends every positive atom into ``W`` and
no negated atom into ``W``.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Optional, Union

from .errors import DuplicateFactError

#: Relation names generated by the exogenous-facts rewrite start with this
#: prefix; user schemas must not use it.
RESERVED_PREFIX = "__exo_"

_BARE_CONSTANT = re.compile(r"[A-Z_][A-Za-z0-9_]*\Z|[0-9][A-Za-z0-9_]*\Z")
_VARIABLE_TOKEN = re.compile(r"[a-z][A-Za-z0-9_]*\Z")


class Provenance(enum.Enum):
    """Whether a fact is taken for granted or is a candidate cause."""

    EXOGENOUS = "exo"
    ENDOGENOUS = "endo"


# ---------------------------------------------------------------------------
# terms


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Const:
    value: str

    def __str__(self) -> str:
        if _BARE_CONSTANT.match(self.value):
            return self.value
        return "'" + self.value.replace("'", "\\'") + "'"


Term = Union[Var, Const]


def is_variable_token(token: str) -> bool:
    """True iff ``token`` would be read as a variable (lowercase-initial)."""
    return bool(_VARIABLE_TOKEN.match(token))


# ---------------------------------------------------------------------------
# schema


@dataclass(frozen=True)
class RelationSym:
    """A relation symbol.  ``exogenous_only`` marks relations whose facts
    are all exogenous (the schema-level default for the rewrite's relation
    set)."""

    name: str
    arity: int
    exogenous_only: bool = False

    def __str__(self) -> str:
        suffix = " exogenous" if self.exogenous_only else ""
        return f"relation {self.name}/{self.arity}{suffix}"


class Schema:
    """An ordered collection of relation symbols, unique by name."""

    def __init__(self, relations: Iterable[RelationSym]):
        self._by_name: dict[str, RelationSym] = {}
        for rel in relations:
            if rel.name in self._by_name:
                raise DuplicateFactError(f"relation {rel.name} declared twice")
            self._by_name[rel.name] = rel

    @property
    def relations(self) -> tuple[RelationSym, ...]:
        return tuple(self._by_name.values())

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __getitem__(self, name: str) -> RelationSym:
        return self._by_name[name]

    def get(self, name: str) -> Optional[RelationSym]:
        return self._by_name.get(name)

    def exogenous_relation_names(self) -> frozenset[str]:
        return frozenset(r.name for r in self.relations if r.exogenous_only)

    def extended(self, new_relations: Iterable[RelationSym],
                 dropped: Iterable[str] = ()) -> "Schema":
        drop = set(dropped)
        kept = [r for r in self.relations if r.name not in drop]
        return Schema(kept + list(new_relations))


# ---------------------------------------------------------------------------
# atoms and queries


@dataclass(frozen=True)
class Atom:
    relation: RelationSym
    terms: tuple[Term, ...]
    negated: bool = False

    @property
    def variables(self) -> tuple[str, ...]:
        """Variable names, unique, in first-occurrence order."""
        seen: dict[str, None] = {}
        for t in self.terms:
            if isinstance(t, Var):
                seen.setdefault(t.name, None)
        return tuple(seen)

    @property
    def is_ground(self) -> bool:
        return all(isinstance(t, Const) for t in self.terms)

    def substituted(self, mapping: Mapping[str, str]) -> "Atom":
        """Replace variables by constants according to ``mapping``."""
        terms = tuple(
            Const(mapping[t.name]) if isinstance(t, Var) and t.name in mapping else t
            for t in self.terms
        )
        return Atom(self.relation, terms, self.negated)

    def ground_args(self) -> tuple[str, ...]:
        assert self.is_ground
        return tuple(t.value for t in self.terms)  # type: ignore[union-attr]

    def __str__(self) -> str:
        body = f"{self.relation.name}({', '.join(str(t) for t in self.terms)})"
        return f"not {body}" if self.negated else body


@dataclass(frozen=True)
class CQNeg:
    """One conjunctive rule body (a single disjunct)."""

    atoms: tuple[Atom, ...]
    head: str = "q"

    @property
    def positives(self) -> tuple[Atom, ...]:
        return tuple(a for a in self.atoms if not a.negated)

    @property
    def negatives(self) -> tuple[Atom, ...]:
        return tuple(a for a in self.atoms if a.negated)

    @property
    def variables(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for a in self.atoms:
            for v in a.variables:
                seen.setdefault(v, None)
        return tuple(seen)

    @property
    def constants(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for a in self.atoms:
            for t in a.terms:
                if isinstance(t, Const):
                    seen.setdefault(t.value, None)
        return tuple(seen)

    def relation_names(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for a in self.atoms:
            seen.setdefault(a.relation.name, None)
        return tuple(seen)

    def __str__(self) -> str:
        body = ", ".join(str(a) for a in self.atoms)
        return f"{self.head}() :- {body}."


@dataclass(frozen=True)
class UCQNeg:
    """A union of conjunctive rules sharing one Boolean head."""

    disjuncts: tuple[CQNeg, ...]
    head: str = "q"

    def __str__(self) -> str:
        return "\n".join(str(d) for d in self.disjuncts)


Query = Union[CQNeg, UCQNeg]


def disjuncts_of(query: Query) -> tuple[CQNeg, ...]:
    """Uniform view of a query as a tuple of disjuncts."""
    if isinstance(query, CQNeg):
        return (query,)
    return query.disjuncts


def single_disjunct(query: Query) -> CQNeg:
    """Unwrap a query known to consist of a single conjunctive rule."""
    parts = disjuncts_of(query)
    if len(parts) != 1:
        from .errors import UnsupportedQueryError

        raise UnsupportedQueryError(
            f"expected a single conjunctive rule, got a union of {len(parts)}"
        )
    return parts[0]


# ---------------------------------------------------------------------------
# facts and databases


@dataclass(frozen=True, eq=False)
class Fact:
    relation: RelationSym
    args: tuple[str, ...]
    provenance: Provenance = Provenance.ENDOGENOUS
    probability: Optional[Fraction] = None

    @property
    def key(self) -> tuple[str, tuple[str, ...]]:
        return (self.relation.name, self.args)

    @property
    def endogenous(self) -> bool:
        return self.provenance is Provenance.ENDOGENOUS

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Fact):
            return NotImplemented
        return self.key == other.key

    def __hash__(self) -> int:
        return hash(self.key)

    def __str__(self) -> str:
        args = ", ".join(str(Const(a)) for a in self.args)
        return f"{self.relation.name}({args})"


def _fact_sort_key(fact: Fact) -> tuple[str, tuple[str, ...]]:
    return fact.key


class Database:
    """An immutable set of facts over a schema.

    Facts are deduplicated by content; two facts with the same relation and
    arguments but different provenance or probability are rejected as
    conflicting.  All fact tuples exposed by this class are in canonical
    order (sorted by relation name, then arguments), so every downstream
    computation is deterministic.
    """

    def __init__(self, schema: Schema, facts: Iterable[Fact]):
        self.schema = schema
        by_key: dict[tuple[str, tuple[str, ...]], Fact] = {}
        for fact in facts:
            prior = by_key.get(fact.key)
            if prior is None:
                by_key[fact.key] = fact
            elif (prior.provenance is not fact.provenance
                  or prior.probability != fact.probability):
                raise DuplicateFactError(
                    f"conflicting duplicate fact {fact}: "
                    f"{prior.provenance.value} vs {fact.provenance.value}"
                )
        self._by_key = by_key
        self.facts: tuple[Fact, ...] = tuple(
            sorted(by_key.values(), key=_fact_sort_key)
        )
        self.endogenous: tuple[Fact, ...] = tuple(
            f for f in self.facts if f.endogenous
        )
        self.exogenous: tuple[Fact, ...] = tuple(
            f for f in self.facts if not f.endogenous
        )
        by_rel: dict[str, list[Fact]] = {}
        for f in self.facts:
            by_rel.setdefault(f.relation.name, []).append(f)
        self._by_rel = {name: tuple(fs) for name, fs in by_rel.items()}

    @property
    def n_endogenous(self) -> int:
        return len(self.endogenous)

    def __len__(self) -> int:
        return len(self.facts)

    def __iter__(self) -> Iterator[Fact]:
        return iter(self.facts)

    def __contains__(self, fact: Fact) -> bool:
        return fact.key in self._by_key

    def get(self, relation: str, args: tuple[str, ...]) -> Optional[Fact]:
        return self._by_key.get((relation, args))

    def relation_facts(self, name: str) -> tuple[Fact, ...]:
        return self._by_rel.get(name, ())

    def tuples(self, name: str) -> frozenset[tuple[str, ...]]:
        return frozenset(f.args for f in self._by_rel.get(name, ()))

    # -- derived databases --------------------------------------------------

    def with_fact_exogenous(self, fact: Fact) -> "Database":
        """The same database with ``fact`` reclassified as exogenous."""
        self._require(fact)
        replaced = [
            Fact(f.relation, f.args, Provenance.EXOGENOUS, f.probability)
            if f == fact else f
            for f in self.facts
        ]
        return Database(self.schema, replaced)

    def without_fact(self, fact: Fact) -> "Database":
        """The same database with ``fact`` removed."""
        self._require(fact)
        return Database(self.schema, (f for f in self.facts if f != fact))

    def with_relations_replaced(
        self,
        dropped: Iterable[str],
        new_relations: Iterable[RelationSym],
        new_facts: Iterable[Fact],
    ) -> "Database":
        """Drop whole relations and add fresh ones (used by the rewrite)."""
        drop = set(dropped)
        schema = self.schema.extended(new_relations, dropped=drop)
        kept = [f for f in self.facts if f.relation.name not in drop]
        return Database(schema, kept + list(new_facts))

    def _require(self, fact: Fact) -> None:
        if fact.key not in self._by_key:
            from .errors import UnknownFactError

            raise UnknownFactError(f"fact {fact} is not in the database")


# ---------------------------------------------------------------------------
# validation and the active domain


def active_domain(db: Database, query: Optional[Query] = None) -> tuple[str, ...]:
    """All constants of the database plus, if given, those of the query,
    sorted.  This is the domain over which negated exogenous relations are
    complemented."""
    values: set[str] = set()
    for fact in db.facts:
        values.update(fact.args)
    if query is not None:
        for disjunct in disjuncts_of(query):
            values.update(disjunct.constants)
    return tuple(sorted(values))


def database_violations(db: Database) -> list[tuple[type, str]]:
    """Typed violations: ``(exception class, message)`` pairs."""
    from . import errors

    problems: list[tuple[type, str]] = []
    for rel in db.schema.relations:
        if rel.name.startswith(RESERVED_PREFIX):
            problems.append((errors.ReservedNameError,
                             f"relation {rel.name} uses the reserved prefix "
                             f"{RESERVED_PREFIX}"))
    for fact in db.facts:
        rel = db.schema.get(fact.relation.name)
        if rel is None:
            problems.append((errors.UnknownRelationError,
                             f"fact {fact}: relation {fact.relation.name} "
                             f"is not in the schema"))
            continue
        if len(fact.args) != rel.arity:
            problems.append((errors.ArityError,
                             f"fact {fact}: arity {len(fact.args)} != "
                             f"declared {rel.arity}"))
        if rel.exogenous_only and fact.endogenous:
            problems.append((errors.DuplicateFactError,
                             f"fact {fact}: relation {rel.name} is declared "
                             f"exogenous but the fact is endogenous"))
        if fact.probability is not None and not (0 <= fact.probability <= 1):
            problems.append((errors.BadProbabilityError,
                             f"fact {fact}: probability {fact.probability} "
                             f"outside [0, 1]"))
    return problems


def validate_database(db: Database) -> list[str]:
    """Return a list of violations (empty iff the database is valid)."""
    return [msg for _, msg in database_violations(db)]


def query_violations(query: Query,
                     schema: Optional[Schema] = None) -> list[tuple[type, str]]:
    """Typed violations: ``(exception class, message)`` pairs.

    Checks, per disjunct: safety (every variable of a negated atom occurs in
    some positive atom of the same disjunct), arity agreement with the
    relation symbol (and with the schema if one is supplied), and the
    reserved relation-name prefix.
    """
    from . import errors

    problems: list[tuple[type, str]] = []
    for i, disjunct in enumerate(disjuncts_of(query)):
        label = f"rule {i + 1}"
        positive_vars: set[str] = set()
        for atom in disjunct.positives:
            positive_vars.update(atom.variables)
        for atom in disjunct.negatives:
            for v in atom.variables:
                if v not in positive_vars:
                    problems.append((errors.SafetyError,
                                     f"{label}: unsafe variable {v} occurs "
                                     f"only under negation in {atom}"))
        for atom in disjunct.atoms:
            if len(atom.terms) != atom.relation.arity:
                problems.append((errors.ArityError,
                                 f"{label}: atom {atom} has "
                                 f"{len(atom.terms)} arguments, relation "
                                 f"declares {atom.relation.arity}"))
            if atom.relation.name.startswith(RESERVED_PREFIX):
                problems.append((errors.ReservedNameError,
                                 f"{label}: relation name "
                                 f"{atom.relation.name} uses the reserved "
                                 f"prefix {RESERVED_PREFIX}"))
            if schema is not None:
                declared = schema.get(atom.relation.name)
                if declared is None:
                    problems.append((errors.UnknownRelationError,
                                     f"{label}: relation "
                                     f"{atom.relation.name} is not in the "
                                     f"schema"))
                elif declared.arity != atom.relation.arity:
                    problems.append((errors.ArityError,
                                     f"{label}: atom {atom} disagrees with "
                                     f"schema arity {declared.arity}"))
    return problems


def validate_query(query: Query, schema: Optional[Schema] = None) -> list[str]:
    """Return a list of violations (empty iff the query is valid)."""
    return [msg for _, msg in query_violations(query, schema)]


def raise_first(problems: list[tuple[type, str]]) -> None:
    """Raise the first violation as its typed exception, if any."""
    if problems:
        exc_type, msg = problems[0]
        if len(problems) > 1:
            msg += f" (and {len(problems) - 1} more problem(s))"
        raise exc_type(msg)
