"""Text syntax for schemas, fact files, and queries.

Query syntax (Datalog-ish, one rule per statement)::

    q() :- Stud(x), not TA(x), Reg(x, y).

* identifiers starting with a lowercase letter are variables;
* identifiers starting with an uppercase letter or a digit, and quoted
  tokens (``'New York'``), are constants;
* ``not`` negates the atom that follows;
* a union is written as several rules with the same head — there is no
  ``;`` operator.

Schema files declare one relation per line, with an optional marker for
relations whose facts are all exogenous::

    relation Stud/1 exogenous
    relation TA/1

Fact files carry one fact per line.  Arguments in fact files are always
constants, whatever their capitalisation::

    exo  Stud(Adam)
    endo TA(Adam)
    prob 1/2 Reg(Adam, OS)

``#`` starts a comment in all three formats.  Probabilities are exact:
either a decimal literal or ``num/den``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from . import errors
from .model import (
    RESERVED_PREFIX,
    Atom,
    Const,
    CQNeg,
    Database,
    Fact,
    Provenance,
    Query,
    RelationSym,
    Schema,
    UCQNeg,
    Var,
    database_violations,
    disjuncts_of,
    is_variable_token,
    query_violations,
    raise_first,
)

# ---------------------------------------------------------------------------
# tokenizer
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<number>[0-9][A-Za-z0-9_]*)
  | (?P<string>'(?:[^'\\]|\\.)*')
  | (?P<implies>:-)
  | (?P<lparen>\()
  | (?P<rparen>\))
  | (?P<comma>,)
  | (?P<period>\.)
  | (?P<semicolon>;)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise errors.QuerySyntaxError(
                f"unexpected character {text[pos]!r}",
                line, pos - line_start + 1,
            )
        kind = m.lastgroup or ""
        value = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, value, line, pos - line_start + 1))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, len(text) - line_start + 1))
    return tokens


def _unquote(text: str) -> str:
    assert text.startswith("'") and text.endswith("'")
    return text[1:-1].replace("\\'", "'")


# ---------------------------------------------------------------------------
# query parser
# ---------------------------------------------------------------------------


class _QueryParser:
    """Recursive-descent parser over the token list."""

    def __init__(self, tokens: list[Token], schema: Optional[Schema]):
        self.tokens = tokens
        self.pos = 0
        self.schema = schema
        # relations seen so far when parsing without a schema; arity is
        # pinned by first use
        self.inferred: dict[str, RelationSym] = {}

    # -- primitives ---------------------------------------------------------

    def _peek(self) -> Token:
        return self.tokens[self.pos]

    def _advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def _expect(self, kind: str, what: str) -> Token:
        tok = self._peek()
        if tok.kind != kind:
            self._fail(f"expected {what}, found {tok.text or 'end of input'!r}")
        return self._advance()

    def _fail(self, message: str) -> None:
        tok = self._peek()
        if tok.kind == "semicolon":
            message = ("';' is not part of the syntax; write a union as "
                       "several rules with the same head")
        raise errors.QuerySyntaxError(message, tok.line, tok.column)

    # -- grammar ------------------------------------------------------------

    def parse(self) -> UCQNeg:
        rules: list[CQNeg] = []
        head: Optional[str] = None
        while self._peek().kind != "eof":
            name, body = self._rule()
            if head is None:
                head = name
            elif name != head:
                self._fail(f"all rules must share one head; got {name!r} "
                           f"after {head!r}")
            rules.append(CQNeg(tuple(body), head=head))
        if not rules:
            raise errors.QuerySyntaxError("no rules in query text", 1, 1)
        return UCQNeg(tuple(rules), head=head or "q")

    def _rule(self) -> tuple[str, list[Atom]]:
        head = self._expect("ident", "rule head").text
        self._expect("lparen", "'('")
        if self._peek().kind != "rparen":
            self._fail("the head takes no arguments (Boolean query)")
        self._advance()
        self._expect("implies", "':-'")
        body = [self._literal()]
        while self._peek().kind == "comma":
            self._advance()
            body.append(self._literal())
        self._expect("period", "'.' at end of rule")
        return head, body

    def _literal(self) -> Atom:
        negated = False
        tok = self._peek()
        if tok.kind == "ident" and tok.text == "not":
            self._advance()
            negated = True
        return self._atom(negated)

    def _atom(self, negated: bool) -> Atom:
        name_tok = self._expect("ident", "relation name")
        name = name_tok.text
        self._expect("lparen", "'('")
        terms: list = []
        if self._peek().kind != "rparen":
            terms.append(self._term())
            while self._peek().kind == "comma":
                self._advance()
                terms.append(self._term())
        self._expect("rparen", "')'")
        rel = self._resolve(name, len(terms), name_tok)
        return Atom(rel, tuple(terms), negated)

    def _term(self):
        tok = self._peek()
        if tok.kind == "ident":
            self._advance()
            if is_variable_token(tok.text):
                return Var(tok.text)
            return Const(tok.text)
        if tok.kind == "number":
            self._advance()
            return Const(tok.text)
        if tok.kind == "string":
            self._advance()
            return Const(_unquote(tok.text))
        self._fail("expected a term (variable or constant)")
        raise AssertionError("unreachable")

    def _resolve(self, name: str, arity: int, tok: Token) -> RelationSym:
        if name.startswith(RESERVED_PREFIX):
            raise errors.ReservedNameError(
                f"line {tok.line}: relation name {name} uses the reserved "
                f"prefix {RESERVED_PREFIX}"
            )
        if self.schema is not None:
            rel = self.schema.get(name)
            if rel is None:
                raise errors.UnknownRelationError(
                    f"line {tok.line}: relation {name} is not declared in "
                    f"the schema"
                )
            return rel
        rel = self.inferred.get(name)
        if rel is None:
            rel = RelationSym(name, arity)
            self.inferred[name] = rel
        return rel


def parse_query(text: str, schema: Optional[Schema] = None) -> UCQNeg:
    """Parse query text into a union of conjunctive rules.

    With a schema, relation names are resolved against it (and carry its
    exogenous markers); without one, relation symbols are inferred with the
    arity of their first occurrence.  Safety and arity violations raise.
    """
    query = _QueryParser(_tokenize(text), schema).parse()
    raise_first(query_violations(query, schema))
    return query


# ---------------------------------------------------------------------------
# schema and fact files
# ---------------------------------------------------------------------------

_SCHEMA_LINE = re.compile(
    r"relation\s+([A-Za-z_][A-Za-z0-9_]*)\s*/\s*([0-9]+)"
    r"(?:\s+(exogenous))?\s*\Z"
)


def _content_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def parse_schema(text: str) -> Schema:
    """Parse ``relation Name/arity [exogenous]`` lines into a schema."""
    relations: list[RelationSym] = []
    seen: set[str] = set()
    for lineno, line in _content_lines(text):
        m = _SCHEMA_LINE.match(line)
        if m is None:
            raise errors.SchemaSyntaxError(
                f"line {lineno}: expected 'relation Name/arity [exogenous]', "
                f"got: {line}"
            )
        name, arity, exo = m.group(1), int(m.group(2)), bool(m.group(3))
        if name.startswith(RESERVED_PREFIX):
            raise errors.ReservedNameError(
                f"line {lineno}: relation name {name} uses the reserved "
                f"prefix {RESERVED_PREFIX}"
            )
        if name in seen:
            raise errors.SchemaSyntaxError(
                f"line {lineno}: relation {name} declared twice"
            )
        seen.add(name)
        relations.append(RelationSym(name, arity, exo))
    return Schema(relations)


def _parse_ground_atom(text: str, lineno: int) -> tuple[str, tuple[str, ...]]:
    """Parse ``Name(c, ...)`` where every argument is a constant."""
    try:
        tokens = _tokenize(text)
    except errors.QuerySyntaxError as exc:
        raise errors.SchemaSyntaxError(f"line {lineno}: {exc}") from exc
    pos = 0

    def expect(kind: str) -> Token:
        nonlocal pos
        tok = tokens[pos]
        if tok.kind != kind:
            raise errors.SchemaSyntaxError(
                f"line {lineno}: malformed fact: {text}"
            )
        pos += 1
        return tok

    name = expect("ident").text
    expect("lparen")
    args: list[str] = []
    if tokens[pos].kind != "rparen":
        while True:
            tok = tokens[pos]
            if tok.kind in ("ident", "number"):
                args.append(tok.text)
                pos += 1
            elif tok.kind == "string":
                args.append(_unquote(tok.text))
                pos += 1
            else:
                raise errors.SchemaSyntaxError(
                    f"line {lineno}: malformed argument in: {text}"
                )
            if tokens[pos].kind == "comma":
                pos += 1
                continue
            break
    expect("rparen")
    expect("eof")
    return name, tuple(args)


def parse_fact_reference(text: str) -> tuple[str, tuple[str, ...]]:
    """Parse a fact written as ``Name(c, ...)``, e.g. for ``--fact``."""
    return _parse_ground_atom(text.strip(), 1)


_FACT_LINE = re.compile(r"(exo|endo|prob)\s+(.*)\Z")


def parse_facts(text: str, schema: Schema) -> Database:
    """Parse fact lines into a database over ``schema``.

    Identical duplicate lines are deduplicated; lines that disagree about an
    already-seen fact's provenance or probability are an error.
    """
    facts: list[Fact] = []
    for lineno, line in _content_lines(text):
        m = _FACT_LINE.match(line)
        if m is None:
            raise errors.SchemaSyntaxError(
                f"line {lineno}: expected 'exo|endo|prob ...', got: {line}"
            )
        keyword, rest = m.group(1), m.group(2).strip()
        probability: Optional[Fraction] = None
        if keyword == "prob":
            parts = rest.split(None, 1)
            if len(parts) != 2:
                raise errors.SchemaSyntaxError(
                    f"line {lineno}: expected 'prob p Name(...)', got: {line}"
                )
            try:
                probability = Fraction(parts[0])
            except (ValueError, ZeroDivisionError) as exc:
                raise errors.BadProbabilityError(
                    f"line {lineno}: bad probability {parts[0]!r}"
                ) from exc
            if not 0 <= probability <= 1:
                raise errors.BadProbabilityError(
                    f"line {lineno}: probability {probability} outside [0, 1]"
                )
            rest = parts[1]
        name, args = _parse_ground_atom(rest, lineno)
        rel = schema.get(name)
        if rel is None:
            raise errors.UnknownRelationError(
                f"line {lineno}: relation {name} is not declared in the schema"
            )
        if keyword == "exo":
            provenance = Provenance.EXOGENOUS
        elif keyword == "endo":
            provenance = Provenance.ENDOGENOUS
        else:  # prob
            if rel.exogenous_only and probability != 1:
                raise errors.BadProbabilityError(
                    f"line {lineno}: relation {name} is declared exogenous; "
                    f"its facts must have probability 1"
                )
            provenance = (Provenance.EXOGENOUS if rel.exogenous_only
                          else Provenance.ENDOGENOUS)
        facts.append(Fact(rel, args, provenance, probability))
    db = Database(schema, facts)
    raise_first(database_violations(db))
    return db


# ---------------------------------------------------------------------------
# rendering (inverse of the parsers above)
# ---------------------------------------------------------------------------

_BARE_ARG = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z|[0-9][A-Za-z0-9_]*\Z")


def format_query(query: Query) -> str:
    return "\n".join(str(d) for d in disjuncts_of(query))


def format_schema(schema: Schema) -> str:
    return "\n".join(str(rel) for rel in schema.relations)


def _format_arg(value: str) -> str:
    if _BARE_ARG.match(value):
        return value
    return "'" + value.replace("'", "\\'") + "'"


def format_fact(fact: Fact) -> str:
    atom = f"{fact.relation.name}({', '.join(_format_arg(a) for a in fact.args)})"
    if fact.probability is not None:
        return f"prob {fact.probability} {atom}"
    return f"{fact.provenance.value} {atom}"


def format_database(db: Database) -> str:
    return "\n".join(format_fact(f) for f in db.facts)
