"""Brute-force reference implementations.

Everything here is deliberately simple: evaluation by backtracking join,
attribution by enumerating all subsets of the endogenous facts, relevance by
inspecting that same enumeration.  These are the oracles the polynomial-time
engines are tested against, so clarity beats speed; the only concession is a
per-world profile table that avoids re-running the join for each of the
``2^n`` subsets.

The attribution being computed: with the exogenous facts always present, a
coalition is a set ``E`` of endogenous facts, its worth is the truth value
of the query on ``exogenous ∪ E``, and a fact's value is its Shapley value
in that coalitional game::

    value(f)  =  sum over E ⊆ endo \\ {f} of
                 |E|! (n - 1 - |E|)! / n!  *  (worth(E ∪ {f}) - worth(E))

where ``n`` is the number of endogenous facts.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Iterable, Iterator, Mapping, Optional, Union

from .errors import CapExceededError, FactNotEndogenousError
from .model import (
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
    disjuncts_of,
)

#: Default ceiling on the number of endogenous facts the subset enumeration
#: will accept (2^cap worlds).  The CLI can override it via SHAPFACT_CAP.
DEFAULT_CAP = 20

FactSource = Union[Database, Iterable[Fact]]


# ---------------------------------------------------------------------------
# homomorphism search
# ---------------------------------------------------------------------------


def _facts_of(source: FactSource) -> tuple[Fact, ...]:
    if isinstance(source, Database):
        return source.facts
    return tuple(source)


def _index(facts: Iterable[Fact]) -> dict[str, list[tuple[str, ...]]]:
    """Relation name -> sorted argument tuples."""
    by_rel: dict[str, set[tuple[str, ...]]] = {}
    for f in facts:
        by_rel.setdefault(f.relation.name, set()).add(f.args)
    return {name: sorted(args) for name, args in by_rel.items()}


def _match(atom: Atom, args: tuple[str, ...],
           binding: Mapping[str, str]) -> Optional[dict[str, str]]:
    """The new variable bindings needed for ``atom`` to hit ``args``, or
    None if constants or existing bindings disagree."""
    if len(args) != len(atom.terms):
        return None
    new: dict[str, str] = {}
    for term, value in zip(atom.terms, args):
        if isinstance(term, Const):
            if term.value != value:
                return None
        else:
            bound = binding.get(term.name, new.get(term.name))
            if bound is None:
                new[term.name] = value
            elif bound != value:
                return None
    return new


def iter_homomorphisms(atoms: Iterable[Atom],
                       index: Mapping[str, list[tuple[str, ...]]],
                       binding: Optional[Mapping[str, str]] = None
                       ) -> Iterator[dict[str, str]]:
    """All assignments sending every (positive) atom into the indexed facts.

    At each step the atom with the fewest matching tuples under the current
    partial assignment is expanded first; with the sorted index this makes
    the enumeration order deterministic.
    """
    yield from _search(list(atoms), index, dict(binding or {}))


def _search(atoms: list[Atom], index: Mapping[str, list[tuple[str, ...]]],
            binding: dict[str, str]) -> Iterator[dict[str, str]]:
    if not atoms:
        yield dict(binding)
        return
    best_at = 0
    best: Optional[list[dict[str, str]]] = None
    for i, atom in enumerate(atoms):
        cands = []
        for args in index.get(atom.relation.name, ()):
            delta = _match(atom, args, binding)
            if delta is not None:
                cands.append(delta)
        if best is None or len(cands) < len(best):
            best_at, best = i, cands
            if not cands:
                return
    rest = atoms[:best_at] + atoms[best_at + 1:]
    assert best is not None
    for delta in best:
        binding.update(delta)
        yield from _search(rest, index, binding)
        for name in delta:
            del binding[name]


def eval_boolean(world: FactSource, query: Query) -> bool:
    """Truth value of the query on the given set of facts."""
    facts = _facts_of(world)
    index = _index(facts)
    present = {f.key for f in facts}
    for disjunct in disjuncts_of(query):
        for h in iter_homomorphisms(disjunct.positives, index):
            if all((atom.substituted(h).relation.name,
                    atom.substituted(h).ground_args()) not in present
                   for atom in disjunct.negatives):
                return True
    return False


# ---------------------------------------------------------------------------
# per-world profiles
# ---------------------------------------------------------------------------


def hom_profiles(db: Database, query: Query
                 ) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Compress the query into conditions on endogenous facts.

    Every assignment that sends the positive atoms into the *full* database
    and no negative atom onto an exogenous fact is summarised as a pair
    ``(P, N)`` of endogenous fact indices: the assignment witnesses the
    query on ``exogenous ∪ E`` iff ``P ⊆ E`` and ``N ∩ E = ∅``.  The query
    is true on a world iff some profile fires, because a world's
    assignments are exactly the full-database assignments whose positive
    images survive in it.
    """
    endo_pos = {f.key: i for i, f in enumerate(db.endogenous)}
    index = _index(db.facts)
    exo_present = {f.key for f in db.exogenous}
    profiles: set[tuple[tuple[int, ...], tuple[int, ...]]] = set()
    for disjunct in disjuncts_of(query):
        for h in iter_homomorphisms(disjunct.positives, index):
            pos: set[int] = set()
            for atom in disjunct.positives:
                image = atom.substituted(h)
                key = (image.relation.name, image.ground_args())
                idx = endo_pos.get(key)
                if idx is not None:
                    pos.add(idx)
            neg: set[int] = set()
            ok = True
            for atom in disjunct.negatives:
                image = atom.substituted(h)
                key = (image.relation.name, image.ground_args())
                if key in exo_present:
                    ok = False
                    break
                idx = endo_pos.get(key)
                if idx is not None:
                    neg.add(idx)
            if ok:
                profiles.add((tuple(sorted(pos)), tuple(sorted(neg))))
    return sorted(profiles)


class SubsetOracle:
    """Query truth over all ``2^n`` endogenous subsets, via profiles."""

    def __init__(self, db: Database, query: Query, cap: int = DEFAULT_CAP):
        n = db.n_endogenous
        if n > cap:
            raise CapExceededError(
                f"{n} endogenous facts exceed the brute-force cap {cap}"
            )
        self.db = db
        self.query = query
        self.n = n
        self.masks = [
            (_mask(p), _mask(m)) for p, m in hom_profiles(db, query)
        ]
        self._table: Optional[list[bool]] = None

    def sat(self, mask: int) -> bool:
        """Truth of the query on ``exogenous ∪ E`` with E encoded bitwise."""
        return any((mask & p) == p and not (mask & n)
                   for p, n in self.masks)

    def sat_table(self) -> list[bool]:
        if self._table is None:
            self._table = [self.sat(m) for m in range(1 << self.n)]
        return self._table

    def endo_bit(self, fact: Fact) -> int:
        for i, f in enumerate(self.db.endogenous):
            if f == fact:
                return i
        raise FactNotEndogenousError(
            f"fact {fact} is not an endogenous fact of the database"
        )


def _mask(indices: Iterable[int]) -> int:
    m = 0
    for i in indices:
        m |= 1 << i
    return m


# ---------------------------------------------------------------------------
# brute-force attribution
# ---------------------------------------------------------------------------


def shapley_weight(n: int, k: int) -> Fraction:
    """The permutation weight ``k! (n-1-k)! / n!`` of a coalition of size
    ``k`` out of ``n`` players."""
    return Fraction(factorial(k) * factorial(n - 1 - k), factorial(n))


def brute_count_satisfying(db: Database, query: Query,
                           cap: int = DEFAULT_CAP) -> list[int]:
    """``result[k]`` = number of k-subsets ``E`` of the endogenous facts
    with the query true on ``exogenous ∪ E``."""
    oracle = SubsetOracle(db, query, cap)
    counts = [0] * (oracle.n + 1)
    for mask, ok in enumerate(oracle.sat_table()):
        if ok:
            counts[_popcount(mask)] += 1
    return counts


def _popcount(mask: int) -> int:
    return bin(mask).count("1")


def brute_shapley(db: Database, query: Query, fact: Fact,
                  cap: int = DEFAULT_CAP) -> Fraction:
    """Shapley value of ``fact`` by enumerating all coalitions."""
    oracle = SubsetOracle(db, query, cap)
    return _shapley_from_table(oracle, oracle.endo_bit(fact))


def brute_shapley_all(db: Database, query: Query,
                      cap: int = DEFAULT_CAP) -> dict[Fact, Fraction]:
    """Shapley values of every endogenous fact (one shared truth table)."""
    oracle = SubsetOracle(db, query, cap)
    return {
        fact: _shapley_from_table(oracle, bit)
        for bit, fact in enumerate(db.endogenous)
    }


def _shapley_from_table(oracle: SubsetOracle, bit: int) -> Fraction:
    n = oracle.n
    table = oracle.sat_table()
    fbit = 1 << bit
    # tally the marginal contributions by coalition size, then weight once
    deltas = [0] * n
    for mask in range(1 << n):
        if mask & fbit:
            continue
        delta = int(table[mask | fbit]) - int(table[mask])
        if delta:
            deltas[_popcount(mask)] += delta
    return sum(
        (shapley_weight(n, k) * d for k, d in enumerate(deltas) if d),
        Fraction(0),
    )


# ---------------------------------------------------------------------------
# brute-force relevance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BruteRelevance:
    """Ground truth for the relevance tests.

    ``pos_witness`` is a coalition not satisfying the query that does once
    the fact is added; ``neg_witness`` the mirror image."""

    pos_relevant: bool
    neg_relevant: bool
    pos_witness: Optional[tuple[Fact, ...]] = None
    neg_witness: Optional[tuple[Fact, ...]] = None

    @property
    def relevant(self) -> bool:
        return self.pos_relevant or self.neg_relevant


def brute_relevance(db: Database, query: Query, fact: Fact,
                    cap: int = DEFAULT_CAP) -> BruteRelevance:
    """Scan all coalitions for ones whose truth value the fact flips."""
    oracle = SubsetOracle(db, query, cap)
    fbit = 1 << oracle.endo_bit(fact)
    table = oracle.sat_table()
    pos = neg = None
    for mask in range(1 << oracle.n):
        if mask & fbit:
            continue
        base, extended = table[mask], table[mask | fbit]
        if pos is None and extended and not base:
            pos = mask
        if neg is None and base and not extended:
            neg = mask
        if pos is not None and neg is not None:
            break
    endo = db.endogenous
    unpack = lambda m: tuple(f for i, f in enumerate(endo) if m >> i & 1)
    return BruteRelevance(
        pos_relevant=pos is not None,
        neg_relevant=neg is not None,
        pos_witness=None if pos is None else unpack(pos),
        neg_witness=None if neg is None else unpack(neg),
    )


# ---------------------------------------------------------------------------
# the vanishing-value family
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GapInstance:
    """A scalable instance whose distinguished fact has value
    ``n! n! / (2n+1)!`` — positive, but exponentially small.

    It separates additive from multiplicative approximation: an additive
    estimator may round the value to 0, which any multiplicative guarantee
    must not."""

    db: Database
    query: UCQNeg
    fact: Fact
    n: int

    @property
    def expected_value(self) -> Fraction:
        return Fraction(factorial(self.n) ** 2, factorial(2 * self.n + 1))


def gen_gap_instance(n: int) -> GapInstance:
    """Build the n-th vanishing-value instance.

    Query: ``q() :- R(x), S(x, y), not R(y).`` with S exogenous.  The
    distinguished fact only matters once all n blocker facts have arrived
    and none of the n alternative witnesses has, so exactly one coalition
    (of size n out of 2n+1) is flipped.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rel_r = RelationSym("R", 1)
    rel_s = RelationSym("S", 2, exogenous_only=True)
    schema = Schema([rel_r, rel_s])
    facts: list[Fact] = []
    for i in range(2 * n + 1):
        facts.append(Fact(rel_s, (f"cx_{i}", f"cy_{i}"), Provenance.EXOGENOUS))
    for i in range(1, n + 1):
        facts.append(Fact(rel_r, (f"cx_{i}",), Provenance.EXOGENOUS))
        facts.append(Fact(rel_r, (f"cy_{i}",), Provenance.ENDOGENOUS))
    distinguished = Fact(rel_r, ("cx_0",), Provenance.ENDOGENOUS)
    facts.append(distinguished)
    for i in range(n + 1, 2 * n + 1):
        facts.append(Fact(rel_r, (f"cx_{i}",), Provenance.ENDOGENOUS))
    query = UCQNeg((CQNeg((
        Atom(rel_r, (Var("x"),)),
        Atom(rel_s, (Var("x"), Var("y"))),
        Atom(rel_r, (Var("y"),), negated=True),
    )),))
    db = Database(schema, facts)
    return GapInstance(db=db, query=query, fact=distinguished, n=n)
