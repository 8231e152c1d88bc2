"""Deciding whether a fact's attribution is zero, without computing it.

A fact is *positively relevant* if adding it flips some coalition from
false to true, *negatively relevant* if it flips one from true to false,
and its Shapley value is non-zero exactly when it is relevant either way.
For queries in which every relation occurs with a single polarity, both
directions can be decided in polynomial time by scanning assignments of
the query into the full database:

* positive side — some assignment must send a positive atom onto the fact;
  the assignment's endogenous positive images (minus the fact) plus every
  endogenous fact of negated relations *not* hit by the assignment form
  the candidate coalition, and the fact is relevant iff that coalition
  does not already satisfy the query.
* negative side — some assignment must send a negated atom onto the fact;
  the candidate coalition keeps the positive images and the un-hit negated
  endogenous facts, and the fact is relevant iff the query fails once the
  fact joins.

Witnesses are returned and are replayable: the coalition really is flipped
by the fact, which the tests re-check against plain evaluation.  For
queries mixing polarities the problem is as hard as satisfiability, so
these functions refuse them rather than answer unreliably.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

from .errors import FactNotEndogenousError, NotPolarityConsistentError
from .model import CQNeg, Database, Fact, Query, disjuncts_of
from .naive import _index, _match, eval_boolean, iter_homomorphisms
from .structure import is_polarity_consistent


@dataclass(frozen=True)
class RelevanceWitness:
    """A replayable certificate: ``coalition`` does not contain the fact,
    and adding the fact flips the query's truth value in the direction
    given by ``side``."""

    side: str  # "positive" | "negative"
    assignment: tuple[tuple[str, str], ...]
    coalition: tuple[Fact, ...]
    disjunct: int = 0


@dataclass(frozen=True)
class RelevanceResult:
    pos_relevant: bool
    neg_relevant: bool
    witness: Optional[RelevanceWitness] = None

    @property
    def relevant(self) -> bool:
        return self.pos_relevant or self.neg_relevant


def _checked_fact(db: Database, fact: Fact) -> Fact:
    stored = db.get(*fact.key)
    if stored is None or not stored.endogenous:
        raise FactNotEndogenousError(
            f"fact {fact} is not an endogenous fact of the database"
        )
    return stored


def _require_polarity_consistent(query: Query) -> None:
    if not is_polarity_consistent(query):
        raise NotPolarityConsistentError(
            "some relation occurs both positively and negatively; the "
            "relevance test does not apply"
        )


def _negated_endo(db: Database, rule: CQNeg) -> set[Fact]:
    names = {a.relation.name for a in rule.negatives}
    return {f for f in db.endogenous if f.relation.name in names}


def _pos_witness_coalitions(db: Database, rule: CQNeg, fact: Fact
                            ) -> Iterator[tuple[dict[str, str], set[Fact]]]:
    """Assignments anchoring a positive atom on the fact, with their
    candidate coalitions."""
    index = _index(db.facts)
    exo_keys = {f.key for f in db.exogenous}
    endo_by_key = {f.key: f for f in db.endogenous}
    kept_negated = _negated_endo(db, rule)
    positives = list(rule.positives)
    for anchor_at, anchor in enumerate(positives):
        if anchor.relation.name != fact.relation.name:
            continue
        seed = _match(anchor, fact.args, {})
        if seed is None:
            continue
        others = positives[:anchor_at] + positives[anchor_at + 1:]
        for h in iter_homomorphisms(others, index, seed):
            images_pos: set[Fact] = set()
            for atom in positives:
                image = atom.substituted(h)
                hit = endo_by_key.get((image.relation.name,
                                       image.ground_args()))
                if hit is not None:
                    images_pos.add(hit)
            hit_negated: set[Fact] = set()
            blocked = False
            for atom in rule.negatives:
                image = atom.substituted(h)
                key = (image.relation.name, image.ground_args())
                if key in exo_keys:
                    blocked = True
                    break
                hit = endo_by_key.get(key)
                if hit is not None:
                    hit_negated.add(hit)
            if blocked:
                continue
            coalition = (images_pos - {fact}) | (kept_negated - hit_negated)
            yield h, coalition


def _neg_witness_coalitions(db: Database, rule: CQNeg, fact: Fact
                            ) -> Iterator[tuple[dict[str, str], set[Fact]]]:
    """Assignments sending some negated atom onto the fact, with their
    candidate coalitions."""
    if all(a.relation.name != fact.relation.name for a in rule.negatives):
        return
    index = _index(db.facts)
    exo_keys = {f.key for f in db.exogenous}
    endo_by_key = {f.key: f for f in db.endogenous}
    kept_negated = _negated_endo(db, rule)
    for h in iter_homomorphisms(rule.positives, index):
        images_pos: set[Fact] = set()
        for atom in rule.positives:
            image = atom.substituted(h)
            hit = endo_by_key.get((image.relation.name, image.ground_args()))
            if hit is not None:
                images_pos.add(hit)
        hit_negated: set[Fact] = set()
        blocked = False
        onto_fact = False
        for atom in rule.negatives:
            image = atom.substituted(h)
            key = (image.relation.name, image.ground_args())
            if key in exo_keys:
                blocked = True
                break
            hit = endo_by_key.get(key)
            if hit is not None:
                hit_negated.add(hit)
                if hit == fact:
                    onto_fact = True
        if blocked or not onto_fact:
            continue
        coalition = images_pos | (kept_negated - hit_negated)
        yield h, coalition


def _packed(h: dict[str, str]) -> tuple[tuple[str, str], ...]:
    return tuple(sorted(h.items()))


def is_pos_relevant(db: Database, query: Query, fact: Fact
                    ) -> RelevanceResult:
    """Does adding the fact ever turn the query true?  Polynomial time for
    polarity-consistent queries."""
    fact = _checked_fact(db, fact)
    _require_polarity_consistent(query)
    exo = list(db.exogenous)
    for d, rule in enumerate(disjuncts_of(query)):
        for h, coalition in _pos_witness_coalitions(db, rule, fact):
            if not eval_boolean(exo + sorted(coalition, key=lambda f: f.key),
                                query):
                witness = RelevanceWitness(
                    "positive", _packed(h),
                    tuple(sorted(coalition, key=lambda f: f.key)), d,
                )
                return RelevanceResult(True, False, witness)
    return RelevanceResult(False, False)


def is_neg_relevant(db: Database, query: Query, fact: Fact
                    ) -> RelevanceResult:
    """Does adding the fact ever turn the query false?"""
    fact = _checked_fact(db, fact)
    _require_polarity_consistent(query)
    exo = list(db.exogenous)
    for d, rule in enumerate(disjuncts_of(query)):
        for h, coalition in _neg_witness_coalitions(db, rule, fact):
            world = exo + sorted(coalition | {fact}, key=lambda f: f.key)
            if not eval_boolean(world, query):
                witness = RelevanceWitness(
                    "negative", _packed(h),
                    tuple(sorted(coalition, key=lambda f: f.key)), d,
                )
                return RelevanceResult(False, True, witness)
    return RelevanceResult(False, False)


def relevance(db: Database, query: Query, fact: Fact) -> RelevanceResult:
    """Both directions at once; the witness comes from whichever side
    fired (positive side preferred)."""
    pos = is_pos_relevant(db, query, fact)
    neg = is_neg_relevant(db, query, fact)
    return RelevanceResult(pos.pos_relevant, neg.neg_relevant,
                           pos.witness or neg.witness)


def ucq_is_relevant(db: Database, query: Query, fact: Fact
                    ) -> RelevanceResult:
    """Relevance for a union, decided disjunct by disjunct.

    Sound because a union is true iff some disjunct is; each disjunct's
    witnesses are checked against the whole union, so a reported witness
    always replays."""
    return relevance(db, query, fact)


def shapley_is_zero(db: Database, query: Query, fact: Fact) -> bool:
    """True iff the fact's Shapley value is exactly zero (equivalently:
    the fact is relevant in neither direction)."""
    return not relevance(db, query, fact).relevant
