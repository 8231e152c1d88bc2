"""Query probability over tuple-independent databases.

Every fact carries a probability (facts without one are deterministic,
probability 1) and is present in a random world independently of all
others.  The probability that the query holds is computed three ways:

* :func:`brute_prob` — enumerate the worlds over the properly
  probabilistic facts; the exact-by-definition oracle.
* :func:`prob_eval_hierarchical` — lifted inference for hierarchical
  self-join-free rules, walking the same decomposition as the exact
  attribution engine (independent parts multiply; a root split succeeds
  unless every root value's sub-problem fails).
* :func:`prob_eval` — first rewrite away a set of deterministic
  relations (see :mod:`shapfact.rewriting`), then run the lifted engine.
  Rules that keep a non-hierarchical path through ordinary relations are
  refused with the witness attached.

All arithmetic is exact (:class:`fractions.Fraction`)."""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from typing import Optional

from .decompose import (
    bucket_facts,
    partition_by_root,
    root_variable,
    split_components,
    substitute_all,
)
from .errors import (
    BadProbabilityError,
    CapExceededError,
    NotHierarchicalError,
    SelfJoinError,
)
from .model import Atom, Database, Fact, Query, single_disjunct
from .naive import DEFAULT_CAP, eval_boolean
from .rewriting import DEFAULT_BLOWUP_CAP, rewrite
from .structure import is_hierarchical, is_self_join_free, resolve_exogenous


def fact_probability(fact: Fact) -> Fraction:
    """A fact's presence probability; facts without one are certain."""
    if fact.probability is None:
        return Fraction(1)
    return fact.probability


def brute_prob(db: Database, query: Query, cap: int = DEFAULT_CAP) -> Fraction:
    """World enumeration over the properly probabilistic facts."""
    certain = [f for f in db.facts if fact_probability(f) == 1]
    uncertain = [f for f in db.facts if 0 < fact_probability(f) < 1]
    if len(uncertain) > cap:
        raise CapExceededError(
            f"{len(uncertain)} probabilistic facts exceed the enumeration "
            f"cap {cap}"
        )
    total = Fraction(0)
    for r in range(len(uncertain) + 1):
        for chosen in combinations(uncertain, r):
            picked = set(chosen)
            weight = Fraction(1)
            for f in uncertain:
                p = fact_probability(f)
                weight *= p if f in picked else 1 - p
            if eval_boolean(certain + list(chosen), query):
                total += weight
    return total


def prob_eval_hierarchical(db: Database, query: Query) -> Fraction:
    """Lifted inference for a hierarchical self-join-free rule."""
    rule = single_disjunct(query)
    if not is_self_join_free(rule):
        raise SelfJoinError("lifted inference requires a self-join-free rule")
    if not is_hierarchical(rule):
        raise NotHierarchicalError(
            "lifted inference requires a hierarchical rule"
        )
    return _prob(list(rule.atoms), list(db.facts))


def _prob(atoms: list[Atom], facts: list[Fact]) -> Fraction:
    if not atoms:
        return Fraction(1)
    components = split_components(atoms)
    buckets, free = bucket_facts(atoms, components, facts)
    if len(components) == 1 and not free:
        component = [atoms[i] for i in components[0]]
        if len(component) == 1 and component[0].is_ground:
            return _ground_prob(component[0], facts)
        return _root_split_prob(component, facts)
    result = Fraction(1)
    for component, bucket in zip(components, buckets):
        result *= _prob([atoms[i] for i in component], bucket)
    return result


def _ground_prob(atom: Atom, facts: list[Fact]) -> Fraction:
    present = [f for f in facts if f.args == atom.ground_args()]
    if not present:
        return Fraction(1) if atom.negated else Fraction(0)
    p = fact_probability(present[0])
    return 1 - p if atom.negated else p


def _root_split_prob(atoms: list[Atom], facts: list[Fact]) -> Fraction:
    root = root_variable(atoms)
    if root is None:
        raise NotHierarchicalError(
            "entangled component without a shared variable; the rule is "
            "not hierarchical"
        )
    # the component fails iff every root value's sub-problem fails, and
    # different values touch disjoint facts
    p_unsat = Fraction(1)
    for value, group in sorted(partition_by_root(atoms, facts, root).items()):
        p_unsat *= 1 - _prob(substitute_all(atoms, root, value), group)
    return 1 - p_unsat


def prob_eval(db: Database, query: Query,
              x: Optional[frozenset[str]] = None,
              cap: int = DEFAULT_BLOWUP_CAP) -> Fraction:
    """Query probability after rewriting away deterministic relations.

    The relations in ``x`` (default: the schema's exogenous markers) must
    hold only deterministic facts; the rewrite eliminates them, and the
    lifted engine prices the rest.  Raises ``HasNonHierPathError`` (with
    witness) when a non-hierarchical path survives, ``SelfJoinError`` on
    repeated relations."""
    rule = single_disjunct(query)
    names = resolve_exogenous(rule, x)
    for name in sorted(names):
        for fact in db.relation_facts(name):
            if fact_probability(fact) != 1:
                raise BadProbabilityError(
                    f"relation {name} is treated as deterministic but fact "
                    f"{fact} has probability {fact_probability(fact)}"
                )
    new_db, new_rule, _trace = rewrite(db, rule, names, cap)
    return prob_eval_hierarchical(new_db, new_rule)
