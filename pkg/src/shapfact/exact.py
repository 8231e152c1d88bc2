"""Exact attribution for hierarchical self-join-free rules.

The workhorse is :func:`count_satisfying_subsets`: for each ``k`` it counts
the k-subsets of the endogenous facts that, together with the exogenous
facts, satisfy the query.  A fact's Shapley value then needs only two such
vectors — one with the fact promoted to exogenous, one with it deleted::

    value(f) = sum_k  k! (n-1-k)! / n!  *  (counts_promoted[k] - counts_deleted[k])

because the coalitions counted with the fact promoted are exactly the
``E ∪ {f}`` worlds and those counted with it deleted the ``E`` worlds.

Counting recurses over the query structure (see :mod:`shapfact.decompose`):

* independent components and free facts multiply — a convolution of their
  count vectors (free endogenous facts contribute plain binomials);
* a single entangled component is split on its root variable: for each
  root value the sub-problem's *unsatisfying* counts convolve (worlds
  multiply exactly when all sub-worlds fail), and the result is
  complemented against the binomials.

Ground atoms bottom out as one-fact components: a present endogenous fact
contributes the vector [0, 1] (positive atom) or [1, 0] (negated), an
exogenous one [1] or [0], a missing one [0] or [1].
"""

from __future__ import annotations

from fractions import Fraction
from math import comb
from typing import Sequence

from .decompose import (
    bucket_facts,
    partition_by_root,
    root_variable,
    split_components,
    substitute_all,
)
from .errors import (
    FactNotEndogenousError,
    InternalError,
    NotHierarchicalError,
    SelfJoinError,
)
from .model import Atom, Database, Fact, Query, single_disjunct
from .naive import shapley_weight
from .structure import is_hierarchical, is_self_join_free

CountVector = list[int]


def _binomials(n: int) -> CountVector:
    return [comb(n, k) for k in range(n + 1)]


def _convolve(a: Sequence[int], b: Sequence[int]) -> CountVector:
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if not x:
            continue
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def _endo_count(facts: Sequence[Fact]) -> int:
    return sum(1 for f in facts if f.endogenous)


def count_satisfying_subsets(db: Database, query: Query,
                             cross_check: bool = False) -> CountVector:
    """The vector ``v`` with ``v[k]`` = number of k-subsets of the
    endogenous facts satisfying the query together with the exogenous ones.

    Requires a single self-join-free hierarchical rule.  With
    ``cross_check`` the result is verified against the subset-enumeration
    oracle (small databases only; meant for debugging and tests).
    """
    rule = single_disjunct(query)
    if not is_self_join_free(rule):
        raise SelfJoinError("exact counting requires a self-join-free rule")
    if not is_hierarchical(rule):
        raise NotHierarchicalError(
            "exact counting requires a hierarchical rule"
        )
    result = _counts(list(rule.atoms), list(db.facts))
    if cross_check:
        from .naive import brute_count_satisfying

        reference = brute_count_satisfying(db, query)
        if result != reference:
            raise InternalError(
                f"count mismatch: recursion {result} vs enumeration "
                f"{reference}"
            )
    return result


def _counts(atoms: list[Atom], facts: list[Fact]) -> CountVector:
    n = _endo_count(facts)
    if not atoms:
        return _binomials(n)
    components = split_components(atoms)
    buckets, free = bucket_facts(atoms, components, facts)
    if len(components) == 1 and not free:
        component = [atoms[i] for i in components[0]]
        if len(component) == 1 and component[0].is_ground:
            return _ground_counts(component[0], facts)
        return _root_split(component, facts)
    # independent parts: convolve the component vectors and the free
    # endogenous facts' binomials
    result = _binomials(len([f for f in free if f.endogenous]))
    for component, bucket in zip(components, buckets):
        sub = _counts([atoms[i] for i in component], bucket)
        result = _convolve(result, sub)
    return result


def _ground_counts(atom: Atom, facts: list[Fact]) -> CountVector:
    """Count vector of a single ground atom over its (at most one) fact."""
    present = [f for f in facts if f.args == atom.ground_args()]
    if not present:
        return [1] if atom.negated else [0]
    fact = present[0]
    if fact.endogenous:
        return [1, 0] if atom.negated else [0, 1]
    return [0] if atom.negated else [1]


def _root_split(atoms: list[Atom], facts: list[Fact]) -> CountVector:
    root = root_variable(atoms)
    if root is None:
        raise NotHierarchicalError(
            "entangled component without a shared variable; the rule is "
            "not hierarchical"
        )
    n = _endo_count(facts)
    # the component fails exactly when every root value's sub-problem
    # fails; failures over disjoint fact groups convolve
    unsat = [1]
    for value, group in sorted(partition_by_root(atoms, facts, root).items()):
        sub_sat = _counts(substitute_all(atoms, root, value), group)
        m = _endo_count(group)
        sub_unsat = [comb(m, j) - sub_sat[j] for j in range(m + 1)]
        unsat = _convolve(unsat, sub_unsat)
    if len(unsat) != n + 1:
        raise InternalError("root split lost track of endogenous facts")
    return [comb(n, k) - unsat[k] for k in range(n + 1)]


def shapley_exact(db: Database, query: Query, fact: Fact,
                  cross_check: bool = False) -> Fraction:
    """Shapley value of an endogenous fact, in polynomial time.

    Requires a single self-join-free hierarchical rule; raises
    ``FactNotEndogenousError`` if the fact is exogenous or absent.
    """
    stored = db.get(*fact.key)
    if stored is None or not stored.endogenous:
        raise FactNotEndogenousError(
            f"fact {fact} is not an endogenous fact of the database"
        )
    n = db.n_endogenous
    promoted = count_satisfying_subsets(db.with_fact_exogenous(stored), query,
                                        cross_check)
    deleted = count_satisfying_subsets(db.without_fact(stored), query,
                                       cross_check)
    total = Fraction(0)
    for k in range(n):
        diff = promoted[k] - deleted[k]
        if diff:
            total += shapley_weight(n, k) * diff
    return total


def shapley_exact_all(db: Database, query: Query) -> dict[Fact, Fraction]:
    """Exact values for every endogenous fact."""
    return {fact: shapley_exact(db, query, fact) for fact in db.endogenous}
