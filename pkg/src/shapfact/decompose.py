"""Decomposition helpers shared by the exact counting engine and the
lifted probability engine.

Both engines walk the same recursion tree over a hierarchical,
self-join-free rule:

1. split the atoms into variable-connectivity components (a ground atom is
   its own component);
2. route every fact to the component containing an atom it unifies with;
   facts that unify with nothing are "free" — they never influence the
   query and only dilute the combinatorics;
3. a lone non-ground component is solved through its *root* variable (one
   occurring in all of the component's atoms): facts split by root value
   into independent sub-problems.

Keeping these three steps in one module means the two engines cannot
silently diverge on the recursion shape.
"""

from __future__ import annotations

from typing import Iterable, Optional, Sequence

from .errors import InternalError
from .model import Atom, Const, Fact, Var


def unifies(fact: Fact, atom: Atom) -> bool:
    """True iff the fact could be an image of the atom: same relation and
    arity, equal constants positionwise, and equal values wherever the atom
    repeats a variable."""
    if fact.relation.name != atom.relation.name:
        return False
    if len(fact.args) != len(atom.terms):
        return False
    seen: dict[str, str] = {}
    for term, value in zip(atom.terms, fact.args):
        if isinstance(term, Const):
            if term.value != value:
                return False
        else:
            prior = seen.setdefault(term.name, value)
            if prior != value:
                return False
    return True


def split_components(atoms: Sequence[Atom]) -> list[list[int]]:
    """Atom indices grouped into variable-sharing connected components,
    ordered by smallest member index.  Ground atoms form singletons."""
    parent = list(range(len(atoms)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    by_var: dict[str, int] = {}
    for i, atom in enumerate(atoms):
        for v in atom.variables:
            if v in by_var:
                rep = find(by_var[v])
                parent[find(i)] = rep
            else:
                by_var[v] = i
    groups: dict[int, list[int]] = {}
    for i in range(len(atoms)):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values())


def bucket_facts(atoms: Sequence[Atom], components: Sequence[Sequence[int]],
                 facts: Iterable[Fact]
                 ) -> tuple[list[list[Fact]], list[Fact]]:
    """Route each fact to the component owning an atom it unifies with.

    Returns (per-component fact lists, free facts).  With self-join-free
    atoms a relation belongs to at most one component, so the routing is
    unambiguous."""
    comp_of_atom = {}
    for ci, comp in enumerate(components):
        for ai in comp:
            comp_of_atom[ai] = ci
    atoms_of_rel: dict[str, list[int]] = {}
    for i, atom in enumerate(atoms):
        atoms_of_rel.setdefault(atom.relation.name, []).append(i)
    buckets: list[list[Fact]] = [[] for _ in components]
    free: list[Fact] = []
    for fact in facts:
        target: Optional[int] = None
        for ai in atoms_of_rel.get(fact.relation.name, ()):
            if unifies(fact, atoms[ai]):
                target = comp_of_atom[ai]
                break
        if target is None:
            free.append(fact)
        else:
            buckets[target].append(fact)
    return buckets, free


def root_variable(atoms: Sequence[Atom]) -> Optional[str]:
    """The lexicographically least variable occurring in every atom."""
    common: Optional[set[str]] = None
    for atom in atoms:
        vs = set(atom.variables)
        common = vs if common is None else common & vs
    if not common:
        return None
    return min(common)


def partition_by_root(atoms: Sequence[Atom], facts: Iterable[Fact],
                      root: str) -> dict[str, list[Fact]]:
    """Group facts by the value they force on the root variable.

    Every fact must unify with some atom (pre-bucketed); the root's
    positions in that atom determine the value."""
    groups: dict[str, list[Fact]] = {}
    for fact in facts:
        value: Optional[str] = None
        for atom in atoms:
            if unifies(fact, atom):
                for term, arg in zip(atom.terms, fact.args):
                    if isinstance(term, Var) and term.name == root:
                        value = arg
                        break
                break
        if value is None:
            raise InternalError(
                f"fact {fact} reached a root split without a unifying atom "
                f"containing {root}"
            )
        groups.setdefault(value, []).append(fact)
    return groups


def substitute_all(atoms: Sequence[Atom], var: str, value: str) -> list[Atom]:
    return [a.substituted({var: value}) for a in atoms]
