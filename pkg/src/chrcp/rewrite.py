"""Declarative (abstract) rewriting semantics.

A store is a canonical multiset of ground constraints. One step picks a rule
instance whose heads match store fragments maximally, removes the simplified
fragment and adds the unfolded body. The relation is nondeterministic;
`run_abstract` fixes a deterministic policy (perturbable by seed), while
`reachable` explores the whole relation for oracle use.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator

from .errors import BudgetError, NonGroundError
from .match import MatchResult, comp_element_instance, enumerate_matches
from .rules import (
    Atom,
    Pattern,
    Program,
    Rule,
    canonical_store,
    ground_atom,
    normalize_program,
)
from .terms import MSet, Substitution, normalize

Store = tuple[Atom, ...]


def store_of(atoms: Iterable[Atom]) -> Store:
    return canonical_store(ground_atom(a) for a in atoms)


def store_diff(store: Store, removed: Iterable[Atom]) -> Store:
    left = Counter(store)
    left.subtract(Counter(removed))
    if any(v < 0 for v in left.values()):
        raise ValueError("removed constraints not present in store")
    return canonical_store(left.elements())


def store_union(*parts: Iterable[Atom]) -> Store:
    out: list[Atom] = []
    for p in parts:
        out.extend(p)
    return canonical_store(out)


def unfold_body(patterns: Iterable[Pattern]) -> list[Atom]:
    """Ground constraints denoted by a closed body.

    Atoms pass through; a comprehension emits one instance per domain
    element whose guard holds, silently skipping failing elements. Order is
    deterministic: pattern order, then canonical domain order.
    """
    out: list[Atom] = []
    for p in patterns:
        if isinstance(p, Atom):
            out.append(ground_atom(p))
        else:
            dom = normalize(p.domain)
            if not isinstance(dom, MSet):
                raise NonGroundError(f"body comprehension domain {p.domain!r} is not a multiset")
            for el in dom.items:
                inst = comp_element_instance(p, el)
                if inst is not None:
                    out.append(ground_atom(inst))
    return out


@dataclass(frozen=True)
class AbstractStep:
    """One rule application: substitution, removed and added fragments."""

    rule: str
    theta: Substitution
    consumed: Store  # simplified fragment (removed)
    produced: Store  # unfolded body (added)


def rule_application(rule: Rule, match: MatchResult, store_items) -> tuple[AbstractStep, Store]:
    atoms_by_id = dict(store_items)
    n_prop = len(rule.propagated)
    consumed_ids = {i for b in match.blocks[n_prop:] for i in b}
    consumed = canonical_store(atoms_by_id[i] for i in consumed_ids)
    body = match.theta.apply(rule.body)
    produced = canonical_store(unfold_body(body))
    remaining = [a for i, a in store_items if i not in consumed_ids]
    successor = store_union(remaining, produced)
    return AbstractStep(rule.name, match.theta, consumed, produced), successor


def abstract_steps(
    program: Program,
    store: Store,
    rule_filter: Callable[[Rule], bool] | None = None,
) -> Iterator[tuple[AbstractStep, Store]]:
    """Every applicable rule instance, in deterministic order.

    Duplicate instances arising from different partitions of equal
    constraints collapse to one entry. `rule_filter` restricts which rules
    are tried (used by the soundness oracle to skip impossible rules).
    """
    program = normalize_program(program)
    items = list(enumerate(store))
    seen: set = set()
    for rule in program.rules:
        if rule_filter is not None and not rule_filter(rule):
            continue
        for match in enumerate_matches(rule, items, check_maximality=True):
            step, successor = rule_application(rule, match, items)
            key = (step.rule, step.theta.key(), step.consumed, step.produced)
            if key in seen:
                continue
            seen.add(key)
            yield step, successor


@dataclass
class AbstractRun:
    final: Store
    steps: list[AbstractStep]
    limit_exceeded: bool


def run_abstract(program: Program, store: Store, max_steps: int = 1000, seed: int = 0) -> AbstractRun:
    """Iterate single steps until quiescence or the step budget runs out.

    The successor choice at each step is deterministic for a fixed seed.
    Steps that leave the store unchanged (possible when every comprehension
    block is empty) are skipped: the relation admits them, but a runner
    looping on them would never produce anything new.
    """
    rng = random.Random(seed)
    current = store_of(store)
    steps: list[AbstractStep] = []

    def changing(st: Store):
        return [(s, succ) for s, succ in abstract_steps(program, st) if succ != st]

    for _ in range(max_steps):
        options = changing(current)
        if not options:
            return AbstractRun(current, steps, False)
        step, successor = options[rng.randrange(len(options))] if len(options) > 1 else options[0]
        steps.append(step)
        current = successor
    if changing(current):
        return AbstractRun(current, steps, True)
    return AbstractRun(current, steps, False)


def reachable(
    program: Program,
    store: Store,
    depth: int,
    *,
    max_store: int = 24,
    max_frontier: int = 4096,
) -> frozenset[Store]:
    """All stores reachable within `depth` steps (the start store included)."""
    start = store_of(store)
    if len(start) > max_store:
        raise BudgetError(f"store size {len(start)} exceeds bound {max_store}")
    seen: set[Store] = {start}
    frontier: set[Store] = {start}
    for _ in range(depth):
        nxt: set[Store] = set()
        for st in frontier:
            for _, succ in abstract_steps(program, st):
                if succ not in seen:
                    seen.add(succ)
                    nxt.add(succ)
                if len(seen) > max_frontier:
                    raise BudgetError(f"reachable set exceeds bound {max_frontier}")
        if not nxt:
            break
        frontier = nxt
    return frozenset(seen)
