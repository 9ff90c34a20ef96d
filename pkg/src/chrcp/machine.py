"""Goal-stack execution engine with lazy/eager storage and saturation.

Rule heads get unique occurrence indices; an active constraint walks them in
order, trying to fire the owning rule anchored at that head. Constraints the
monotonicity analysis clears are stored lazily (on activation); anything
that could be absorbed by a comprehension head is stored eagerly at init
time. Propagation rules track per-goal histories of applied instances so
saturation terminates.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Union

from .match import MatchResult, enumerate_matches
from .monotone import is_monotone
from .rewrite import unfold_body
from .rules import (
    Atom,
    Pattern,
    Program,
    Rule,
    canonical_store,
    normalize_rule,
)


# ---------------------------------------------------------------------------
# Occurrence annotation


@dataclass(frozen=True)
class AnnotatedRule:
    rule: Rule  # normalized
    occurrences: tuple[int, ...]  # aligned with rule.heads

    @property
    def is_propagation(self) -> bool:
        return self.rule.is_propagation


@dataclass(frozen=True, eq=False)
class OccurrenceProgram:
    source: Program
    rules: tuple[AnnotatedRule, ...]
    table: dict  # occurrence index -> (AnnotatedRule, head position)
    max_occurrence: int
    _mono_cache: dict = field(default_factory=dict, repr=False)

    def lookup(self, i: int):
        """Rule owning occurrence i with the head position, or None."""
        return self.table.get(i)

    def drop_indices(self) -> Program:
        return self.source

    def monotone(self, pattern: Pattern) -> bool:
        hit = self._mono_cache.get(pattern)
        if hit is None:
            hit = is_monotone(self.source, pattern)
            self._mono_cache[pattern] = hit
        return hit


def annotate(program: Program) -> OccurrenceProgram:
    """Number every head pattern 1..N in textual order."""
    rules: list[AnnotatedRule] = []
    table: dict = {}
    i = 0
    for r in program.rules:
        nr = normalize_rule(r)
        occ: list[int] = []
        for pos in range(len(nr.heads)):
            i += 1
            occ.append(i)
        ar = AnnotatedRule(nr, tuple(occ))
        for pos, idx in enumerate(ar.occurrences):
            table[idx] = (ar, pos)
        rules.append(ar)
    return OccurrenceProgram(program, tuple(rules), table, i)


# ---------------------------------------------------------------------------
# Labeled store and goals


@dataclass(frozen=True)
class LabeledStore:
    entries: tuple[tuple[int, Atom], ...] = ()
    next_label: int = 1  # labels are never reused, even after deletion

    def labels(self) -> tuple[int, ...]:
        return tuple(n for n, _ in self.entries)

    def atoms(self) -> tuple[Atom, ...]:
        return tuple(a for _, a in self.entries)

    def items(self) -> tuple[tuple[int, Atom], ...]:
        return self.entries

    def __contains__(self, label: int) -> bool:
        return any(n == label for n, _ in self.entries)

    def get(self, label: int) -> Atom | None:
        for n, a in self.entries:
            if n == label:
                return a
        return None

    def add(self, atom: Atom) -> tuple["LabeledStore", int]:
        n = self.next_label
        return LabeledStore(self.entries + ((n, atom),), n + 1), n

    def add_many(self, atoms: Iterable[Atom]) -> tuple["LabeledStore", list[int]]:
        atoms = tuple(atoms)
        labels = list(range(self.next_label, self.next_label + len(atoms)))
        entries = self.entries + tuple(zip(labels, atoms))
        return LabeledStore(entries, self.next_label + len(atoms)), labels

    def remove(self, labels: Iterable[int]) -> "LabeledStore":
        gone = set(labels)
        return LabeledStore(
            tuple(e for e in self.entries if e[0] not in gone), self.next_label
        )


def fresh_label(store: LabeledStore, atom: Atom) -> tuple[LabeledStore, tuple[Atom, int]]:
    store2, n = store.add(atom)
    return store2, (atom, n)


@dataclass(frozen=True)
class InitGoal:
    body: tuple[Pattern, ...]


@dataclass(frozen=True)
class LazyGoal:
    atom: Atom


@dataclass(frozen=True)
class EagerGoal:
    atom: Atom
    label: int


@dataclass(frozen=True)
class ActGoal:
    atom: Atom
    label: int
    occurrence: int


@dataclass(frozen=True)
class PropGoal:
    atom: Atom
    label: int
    occurrence: int
    history: frozenset  # of (theta key, labels) pairs


Goal = Union[InitGoal, LazyGoal, EagerGoal, ActGoal, PropGoal]


@dataclass(frozen=True)
class ExecutionState:
    goals: tuple[Goal, ...]
    store: LabeledStore

    @property
    def terminal(self) -> bool:
        return not self.goals


def initial_state(body: Iterable[Pattern]) -> ExecutionState:
    return ExecutionState((InitGoal(tuple(body)),), LabeledStore())


STEP_KINDS = (
    "init",
    "lazy-act",
    "eager-act",
    "eager-drop",
    "act-simpa-1",
    "act-simpa-2",
    "act-next",
    "act-drop",
    "act-prop",
    "prop-prop",
    "prop-sat",
)


# ---------------------------------------------------------------------------
# Transitions


def _instance_key(ar: AnnotatedRule, match: MatchResult) -> tuple:
    """(theta restricted to head variables, matched label set)."""
    theta = match.theta.restrict(ar.rule.head_vars())
    return (theta.key(), tuple(sorted(match.all_ids())))


def _pick(matches: list[MatchResult], rng: random.Random | None) -> MatchResult:
    if rng is not None and len(matches) > 1:
        return matches[rng.randrange(len(matches))]
    return matches[0]


def step(
    pw: OccurrenceProgram, state: ExecutionState, rng: random.Random | None = None
) -> tuple[ExecutionState, str] | None:
    """One transition of the leading goal; None when the stack is empty."""
    if not state.goals:
        return None
    goal, rest = state.goals[0], state.goals[1:]
    store = state.store

    if isinstance(goal, InitGoal):
        lazy_pats = [p for p in goal.body if pw.monotone(p)]
        eager_pats = [p for p in goal.body if not pw.monotone(p)]
        lazy_atoms = unfold_body(lazy_pats)
        eager_atoms = unfold_body(eager_pats)
        store2, labels = store.add_many(eager_atoms)
        goals = (
            tuple(LazyGoal(a) for a in lazy_atoms)
            + tuple(EagerGoal(a, n) for a, n in zip(eager_atoms, labels))
            + rest
        )
        return ExecutionState(goals, store2), "init"

    if isinstance(goal, LazyGoal):
        store2, n = store.add(goal.atom)
        return ExecutionState((ActGoal(goal.atom, n, 1),) + rest, store2), "lazy-act"

    if isinstance(goal, EagerGoal):
        if goal.label in store:
            return (
                ExecutionState((ActGoal(goal.atom, goal.label, 1),) + rest, store),
                "eager-act",
            )
        return ExecutionState(rest, store), "eager-drop"

    if isinstance(goal, ActGoal):
        hit = pw.lookup(goal.occurrence)
        if hit is None:
            return ExecutionState(rest, store), "act-drop"
        ar, pos = hit
        if ar.is_propagation:
            return (
                ExecutionState(
                    (PropGoal(goal.atom, goal.label, goal.occurrence, frozenset()),) + rest,
                    store,
                ),
                "act-prop",
            )
        matches = enumerate_matches(ar.rule, store.items(), anchor=(pos, goal.label))
        n_prop = len(ar.rule.propagated)
        if matches:
            m = _pick(matches, rng)
            consumed = [i for b in m.blocks[n_prop:] for i in b]
            body = m.theta.apply(ar.rule.body)
            if pos >= n_prop:
                # Active constraint sits in the simplified head: it goes too.
                store2 = store.remove(consumed)
                return ExecutionState((InitGoal(body),) + rest, store2), "act-simpa-1"
            store2 = store.remove(consumed)
            return (
                ExecutionState((InitGoal(body), goal) + rest, store2),
                "act-simpa-2",
            )
        return (
            ExecutionState(
                (ActGoal(goal.atom, goal.label, goal.occurrence + 1),) + rest, store
            ),
            "act-next",
        )

    if isinstance(goal, PropGoal):
        hit = pw.lookup(goal.occurrence)
        assert hit is not None, "prop goal on a vanished occurrence"
        ar, pos = hit
        matches = [
            m
            for m in enumerate_matches(ar.rule, store.items(), anchor=(pos, goal.label))
            if _instance_key(ar, m) not in goal.history
        ]
        if matches:
            m = _pick(matches, rng)
            body = m.theta.apply(ar.rule.body)
            new_hist = goal.history | {_instance_key(ar, m)}
            goals = (
                InitGoal(body),
                PropGoal(goal.atom, goal.label, goal.occurrence, new_hist),
            ) + rest
            return ExecutionState(goals, store), "prop-prop"
        return (
            ExecutionState(
                (ActGoal(goal.atom, goal.label, goal.occurrence + 1),) + rest, store
            ),
            "prop-sat",
        )

    raise TypeError(f"unknown goal {goal!r}")


# ---------------------------------------------------------------------------
# State validity (preserved by every transition)


def validate_state(pw: OccurrenceProgram, state: ExecutionState) -> list[str]:
    problems: list[str] = []
    for idx, g in enumerate(state.goals):
        if isinstance(g, LazyGoal) and not pw.monotone(g.atom):
            problems.append(f"lazy goal holds non-monotone constraint {g.atom}")
        if isinstance(g, InitGoal) and idx != 0:
            problems.append("init goal below the top of the stack")
    labels = state.store.labels()
    if len(set(labels)) != len(labels):
        problems.append("duplicate store labels")
    return problems


# ---------------------------------------------------------------------------
# Driver


@dataclass(frozen=True)
class StepEvent:
    index: int
    kind: str
    before: ExecutionState
    after: ExecutionState


@dataclass
class OpRun:
    state: ExecutionState
    trace: list[tuple[str, str]]  # (kind, state digest)
    limit_exceeded: bool

    @property
    def store_atoms(self) -> tuple[Atom, ...]:
        return canonical_store(self.state.store.atoms())


def goal_digest(g: Goal) -> str:
    if isinstance(g, InitGoal):
        return f"init[{len(g.body)}]"
    if isinstance(g, LazyGoal):
        return f"lazy {g.atom.pred}/{g.atom.arity}"
    if isinstance(g, EagerGoal):
        return f"eager #{g.label}"
    if isinstance(g, ActGoal):
        return f"act #{g.label}@{g.occurrence}"
    return f"prop #{g.label}@{g.occurrence}|{len(g.history)}"


def state_digest(s: ExecutionState) -> str:
    store = ",".join(f"{a.pred}#{n}" for n, a in s.store.items())
    goals = ";".join(goal_digest(g) for g in s.goals[:4])
    more = "..." if len(s.goals) > 4 else ""
    return f"<[{goals}{more}] | {{{store}}}>"


def run_operational(
    pw: OccurrenceProgram,
    init: Iterable[Pattern],
    max_steps: int = 10_000,
    seed: int | None = None,
    observer: Callable[[StepEvent], None] | None = None,
    validate: bool = True,
    max_store: int | None = None,
) -> OpRun:
    """Drive the machine from `init` to an empty goal stack.

    `max_store` (optional) aborts divergent runs whose store outgrows desk
    scale; like the step budget, hitting it sets `limit_exceeded`.
    """
    rng = random.Random(seed) if seed is not None else None
    state = initial_state(init)
    trace: list[tuple[str, str]] = []
    for index in range(max_steps):
        out = step(pw, state, rng)
        if out is None:
            return OpRun(state, trace, False)
        nxt, kind = out
        if validate:
            problems = validate_state(pw, nxt)
            assert not problems, f"invalid state after {kind}: {problems}"
        if observer is not None:
            observer(StepEvent(index, kind, state, nxt))
        trace.append((kind, state_digest(nxt)))
        state = nxt
        if max_store is not None and len(state.store.entries) > max_store:
            return OpRun(state, trace, True)
    return OpRun(state, trace, not state.terminal)
