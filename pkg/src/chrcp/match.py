"""Matching of rule heads against constraint stores.

Three judgments drive everything:

* matches_exactly  — a closed pattern multiset consumes a store fragment
  completely (each comprehension block is dictated by its ground domain);
* subsumes         — a ground constraint fits a comprehension's atom and
  guard under some binder instantiation (domain contents ignored);
* residual_non_match — no store constraint is subsumed by any comprehension
  in a pattern multiset; this is what makes matched comprehensions maximal.

`enumerate_matches` is the search procedure: it solves for a substitution
pattern by pattern (atoms first, by predicate-indexed backtracking, then
comprehension absorption with branching on contested constraints), and
validates every candidate against the declarative judgments above.
"""

from __future__ import annotations

import threading
from collections import Counter
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import NonGroundError, RebindError, TermTypeError
from .rules import Atom, Comprehension, Pattern, Rule, normalize_rule
from .terms import (
    Bind,
    ConjComp,
    GTrue,
    Guard,
    MSet,
    MSetUnion,
    Rel,
    Substitution,
    Term,
    TupleTerm,
    Var,
    bind_binders,
    conjuncts,
    eval_guard_env,
    eval_term,
    is_ground,
    norm_loose,
    normalize,
    rel_holds,
    subst_term,
    term_key,
    term_vars,
)

StoreItem = tuple[int, Atom]


# One knob, used by the differential harness's negative control. Only
# callers that pass check_maximality=None honor it (the goal-stack engine);
# oracle-side enumeration always requests the real semantics explicitly.
_STATE = threading.local()


def ambient_maximality() -> bool:
    return getattr(_STATE, "maximality", True)


@contextmanager
def maximality_disabled():
    """Skip the residual (maximality) check in ambient-mode enumeration;
    for harness negative controls."""
    prev = ambient_maximality()
    _STATE.maximality = False
    try:
        yield
    finally:
        _STATE.maximality = prev


# ---------------------------------------------------------------------------
# Declarative judgments


def comp_element_instance(c: Comprehension, element: Term) -> Atom | None:
    """Atom produced by one domain element, or None if its guard fails.

    The guard may determine auxiliary variables (normalized atom arguments),
    so satisfaction is checked by solving rather than plain evaluation.
    """
    env = bind_binders(c.binders, element)
    solved = _solve_guard(c.guard, env, c.local_vars)
    if solved is None:
        return None
    try:
        return Atom(c.atom.pred, tuple(eval_term(a, solved) for a in c.atom.args))
    except NonGroundError:
        return None


def comp_instances(c: Comprehension) -> list[Atom] | None:
    """Required constraint multiset of a closed comprehension.

    Returns None when some domain element fails the guard: matching demands
    every element be used.
    """
    dom = normalize(c.domain)
    if not isinstance(dom, MSet):
        raise TermTypeError(f"comprehension domain is not a multiset: {dom!r}")
    out: list[Atom] = []
    for el in dom.items:
        inst = comp_element_instance(c, el)
        if inst is None:
            return None
        out.append(inst)
    return out


def matches_exactly(patterns: Iterable[Pattern], store: Iterable[Atom]) -> bool:
    """Closed patterns consume the given store fragment exactly."""
    need: list[Atom] = []
    for p in patterns:
        if isinstance(p, Atom):
            need.append(Atom(p.pred, tuple(normalize(a) for a in p.args)))
        else:
            inst = comp_instances(p)
            if inst is None:
                return False
            need.extend(inst)
    return Counter(need) == Counter(store)


def subsumes(a: Atom, m: Comprehension) -> Substitution | None:
    """Binder instantiation under which `a` fits the comprehension, if any."""
    env = _match_atom(m.atom, a, {}, solvable=m.local_vars)
    if env is None:
        return None
    env = _solve_guard(m.guard, env, solvable=m.local_vars)
    if env is None:
        return None
    missing = [b for b in m.binders if b not in env]
    if missing:
        return None
    return Substitution({b: env[b] for b in m.binders})


def residual_non_match(patterns: Iterable[Pattern], store: Iterable[Atom]) -> bool:
    """True iff no store constraint is subsumed by any comprehension pattern."""
    comps = [p for p in patterns if isinstance(p, Comprehension)]
    if not comps:
        return True
    for a in store:
        for m in comps:
            if subsumes(a, m) is not None:
                return False
    return True


# ---------------------------------------------------------------------------
# Directed solving: bind pattern variables against ground values


def _solvable_pattern(t: Term, env: Mapping[str, Term], solvable: frozenset[str]) -> bool:
    """Can `t` be matched structurally once env is applied?"""
    if isinstance(t, Var):
        return t.name in env or t.name in solvable
    if isinstance(t, TupleTerm):
        return all(_solvable_pattern(i, env, solvable) for i in t.items)
    if isinstance(t, MSet):
        return all(_solvable_pattern(i, env, solvable) for i in t.items)
    if isinstance(t, MSetUnion):
        return _solvable_pattern(t.left, env, solvable) and _solvable_pattern(
            t.right, env, solvable
        )
    return not (term_vars(t) - set(env))  # evaluable once env applied


def _solve_eq(pattern: Term, value: Term, env: dict[str, Term], solvable: frozenset[str]) -> dict[str, Term] | None:
    """Extend env so pattern equals the ground value; None on clash."""
    pattern = norm_loose(subst_term(env, pattern))
    if is_ground(pattern):
        try:
            return env if normalize(pattern) == value else None
        except TermTypeError:
            return None
    if isinstance(pattern, Var):
        if pattern.name not in solvable:
            return None
        env2 = dict(env)
        env2[pattern.name] = value
        return env2
    if isinstance(pattern, TupleTerm):
        if not isinstance(value, TupleTerm) or len(value.items) != len(pattern.items):
            return None
        for pi, vi in zip(pattern.items, value.items):
            nxt = _solve_eq(pi, vi, env, solvable)
            if nxt is None:
                return None
            env = nxt
        return env
    if isinstance(pattern, (MSet, MSetUnion)):
        return _solve_mset(pattern, value, env, solvable)
    return None


def _solve_mset(pattern: Term, value: Term, env: dict[str, Term], solvable: frozenset[str]) -> dict[str, Term] | None:
    """Match a multiset pattern like `[D | Ds]` against a ground multiset.

    Ground element patterns are removed by equality; remaining variable
    element patterns commit to the least remaining elements (canonical
    order); the rest term takes what is left.
    """
    if not isinstance(value, MSet):
        return None
    if isinstance(pattern, MSet):
        elems, rest = list(pattern.items), None
    elif isinstance(pattern, MSetUnion) and isinstance(pattern.left, MSet):
        elems, rest = list(pattern.left.items), pattern.right
    elif isinstance(pattern, MSetUnion) and isinstance(pattern.right, MSet):
        elems, rest = list(pattern.right.items), pattern.left
    else:
        return None
    remaining = list(value.items)
    var_elems: list[Term] = []
    for e in elems:
        e2 = norm_loose(subst_term(env, e))
        if is_ground(e2):
            ge = normalize(e2)
            if ge not in remaining:
                return None
            remaining.remove(ge)
        else:
            var_elems.append(e2)
    remaining.sort(key=term_key)
    if len(var_elems) > len(remaining):
        return None
    for e in var_elems:  # commit to canonical-least elements
        nxt = _solve_eq(e, remaining.pop(0), env, solvable)
        if nxt is None:
            return None
        env = nxt
    left_over = MSet(tuple(remaining))
    if rest is None:
        return env if not remaining else None
    return _solve_eq(rest, left_over, env, solvable)


def _match_atom(pattern: Atom, value: Atom, env: dict[str, Term], solvable: frozenset[str]) -> dict[str, Term] | None:
    if pattern.pred != value.pred or pattern.arity != value.arity:
        return None
    for pt, vt in zip(pattern.args, value.args):
        nxt = _solve_eq(pt, vt, env, solvable)
        if nxt is None:
            return None
        env = nxt
    return env


_DEFER = object()


def _try_conjunct(c: Guard, env: dict[str, Term], solvable: frozenset[str]):
    """Returns (status, env): status in {True, False, _DEFER}."""
    if isinstance(c, GTrue):
        return True, env
    if isinstance(c, Rel):
        lhs = norm_loose(subst_term(env, c.lhs))
        rhs = norm_loose(subst_term(env, c.rhs))
        lg, rg = is_ground(lhs), is_ground(rhs)
        if lg and rg:
            try:
                return rel_holds(c.op, normalize(lhs), normalize(rhs)), env
            except TermTypeError:
                return False, env
        if c.op == "=":
            if lg and _solvable_pattern(rhs, env, solvable):
                nxt = _solve_eq(rhs, normalize(lhs), env, solvable)
                return (False, env) if nxt is None else (True, nxt)
            if rg and _solvable_pattern(lhs, env, solvable):
                nxt = _solve_eq(lhs, normalize(rhs), env, solvable)
                return (False, env) if nxt is None else (True, nxt)
        return _DEFER, env
    if isinstance(c, Bind):
        value = norm_loose(subst_term(env, c.value))
        if not is_ground(value):
            return _DEFER, env
        env2 = dict(env)
        value = normalize(value)
        if len(c.vars) == 1:
            pairs = [(c.vars[0], value)]
        else:
            if not isinstance(value, TupleTerm) or len(value.items) != len(c.vars):
                return False, env
            pairs = list(zip(c.vars, value.items))
        for name, v in pairs:
            if name in env2:
                raise RebindError(f"variable {name} is already bound")
            env2[name] = v
        return True, env2
    if isinstance(c, ConjComp):
        dom = norm_loose(subst_term(env, c.domain))
        body_open = term_vars(c.body) - frozenset(c.binders) - set(env)
        if not is_ground(dom) or body_open:
            return _DEFER, env
        try:
            ok, _ = eval_guard_env(c, dict(env))
        except TermTypeError:
            return False, env
        return ok, env
    raise TypeError(f"not a guard conjunct: {c!r}")


def _solve_guard_ex(
    g: Guard, env: dict[str, Term], solvable: frozenset[str], *, lenient: bool = False
) -> tuple[dict[str, Term] | None, int]:
    """Worklist solver over guard conjuncts; returns (env, deferred count).

    Strict mode: every conjunct must eventually hold; anything left pending
    fails. Lenient mode: pending conjuncts are dropped (caller re-validates).
    """
    pending = list(conjuncts(g))
    while pending:
        progress = False
        deferred: list[Guard] = []
        for c in pending:
            status, env = _try_conjunct(c, env, solvable)
            if status is _DEFER:
                deferred.append(c)
            elif status:
                progress = True
            else:
                return None, 0
        if not progress:
            if lenient:
                return env, len(deferred)
            return (env, 0) if not deferred else (None, len(deferred))
        pending = deferred
    return env, 0


def _solve_guard(
    g: Guard, env: dict[str, Term], solvable: frozenset[str], *, lenient: bool = False
) -> dict[str, Term] | None:
    return _solve_guard_ex(g, env, solvable, lenient=lenient)[0]


# ---------------------------------------------------------------------------
# Rule-head match enumeration


@dataclass(frozen=True)
class MatchResult:
    """One way a rule's heads fit a store: substitution plus the partition
    of store items by head pattern (blocks are disjoint; ids are store
    labels/positions)."""

    theta: Substitution
    blocks: tuple[tuple[int, ...], ...]

    def block(self, idx: int) -> tuple[int, ...]:
        return self.blocks[idx]

    def all_ids(self) -> tuple[int, ...]:
        return tuple(sorted(i for b in self.blocks for i in b))

    def sort_key(self):
        return (self.blocks, self.theta.key())


def enumerate_matches(
    rule: Rule,
    items: Sequence[StoreItem],
    anchor: tuple[int, int] | None = None,
    *,
    check_maximality: bool | None = None,
) -> list[MatchResult]:
    """All maximal matches of a rule against an indexed store.

    `anchor`, when given, is (head pattern index, store item id): the item
    must land in that pattern's block. Results come back deterministically
    ordered (block ids per head, then substitution).
    `check_maximality=None` defers to the ambient flag (see
    `maximality_disabled`); pass True to force the real semantics.
    """
    maximal = ambient_maximality() if check_maximality is None else check_maximality
    rule = normalize_rule(rule)
    heads = rule.heads
    solvable = rule.rule_vars()
    ids = {i for i, _ in items}
    if anchor is not None and anchor[1] not in ids:
        return []

    atom_idx = [i for i, p in enumerate(heads) if isinstance(p, Atom)]
    comp_idx = [i for i, p in enumerate(heads) if isinstance(p, Comprehension)]

    by_pred: dict[str, list[StoreItem]] = {}
    for it in sorted(items, key=lambda it: it[0]):
        by_pred.setdefault(it[1].pred, []).append(it)

    results: list[MatchResult] = []
    seen: set = set()
    atoms_by_id = dict(items)

    def finish(
        env: dict[str, Term],
        assign: dict[int, int | None],
        tuples: dict[int, list[tuple[int, Term]]],
        risky_stays: frozenset[int],
    ) -> None:
        blocks: dict[int, list[int]] = {i: [] for i in range(len(heads))}
        for item_id, h in assign.items():
            if h is not None:
                blocks[h].append(item_id)
        # Bind each comprehension's domain to its collected binder tuples.
        env = dict(env)
        for ci in comp_idx:
            comp: Comprehension = heads[ci]  # type: ignore[assignment]
            assert isinstance(comp.domain, Var)
            collected = [t for _, t in tuples.get(ci, ())]
            dval = MSet(tuple(sorted(collected, key=term_key)))
            if comp.domain.name in env:
                if env[comp.domain.name] != dval:
                    return
            else:
                env[comp.domain.name] = dval
        solved = _solve_guard(rule.guard, env, solvable)
        if solved is None:
            return
        theta = Substitution({k: v for k, v in solved.items() if k in solvable})
        # Declarative validation of every block, then maximality.
        matched_pats = []
        for hi, p in enumerate(heads):
            inst = theta.apply(p)
            block_atoms = [atoms_by_id[i] for i in sorted(blocks[hi])]
            try:
                if not matches_exactly([inst], block_atoms):
                    return
            except (TermTypeError, NonGroundError):
                return
            matched_pats.append(inst)
        if anchor is not None and anchor[1] not in blocks[anchor[0]]:
            return
        if maximal and risky_stays:
            # Items rejected by every comprehension at assign time stay
            # rejected (failures are stable as the substitution grows), so
            # only deliberate stay choices need the residual test.
            rest = [atoms_by_id[i] for i in sorted(risky_stays)]
            if not residual_non_match(matched_pats, rest):
                return
        res = MatchResult(theta, tuple(tuple(sorted(blocks[i])) for i in range(len(heads))))
        key = (res.blocks, res.theta.key())
        if key not in seen:
            seen.add(key)
            results.append(res)

    def assign_comps(
        remaining: list[StoreItem],
        env: dict[str, Term],
        assign: dict[int, int | None],
        tuples: dict[int, list[tuple[int, Term]]],
        risky_stays: frozenset[int],
    ) -> None:
        # Iterative over forced choices; recursion only on genuine branching,
        # so the stack depth is bounded by the number of contested items.
        assign = dict(assign)
        tuples = {k: list(v) for k, v in tuples.items()}
        pos = 0
        while pos < len(remaining):
            item_id, atom = remaining[pos]
            pos += 1
            candidates: list[tuple[int, dict[str, Term], Term, bool]] = []
            for ci in comp_idx:
                comp: Comprehension = heads[ci]  # type: ignore[assignment]
                if anchor is not None and anchor[1] == item_id and anchor[0] != ci:
                    continue
                hit = _absorb_lenient(comp, atom, env, solvable)
                if hit is not None:
                    candidates.append((ci,) + hit)
            anchored_here = anchor is not None and anchor[1] == item_id
            if anchored_here and anchor[0] in comp_idx:
                candidates = [c for c in candidates if c[0] == anchor[0]]
            if not candidates:
                if anchored_here:
                    return  # the anchored item must be absorbed
                assign[item_id] = None
                continue
            # A candidate that neither extended the substitution nor deferred
            # guard checks absorbs the item under any final substitution, so
            # leaving it unassigned would always fail the residual test.
            may_stay = not anchored_here and not (
                maximal and any(clean for _, _, _, clean in candidates)
            )
            if len(candidates) == 1 and not may_stay:
                ci, env2, btuple, _ = candidates[0]
                env = env2
                assign[item_id] = ci
                tuples.setdefault(ci, []).append((item_id, btuple))
                continue
            rest = remaining[pos:]
            for ci, env2, btuple, _ in candidates:
                tuples2 = {k: list(v) for k, v in tuples.items()}
                tuples2.setdefault(ci, []).append((item_id, btuple))
                assign_comps(rest, env2, {**assign, item_id: ci}, tuples2, risky_stays)
            if may_stay:
                stays = risky_stays | {item_id}
                assign_comps(rest, env, {**assign, item_id: None}, tuples, stays)
            return
        finish(env, assign, tuples, risky_stays)

    def match_atoms(pending: list[int], used: set[int], env: dict[str, Term], assign: dict[int, int | None]) -> None:
        if not pending:
            remaining = [
                (i, a)
                for i, a in sorted(items, key=lambda it: it[0])
                if i not in used
            ]
            assign_comps(remaining, env, assign, {}, frozenset())
            return
        hi = pending[0]
        pat: Atom = heads[hi]  # type: ignore[assignment]
        if anchor is not None and anchor[0] == hi:
            cands = [(i, a) for i, a in items if i == anchor[1]]
        else:
            cands = by_pred.get(pat.pred, [])
        for item_id, atom in cands:
            if item_id in used:
                continue
            if anchor is not None and anchor[1] == item_id and anchor[0] != hi:
                continue
            env2 = _match_atom(pat, atom, env, solvable)
            if env2 is None:
                continue
            lenv = _solve_guard(rule.guard, env2, solvable, lenient=True)
            if lenv is None:
                continue
            match_atoms(pending[1:], used | {item_id}, env2, {**assign, item_id: hi})

    match_atoms(atom_idx, set(), {}, {})
    results.sort(key=MatchResult.sort_key)
    return results


def _absorb_lenient(
    comp: Comprehension, atom: Atom, env: dict[str, Term], solvable: frozenset[str]
) -> tuple[dict[str, Term], Term, bool] | None:
    """Can `atom` plausibly join this comprehension's block under env?

    Returns (env with rule-variable extensions, collected binder tuple,
    clean) or None. `clean` means the absorption neither extended the
    substitution nor left guard conjuncts deferred, i.e. it holds under any
    extension of env. Deferred conjuncts are allowed — the final validation
    rechecks every block declaratively.
    """
    local = solvable | comp.local_vars
    env2 = _match_atom(comp.atom, atom, dict(env), local)
    if env2 is None:
        return None
    env2, n_deferred = _solve_guard_ex(comp.guard, env2, local, lenient=True)
    if env2 is None:
        return None
    vals = [env2.get(b) for b in comp.binders]
    if any(v is None for v in vals):
        return None  # uncollectable binder: no way to place it in the domain
    btuple: Term = vals[0] if len(vals) == 1 else TupleTerm(tuple(vals))  # type: ignore[arg-type]
    for name in comp.binders + comp.aux:
        env2.pop(name, None)
    clean = n_deferred == 0 and set(env2) == set(env)
    return env2, btuple, clean
