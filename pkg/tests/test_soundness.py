from chrcp import corpus_program, corpus_store
from chrcp.fuzz import generate_random
from chrcp.machine import (
    ActGoal,
    ExecutionState,
    InitGoal,
    LabeledStore,
    LazyGoal,
    annotate,
    run_operational,
)
from chrcp.match import maximality_disabled
from chrcp.parse import parse_program, parse_store
from chrcp.rewrite import store_of
from chrcp.rules import Atom
from chrcp.soundness import (
    ABSTRACT,
    SILENT,
    VIOLATION,
    check_soundness,
    classify_step,
    correspondence,
    trace_records,
)
from chrcp.terms import Int


def state(goals, labeled=()):
    store = LabeledStore()
    for a in labeled:
        store, _ = store.add(a)
    return ExecutionState(tuple(goals), store)


class TestCorrespondence:
    def test_lazy_and_store(self):
        s = state([LazyGoal(Atom("p", (Int(1),)))], [Atom("q", (Int(2),))])
        assert correspondence(s) == store_of(parse_store("p(1), q(2)."))

    def test_act_contributes_nothing(self):
        a = Atom("p", (Int(1),))
        s = state([ActGoal(a, 3, 2)], [a])
        assert correspondence(s) == store_of(parse_store("p(1)."))

    def test_init_unfolds(self, relabel_program):
        body = parse_store("a(1), a(2).")
        s = state([InitGoal(tuple(body))])
        assert correspondence(s) == store_of(body)

    def test_empty(self):
        assert correspondence(state([])) == ()


class TestClassify:
    def collect(self, program, init, **kw):
        pw = annotate(program)
        events = []
        run_operational(pw, init, observer=lambda ev: events.append(ev), **kw)
        return pw, events

    def test_lazy_act_is_silent(self):
        p = parse_program("r @ p(X), q(X) <=> s(X).")
        pw, events = self.collect(p, parse_store("p(1)."))
        kinds = {ev.kind: classify_step(pw, ev.before, ev.after).kind for ev in events}
        assert kinds["lazy-act"] == SILENT

    def test_firing_is_abstract(self, pivot_program):
        pw, events = self.collect(pivot_program, corpus_store("pivot_swap"))
        fires = [ev for ev in events if ev.kind == "act-simpa-1"]
        assert fires
        cls = classify_step(pw, fires[0].before, fires[0].after)
        assert cls.kind == ABSTRACT
        assert cls.step is not None and cls.step.rule == "pivotSwap"

    def test_corrupted_step_is_violation(self, pivot_program):
        pw, events = self.collect(pivot_program, corpus_store("pivot_swap"))
        ev = events[0]
        store, _ = ev.after.store.add(Atom("ghost", ()))
        corrupted = ExecutionState(ev.after.goals, store)
        assert classify_step(pw, ev.before, corrupted).kind == VIOLATION


class TestCheckSoundness:
    def test_pivot_swap_ok(self, pivot_program):
        rep = check_soundness(pivot_program, corpus_store("pivot_swap"))
        assert rep.ok and not rep.limit_exceeded
        assert rep.final_store == store_of(
            parse_store("data(a,2), data(a,3), data(b,7), data(b,8).")
        )

    def test_relabel_three_ok(self, relabel_program):
        rep = check_soundness(relabel_program, corpus_store("relabel3"))
        assert rep.ok
        assert rep.final_store == store_of(parse_store("b(1), b(2), b(3)."))
        assert rep.counts()[ABSTRACT] == 1

    def test_remove_non_min_ok(self, remove_min_program, remove_min_store):
        rep = check_soundness(remove_min_program, remove_min_store)
        assert rep.ok
        assert rep.final_store == store_of(parse_store("edge(a,d,5), edge(b,c,1)."))

    def test_negative_control_detects_violation(self, relabel_program):
        with maximality_disabled():
            rep = check_soundness(relabel_program, corpus_store("relabel3"))
        assert not rep.ok
        assert len(rep.violations) >= 1

    def test_trace_records_shape(self, relabel_program):
        rep = check_soundness(relabel_program, corpus_store("relabel2"))
        recs = trace_records(rep)
        assert len(recs) == rep.steps
        assert all({"index", "kind", "classification"} <= set(r) for r in recs)
        fired = [r for r in recs if r["classification"] == ABSTRACT]
        assert fired and "storeBefore" in fired[0]

    def test_truncated_run_still_classifies(self):
        p = parse_program("loop @ p(X) ==> p(X).")
        rep = check_soundness(p, parse_store("p(1)."), max_steps=40)
        assert rep.limit_exceeded
        assert rep.ok  # every executed step is still silent or abstract

    def test_engines_agree_on_corpus(self, pivot_program, remove_min_program):
        from chrcp.rewrite import run_abstract

        for program, st in (
            (pivot_program, corpus_store("pivot_swap")),
            (remove_min_program, corpus_store("remove_non_min")),
            (corpus_program("relabel"), corpus_store("relabel2")),
        ):
            rep = check_soundness(program, st)
            ab = run_abstract(program, store_of(st), max_steps=50)
            assert rep.ok and not ab.limit_exceeded
            assert rep.final_store == ab.final


class TestFuzzSlice:
    def test_soundness_over_seeds(self):
        for seed in range(80):
            program, init = generate_random(seed)
            rep = check_soundness(program, init, max_steps=120)
            assert rep.ok, f"seed {seed}: {rep.violations}"
