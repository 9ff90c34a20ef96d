from chrcp.fuzz import generate_random
from chrcp.match import (
    enumerate_matches,
    matches_exactly,
    maximality_disabled,
    residual_non_match,
    subsumes,
)
from chrcp.parse import parse_program, parse_store
from chrcp.rules import Atom, Comprehension
from chrcp.terms import GTrue, Int, Rel, Substitution, Sym, Var, mset

from oracles import oracle_match_keys, production_match_keys


def atom(text):
    return parse_store(text + ".")[0]


def comp(pattern_text):
    # parse a single-head rule to reuse the comprehension syntax
    (r,) = parse_program(f"r @ {pattern_text} <=> true.", check=False).rules
    return r.heads[0]


class TestMatchesExactly:
    def test_singleton_comprehension(self):
        c = Comprehension(Atom("data", (Sym("a"), Var("D"))), GTrue(), ("D",), mset(Int(7)))
        assert matches_exactly([c], [atom("data(a,7)")])

    def test_empty_domain_empty_store(self):
        c = Comprehension(Atom("data", (Sym("a"), Var("D"))), GTrue(), ("D",), mset())
        assert matches_exactly([c], [])
        assert not matches_exactly([c], [atom("data(a,7)")])

    def test_atom_must_consume_exactly(self):
        assert matches_exactly([atom("p(1)")], [atom("p(1)")])
        assert not matches_exactly([atom("p(1)")], [atom("p(1)"), atom("p(1)")])

    def test_failing_guard_element_blocks_match(self):
        c = Comprehension(
            Atom("p", (Var("D"),)), Rel(">", Var("D"), Int(0)), ("D",), mset(Int(1), Int(-1))
        )
        assert not matches_exactly([c], [atom("p(1)"), atom("p(-1)")])


class TestSubsumes:
    def setup_method(self):
        self.pattern = Comprehension(
            Atom("data", (Sym("a"), Var("D"))), Rel(">=", Var("D"), Int(5)), ("D",), mset()
        )

    def test_absorbs(self):
        theta = subsumes(atom("data(a,7)"), self.pattern)
        assert theta == Substitution({"D": Int(7)})

    def test_guard_blocks(self):
        assert subsumes(atom("data(a,3)"), self.pattern) is None

    def test_predicate_mismatch(self):
        assert subsumes(atom("edge(a,b,3)"), self.pattern) is None

    def test_domain_contents_ignored(self):
        # absorption does not require membership in the current domain
        assert subsumes(atom("data(a,9)"), self.pattern) is not None


class TestResidual:
    def pivot_heads(self, pivot_program):
        (r,) = pivot_program.rules
        theta = Substitution({"X": Sym("a"), "Y": Sym("b"), "P": Int(5)})
        return [theta.apply(p) for p in r.heads]

    def test_blocked_by_absorbable(self, pivot_program):
        heads = self.pivot_heads(pivot_program)
        assert residual_non_match(heads, [atom("data(a,3)")])
        assert not residual_non_match(heads, [atom("data(a,7)")])

    def test_empty_store_never_blocks(self, pivot_program):
        assert residual_non_match(self.pivot_heads(pivot_program), [])

    def test_duality_with_subsumes(self, pivot_program):
        heads = self.pivot_heads(pivot_program)
        comps = [p for p in heads if isinstance(p, Comprehension)]
        for a in map(atom, ("data(a,7)", "data(a,3)", "data(b,2)", "swap(a,b,5)")):
            blocked = any(subsumes(a, m) is not None for m in comps)
            assert residual_non_match(heads, [a]) == (not blocked)


class TestEnumerate:
    def test_pivot_swap_unique_match(self, pivot_program, pivot_store):
        (r,) = pivot_program.rules
        items = list(enumerate(pivot_store))
        (m,) = enumerate_matches(r, items)
        assert m.theta["Xs"] == mset(Int(7))
        assert m.theta["Ys"] == mset(Int(2))
        assert m.theta["P"] == Int(5)

    def test_missing_atom_head_no_match(self, pivot_program):
        (r,) = pivot_program.rules
        items = list(enumerate(parse_store("data(a,7), data(b,2).")))
        assert enumerate_matches(r, items) == []

    def test_maximality_excludes_submatches(self, relabel_program):
        (r,) = relabel_program.rules
        items = list(enumerate(parse_store("a(1), a(2).")))
        matches = enumerate_matches(r, items)
        assert len(matches) == 1
        assert matches[0].theta["Xs"] == mset(Int(1), Int(2))
        with maximality_disabled():
            relaxed = enumerate_matches(r, items)
        assert {m.theta["Xs"] for m in relaxed} == {
            mset(),
            mset(Int(1)),
            mset(Int(2)),
            mset(Int(1), Int(2)),
        }

    def test_anchor_restricts_blocks(self, relabel_program):
        (r,) = relabel_program.rules
        items = list(enumerate(parse_store("a(1), a(2), b(9).")))
        anchored = enumerate_matches(r, items, anchor=(0, 1))
        assert len(anchored) == 1
        assert 1 in anchored[0].block(0)
        # anchoring at an id outside any possible block yields nothing
        assert enumerate_matches(r, items, anchor=(0, 2)) == []

    def test_empty_block_allowed_when_nothing_subsumable(self, pivot_program):
        (r,) = pivot_program.rules
        st = parse_store("swap(a,b,5), data(a,7).")
        (m,) = enumerate_matches(r, list(enumerate(st)))
        assert m.theta["Xs"] == mset(Int(7))
        assert m.theta["Ys"] == mset()

    def test_overlapping_comprehensions_enumerate_assignments(self):
        (r,) = parse_program(
            "r @ {p(X)}#{X in Xs}, {p(Y)}#{Y in Ys} <=> q(Xs, Ys)."
        ).rules
        items = list(enumerate(parse_store("p(1), p(2).")))
        matches = enumerate_matches(r, items)
        splits = {(m.theta["Xs"], m.theta["Ys"]) for m in matches}
        # every way of dividing both constraints between the two absorbers
        assert splits == {
            (mset(), mset(Int(1), Int(2))),
            (mset(Int(1)), mset(Int(2))),
            (mset(Int(2)), mset(Int(1))),
            (mset(Int(1), Int(2)), mset()),
        }

    def test_rule_var_bound_inside_comprehension(self):
        (r,) = parse_program("r @ g(X), {p(X, D)}#{D in Ds} <=> q(X, Ds).").rules
        items = list(enumerate(parse_store("g(1), g(2), p(1, 5), p(2, 6).")))
        matches = enumerate_matches(r, items)
        got = {(m.theta["X"], m.theta["Ds"]) for m in matches}
        assert got == {(Int(1), mset(Int(5))), (Int(2), mset(Int(6)))}

    def test_deterministic_order(self, relabel_program):
        (r,) = relabel_program.rules
        items = list(enumerate(parse_store("a(1), a(2).")))
        with maximality_disabled():
            runs = [tuple(m.sort_key() for m in enumerate_matches(r, items)) for _ in range(3)]
        assert runs[0] == runs[1] == runs[2]
        assert list(runs[0]) == sorted(runs[0])


class TestOracleEquivalence:
    def test_handpicked_cases(self):
        cases = [
            ("r @ p(X), q(X) <=> s(X).", "p(1), q(1), q(2)."),
            ("r @ {p(X) | X > 1}#{X in Xs} <=> true.", "p(1), p(2), p(3)."),
            ("r @ g(A) \\ {p(A, D)}#{D in Ds} <=> q(Ds).", "g(1), p(1, 4), p(1, 5), p(2, 6)."),
            ("r @ {p(X)}#{X in Xs}, {p(Y) | Y > 2}#{Y in Ys} <=> true.", "p(1), p(3)."),
            # comprehension guard readable only after the rule guard binds W:
            # absorption is undecidable element-by-element, so maximality has
            # to be settled by the final residual pass
            ("r @ t(N) \\ {p(D) | D >= W}#{D in Ds} <=> W = N + 1 | q(Ds).", "t(1), p(1), p(2), p(3)."),
        ]
        for ptext, stext in cases:
            (rule,) = parse_program(ptext, check=False).rules
            items = list(enumerate(parse_store(stext)))
            assert production_match_keys(rule, items) == oracle_match_keys(rule, items), ptext

    def test_late_bound_comprehension_guard(self):
        (rule,) = parse_program(
            "r @ t(N) \\ {p(D) | D >= W}#{D in Ds} <=> W = N + 1 | q(Ds)."
        ).rules
        items = list(enumerate(parse_store("t(1), p(1), p(2), p(3).")))
        (m,) = enumerate_matches(rule, items)
        assert m.theta["W"] == Int(2)
        assert m.theta["Ds"] == mset(Int(2), Int(3))  # p(1) fails 1 >= 2

    def test_random_rules_match_oracle(self):
        checked = 0
        for seed in range(150):
            program, init = generate_random(seed)
            store = init[: 6]
            items = list(enumerate(store))
            for rule in program.rules:
                assert production_match_keys(rule, items) == oracle_match_keys(
                    rule, items
                ), f"seed {seed}, rule {rule.name}"
                checked += 1
        assert checked >= 150
