import pytest

from chrcp.errors import NonGroundError, ParseError, ScopeError
from chrcp.fuzz import generate_random
from chrcp.parse import (
    parse_program,
    parse_store,
    pretty_program,
    pretty_store,
)
from chrcp.rules import Atom, Comprehension
from chrcp.terms import (
    Bind,
    Inf,
    Int,
    MSet,
    MSetUnion,
    Reduce,
    Rel,
    Sym,
    TermComp,
    TupleTerm,
    Var,
)


class TestParseProgram:
    def test_pivot_swap_shape(self):
        text = (
            "pivotSwap @ swap(X,Y,P), {data(X,D)|D>=P}#{D in Xs}, "
            "{data(Y,D)|D<P}#{D in Ys} <=> {data(Y,D)}#{D in Xs}, {data(X,D)}#{D in Ys}."
        )
        p = parse_program(text)
        (r,) = p.rules
        assert r.name == "pivotSwap"
        assert r.propagated == ()
        assert len(r.simplified) == 3
        assert isinstance(r.simplified[0], Atom)
        comp = r.simplified[1]
        assert isinstance(comp, Comprehension)
        assert comp.binders == ("D",)
        assert comp.domain == Var("Xs")
        assert comp.guard == Rel(">=", Var("D"), Var("P"))
        assert len(r.body) == 2

    def test_propagation_arrow(self):
        (r,) = parse_program("r @ p(X) ==> q(X).").rules
        assert r.propagated and not r.simplified
        assert r.is_propagation

    def test_retained_heads(self):
        (r,) = parse_program("r @ p(X) \\ q(X) <=> s(X).").rules
        assert len(r.propagated) == 1 and len(r.simplified) == 1

    def test_parse_error_location(self):
        with pytest.raises(ParseError) as exc:
            parse_program("r @ p(X \\ q(X)")
        assert exc.value.line == 1

    def test_scope_error_on_check(self):
        with pytest.raises(ScopeError):
            parse_program("r @ p(X) <=> q(Z).")

    def test_guard_and_bind(self):
        (r,) = parse_program("r @ p(X) <=> Es = [X], W = reduce(sum, 0, Es), X > 0 | q(W).").rules
        binds = [c for c in (r.guard.items if hasattr(r.guard, "items") else [r.guard])]
        assert any(isinstance(c, Bind) for c in binds)

    def test_head_var_equation_is_a_check_not_a_bind(self):
        (r,) = parse_program("r @ p(X), q(Y) <=> X = Y | s(X).").rules
        assert isinstance(r.guard, Rel)

    def test_empty_body_keyword(self):
        (r,) = parse_program("r @ p(X) <=> true.").rules
        assert r.body == ()

    def test_comments(self):
        p = parse_program("% a comment\nr @ p(X) <=> true. % trailing\n")
        assert len(p.rules) == 1


class TestTerms:
    def test_term_spellings(self):
        (r,) = parse_program(
            "r @ p(X) <=> Ms = [1, 2, (a, 3)], Cs = [X | Ms], "
            "W = reduce(min, infty, [3, 1]), T = {V | V > 0}#{V in Ms} | q(W)."
        ).rules
        conj = r.guard.items
        assert conj[0].value == MSet((Int(1), Int(2), TupleTerm((Sym("a"), Int(3)))))
        assert isinstance(conj[1].value, MSetUnion)
        assert conj[2].value == Reduce("min", Inf(), MSet((Int(3), Int(1))))
        assert isinstance(conj[3].value, TermComp)

    def test_negative_numbers(self):
        (a,) = parse_store("p(-3).")
        assert a.args == (Int(-3),)

    def test_arith_precedence(self):
        (r,) = parse_program("r @ p(X) <=> W = X + 2 * 3 | q(W).").rules
        bind = r.guard
        assert bind.value.op == "+"


class TestParseStore:
    def test_basic(self):
        st = parse_store("data(a,7), data(a,3), swap(a,b,5).")
        assert len(st) == 3
        assert st[0] == Atom("data", (Sym("a"), Int(7)))

    def test_empty(self):
        assert parse_store("") == ()

    def test_non_ground_rejected(self):
        with pytest.raises(NonGroundError):
            parse_store("data(X, 1).")


class TestRoundTrip:
    def test_corpus_round_trips(self):
        from chrcp import corpus_program
        from chrcp.bundled import PROGRAMS

        for name in PROGRAMS:
            p = corpus_program(name)
            assert parse_program(pretty_program(p)) == p, name

    def test_generated_programs_round_trip(self):
        for seed in range(40):
            p, init = generate_random(seed)
            text = pretty_program(p)
            assert parse_program(text, check=False) == p, f"seed {seed}\n{text}"

    def test_store_round_trips(self, pivot_store):
        assert parse_store(pretty_store(pivot_store)) == pivot_store
