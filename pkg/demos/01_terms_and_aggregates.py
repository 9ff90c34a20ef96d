"""Terms, canonical multisets, and aggregate evaluation.

Run after `pip install -e .`:  python demos/01_terms_and_aggregates.py
"""

from chrcp import (
    INFTY,
    Int,
    MSetUnion,
    Reduce,
    Rel,
    Sym,
    TermComp,
    Var,
    eval_guard,
    mset,
    normalize,
    pretty_term,
    reduce_eval,
    tup,
)
from chrcp.terms import GTrue

# Multisets normalize to a canonical order, so equality is structural.
a = mset(Int(2), Int(1), Int(2))
b = MSetUnion(mset(Int(1)), mset(Int(2), Int(2)))
print("union collapses:   ", pretty_term(normalize(b)))
print("order-insensitive: ", normalize(a) == normalize(b))

# Term comprehensions project and filter a multiset of tuples.
edges = mset(
    tup(Sym("a"), Sym("b"), Int(3)),
    tup(Sym("a"), Sym("c"), Int(3)),
    tup(Sym("a"), Sym("d"), Int(5)),
)
weights = TermComp(Var("W"), GTrue(), ("X", "Y", "W"), edges)
print("projected weights: ", pretty_term(normalize(weights)))

# reduce folds a registered binary function; the seed handles the empty case.
print("min over weights:  ", pretty_term(reduce_eval("min", INFTY, normalize(weights))))
print("min over nothing:  ", pretty_term(reduce_eval("min", INFTY, mset())))
print("count:             ", pretty_term(reduce_eval("count", Int(0), normalize(weights))))

# Guards evaluate over ground terms; infty sits above every integer.
print("3 < infty:         ", eval_guard(Rel("<", Int(3), INFTY)))
heavy = TermComp(Var("W"), Rel(">", Var("W"), Int(3)), ("X", "Y", "W"), edges)
print("weights above 3:   ", pretty_term(normalize(heavy)))
