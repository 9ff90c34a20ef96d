"""Why lazy storage needs the monotonicity analysis: maximality breaks when
a comprehension-matchable constraint arrives after the fact.

Run after `pip install -e .`:  python demos/04_maximality_matters.py
"""

from chrcp import (
    Atom,
    Int,
    abstract_steps,
    corpus_program,
    is_monotone,
    parse_store,
    pretty_store,
    store_of,
)

program = corpus_program("relabel")  # relabel @ {a(X)}#{X in Xs} <=> {b(X)}#{X in Xs}.

two = store_of(parse_store("a(1), a(2)."))
three = store_of(parse_store("a(1), a(2), a(3)."))

print("successors of a(1), a(2):")
for _, succ in abstract_steps(program, two):
    print("  ", pretty_store(succ))

print("successors of a(1), a(2), a(3):")
for _, succ in abstract_steps(program, three):
    print("  ", pretty_store(succ))
print("note: b(1), b(2), a(3) is NOT among them — the comprehension must")
print("absorb a(3) too, so the two-element derivation does not survive the")
print("extension. Monotonicity is conditional:")

print("  a(3) monotone?", is_monotone(program, Atom("a", (Int(3),))))
print("  c(3) monotone?", is_monotone(program, Atom("c", (Int(3),))))
print("c(3) can never be absorbed, so extending any derivation with it is safe")
print("and the machine may store such constraints lazily.")
