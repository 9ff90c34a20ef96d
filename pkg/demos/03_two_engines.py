"""The same program under the declarative relation and the goal-stack machine.

Run after `pip install -e .`:  python demos/03_two_engines.py
"""

from chrcp import (
    abstract_steps,
    annotate,
    corpus_program,
    corpus_store,
    correspondence,
    pretty_store,
    pretty_term,
    run_abstract,
    run_operational,
    store_of,
)

program = corpus_program("pivot_swap")
store = corpus_store("pivot_swap")
print("store:   ", pretty_store(store))

# The declarative relation: every applicable rule instance at once.
for step, successor in abstract_steps(program, store_of(store)):
    xs = pretty_term(step.theta["Xs"])
    ys = pretty_term(step.theta["Ys"])
    print(f"instance:  rule={step.rule} Xs={xs} Ys={ys}")
    print("successor:", pretty_store(successor))

final = run_abstract(program, store_of(store), max_steps=10).final
print("declarative final:", pretty_store(final))

# The machine processes goals one at a time; comprehensions force the
# data constraints to be stored eagerly before anything fires.
run = run_operational(annotate(program), store)
print("machine final:    ", pretty_store(correspondence(run.state)))
print("machine steps:")
for kind, digest in run.trace[:8]:
    print(f"  {kind:12} {digest}")
print(f"  ... {len(run.trace) - 8} more")
