"""Parsing the rule language and running the monotonicity analysis.

Run after `pip install -e .`:  python demos/02_parsing_and_analysis.py
"""

from chrcp import (
    check_program,
    parse_program,
    predicate_report,
    pretty_pattern,
    pretty_program,
    residual_non_unifiable,
)

text = """
% one maximal sweep turns every a into b
relabel @ {a(X)}#{X in Xs} <=> {b(X)}#{X in Xs}.
% count the a's seen so far
tally @ seen(N) \\ tick <=> M = N + 1 | seen(M).
"""

program = parse_program(text)
print(pretty_program(program))

# Well-formedness diagnostics come back as data, not exceptions.
bad = parse_program("r @ p(X) <=> q(Z).", check=False)
for d in check_program(bad):
    print("diagnostic:", d)

# Which body constraints may be stored lazily? Anything a comprehension head
# could absorb must be stored eagerly before further matching.
patterns = [p for rule in program.rules for p in rule.body]
for verdict in residual_non_unifiable(program, patterns).verdicts:
    tag = "monotone" if verdict.monotone else f"absorbable by {pretty_pattern(verdict.witness_head)}"
    print(f"{pretty_pattern(verdict.pattern):24} {tag}")

print("\nper predicate:")
for (pred, arity), mono in sorted(predicate_report(program).items()):
    print(f"  {pred}/{arity}: {'monotone' if mono else 'non-monotone'}")
