"""Concrete syntax: lexer, parser and pretty printer.

Grammar sketch (full EBNF in docs/grammar.md):

    rule     ::= name '@' heads ('\\' heads)? ('<=>' | '==>') [guard '|'] body '.'
    pattern  ::= atom | '{' atom ['|' guard] '}' '#' '{' binders 'in' term '}'
    guard    ::= conjunct (',' conjunct)*
    term     ::= arithmetic over ints/vars/syms, tuples '(a, b)',
                 multisets '[a, b]' and '[x | Rest]', 'infty',
                 'reduce(fn, unit, m)', term comprehensions '{t | g}#{x in m}'

Variables start upper-case, symbols and predicates lower-case; '%' comments
run to end of line. Stores are comma-separated ground atoms ending in '.'.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .errors import NonGroundError, ParseError, ScopeError
from .rules import (
    Atom,
    Comprehension,
    Pattern,
    Program,
    Rule,
    check_program,
    ground_atom,
    patterns_free_vars,
)
from .terms import (
    Bind,
    Bool,
    Conj,
    ConjComp,
    GTrue,
    GUARD_TRUE,
    Guard,
    Inf,
    Int,
    MSet,
    MSetUnion,
    PrimApp,
    Reduce,
    Rel,
    Sym,
    Term,
    TermComp,
    TupleTerm,
    Var,
    conj,
    conjuncts,
)


@dataclass(frozen=True)
class SourceFile:
    path: str
    text: str
    kind: str  # "program" | "store"


KEYWORDS = {"in", "true", "false", "infty", "reduce"}

_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<comment>%[^\n]*)
      | (?P<int>\d+)
      | (?P<var>[A-Z_][A-Za-z0-9_]*)
      | (?P<sym>[a-z][A-Za-z0-9_]*)
      | (?P<punct><=>|==>|!=|<=|>=|\\|@|\||\#|\{|\}|\(|\)|\[|\]|,|\.|=|<|>|\+|-|\*)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # int | var | sym | keyword | punct | eof
    text: str
    line: int
    col: int


def tokenize(text: str, path: str = "<input>") -> list[Token]:
    tokens: list[Token] = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col, path)
        kind = m.lastgroup or ""
        chunk = m.group()
        if kind not in ("ws", "comment"):
            if kind == "sym" and chunk in KEYWORDS:
                tokens.append(Token("keyword", chunk, line, col))
            else:
                tokens.append(Token(kind, chunk, line, col))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            col = len(chunk) - chunk.rfind("\n")
        else:
            col += len(chunk)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token], path: str):
        self.tokens = tokens
        self.pos = 0
        self.path = path

    # -- token plumbing

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        t = self.tokens[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def at(self, text: str) -> bool:
        t = self.peek()
        return t.text == text and t.kind in ("punct", "keyword")

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.next()
            return True
        return False

    def expect(self, text: str) -> Token:
        t = self.peek()
        if not self.at(text):
            self.fail(f"expected {text!r}, found {t.text!r}" if t.text else f"expected {text!r}")
        return self.next()

    def fail(self, message: str):
        t = self.peek()
        raise ParseError(message, t.line, t.col, self.path)

    # -- programs

    def parse_program(self) -> Program:
        rules: list[Rule] = []
        while self.peek().kind != "eof":
            rules.append(self.parse_rule())
        return Program(tuple(rules))

    def parse_rule(self) -> Rule:
        name_tok = self.peek()
        if name_tok.kind != "sym":
            self.fail("expected a rule name")
        name = self.next().text
        self.expect("@")
        first = self.parse_pattern_list()
        second: list[Pattern] | None = None
        if self.accept("\\"):
            second = self.parse_pattern_list()
        if self.accept("<=>"):
            arrow = "<=>"
        elif self.accept("==>"):
            arrow = "==>"
        else:
            self.fail("expected '<=>' or '==>'")
        if arrow == "==>":
            if second is not None:
                self.fail("'\\' cannot be used with a propagation arrow")
            propagated, simplified = tuple(first), ()
        elif second is not None:
            propagated, simplified = tuple(first), tuple(second)
        else:
            propagated, simplified = (), tuple(first)

        guard = GUARD_TRUE
        if self.guard_ahead():
            guard = self.parse_guard()
            self.expect("|")
        body = self.parse_body()
        self.expect(".")
        guard = _classify_binds(guard, patterns_free_vars(propagated + simplified))
        return Rule(name, propagated, simplified, guard, tuple(body))

    def guard_ahead(self) -> bool:
        """Is there a top-level '|' before the terminating '.'?"""
        depth = 0
        i = self.pos
        while i < len(self.tokens):
            t = self.tokens[i]
            if t.kind == "punct":
                if t.text in "([{":
                    depth += 1
                elif t.text in ")]}":
                    depth -= 1
                elif t.text == "|" and depth == 0:
                    return True
                elif t.text == "." and depth == 0:
                    return False
            if t.kind == "eof":
                return False
            i += 1
        return False

    def parse_pattern_list(self) -> list[Pattern]:
        out = [self.parse_pattern()]
        while self.accept(","):
            out.append(self.parse_pattern())
        return out

    def parse_pattern(self) -> Pattern:
        if self.at("{"):
            return self.parse_comprehension()
        return self.parse_atom()

    def parse_atom(self) -> Atom:
        t = self.peek()
        if t.kind != "sym":
            self.fail("expected a predicate name")
        pred = self.next().text
        args: list[Term] = []
        if self.accept("("):
            if not self.at(")"):
                args.append(self.parse_term())
                while self.accept(","):
                    args.append(self.parse_term())
            self.expect(")")
        return Atom(pred, tuple(args))

    def parse_comprehension(self) -> Comprehension:
        self.expect("{")
        atom = self.parse_atom()
        guard = GUARD_TRUE
        if self.accept("|"):
            guard = self.parse_guard()
        self.expect("}")
        binders, domain = self.parse_binder_clause()
        return Comprehension(atom, guard, binders, domain)

    def parse_binder_clause(self) -> tuple[tuple[str, ...], Term]:
        self.expect("#")
        self.expect("{")
        binders = [self.parse_var_name()]
        while self.accept(","):
            binders.append(self.parse_var_name())
        self.expect("in")
        domain = self.parse_term()
        self.expect("}")
        return tuple(binders), domain

    def parse_var_name(self) -> str:
        t = self.peek()
        if t.kind != "var":
            self.fail("expected a variable")
        return self.next().text

    def parse_body(self) -> list[Pattern]:
        if self.peek().kind == "keyword" and self.peek().text == "true":
            self.next()
            return []
        return self.parse_pattern_list()

    # -- guards

    def parse_guard(self) -> Guard:
        items = [self.parse_guard_conjunct()]
        while self.accept(","):
            items.append(self.parse_guard_conjunct())
        return conj(*items)

    def parse_guard_conjunct(self) -> Guard:
        if self.at("{"):
            # Distinguish a conjunctive comprehension from a term
            # comprehension on the left of a relation by looking at what
            # follows the closing brace pair: a relation means term context.
            save = self.pos
            try:
                g = self.parse_conj_comp()
                if self.peek().kind == "punct" and self.peek().text in (
                    "=", "!=", "<", "<=", ">", ">=",
                ) or (self.peek().kind == "keyword" and self.peek().text == "in"):
                    self.pos = save
                else:
                    return g
            except ParseError:
                self.pos = save
        if self.peek().kind == "keyword" and self.peek().text == "true":
            self.next()
            return GUARD_TRUE
        lhs = self.parse_term()
        t = self.peek()
        rel = None
        if t.kind == "punct" and t.text in ("=", "!=", "<", "<=", ">", ">="):
            rel = self.next().text
        elif t.kind == "keyword" and t.text == "in":
            self.next()
            rel = "in"
        if rel is None:
            self.fail("expected a relation in guard")
        rhs = self.parse_term()
        if rel == "=":
            names = _var_tuple_names(lhs)
            if names is not None:
                return Bind(names, rhs)
        return Rel(rel, lhs, rhs)

    def parse_conj_comp(self) -> ConjComp:
        self.expect("{")
        body = self.parse_guard()
        self.expect("}")
        binders, domain = self.parse_binder_clause()
        return ConjComp(binders, domain, body)

    # -- terms

    def parse_term(self) -> Term:
        t = self.parse_mult()
        while True:
            if self.at("+"):
                self.next()
                t = PrimApp("+", (t, self.parse_mult()))
            elif self.at("-"):
                self.next()
                t = PrimApp("-", (t, self.parse_mult()))
            else:
                return t

    def parse_mult(self) -> Term:
        t = self.parse_unary()
        while self.at("*"):
            self.next()
            t = PrimApp("*", (t, self.parse_unary()))
        return t

    def parse_unary(self) -> Term:
        if self.at("-"):
            tok = self.next()
            inner = self.parse_unary()
            if isinstance(inner, Int):
                return Int(-inner.value)
            return PrimApp("-", (Int(0), inner))
        return self.parse_primary()

    def parse_primary(self) -> Term:
        t = self.peek()
        if t.kind == "int":
            self.next()
            return Int(int(t.text))
        if t.kind == "var":
            self.next()
            return Var(t.text)
        if t.kind == "keyword":
            if t.text == "infty":
                self.next()
                return Inf()
            if t.text == "true":
                self.next()
                return Bool(True)
            if t.text == "false":
                self.next()
                return Bool(False)
            if t.text == "reduce":
                self.next()
                self.expect("(")
                fn_tok = self.peek()
                if fn_tok.kind != "sym":
                    self.fail("expected a reduce function name")
                fn = self.next().text
                self.expect(",")
                unit = self.parse_term()
                self.expect(",")
                domain = self.parse_term()
                self.expect(")")
                return Reduce(fn, unit, domain)
            self.fail(f"unexpected keyword {t.text!r} in term")
        if t.kind == "sym":
            if t.text in ("min", "max") and self.peek(1).text == "(":
                op = self.next().text
                self.expect("(")
                a = self.parse_term()
                self.expect(",")
                b = self.parse_term()
                self.expect(")")
                return PrimApp(op, (a, b))
            self.next()
            return Sym(t.text)
        if self.accept("("):
            items = [self.parse_term()]
            while self.accept(","):
                items.append(self.parse_term())
            self.expect(")")
            if len(items) == 1:
                return items[0]
            return TupleTerm(tuple(items))
        if self.accept("["):
            items: list[Term] = []
            rest: Term | None = None
            if not self.at("]"):
                if not self.at("|"):
                    items.append(self.parse_term())
                    while self.accept(","):
                        items.append(self.parse_term())
                if self.accept("|"):
                    rest = self.parse_term()
            self.expect("]")
            literal = MSet(tuple(items))
            if rest is None:
                return literal
            return MSetUnion(literal, rest)
        if self.at("{"):
            self.next()
            template = self.parse_term()
            guard = GUARD_TRUE
            if self.accept("|"):
                guard = self.parse_guard()
            self.expect("}")
            binders, domain = self.parse_binder_clause()
            return TermComp(template, guard, binders, domain)
        self.fail(f"unexpected token {t.text!r}" if t.text else "unexpected end of input")
        raise AssertionError  # unreachable

    # -- stores

    def parse_store(self) -> tuple[Atom, ...]:
        atoms: list[Atom] = []
        if self.peek().kind != "eof" and not self.at("."):
            atoms.append(self.parse_atom())
            while self.accept(","):
                atoms.append(self.parse_atom())
        self.accept(".")
        if self.peek().kind != "eof":
            self.fail("trailing input after store")
        for a in atoms:
            if a.free_vars():
                raise NonGroundError(f"store constraint {pretty_pattern(a)} is not ground")
        return tuple(ground_atom(a) for a in atoms)


def _var_tuple_names(t: Term) -> tuple[str, ...] | None:
    """Names when the term is a bare variable or tuple of distinct variables."""
    if isinstance(t, Var):
        return (t.name,)
    if isinstance(t, TupleTerm) and all(isinstance(i, Var) for i in t.items):
        names = tuple(i.name for i in t.items)  # type: ignore[union-attr]
        if len(set(names)) == len(names):
            return names
    return None


def _classify_binds(guard: Guard, head_vars: frozenset[str]) -> Guard:
    """Turn Binds on head-bound variables back into equality checks."""
    known = set(head_vars)
    items: list[Guard] = []
    for c in conjuncts(guard):
        if isinstance(c, Bind):
            if any(v in known for v in c.vars):
                lhs = Var(c.vars[0]) if len(c.vars) == 1 else TupleTerm(
                    tuple(Var(v) for v in c.vars)
                )
                items.append(Rel("=", lhs, c.value))
            else:
                known.update(c.vars)
                items.append(c)
        else:
            items.append(c)
    return conj(*items)


# ---------------------------------------------------------------------------
# Entry points


def parse_program(text: str, path: str = "<input>", check: bool = True) -> Program:
    parser = _Parser(tokenize(text, path), path)
    program = parser.parse_program()
    if check:
        diagnostics = check_program(program)
        if diagnostics:
            raise ScopeError(diagnostics)
    return program


def parse_store(text: str, path: str = "<input>") -> tuple[Atom, ...]:
    parser = _Parser(tokenize(text, path), path)
    return parser.parse_store()


def load_source(path: str | Path, kind: str) -> SourceFile:
    p = Path(path)
    return SourceFile(str(p), p.read_text(encoding="utf-8"), kind)


def load_program(path: str | Path, check: bool = True) -> Program:
    src = load_source(path, "program")
    return parse_program(src.text, src.path, check=check)


def load_store(path: str | Path) -> tuple[Atom, ...]:
    src = load_source(path, "store")
    return parse_store(src.text, src.path)


# ---------------------------------------------------------------------------
# Pretty printer (round-trips through the parser)


def pretty_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Int):
        return str(t.value)
    if isinstance(t, Inf):
        return "infty"
    if isinstance(t, Bool):
        return "true" if t.value else "false"
    if isinstance(t, Sym):
        return t.name
    if isinstance(t, TupleTerm):
        return "(" + ", ".join(pretty_term(i) for i in t.items) + ")"
    if isinstance(t, MSet):
        return "[" + ", ".join(pretty_term(i) for i in t.items) + "]"
    if isinstance(t, MSetUnion):
        if isinstance(t.left, MSet):
            items = ", ".join(pretty_term(i) for i in t.left.items)
            return f"[{items} | {pretty_term(t.right)}]"
        raise ValueError(f"no concrete syntax for union {t!r}")
    if isinstance(t, TermComp):
        inner = pretty_term(t.template)
        if not isinstance(t.guard, GTrue):
            inner += " | " + pretty_guard(t.guard)
        return "{" + inner + "}" + _binder_clause(t.binders, t.domain)
    if isinstance(t, Reduce):
        return f"reduce({t.fn}, {pretty_term(t.unit)}, {pretty_term(t.domain)})"
    if isinstance(t, PrimApp):
        if t.op in ("min", "max"):
            return f"{t.op}({pretty_term(t.args[0])}, {pretty_term(t.args[1])})"
        if t.op in ("+", "-", "*"):
            lhs, rhs = (_paren_arith(a) for a in t.args)
            return f"{lhs} {t.op} {rhs}"
        return f"({pretty_term(t.args[0])} {t.op} {pretty_term(t.args[1])})"
    raise TypeError(f"not a term: {t!r}")


def _paren_arith(t: Term) -> str:
    s = pretty_term(t)
    if isinstance(t, PrimApp) and t.op in ("+", "-", "*"):
        return f"({s})"
    return s


def _binder_clause(binders: tuple[str, ...], domain: Term) -> str:
    return "#{" + ", ".join(binders) + " in " + pretty_term(domain) + "}"


def pretty_guard(g: Guard) -> str:
    if isinstance(g, GTrue):
        return "true"
    if isinstance(g, Rel):
        op = "in" if g.op == "in" else g.op
        return f"{pretty_term(g.lhs)} {op} {pretty_term(g.rhs)}"
    if isinstance(g, Bind):
        lhs = g.vars[0] if len(g.vars) == 1 else "(" + ", ".join(g.vars) + ")"
        return f"{lhs} = {pretty_term(g.value)}"
    if isinstance(g, Conj):
        return ", ".join(pretty_guard(i) for i in g.items)
    if isinstance(g, ConjComp):
        return "{" + pretty_guard(g.body) + "}" + _binder_clause(g.binders, g.domain)
    raise TypeError(f"not a guard: {g!r}")


def pretty_pattern(p: Pattern) -> str:
    if isinstance(p, Atom):
        if not p.args:
            return p.pred
        return p.pred + "(" + ", ".join(pretty_term(a) for a in p.args) + ")"
    inner = pretty_pattern(p.atom)
    if not isinstance(p.guard, GTrue):
        inner += " | " + pretty_guard(p.guard)
    return "{" + inner + "}" + _binder_clause(p.binders, p.domain)


def pretty_rule(r: Rule) -> str:
    if r.is_propagation:
        heads = ", ".join(pretty_pattern(p) for p in r.propagated)
        arrow = "==>"
    elif r.propagated:
        heads = (
            ", ".join(pretty_pattern(p) for p in r.propagated)
            + " \\ "
            + ", ".join(pretty_pattern(p) for p in r.simplified)
        )
        arrow = "<=>"
    else:
        heads = ", ".join(pretty_pattern(p) for p in r.simplified)
        arrow = "<=>"
    guard = "" if isinstance(r.guard, GTrue) else pretty_guard(r.guard) + " | "
    body = ", ".join(pretty_pattern(p) for p in r.body) if r.body else "true"
    return f"{r.name} @ {heads} {arrow} {guard}{body}."


def pretty_program(p: Program) -> str:
    return "\n".join(pretty_rule(r) for r in p.rules) + ("\n" if p.rules else "")


def pretty_store(atoms) -> str:
    atoms = tuple(atoms)
    if not atoms:
        return ""
    return ", ".join(pretty_pattern(a) for a in atoms) + "."
