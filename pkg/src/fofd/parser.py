"""Concrete text syntax for theories (``.fofd``/``.foid``) and structures
(``.struct``), with printers whose output reparses to the same AST.

Theory grammar::

    theory   := item*
    item     := definition | 'GID' '{' rule* '}' | vocab | formula '.'
    vocab    := 'vocab' '{' ('pred' NAME '/' INT '.' | 'const' NAME '.')* '}'
    definition := ('LFD' | 'GFD') '{' (rule | definition)* '}'
    rule     := [('!' | 'forall') NAME+ ':'] NAME ['(' NAME,* ')'] '<-' formula '.'
    formula  := imp ['<=>' imp]
    imp      := or ['=>' imp]
    or       := and ('|' and)*
    and      := unary ('&' unary)*
    unary    := '~' unary | quant | primary
    quant    := ('!' | '?' | 'forall' | 'exists') NAME+ ':' formula
    primary  := '(' formula ')' | 'true' | 'false'
              | term ('=' | '~=') term | NAME ['(' term,* ')']

Identifiers bound by a quantifier or a rule head are variables; every other
identifier in term position is a constant. ``//`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Optional

from .core import (
    And,
    Atom,
    Bool,
    Const,
    Eq,
    Exists,
    FixpointDefinition,
    Forall,
    Formula,
    InductiveDefinition,
    Kind,
    Loc,
    Not,
    Or,
    Rule,
    Structure,
    StructureError,
    Term,
    Theory,
    Var,
    Vocabulary,
    WellFormednessError,
    group_rules,
    iff,
    implies,
    validate,
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        self.message = message
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}")


_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|//[^\n]*)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<int>[0-9]+)
  | (?P<op><=>|=>|<-|~=|[=~&|!?:.,(){}/])
    """,
    re.VERBOSE,
)

_KEYWORDS = {"LFD", "GFD", "GID", "vocab", "pred", "const", "forall", "exists", "true", "false"}


@dataclass(frozen=True)
class Token:
    kind: str  # name | int | op | eof
    text: str
    line: int
    col: int

    @property
    def loc(self) -> Loc:
        return Loc(self.line, self.col)


def tokenize(text: str) -> list[Token]:
    out: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            out.append(Token(kind, chunk, line, pos - line_start + 1))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.arity: dict[str, int] = {}
        self.constants: set[str] = set()

    # ---- token helpers

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind in ("op", "name") and t.text in texts

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}")
        return self.advance()

    def fail(self, message: str, tok: Optional[Token] = None):
        tok = tok or self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise ParseError(f"{message}, found {found}", tok.line, tok.col)

    def name(self, what: str = "identifier") -> Token:
        t = self.tok
        if t.kind != "name" or t.text in _KEYWORDS:
            self.fail(f"expected {what}")
        return self.advance()

    # ---- symbol bookkeeping

    def use_predicate(self, name: str, arity: int, tok: Token) -> None:
        if name in self.constants:
            raise ParseError(f"{name} is used both as constant and predicate", tok.line, tok.col)
        known = self.arity.setdefault(name, arity)
        if known != arity:
            raise ParseError(
                f"predicate {name} used with arity {arity}, previously {known}", tok.line, tok.col
            )

    def use_constant(self, name: str, tok: Token) -> None:
        if name in self.arity:
            raise ParseError(f"{name} is used both as predicate and constant", tok.line, tok.col)
        self.constants.add(name)

    # ---- theory level

    def theory(self, allow_gid: bool = False):
        definitions: list[FixpointDefinition] = []
        sentences: list[Formula] = []
        gids: list[InductiveDefinition] = []
        declared_preds: set[tuple[str, int]] = set()
        declared_consts: set[str] = set()
        while self.tok.kind != "eof":
            if self.at("LFD", "GFD"):
                definitions.append(self.definition())
            elif self.at("GID"):
                if not allow_gid:
                    self.fail("GID blocks are only allowed in .foid input")
                gids.append(self.gid())
            elif self.at("vocab"):
                p, c = self.vocab()
                declared_preds |= p
                declared_consts |= c
            else:
                sentences.append(self.formula(frozenset()))
                self.expect(".")
        theory = Theory(
            tuple(definitions),
            tuple(sentences),
            Vocabulary(frozenset(declared_preds), frozenset(declared_consts)),
        )
        return theory, gids

    def vocab(self):
        self.expect("vocab")
        self.expect("{")
        preds: set[tuple[str, int]] = set()
        consts: set[str] = set()
        while not self.at("}"):
            if self.at("pred"):
                self.advance()
                t = self.name("predicate name")
                self.expect("/")
                n = self.tok
                if n.kind != "int":
                    self.fail("expected arity")
                self.advance()
                self.use_predicate(t.text, int(n.text), t)
                preds.add((t.text, int(n.text)))
            elif self.at("const"):
                self.advance()
                t = self.name("constant name")
                self.use_constant(t.text, t)
                consts.add(t.text)
            else:
                self.fail("expected 'pred' or 'const'")
            self.expect(".")
        self.expect("}")
        return preds, consts

    def definition(self) -> FixpointDefinition:
        kw = self.advance()
        kind = Kind(kw.text)
        self.expect("{")
        rules: list[Rule] = []
        subdefs: list[FixpointDefinition] = []
        while not self.at("}"):
            if self.at("LFD", "GFD"):
                subdefs.append(self.definition())
            else:
                rules.append(self.rule())
        self.expect("}")
        return FixpointDefinition(kind, group_rules(rules), tuple(subdefs), kw.loc)

    def gid(self) -> InductiveDefinition:
        kw = self.expect("GID")
        self.expect("{")
        rules: list[Rule] = []
        while not self.at("}"):
            rules.append(self.rule())
        self.expect("}")
        return InductiveDefinition(group_rules(rules), kw.loc)

    def rule(self) -> Rule:
        start = self.tok
        bound: list[str] = []
        if self.at("!", "forall"):
            self.advance()
            bound = self.var_list()
            self.expect(":")
        head = self.name("rule head")
        params: list[str] = []
        if self.at("("):
            self.advance()
            if not self.at(")"):
                while True:
                    v = self.name("head variable")
                    if v.text in params:
                        raise ParseError(f"repeated head variable {v.text}", v.line, v.col)
                    params.append(v.text)
                    if not self.at(","):
                        break
                    self.advance()
            self.expect(")")
        extra = [b for b in bound if b not in params]
        if extra:
            raise ParseError(
                f"quantified variables {extra} do not appear in the head", start.line, start.col
            )
        self.use_predicate(head.text, len(params), head)
        self.expect("<-")
        body = self.formula(frozenset(params))
        self.expect(".")
        return Rule(head.text, tuple(params), body, start.loc)

    def var_list(self) -> list[str]:
        names = [self.name("variable").text]
        while self.tok.kind == "name" and self.tok.text not in _KEYWORDS:
            names.append(self.advance().text)
        return names

    # ---- formulas

    def formula(self, scope: frozenset[str]) -> Formula:
        left = self.implication(scope)
        if self.at("<=>"):
            self.advance()
            right = self.implication(scope)
            return iff(left, right)
        return left

    def implication(self, scope: frozenset[str]) -> Formula:
        left = self.disjunction(scope)
        if self.at("=>"):
            self.advance()
            return implies(left, self.implication(scope))
        return left

    def disjunction(self, scope: frozenset[str]) -> Formula:
        args = [self.conjunction(scope)]
        while self.at("|"):
            self.advance()
            args.append(self.conjunction(scope))
        return args[0] if len(args) == 1 else Or(tuple(args))

    def conjunction(self, scope: frozenset[str]) -> Formula:
        args = [self.unary(scope)]
        while self.at("&"):
            self.advance()
            args.append(self.unary(scope))
        return args[0] if len(args) == 1 else And(tuple(args))

    def unary(self, scope: frozenset[str]) -> Formula:
        if self.at("~"):
            self.advance()
            return Not(self.unary(scope))
        if self.at("!", "?", "forall", "exists"):
            universal = self.advance().text in ("!", "forall")
            names = self.var_list()
            self.expect(":")
            body = self.formula(scope | frozenset(names))
            for n in reversed(names):
                body = Forall(n, body) if universal else Exists(n, body)
            return body
        return self.primary(scope)

    def primary(self, scope: frozenset[str]) -> Formula:
        t = self.tok
        if self.at("("):
            self.advance()
            f = self.formula(scope)
            self.expect(")")
            return f
        if self.at("true", "false"):
            self.advance()
            return Bool(t.text == "true")
        if t.kind == "int" or (t.kind == "name" and t.text not in _KEYWORDS):
            nxt = self.peek()
            if nxt.kind == "op" and nxt.text in ("=", "~="):
                left = self.term(scope)
                op = self.advance().text
                right = self.term(scope)
                eq = Eq(left, right)
                return eq if op == "=" else Not(eq)
            if t.kind == "int":
                self.fail("expected formula")
            self.advance()
            if t.text in scope:
                raise ParseError(f"variable {t.text} used as a formula", t.line, t.col)
            args: list[Term] = []
            if self.at("("):
                self.advance()
                if not self.at(")"):
                    while True:
                        args.append(self.term(scope))
                        if not self.at(","):
                            break
                        self.advance()
                self.expect(")")
            self.use_predicate(t.text, len(args), t)
            return Atom(t.text, tuple(args))
        self.fail("expected formula")

    def term(self, scope: frozenset[str]) -> Term:
        t = self.tok
        if t.kind == "int":
            self.advance()
            self.use_constant(t.text, t)
            return Const(t.text)
        if t.kind == "name" and t.text not in _KEYWORDS:
            self.advance()
            if t.text in scope:
                return Var(t.text)
            self.use_constant(t.text, t)
            return Const(t.text)
        self.fail("expected term")


def _check_definitions(theory: Theory) -> None:
    violations = []
    for i, d in enumerate(theory.definitions):
        violations.extend(validate(d, f"D{i}"))
    if violations:
        raise WellFormednessError(violations)


def parse_theory(text: str, check: bool = True) -> Theory:
    """Parse ``.fofd`` text. With ``check`` every definition is validated and
    violations raise :class:`WellFormednessError`."""
    theory, _ = _Parser(text).theory()
    if check:
        _check_definitions(theory)
    return theory


def parse_foid(text: str, check: bool = True) -> tuple[list[InductiveDefinition], Theory]:
    """Parse ``.foid`` text: GID blocks plus ordinary theory items."""
    theory, gids = _Parser(text).theory(allow_gid=True)
    if check:
        _check_definitions(theory)
    return gids, theory


def parse_formula(text: str, variables: Iterable[str] = ()) -> Formula:
    p = _Parser(text)
    f = p.formula(frozenset(variables))
    if p.tok.kind != "eof":
        p.fail("trailing input")
    return f


# ------------------------------------------------------------- structures


def parse_structure(text: str) -> Structure:
    """Parse ``.struct`` text::

        domain = {s1, s2}.
        const a.            // rigid element outside the domain
        const b = s1.       // constant naming a domain element
        Edge = {(s1,s2), (s2,s1)}.
        P = {s1}.           // unary tuples may drop parentheses
        p = true.           // nullary predicate
    """
    p = _Parser(text)
    domain: Optional[list[str]] = None
    constants: dict[str, str] = {}
    relations: dict[str, frozenset[tuple[str, ...]]] = {}

    def element() -> Token:
        t = p.tok
        if t.kind == "int" or (t.kind == "name" and t.text not in _KEYWORDS):
            return p.advance()
        p.fail("expected domain element")

    def known(t: Token) -> str:
        if t.text not in dom_set and t.text not in rigid:
            raise ParseError(f"element {t.text} is not in the domain", t.line, t.col)
        return t.text

    dom_set: set[str] = set()
    rigid: set[str] = set()
    while p.tok.kind != "eof":
        if p.at("domain") and p.peek().text == "=":
            start = p.advance()
            if domain is not None:
                raise ParseError("domain declared twice", start.line, start.col)
            p.expect("=")
            p.expect("{")
            domain = []
            while not p.at("}"):
                e = element()
                if e.text in dom_set:
                    raise ParseError(f"duplicate element {e.text}", e.line, e.col)
                domain.append(e.text)
                dom_set.add(e.text)
                if not p.at(","):
                    break
                p.advance()
            p.expect("}")
            p.expect(".")
            continue
        if domain is None:
            p.fail("the domain declaration must come first")
        if p.at("const"):
            p.advance()
            c = p.name("constant name")
            if p.at("="):
                p.advance()
                constants[c.text] = known(element())
            else:
                if c.text in dom_set:
                    raise ParseError(f"{c.text} is already a domain element", c.line, c.col)
                constants[c.text] = c.text
                rigid.add(c.text)
            p.expect(".")
            continue
        name = p.name("predicate name")
        if name.text in relations:
            raise ParseError(f"relation {name.text} given twice", name.line, name.col)
        p.expect("=")
        if p.at("true", "false"):
            rel = frozenset({()}) if p.advance().text == "true" else frozenset()
        else:
            p.expect("{")
            tuples: list[tuple[str, ...]] = []
            while not p.at("}"):
                start = p.tok
                if p.at("("):
                    p.advance()
                    items = []
                    while not p.at(")"):
                        items.append(known(element()))
                        if not p.at(","):
                            break
                        p.advance()
                    p.expect(")")
                    tup = tuple(items)
                else:
                    tup = (known(element()),)
                if tuples and len(tup) != len(tuples[0]):
                    raise ParseError(
                        f"tuple of arity {len(tup)} in relation {name.text} of arity {len(tuples[0])}",
                        start.line,
                        start.col,
                    )
                tuples.append(tup)
                if not p.at(","):
                    break
                p.advance()
            p.expect("}")
            rel = frozenset(tuples)
        p.expect(".")
        relations[name.text] = rel
    if domain is None:
        raise ParseError("missing domain declaration", p.tok.line, p.tok.col)
    s = Structure(tuple(domain), relations, constants)
    try:
        s.check()
    except StructureError as e:
        raise ParseError(str(e), 1, 1) from e
    return s


# --------------------------------------------------------------- printing


def _term(t: Term) -> str:
    return t.name


def _operand(f: Formula) -> str:
    if isinstance(f, (And, Or, Forall, Exists)):
        return f"({print_formula(f)})"
    return print_formula(f)


def print_formula(f: Formula) -> str:
    if isinstance(f, Atom):
        if not f.args:
            return f.pred
        return f"{f.pred}({', '.join(_term(t) for t in f.args)})"
    if isinstance(f, Eq):
        return f"{_term(f.left)} = {_term(f.right)}"
    if isinstance(f, Bool):
        return "true" if f.value else "false"
    if isinstance(f, Not):
        if isinstance(f.arg, Eq):
            return f"{_term(f.arg.left)} ~= {_term(f.arg.right)}"
        return f"~{_operand(f.arg)}"
    if isinstance(f, And):
        if not f.args:
            _empty_junction(f)
        return " & ".join(_operand(a) for a in f.args)
    if isinstance(f, Or):
        if not f.args:
            _empty_junction(f)
        return " | ".join(_operand(a) for a in f.args)
    if isinstance(f, (Forall, Exists)):
        q = "!" if isinstance(f, Forall) else "?"
        return f"{q}{f.var}: {print_formula(f.body)}"
    raise TypeError(f)


def _empty_junction(f: Formula) -> None:
    raise ValueError(f"cannot print empty {type(f).__name__}; use true/false")


def print_rule(r: Rule) -> str:
    if r.params:
        return f"!{' '.join(r.params)}: {r.pred}({', '.join(r.params)}) <- {print_formula(r.body)}."
    return f"{r.pred} <- {print_formula(r.body)}."


def _print_definition(d: FixpointDefinition, indent: int, out: list[str]) -> None:
    pad = "  " * indent
    out.append(f"{pad}{d.kind} {{")
    for r in d.rules:
        out.append(f"{pad}  {print_rule(r)}")
    for sub in d.subdefs:
        _print_definition(sub, indent + 1, out)
    out.append(f"{pad}}}")


def print_definition(d: FixpointDefinition) -> str:
    out: list[str] = []
    _print_definition(d, 0, out)
    return "\n".join(out) + "\n"


def print_gid(g: InductiveDefinition) -> str:
    lines = ["GID {"] + [f"  {print_rule(r)}" for r in g.rules] + ["}"]
    return "\n".join(lines) + "\n"


def print_theory(theory: Theory) -> str:
    out: list[str] = []
    decl = theory.declared
    if decl.predicates or decl.constants:
        out.append("vocab {")
        for name, arity in sorted(decl.predicates):
            out.append(f"  pred {name}/{arity}.")
        for c in sorted(decl.constants):
            out.append(f"  const {c}.")
        out.append("}")
    for d in theory.definitions:
        _print_definition(d, 0, out)
    for s in theory.sentences:
        out.append(f"{print_formula(s)}.")
    return "\n".join(out) + ("\n" if out else "")


def _element_key(order: dict[str, int]):
    return lambda t: tuple(order.get(e, len(order)) for e in t)


def print_structure(s: Structure) -> str:
    out = [f"domain = {{{', '.join(s.domain)}}}."]
    for c, e in sorted(s.constants.items()):
        if c == e and e not in s.domain:
            out.append(f"const {c}.")
        else:
            out.append(f"const {c} = {e}.")
    order = {e: i for i, e in enumerate(s.elements)}
    for name in sorted(s.relations):
        rel = s.relations[name]
        if rel and all(len(t) == 0 for t in rel):
            out.append(f"{name} = true.")
            continue
        tuples = sorted(rel, key=_element_key(order))
        items = []
        for t in tuples:
            items.append(t[0] if len(t) == 1 else f"({','.join(t)})")
        out.append(f"{name} = {{{', '.join(items)}}}.")
    return "\n".join(out) + "\n"
