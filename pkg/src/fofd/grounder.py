"""Grounding of FO(FD) theories over a finite structure, and the Tseitin-style
normalization of ground definitions into DefNF."""

from __future__ import annotations

import itertools
from typing import Mapping, Optional

from .core import (
    And,
    Atom,
    Bool,
    Eq,
    Exists,
    FixpointDefinition,
    Forall,
    Formula,
    Not,
    Or,
    Structure,
    Theory,
    Var,
    defined_predicates,
)
from .prop import (
    PAnd,
    PAtom,
    PConst,
    PFALSE,
    PIff,
    PImp,
    PNot,
    POr,
    AtomTable,
    DefNFRule,
    PropDefinition,
    PropFormula,
    PropRule,
    PropTheory,
    pand,
    pnot,
    por,
)


class GroundingError(ValueError):
    pass


class _Grounder:
    def __init__(self, theory: Theory, structure: Structure, simplify: bool):
        self.theory = theory
        self.s = structure
        self.domain = structure.domain
        self.table = AtomTable()
        self.defined: set[str] = set()
        for d in theory.definitions:
            self.defined |= defined_predicates(d)
        self.fold: dict[str, frozenset] = {}
        if simplify:
            self.fold = {p: r for p, r in structure.relations.items() if p not in self.defined}

    def denote(self, t, env: Mapping[str, str]) -> str:
        if isinstance(t, Var):
            return env[t.name]
        try:
            return self.s.denote(t.name)
        except KeyError as e:
            raise GroundingError(str(e)) from None

    def formula(self, f: Formula, env: dict[str, str]) -> PropFormula:
        if isinstance(f, Atom):
            args = tuple(self.denote(t, env) for t in f.args)
            if f.pred in self.fold:
                return PConst(args in self.fold[f.pred])
            if f.pred in self.defined and any(a not in self.domain for a in args):
                # rule heads range over the domain only
                return PFALSE
            return PAtom(self.table.intern((f.pred, args)))
        if isinstance(f, Eq):
            return PConst(self.denote(f.left, env) == self.denote(f.right, env))
        if isinstance(f, Bool):
            return PConst(f.value)
        if isinstance(f, Not):
            return pnot(self.formula(f.arg, env))
        if isinstance(f, And):
            return pand(self.formula(a, env) for a in f.args)
        if isinstance(f, Or):
            return por(self.formula(a, env) for a in f.args)
        if isinstance(f, (Forall, Exists)):
            saved = env.get(f.var)
            parts = []
            for d in self.domain:
                env[f.var] = d
                parts.append(self.formula(f.body, env))
            if saved is None:
                env.pop(f.var, None)
            else:
                env[f.var] = saved
            return pand(parts) if isinstance(f, Forall) else por(parts)
        raise TypeError(f)

    def definition(self, fd: FixpointDefinition) -> PropDefinition:
        rules = []
        for r in fd.rules:
            for t in itertools.product(self.domain, repeat=r.arity):
                head = self.table.intern((r.pred, t))
                rules.append(PropRule(head, self.formula(r.body, dict(zip(r.params, t)))))
        subs = tuple(self.definition(s) for s in fd.subdefs)
        return PropDefinition(fd.kind, tuple(rules), subs)

    def frame_facts(self) -> list[PropFormula]:
        """Unit literals pinning every frame relation that was not folded."""
        vocab = self.theory.vocabulary
        out = []
        for name, arity in sorted(vocab.predicates):
            rel = self.s.relations.get(name)
            if rel is None or name in self.fold:
                continue
            elems = self.domain if name in self.defined else self.s.elements
            for t in itertools.product(elems, repeat=arity):
                atom = PAtom(self.table.intern((name, t)))
                out.append(atom if t in rel else PNot(atom))
        return out


def ground(theory: Theory, structure: Structure, simplify: bool = False) -> PropTheory:
    """Ground ``theory`` over the domain of ``structure``.

    Quantifiers become finite conjunctions and disjunctions, equality is
    decided on the spot, and each rule is instantiated once per head tuple.
    Relations interpreted by ``structure`` are kept as unit literals; with
    ``simplify`` the ones of predicates that no definition defines are folded
    into the formulas instead.
    """
    g = _Grounder(theory, structure, simplify)
    definitions = tuple(g.definition(d) for d in theory.definitions)
    sentences = [g.formula(s, {}) for s in theory.sentences]
    sentences.extend(g.frame_facts())
    return PropTheory(g.table, tuple(sentences), definitions)


# ------------------------------------------------------------------ DefNF


def prop_nnf(f: PropFormula, negate: bool = False) -> PropFormula:
    """Negation normal form with implications and equivalences expanded and
    constants folded."""
    if isinstance(f, PAtom):
        return PNot(f) if negate else f
    if isinstance(f, PConst):
        return PConst(f.value != negate)
    if isinstance(f, PNot):
        return prop_nnf(f.arg, not negate)
    if isinstance(f, PAnd):
        args = [prop_nnf(a, negate) for a in f.args]
        return por(args) if negate else pand(args)
    if isinstance(f, POr):
        args = [prop_nnf(a, negate) for a in f.args]
        return pand(args) if negate else por(args)
    if isinstance(f, PImp):
        return prop_nnf(POr((PNot(f.left), f.right)), negate)
    if isinstance(f, PIff):
        both = PAnd((f.left, f.right))
        neither = PAnd((PNot(f.left), PNot(f.right)))
        return prop_nnf(POr((both, neither)), negate)
    raise TypeError(f)


def _literal(f: PropFormula) -> Optional[int]:
    if isinstance(f, PAtom):
        return f.id
    if isinstance(f, PNot) and isinstance(f.arg, PAtom):
        return -f.arg.id
    return None


class _Normalizer:
    def __init__(self, table: AtomTable, defined: frozenset[int]):
        self.table = table
        self.defined = defined

    def node(self, pd: PropDefinition) -> PropDefinition:
        out: list[DefNFRule] = []
        memo: dict[PropFormula, int] = {}
        for r in pd.rules:
            body = prop_nnf(r.formula)
            out.append(self.rule(r.head, body, out, memo))
        subs = tuple(self.node(s) for s in pd.subdefs)
        return PropDefinition(pd.kind, tuple(out), subs)

    def rule(self, head: int, body: PropFormula, out: list, memo: dict) -> DefNFRule:
        if isinstance(body, PConst):
            return DefNFRule(head, body.value, ())
        l = _literal(body)
        if l is not None:
            return DefNFRule(head, True, (self.check(l),))
        conj = isinstance(body, PAnd)
        return DefNFRule(head, conj, tuple(self.name(a, out, memo) for a in body.args))

    def name(self, f: PropFormula, out: list, memo: dict) -> int:
        l = _literal(f)
        if l is not None:
            return self.check(l)
        found = memo.get(f)
        if found is not None:
            return found
        aux = self.table.fresh("aux", "")
        memo[f] = aux
        out.append(self.rule(aux, f, out, memo))
        return aux

    def check(self, l: int) -> int:
        if l < 0 and -l in self.defined:
            raise GroundingError(f"defined atom {self.table.name(-l)} occurs negatively")
        return l


def to_defnf(pd: PropDefinition, table: AtomTable) -> PropDefinition:
    """Bring every rule body of ``pd`` into a flat conjunction or disjunction
    of literals. Complex subformulas are named by fresh auxiliary atoms that
    ``table`` records; each is defined in the node of the rule it came from."""
    return _Normalizer(table, pd.defined()).node(pd)


def theory_to_defnf(pt: PropTheory) -> PropTheory:
    """DefNF copy of ``pt`` with its own extended atom table."""
    table = pt.atoms.copy()
    defs = tuple(to_defnf(d, table) for d in pt.definitions)
    return PropTheory(table, pt.sentences, defs)


# ---------------------------------------------------------------- printing


def print_prop_formula(f: PropFormula, table: AtomTable) -> str:
    def operand(g: PropFormula) -> str:
        text = print_prop_formula(g, table)
        return f"({text})" if isinstance(g, (PAnd, POr, PImp, PIff)) else text

    if isinstance(f, PAtom):
        return table.name(f.id)
    if isinstance(f, PConst):
        return "true" if f.value else "false"
    if isinstance(f, PNot):
        return "~" + operand(f.arg)
    if isinstance(f, PAnd):
        return " & ".join(operand(a) for a in f.args)
    if isinstance(f, POr):
        return " | ".join(operand(a) for a in f.args)
    if isinstance(f, PImp):
        return f"{operand(f.left)} => {operand(f.right)}"
    if isinstance(f, PIff):
        return f"{operand(f.left)} <=> {operand(f.right)}"
    raise TypeError(f)


def _body(r, table: AtomTable) -> str:
    if isinstance(r, DefNFRule):
        if not r.lits:
            return "true" if r.conj else "false"
        return print_prop_formula(r.formula, table)
    return print_prop_formula(r.body, table)


def _print_prop_definition(pd: PropDefinition, table: AtomTable, indent: int, out: list[str]) -> None:
    pad = "  " * indent
    out.append(f"{pad}{pd.kind} {{")
    for r in pd.rules:
        out.append(f"{pad}  {table.name(r.head)} <- {_body(r, table)}.")
    for s in pd.subdefs:
        _print_prop_definition(s, table, indent + 1, out)
    out.append(f"{pad}}}")


def print_prop_theory(pt: PropTheory) -> str:
    """Ground theory in the surface grammar, domain elements standing for
    their constants."""
    out: list[str] = []
    for d in pt.definitions:
        _print_prop_definition(d, pt.atoms, 0, out)
    for s in pt.sentences:
        out.append(print_prop_formula(s, pt.atoms) + ".")
    return "\n".join(out) + "\n"
