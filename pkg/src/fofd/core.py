"""Abstract syntax for FO(FD): terms, formulas, rules, nested fixpoint
definitions, theories and finite structures, plus the well-formedness checks
for fixpoint definitions.

All values are immutable. Source locations are carried on rules and
definitions but excluded from equality so that structurally equal ASTs compare
equal regardless of where they came from.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional, Union


class Kind(enum.Enum):
    LFD = "LFD"
    GFD = "GFD"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Loc:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


# ---------------------------------------------------------------- terms


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


Term = Union[Var, Const]


# ------------------------------------------------------------- formulas


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple[Term, ...] = ()


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True)
class Bool:
    value: bool


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    args: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    args: tuple["Formula", ...]


@dataclass(frozen=True)
class Forall:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Formula"


Formula = Union[Atom, Eq, Bool, Not, And, Or, Forall, Exists]

TRUE = Bool(True)
FALSE = Bool(False)


def implies(a: Formula, b: Formula) -> Formula:
    """Material implication, expanded to ``~a | b``."""
    return Or((Not(a), b))


def iff(a: Formula, b: Formula) -> Formula:
    return Or((And((a, b)), And((Not(a), Not(b)))))


def conj(args: Iterable[Formula]) -> Formula:
    args = tuple(args)
    if len(args) == 1:
        return args[0]
    return And(args)


def disj(args: Iterable[Formula]) -> Formula:
    args = tuple(args)
    if len(args) == 1:
        return args[0]
    return Or(args)


# ------------------------------------------------------ rules/definitions


@dataclass(frozen=True)
class Rule:
    """``!params: pred(params) <- body``."""

    pred: str
    params: tuple[str, ...]
    body: Formula
    loc: Optional[Loc] = field(default=None, compare=False, repr=False)

    @property
    def arity(self) -> int:
        return len(self.params)

    @property
    def head(self) -> Atom:
        return Atom(self.pred, tuple(Var(p) for p in self.params))


@dataclass(frozen=True)
class FixpointDefinition:
    kind: Kind
    rules: tuple[Rule, ...] = ()
    subdefs: tuple["FixpointDefinition", ...] = ()
    loc: Optional[Loc] = field(default=None, compare=False, repr=False)

    def local_predicates(self) -> frozenset[str]:
        return frozenset(r.pred for r in self.rules)

    def walk(self) -> Iterator["FixpointDefinition"]:
        """Pre-order traversal of this definition and its subdefinitions."""
        yield self
        for sub in self.subdefs:
            yield from sub.walk()

    def all_rules(self) -> Iterator[Rule]:
        for node in self.walk():
            yield from node.rules


@dataclass(frozen=True)
class InductiveDefinition:
    """A generalized inductive definition: rules without a positivity
    restriction on the defined predicates."""

    rules: tuple[Rule, ...] = ()
    loc: Optional[Loc] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Vocabulary:
    predicates: frozenset[tuple[str, int]] = frozenset()
    constants: frozenset[str] = frozenset()

    def arity(self, name: str) -> int:
        for n, a in self.predicates:
            if n == name:
                return a
        raise KeyError(name)

    def predicate_names(self) -> frozenset[str]:
        return frozenset(n for n, _ in self.predicates)

    def merge(self, other: "Vocabulary") -> "Vocabulary":
        merged = Vocabulary(self.predicates | other.predicates, self.constants | other.constants)
        merged.check()
        return merged

    def check(self) -> None:
        seen: dict[str, int] = {}
        for name, arity in self.predicates:
            if arity < 0:
                raise VocabularyError(f"negative arity for {name}")
            if name in seen and seen[name] != arity:
                raise VocabularyError(
                    f"predicate {name} used with arities {seen[name]} and {arity}"
                )
            seen[name] = arity
        clash = set(seen) & self.constants
        if clash:
            raise VocabularyError(f"symbols used both as predicate and constant: {sorted(clash)}")


class VocabularyError(ValueError):
    pass


@dataclass(frozen=True)
class Theory:
    definitions: tuple[FixpointDefinition, ...] = ()
    sentences: tuple[Formula, ...] = ()
    declared: Vocabulary = Vocabulary()

    @property
    def vocabulary(self) -> Vocabulary:
        used = Vocabulary()
        for f in self.sentences:
            used = used.merge(formula_vocabulary(f))
        for d in self.definitions:
            used = used.merge(definition_vocabulary(d))
        return self.declared.merge(used)


# ------------------------------------------------------------ structures


@dataclass(frozen=True)
class Structure:
    """A finite, possibly partial, interpretation.

    ``domain`` is the range of the quantifiers. ``constants`` maps constant
    symbols to elements; an element named by a constant but absent from the
    domain is a rigid element outside the quantification range (used for
    labels). Relations are sets of element tuples; a predicate missing from
    ``relations`` is uninterpreted.
    """

    domain: tuple[str, ...]
    relations: Mapping[str, frozenset[tuple[str, ...]]] = field(default_factory=dict)
    constants: Mapping[str, str] = field(default_factory=dict)

    @property
    def elements(self) -> tuple[str, ...]:
        extra = []
        dom = set(self.domain)
        for e in self.constants.values():
            if e not in dom and e not in extra:
                extra.append(e)
        return self.domain + tuple(extra)

    def denote(self, name: str) -> str:
        """Element denoted by constant ``name``; domain element names denote
        themselves."""
        if name in self.constants:
            return self.constants[name]
        if name in self.domain:
            return name
        raise KeyError(f"uninterpreted constant {name!r}")

    def interprets(self, pred: str) -> bool:
        return pred in self.relations

    def with_relations(self, relations: Mapping[str, Iterable[tuple[str, ...]]]) -> "Structure":
        merged = dict(self.relations)
        for name, tuples in relations.items():
            merged[name] = frozenset(tuple(t) for t in tuples)
        return Structure(self.domain, merged, dict(self.constants))

    def restrict(self, preds: Iterable[str]) -> "Structure":
        keep = set(preds)
        return Structure(
            self.domain,
            {p: r for p, r in self.relations.items() if p in keep},
            dict(self.constants),
        )

    def true_atoms(self) -> frozenset[tuple[str, tuple[str, ...]]]:
        return frozenset((p, t) for p, rel in self.relations.items() for t in rel)

    def check(self, vocabulary: Optional[Vocabulary] = None) -> None:
        elems = set(self.elements)
        for name, rel in self.relations.items():
            arities = {len(t) for t in rel}
            if len(arities) > 1:
                raise StructureError(f"relation {name} mixes arities {sorted(arities)}")
            if vocabulary is not None and arities:
                try:
                    expected = vocabulary.arity(name)
                except KeyError:
                    expected = None
                if expected is not None and arities != {expected}:
                    raise StructureError(
                        f"relation {name} has arity {arities.pop()}, expected {expected}"
                    )
            for t in rel:
                for e in t:
                    if e not in elems:
                        raise StructureError(f"tuple {t} of {name} leaves the domain")


class StructureError(ValueError):
    pass


# ------------------------------------------------------- symbol analysis


def formula_vocabulary(f: Formula) -> Vocabulary:
    preds: set[tuple[str, int]] = set()
    consts: set[str] = set()
    for node in subformulas(f):
        if isinstance(node, Atom):
            preds.add((node.pred, len(node.args)))
            consts.update(t.name for t in node.args if isinstance(t, Const))
        elif isinstance(node, Eq):
            consts.update(t.name for t in (node.left, node.right) if isinstance(t, Const))
    v = Vocabulary(frozenset(preds), frozenset(consts))
    v.check()
    return v


def definition_vocabulary(d: FixpointDefinition) -> Vocabulary:
    v = Vocabulary()
    for r in d.all_rules():
        v = v.merge(Vocabulary(frozenset({(r.pred, r.arity)})))
        v = v.merge(formula_vocabulary(r.body))
    return v


def subformulas(f: Formula) -> Iterator[Formula]:
    stack = [f]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, Not):
            stack.append(node.arg)
        elif isinstance(node, (And, Or)):
            stack.extend(reversed(node.args))
        elif isinstance(node, (Forall, Exists)):
            stack.append(node.body)


def symbols(f: Formula) -> set[str]:
    """Predicate and constant names occurring in ``f`` (equality excluded)."""
    v = formula_vocabulary(f)
    return set(v.predicate_names()) | set(v.constants)


def free_variables(f: Formula) -> set[str]:
    if isinstance(f, Atom):
        return {t.name for t in f.args if isinstance(t, Var)}
    if isinstance(f, Eq):
        return {t.name for t in (f.left, f.right) if isinstance(t, Var)}
    if isinstance(f, Bool):
        return set()
    if isinstance(f, Not):
        return free_variables(f.arg)
    if isinstance(f, (And, Or)):
        out: set[str] = set()
        for a in f.args:
            out |= free_variables(a)
        return out
    if isinstance(f, (Forall, Exists)):
        return free_variables(f.body) - {f.var}
    raise TypeError(f)


def occurrences(f: Formula, positive: bool = True) -> Iterator[tuple[Atom, bool]]:
    """Yield ``(atom, polarity)`` for every atom occurrence; polarity is True
    under an even number of negations."""
    if isinstance(f, Atom):
        yield f, positive
    elif isinstance(f, Not):
        yield from occurrences(f.arg, not positive)
    elif isinstance(f, (And, Or)):
        for a in f.args:
            yield from occurrences(a, positive)
    elif isinstance(f, (Forall, Exists)):
        yield from occurrences(f.body, positive)


def defined_predicates(fd: FixpointDefinition) -> frozenset[str]:
    return frozenset(r.pred for r in fd.all_rules())


def open_symbols(fd: FixpointDefinition) -> frozenset[str]:
    occurring: set[str] = set()
    for r in fd.all_rules():
        occurring.add(r.pred)
        occurring |= symbols(r.body)
    return frozenset(occurring - defined_predicates(fd))


# -------------------------------------------------------- rule merging


class RuleError(ValueError):
    pass


def substitute(f: Formula, mapping: Mapping[str, Term]) -> Formula:
    """Replace free variables according to ``mapping`` (capture-avoiding only
    in the sense that bound variables shadow the mapping)."""
    if not mapping:
        return f

    def term(t: Term) -> Term:
        if isinstance(t, Var) and t.name in mapping:
            return mapping[t.name]
        return t

    if isinstance(f, Atom):
        return Atom(f.pred, tuple(term(t) for t in f.args))
    if isinstance(f, Eq):
        return Eq(term(f.left), term(f.right))
    if isinstance(f, Bool):
        return f
    if isinstance(f, Not):
        return Not(substitute(f.arg, mapping))
    if isinstance(f, And):
        return And(tuple(substitute(a, mapping) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(substitute(a, mapping) for a in f.args))
    if isinstance(f, (Forall, Exists)):
        inner = {k: v for k, v in mapping.items() if k != f.var}
        return type(f)(f.var, substitute(f.body, inner))
    raise TypeError(f)


def merge_rules(rules: Iterable[Rule]) -> Rule:
    """Combine rules for one predicate into a single rule whose body is the
    disjunction of the (renamed) bodies."""
    rules = list(rules)
    if not rules:
        raise RuleError("no rules to merge")
    first = rules[0]
    if len(rules) == 1:
        return first
    bodies = []
    for r in rules:
        if r.pred != first.pred:
            raise RuleError(f"cannot merge rules for {first.pred} and {r.pred}")
        if r.arity != first.arity:
            raise RuleError(
                f"rules for {first.pred} have head arities {first.arity} and {r.arity}"
            )
        renaming = {p: Var(q) for p, q in zip(r.params, first.params) if p != q}
        bodies.append(substitute(r.body, renaming))
    return Rule(first.pred, first.params, Or(tuple(bodies)), first.loc)


def group_rules(rules: Iterable[Rule]) -> tuple[Rule, ...]:
    """Merge rules sharing a head predicate, keeping first-occurrence order."""
    order: list[str] = []
    by_pred: dict[str, list[Rule]] = {}
    for r in rules:
        if r.pred not in by_pred:
            order.append(r.pred)
            by_pred[r.pred] = []
        by_pred[r.pred].append(r)
    return tuple(merge_rules(by_pred[p]) for p in order)


# ---------------------------------------------------------- validation


@dataclass(frozen=True)
class Violation:
    condition: str
    predicate: str
    location: str
    message: str

    def __str__(self) -> str:
        return f"{self.location}: condition {self.condition}: {self.message}"


class WellFormednessError(ValueError):
    def __init__(self, violations: list[Violation]):
        self.violations = violations
        super().__init__("\n".join(str(v) for v in violations))


def _where(path: str, rule: Optional[Rule] = None) -> str:
    if rule is not None and rule.loc is not None:
        return f"{rule.loc} ({path})"
    return path


def validate(fd: FixpointDefinition, path: str = "D") -> list[Violation]:
    """Check the well-formedness conditions of a fixpoint definition.

    Conditions 1 and 2 (rules and subdefinitions of the right shape) hold by
    construction. Reported here:

    * ``rule``: head parameters are distinct, body variables bound by the head;
    * ``3``: defined symbols occur only positively in rule bodies;
    * ``4``: every defined predicate has exactly one local definition;
    * ``5``: open symbols of a subdefinition are open in the parent or locally
      defined there.
    """
    out: list[Violation] = []
    _validate_rules(fd, path, out)
    defined = defined_predicates(fd)
    for node_path, node in _paths(fd, path):
        for r in node.rules:
            for atom, positive in occurrences(r.body):
                if atom.pred in defined and not positive:
                    out.append(
                        Violation(
                            "3",
                            atom.pred,
                            _where(node_path, r),
                            f"defined symbol {atom.pred} occurs negatively in the rule for {r.pred}",
                        )
                    )
    for node_path, node in _paths(fd, path):
        _check_partition(node, node_path, out)
        _check_subdef_opens(node, node_path, out)
    return out


def _paths(fd: FixpointDefinition, path: str) -> Iterator[tuple[str, FixpointDefinition]]:
    yield path, fd
    for i, sub in enumerate(fd.subdefs):
        yield from _paths(sub, f"{path}.{i}")


def _validate_rules(fd: FixpointDefinition, path: str, out: list[Violation]) -> None:
    for node_path, node in _paths(fd, path):
        for r in node.rules:
            if len(set(r.params)) != len(r.params):
                out.append(
                    Violation("rule", r.pred, _where(node_path, r), "head variables must be distinct")
                )
            free = free_variables(r.body) - set(r.params)
            if free:
                out.append(
                    Violation(
                        "rule",
                        r.pred,
                        _where(node_path, r),
                        f"body variables {sorted(free)} not bound by the head of {r.pred}",
                    )
                )


def _check_partition(node: FixpointDefinition, path: str, out: list[Violation]) -> None:
    owners: dict[str, list[str]] = {}
    for r in node.rules:
        owners.setdefault(r.pred, []).append(f"{path} (local)")
    for i, sub in enumerate(node.subdefs):
        for p in defined_predicates(sub):
            owners.setdefault(p, []).append(f"{path}.{i}")
    for pred, places in owners.items():
        if len(places) > 1:
            out.append(
                Violation(
                    "4",
                    pred,
                    path,
                    f"{pred} has {len(places)} local definitions: {', '.join(places)}",
                )
            )


def _check_subdef_opens(node: FixpointDefinition, path: str, out: list[Violation]) -> None:
    allowed = open_symbols(node) | node.local_predicates()
    for i, sub in enumerate(node.subdefs):
        for sym in sorted(open_symbols(sub) - allowed):
            out.append(
                Violation(
                    "5",
                    sym,
                    f"{path}.{i}",
                    f"{sym} is defined in a sibling subdefinition but occurs in {path}.{i}",
                )
            )


def validate_theory(theory: Theory) -> list[Violation]:
    out: list[Violation] = []
    for i, d in enumerate(theory.definitions):
        out.extend(validate(d, f"D{i}"))
    for i, s in enumerate(theory.sentences):
        free = free_variables(s)
        if free:
            out.append(Violation("sentence", "", f"S{i}", f"free variables {sorted(free)}"))
    return out


# ------------------------------------------------------- normal forms


def nnf(f: Formula, negate: bool = False) -> Formula:
    """Negation normal form with double negations removed."""
    if isinstance(f, Not):
        return nnf(f.arg, not negate)
    if isinstance(f, Bool):
        return Bool(f.value != negate)
    if isinstance(f, (Atom, Eq)):
        return Not(f) if negate else f
    if isinstance(f, And):
        args = tuple(nnf(a, negate) for a in f.args)
        return Or(args) if negate else And(args)
    if isinstance(f, Or):
        args = tuple(nnf(a, negate) for a in f.args)
        return And(args) if negate else Or(args)
    if isinstance(f, Forall):
        return Exists(f.var, nnf(f.body, True)) if negate else Forall(f.var, nnf(f.body))
    if isinstance(f, Exists):
        return Forall(f.var, nnf(f.body, True)) if negate else Exists(f.var, nnf(f.body))
    raise TypeError(f)
