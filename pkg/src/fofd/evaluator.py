"""Direct evaluation of the fixpoint semantics on finite structures.

Interpretations are handled internally as sets of true ground atoms: pairs
``(pred, args)`` for first-order theories and integer ids for propositional
ones. The nested operator is implemented literally: one application
re-evaluates every subdefinition fixpoint and then the local rules, and
fixpoints are reached by Kleene iteration from the bottom (least) or top
(greatest) interpretation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Sequence

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
    Kind,
    Not,
    Or,
    Rule,
    Structure,
    Theory,
    Var,
    defined_predicates,
    open_symbols,
)
from .graph import tarjan
from .prop import PropDefinition, PropTheory, holds

GUARD = 24

GroundAtom = tuple[str, tuple[str, ...]]


class EvaluationError(ValueError):
    pass


class GuardExceeded(EvaluationError):
    pass


# --------------------------------------------------------------- formulas

_MISSING = object()


def _compile(f: Formula, domain: Sequence[str], denote: Callable[[str], str]):
    """Turn ``f`` into ``fn(env, true_atoms) -> bool``."""
    if isinstance(f, Atom):
        pred = f.pred
        if all(isinstance(t, Const) for t in f.args):
            key = (pred, tuple(denote(t.name) for t in f.args))
            return lambda env, true: key in true
        parts = [(isinstance(t, Var), t.name if isinstance(t, Var) else denote(t.name)) for t in f.args]
        return lambda env, true: (pred, tuple(env[v] if is_var else v for is_var, v in parts)) in true
    if isinstance(f, Eq):
        l_var, l = isinstance(f.left, Var), f.left.name if isinstance(f.left, Var) else denote(f.left.name)
        r_var, r = isinstance(f.right, Var), f.right.name if isinstance(f.right, Var) else denote(f.right.name)
        return lambda env, true: (env[l] if l_var else l) == (env[r] if r_var else r)
    if isinstance(f, Bool):
        value = f.value
        return lambda env, true: value
    if isinstance(f, Not):
        inner = _compile(f.arg, domain, denote)
        return lambda env, true: not inner(env, true)
    if isinstance(f, And):
        parts = [_compile(a, domain, denote) for a in f.args]
        return lambda env, true: all(p(env, true) for p in parts)
    if isinstance(f, Or):
        parts = [_compile(a, domain, denote) for a in f.args]
        return lambda env, true: any(p(env, true) for p in parts)
    if isinstance(f, (Forall, Exists)):
        body = _compile(f.body, domain, denote)
        var = f.var
        universal = isinstance(f, Forall)

        def quant(env, true):
            saved = env.get(var, _MISSING)
            try:
                for d in domain:
                    env[var] = d
                    if body(env, true) != universal:
                        return not universal
                return universal
            finally:
                if saved is _MISSING:
                    env.pop(var, None)
                else:
                    env[var] = saved

        return quant
    raise TypeError(f)


def _denoter(structure: Structure) -> Callable[[str], str]:
    def denote(name: str) -> str:
        try:
            return structure.denote(name)
        except KeyError as e:
            raise EvaluationError(str(e)) from None

    return denote


def _predicates(f: Formula) -> set[str]:
    from .core import formula_vocabulary

    return set(formula_vocabulary(f).predicate_names())


def eval_formula(phi: Formula, interpretation: Structure, env: Optional[Mapping[str, str]] = None) -> bool:
    """Classical truth of ``phi`` in ``interpretation`` under ``env``."""
    missing = _predicates(phi) - set(interpretation.relations)
    if missing:
        raise EvaluationError(f"uninterpreted symbols {sorted(missing)}")
    fn = _compile(phi, interpretation.domain, _denoter(interpretation))
    return fn(dict(env or {}), interpretation.true_atoms())


# ------------------------------------------------------------ the engine


@dataclass(frozen=True)
class TraceStep:
    """One Kleene iterate: ``state`` interprets the definition node at
    ``path`` and ``context`` its open symbols."""

    path: str
    kind: Kind
    context: frozenset
    state: frozenset

    @property
    def view(self) -> frozenset:
        return self.context | self.state


class _Node:
    kind: Kind
    subs: list["_Node"]
    path: str

    def is_defined(self, atom) -> bool:
        raise NotImplementedError

    def is_local(self, atom) -> bool:
        raise NotImplementedError

    def top(self) -> frozenset:
        raise NotImplementedError

    def image(self, interp) -> frozenset:
        raise NotImplementedError

    def operator(self, opens: frozenset, j: frozenset, trace=None) -> frozenset:
        j_local = frozenset(a for a in j if self.is_local(a))
        context = opens | j_local
        k: set = set()
        for sub in self.subs:
            k |= sub.fixpoint(context, sub.kind, trace)
        return frozenset(k) | self.image(opens | k | j_local)

    def fixpoint(self, interp: frozenset, which: Kind, trace=None) -> frozenset:
        opens = frozenset(a for a in interp if not self.is_defined(a))
        x = frozenset() if which is Kind.LFD else self.top()
        while True:
            if trace is not None:
                trace.append(TraceStep(self.path, which, opens, x))
            y = self.operator(opens, x, trace)
            if y == x:
                return x
            x = y


class _FONode(_Node):
    def __init__(self, fd: FixpointDefinition, domain: Sequence[str], denote, path: str = "D"):
        self.kind = fd.kind
        self.path = path
        self.domain = tuple(domain)
        self.local = fd.local_predicates()
        self.rules = [
            (r.pred, r.params, _compile(r.body, self.domain, denote), list(itertools.product(self.domain, repeat=r.arity)))
            for r in fd.rules
        ]
        self.subs = [_FONode(s, domain, denote, f"{path}.{i}") for i, s in enumerate(fd.subdefs)]
        self.defined = defined_predicates(fd)
        self._top: Optional[frozenset] = None

    def is_defined(self, atom) -> bool:
        return atom[0] in self.defined

    def is_local(self, atom) -> bool:
        return atom[0] in self.local

    def top(self) -> frozenset:
        if self._top is None:
            out = set()
            for node in self._walk():
                for pred, _params, _body, tuples in node.rules:
                    out.update((pred, t) for t in tuples)
            self._top = frozenset(out)
        return self._top

    def _walk(self):
        yield self
        for s in self.subs:
            yield from s._walk()

    def image(self, interp) -> frozenset:
        out = []
        env: dict[str, str] = {}
        for pred, params, body, tuples in self.rules:
            for t in tuples:
                env.update(zip(params, t))
                if body(env, interp):
                    out.append((pred, t))
        return frozenset(out)


class _PropNode(_Node):
    def __init__(self, pd: PropDefinition, path: str = "D"):
        self.kind = pd.kind
        self.path = path
        self.rules = list(pd.rules)
        self.local = pd.local()
        self.defined = pd.defined()
        self.subs = [_PropNode(s, f"{path}.{i}") for i, s in enumerate(pd.subdefs)]

    def is_defined(self, atom) -> bool:
        return atom in self.defined

    def is_local(self, atom) -> bool:
        return atom in self.local

    def top(self) -> frozenset:
        return self.defined

    def image(self, interp) -> frozenset:
        return frozenset(r.head for r in self.rules if r.holds(interp))


# ------------------------------------------------- first-order interface


def _check_same_domain(*structures: Structure) -> tuple[str, ...]:
    dom = structures[0].domain
    for s in structures[1:]:
        if s.domain != dom:
            raise EvaluationError("interpretations have different domains")
    return dom


def _as_structure(template: Structure, atoms: Iterable[GroundAtom], preds: Iterable[str]) -> Structure:
    rels: dict[str, set] = {p: set() for p in preds}
    for p, t in atoms:
        rels.setdefault(p, set()).add(t)
    return Structure(template.domain, {p: frozenset(r) for p, r in rels.items()}, dict(template.constants))


def _node(fd: FixpointDefinition, s: Structure) -> _FONode:
    return _FONode(fd, s.domain, _denoter(s))


def rule_operator(rules: Sequence[Rule], opens: Structure, j: Structure) -> Structure:
    """One application of the rule operator: for each rule, the tuples whose
    body holds in ``opens + j``."""
    _check_same_domain(opens, j)
    defined = {r.pred for r in rules}
    overlap = defined & set(opens.relations)
    if overlap:
        raise EvaluationError(f"open interpretation interprets defined symbols {sorted(overlap)}")
    node = _node(FixpointDefinition(Kind.LFD, tuple(rules)), opens)
    interp = opens.true_atoms() | frozenset(a for a in j.true_atoms() if a[0] in defined)
    return _as_structure(opens, node.image(interp), defined)


def definition_operator(fd: FixpointDefinition, opens: Structure, j: Structure) -> Structure:
    """One application of the nested definition operator."""
    _check_same_domain(opens, j)
    defined = defined_predicates(fd)
    overlap = defined & set(opens.relations)
    if overlap:
        raise EvaluationError(f"open interpretation interprets defined symbols {sorted(overlap)}")
    node = _node(fd, opens)
    jj = frozenset(a for a in j.true_atoms() if a[0] in defined)
    return _as_structure(opens, node.operator(opens.true_atoms(), jj), defined)


def fixpoint(
    fd: FixpointDefinition,
    opens: Structure,
    which: Optional[Kind] = None,
    trace: Optional[list[TraceStep]] = None,
) -> Structure:
    """Least or greatest fixpoint of the definition operator (default: the
    one matching the definition's kind). Relations of ``opens`` naming
    defined symbols are ignored."""
    node = _node(fd, opens)
    result = node.fixpoint(opens.true_atoms(), which or fd.kind, trace)
    return _as_structure(opens, result, defined_predicates(fd))


def _require_total(theory: Theory, interp: Structure) -> None:
    missing = theory.vocabulary.predicate_names() - set(interp.relations)
    if missing:
        raise EvaluationError(f"interpretation is partial; missing {sorted(missing)}")


def _satisfies(theory: Theory, s: Structure, nodes: Sequence[_FONode], sentences, true: frozenset) -> bool:
    env: dict[str, str] = {}
    for fn in sentences:
        if not fn(env, true):
            return False
    for node in nodes:
        mine = frozenset(a for a in true if a[0] in node.defined)
        if node.fixpoint(true, node.kind) != mine:
            return False
    return True


def check_model(theory: Theory, interp: Structure) -> bool:
    """True iff ``interp`` satisfies every sentence and every definition."""
    _require_total(theory, interp)
    denote = _denoter(interp)
    nodes = [_FONode(d, interp.domain, denote) for d in theory.definitions]
    sentences = [_compile(s, interp.domain, denote) for s in theory.sentences]
    return _satisfies(theory, interp, nodes, sentences, interp.true_atoms())


def _definition_order(defined: list[frozenset], opens: list[frozenset]):
    """Group top-level definitions by mutual dependency; return (order of
    singleton acyclic groups, indices in cyclic groups)."""
    n = len(defined)

    def succ(i):
        return [j for j in range(n) if j != i and opens[i] & defined[j]]

    order: list[int] = []
    cyclic: set[int] = set()
    for comp in tarjan(range(n), succ):
        if len(comp) > 1:
            cyclic.update(comp)
        else:
            order.append(comp[0])
    return order, cyclic


def _plan(theory: Theory, frame_preds: set[str]):
    """Decide which definitions derive their defined predicates and which
    predicates must be guessed."""
    defs = theory.definitions
    defined = [defined_predicates(d) for d in defs]
    opens = [open_symbols(d) for d in defs]
    order, cyclic = _definition_order(defined, opens)
    derive: list[int] = []
    derived: set[str] = set()
    guessed_defined: set[str] = set()
    for i in sorted(cyclic):
        guessed_defined |= defined[i] - frame_preds
    for i in order:
        mine = defined[i] - frame_preds - derived - guessed_defined
        # a frame that fixes some defined relation leaves only checking
        if mine == defined[i] and mine:
            derive.append(i)
            derived |= mine
        else:
            guessed_defined |= mine
    return derive, derived, guessed_defined


def enumerate_models(theory: Theory, frame: Structure, guard: int = GUARD) -> list[Structure]:
    """All total interpretations extending ``frame`` that satisfy ``theory``.

    Predicates not interpreted by the frame and not defined anywhere are
    enumerated over all truth assignments; predicates defined by a
    definition that does not depend cyclically on another one are computed by
    their fixpoint, since the semantics leaves them no freedom. Every
    candidate is then verified with the full model check. The guard bounds
    the number of enumerated ground atoms.
    """
    vocab = theory.vocabulary
    frame_preds = set(frame.relations)
    derive, derived, guessed_defined = _plan(theory, frame_preds)
    all_defined = set().union(*(defined_predicates(d) for d in theory.definitions)) if theory.definitions else set()

    guessed: list[GroundAtom] = []
    for name, arity in sorted(vocab.predicates):
        if name in frame_preds or name in derived:
            continue
        elems = frame.domain if name in all_defined else frame.elements
        guessed.extend((name, t) for t in itertools.product(elems, repeat=arity))
    if len(guessed) > guard:
        raise GuardExceeded(f"{len(guessed)} ground atoms to enumerate exceeds the guard of {guard}")

    denote = _denoter(frame)
    nodes = [_FONode(d, frame.domain, denote) for d in theory.definitions]
    sentences = [_compile(s, frame.domain, denote) for s in theory.sentences]
    base = frame.true_atoms()
    preds = sorted(vocab.predicate_names() | frame_preds)
    models = []
    for bits in itertools.product((False, True), repeat=len(guessed)):
        true = base | frozenset(a for a, b in zip(guessed, bits) if b)
        for i in derive:
            true = true | nodes[i].fixpoint(true, nodes[i].kind)
        if _satisfies(theory, frame, nodes, sentences, true):
            models.append(true)
    models.sort(key=lambda m: sorted(m))
    return [_as_structure(frame, m, preds) for m in models]


def expand(theory: Theory, opens: Structure) -> Structure:
    """Compute the defined relations from an interpretation of everything
    else. Raises if definitions depend on each other cyclically."""
    derive, derived, guessed_defined = _plan(theory, set(opens.relations))
    if guessed_defined:
        raise EvaluationError(
            f"defined predicates {sorted(guessed_defined)} are not determined by the open symbols"
        )
    denote = _denoter(opens)
    true = opens.true_atoms()
    for i in derive:
        node = _FONode(theory.definitions[i], opens.domain, denote)
        true = true | node.fixpoint(true, node.kind)
    preds = sorted(theory.vocabulary.predicate_names() | set(opens.relations))
    return _as_structure(opens, true, preds)


def leq(a: Structure, b: Structure) -> bool:
    """Truth order: every relation of ``a`` is included in that of ``b``."""
    return all(rel <= b.relations.get(p, frozenset()) for p, rel in a.relations.items())


# ---------------------------------------------------- propositional interface


def prop_fixpoint(pd: PropDefinition, true: Iterable[int], which: Optional[Kind] = None, trace=None) -> frozenset[int]:
    node = _PropNode(pd)
    return node.fixpoint(frozenset(true), which or pd.kind, trace)


def prop_definition_operator(pd: PropDefinition, opens: Iterable[int], j: Iterable[int]) -> frozenset[int]:
    node = _PropNode(pd)
    defined = pd.defined()
    return node.operator(frozenset(a for a in opens if a not in defined), frozenset(a for a in j if a in defined))


def _prop_satisfies(pt: PropTheory, nodes: Sequence[_PropNode], true: frozenset[int]) -> bool:
    if not all(holds(s, true) for s in pt.sentences):
        return False
    for node in nodes:
        mine = frozenset(a for a in true if a in node.defined)
        if node.fixpoint(true, node.kind) != mine:
            return False
    return True


def prop_check_model(pt: PropTheory, true: Iterable[int]) -> bool:
    nodes = [_PropNode(d) for d in pt.definitions]
    return _prop_satisfies(pt, nodes, frozenset(true))


def prop_enumerate_models(
    pt: PropTheory,
    atoms: Optional[Iterable[int]] = None,
    fixed: Optional[Mapping[int, bool]] = None,
    guard: int = GUARD,
) -> list[frozenset[int]]:
    """All sets of true atoms (over ``atoms``, default the whole table) that
    are models of ``pt`` and agree with ``fixed``."""
    universe = sorted(atoms) if atoms is not None else list(pt.atoms.ids())
    fixed = dict(fixed or {})
    defs = pt.definitions
    defined = [d.defined() for d in defs]
    opens = [d.opens() for d in defs]
    order, cyclic = _definition_order(defined, opens)
    fixed_set = set(fixed)
    derive: list[int] = []
    derived: set[int] = set()
    for i in order:
        mine = defined[i] - fixed_set
        if mine == defined[i] and mine and not (mine & derived) and not any(mine & defined[c] for c in cyclic):
            derive.append(i)
            derived |= mine
    guessed = [a for a in universe if a not in fixed_set and a not in derived]
    if len(guessed) > guard:
        raise GuardExceeded(f"{len(guessed)} atoms to enumerate exceeds the guard of {guard}")
    nodes = [_PropNode(d) for d in defs]
    base = frozenset(a for a, v in fixed.items() if v)
    models = []
    for bits in itertools.product((False, True), repeat=len(guessed)):
        true = base | frozenset(a for a, b in zip(guessed, bits) if b)
        for i in derive:
            true = true | nodes[i].fixpoint(true, nodes[i].kind)
        if _prop_satisfies(pt, nodes, true):
            models.append(true)
    models.sort(key=sorted)
    return models
