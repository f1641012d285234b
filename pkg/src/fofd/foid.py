"""Generalized inductive definitions (rules without positivity restriction)
and their translation into an alternating least/greatest fixpoint definition.

Each defined predicate ``P`` gets a fresh companion ``P_neg`` meant to hold
the complement of ``P``. Negative occurrences of defined predicates are
replaced by positive occurrences of their companions, the rules for ``P``
form a least fixpoint definition and the rules for the companions, built
from the negated bodies, a greatest fixpoint definition nested inside it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .core import (
    And,
    Atom,
    Exists,
    FixpointDefinition,
    Forall,
    Formula,
    InductiveDefinition,
    Kind,
    Not,
    Or,
    Rule,
    Structure,
    Theory,
    WellFormednessError,
    group_rules,
    nnf,
    symbols,
    validate,
)
from .evaluator import enumerate_models

NEG_SUFFIX = "_neg"


def companion_names(defined: Iterable[str], taken: Iterable[str]) -> dict[str, str]:
    """Fresh ``P_neg`` names that clash with nothing in ``taken``."""
    used = set(taken)
    out = {}
    for p in sorted(defined):
        name = p + NEG_SUFFIX
        while name in used:
            name += "_"
        used.add(name)
        out[p] = name
    return out


def _bar(f: Formula, neg: dict[str, str], positive: bool = True) -> Formula:
    """Replace negative occurrences ``P(t)`` of defined predicates by
    ``~P_neg(t)`` and cancel the double negations this creates."""
    if isinstance(f, Atom):
        if not positive and f.pred in neg:
            return Not(Atom(neg[f.pred], f.args))
        return f
    if isinstance(f, Not):
        inner = _bar(f.arg, neg, not positive)
        return inner.arg if isinstance(inner, Not) else Not(inner)
    if isinstance(f, And):
        return And(tuple(_bar(a, neg, positive) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(_bar(a, neg, positive) for a in f.args))
    if isinstance(f, Forall):
        return Forall(f.var, _bar(f.body, neg, positive))
    if isinstance(f, Exists):
        return Exists(f.var, _bar(f.body, neg, positive))
    return f


@dataclass(frozen=True)
class Transformed:
    definition: FixpointDefinition
    companions: dict[str, str]  # P -> P_neg

    @property
    def vocabulary_extension(self) -> frozenset[str]:
        return frozenset(self.companions.values())


def transform_gid(gid: InductiveDefinition, taken: Iterable[str] = ()) -> Transformed:
    """``LFD{ P <- bar(phi_P) ... GFD{ P_neg <- bar(nnf(~phi_P)) ... } }``."""
    rules = group_rules(gid.rules)
    defined = {r.pred for r in rules}
    names: set[str] = set(taken) | defined
    for r in rules:
        names |= symbols(r.body)
    neg = companion_names(defined, names)
    pos_rules = tuple(Rule(r.pred, r.params, _bar(r.body, neg), r.loc) for r in rules)
    neg_rules = tuple(
        Rule(neg[r.pred], r.params, _bar(nnf(r.body, negate=True), neg), r.loc) for r in rules
    )
    fd = FixpointDefinition(Kind.LFD, pos_rules, (FixpointDefinition(Kind.GFD, neg_rules),), gid.loc)
    violations = validate(fd)
    if violations:
        raise WellFormednessError(violations)
    return Transformed(fd, neg)


def transform_theory(gids: Iterable[InductiveDefinition], theory: Theory) -> tuple[Theory, dict[str, str]]:
    """Append the translation of every GID to ``theory``."""
    gids = list(gids)
    taken = set(theory.vocabulary.predicate_names()) | set(theory.vocabulary.constants)
    for g in gids:
        for r in g.rules:
            taken.add(r.pred)
    defs = list(theory.definitions)
    companions: dict[str, str] = {}
    for g in gids:
        t = transform_gid(g, taken)
        taken |= t.vocabulary_extension
        companions.update(t.companions)
        defs.append(t.definition)
    return Theory(tuple(defs), theory.sentences, theory.declared), companions


# ------------------------------------------------------------ correspondence


@dataclass
class CorrespondenceReport:
    models: list[Structure]
    distinct: bool
    complement: bool
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.distinct and self.complement


def check_correspondence(
    transformed: Theory,
    companions: dict[str, str],
    frame: Structure,
    guard: Optional[int] = None,
) -> CorrespondenceReport:
    """Enumerate the models of the translated theory over ``frame`` and check
    that they stay distinct when the companions are forgotten and that each
    companion is the complement of its predicate."""
    kwargs = {} if guard is None else {"guard": guard}
    models = enumerate_models(transformed, frame, **kwargs)
    arity = dict(transformed.vocabulary.predicates)
    failures: list[str] = []
    seen = set()
    distinct = True
    for i, m in enumerate(models):
        key = frozenset(a for a in m.true_atoms() if a[0] not in companions.values())
        if key in seen:
            distinct = False
            failures.append(f"model {i} repeats an earlier one on the original symbols")
        seen.add(key)
        for p, q in sorted(companions.items()):
            full = frozenset(itertools.product(m.domain, repeat=arity[p]))
            expected = full - m.relations.get(p, frozenset())
            if m.relations.get(q, frozenset()) != expected:
                failures.append(f"model {i}: {q} is not the complement of {p}")
    complement = not any("complement" in f for f in failures)
    return CorrespondenceReport(models, distinct, complement, failures)
