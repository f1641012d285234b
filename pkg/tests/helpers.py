"""Random instance generators and independent oracles shared by the tests."""

from __future__ import annotations

import itertools
import random
from typing import Optional

import networkx as nx

from fofd.core import (
    And,
    Atom,
    Bool,
    Const,
    Eq,
    Exists,
    FixpointDefinition,
    Forall,
    InductiveDefinition,
    Kind,
    Not,
    Or,
    Rule,
    Structure,
    Theory,
    Var,
)

DOMAIN_NAMES = ("d0", "d1", "d2")

# criterion number -> (passed, detail), filled by the acceptance tests
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


# --------------------------------------------------------- FO(FD) theories


class FOGen:
    """Random well-formed FO(FD) theories over a small vocabulary.

    Defined predicates only ever occur positively inside the definition tree
    that defines them; everything else may occur with either sign.
    """

    def __init__(self, rng: random.Random, domain_size: int, max_atoms: int = 24):
        self.rng = rng
        self.domain = DOMAIN_NAMES[:domain_size]
        preds: list[tuple[str, int]] = []
        budget = max_atoms
        for i in range(rng.randint(2, 6)):
            arity = rng.choice([0, 1, 1, 2])
            size = domain_size**arity
            if size > budget:
                arity, size = 0, 1
            if size > budget:
                break
            preds.append((f"P{i}", arity))
            budget -= size
        self.preds = preds

    def formula(self, scope: list[str], allowed_pos: list, allowed_neg: list, depth: int, positive: bool = True):
        rng = self.rng
        pool = allowed_pos if positive else allowed_neg
        if depth <= 0 or rng.random() < 0.3:
            choice = rng.random()
            if choice < 0.15 and (scope or self.domain):
                return Eq(self.term(scope), self.term(scope))
            if choice < 0.2:
                return Bool(rng.random() < 0.5)
            if not pool:
                return Bool(rng.random() < 0.5)
            name, arity = rng.choice(pool)
            return Atom(name, tuple(self.term(scope) for _ in range(arity)))
        op = rng.choice(["and", "or", "not", "forall", "exists"])
        if op == "not":
            return Not(self.formula(scope, allowed_pos, allowed_neg, depth - 1, not positive))
        if op in ("and", "or"):
            args = tuple(self.formula(scope, allowed_pos, allowed_neg, depth - 1, positive) for _ in range(rng.randint(2, 3)))
            return And(args) if op == "and" else Or(args)
        var = f"v{len(scope)}"
        body = self.formula(scope + [var], allowed_pos, allowed_neg, depth - 1, positive)
        return Forall(var, body) if op == "forall" else Exists(var, body)

    def term(self, scope: list[str]):
        if scope and self.rng.random() < 0.8:
            return Var(self.rng.choice(scope))
        return Const(self.rng.choice(self.domain))

    def definition(self, defined: list[tuple[str, int]], opens: list[tuple[str, int]]) -> FixpointDefinition:
        rng = self.rng
        nodes: list[tuple[Optional[int], int]] = [(None, 0)]
        for _ in range(rng.randint(0, 2)):
            parent = rng.randrange(len(nodes))
            if nodes[parent][1] < 2:
                nodes.append((parent, nodes[parent][1] + 1))
        assign: dict[int, list] = {i: [] for i in range(len(nodes))}
        for p in defined:
            assign[rng.randrange(len(nodes))].append(p)

        def subtree(i):
            out = list(assign[i])
            for j, (par, _) in enumerate(nodes):
                if par == i:
                    out += subtree(j)
            return out

        def ancestors(i):
            out = []
            while i is not None:
                out += assign[i]
                i = nodes[i][0]
            return out

        def build(i):
            visible = list(dict.fromkeys(subtree(i) + ancestors(i)))
            rules = []
            for name, arity in assign[i]:
                params = [f"x{k}" for k in range(arity)]
                body = self.formula(params, visible + opens, opens, rng.randint(0, 3))
                rules.append(Rule(name, tuple(params), body))
            subs = tuple(build(j) for j, (par, _) in enumerate(nodes) if par == i)
            return FixpointDefinition(rng.choice([Kind.LFD, Kind.GFD]), tuple(rules), subs)

        return build(0)

    def theory(self) -> Theory:
        rng = self.rng
        preds = list(self.preds)
        rng.shuffle(preds)
        defs = []
        n_defs = rng.choice([1, 1, 2])
        k = rng.randint(1, max(1, len(preds) - 1))
        defined_sets = [preds[:k]] if n_defs == 1 else [preds[: k // 2 + 1], preds[k // 2 + 1 : k + 1]]
        for dset in defined_sets:
            if not dset:
                continue
            opens = [p for p in preds if p not in dset]
            defs.append(self.definition(dset, opens))
        sentences = tuple(self.formula([], preds, preds, rng.randint(0, 3)) for _ in range(rng.randint(0, 2)))
        return Theory(tuple(defs), sentences)

    def frame(self, theory: Theory) -> Structure:
        """The domain, sometimes with a random interpretation for one
        predicate."""
        s = Structure(self.domain)
        names = sorted(theory.vocabulary.predicates)
        if names and self.rng.random() < 0.3:
            name, arity = self.rng.choice(names)
            tuples = [t for t in itertools.product(self.domain, repeat=arity) if self.rng.random() < 0.5]
            s = s.with_relations({name: tuples})
        return s


# ------------------------------------------------ propositional DefNF theories


def random_defnf_theory(rng: random.Random, n_atoms: int = 8) -> Theory:
    """Propositional theory (nullary predicates) whose definition is already
    in DefNF: flat conjunctive or disjunctive bodies, negation only on open
    atoms, nesting depth at most two below the top node."""
    names = [f"p{i}" for i in range(n_atoms)]
    n_open = rng.randint(1, 3)
    opens, defined = names[:n_open], names[n_open:]
    nodes: list[tuple[Optional[int], int]] = [(None, 0)]
    for _ in range(rng.randint(0, 3)):
        parent = rng.randrange(len(nodes))
        if nodes[parent][1] < 2:
            nodes.append((parent, nodes[parent][1] + 1))
    assign: dict[int, list[str]] = {i: [] for i in range(len(nodes))}
    for d in defined:
        assign[rng.randrange(len(nodes))].append(d)

    def subtree(i):
        out = list(assign[i])
        for j, (par, _) in enumerate(nodes):
            if par == i:
                out += subtree(j)
        return out

    def ancestors(i):
        out = []
        while i is not None:
            out += assign[i]
            i = nodes[i][0]
        return out

    def build(i):
        visible = sorted(set(subtree(i)) | set(ancestors(i)))
        rules = []
        for h in assign[i]:
            lits = []
            for _ in range(rng.randint(0, 3)):
                if rng.random() < 0.3:
                    lits.append(Not(Atom(rng.choice(opens))))
                else:
                    lits.append(Atom(rng.choice(visible + opens)))
            if not lits:
                body = Bool(rng.random() < 0.5)
            elif len(lits) == 1:
                body = lits[0]
            else:
                body = (And if rng.random() < 0.5 else Or)(tuple(lits))
            rules.append(Rule(h, (), body))
        subs = tuple(build(j) for j, (par, _) in enumerate(nodes) if par == i)
        return FixpointDefinition(rng.choice([Kind.LFD, Kind.GFD]), tuple(rules), subs)

    sentences = []
    for _ in range(rng.randint(0, 2)):
        a = Atom(rng.choice(names))
        sentences.append(a if rng.random() < 0.5 else Not(a))
    return Theory((build(0),), tuple(sentences))


# ------------------------------------------------------------ GIDs and WFS


def random_gid(rng: random.Random, max_atoms: int = 6) -> InductiveDefinition:
    """Propositional GID: defined atoms with arbitrary bodies, including
    negated defined atoms."""
    n = rng.randint(1, max_atoms)
    names = [f"g{i}" for i in range(n)]
    n_def = rng.randint(1, n)
    defined = names[:n_def]

    def body(depth):
        if depth == 0 or rng.random() < 0.35:
            if rng.random() < 0.1:
                return Bool(rng.random() < 0.5)
            return Atom(rng.choice(names))
        op = rng.choice(["and", "or", "not"])
        if op == "not":
            return Not(body(depth - 1))
        args = tuple(body(depth - 1) for _ in range(rng.randint(2, 3)))
        return And(args) if op == "and" else Or(args)

    return InductiveDefinition(tuple(Rule(p, (), body(rng.randint(0, 3))) for p in defined))


def _eval_split(f, pos: set[str], neg: set[str], positive: bool = True) -> bool:
    """Evaluate ``f`` reading positive atom occurrences in ``pos`` and
    negative ones in ``neg``."""
    if isinstance(f, Atom):
        return f.pred in (pos if positive else neg)
    if isinstance(f, Bool):
        return f.value
    if isinstance(f, Not):
        return not _eval_split(f.arg, pos, neg, not positive)
    if isinstance(f, And):
        return all(_eval_split(a, pos, neg, positive) for a in f.args)
    if isinstance(f, Or):
        return any(_eval_split(a, pos, neg, positive) for a in f.args)
    raise TypeError(f)


def well_founded(gid: InductiveDefinition, opens: set[str]) -> tuple[set[str], set[str]]:
    """Alternating-fixpoint well-founded model of a propositional GID under
    a fixed set of true open atoms: (certainly true, certainly false)."""
    rules = {r.pred: r.body for r in gid.rules}
    defined = set(rules)

    def stable(j: set[str]) -> set[str]:
        # least fixpoint with negative defined occurrences read in j
        k: set[str] = set()
        while True:
            nxt = {p for p, b in rules.items() if _eval_split(b, k | opens, j | opens)}
            if nxt == k:
                return k
            k = nxt

    true: set[str] = set()
    while True:
        upper = stable(true)
        nxt = stable(upper)
        if nxt == true:
            return true, defined - upper
        true = nxt


# -------------------------------------------------------------- fairness


def unfair_states(n: int, edges, labeled) -> set[int]:
    """States that can reach a cycle running only through unlabeled states."""
    g = nx.DiGraph()
    g.add_nodes_from(range(n))
    g.add_edges_from(edges)
    bad_cycle_nodes: set[int] = set()
    sub = g.subgraph([v for v in range(n) if v not in set(labeled)])
    for cycle in nx.simple_cycles(sub):
        bad_cycle_nodes.update(cycle)
    out = set()
    for v in range(n):
        if v in bad_cycle_nodes or nx.descendants(g, v) & bad_cycle_nodes:
            out.add(v)
    return out


def edges_of(structure: Structure) -> tuple[int, list[tuple[int, int]], list[int]]:
    index = {s: i for i, s in enumerate(structure.domain)}
    edges = [(index[a], index[b]) for a, b in structure.relations["Edge"]]
    labeled = [index[s] for s, _ in structure.relations["L"]]
    return len(structure.domain), edges, labeled


# ------------------------------------------------------------------ misc


def prop_models_as_atoms(pt, models):
    """Models of a ground theory as sets of (pred, args) keys over its
    original atoms."""
    return {frozenset(pt.atoms.key(i) for i in m if pt.atoms.origin(i) == "orig") for m in models}


def naive_datalog(rules: list[Rule], facts: set, domain) -> set:
    """Bottom-up evaluation of positive rules whose bodies are
    conjunctions/disjunctions/existentials of atoms, by brute-force
    substitution; independent of the evaluator's closures."""

    def holds(f, env, db):
        if isinstance(f, Atom):
            return (f.pred, tuple(env[t.name] if isinstance(t, Var) else t.name for t in f.args)) in db
        if isinstance(f, Bool):
            return f.value
        if isinstance(f, Eq):
            val = lambda t: env[t.name] if isinstance(t, Var) else t.name
            return val(f.left) == val(f.right)
        if isinstance(f, And):
            return all(holds(a, env, db) for a in f.args)
        if isinstance(f, Or):
            return any(holds(a, env, db) for a in f.args)
        if isinstance(f, Exists):
            return any(holds(f.body, {**env, f.var: d}, db) for d in domain)
        if isinstance(f, Forall):
            return all(holds(f.body, {**env, f.var: d}, db) for d in domain)
        raise TypeError(f)

    db = set(facts)
    changed = True
    while changed:
        changed = False
        for r in rules:
            for t in itertools.product(domain, repeat=r.arity):
                atom = (r.pred, t)
                if atom not in db and holds(r.body, dict(zip(r.params, t)), db):
                    db.add(atom)
                    changed = True
    return db
