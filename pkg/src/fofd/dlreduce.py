"""Reduction of DefNF propositional fixpoint definitions to difference logic.

A model of a definition must satisfy its completion, and in addition every
atom made true by a least fixpoint (false by a greatest one) needs a
well-founded justification. The justification is witnessed by integer levels:
each definition node gets its own family of level variables over the atoms
it defines, and an atom justified by a body literal has to sit strictly above
it when the rule is local to the node, or at least as high when the rule
belongs to a nested node.

Two details differ from the textbook per-rule encoding. In a disjunctive
(least) or conjunctive (greatest) rule the head must be justified by a body
literal that also satisfies the level ordering; a disjunct that merely
repeats a defined body atom would make the constraint vacuous, so it is not
emitted. And when several families of the same polarity constrain one such
head, they must agree on which body literal justifies it; the choice is
made explicit with shared witness atoms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .core import Kind
from .graph import tarjan
from .grounder import theory_to_defnf
from .prop import (
    PAnd,
    PAtom,
    PConst,
    PIff,
    PImp,
    PNot,
    POr,
    AtomTable,
    DefNFRule,
    Diff,
    PropDefinition,
    PropFormula,
    PropTheory,
    lit,
    pand,
    pnot,
    por,
)

GROUND = 0  # integer variable id of the floating zero


@dataclass(frozen=True)
class ReduceOptions:
    strength: str = "weak"  # "weak" or "strong"
    scc_opt: bool = True
    relax: bool = True  # >= instead of > for rules of nested nodes
    witnesses: str = "shared"  # "shared" or "per-family"

    def __post_init__(self):
        if self.strength not in ("weak", "strong"):
            raise ValueError(f"unknown strength {self.strength!r}")
        if self.witnesses not in ("shared", "per-family"):
            raise ValueError(f"unknown witness mode {self.witnesses!r}")


@dataclass
class DLTheory:
    """Formulas over boolean atoms of ``atoms`` and integer variables
    ``ints`` (id 0 is the zero level)."""

    atoms: AtomTable
    ints: list[str]
    formulas: list[PropFormula]
    levels: dict[tuple[int, int], int] = field(default_factory=dict)
    source: Optional[PropTheory] = None

    def with_formulas(self, extra: Iterable[PropFormula]) -> "DLTheory":
        return DLTheory(self.atoms, self.ints, self.formulas + list(extra), self.levels, self.source)

    def dump(self) -> str:
        """One formula per line in prefix notation."""
        return "".join(prefix(f) + "\n" for f in self.formulas)


def prefix(f: PropFormula, bool_name=lambda i: f"b{i}", int_name=lambda i: f"l{i}") -> str:
    if isinstance(f, PAtom):
        return bool_name(f.id)
    if isinstance(f, Diff):
        c = str(f.c) if f.c >= 0 else f"(- {-f.c})"
        return f"({f.op} (- {int_name(f.x)} {int_name(f.y)}) {c})"
    if isinstance(f, PConst):
        return "true" if f.value else "false"
    if isinstance(f, PNot):
        return f"(not {prefix(f.arg, bool_name, int_name)})"
    if isinstance(f, (PAnd, POr)):
        op = "and" if isinstance(f, PAnd) else "or"
        return f"({op} {' '.join(prefix(a, bool_name, int_name) for a in f.args)})"
    if isinstance(f, PImp):
        return f"(=> {prefix(f.left, bool_name, int_name)} {prefix(f.right, bool_name, int_name)})"
    if isinstance(f, PIff):
        return f"(= {prefix(f.left, bool_name, int_name)} {prefix(f.right, bool_name, int_name)})"
    raise TypeError(f)


# --------------------------------------------------------------- completion


def _body(r) -> PropFormula:
    if not isinstance(r, DefNFRule):
        return r.body
    lits = [lit(l) for l in r.lits]
    return pand(lits) if r.conj else por(lits)


def completion(pd: PropDefinition) -> list[PropFormula]:
    """``head <=> body`` for every rule at every nesting level."""
    return [PIff(PAtom(r.head), _body(r)) for r in pd.all_rules()]


# --------------------------------------------------------- dependency graph


@dataclass
class DependencyGraph:
    nodes: list[int]
    edges: dict[int, list[int]]
    sccs: list[list[int]]
    component: dict[int, int]

    def needs_level(self, atom: int) -> bool:
        comp = self.sccs[self.component[atom]]
        return len(comp) > 1 or atom in self.edges.get(atom, ())


def dependency_graph(pd: PropDefinition, scope: Optional[frozenset[int]] = None) -> DependencyGraph:
    """Edges ``h -> b`` for every rule of ``pd`` (at any depth) whose head
    and body atom are both in ``scope`` (default: everything ``pd``
    defines)."""
    scope = pd.defined() if scope is None else scope
    edges: dict[int, list[int]] = {}
    for r in sorted(pd.all_rules(), key=lambda r: r.head):
        if r.head not in scope:
            continue
        succ = edges.setdefault(r.head, [])
        for l in r.lits:
            b = abs(l)
            if b in scope and b not in succ:
                succ.append(b)
    nodes = sorted(scope)
    sccs = tarjan(nodes, lambda v: edges.get(v, ()))
    component = {v: i for i, comp in enumerate(sccs) for v in comp}
    return DependencyGraph(nodes, edges, sccs, component)


def dependency_sccs(pd: PropDefinition) -> DependencyGraph:
    return dependency_graph(pd)


# ----------------------------------------------------------------- families


@dataclass
class _Family:
    """Level-variable family of one definition node."""

    id: int
    kind: Kind
    node: PropDefinition
    scope: frozenset[int]
    local: frozenset[int]
    graph: DependencyGraph
    needs: frozenset[int]


@dataclass
class _Site:
    """A rule together with the families that have to justify its head."""

    rule: DefNFRule
    node_id: int
    families: list[_Family]


class _Reducer:
    def __init__(self, pt: PropTheory, options: ReduceOptions):
        self.opt = options
        self.atoms = pt.atoms.copy()
        self.ints = ["zero"]
        self.levels: dict[tuple[int, int], int] = {}
        self.formulas: list[PropFormula] = list(pt.sentences)
        self.defined_anywhere: set[int] = set()
        self.next_node = 0

    # -- helpers

    def level(self, fam: _Family, atom: int) -> int:
        key = (fam.id, atom)
        v = self.levels.get(key)
        if v is None:
            v = len(self.ints)
            self.ints.append(f"lev{fam.id}({self.atoms.name(atom)})")
            self.levels[key] = v
        return v

    def pol(self, fam: _Family, l: int) -> PropFormula:
        return lit(l) if fam.kind is Kind.LFD else lit(-l)

    def delta(self, fam: _Family, site: _Site) -> int:
        if site.node_id == fam.id or not self.opt.relax:
            return 1
        return 0

    def above(self, fam: _Family, h: int, d: int, delta: int) -> PropFormula:
        """lev h >= lev d + delta."""
        return Diff(self.level(fam, d), self.level(fam, h), "<=", -delta)

    def exactly(self, fam: _Family, h: int, d: int, delta: int) -> PropFormula:
        """lev h = lev d + delta, as two difference constraints."""
        lh, ld = self.level(fam, h), self.level(fam, d)
        return pand([Diff(lh, ld, "<=", delta), Diff(ld, lh, "<=", -delta)])

    def at_zero(self, fam: _Family, h: int) -> PropFormula:
        return Diff(self.level(fam, h), GROUND, "<=", 0)

    def leveled(self, fam: _Family, h: int, l: int) -> bool:
        """Whether body literal ``l`` of a rule for ``h`` is compared by level
        in family ``fam`` (otherwise it counts as open there)."""
        if l < 0 or l not in fam.scope:
            return False
        if not self.opt.scc_opt:
            return True
        return fam.graph.component[l] == fam.graph.component[h]

    def one_type(self, fam: _Family, r: DefNFRule) -> bool:
        return (fam.kind is Kind.LFD) != r.conj

    # -- structure

    def families(self, pd: PropDefinition, out: list[tuple[_Family, int]], depth: int = 0) -> None:
        fid = self.next_node
        self.next_node += 1
        scope = pd.defined()
        graph = dependency_graph(pd, scope)
        if self.opt.scc_opt:
            needs = frozenset(a for a in scope if graph.needs_level(a))
        else:
            needs = scope
        out.append((_Family(fid, pd.kind, pd, scope, pd.local(), graph, needs), depth))
        for s in pd.subdefs:
            self.families(s, out, depth + 1)

    def definition(self, pd: PropDefinition) -> None:
        fams: list[tuple[_Family, int]] = []
        self.families(pd, fams)
        # rules in node pre-order; a rule's families are its node and ancestors
        sites: list[_Site] = []
        stack: list[_Family] = []
        for fam, depth in fams:
            del stack[depth:]
            stack.append(fam)
            for r in sorted(fam.node.rules, key=lambda r: r.head):
                sites.append(_Site(r, fam.id, [f for f in stack if r.head in f.needs]))

        self.formulas.extend(completion(pd))
        for fam, _ in fams:
            for h in sorted(fam.needs):
                self.formulas.append(PImp(pnot(self.pol(fam, h)), self.at_zero(fam, h)))
        for site in sites:
            self.site(site)

    def site(self, site: _Site) -> None:
        r = site.rule
        by_kind: dict[Kind, list[_Family]] = {}
        for fam in site.families:
            by_kind.setdefault(fam.kind, []).append(fam)
        for kind in (Kind.LFD, Kind.GFD):
            fams = by_kind.get(kind, [])
            if not fams:
                continue
            if self.one_type(fams[0], r) and len(fams) > 1 and self.opt.witnesses == "shared":
                self.shared_one_type(site, fams)
                continue
            for fam in fams:
                if self.one_type(fam, r):
                    self.one(site, fam)
                else:
                    self.all(site, fam)

    def all(self, site: _Site, fam: _Family) -> None:
        r, h = site.rule, site.rule.head
        delta = self.delta(fam, site)
        ph = self.pol(fam, h)
        ds = [l for l in r.lits if self.leveled(fam, h, l)]
        if ds:
            self.formulas.append(
                PImp(ph, pand(por([self.above(fam, h, d, delta), pnot(self.pol(fam, d))]) for d in ds))
            )
        if self.opt.strength == "strong":
            if ds:
                tight = por(pand([self.exactly(fam, h, d, delta), self.pol(fam, d)]) for d in ds)
            else:
                tight = self.at_zero(fam, h)
            self.formulas.append(PImp(ph, tight))

    def one(self, site: _Site, fam: _Family) -> None:
        r, h = site.rule, site.rule.head
        delta = self.delta(fam, site)
        ph = self.pol(fam, h)
        ds = [l for l in r.lits if self.leveled(fam, h, l)]
        os = [l for l in r.lits if not self.leveled(fam, h, l)]
        opens = por(self.pol(fam, o) for o in os)
        self.formulas.append(
            PImp(ph, por([*(pand([self.above(fam, h, d, delta), self.pol(fam, d)]) for d in ds), opens]))
        )
        if self.opt.strength == "strong":
            tight = por(
                [
                    *(pand([self.exactly(fam, h, d, delta), self.pol(fam, d)]) for d in ds),
                    pand([opens, self.at_zero(fam, h)]),
                ]
            )
            self.formulas.append(PImp(ph, tight))

    def shared_one_type(self, site: _Site, fams: list[_Family]) -> None:
        r, h = site.rule, site.rule.head
        pol0 = fams[0]
        ws = []
        for l in r.lits:
            w = self.atoms.fresh("w", "")
            ws.append(PAtom(w))
            self.formulas.append(PImp(PAtom(w), self.pol(pol0, l)))
            for fam in fams:
                delta = self.delta(fam, site)
                if self.leveled(fam, h, l):
                    self.formulas.append(PImp(PAtom(w), self.above(fam, h, l, delta)))
                    if self.opt.strength == "strong":
                        self.formulas.append(PImp(PAtom(w), self.exactly(fam, h, l, delta)))
                elif self.opt.strength == "strong":
                    self.formulas.append(PImp(PAtom(w), self.at_zero(fam, h)))
        self.formulas.append(PImp(self.pol(pol0, h), por(ws)))

    def finish(self, source: PropTheory) -> DLTheory:
        for v in range(1, len(self.ints)):
            self.formulas.append(Diff(GROUND, v, "<=", 0))
        return DLTheory(self.atoms, self.ints, self.formulas, self.levels, source)


def reduce(pt: PropTheory, options: ReduceOptions = ReduceOptions()) -> DLTheory:
    """Difference-logic theory whose models projected to the atoms of ``pt``
    are exactly the models of ``pt``."""
    if not pt.is_defnf():
        pt = theory_to_defnf(pt)
    red = _Reducer(pt, options)
    for d in pt.definitions:
        red.definition(d)
    return red.finish(pt)


def level_constraints(pd: PropDefinition, atoms: AtomTable, options: ReduceOptions = ReduceOptions()) -> DLTheory:
    """Completion and level constraints of a single DefNF definition."""
    red = _Reducer(PropTheory(atoms, (), (pd,)), options)
    red.definition(pd)
    return red.finish(PropTheory(atoms, (), (pd,)))
