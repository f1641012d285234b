"""Propositional formulas, ground fixpoint definitions and the atom table.

Atoms are interned to positive integer ids; a DefNF literal is a signed id.
The same formula nodes, extended with :class:`Diff`, carry difference-logic
theories.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence, Union

from .core import Kind


@dataclass(frozen=True)
class PAtom:
    id: int


@dataclass(frozen=True)
class PConst:
    value: bool


@dataclass(frozen=True)
class PNot:
    arg: "PropFormula"


@dataclass(frozen=True)
class PAnd:
    args: tuple["PropFormula", ...]


@dataclass(frozen=True)
class POr:
    args: tuple["PropFormula", ...]


@dataclass(frozen=True)
class PImp:
    left: "PropFormula"
    right: "PropFormula"


@dataclass(frozen=True)
class PIff:
    left: "PropFormula"
    right: "PropFormula"


@dataclass(frozen=True)
class Diff:
    """Difference constraint ``x - y op c`` over integer variable ids."""

    x: int
    y: int
    op: str  # "<", "<=" or "="
    c: int

    def __post_init__(self):
        if self.op not in ("<", "<=", "="):
            raise ValueError(f"bad difference operator {self.op!r}")


PropFormula = Union[PAtom, PConst, PNot, PAnd, POr, PImp, PIff, Diff]

PTRUE = PConst(True)
PFALSE = PConst(False)


def lit(signed: int) -> PropFormula:
    return PAtom(signed) if signed > 0 else PNot(PAtom(-signed))


def pand(args: Iterable[PropFormula]) -> PropFormula:
    """Conjunction with constant folding and flattening."""
    out: list[PropFormula] = []
    for a in args:
        if isinstance(a, PConst):
            if not a.value:
                return PFALSE
            continue
        if isinstance(a, PAnd):
            out.extend(a.args)
        else:
            out.append(a)
    if not out:
        return PTRUE
    if len(out) == 1:
        return out[0]
    return PAnd(tuple(out))


def por(args: Iterable[PropFormula]) -> PropFormula:
    out: list[PropFormula] = []
    for a in args:
        if isinstance(a, PConst):
            if a.value:
                return PTRUE
            continue
        if isinstance(a, POr):
            out.extend(a.args)
        else:
            out.append(a)
    if not out:
        return PFALSE
    if len(out) == 1:
        return out[0]
    return POr(tuple(out))


def pnot(a: PropFormula) -> PropFormula:
    if isinstance(a, PConst):
        return PConst(not a.value)
    if isinstance(a, PNot):
        return a.arg
    return PNot(a)


def holds(f: PropFormula, true: frozenset[int] | set[int], ints: Optional[Sequence[int]] = None) -> bool:
    """Evaluate ``f`` with atoms in ``true`` true; ``ints`` gives integer
    variable values when ``f`` contains difference constraints."""
    if isinstance(f, PAtom):
        return f.id in true
    if isinstance(f, PConst):
        return f.value
    if isinstance(f, PNot):
        return not holds(f.arg, true, ints)
    if isinstance(f, PAnd):
        return all(holds(a, true, ints) for a in f.args)
    if isinstance(f, POr):
        return any(holds(a, true, ints) for a in f.args)
    if isinstance(f, PImp):
        return not holds(f.left, true, ints) or holds(f.right, true, ints)
    if isinstance(f, PIff):
        return holds(f.left, true, ints) == holds(f.right, true, ints)
    if isinstance(f, Diff):
        if ints is None:
            raise ValueError("difference constraint without integer assignment")
        d = ints[f.x] - ints[f.y]
        return d < f.c if f.op == "<" else d <= f.c if f.op == "<=" else d == f.c
    raise TypeError(f)


def atoms_of(f: PropFormula) -> Iterator[int]:
    if isinstance(f, PAtom):
        yield f.id
    elif isinstance(f, PNot):
        yield from atoms_of(f.arg)
    elif isinstance(f, (PAnd, POr)):
        for a in f.args:
            yield from atoms_of(a)
    elif isinstance(f, (PImp, PIff)):
        yield from atoms_of(f.left)
        yield from atoms_of(f.right)


def polar_atoms(f: PropFormula, positive: bool = True) -> Iterator[tuple[int, bool]]:
    if isinstance(f, PAtom):
        yield f.id, positive
    elif isinstance(f, PNot):
        yield from polar_atoms(f.arg, not positive)
    elif isinstance(f, (PAnd, POr)):
        for a in f.args:
            yield from polar_atoms(a, positive)
    elif isinstance(f, PImp):
        yield from polar_atoms(f.left, not positive)
        yield from polar_atoms(f.right, positive)
    elif isinstance(f, PIff):
        for side in (f.left, f.right):
            yield from polar_atoms(side, True)
            yield from polar_atoms(side, False)


def node_count(f: PropFormula) -> int:
    if isinstance(f, PNot):
        return 1 + node_count(f.arg)
    if isinstance(f, (PAnd, POr)):
        return 1 + sum(node_count(a) for a in f.args)
    if isinstance(f, (PImp, PIff)):
        return 1 + node_count(f.left) + node_count(f.right)
    return 1


# ----------------------------------------------------------------- rules


@dataclass(frozen=True)
class PropRule:
    head: int
    body: PropFormula

    def holds(self, true) -> bool:
        return holds(self.body, true)

    @property
    def formula(self) -> PropFormula:
        return self.body


@dataclass(frozen=True)
class DefNFRule:
    """``head <- /\\ lits`` (``conj``) or ``head <- \\/ lits``."""

    head: int
    conj: bool
    lits: tuple[int, ...]

    def holds(self, true) -> bool:
        if self.conj:
            return all((l in true) if l > 0 else (-l not in true) for l in self.lits)
        return any((l in true) if l > 0 else (-l not in true) for l in self.lits)

    @property
    def formula(self) -> PropFormula:
        args = tuple(lit(l) for l in self.lits)
        return PAnd(args) if self.conj else POr(args)


@dataclass(frozen=True)
class PropDefinition:
    kind: Kind
    rules: tuple[Union[PropRule, DefNFRule], ...] = ()
    subdefs: tuple["PropDefinition", ...] = ()

    def walk(self) -> Iterator["PropDefinition"]:
        yield self
        for s in self.subdefs:
            yield from s.walk()

    def all_rules(self):
        for n in self.walk():
            yield from n.rules

    def defined(self) -> frozenset[int]:
        return frozenset(r.head for r in self.all_rules())

    def local(self) -> frozenset[int]:
        return frozenset(r.head for r in self.rules)

    def opens(self) -> frozenset[int]:
        used: set[int] = set()
        for r in self.all_rules():
            used.add(r.head)
            used.update(atoms_of(r.formula))
        return frozenset(used - self.defined())

    def is_defnf(self) -> bool:
        return all(isinstance(r, DefNFRule) for r in self.all_rules())


# ------------------------------------------------------------ atom table


class AtomTable:
    """Bidirectional map between atom keys and ids (ids start at 1).

    Original ground atoms have keys ``(pred, args)``. Auxiliary atoms
    introduced by normalization or by the difference-logic reduction are
    marked with their origin and excluded from lifted models.
    """

    def __init__(self):
        self.keys: list[tuple[str, tuple[str, ...]]] = []
        self.origins: list[str] = []
        self.index: dict[tuple[str, tuple[str, ...]], int] = {}

    def __len__(self) -> int:
        return len(self.keys)

    def intern(self, key: tuple[str, tuple[str, ...]], origin: str = "orig") -> int:
        found = self.index.get(key)
        if found is not None:
            return found
        self.keys.append(key)
        self.origins.append(origin)
        self.index[key] = len(self.keys)
        return len(self.keys)

    def fresh(self, origin: str, label: str) -> int:
        n = len(self.keys) + 1
        return self.intern((f"_{origin}{n}", (label,) if label else ()), origin)

    def key(self, atom_id: int) -> tuple[str, tuple[str, ...]]:
        return self.keys[atom_id - 1]

    def origin(self, atom_id: int) -> str:
        return self.origins[atom_id - 1]

    def name(self, atom_id: int) -> str:
        pred, args = self.key(atom_id)
        if self.origin(atom_id) != "orig":
            return pred
        return f"{pred}({','.join(args)})" if args else pred

    def ids(self) -> range:
        return range(1, len(self.keys) + 1)

    def original_ids(self) -> list[int]:
        return [i for i in self.ids() if self.origin(i) == "orig"]

    def copy(self) -> "AtomTable":
        t = AtomTable()
        t.keys = list(self.keys)
        t.origins = list(self.origins)
        t.index = dict(self.index)
        return t

    def dump(self) -> str:
        """Tab-separated ``id<TAB>name`` lines."""
        return "".join(f"{i}\t{self.name(i)}\n" for i in self.ids())


@dataclass
class PropTheory:
    atoms: AtomTable
    sentences: tuple[PropFormula, ...] = ()
    definitions: tuple[PropDefinition, ...] = ()

    def is_defnf(self) -> bool:
        return all(d.is_defnf() for d in self.definitions)
