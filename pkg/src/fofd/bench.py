"""Fairness model-checking instances and the end-to-end benchmark.

A state is fair when every infinite path from it passes through a-labeled
states infinitely often. The property is a greatest fixpoint (P) around a
least one (Q): Q(x) holds when every path from x eventually steps into an
a-labeled state of P.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
import os
import random
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .core import Structure, Theory
from .dlreduce import ReduceOptions, reduce
from .evaluator import expand
from .grounder import ground
from .parser import parse_theory, print_structure, print_theory
from .smt import SolverConfig, SolverError, Status, lift_model, solve

FAIRNESS_THEORY = """\
GFD {
  !x: P(x) <- Q(x).
  LFD {
    !x: Q(x) <- !y: (Edge(x, y) => ((L(y, a) & P(y)) | Q(y))).
  }
}
"""

# The other way to bracket the Q rule: the implication only covers the
# a-labeled disjunct. Kept to show it does not express fairness.
FAIRNESS_THEORY_ALT = """\
GFD {
  !x: P(x) <- Q(x).
  LFD {
    !x: Q(x) <- !y: ((Edge(x, y) => (L(y, a) & P(y))) | Q(y)).
  }
}
"""

SHAPES = ("ring", "layered", "random")
LABEL = "a"


def fairness_theory(alternative: bool = False) -> Theory:
    return parse_theory(FAIRNESS_THEORY_ALT if alternative else FAIRNESS_THEORY)


def fairness_structure(n: int, edges: Iterable[tuple[int, int]], labeled: Iterable[int]) -> Structure:
    states = tuple(f"s{i}" for i in range(n))
    return Structure(
        states,
        {
            "Edge": frozenset((states[i], states[j]) for i, j in edges),
            "L": frozenset((states[i], LABEL) for i in labeled),
        },
        {LABEL: LABEL},
    )


def _graph(n: int, shape: str, rng: random.Random) -> set[tuple[int, int]]:
    edges: set[tuple[int, int]] = set()
    if shape == "ring":
        for i in range(n):
            edges.add((i, (i + 1) % n))
        for _ in range(n // 5):
            edges.add((rng.randrange(n), rng.randrange(n)))
    elif shape == "layered":
        width = max(1, round(math.sqrt(n)))
        layers = [list(range(i, min(i + width, n))) for i in range(0, n, width)]
        for k, layer in enumerate(layers):
            nxt = layers[(k + 1) % len(layers)]
            for v in layer:
                for w in rng.sample(nxt, min(len(nxt), rng.randint(1, 2))):
                    edges.add((v, w))
    elif shape == "random":
        for v in range(n):
            for _ in range(rng.randint(1, 3)):
                edges.add((v, rng.randrange(n)))
    else:
        raise ValueError(f"unknown shape {shape!r}; expected one of {', '.join(SHAPES)}")
    return edges


def gen_fairness(n: int, shape: str = "ring", seed: int = 0, density: float = 0.3) -> tuple[Theory, Structure]:
    """The fairness theory and a generated transition system with ``n``
    states. Every state has a successor; ``s0`` is always a-labeled, the
    others with probability ``density``."""
    if n < 1:
        raise ValueError("need at least one state")
    rng = random.Random(f"{shape}:{n}:{seed}")
    edges = _graph(n, shape, rng)
    labeled = [0] + [i for i in range(1, n) if rng.random() < density]
    return fairness_theory(), fairness_structure(n, sorted(edges), labeled)


def instance_text(theory: Theory, structure: Structure) -> tuple[str, str]:
    return print_theory(theory), print_structure(structure)


def instance_hash(theory: Theory, structure: Structure) -> str:
    t, s = instance_text(theory, structure)
    return hashlib.sha256((t + "\0" + s).encode()).hexdigest()


# ---------------------------------------------------------------- running


@dataclass
class BenchRow:
    size: int
    strength: str
    atoms: int
    clauses: int
    levels: int
    status: str
    seconds: float
    agrees: Optional[bool] = None  # lifted P equals the evaluator's, when checked


def fair_states(theory: Theory, structure: Structure) -> frozenset[str]:
    """P computed directly by the evaluator."""
    return frozenset(t[0] for t in expand(theory, structure).relations["P"])


def run_instance(
    theory: Theory,
    structure: Structure,
    strength: str,
    config: SolverConfig,
    scc_opt: bool = True,
    expected: Optional[frozenset[str]] = None,
) -> BenchRow:
    pt = ground(theory, structure, simplify=True)
    dl = reduce(pt, ReduceOptions(strength=strength, scc_opt=scc_opt))
    n = len(structure.domain)
    row = BenchRow(n, strength, len(pt.atoms.original_ids()), len(dl.formulas), len(dl.ints) - 1, "", 0.0)
    try:
        result = solve(dl, config)
    except SolverError:
        row.status = "ERROR"
        return row
    row.status = result.status.name
    row.seconds = result.seconds
    if result.status is Status.SAT and expected is not None:
        lifted = lift_model(result, pt, structure, theory.vocabulary)
        row.agrees = frozenset(t[0] for t in lifted.relations["P"]) == expected
    return row


def run_bench(
    sizes: Sequence[int],
    config: SolverConfig,
    shape: str = "ring",
    seed: int = 0,
    strengths: Sequence[str] = ("weak", "strong"),
    scc_opt: bool = True,
    verify_up_to: int = 50,
    out_dir: Optional[str] = None,
) -> list[BenchRow]:
    """One row per size and strength, in input order. Instances up to
    ``verify_up_to`` states are also solved by the evaluator and the lifted P
    compared with it. With ``out_dir`` the instances are written there."""
    rows = []
    for n in sizes:
        theory, structure = gen_fairness(n, shape, seed)
        if out_dir is not None:
            os.makedirs(out_dir, exist_ok=True)
            t, s = instance_text(theory, structure)
            base = os.path.join(out_dir, f"fairness-{shape}-{n}-seed{seed}")
            with open(base + ".fofd", "w") as f:
                f.write(t)
            with open(base + ".struct", "w") as f:
                f.write(s)
        expected = fair_states(theory, structure) if n <= verify_up_to else None
        for strength in strengths:
            rows.append(run_instance(theory, structure, strength, config, scc_opt, expected))
    return rows


CSV_FIELDS = ("size", "strength", "atoms", "clauses", "levels", "status", "seconds")


def to_csv(rows: Iterable[BenchRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in rows:
        w.writerow([r.size, r.strength, r.atoms, r.clauses, r.levels, r.status, f"{r.seconds:.4f}"])
    return buf.getvalue()


def to_table(rows: Iterable[BenchRow]) -> str:
    header = [*CSV_FIELDS, "check"]
    body = []
    for r in rows:
        check = "-" if r.agrees is None else ("ok" if r.agrees else "MISMATCH")
        body.append([str(r.size), r.strength, str(r.atoms), str(r.clauses), str(r.levels), r.status, f"{r.seconds:.4f}", check])
    widths = [max(len(h), *(len(b[i]) for b in body)) if body else len(h) for i, h in enumerate(header)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(header, widths))]
    lines += ["  ".join(c.rjust(w) for c, w in zip(b, widths)) for b in body]
    return "\n".join(lines) + "\n"
