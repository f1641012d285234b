"""SMT-LIB 2 (QF_IDL) emission, external solver invocation and model lifting."""

from __future__ import annotations

import enum
import logging
import os
import re
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .core import Structure, Vocabulary
from .dlreduce import DLTheory, prefix
from .prop import Diff, PAnd, PIff, PImp, PNot, POr, PropFormula, PropTheory

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class Status(enum.Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"
    TIMEOUT = "timeout"


# base cutoff in seconds for reseeded restarts
RESTART = 0.3


@dataclass(frozen=True)
class SolverConfig:
    """``timeout`` bounds the whole solve. With ``restart`` set, the solve
    is a series of runs with different random seeds whose cutoffs follow the
    Luby sequence scaled by ``restart`` seconds; None means a single run."""

    path: str
    args: tuple[str, ...] = ()
    timeout: float = 60.0
    restart: Optional[float] = RESTART

    def __post_init__(self):
        if not self.timeout > 0:
            raise ValueError("timeout must be positive")
        if self.restart is not None and not self.restart > 0:
            raise ValueError("restart cutoff must be positive")


# solvers known to print define-fun models, with the flags that make them do so
_KNOWN = (("yices-smt2", ("--smt2-model-format",)), ("z3", ()))


def default_solver(timeout: float = 60.0, restart: Optional[float] = RESTART) -> Optional[SolverConfig]:
    """First known solver found on PATH, or None."""
    for name, args in _KNOWN:
        path = shutil.which(name)
        if path:
            return SolverConfig(path, args, timeout, restart)
    return None


def solver_config(
    path: Optional[str],
    args: Iterable[str] = (),
    timeout: float = 60.0,
    restart: Optional[float] = RESTART,
) -> SolverConfig:
    """Config for ``path`` (a name or a path), adding the model-format flags of
    known solvers unless ``args`` are given. With no path, the default."""
    if path is None:
        cfg = default_solver(timeout, restart)
        if cfg is None:
            raise SolverError("no SMT solver found; install yices or z3 or pass --solver")
        return SolverConfig(cfg.path, tuple(args) or cfg.args, timeout, restart)
    resolved = shutil.which(path) or path
    extra = tuple(args)
    if not extra:
        base = os.path.basename(resolved)
        extra = next((a for n, a in _KNOWN if base == n), ())
    return SolverConfig(resolved, extra, timeout, restart)


@dataclass
class SolveResult:
    status: Status
    bools: dict[int, bool] = field(default_factory=dict)
    ints: dict[int, int] = field(default_factory=dict)
    seconds: float = 0.0
    raw: str = ""


# ----------------------------------------------------------------- emission


@dataclass(frozen=True)
class Emitted:
    text: str
    names: dict[str, str]  # SMT symbol -> original name

    def name_map(self) -> str:
        return "".join(f"{k}\t{v}\n" for k, v in self.names.items())


def _check_shape(f: PropFormula) -> None:
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Diff):
            if not isinstance(g.c, int):
                raise ValueError(f"non-integer bound in {g}")
        elif isinstance(g, PNot):
            stack.append(g.arg)
        elif isinstance(g, (PAnd, POr)):
            stack.extend(g.args)
        elif isinstance(g, (PImp, PIff)):
            stack.extend((g.left, g.right))


def emit_smtlib(dl: DLTheory, seed: Optional[int] = None) -> Emitted:
    lines = ["(set-option :produce-models true)"]
    if seed is not None:
        lines.append(f"(set-option :random-seed {seed})")
    lines.append("(set-logic QF_IDL)")
    names: dict[str, str] = {}
    for i in dl.atoms.ids():
        lines.append(f"(declare-fun b{i} () Bool)")
        names[f"b{i}"] = dl.atoms.name(i)
    for v, name in enumerate(dl.ints):
        lines.append(f"(declare-fun l{v} () Int)")
        names[f"l{v}"] = name
    for f in dl.formulas:
        _check_shape(f)
        lines.append(f"(assert {prefix(f)})")
    lines += ["(check-sat)", "(get-model)"]
    return Emitted("\n".join(lines) + "\n", names)


# ------------------------------------------------------------------ parsing


_SEXP_TOKEN = re.compile(r"\(|\)|\"(?:[^\"]|\"\")*\"|\|[^|]*\||[^\s()]+")


def parse_sexps(text: str) -> list:
    """Parse a sequence of S-expressions into nested lists of atoms."""
    stack: list[list] = [[]]
    for tok in _SEXP_TOKEN.findall(text):
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                raise ValueError("unbalanced ')'")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise ValueError("unbalanced '('")
    return stack[0]


def _value(v):
    if isinstance(v, str):
        if v == "true":
            return True
        if v == "false":
            return False
        return int(v)
    if len(v) == 2 and v[0] == "-":
        return -_value(v[1])
    raise ValueError(f"unsupported model value {v}")


def parse_output(raw: str) -> SolveResult:
    """Read ``sat``/``unsat`` and a model of ``define-fun`` entries."""
    items = parse_sexps(raw)
    if not items or not isinstance(items[0], str):
        return SolveResult(Status.UNKNOWN, raw=raw)
    head = items[0]
    if head == "unsat":
        return SolveResult(Status.UNSAT, raw=raw)
    if head != "sat":
        return SolveResult(Status.UNKNOWN, raw=raw)
    bools: dict[int, bool] = {}
    ints: dict[int, int] = {}

    def visit(node):
        if not isinstance(node, list):
            return
        if len(node) == 5 and node[0] == "define-fun" and node[2] == []:
            name, value = node[1], _value(node[4])
            if name.startswith("b") and isinstance(value, bool):
                bools[int(name[1:])] = value
            elif name.startswith("l") and not isinstance(value, bool):
                ints[int(name[1:])] = value
            return
        for child in node:
            visit(child)

    try:
        for item in items[1:]:
            visit(item)
    except ValueError:
        return SolveResult(Status.UNKNOWN, raw=raw)
    return SolveResult(Status.SAT, bools, ints, raw=raw)


# ------------------------------------------------------------------ solving


def luby(i: int) -> int:
    """i-th term (from 1) of the Luby sequence 1 1 2 1 1 2 4 1 1 2 ..."""
    k = i.bit_length()
    if i == (1 << k) - 1:
        return 1 << (k - 1)
    return luby(i - (1 << (k - 1)) + 1)


def run_solver(text: str, config: SolverConfig, timeout: Optional[float] = None) -> SolveResult:
    fd, path = tempfile.mkstemp(suffix=".smt2", prefix="fofd-")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        start = time.perf_counter()
        try:
            proc = subprocess.run(
                [config.path, *config.args, path],
                capture_output=True,
                text=True,
                timeout=config.timeout if timeout is None else timeout,
            )
        except subprocess.TimeoutExpired:
            return SolveResult(Status.TIMEOUT, seconds=time.perf_counter() - start)
        except OSError as e:
            raise SolverError(f"cannot run {config.path}: {e}") from e
        elapsed = time.perf_counter() - start
    finally:
        os.unlink(path)
    try:
        result = parse_output(proc.stdout)
    except ValueError as e:
        raise SolverError(f"unparseable solver output: {e}", proc.stdout + proc.stderr) from e
    if result.status is Status.UNKNOWN and proc.returncode != 0:
        raise SolverError(f"solver exited with status {proc.returncode}", proc.stdout + proc.stderr)
    result.seconds = elapsed
    return result


def solve(dl: DLTheory, config: SolverConfig) -> SolveResult:
    """Run the solver on ``dl``. Level encodings give heavy-tailed run times
    that depend mostly on the solver's random choices, so by default short
    runs with fresh seeds are retried until the time budget is spent."""
    if config.restart is None:
        return run_solver(emit_smtlib(dl).text, config)
    start = time.perf_counter()
    attempt = 0
    while True:
        remaining = config.timeout - (time.perf_counter() - start)
        if remaining <= 0:
            return SolveResult(Status.TIMEOUT, seconds=time.perf_counter() - start)
        attempt += 1
        cutoff = min(luby(attempt) * config.restart, remaining)
        result = run_solver(emit_smtlib(dl, seed=attempt - 1).text, config, cutoff)
        if result.status is not Status.TIMEOUT:
            result.seconds = time.perf_counter() - start
            if attempt > 1:
                log.info("solved on attempt %d", attempt)
            return result


# ------------------------------------------------------------------ lifting


def lift_assignment(result: SolveResult, pt: PropTheory) -> frozenset[int]:
    """True original atoms of ``pt``; atoms absent from the model are false."""
    if result.status is not Status.SAT:
        raise ValueError("can only lift a SAT result")
    out = set()
    for i in pt.atoms.original_ids():
        value = result.bools.get(i)
        if value is None:
            log.info("atom %s missing from solver model, taken as false", pt.atoms.name(i))
        elif value:
            out.add(i)
    return frozenset(out)


def lift_model(
    result: SolveResult,
    pt: PropTheory,
    frame: Structure,
    vocabulary: Optional[Vocabulary] = None,
) -> Structure:
    """Total structure over ``frame``'s domain: frame relations are kept,
    every predicate with ground atoms gets the tuples the solver made true,
    and predicates of ``vocabulary`` with no atoms at all are empty."""
    rels: dict[str, set] = {p: set(r) for p, r in frame.relations.items()}
    for i in pt.atoms.original_ids():
        rels.setdefault(pt.atoms.key(i)[0], set())
    if vocabulary is not None:
        for p in vocabulary.predicate_names():
            rels.setdefault(p, set())
    for i in lift_assignment(result, pt):
        pred, args = pt.atoms.key(i)
        rels[pred].add(args)
    return Structure(frame.domain, {p: frozenset(r) for p, r in rels.items()}, dict(frame.constants))
