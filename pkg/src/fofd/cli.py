"""Command line entry point: ``fofd check|ground|reduce|solve|transform-id|bench``."""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .bench import SHAPES, run_bench, to_csv, to_table
from .core import Structure, StructureError, Theory, VocabularyError, WellFormednessError
from .dlreduce import ReduceOptions, reduce
from .evaluator import EvaluationError, check_model, eval_formula, expand
from .foid import transform_theory
from .grounder import GroundingError, ground, print_prop_theory
from .parser import ParseError, parse_foid, parse_structure, parse_theory, print_structure, print_theory
from .smt import RESTART, SolverError, Status, emit_smtlib, lift_model, solve, solver_config

EXIT_OK, EXIT_UNSAT, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as f:
            return f.read()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _write(path: Optional[str], text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)


def _structure(args) -> Structure:
    if getattr(args, "structure", None):
        if args.domain:
            raise UsageError("give either a structure file or --domain, not both")
        return parse_structure(_read(args.structure))
    if args.domain in (None, "unit"):
        return Structure(("u",))
    return Structure(tuple(e.strip() for e in args.domain.split(",") if e.strip()))


def _theory(args) -> Theory:
    return parse_theory(_read(args.theory))


def _options(args) -> ReduceOptions:
    return ReduceOptions(strength=args.strength, scc_opt=args.scc == "on")


# ---------------------------------------------------------------- commands


def cmd_check(args) -> int:
    theory = _theory(args)
    s = _structure(args)
    s.check(theory.vocabulary)
    missing = theory.vocabulary.predicate_names() - set(s.relations)
    if not missing:
        ok = check_model(theory, s)
        print("model" if ok else "not a model")
        return EXIT_OK if ok else EXIT_UNSAT
    full = expand(theory, s)
    sys.stdout.write(print_structure(full))
    failed = [i for i, phi in enumerate(theory.sentences) if not eval_formula(phi, full)]
    for i in failed:
        print(f"sentence {i} is false", file=sys.stderr)
    return EXIT_UNSAT if failed else EXIT_OK


def cmd_ground(args) -> int:
    theory = _theory(args)
    s = _structure(args)
    pt = ground(theory, s, simplify=args.simplify)
    _write(args.out, print_prop_theory(pt))
    if args.atoms:
        _write(args.atoms, pt.atoms.dump())
    return EXIT_OK


def _pipeline(args):
    theory = _theory(args)
    s = _structure(args)
    s.check(theory.vocabulary)
    pt = ground(theory, s, simplify=True)
    return theory, s, pt, reduce(pt, _options(args))


def cmd_reduce(args) -> int:
    *_, dl = _pipeline(args)
    emitted = emit_smtlib(dl)
    _write(args.out, emitted.text)
    if args.out:
        _write(args.out + ".map", emitted.name_map())
    return EXIT_OK


def _config(args):
    return solver_config(args.solver, args.solver_arg or (), args.timeout, args.restart or None)


def cmd_solve(args) -> int:
    theory, s, pt, dl = _pipeline(args)
    config = _config(args)
    result = solve(dl, config)
    if result.status is Status.UNSAT:
        print("UNSAT")
        return EXIT_UNSAT
    if result.status is not Status.SAT:
        print(result.status.name, file=sys.stderr)
        return EXIT_SOLVER
    model = lift_model(result, pt, s, theory.vocabulary)
    if args.verify and not check_model(theory, model):
        print("lifted interpretation is not a model", file=sys.stderr)
        return EXIT_SOLVER
    _write(args.out, print_structure(model))
    return EXIT_OK


def cmd_transform_id(args) -> int:
    gids, theory = parse_foid(_read(args.theory))
    out, _ = transform_theory(gids, theory)
    _write(args.out, print_theory(out))
    return EXIT_OK


def cmd_bench(args) -> int:
    config = _config(args)
    try:
        sizes = [int(x) for x in args.sizes.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad --sizes {args.sizes!r}") from None
    strengths = ("weak", "strong") if args.strength == "both" else (args.strength,)
    rows = run_bench(
        sizes, config, args.shape, args.seed, strengths, args.scc == "on", args.verify_up_to, args.out
    )
    sys.stdout.write(to_table(rows))
    if args.csv:
        _write(args.csv, to_csv(rows))
    return EXIT_OK if all(r.agrees is not False for r in rows) else EXIT_SOLVER


# ------------------------------------------------------------------ parser


def _add_domain(p) -> None:
    p.add_argument("structure", nargs="?", help="structure file (.struct)")
    p.add_argument("--domain", help="'unit' or a comma separated element list, instead of a structure")


def _add_reduce(p) -> None:
    p.add_argument("--strength", choices=("weak", "strong"), default="strong")
    p.add_argument("--scc", choices=("on", "off"), default="on")


def _add_solver(p) -> None:
    p.add_argument("--solver", help="solver executable (default: yices-smt2 or z3 from PATH)")
    p.add_argument("--solver-arg", action="append", help="extra solver argument (repeatable)")
    p.add_argument("--timeout", type=float, default=60.0, help="solver timeout in seconds")
    p.add_argument(
        "--restart",
        type=float,
        default=RESTART,
        help=f"base cutoff in seconds for reseeded solver restarts, 0 for a single run (default {RESTART})",
    )


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fofd", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="evaluate a theory on a structure")
    p.add_argument("theory")
    _add_domain(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("ground", help="ground a theory over a structure")
    p.add_argument("theory")
    _add_domain(p)
    p.add_argument("--simplify", action="store_true", help="fold relations given by the structure")
    p.add_argument("--out", help="ground theory file (.pfd); default stdout")
    p.add_argument("--atoms", help="write the atom dictionary here")
    p.set_defaults(func=cmd_ground)

    p = sub.add_parser("reduce", help="emit the difference-logic encoding as SMT-LIB")
    p.add_argument("theory")
    _add_domain(p)
    _add_reduce(p)
    p.add_argument("--out", help="SMT-LIB file; the name map goes to OUT.map")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("solve", help="find a model with an external solver")
    p.add_argument("theory")
    _add_domain(p)
    _add_reduce(p)
    _add_solver(p)
    p.add_argument("--verify", action="store_true", help="check the lifted model with the evaluator")
    p.add_argument("--out", help="model file (.struct); default stdout")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("transform-id", help="translate GID blocks into fixpoint definitions")
    p.add_argument("theory", help=".foid file")
    p.add_argument("--out", help=".fofd file; default stdout")
    p.set_defaults(func=cmd_transform_id)

    p = sub.add_parser("bench", help="run the fairness benchmark")
    p.add_argument("--sizes", default="50,150,250")
    p.add_argument("--shape", choices=SHAPES, default="ring")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strength", choices=("weak", "strong", "both"), default="both")
    p.add_argument("--scc", choices=("on", "off"), default="on")
    p.add_argument("--verify-up-to", type=int, default=50, help="compare with the evaluator up to this size")
    p.add_argument("--out", help="directory for the generated instances")
    p.add_argument("--csv", help="write the report as CSV here")
    _add_solver(p)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except (
        UsageError,
        ParseError,
        WellFormednessError,
        StructureError,
        VocabularyError,
        GroundingError,
        EvaluationError,
        ValueError,
    ) as e:
        print(f"fofd: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as e:
        print(f"fofd: {e}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
