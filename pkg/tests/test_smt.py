import stat

import pytest

from conftest import read_fixture
from fofd.core import Structure
from fofd.dlreduce import DLTheory, ReduceOptions, reduce
from fofd.evaluator import check_model
from fofd.grounder import ground
from fofd.parser import parse_theory
from fofd.prop import AtomTable, Diff, PAtom, PNot
from fofd.smt import (
    SolveResult,
    SolverConfig,
    SolverError,
    Status,
    emit_smtlib,
    lift_assignment,
    lift_model,
    luby,
    parse_output,
    parse_sexps,
    run_solver,
    solve,
    solver_config,
)

UNIT = Structure(("u",))


def grounded(text):
    return ground(parse_theory(text), UNIT)


def shape_theory() -> DLTheory:
    table = AtomTable()
    table.intern(("p", ()))
    table.intern(("q", ()))
    formulas = [PAtom(1), PNot(PAtom(2)), Diff(1, 0, "<=", -3), Diff(0, 1, "<=", 3)]
    return DLTheory(table, ["zero", "lev0(p)"], formulas)


# ---------------------------------------------------------------- emission


def test_emitted_file_matches_fixture():
    assert emit_smtlib(shape_theory()).text == read_fixture("shape.smt2")


def test_negative_bounds_are_unary_minus():
    assert "(assert (<= (- l1 l0) (- 3)))" in emit_smtlib(shape_theory()).text


def test_name_map():
    assert emit_smtlib(shape_theory()).name_map() == "b1\tp\nb2\tq\nl0\tzero\nl1\tlev0(p)\n"


def test_seed_option_comes_before_the_logic():
    lines = emit_smtlib(shape_theory(), seed=4).text.splitlines()
    assert lines[:3] == ["(set-option :produce-models true)", "(set-option :random-seed 4)", "(set-logic QF_IDL)"]


def test_emission_is_deterministic():
    pt = ground(parse_theory(read_fixture("nested_mix.fofd")), UNIT)
    assert emit_smtlib(reduce(pt)).text == emit_smtlib(reduce(pt)).text


def test_non_integer_bound_is_rejected():
    dl = shape_theory().with_formulas([Diff(1, 0, "<=", 0.5)])
    with pytest.raises(ValueError):
        emit_smtlib(dl)


# ----------------------------------------------------------------- parsing


def test_parse_sexps():
    assert parse_sexps('sat (a (b "x)") |y z|)') == ["sat", ["a", ["b", '"x)"'], "|y z|"]]
    with pytest.raises(ValueError):
        parse_sexps("(a")
    with pytest.raises(ValueError):
        parse_sexps("a)")


@pytest.mark.parametrize("name", ["z3_sat.out", "yices_sat.out"])
def test_parse_sat_outputs(name):
    r = parse_output(read_fixture(name))
    assert r.status is Status.SAT
    assert r.bools == {1: True, 2: False}
    assert r.ints[1] - r.ints[0] == -3


@pytest.mark.parametrize("name", ["z3_unsat.out", "yices_unsat.out"])
def test_parse_unsat_outputs(name):
    assert parse_output(read_fixture(name)).status is Status.UNSAT


def test_parse_unknown_and_garbage():
    assert parse_output("unknown\n").status is Status.UNKNOWN
    assert parse_output("").status is Status.UNKNOWN
    assert parse_output('(error "boom")').status is Status.UNKNOWN


def test_luby_sequence():
    assert [luby(i) for i in range(1, 16)] == [1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8]


# ------------------------------------------------------------------ config


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig("z3", timeout=0)
    with pytest.raises(ValueError):
        SolverConfig("z3", restart=0)


def test_known_solvers_get_their_model_flags():
    assert solver_config("yices-smt2").args == ("--smt2-model-format",)
    assert solver_config("z3").args == ()
    assert solver_config("yices-smt2", ["--verbosity=0"]).args == ("--verbosity=0",)


def test_missing_executable():
    with pytest.raises(SolverError):
        run_solver("(check-sat)", SolverConfig("/nonexistent/solver"))


def _script(tmp_path, body: str) -> str:
    path = tmp_path / "fake-solver"
    path.write_text("#!/bin/sh\n" + body)
    path.chmod(path.stat().st_mode | stat.S_IEXEC)
    return str(path)


def test_timeout_status(tmp_path):
    fake = _script(tmp_path, "sleep 5\n")
    assert run_solver("(check-sat)", SolverConfig(fake, timeout=0.2)).status is Status.TIMEOUT
    r = solve(shape_theory(), SolverConfig(fake, timeout=0.5, restart=0.1))
    assert r.status is Status.TIMEOUT and r.seconds < 2


def test_crashing_solver(tmp_path):
    fake = _script(tmp_path, "echo oops >&2\nexit 2\n")
    with pytest.raises(SolverError) as info:
        run_solver("(check-sat)", SolverConfig(fake))
    assert "oops" in info.value.raw


def test_restarts_reseed_until_an_answer(tmp_path):
    # answers only once the emitted seed reaches 2
    fake = _script(
        tmp_path,
        'if grep -q ":random-seed [2-9]" "$1"; then echo unsat; else sleep 5; fi\n',
    )
    r = solve(shape_theory(), SolverConfig(fake, timeout=10, restart=0.1))
    assert r.status is Status.UNSAT


# ------------------------------------------------------------------ lifting


def test_lift_drops_auxiliary_atoms():
    pt = grounded("LFD { p <- (a & b) | c. }")
    aux = pt.atoms.fresh("aux", "")
    result = SolveResult(Status.SAT, {1: True, aux: True})
    assert lift_assignment(result, pt) == {1}


def test_lift_treats_missing_atoms_as_false():
    pt = grounded("p | q.")
    m = lift_model(SolveResult(Status.SAT, {2: True}), pt, UNIT)
    assert m.relations == {"p": frozenset(), "q": frozenset({()})}


def test_lift_keeps_frame_and_empty_predicates():
    theory = parse_theory("!x: (P(x) => Q(x)). LFD { !x: R(x) <- false. }")
    frame = Structure(("1", "2"), {"P": frozenset({("1",)})})
    pt = ground(theory, frame, simplify=True)
    true = {i: pt.atoms.key(i) == ("Q", ("1",)) for i in pt.atoms.ids()}
    m = lift_model(SolveResult(Status.SAT, true), pt, frame, theory.vocabulary)
    assert m.relations["P"] == {("1",)} and m.relations["Q"] == {("1",)} and m.relations["R"] == frozenset()
    assert check_model(theory, m)


def test_lift_rejects_unsat():
    with pytest.raises(ValueError):
        lift_assignment(SolveResult(Status.UNSAT), grounded("p."))


# ------------------------------------------------------------ real solvers


@pytest.mark.solver
def test_shape_fixture_with_the_solver(solver):
    r = run_solver(read_fixture("shape.smt2"), solver)
    assert r.status is Status.SAT and r.bools == {1: True, 2: False}
    assert r.ints[1] - r.ints[0] <= -3


@pytest.mark.solver
def test_unsat_fixture_with_the_solver(solver):
    assert run_solver(read_fixture("unsat.smt2"), solver).status is Status.UNSAT


@pytest.mark.solver
def test_contradiction_is_unsat(solver):
    assert solve(reduce(grounded("p. ~p.")), solver).status is Status.UNSAT


@pytest.mark.solver
def test_nested_mix_end_to_end(solver):
    theory = parse_theory(read_fixture("nested_mix.fofd"))
    pt = ground(theory, UNIT)
    result = solve(reduce(pt), solver)
    assert result.status is Status.SAT
    m = lift_model(result, pt, UNIT, theory.vocabulary)
    assert check_model(theory, m)
    assert {p for p, r in m.relations.items() if r} - {"a"} == {"s", "t"}
    # s is certainly true, so forcing it false leaves no model
    forced = parse_theory(read_fixture("nested_mix.fofd") + "\n~s.\n")
    assert solve(reduce(ground(forced, UNIT)), solver).status is Status.UNSAT


@pytest.mark.solver
@pytest.mark.parametrize("strength", ["weak", "strong"])
def test_fairness_ring6_end_to_end(solver, strength):
    from fofd.parser import parse_structure

    theory = parse_theory(read_fixture("fairness.fofd"))
    frame = parse_structure(read_fixture("ring6.struct"))
    pt = ground(theory, frame, simplify=True)
    result = solve(reduce(pt, ReduceOptions(strength=strength)), solver)
    assert result.status is Status.SAT
    assert check_model(theory, lift_model(result, pt, frame, theory.vocabulary))


@pytest.mark.solver
def test_both_known_solvers_agree_when_installed():
    import shutil

    configs = [solver_config(n, timeout=30) for n in ("yices-smt2", "z3") if shutil.which(n)]
    if len(configs) < 2:
        pytest.skip("needs both yices-smt2 and z3")
    pt = ground(parse_theory(read_fixture("completion_gap.fofd") + "\nq.\n"), UNIT)
    results = [solve(reduce(pt), c) for c in configs]
    assert all(r.status is Status.SAT for r in results)
    assert all(lift_assignment(r, pt) == lift_assignment(results[0], pt) for r in results)
