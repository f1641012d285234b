import random

import pytest

from conftest import read_fixture
from helpers import FOGen, prop_models_as_atoms
from fofd.core import Structure
from fofd.evaluator import GuardExceeded, enumerate_models, prop_enumerate_models
from fofd.grounder import GroundingError, ground, print_prop_theory, prop_nnf, theory_to_defnf
from fofd.parser import parse_structure, parse_theory
from fofd.prop import PAnd, PAtom, PConst, PIff, PImp, PNot, POr, DefNFRule, node_count

UNIT = Structure(("u",))


def test_forall_becomes_conjunction():
    pt = ground(parse_theory("!x: P(x)."), Structure(("1", "2")))
    assert pt.sentences == (PAnd((PAtom(1), PAtom(2))),)
    assert [pt.atoms.name(i) for i in pt.atoms.ids()] == ["P(1)", "P(2)"]


def test_exists_becomes_disjunction():
    pt = ground(parse_theory("?x: P(x)."), Structure(("1", "2")))
    assert pt.sentences == (POr((PAtom(1), PAtom(2))),)


def test_empty_domain():
    pt = ground(parse_theory("!x: P(x). ?x: P(x)."), Structure(()))
    assert pt.sentences == (PConst(True), PConst(False))


def test_equality_is_folded():
    pt = ground(parse_theory("!x y: (x = y | T(x, y))."), Structure(("1", "2")))
    assert print_prop_theory(pt).strip() == "T(1,2) & T(2,1)."


def test_rules_are_instantiated_per_head_tuple():
    pt = ground(read_fixture_theory("recurrence.fofd"), parse_structure("domain = {v}. T = {}. R = {}."))
    text = print_prop_theory(pt)
    assert "P(v) <- Q(v)." in text
    assert "Q(v) <- T(v,v) & ((R(v) & P(v)) | Q(v))." in text


def read_fixture_theory(name):
    return parse_theory(read_fixture(name))


def test_single_vertex_self_loop():
    # one R-state with a self-loop: simplification leaves P(v) <- Q(v), Q(v) <- P(v) | Q(v)
    s = parse_structure("domain = {v}. T = {(v, v)}. R = {v}.")
    pt = ground(read_fixture_theory("recurrence.fofd"), s, simplify=True)
    assert print_prop_theory(pt) == "GFD {\n  P(v) <- Q(v).\n  LFD {\n    Q(v) <- P(v) | Q(v).\n  }\n}\n"
    (m,) = prop_enumerate_models(pt)
    assert {pt.atoms.name(i) for i in m} == {"P(v)", "Q(v)"}


def test_frame_relations_become_unit_literals():
    s = parse_structure("domain = {v}. T = {}. R = {v}.")
    pt = ground(read_fixture_theory("recurrence.fofd"), s)
    text = print_prop_theory(pt)
    assert "~T(v,v)." in text and "R(v)." in text


def test_label_constants_ground_defined_atoms_to_false():
    theory = parse_theory("LFD { !x: P(x) <- L(x, a). } ?x: P(x) & L(x, a).")
    s = parse_structure("domain = {s}. const a. L = {(s, a)}.")
    pt = ground(theory, s, simplify=True)
    (m,) = prop_enumerate_models(pt)
    assert {pt.atoms.name(i) for i in m} == {"P(s)"}


def test_unknown_constant():
    with pytest.raises(GroundingError):
        ground(parse_theory("P(c)."), Structure(("1",)))


# ------------------------------------------------------------------ DefNF


def test_prop_nnf():
    a, b = PAtom(1), PAtom(2)
    assert prop_nnf(PNot(PAnd((a, PNot(b))))) == POr((PNot(a), b))
    assert prop_nnf(PImp(a, b)) == POr((PNot(a), b))
    assert prop_nnf(PIff(a, b)) == POr((PAnd((a, b)), PAnd((PNot(a), PNot(b)))))
    assert prop_nnf(PNot(PConst(True))) == PConst(False)


def test_defnf_names_complex_subformulas():
    pt = ground(parse_theory("LFD { p <- (a & q) | (b & ~c). q <- a. }"), UNIT)
    d = theory_to_defnf(pt)
    rules = {r.head: r for r in d.definitions[0].rules}
    top = rules[pt.atoms.index[("p", ())]]
    assert not top.conj and len(top.lits) == 2
    for aux in top.lits:
        assert d.atoms.origin(aux) == "aux" and rules[aux].conj
    assert all(isinstance(r, DefNFRule) for r in d.definitions[0].all_rules())


def test_defnf_keeps_aux_in_the_node_of_their_rule():
    pt = ground(parse_theory("LFD { p <- a. GFD { q <- (q & a) | b. } }"), UNIT)
    d = theory_to_defnf(pt).definitions[0]
    assert len(d.rules) == 1 and len(d.subdefs[0].rules) == 2


def test_defnf_shares_repeated_subformulas():
    pt = ground(parse_theory("LFD { p <- (a & b) | c. q <- (a & b) | d. }"), UNIT)
    d = theory_to_defnf(pt)
    assert len(d.atoms) == len(pt.atoms) + 1


def test_defnf_rejects_negated_defined_atom():
    pt = ground(parse_theory("LFD { p <- ~q. q <- a. }", check=False), UNIT)
    with pytest.raises(GroundingError):
        theory_to_defnf(pt)


def test_defnf_constant_bodies():
    pt = ground(parse_theory("LFD { p <- true. q <- false. }"), UNIT)
    rules = theory_to_defnf(pt).definitions[0].rules
    assert [(r.conj, r.lits) for r in rules] == [(True, ()), (False, ())]


def test_defnf_preserves_projected_models():
    rng = random.Random(41)
    checked = 0
    while checked < 150:
        gen = FOGen(rng, rng.randint(1, 2), max_atoms=10)
        theory = gen.theory()
        pt = ground(theory, Structure(gen.domain))
        if len(pt.atoms) > 10:
            continue
        d = theory_to_defnf(pt)
        n_aux = len(d.atoms) - len(pt.atoms)
        # at most one auxiliary atom per connective occurrence
        assert n_aux <= sum(node_count(r.formula) for dd in pt.definitions for r in dd.all_rules())
        before = prop_models_as_atoms(pt, prop_enumerate_models(pt))
        after = prop_models_as_atoms(d, prop_enumerate_models(d, guard=24 + n_aux))
        assert before == after
        checked += 1


def test_grounding_preserves_models_small():
    rng = random.Random(43)
    checked = 0
    while checked < 60:
        gen = FOGen(rng, rng.randint(1, 2), max_atoms=10)
        theory = gen.theory()
        try:
            fo = enumerate_models(theory, Structure(gen.domain), guard=10)
        except GuardExceeded:
            continue
        pt = ground(theory, Structure(gen.domain))
        prop = prop_models_as_atoms(pt, prop_enumerate_models(pt))
        table = {pt.atoms.key(i) for i in pt.atoms.original_ids()}
        assert {frozenset(a for a in m.true_atoms() if a in table) for m in fo} == prop
        checked += 1


def test_simplify_agrees_with_unit_literals():
    rng = random.Random(47)
    for _ in range(80):
        gen = FOGen(rng, 2, max_atoms=10)
        theory = gen.theory()
        frame = gen.frame(theory)
        plain, folded = ground(theory, frame), ground(theory, frame, simplify=True)
        if len(plain.atoms) > 14:
            continue
        a = prop_models_as_atoms(plain, prop_enumerate_models(plain))
        b = prop_models_as_atoms(folded, prop_enumerate_models(folded))
        kept = {folded.atoms.key(i) for i in folded.atoms.original_ids()}
        assert {m & kept for m in a} == b


def test_printer_is_deterministic():
    s = parse_structure(read_fixture("ring6.struct"))
    t = read_fixture_theory("fairness.fofd")
    assert print_prop_theory(ground(t, s)) == print_prop_theory(ground(t, s))
