import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from setcoh.logic import (
    Atom,
    AtomBudgetError,
    AtomRef,
    FormulaSyntaxError,
    Implies,
    MissingAssignmentError,
    Not,
    Or,
    atoms_of,
    evaluate,
    format_formula,
    is_satisfiable,
    negate,
    parse_formula,
    realize,
)

P, Q, H = AtomRef("p"), AtomRef("q"), AtomRef("h")


def brute_force_satisfiable(formulas):
    """Independent oracle: enumerate assignments with evaluate()."""
    names = sorted(set().union(*(atoms_of(f) for f in formulas)) if formulas else set())
    for bits in itertools.product([False, True], repeat=len(names)):
        v = dict(zip(names, bits))
        if all(evaluate(f, v) for f in formulas):
            return True
    return not formulas


def test_evaluate_disjunction_of_falses():
    assert evaluate(Or(P, Q), {"p": False, "q": False}) is False


def test_evaluate_vacuous_implication():
    assert evaluate(Implies(P, H), {"p": False, "h": False}) is True


def test_evaluate_negation():
    assert evaluate(Not(P), {"p": True}) is False


def test_evaluate_missing_assignment_names_the_atom():
    with pytest.raises(MissingAssignmentError, match="'q'"):
        evaluate(Or(P, Q), {"p": False})


def test_satisfiability_train_example():
    # "Either the train arrives at 8 AM or it arrives at 9 AM" + both denials.
    assert is_satisfiable([Or(P, Q), Not(P), Not(Q)]) is False


def test_satisfiability_modus_tollens():
    assert is_satisfiable([Implies(P, H), Not(H), Not(P)]) is True


def test_satisfiability_empty_collection():
    assert is_satisfiable([]) is True


def test_atom_budget_exceeded():
    formulas = [AtomRef(f"a{i}") for i in range(25)]
    with pytest.raises(AtomBudgetError, match="25"):
        is_satisfiable(formulas)


def test_atom_budget_boundary_ok():
    formulas = [AtomRef(f"a{i}") for i in range(24)]
    assert is_satisfiable(formulas) is True


def test_negate_atom():
    assert negate(P) == Not(P)


def test_negate_double_negation():
    assert negate(Not(P)) == P


def test_negate_disjunction_not_distributed():
    assert negate(Or(P, H)) == Not(Or(P, H))


def test_negate_involution_on_atoms():
    for f in (P, Not(P)):
        assert negate(negate(f)) == f


formula_strategy = st.deferred(
    lambda: st.one_of(
        st.sampled_from([AtomRef(n) for n in "abcd"]),
        st.builds(Not, formula_strategy),
        st.builds(Or, formula_strategy, formula_strategy),
        st.builds(Implies, formula_strategy, formula_strategy),
    )
)


@settings(max_examples=200, deadline=None)
@given(st.lists(formula_strategy, max_size=5))
def test_oracle_matches_brute_force_enumeration(formulas):
    assert is_satisfiable(formulas) == brute_force_satisfiable(formulas)


@settings(max_examples=100, deadline=None)
@given(formula_strategy, formula_strategy, st.tuples(st.booleans(), st.booleans(), st.booleans(), st.booleans()))
def test_material_implication_equivalence(a, b, bits):
    v = dict(zip("abcd", bits))
    assert evaluate(Implies(a, b), v) == evaluate(Or(Not(a), b), v)


@settings(max_examples=100, deadline=None)
@given(st.lists(formula_strategy, min_size=1, max_size=4))
def test_round_trip_prefix_serialization(formulas):
    for f in formulas:
        assert parse_formula(format_formula(f)) == f


COUPLE_ATOMS = {
    "p": Atom("p", "a couple walk hand in hand down a street",
              "no couple walks hand in hand down a street"),
    "h": Atom("h", "a couple is walking together", "no couple is walking together"),
}


def test_realize_implication_surface():
    text = realize(Implies(P, H), COUPLE_ATOMS)
    assert text == ("If a couple walk hand in hand down a street, "
                    "then a couple is walking together.")


def test_realize_negated_atom_uses_negative_surface():
    assert realize(Not(H), COUPLE_ATOMS) == "No couple is walking together."


def test_realize_disjunction_surface():
    text = realize(Or(P, H), COUPLE_ATOMS)
    assert text == ("Either a couple walk hand in hand down a street, "
                    "or a couple is walking together.")


def test_realize_nested_negation():
    text = realize(Not(Or(P, H)), COUPLE_ATOMS)
    assert text.startswith("It is not the case that either ")


def test_realize_injective_over_small_formula_space():
    base = [P, H, Not(P), Not(H)]
    space = list(base)
    for a, b in itertools.product(base, repeat=2):
        space.append(Or(a, b))
        space.append(Implies(a, b))
    rendered = [realize(f, COUPLE_ATOMS) for f in space]
    assert len(set(rendered)) == len(space)


def test_prefix_notation_shapes():
    assert format_formula(Implies(P, H)) == "(implies p h)"
    assert format_formula(Not(P)) == "(not p)"
    assert format_formula(Or(P, H)) == "(or p h)"
    assert parse_formula("(implies p (not (or a b)))") == Implies(P, Not(Or(AtomRef("a"), AtomRef("b"))))


@pytest.mark.parametrize("bad", ["", "(and p q)", "(not p", ")", "p q", "(or p)"])
def test_parse_rejects_malformed(bad):
    with pytest.raises(FormulaSyntaxError):
        parse_formula(bad)


def test_atom_validation():
    with pytest.raises(ValueError):
        Atom("", "a", "b")
    with pytest.raises(ValueError):
        Atom("x", "same", "same")
    with pytest.raises(ValueError):
        Atom("bad id", "a", "b")
