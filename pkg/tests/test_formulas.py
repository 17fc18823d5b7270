"""Property language: parsing, printing, alphabets."""
from __future__ import annotations

import random

import pytest

from ebltl.errors import ParseError
from ebltl.formulas import (
    Atom, Finally, Globally, Not, Or, TRUE, formula_to_text, parse_formula,
    parse_property_file,
)
from ebltl.ltl import alphabet
from ebltl.oracle import random_formula


def test_implication_desugars():
    f = parse_formula("G([selectChoc] => F [dispenseChoc])")
    assert f == Globally(Or(Not(Atom("selectChoc")), Finally(Atom("dispenseChoc"))))


def test_true_parses_to_constant():
    assert parse_formula("true") == TRUE


def test_phi2_shape():
    f = parse_formula(
        "(!(G F [selectBiscuit])) => G([selectChoc] => F [dispenseChoc])")
    inner = Globally(Or(Not(Atom("selectChoc")), Finally(Atom("dispenseChoc"))))
    assert f == Or(Not(Not(Globally(Finally(Atom("selectBiscuit"))))), inner)


def test_empty_input_rejected():
    with pytest.raises(ParseError, match="empty"):
        parse_formula("   ")


def test_malformed_input_rejected():
    with pytest.raises(ParseError):
        parse_formula("G [x")
    with pytest.raises(ParseError):
        parse_formula("[x] [y]")


def test_until_is_right_associative():
    assert parse_formula("[a] U [b] U [c]") == parse_formula("[a] U ([b] U [c])")


def test_alphabet_of_phi2():
    f = parse_formula(
        "(!(G F [selectBiscuit])) => G([selectChoc] => F [dispenseChoc])")
    assert alphabet(f) == frozenset({"selectBiscuit", "selectChoc", "dispenseChoc"})


def test_alphabet_of_true_is_empty():
    assert alphabet(TRUE) == frozenset()


def test_alphabet_union_over_operators():
    f = parse_formula("G [pay] & F [refill]")
    assert alphabet(f) == frozenset({"pay", "refill"})


def test_random_round_trips():
    rng = random.Random(42)
    for _ in range(500):
        f = random_formula(rng, ["a", "b", "c", "d"], rng.randint(0, 6))
        assert parse_formula(formula_to_text(f)) == f


def test_property_file_names_and_comments():
    table = parse_property_file(
        "# leading comment\n"
        "phi7 = G F [pay]\n"
        "\n"
        "G [idle]   # unlabeled, becomes p1\n")
    assert set(table) == {"phi7", "p1"}
    assert table["phi7"] == Globally(Finally(Atom("pay")))


def test_property_file_rejects_duplicates():
    with pytest.raises(ParseError, match="duplicate property name"):
        parse_property_file("a = true\na = G [x]\n")
