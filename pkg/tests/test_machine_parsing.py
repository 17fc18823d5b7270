"""Machine language: parsing, typechecking, round trips."""
from __future__ import annotations

import pytest

from ebltl.errors import ParseError, TypecheckError
from ebltl.machine_ast import machine_to_text
from ebltl.machine_parser import parse_machine, parse_machine_file
from tests.conftest import VM_DIR

TOY = """
machine Toy
variables
  flag : bool
events
  event init then flag := false end
end
"""


def test_vm1_structure(vm_machines):
    m = vm_machines["VM1"]
    assert m.name == "VM1"
    assert m.alphabet() == ("dispenseBiscuit", "dispenseChoc",
                            "selectBiscuit", "selectChoc")
    assert [e.effective_status for e in m.events] == ["ordinary"] * 4
    assert dict(m.variables)["chosen"].carrier == "ITEM"
    assert m.init.guard is None and m.init.params == ()


def test_minimal_machine_has_no_events():
    m = parse_machine(TOY)
    assert m.events == ()
    assert m.invariant is None and m.variant is None


def test_truncated_source_names_end_of_input():
    source = (VM_DIR / "vm1.eb").read_text()
    truncated = source.rstrip()
    assert truncated.endswith("end")
    truncated = truncated[: truncated.rfind("end")]
    with pytest.raises(ParseError, match="end of input"):
        parse_machine(truncated)


def test_unknown_identifier_rejected():
    bad = TOY.replace("flag := false", "flag := other")
    with pytest.raises(TypecheckError, match="unknown identifier 'other'"):
        parse_machine(bad)


def test_duplicate_event_rejected():
    bad = TOY.replace(
        "event init then flag := false end",
        "event init then flag := false end\n"
        "  event go when flag = false then flag := true end\n"
        "  event go when flag = true then flag := false end")
    with pytest.raises(TypecheckError, match="duplicate event name"):
        parse_machine(bad)


def test_type_mismatch_rejected():
    bad = TOY.replace("flag := false", "flag := 3")
    with pytest.raises(TypecheckError, match="expected bool"):
        parse_machine(bad)


def test_init_must_assign_every_variable():
    bad = TOY.replace("variables\n  flag : bool",
                      "variables\n  flag : bool\n  n : 0..2")
    with pytest.raises(TypecheckError, match="init does not assign n"):
        parse_machine(bad)


def test_parallel_assignments_to_same_target_rejected():
    bad = TOY.replace("flag := false", "flag := false || flag := true")
    with pytest.raises(TypecheckError, match="both write"):
        parse_machine(bad)


def test_variant_requires_anticipated_or_convergent():
    bad = TOY.replace("events", "variant\n  0\nevents")
    with pytest.raises(TypecheckError, match="variant given"):
        parse_machine(bad)


def test_anticipated_event_requires_variant():
    bad = TOY.replace(
        "event init then flag := false end",
        "event init then flag := false end\n"
        "  event tick\n    status anticipated\n    then flag := flag end")
    with pytest.raises(TypecheckError, match="no variant"):
        parse_machine(bad)


def test_abstract_variable_outside_linking_rejected():
    # `stocked` lives in VM3; VM4 may mention it in linking but nowhere else
    source = (VM_DIR / "vm4.eb").read_text()
    bad = source.replace(
        "when chocStock = 0 & biscuitStock = 0",
        "when chocStock = 0 & biscuitStock = 0 & choc notin stocked")
    with pytest.raises(TypecheckError, match="unknown identifier 'stocked'"):
        parse_machine(bad)


def test_empty_range_rejected():
    bad = TOY.replace("flag : bool", "flag : 3..1")
    with pytest.raises(TypecheckError, match="empty integer range"):
        parse_machine(bad)


@pytest.mark.parametrize("name", ["vm0", "vm1", "vm2", "vm3", "vm4"])
def test_round_trip_corpus(name):
    machine = parse_machine_file(VM_DIR / f"{name}.eb")
    again = parse_machine(machine_to_text(machine))
    assert again == machine
    # and printing is a fixpoint
    assert machine_to_text(again) == machine_to_text(machine)


def test_round_trip_keeps_linking_and_variant(vm_machines):
    text = machine_to_text(vm_machines["VM4"])
    assert "linking" in text and "variant" in text
    again = parse_machine(text)
    assert again.linking == vm_machines["VM4"].linking
    assert again.variant == vm_machines["VM4"].variant
