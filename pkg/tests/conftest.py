from __future__ import annotations

import pytest

from ebltl.machine_parser import parse_machine_file
from ebltl.oracle import corpus_root
from ebltl.refine import explore_chain, load_chain
from ebltl.semantics import explore
from ebltl.formulas import parse_property_file

VM_DIR = corpus_root() / "vm"
LIFT_DIR = corpus_root() / "lift"
MUTANT_DIR = VM_DIR / "mutants"


@pytest.fixture(scope="session")
def vm_machines():
    return {name: parse_machine_file(VM_DIR / f"{name.lower()}.eb")
            for name in ["VM0", "VM1", "VM2", "VM3", "VM4"]}


@pytest.fixture(scope="session")
def vm_graphs(vm_machines):
    return {name: explore(m) for name, m in vm_machines.items()}


@pytest.fixture(scope="session")
def vm_props():
    return parse_property_file((VM_DIR / "props.ltl").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def vm_chain():
    """The full five-level chain (VM0 at level 0)."""
    return load_chain(VM_DIR / "chain.json")


@pytest.fixture(scope="session")
def vm_chain_graphs(vm_chain):
    return explore_chain(vm_chain)


@pytest.fixture(scope="session")
def vm1_chain():
    """The chain starting at VM1, the level-0 convention used for the
    strategy and divergence discussions."""
    return load_chain(VM_DIR / "chain-vm1.json")


@pytest.fixture(scope="session")
def vm1_chain_graphs(vm1_chain):
    return explore_chain(vm1_chain)


@pytest.fixture(scope="session")
def lift_machines():
    return {name: parse_machine_file(LIFT_DIR / f)
            for name, f in [("Lift", "lift.eb"), ("LiftPrime", "lift_prime.eb")]}
