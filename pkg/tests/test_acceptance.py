"""Acceptance suite: ten end-to-end criteria, one test each.

Every test prints a single `ACCEPTANCE n (<label>): PASS` line when its
assertions went through (run with `pytest -s tests/test_acceptance.py` to
see them stream).  Failures show up as ordinary pytest failures.
"""
from __future__ import annotations

import json
import random
import subprocess
import sys
import time

from ebltl.formulas import parse_formula
from ebltl.ltl import alphabet, holds_on_trace, model_check
from ebltl.machine_parser import parse_machine_file
from ebltl.oracle import (
    OracleBounds, cross_validate, load_corpus, trace_realizable,
    random_formula,
)
from ebltl.preserve import (
    apply_lemma_gf, apply_preservation, check_beta_dependent,
    complete_renaming, map_trace, translate_formula, _bounded_traces,
)
from ebltl.refine import (
    ChainLink, build_chain, check_chain_pairs, check_refinement_pair,
    check_strategy, check_theorem1, derive_renaming, load_chain,
)
from ebltl.semantics import explore
from ebltl.traces import lasso, project_trace, same_word
from tests.conftest import MUTANT_DIR, VM_DIR


def _ok(number: int, label: str):
    print(f"ACCEPTANCE {number} ({label}): PASS")


def test_criterion_1_strategy_and_labels(vm1_chain):
    report = check_strategy(vm1_chain)
    assert report.ok
    assert report.convergent == [(), ("refund",), ("refill",), ("pay",)]
    truncated = load_chain(VM_DIR / "chain-to-vm3.json")
    tr = check_strategy(truncated)
    assert [(v.rule, v.event) for v in tr.violations] == [(6, "pay")]
    _ok(1, "strategy rules and label sets")


def test_criterion_2_obligations_and_mutations(vm_chain):
    for report in check_chain_pairs(vm_chain):
        assert report.ok, f"{report.abstract}->{report.concrete}"
    spec = json.loads((MUTANT_DIR / "mutants.json").read_text())
    for entry in spec["pair_mutants"]:
        abstract = parse_machine_file(MUTANT_DIR / entry["abstract"])
        concrete = parse_machine_file(MUTANT_DIR / entry["file"])
        link = ChainLink(derive_renaming(abstract, concrete, None),
                         concrete.linking)
        report = check_refinement_pair(abstract, concrete, link)
        assert report.failed() == [entry["expect_po"]], entry["name"]
    for entry in spec["chain_mutants"]:
        machines = [parse_machine_file(MUTANT_DIR / p) for p in entry["chain"]]
        chain = build_chain(entry["name"], machines)
        strat = check_strategy(chain)
        assert sorted({v.rule for v in strat.violations}) == [entry["expect_rule"]]
        assert all(r.ok for r in check_chain_pairs(chain))
    _ok(2, "refinement obligations, six diagonal mutations")


VERDICTS = [
    ("VM1", "phi1", True), ("VM1", "phi2", True), ("VM1", "phi3", True),
    ("VM1", "phi4", False), ("VM1", "phi5", False),
    ("VM2", "phi7", True), ("VM2", "phi6", False),
    ("VM2", "phi1", False), ("VM2", "phi2", False), ("VM2", "phi3", False),
    ("VM4", "phi1", True), ("VM4", "phi2", True), ("VM4", "phi3", True),
    ("VM4", "phi6", True), ("VM4", "phi7", True),
]


def test_criterion_3_verdict_table(vm_graphs, vm_props):
    for machine, prop, expected in VERDICTS:
        verdict = model_check(vm_graphs[machine], vm_props[prop])
        assert verdict.holds == expected, (machine, prop)
        if not expected:
            cex = verdict.counterexample
            assert cex is not None
            assert not holds_on_trace(cex, vm_props[prop])
            assert trace_realizable(vm_graphs[machine], cex)
    _ok(3, "temporal verdict table with replayed counterexamples")


def test_criterion_4_recurrent_origin_rule(vm_chain, vm_chain_graphs,
                                           vm1_chain, vm1_chain_graphs):
    want = parse_formula("G F ([dispenseBiscuit] | [dispenseChoc] | "
                         "[selectBiscuit] | [selectChoc])")
    cert1 = apply_lemma_gf(vm1_chain, vm1_chain_graphs)
    assert cert1.asserted and cert1.lemma == 1
    assert cert1.conclusion == want
    assert cert1.cross_validation is not None and cert1.cross_validation.holds
    cert3 = apply_lemma_gf(vm_chain, vm_chain_graphs)
    assert cert3.asserted and cert3.lemma == 3
    assert cert3.conclusion == want
    assert cert3.cross_validation.holds
    _ok(4, "recurrence of initial events, with and without renaming")


def test_criterion_5_preservation_rule(vm_chain, vm_chain_graphs, vm_props):
    for level, prop in [(1, "phi2"), (1, "phi3"), (2, "phi7")]:
        cert = apply_preservation(vm_chain, level, vm_props[prop], None,
                                  vm_chain_graphs)
        assert cert.asserted and cert.conclusion == vm_props[prop], prop
        assert cert.cross_validation.holds
    trans_cert = apply_preservation(vm_chain, 0,
                                    vm_props["select_leads_to_dispense"],
                                    None, vm_chain_graphs)
    assert trans_cert.asserted
    assert trans_cert.conclusion == parse_formula(
        "G(([selectBiscuit] | [selectChoc]) => "
        "F([dispenseBiscuit] | [dispenseChoc]))")
    blocked = apply_preservation(vm_chain, 1, vm_props["phi4"], None,
                                 vm_chain_graphs)
    assert not blocked.asserted and blocked.conclusion is None
    failed = blocked.failed_hypotheses()
    assert len(failed) == 1 and failed[0].startswith("VM1 satisfies")
    _ok(5, "preservation certificates and the blocked application")


def test_criterion_6_divergence_freedom(vm1_chain, vm1_chain_graphs):
    report = check_theorem1(vm1_chain, vm1_chain_graphs[-1])
    assert report.certified and report.direct.holds and report.consistent
    spec = json.loads((MUTANT_DIR / "mutants.json").read_text())["divergent_mutant"]
    machines = [parse_machine_file(MUTANT_DIR / p) for p in spec["chain"]]
    chain = build_chain(spec["name"], machines)
    graph_n = explore(machines[-1])
    mutant_report = check_theorem1(chain, graph_n)
    assert not mutant_report.certified
    assert not mutant_report.direct.holds
    witness = mutant_report.direct.witness
    assert witness is not None and witness.is_lasso
    assert trace_realizable(graph_n, witness)
    assert set(witness.cycle) & set(mutant_report.c_star)
    assert not set(witness.cycle) & set(mutant_report.o_star)
    _ok(6, "divergence freedom and the divergent mutant")


def test_criterion_7_projection_insensitivity(vm_graphs):
    gf_pay = parse_formula("G F [pay]")
    verdict = check_beta_dependent(gf_pay, {"pay"}, {"pay", "refill"})
    assert verdict.certified

    neg = parse_formula("!G [pay]")
    refuted = check_beta_dependent(neg, {"pay"}, {"pay", "refill"})
    assert refuted.status == "refuted"
    w = refuted.witness
    assert holds_on_trace(w, neg) != holds_on_trace(project_trace(w, {"pay"}), neg)
    reference = lasso(("pay", "refill"), ("pay",))
    assert same_word(project_trace(w, {"pay"}), project_trace(reference, {"pay"}))

    originals = parse_formula("G([selectBiscuit] | [selectChoc] | "
                              "[dispenseBiscuit] | [dispenseChoc])")
    refuted2 = check_beta_dependent(originals, alphabet(originals),
                                    set(vm_graphs["VM4"].alphabet))
    assert refuted2.status == "refuted"
    assert set(refuted2.witness.prefix + refuted2.witness.cycle) - alphabet(originals)
    _ok(7, "projection insensitivity verdicts")


def test_criterion_8_appendix_properties():
    rng = random.Random(88)

    def rand_renaming():
        abstract = [f"A{i}" for i in range(rng.randint(1, 3))]
        concrete = [f"c{i}" for i in range(rng.randint(len(abstract), 5))]
        mapping = {concrete[i]: a for i, a in enumerate(abstract)}
        for c in concrete[len(abstract):]:
            if rng.random() < 0.6:
                mapping[c] = rng.choice(abstract)
        from ebltl.refine import RenamingMap
        return RenamingMap.make(mapping, concrete, abstract)

    def rand_trace(events):
        prefix = tuple(rng.choice(events) for _ in range(rng.randint(0, 3)))
        if rng.random() < 0.3:
            from ebltl.traces import Trace, FINITE
            return Trace(FINITE, prefix)
        return lasso(prefix, tuple(rng.choice(events)
                                   for _ in range(rng.randint(1, 3))))

    # completion leaves the translation of range-only formulas untouched
    for _ in range(300):
        h = rand_renaming()
        ran = sorted({a for _, a in h.forward})
        phi = random_formula(rng, ran, rng.randint(0, 4))
        assert translate_formula(phi, h) == \
            translate_formula(phi, complete_renaming(h))

    # trace/translation equivalence: 1000 randomized trials, zero failures
    failures = 0
    for _ in range(1000):
        h = rand_renaming()
        ran = sorted({a for _, a in h.forward})
        phi = random_formula(rng, ran, rng.randint(0, 4))
        u = rand_trace(sorted(h.domain()))
        if holds_on_trace(u, translate_formula(phi, h)) != \
                holds_on_trace(map_trace(h, u), phi):
            failures += 1
    assert failures == 0

    # translated schema-certified formulas stay unrefuted for the preimage set
    from ebltl.preserve import _schema_certified
    shapes = ["G F [A0]", "F [A0]", "G([A0] => F [A0])", "F G ![A0]"]
    for text in shapes:
        phi = parse_formula(text)
        assert _schema_certified(phi)
        for _ in range(30):
            h = rand_renaming()
            out = translate_formula(phi, h)
            pre = h.preimage_set(alphabet(phi) & frozenset(a for _, a in h.forward))
            sigma = tuple(sorted(h.domain() | frozenset(h.concrete_alphabet)))
            for u in _bounded_traces(sigma, 2, 2):
                assert holds_on_trace(u, out) == \
                    holds_on_trace(project_trace(u, pre), out)
    _ok(8, "completion, trace mapping and translated-dependence properties")


def test_criterion_9_differential_oracle():
    start = time.time()
    report = cross_validate(load_corpus(), random_pairs=500, seed=424242,
                            max_states=50, bounds=OracleBounds())
    elapsed = time.time() - start
    assert report.ok, [r.to_json_dict() for r in report.disagreements]
    assert len(report.rows) >= 500 + 25
    assert elapsed < 60, f"differential run took {elapsed:.1f}s"
    _ok(9, f"differential oracle, {len(report.rows)} comparisons in {elapsed:.1f}s")


def test_criterion_10_deterministic_reports():
    commands = [
        ("mc", str(VM_DIR / "vm4.eb"), "--prop", "phi2"),
        ("explore", str(VM_DIR / "vm4.eb")),
        ("po", "--chain", str(VM_DIR / "chain.json")),
        ("strategy", "--chain", str(VM_DIR / "chain-vm1.json")),
        ("gf", "--chain", str(VM_DIR / "chain.json")),
        ("preserve", "--chain", str(VM_DIR / "chain.json"), "--at", "1",
         "--prop", "phi2"),
        ("theorem1", "--chain", str(VM_DIR / "chain-vm1.json")),
        ("oracle", "--random", "50", "--seed", "7"),
    ]
    for argv in commands:
        runs = [
            subprocess.run([sys.executable, "-m", "ebltl.cli", *argv, "--json"],
                           capture_output=True, text=True)
            for _ in range(2)
        ]
        assert runs[0].stdout == runs[1].stdout, argv
        assert runs[0].returncode == runs[1].returncode
    _ok(10, "byte-identical reports across consecutive runs")
