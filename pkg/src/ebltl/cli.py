"""Command-line front end.

One subcommand per concept: parse, explore, po (pair obligations),
strategy, mc (model check), beta (dependence), translate, gf (recurrent
origin rule), preserve (preservation rule), oracle (differential run).

Exit codes: 0 everything passed / property holds; 1 a property, obligation
or strategy rule failed (witnesses are reported); 2 a certificate was
blocked by a failed hypothesis; 3 usage, parse or typecheck error;
4 a configured bound was exhausted; 70 an internal cross-check failed.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .errors import (
    ChainError, EbltlError, EnumerationBudgetError, ExplorationLimitError,
    InvariantViolation, ParseError, RenamingError, ToolkitBug, TypecheckError,
)
from .formulas import Formula, formula_to_text, parse_formula, parse_property_file
from .ltl import model_check
from .machine_ast import machine_to_text
from .machine_parser import parse_machine_file
from .oracle import OracleBounds, corpus_root, cross_validate, load_corpus
from .preserve import apply_lemma_gf, apply_preservation, check_beta_dependent
from .refine import (
    check_chain_pairs, check_refinement_pair, check_strategy, check_theorem1,
    compose_renamings, explore_chain, load_chain,
)
from .semantics import ExploreLimits, check_deadlock_free, check_invariant, explore

OK, FAILURE, BLOCKED, USAGE, EXHAUSTED, INTERNAL = 0, 1, 2, 3, 4, 70


class _Reporter:
    def __init__(self, command: str, as_json: bool):
        self.command = command
        self.as_json = as_json
        self.lines: list[str] = []
        self.result: dict = {}

    def say(self, text: str):
        self.lines.append(text)

    def emit(self, exit_code: int) -> int:
        if self.as_json:
            envelope = {
                "tool": "ebltl",
                "version": __version__,
                "command": self.command,
                "exit": exit_code,
                "result": self.result,
            }
            sys.stdout.write(json.dumps(envelope, indent=2, sort_keys=True) + "\n")
        else:
            for line in self.lines:
                sys.stdout.write(line + "\n")
        return exit_code


def _limits(args) -> ExploreLimits:
    return ExploreLimits(max_states=args.bound_states)


def _overrides(args) -> dict[str, int]:
    out: dict[str, int] = {}
    for item in getattr(args, "overrides", []):
        name, eq, value = item.partition("=")
        if not eq or not value.lstrip("-").isdigit():
            raise EbltlError(f"bad --set argument {item!r}, expected NAME=INT")
        out[name] = int(value)
    return out


def _resolve_props(value: str, anchor: Path | None) -> dict[str, Formula]:
    """A property argument is a formula, @file, or a name defined in the
    props.ltl next to the chain/machine it is used with."""
    if value.startswith("@"):
        path = Path(value[1:])
        return parse_property_file(path.read_text(encoding="utf-8"))
    try:
        return {"prop": parse_formula(value)}
    except ParseError:
        if anchor is not None:
            table = anchor if anchor.is_file() else anchor / "props.ltl"
            if table.name != "props.ltl":
                table = table.parent / "props.ltl"
            if table.exists():
                named = parse_property_file(table.read_text(encoding="utf-8"))
                if value in named:
                    return {value: named[value]}
        raise


def _cmd_parse(args, rep: _Reporter) -> int:
    machine = parse_machine_file(args.machine, _overrides(args))
    rep.say(f"machine {machine.name}: {len(machine.sym.var_names)} variable(s), "
            f"{len(machine.events)} event(s)")
    rep.say(f"alphabet: {', '.join(machine.alphabet())}")
    rep.result = {
        "machine": machine.name,
        "refines": machine.refines,
        "variables": list(machine.sym.var_names),
        "events": [
            {"name": e.name, "status": e.effective_status, "refines": e.refines}
            for e in machine.events
        ],
        "normalized": machine_to_text(machine),
    }
    return OK


def _cmd_explore(args, rep: _Reporter) -> int:
    machine = parse_machine_file(args.machine, _overrides(args))
    graph = explore(machine, _limits(args))
    inv = check_invariant(graph)
    dead = check_deadlock_free(graph)
    rep.say(f"{machine.name}: {len(graph.states)} state(s), {len(graph.edges)} "
            f"edge(s), {len(graph.deadlocks)} deadlock(s)")
    rep.say(f"invariant: {'holds' if inv.holds else 'violated'}")
    if args.verbose:
        for i in range(len(graph.states)):
            rep.say(f"  state {i}: {json.dumps(graph.state_json(i), sort_keys=True)}")
    if not dead.holds:
        rep.say(f"deadlocked state {dead.witness_state} reached by "
                f"{', '.join(dead.witness_path) or '(initial)'}")
    if args.format == "edgelist":
        rep.lines = [graph.edge_list_text().rstrip("\n")]
    elif args.format == "graph":
        rep.lines = [json.dumps(graph.to_json_dict(), indent=2, sort_keys=True)]
    rep.result = {
        "graph": graph.to_json_dict(),
        "invariant": inv.to_json_dict(),
        "deadlock_free": dead.to_json_dict(),
    }
    return OK


def _cmd_po(args, rep: _Reporter) -> int:
    chain = load_chain(args.chain, _overrides(args))
    limits = _limits(args)
    if args.step is not None:
        if not 0 <= args.step < len(chain.machines) - 1:
            raise EbltlError(f"step {args.step} out of range")
        reports = [check_refinement_pair(chain.machines[args.step],
                                         chain.machines[args.step + 1],
                                         chain.links[args.step], limits)]
    else:
        reports = check_chain_pairs(chain, limits)
    ok = all(r.ok for r in reports)
    for r in reports:
        status = "pass" if r.ok else f"FAIL ({', '.join(r.failed())})"
        rep.say(f"{r.abstract} -> {r.concrete}: {status}")
        for name in r.failed():
            shown = r.results[name].witnesses
            if not args.verbose:
                shown = shown[:1]
            for w in shown:
                rep.say(f"  {name} witness: {json.dumps(w, sort_keys=True)}")
    rep.result = {"pairs": [r.to_json_dict() for r in reports], "ok": ok}
    return OK if ok else FAILURE


def _cmd_strategy(args, rep: _Reporter) -> int:
    chain = load_chain(args.chain, _overrides(args))
    report = check_strategy(chain)
    names = [m.name for m in chain.machines]
    for i, name in enumerate(names):
        rep.say(f"{name}: ordinary={', '.join(report.ordinary[i]) or '-'}"
                f" anticipated={', '.join(report.anticipated[i]) or '-'}"
                f" convergent={', '.join(report.convergent[i]) or '-'}")
    if report.ok:
        rep.say("strategy: all six rules hold")
    for v in report.violations:
        rep.say(f"rule {v.rule} violated at {v.machine}.{v.event}: {v.message}")
    rep.result = {"machines": names, **report.to_json_dict()}
    return OK if report.ok else FAILURE


def _cmd_mc(args, rep: _Reporter) -> int:
    machine = parse_machine_file(args.machine, _overrides(args))
    graph = explore(machine, _limits(args))
    props = _resolve_props(args.prop, Path(args.machine))
    results = {}
    ok = True
    for name in sorted(props):
        verdict = model_check(graph, props[name])
        results[name] = {"formula": formula_to_text(props[name]),
                         **verdict.to_json_dict()}
        if verdict.holds:
            rep.say(f"{machine.name} satisfies {name}: {formula_to_text(props[name])}")
        else:
            ok = False
            rep.say(f"{machine.name} FAILS {name}: {formula_to_text(props[name])}")
            rep.say(f"  counterexample: {verdict.counterexample.render()}")
    rep.result = {"machine": machine.name, "properties": results, "ok": ok}
    return OK if ok else FAILURE


def _cmd_beta(args, rep: _Reporter) -> int:
    props = _resolve_props(args.prop, Path(args.chain) if args.chain else None)
    ((name, phi),) = props.items()
    from .ltl import alphabet as formula_alphabet
    beta = set(args.beta.split(",")) if args.beta else set(formula_alphabet(phi))
    sigma = set(args.sigma.split(",")) if args.sigma else set(beta)
    verdict = check_beta_dependent(phi, beta, sigma,
                                   prefix_bound=args.lasso_prefix,
                                   cycle_bound=args.lasso_cycle)
    rep.say(f"{name}: {verdict.status} ({verdict.method})")
    if verdict.witness is not None:
        rep.say(f"  witness: {verdict.witness.render()}")
    rep.result = {"property": formula_to_text(phi), "beta": sorted(beta),
                  **verdict.to_json_dict()}
    if verdict.status == "certified":
        return OK
    return FAILURE if verdict.status == "refuted" else EXHAUSTED


def _cmd_translate(args, rep: _Reporter) -> int:
    chain = load_chain(args.chain, _overrides(args))
    props = _resolve_props(args.prop, Path(args.chain))
    ((name, phi),) = props.items()
    from .preserve import translate_formula
    g = compose_renamings(chain, args.at + 1)
    out = translate_formula(phi, g)
    rep.say(formula_to_text(out))
    rep.result = {"property": formula_to_text(phi), "level": args.at,
                  "translated": formula_to_text(out),
                  "renaming": g.to_json_dict()}
    return OK


def _cmd_gf(args, rep: _Reporter) -> int:
    chain = load_chain(args.chain, _overrides(args))
    graphs = explore_chain(chain, _limits(args))
    cert = apply_lemma_gf(chain, graphs)
    return _report_certificate(cert, rep)


def _cmd_preserve(args, rep: _Reporter) -> int:
    chain = load_chain(args.chain, _overrides(args))
    graphs = explore_chain(chain, _limits(args))
    props = _resolve_props(args.prop, Path(args.chain))
    ((name, phi),) = props.items()
    beta = set(args.beta.split(",")) if args.beta else None
    cert = apply_preservation(chain, args.at, phi, beta, graphs,
                              prefix_bound=args.lasso_prefix,
                              cycle_bound=args.lasso_cycle,
                              accept_unknown_dependence=args.accept_unknown_dependence)
    return _report_certificate(cert, rep)


def _report_certificate(cert, rep: _Reporter) -> int:
    for h in cert.hypotheses:
        rep.say(f"[{'ok' if h.passed else 'FAILED'}] {h.name}: {h.detail}")
    if cert.asserted:
        rep.say(f"certified (rule {cert.lemma}): {cert.machines[-1]} satisfies "
                f"{formula_to_text(cert.conclusion)}")
        rep.say("cross-validation: model checker agrees")
    else:
        rep.say("blocked: " + "; ".join(cert.failed_hypotheses()))
    rep.result = cert.to_json_dict()
    return OK if cert.asserted else BLOCKED


def _cmd_theorem1(args, rep: _Reporter) -> int:
    chain = load_chain(args.chain, _overrides(args))
    graphs = explore_chain(chain, _limits(args))
    report = check_theorem1(chain, graphs[-1], _limits(args))
    rep.say(f"C* = {', '.join(report.c_star) or '-'}")
    rep.say(f"O* = {', '.join(report.o_star) or '-'}")
    rep.say(f"chain obligations and strategy: "
            f"{'pass' if report.certified else 'FAIL'}")
    rep.say(f"direct cycle analysis: "
            f"{'no divergent cycle' if report.direct.holds else 'divergent cycle found'}")
    if report.direct.witness is not None:
        rep.say(f"  witness: {report.direct.witness.render()}")
    rep.result = report.to_json_dict()
    return OK if (report.certified and report.direct.holds) else FAILURE


def _cmd_oracle(args, rep: _Reporter) -> int:
    root = Path(args.corpus) if args.corpus else corpus_root()
    entries = load_corpus(root)
    bounds = OracleBounds(prefix=args.lasso_prefix, cycle=args.lasso_cycle)
    report = cross_validate(entries, random_pairs=args.random, seed=args.seed,
                            bounds=bounds)
    for row in report.rows:
        if not row.agree:
            rep.say(f"DISAGREE {row.subject} {row.prop}: main={row.main_holds} "
                    f"oracle={row.oracle_holds} expected={row.expected} {row.note}")
    rep.say(f"{len(report.rows)} comparison(s), "
            f"{len(report.disagreements)} disagreement(s)")
    rep.result = report.to_json_dict()
    return OK if report.ok else FAILURE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ebltl",
        description="Bounded refinement and event-LTL checking for machine "
                    "specifications")
    parser.add_argument("--version", action="version", version=f"ebltl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, chain=False, machine=False, prop=False):
        p.add_argument("--json", action="store_true", help="emit a JSON report")
        p.add_argument("--verbose", action="store_true",
                       help="include full witness listings in text reports")
        p.add_argument("--bound-states", type=int, default=100_000,
                       help="state exploration limit")
        p.add_argument("--lasso-prefix", type=int, default=4, metavar="P")
        p.add_argument("--lasso-cycle", type=int, default=4, metavar="Q")
        p.add_argument("--set", action="append", default=[], metavar="NAME=INT",
                       dest="overrides",
                       help="override a declared constant (repeatable; names "
                            "a machine does not declare are ignored)")
        if chain:
            p.add_argument("--chain", required=True, help="chain manifest (JSON)")
        if machine:
            p.add_argument("machine", help="machine source file (.eb)")
        if prop:
            p.add_argument("--prop", required=True,
                           help="formula, @file, or a name from the sibling props.ltl")

    p = sub.add_parser("parse", help="parse and typecheck a machine")
    common(p, machine=True)
    p.set_defaults(func=_cmd_parse)

    p = sub.add_parser("explore", help="build the reachable state graph")
    common(p, machine=True)
    p.add_argument("--format", choices=["summary", "graph", "edgelist"],
                   default="summary")
    p.set_defaults(func=_cmd_explore)

    p = sub.add_parser("po", help="check refinement obligations of a chain")
    common(p, chain=True)
    p.add_argument("--step", type=int, default=None,
                   help="check one step only (0-based)")
    p.set_defaults(func=_cmd_po)

    p = sub.add_parser("strategy", help="check the development-strategy rules")
    common(p, chain=True)
    p.set_defaults(func=_cmd_strategy)

    p = sub.add_parser("mc", help="model check properties on a machine")
    common(p, machine=True, prop=True)
    p.set_defaults(func=_cmd_mc)

    p = sub.add_parser("beta", help="check projection-insensitivity of a property")
    common(p, prop=True)
    p.add_argument("--beta", default=None, help="comma-separated event set")
    p.add_argument("--sigma", default=None,
                   help="ambient alphabet for the bounded search")
    p.add_argument("--chain", default=None,
                   help="optional chain manifest used to resolve property names")
    p.set_defaults(func=_cmd_beta)

    p = sub.add_parser("translate", help="translate a property through the "
                                         "chain's composed renaming")
    common(p, chain=True, prop=True)
    p.add_argument("--at", type=int, required=True,
                   help="level the property is stated at (0-based)")
    p.set_defaults(func=_cmd_translate)

    p = sub.add_parser("gf", help="certify recurrence of the initial machine's events")
    common(p, chain=True)
    p.set_defaults(func=_cmd_gf)

    p = sub.add_parser("preserve", help="carry a property to the final machine")
    common(p, chain=True, prop=True)
    p.add_argument("--at", type=int, required=True,
                   help="level the property is established at (0-based)")
    p.add_argument("--beta", default=None, help="comma-separated event set "
                   "(defaults to the property's alphabet)")
    p.add_argument("--accept-unknown-dependence", action="store_true",
                   help="treat an unrefuted bounded dependence check as "
                        "acceptable (recorded in the certificate)")
    p.set_defaults(func=_cmd_preserve)

    p = sub.add_parser("theorem1", help="divergence freedom of the final machine")
    common(p, chain=True)
    p.set_defaults(func=_cmd_theorem1)

    p = sub.add_parser("oracle", help="differential run against the brute-force oracle")
    common(p)
    p.add_argument("--corpus", default=None, help="corpus root override")
    p.add_argument("--random", type=int, default=0,
                   help="additional random (graph, formula) pairs")
    p.add_argument("--seed", type=int, default=20240)
    p.set_defaults(func=_cmd_oracle)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    rep = _Reporter(args.command, getattr(args, "json", False))
    try:
        code = args.func(args, rep)
    except (ParseError, TypecheckError, ChainError, RenamingError) as exc:
        rep.say(f"error: {exc}")
        rep.result = {"error": str(exc)}
        return rep.emit(USAGE)
    except FileNotFoundError as exc:
        rep.say(f"error: {exc}")
        rep.result = {"error": str(exc)}
        return rep.emit(USAGE)
    except InvariantViolation as exc:
        rep.say(f"invariant violation: {exc}")
        rep.result = {"error": str(exc), "kind": "invariant",
                      "path": list(exc.path)}
        return rep.emit(FAILURE)
    except (ExplorationLimitError, EnumerationBudgetError) as exc:
        rep.say(f"bound exhausted: {exc}")
        rep.result = {"error": str(exc), "kind": "bound"}
        return rep.emit(EXHAUSTED)
    except ToolkitBug as exc:
        rep.say(f"internal cross-check failed: {exc}")
        rep.result = {"error": str(exc), "kind": "internal"}
        return rep.emit(INTERNAL)
    except EbltlError as exc:
        rep.say(f"error: {exc}")
        rep.result = {"error": str(exc)}
        return rep.emit(USAGE)
    return rep.emit(code)


if __name__ == "__main__":
    sys.exit(main())
