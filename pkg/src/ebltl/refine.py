"""Refinement pairs and chains: proof obligations, development-strategy
rules, renaming composition, and divergence-freedom of convergent events.

Obligations are checked semantically over bounded synchronized state
spaces rather than discharged as proofs: every reachable concrete state is
related to every invariant-satisfying abstract state compatible with the
linking invariant, and the obligations are evaluated over those pairs.
The four obligations are kept independent, mirroring how proof assistants
split them:

  GRD_REF   concrete guard implies the refined event's abstract guard
            (witnessed by some abstract parameter choice);
  INV_REF   every concrete transition is matched by an outcome of the
            abstract event's action relation re-establishing the linking
            invariant (new events must leave the abstract state unchanged,
            and initial states must be linkable to abstract initials);
  FIS_REF   an enabled concrete event has at least one after-state;
  WFD_REF   the concrete variant is a natural number everywhere, strictly
            decreases on convergent transitions and never increases on
            anticipated ones.

Variables declared by both machines of a pair are implicitly equated; the
linking invariant adds the genuinely new relations and is the one place
where abstract-only names may appear.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Optional

from .errors import ChainError, RenamingError, ToolkitBug
from .machine_ast import (
    ANTICIPATED, CONVERGENT, Expr, Machine, ORDINARY,
)
from .machine_parser import parse_expression, parse_machine_file
from .semantics import (
    ExploreLimits, StateGraph, _action_outcomes, _param_domains, eval_expr,
    event_firings, explore, find_path, static_env, value_to_json,
)
from .traces import LASSO, Trace
from .typecheck import link_typecheck

PO_NAMES = ("FIS_REF", "GRD_REF", "INV_REF", "WFD_REF")


# ---------------------------------------------------------------------------
# renaming maps

@dataclass(frozen=True)
class RenamingMap:
    """Partial map from concrete event names to the abstract events they
    refine.  Events outside the domain are the new events."""

    forward: tuple[tuple[str, str], ...]  # sorted (concrete, abstract) pairs
    concrete_alphabet: frozenset[str]
    abstract_alphabet: frozenset[str]

    @staticmethod
    def make(mapping: dict[str, str], concrete_alphabet, abstract_alphabet) -> "RenamingMap":
        concrete_alphabet = frozenset(concrete_alphabet)
        abstract_alphabet = frozenset(abstract_alphabet)
        for conc, abs_ in mapping.items():
            if conc not in concrete_alphabet:
                raise RenamingError(f"{conc!r} is not a concrete event")
            if abs_ not in abstract_alphabet:
                raise RenamingError(f"{conc!r} refines unknown abstract event {abs_!r}")
        return RenamingMap(tuple(sorted(mapping.items())),
                           concrete_alphabet, abstract_alphabet)

    @property
    def mapping(self) -> dict[str, str]:
        return dict(self.forward)

    def apply(self, event: str) -> Optional[str]:
        return self.mapping.get(event)

    def domain(self) -> frozenset[str]:
        return frozenset(c for c, _ in self.forward)

    def new_events(self) -> tuple[str, ...]:
        return tuple(sorted(self.concrete_alphabet - self.domain()))

    def preimage(self, abstract_event: str) -> tuple[str, ...]:
        return tuple(sorted(c for c, a in self.forward if a == abstract_event))

    def preimage_set(self, events) -> tuple[str, ...]:
        target = frozenset(events)
        return tuple(sorted(c for c, a in self.forward if a in target))

    def is_identity(self) -> bool:
        return all(c == a for c, a in self.forward)

    def then(self, step: "RenamingMap") -> "RenamingMap":
        """Sequential composition: apply self first, then `step`.

        self : B -> A and step : A -> Z give B -> Z, undefined wherever
        either stage is undefined.
        """
        mapping = {}
        for conc, mid in self.forward:
            out = step.apply(mid)
            if out is not None:
                mapping[conc] = out
        return RenamingMap(tuple(sorted(mapping.items())),
                           self.concrete_alphabet, step.abstract_alphabet)

    @staticmethod
    def identity(alphabet) -> "RenamingMap":
        alphabet = frozenset(alphabet)
        return RenamingMap(tuple(sorted((e, e) for e in alphabet)), alphabet, alphabet)

    def to_json_dict(self) -> dict:
        return {"map": {c: a for c, a in self.forward},
                "new_events": list(self.new_events())}


# ---------------------------------------------------------------------------
# chains

@dataclass
class ChainLink:
    renaming: RenamingMap
    linking: Optional[Expr]
    linking_text: str = ""


@dataclass
class RefinementChain:
    name: str
    machines: list[Machine]
    links: list[ChainLink]  # links[k] connects machines[k] and machines[k+1]
    paths: list[str] = field(default_factory=list)

    @property
    def final(self) -> Machine:
        return self.machines[-1]

    def level_of(self, machine_name: str) -> int:
        for i, m in enumerate(self.machines):
            if m.name == machine_name:
                return i
        raise ChainError(f"{machine_name!r} is not a machine of chain {self.name!r}")

    def status_sets(self, level: int) -> dict[str, tuple[str, ...]]:
        m = self.machines[level]
        return {status: m.events_with_status(status)
                for status in (ORDINARY, ANTICIPATED, CONVERGENT)}


def derive_renaming(abstract: Machine, concrete: Machine,
                    manifest_map: dict[str, str] | None) -> RenamingMap:
    """Renaming from the concrete machine's refines clauses, overlaid with
    the manifest's map.  Disagreement between the two is an error, as is an
    event with neither a refinement link nor an anticipated/convergent
    status (new events must be labelled)."""
    mapping: dict[str, str] = {}
    for e in concrete.events:
        if e.refines is not None:
            mapping[e.name] = e.refines
    for conc, abs_ in (manifest_map or {}).items():
        if conc in mapping and mapping[conc] != abs_:
            raise ChainError(
                f"manifest maps {conc!r} to {abs_!r} but {concrete.name} "
                f"declares refines {mapping[conc]!r}")
        mapping[conc] = abs_
    abstract_alphabet = frozenset(abstract.alphabet())
    for conc, abs_ in sorted(mapping.items()):
        if abs_ not in abstract_alphabet:
            raise ChainError(
                f"{concrete.name}.{conc} refines {abs_!r}, which is not an "
                f"event of {abstract.name}")
    for e in concrete.events:
        if e.name not in mapping and e.status is None:
            # a new event must say what it is; an explicit (wrong) ordinary
            # label is left for the strategy checker to report as rule 3
            raise ChainError(
                f"{concrete.name}.{e.name} refines nothing and carries no "
                f"status label")
    return RenamingMap.make(mapping, concrete.alphabet(), abstract.alphabet())


def build_chain(name: str, machines: list[Machine],
                manifest_links: list[dict] | None = None,
                paths: list[str] | None = None) -> RefinementChain:
    if not machines:
        raise ChainError("a chain needs at least one machine")
    links: list[ChainLink] = []
    for k in range(len(machines) - 1):
        abstract, concrete = machines[k], machines[k + 1]
        if concrete.refines is not None and concrete.refines != abstract.name:
            raise ChainError(
                f"{concrete.name} declares refines {concrete.refines!r} but "
                f"follows {abstract.name} in chain {name!r}")
        manifest = (manifest_links or [None] * (len(machines) - 1))[k] or {}
        renaming = derive_renaming(abstract, concrete, manifest.get("renaming"))
        if manifest.get("linking") is not None:
            linking_text = manifest["linking"]
            linking = parse_expression(linking_text)
        elif concrete.linking is not None:
            linking = concrete.linking
            linking_text = "(from machine source)"
        else:
            linking = None
            linking_text = "(shared-variable equality)"
        link_typecheck(abstract, concrete, linking)
        links.append(ChainLink(renaming, linking, linking_text))
    return RefinementChain(name=name, machines=list(machines), links=links,
                           paths=paths or [])


def load_chain(path, constant_overrides: dict[str, int] | None = None) -> RefinementChain:
    """Read a chain manifest: ordered machine files, optional per-step
    renaming maps and linking invariant strings."""
    path = Path(path)
    data = json.loads(path.read_text(encoding="utf-8"))
    machine_paths = [path.parent / p for p in data["machines"]]
    machines = [parse_machine_file(p, constant_overrides) for p in machine_paths]
    links = data.get("links")
    if links is not None and len(links) != len(machines) - 1:
        raise ChainError(
            f"chain {path} lists {len(machines)} machines but {len(links)} links")
    return build_chain(data.get("name", path.stem), machines, links,
                       paths=[str(p) for p in machine_paths])


def explore_chain(chain: RefinementChain,
                  limits: ExploreLimits | None = None) -> list[StateGraph]:
    return [explore(m, limits) for m in chain.machines]


def compose_renamings(chain: RefinementChain, i: int) -> RenamingMap:
    """The composite map taking final-machine events down to level i-1.

    Composes the per-step maps from the last one backwards through step i;
    i = n+1 denotes the empty composition, the identity on the final
    alphabet.  An event drops out as soon as one stage is undefined on it.
    """
    n = len(chain.machines) - 1
    if not 1 <= i <= n + 1:
        raise ChainError(f"composition level {i} out of range 1..{n + 1}")
    result = RenamingMap.identity(chain.final.alphabet())
    for j in range(n, i - 1, -1):
        result = result.then(chain.links[j - 1].renaming)
    return result


# ---------------------------------------------------------------------------
# strategy rules

@dataclass
class StrategyViolation:
    rule: int
    machine: str
    event: str
    message: str

    def to_json_dict(self) -> dict:
        return {"rule": self.rule, "machine": self.machine, "event": self.event,
                "message": self.message}


@dataclass
class StrategyReport:
    violations: list[StrategyViolation]
    ordinary: list[tuple[str, ...]]
    anticipated: list[tuple[str, ...]]
    convergent: list[tuple[str, ...]]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json_dict(self) -> dict:
        return {
            "ok": self.ok,
            "violations": [v.to_json_dict() for v in self.violations],
            "ordinary": [list(s) for s in self.ordinary],
            "anticipated": [list(s) for s in self.anticipated],
            "convergent": [list(s) for s in self.convergent],
        }


def check_strategy(chain: RefinementChain) -> StrategyReport:
    """The six development-strategy restrictions; all violations are
    collected, not just the first."""
    violations: list[StrategyViolation] = []
    machines = chain.machines

    def violate(rule: int, machine: Machine, event: str, message: str):
        violations.append(StrategyViolation(rule, machine.name, event, message))

    # rule 1: the first machine only has ordinary events
    for e in machines[0].events:
        if e.effective_status != ORDINARY:
            violate(1, machines[0], e.name,
                    f"{e.name} is {e.effective_status} in the first machine")

    for k, link in enumerate(chain.links):
        abstract, concrete = machines[k], machines[k + 1]
        renaming = link.renaming
        # rule 2: every abstract event is refined by at least one event
        refined = {a for _, a in renaming.forward}
        for name in abstract.alphabet():
            if name not in refined:
                violate(2, abstract, name,
                        f"{name} of {abstract.name} has no refining event in "
                        f"{concrete.name}")
        for e in concrete.events:
            target = renaming.apply(e.name)
            status = e.effective_status
            if target is None:
                # rule 3: new events are anticipated or convergent
                if status == ORDINARY:
                    violate(3, concrete, e.name,
                            f"new event {e.name} is ordinary")
                continue
            abs_status = abstract.event(target).effective_status
            if abs_status == ANTICIPATED and status == ORDINARY:
                # rule 4: refinements of anticipated stay anticipated/convergent
                violate(4, concrete, e.name,
                        f"{e.name} refines anticipated {target} but is ordinary")
            if abs_status in (CONVERGENT, ORDINARY) and status != ORDINARY:
                # rule 5: refinements of convergent/ordinary events are ordinary
                violate(5, concrete, e.name,
                        f"{e.name} refines {abs_status} {target} but is {status}")

    # rule 6: no anticipated events remain at the end
    for name in chain.final.events_with_status(ANTICIPATED):
        violate(6, chain.final, name,
                f"{name} is still anticipated in the final machine")

    return StrategyReport(
        violations=violations,
        ordinary=[m.events_with_status(ORDINARY) for m in machines],
        anticipated=[m.events_with_status(ANTICIPATED) for m in machines],
        convergent=[m.events_with_status(CONVERGENT) for m in machines],
    )


# ---------------------------------------------------------------------------
# proof obligations over the synchronized bounded state space

@dataclass
class POResult:
    name: str
    passed: bool
    witnesses: list[dict] = field(default_factory=list)
    checked: int = 0

    def to_json_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed,
                "checked": self.checked, "witnesses": self.witnesses}


@dataclass
class POReport:
    abstract: str
    concrete: str
    results: dict[str, POResult]
    bounds: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(r.passed for r in self.results.values())

    def failed(self) -> list[str]:
        return [name for name in PO_NAMES if not self.results[name].passed]

    def to_json_dict(self) -> dict:
        return {"abstract": self.abstract, "concrete": self.concrete,
                "ok": self.ok, "bounds": self.bounds,
                "obligations": {n: r.to_json_dict() for n, r in self.results.items()}}


def _enumerate_universe(machine: Machine) -> list[dict]:
    """All valuations over the declared domains satisfying the invariant."""
    sym = machine.sym
    base = static_env(machine)
    names = sym.var_names
    domains = [sym.domain(sym.var_types[v]) for v in names]
    out = []
    for values in product(*domains):
        env = dict(zip(names, values))
        if machine.invariant is None or eval_expr(machine.invariant, {**base, **env}):
            out.append(env)
    return out


def _abstract_action_outcomes(machine: Machine, env: dict, event) -> list[dict]:
    """After-states of an event's action relation, guard ignored, over all
    parameter valuations (the proof-obligation reading of simulation)."""
    sym = machine.sym
    outcomes: list[dict] = []
    domains = _param_domains(event.params, sym)
    for choice in product(*(dom for _, dom in domains)):
        env2 = dict(env)
        env2.update({name: v for (name, _), v in zip(domains, choice)})
        for upd in _action_outcomes(event.actions, env2, sym):
            result = {k: env[k] for k in sym.var_names}
            result.update(upd)
            outcomes.append(result)
    return outcomes


def check_refinement_pair(abstract: Machine, concrete: Machine,
                          link: ChainLink,
                          limits: ExploreLimits | None = None) -> POReport:
    """Evaluate the four refinement obligations for one adjacent pair."""
    link_typecheck(abstract, concrete, link.linking)
    graph = explore(concrete, limits, on_infeasible="ignore")
    abs_universe = _enumerate_universe(abstract)
    abs_base = static_env(abstract)
    conc_base = static_env(concrete)
    shared = sorted(set(abstract.sym.var_types) & set(concrete.sym.var_types))
    renaming = link.renaming

    def linked(abs_env: dict, conc_env: dict) -> bool:
        if any(abs_env[v] != conc_env[v] for v in shared):
            return False
        if link.linking is None:
            return True
        joint = {**abs_base, **conc_base, **abs_env, **conc_env}
        return bool(eval_expr(link.linking, joint))

    def render(env: dict, sym_names) -> dict:
        return {k: value_to_json(env[k]) for k in sym_names}

    results = {name: POResult(name, True) for name in PO_NAMES}

    def fail(po: str, witness: dict):
        r = results[po]
        r.passed = False
        if len(r.witnesses) < 5:
            r.witnesses.append(witness)

    # pair every reachable concrete state with each compatible abstract state
    pairs_per_state: list[list[dict]] = []
    for i in range(len(graph.states)):
        conc_env = graph.state_env(i)
        related = [a for a in abs_universe if linked(a, conc_env)]
        pairs_per_state.append(related)

    # initial linkability: each concrete initial state needs an abstract
    # initial partner (initialisation is part of the simulation obligation)
    abs_init_outcomes = _action_outcomes(abstract.init.actions, dict(abs_base),
                                         abstract.sym)
    for i in graph.initial:
        conc_env = graph.state_env(i)
        if not any(linked(a, conc_env) for a in abs_init_outcomes):
            fail("INV_REF", {
                "kind": "init",
                "concrete_state": render(conc_env, concrete.sym.var_names),
                "message": "no abstract initial state is linked to this "
                           "concrete initial state",
            })

    abs_events = {e.name: e for e in abstract.events}

    # FIS_REF and GRD_REF scan reachable states and enabled valuations
    for i in range(len(graph.states)):
        conc_env_vars = graph.state_env(i)
        conc_env = {**conc_base, **conc_env_vars}
        related = pairs_per_state[i]
        for event in sorted(concrete.events, key=lambda e: e.name):
            target = renaming.apply(event.name)
            for valuation, outcomes in event_firings(concrete, conc_env, event):
                results["FIS_REF"].checked += 1
                if not outcomes:
                    fail("FIS_REF", {
                        "kind": "no-after-state",
                        "event": event.name,
                        "params": [[n, value_to_json(v)] for n, v in valuation],
                        "concrete_state": render(conc_env_vars, concrete.sym.var_names),
                    })
                if target is None:
                    continue
                abs_event = abs_events[target]
                for abs_env in related:
                    results["GRD_REF"].checked += 1
                    if not _abstract_guard_holds(abstract, abs_env, abs_event, abs_base):
                        fail("GRD_REF", {
                            "kind": "guard-not-strengthened",
                            "event": event.name,
                            "abstract_event": target,
                            "params": [[n, value_to_json(v)] for n, v in valuation],
                            "concrete_state": render(conc_env_vars, concrete.sym.var_names),
                            "abstract_state": render(abs_env, abstract.sym.var_names),
                        })

    # INV_REF walks the concrete transitions
    for edge in graph.edges:
        conc_pre = graph.state_env(edge.src)
        conc_post = graph.state_env(edge.tgt)
        target = renaming.apply(edge.event)
        for abs_env in pairs_per_state[edge.src]:
            results["INV_REF"].checked += 1
            if target is None:
                ok = linked(abs_env, conc_post)
            else:
                abs_event = abs_events[target]
                joint = {**abs_base, **abs_env}
                outcomes = _abstract_action_outcomes(abstract, joint, abs_event)
                ok = any(linked(a_post, conc_post) for a_post in outcomes)
            if not ok:
                fail("INV_REF", {
                    "kind": "unmatched-transition" if target else "new-event-disturbs-link",
                    "event": edge.event,
                    "abstract_event": target,
                    "concrete_pre": render(conc_pre, concrete.sym.var_names),
                    "concrete_post": render(conc_post, concrete.sym.var_names),
                    "abstract_state": render(abs_env, abstract.sym.var_names),
                })

    # WFD_REF is local to the concrete machine's variant
    if concrete.variant is not None:
        statuses = {e.name: e.effective_status for e in concrete.events}
        variant_at: list[int] = []
        for i in range(len(graph.states)):
            env = {**conc_base, **graph.state_env(i)}
            value = eval_expr(concrete.variant, env)
            variant_at.append(value)
            results["WFD_REF"].checked += 1
            if not isinstance(value, int) or value < 0:
                fail("WFD_REF", {
                    "kind": "variant-not-natural",
                    "state": render(graph.state_env(i), concrete.sym.var_names),
                    "variant": value,
                })
        for edge in graph.edges:
            status = statuses[edge.event]
            if status == ORDINARY:
                continue
            before, after = variant_at[edge.src], variant_at[edge.tgt]
            results["WFD_REF"].checked += 1
            bad = (status == CONVERGENT and not after < before) or \
                  (status == ANTICIPATED and after > before)
            if bad:
                fail("WFD_REF", {
                    "kind": f"variant-violation-{status}",
                    "event": edge.event,
                    "before": before, "after": after,
                    "state": render(graph.state_env(edge.src), concrete.sym.var_names),
                })

    return POReport(abstract=abstract.name, concrete=concrete.name,
                    results=results,
                    bounds={"concrete_states": len(graph.states),
                            "abstract_universe": len(abs_universe)})


def _abstract_guard_holds(machine: Machine, env_vars: dict, event, base: dict) -> bool:
    """Is the abstract guard satisfiable for some parameter valuation?"""
    env = {**base, **env_vars}
    for _valuation, _outcomes in event_firings(machine, env, event):
        return True
    return False


def check_chain_pairs(chain: RefinementChain,
                      limits: ExploreLimits | None = None,
                      from_level: int = 0) -> list[POReport]:
    return [
        check_refinement_pair(chain.machines[k], chain.machines[k + 1],
                              chain.links[k], limits)
        for k in range(from_level, len(chain.machines) - 1)
    ]


# ---------------------------------------------------------------------------
# divergence freedom

@dataclass
class CAVerdict:
    holds: bool
    convergent_events: tuple[str, ...]
    ordinary_events: tuple[str, ...]
    witness: Optional[Trace] = None

    def to_json_dict(self) -> dict:
        return {"holds": self.holds,
                "C": list(self.convergent_events), "O": list(self.ordinary_events),
                "witness": self.witness.to_json_dict() if self.witness else None}


def check_ca(graph: StateGraph, convergent, ordinary) -> CAVerdict:
    """CA(C, O): a run with infinitely many C events has infinitely many O
    events.  Fails exactly when the graph, with O-labelled edges removed,
    still has a reachable cycle through a C-labelled edge; the witness
    lasso pumps that cycle.  Events outside the graph alphabet are allowed
    in C and O; they never occur, so they never matter."""
    convergent = frozenset(convergent)
    ordinary = frozenset(ordinary)
    reachable = _reachable_states(graph)
    keep: list[list[tuple[int, str]]] = [[] for _ in graph.states]
    for e in graph.edges:
        if e.event not in ordinary and e.src in reachable:
            keep[e.src].append((e.tgt, e.event))
    comp = _scc_membership(len(graph.states), keep)

    # an edge whose endpoints share a subgraph SCC always lies on a cycle of
    # that subgraph: the target reaches the source again without O events
    witness_edge = None
    for e in graph.edges:
        if e.event in convergent and e.event not in ordinary \
                and e.src in reachable and comp[e.src] == comp[e.tgt]:
            witness_edge = e
            break

    c_sorted = tuple(sorted(convergent))
    o_sorted = tuple(sorted(ordinary))
    if witness_edge is None:
        return CAVerdict(True, c_sorted, o_sorted)

    prefix = find_path(graph, witness_edge.src)
    cycle = [witness_edge.event]
    if witness_edge.tgt != witness_edge.src:
        cycle += _path_in_subgraph(keep, comp, witness_edge.tgt, witness_edge.src)
    return CAVerdict(False, c_sorted, o_sorted,
                     witness=Trace(LASSO, tuple(prefix), tuple(cycle)))


def _reachable_states(graph: StateGraph) -> set[int]:
    from collections import deque
    seen = set(graph.initial)
    queue = deque(graph.initial)
    while queue:
        cur = queue.popleft()
        for e in graph.out_edges(cur):
            if e.tgt not in seen:
                seen.add(e.tgt)
                queue.append(e.tgt)
    return seen


def _scc_membership(n: int, adj: list[list[tuple[int, str]]]) -> list[int]:
    from .automata import _tarjan
    comp = [0] * n
    for idx, scc in enumerate(_tarjan(n, adj)):
        for node in scc:
            comp[node] = idx
    return comp


def _path_in_subgraph(adj, comp, source: int, goal: int) -> list[str]:
    from collections import deque
    parent: dict[int, tuple[int, str]] = {}
    queue = deque([source])
    seen = {source}
    while queue:
        cur = queue.popleft()
        if cur == goal:
            break
        for tgt, ev in adj[cur]:
            if comp[tgt] == comp[source] and tgt not in seen:
                seen.add(tgt)
                parent[tgt] = (cur, ev)
                queue.append(tgt)
    events = []
    node = goal
    while node != source:
        node, ev = parent[node]
        events.append(ev)
    return list(reversed(events))


@dataclass
class Theorem1Report:
    c_star: tuple[str, ...]
    o_star: tuple[str, ...]
    po_reports: list[POReport]
    strategy: StrategyReport
    direct: CAVerdict
    certified: bool

    @property
    def consistent(self) -> bool:
        # the theorem promises CA whenever the chain obligations hold
        return not (self.certified and not self.direct.holds)

    def to_json_dict(self) -> dict:
        return {
            "C_star": list(self.c_star), "O_star": list(self.o_star),
            "pairs": [r.to_json_dict() for r in self.po_reports],
            "strategy": self.strategy.to_json_dict(),
            "direct": self.direct.to_json_dict(),
            "certified": self.certified,
            "consistent": self.consistent,
        }


def check_theorem1(chain: RefinementChain, graph_n: StateGraph,
                   limits: ExploreLimits | None = None,
                   po_reports: list[POReport] | None = None) -> Theorem1Report:
    """Divergence freedom of the final machine from the chain structure.

    C* pulls every level's convergent set down to the final alphabet via
    the composed renamings and adds the final machine's own convergent
    events; O* is the preimage of the first machine's ordinary events.  The
    theorem-level certificate (obligations plus strategy) and a direct
    cycle analysis of the final graph are both reported; their disagreement
    would be a toolkit bug and raises.
    """
    n = len(chain.machines) - 1
    c_star: set[str] = set()
    for level in range(n + 1):
        conv = chain.machines[level].events_with_status(CONVERGENT)
        # level n composes the empty map sequence, i.e. the identity
        g = compose_renamings(chain, level + 1)
        c_star.update(g.preimage_set(conv))
    o_star = compose_renamings(chain, 1).preimage_set(
        chain.machines[0].events_with_status(ORDINARY))

    strategy = check_strategy(chain)
    if po_reports is None:
        po_reports = check_chain_pairs(chain, limits)
    direct = check_ca(graph_n, tuple(sorted(c_star)), tuple(o_star))
    certified = strategy.ok and all(r.ok for r in po_reports)
    report = Theorem1Report(tuple(sorted(c_star)), tuple(o_star), po_reports,
                            strategy, direct, certified)
    if not report.consistent:
        raise ToolkitBug(
            "chain obligations hold but the final machine has a divergent "
            f"cycle: {direct.witness.render() if direct.witness else ''}")
    return report
