"""Brute-force cross-checking oracle and the bundled corpus.

Everything here exists to catch drift in the main checker, not to serve
users.  The two entry points reimplement satisfaction and model checking
with deliberately different algorithms:

  * `oracle_holds_on` fills truth tables bottom-up over subformulas, with a
    fixpoint for Until on the cycle positions.  It shares no code with
    `ltl.holds_on_trace`, which recurses over suffix traces.
  * `oracle_model_check` enumerates candidate executions of the graph
    directly -- deadlock-terminated walks and prefix+cycle lassos within
    length bounds -- and refutes on the first failing one.  No automaton is
    built anywhere in this module.

`cross_validate` runs both checkers over the corpus expectation table and
over seeded random (graph, formula) pairs.  When the main checker refutes
with a counterexample longer than the oracle's default horizon, the oracle
is re-run with bounds that cover the counterexample, and the counterexample
itself is replayed (realizability in the graph plus truth under the
oracle's own evaluator), so a disagreement always means a genuine bug in
one of the two sides.
"""
from __future__ import annotations

import json
import os
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import EnumerationBudgetError, ToolkitBug
from .formulas import (
    And, Atom, Finally, Formula, Globally, Not, Or, TrueFormula, Until,
    parse_property_file,
)
from .machine_ast import Machine
from .machine_parser import parse_machine_file
from .semantics import StateGraph, explore, make_graph
from .traces import FINITE, LASSO, Trace

# ---------------------------------------------------------------------------
# satisfaction, table-filling style


def oracle_holds_on(u: Trace, phi: Formula) -> bool:
    """Positionwise evaluation over the distinct suffixes of the trace."""
    if u.is_lasso:
        p, q = len(u.prefix), len(u.cycle)
        n = p + q
        events = list(u.prefix + u.cycle)
        succ = [i + 1 for i in range(n)]
        succ[n - 1] = p
        finite = False
    else:
        n = len(u.prefix) + 1  # last position is the empty suffix
        events = list(u.prefix) + [None]
        succ = [i + 1 for i in range(n)]  # succ of the last position unused
        finite = True

    memo: dict[Formula, list[bool]] = {}

    def tab(f: Formula) -> list[bool]:
        got = memo.get(f)
        if got is not None:
            return got
        if isinstance(f, TrueFormula):
            row = [True] * n
        elif isinstance(f, Atom):
            row = [events[i] == f.event for i in range(n)]
        elif isinstance(f, Not):
            row = [not v for v in tab(f.operand)]
        elif isinstance(f, Or):
            l, r = tab(f.left), tab(f.right)
            row = [l[i] or r[i] for i in range(n)]
        elif isinstance(f, And):
            l, r = tab(f.left), tab(f.right)
            row = [l[i] and r[i] for i in range(n)]
        elif isinstance(f, Finally):
            a = tab(f.operand)
            row = list(a)
            if finite:
                for i in range(n - 2, -1, -1):
                    row[i] = row[i] or row[i + 1]
            else:
                changed = True
                while changed:
                    changed = False
                    for i in range(n - 1, -1, -1):
                        v = row[i] or row[succ[i]]
                        if v != row[i]:
                            row[i] = v
                            changed = True
        elif isinstance(f, Globally):
            a = tab(f.operand)
            row = list(a)
            if finite:
                for i in range(n - 2, -1, -1):
                    row[i] = row[i] and row[i + 1]
            else:
                changed = True
                while changed:
                    changed = False
                    for i in range(n - 1, -1, -1):
                        v = row[i] and row[succ[i]]
                        if v != row[i]:
                            row[i] = v
                            changed = True
        elif isinstance(f, Until):
            a, b = tab(f.left), tab(f.right)
            row = list(b)
            if finite:
                for i in range(n - 2, -1, -1):
                    row[i] = row[i] or (a[i] and row[i + 1])
            else:
                changed = True
                while changed:
                    changed = False
                    for i in range(n - 1, -1, -1):
                        v = row[i] or (a[i] and row[succ[i]])
                        if v != row[i]:
                            row[i] = v
                            changed = True
        else:
            raise TypeError(f)
        memo[f] = row
        return row

    return tab(phi)[0]


# ---------------------------------------------------------------------------
# model checking by trace enumeration

@dataclass
class OracleBounds:
    prefix: int = 3
    cycle: int = 3
    finite: int = 6
    budget: int = 2_000_000  # enumeration step allowance


@dataclass
class OracleVerdict:
    holds: bool
    counterexample: Optional[Trace] = None
    method: str = "lasso-enumeration"
    bounds: Optional[OracleBounds] = None
    traces_checked: int = 0

    def to_json_dict(self) -> dict:
        return {
            "holds": self.holds,
            "counterexample": self.counterexample.to_json_dict() if self.counterexample else None,
            "method": self.method,
            "traces_checked": self.traces_checked,
        }


def _sorted_moves(graph: StateGraph) -> list[list[tuple[str, int]]]:
    moves: list[list[tuple[str, int]]] = []
    for i in range(len(graph.states)):
        pairs = sorted({(e.event, e.tgt) for e in graph.out_edges(i)})
        moves.append(pairs)
    return moves


def oracle_model_check(graph: StateGraph, phi: Formula,
                       bounds: OracleBounds | None = None) -> OracleVerdict:
    """Enumerate executions up to the bounds and refute on the first failure.

    Deadlock-terminated walks up to `bounds.finite` events and lassos with
    prefix up to `bounds.prefix` plus cycle up to `bounds.cycle` are all
    evaluated (deduplicated as event sequences).  If nothing refutes, the
    verdict is `holds` at these bounds.  Raises EnumerationBudgetError when
    the step allowance runs out, in which case no verdict is claimed.
    """
    bounds = bounds or OracleBounds()
    moves = _sorted_moves(graph)
    deadlocks = set(graph.deadlocks)
    steps = 0
    checked = 0
    seen_traces: set[tuple] = set()

    def spend(k: int = 1):
        nonlocal steps
        steps += k
        if steps > bounds.budget:
            raise EnumerationBudgetError(
                f"oracle enumeration exceeded {bounds.budget} steps")

    def consider(trace: Trace) -> Optional[OracleVerdict]:
        nonlocal checked
        key = (trace.kind, trace.prefix, trace.cycle)
        if key in seen_traces:
            return None
        seen_traces.add(key)
        checked += 1
        spend(4)
        if not oracle_holds_on(trace, phi):
            return OracleVerdict(False, trace, bounds=bounds, traces_checked=checked)
        return None

    # breadth-first walk enumeration from the initial states
    frontier = dict.fromkeys((s, ()) for s in graph.initial)
    horizon = max(bounds.prefix, bounds.finite)
    for depth in range(horizon + 1):
        next_frontier: dict[tuple[int, tuple[str, ...]], None] = {}
        for state, events in frontier:
            spend()
            if state in deadlocks and depth <= bounds.finite:
                verdict = consider(Trace(FINITE, events))
                if verdict:
                    return verdict
            if depth <= bounds.prefix:
                verdict = _cycles_from(state, events, moves, bounds, consider, spend)
                if verdict:
                    return verdict
            if depth < horizon:
                for event, tgt in moves[state]:
                    next_frontier.setdefault((tgt, events + (event,)))
        frontier = next_frontier

    return OracleVerdict(True, bounds=bounds, traces_checked=checked)


def _cycles_from(origin: int, prefix: tuple[str, ...], moves, bounds: OracleBounds,
                 consider, spend) -> Optional[OracleVerdict]:
    """DFS over closed walks at `origin` up to the cycle bound."""
    stack: list[tuple[int, tuple[str, ...]]] = [(origin, ())]
    while stack:
        state, events = stack.pop()
        spend()
        for event, tgt in reversed(moves[state]):
            cycle = events + (event,)
            if tgt == origin:
                verdict = consider(Trace(LASSO, prefix, cycle))
                if verdict:
                    return verdict
            if len(cycle) < bounds.cycle:
                stack.append((tgt, cycle))
    return None


# ---------------------------------------------------------------------------
# replaying traces against a graph

def trace_realizable(graph: StateGraph, trace: Trace) -> bool:
    """Is the trace an actual maximal execution of the graph?

    Subset stepping handles nondeterminism; for lassos the cycle must be
    repeatable forever, i.e. the cycle-word relation reached from the
    prefix must contain a cycle of graph states.
    """
    moves = _sorted_moves(graph)

    def step(states: set[int], event: str) -> set[int]:
        out = set()
        for s in states:
            for ev, tgt in moves[s]:
                if ev == event:
                    out.add(tgt)
        return out

    cur = set(graph.initial)
    for event in trace.prefix:
        cur = step(cur, event)
        if not cur:
            return False
    if not trace.is_lasso:
        return any(s in set(graph.deadlocks) for s in cur)

    def cycle_step(s: int) -> set[int]:
        states = {s}
        for event in trace.cycle:
            states = step(states, event)
            if not states:
                return set()
        return states

    # find a cycle in the "one full cycle-word" relation, starting from cur
    reach: dict[int, set[int]] = {}
    work = list(cur)
    while work:
        s = work.pop()
        if s in reach:
            continue
        reach[s] = cycle_step(s)
        work.extend(reach[s])
    color: dict[int, int] = {}

    def has_cycle(s: int) -> bool:
        stack = [(s, iter(sorted(reach.get(s, ()))))]
        color[s] = 1
        while stack:
            node, it = stack[-1]
            advanced = False
            for succ in it:
                if color.get(succ) == 1:
                    return True
                if succ not in color:
                    color[succ] = 1
                    stack.append((succ, iter(sorted(reach.get(succ, ())))))
                    advanced = True
                    break
            if not advanced:
                color[node] = 2
                stack.pop()
        return False

    return any(has_cycle(s) for s in sorted(cur) if s not in color)


# ---------------------------------------------------------------------------
# bundled corpus

def corpus_root() -> Path:
    override = os.environ.get("EBLTL_CORPUS")
    if override:
        return Path(override)
    return Path(__file__).parent / "corpus"


@dataclass
class ExpectedVerdict:
    machine: str
    prop: str
    holds: bool
    source: str


@dataclass
class CorpusEntry:
    name: str
    directory: Path
    machines: dict[str, Machine]
    properties: dict[str, Formula]
    verdicts: list[ExpectedVerdict]
    raw: dict = field(default_factory=dict)

    def graph(self, machine_name: str, cache={}) -> StateGraph:
        key = (self.directory, machine_name)
        if key not in cache:
            cache[key] = explore(self.machines[machine_name])
        return cache[key]


def load_entry(directory: Path) -> CorpusEntry:
    spec_path = directory / "expected.json"
    data = json.loads(spec_path.read_text(encoding="utf-8"))
    machines = {}
    for name, rel in sorted(data["machines"].items()):
        machines[name] = parse_machine_file(directory / rel)
    props = parse_property_file((directory / data["properties"]).read_text(encoding="utf-8"))
    verdicts = [
        ExpectedVerdict(v["machine"], v["property"], v["holds"], v.get("source", "derived"))
        for v in data["verdicts"]
    ]
    return CorpusEntry(name=data.get("name", directory.name), directory=directory,
                       machines=machines, properties=props, verdicts=verdicts, raw=data)


def load_corpus(root: Path | None = None) -> list[CorpusEntry]:
    root = root or corpus_root()
    entries = []
    for sub in sorted(root.iterdir()):
        if (sub / "expected.json").exists():
            entries.append(load_entry(sub))
    return entries


# ---------------------------------------------------------------------------
# differential run

@dataclass
class DifferentialRow:
    subject: str
    prop: str
    main_holds: bool
    oracle_holds: Optional[bool]  # None when the oracle withheld its verdict
    expected: Optional[bool]
    agree: bool
    note: str = ""

    def to_json_dict(self) -> dict:
        return {"subject": self.subject, "property": self.prop,
                "main": self.main_holds, "oracle": self.oracle_holds,
                "expected": self.expected, "agree": self.agree, "note": self.note}


@dataclass
class DifferentialReport:
    rows: list[DifferentialRow]

    @property
    def disagreements(self) -> list[DifferentialRow]:
        return [r for r in self.rows if not r.agree]

    @property
    def ok(self) -> bool:
        return not self.disagreements

    def to_json_dict(self) -> dict:
        return {"rows": [r.to_json_dict() for r in self.rows],
                "disagreements": len(self.disagreements), "ok": self.ok}


def _compare_on(subject: str, prop_name: str, graph: StateGraph, phi: Formula,
                expected: Optional[bool], base_bounds: OracleBounds) -> DifferentialRow:
    # local import: the oracle must not depend on the machinery it checks,
    # except in this comparison driver
    from .ltl import holds_on_trace, model_check

    main = model_check(graph, phi)
    note = ""

    bounds = base_bounds
    if not main.holds and main.counterexample is not None:
        cex = main.counterexample
        bounds = OracleBounds(
            prefix=max(base_bounds.prefix, len(cex.prefix)),
            cycle=max(base_bounds.cycle, len(cex.cycle)),
            finite=max(base_bounds.finite, len(cex.prefix)),
            budget=base_bounds.budget,
        )
        if oracle_holds_on(cex, phi):
            raise ToolkitBug(
                f"{subject}/{prop_name}: main counterexample satisfies the "
                f"formula under the oracle evaluator: {cex.render()}")
        if not trace_realizable(graph, cex):
            raise ToolkitBug(
                f"{subject}/{prop_name}: main counterexample is not a trace "
                f"of the graph: {cex.render()}")

    oracle_holds: Optional[bool]
    try:
        overdict = oracle_model_check(graph, phi, bounds)
        oracle_holds = overdict.holds
        if not overdict.holds:
            cex = overdict.counterexample
            if holds_on_trace(cex, phi):
                raise ToolkitBug(
                    f"{subject}/{prop_name}: oracle counterexample satisfies "
                    f"the formula under the main evaluator: {cex.render()}")
            if not trace_realizable(graph, cex):
                raise ToolkitBug(
                    f"{subject}/{prop_name}: oracle counterexample is not a "
                    f"trace of the graph: {cex.render()}")
    except EnumerationBudgetError:
        oracle_holds = None
        note = "oracle verdict withheld (budget); counterexample replay used instead"

    if oracle_holds is None:
        # replay already validated main's counterexample, or main holds and
        # the oracle simply could not finish: only a refutation can be confirmed
        agree = not main.holds
    else:
        agree = main.holds == oracle_holds
    if expected is not None and main.holds != expected:
        agree = False
        note = (note + "; " if note else "") + "main verdict contradicts the expectation table"
    return DifferentialRow(subject=subject, prop=prop_name, main_holds=main.holds,
                           oracle_holds=oracle_holds, expected=expected,
                           agree=agree, note=note)


def random_formula(rng: random.Random, alphabet: list[str], depth: int) -> Formula:
    if depth <= 0:
        roll = rng.random()
        if roll < 0.15:
            return TrueFormula()
        return Atom(rng.choice(alphabet))
    kind = rng.choice(["atom", "not", "or", "and", "until", "finally", "globally"])
    if kind == "atom":
        return Atom(rng.choice(alphabet))
    if kind == "not":
        return Not(random_formula(rng, alphabet, depth - 1))
    if kind == "finally":
        return Finally(random_formula(rng, alphabet, depth - 1))
    if kind == "globally":
        return Globally(random_formula(rng, alphabet, depth - 1))
    left = random_formula(rng, alphabet, depth - 1)
    right = random_formula(rng, alphabet, depth - 1)
    return {"or": Or, "and": And, "until": Until}[kind](left, right)


def random_graph(rng: random.Random, max_states: int, alphabet: list[str]) -> StateGraph:
    n = rng.randint(2, max_states)
    edges = []
    for s in range(n):
        degree = rng.choice([0, 1, 1, 2, 2, 3])
        for _ in range(degree):
            edges.append((s, rng.choice(alphabet), rng.randrange(n)))
    return make_graph(n, [0], sorted(set(edges)), alphabet)


def cross_validate(entries: list[CorpusEntry] | None = None,
                   random_pairs: int = 0, seed: int = 20240,
                   max_states: int = 12,
                   bounds: OracleBounds | None = None) -> DifferentialReport:
    """Run main and oracle checkers side by side; report every comparison."""
    bounds = bounds or OracleBounds()
    rows: list[DifferentialRow] = []
    if entries is None:
        entries = load_corpus()
    for entry in entries:
        for v in entry.verdicts:
            graph = entry.graph(v.machine)
            phi = entry.properties[v.prop]
            rows.append(_compare_on(f"{entry.name}/{v.machine}", v.prop, graph,
                                    phi, v.holds, bounds))
    rng = random.Random(seed)
    alphabet = ["a", "b", "c", "d"]
    for k in range(random_pairs):
        graph = random_graph(rng, max_states, alphabet)
        phi = random_formula(rng, alphabet, rng.randint(1, 5))
        rows.append(_compare_on(f"random-{k}", "phi", graph, phi, None, bounds))
    return DifferentialReport(rows)
