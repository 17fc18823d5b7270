"""Tableau translation of formulas to transition-labelled automata, and the
product searches used by the model checker.

The letters of an automaton are event names, and at every step exactly one
event occurs, so a transition constraint is simply "the letter must be x"
and/or "the letter must avoid this set".  States are obligation sets: the
formulas that must hold on the remaining word.  Expanding a state splits
every obligation into a constraint on the current letter plus obligations
on the rest, with the usual unfoldings

    a U b  =  b  or  (a and next(a U b))
    a R b  =  b and (a  or  next(a R b))

Acceptance is generalized Buchi with one set per Until in the closure: a
run may not delay an Until forever, and taking the fulfilling branch
leaves the Until out of the successor obligation set.

For finite maximal traces (deadlocked executions) the same automaton is
read as a finite-word acceptor: after consuming the whole trace, every
pending obligation must hold on the empty trace, where atoms are false,
negated atoms are true, and both Until and Release reduce to their
right-hand side.

The internal negation normal form adds a Release operator and a false
literal; these never appear in the public Formula AST.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

from .errors import ExplorationLimitError
from .formulas import (
    And, Atom, Finally, Formula, Globally, Not, Or, TrueFormula, Until,
)
from .semantics import StateGraph
from .traces import FINITE, LASSO, Trace


# ---------------------------------------------------------------------------
# negation normal form

@dataclass(frozen=True)
class NNF:
    pass


@dataclass(frozen=True)
class NTrue(NNF):
    pass


@dataclass(frozen=True)
class NFalse(NNF):
    pass


@dataclass(frozen=True)
class NEv(NNF):
    event: str


@dataclass(frozen=True)
class NNotEv(NNF):
    event: str


@dataclass(frozen=True)
class NAnd(NNF):
    left: NNF
    right: NNF


@dataclass(frozen=True)
class NOr(NNF):
    left: NNF
    right: NNF


@dataclass(frozen=True)
class NUntil(NNF):
    left: NNF
    right: NNF


@dataclass(frozen=True)
class NRelease(NNF):
    left: NNF
    right: NNF


_NTRUE = NTrue()
_NFALSE = NFalse()


def to_nnf(phi: Formula, negate: bool = False) -> NNF:
    if isinstance(phi, TrueFormula):
        return _NFALSE if negate else _NTRUE
    if isinstance(phi, Atom):
        return NNotEv(phi.event) if negate else NEv(phi.event)
    if isinstance(phi, Not):
        return to_nnf(phi.operand, not negate)
    if isinstance(phi, Or):
        l, r = to_nnf(phi.left, negate), to_nnf(phi.right, negate)
        return NAnd(l, r) if negate else NOr(l, r)
    if isinstance(phi, And):
        l, r = to_nnf(phi.left, negate), to_nnf(phi.right, negate)
        return NOr(l, r) if negate else NAnd(l, r)
    if isinstance(phi, Until):
        l, r = to_nnf(phi.left, negate), to_nnf(phi.right, negate)
        return NRelease(l, r) if negate else NUntil(l, r)
    if isinstance(phi, Finally):
        inner = to_nnf(phi.operand, negate)
        return NRelease(_NFALSE, inner) if negate else NUntil(_NTRUE, inner)
    if isinstance(phi, Globally):
        inner = to_nnf(phi.operand, negate)
        return NUntil(_NTRUE, inner) if negate else NRelease(_NFALSE, inner)
    raise TypeError(phi)


def nnf_key(f: NNF) -> str:
    if isinstance(f, NTrue):
        return "1"
    if isinstance(f, NFalse):
        return "0"
    if isinstance(f, NEv):
        return f"[{f.event}]"
    if isinstance(f, NNotEv):
        return f"![{f.event}]"
    name = type(f).__name__
    return f"{name}({nnf_key(f.left)},{nnf_key(f.right)})"


def empty_true(f: NNF) -> bool:
    """Truth of an NNF formula on the empty trace."""
    if isinstance(f, NTrue):
        return True
    if isinstance(f, (NFalse, NEv)):
        return False
    if isinstance(f, NNotEv):
        return True
    if isinstance(f, NAnd):
        return empty_true(f.left) and empty_true(f.right)
    if isinstance(f, NOr):
        return empty_true(f.left) or empty_true(f.right)
    if isinstance(f, (NUntil, NRelease)):
        return empty_true(f.right)
    raise TypeError(f)


def _collect_untils(f: NNF, out: list[NNF]) -> None:
    if isinstance(f, NUntil) and f not in out:
        out.append(f)
    if isinstance(f, (NAnd, NOr, NUntil, NRelease)):
        _collect_untils(f.left, out)
        _collect_untils(f.right, out)


# ---------------------------------------------------------------------------
# the automaton

Branch = tuple[Optional[str], frozenset, frozenset]  # (required, forbidden, next)


class TableauAutomaton:
    """Obligation-set automaton for one NNF formula.

    States are interned frozensets of NNF formulas; state 0 is the initial
    obligation {formula}.  `branches(q)` lists the letter constraints and
    successor obligations; `successors(q, letter)` filters them for a
    concrete event.
    """

    def __init__(self, root: NNF):
        self.root = root
        untils: list[NNF] = []
        _collect_untils(root, untils)
        self.untils = sorted(untils, key=nnf_key)
        self._ids: dict[frozenset, int] = {}
        self._sets: list[frozenset] = []
        self._branches: dict[int, tuple[Branch, ...]] = {}
        self._succ: dict[tuple[int, str], tuple[int, ...]] = {}
        self.initial = self._intern(frozenset({root}))

    def _intern(self, obligations: frozenset) -> int:
        qid = self._ids.get(obligations)
        if qid is None:
            qid = len(self._sets)
            self._ids[obligations] = qid
            self._sets.append(obligations)
        return qid

    def obligations(self, qid: int) -> frozenset:
        return self._sets[qid]

    def accepts_empty(self, qid: int) -> bool:
        return all(empty_true(f) for f in self._sets[qid])

    def delayed_untils(self, qid: int) -> frozenset:
        return frozenset(f for f in self._sets[qid] if isinstance(f, NUntil))

    def branches(self, qid: int) -> tuple[Branch, ...]:
        cached = self._branches.get(qid)
        if cached is not None:
            return cached
        results: list[Branch] = []
        seen = set()

        def go(pending: list[NNF], req: Optional[str], forb: frozenset,
               nxt: frozenset) -> None:
            if not pending:
                branch = (req, forb, nxt)
                if branch not in seen:
                    seen.add(branch)
                    results.append(branch)
                return
            f, rest = pending[0], pending[1:]
            if isinstance(f, NTrue):
                go(rest, req, forb, nxt)
            elif isinstance(f, NFalse):
                return
            elif isinstance(f, NEv):
                if req is None:
                    if f.event not in forb:
                        go(rest, f.event, forb, nxt)
                elif req == f.event:
                    go(rest, req, forb, nxt)
            elif isinstance(f, NNotEv):
                if req is None:
                    go(rest, req, forb | {f.event}, nxt)
                elif req != f.event:
                    go(rest, req, forb, nxt)
            elif isinstance(f, NAnd):
                go([f.left, f.right] + rest, req, forb, nxt)
            elif isinstance(f, NOr):
                go([f.left] + rest, req, forb, nxt)
                go([f.right] + rest, req, forb, nxt)
            elif isinstance(f, NUntil):
                go([f.right] + rest, req, forb, nxt)          # fulfil now
                go([f.left] + rest, req, forb, nxt | {f})     # delay
            elif isinstance(f, NRelease):
                go([f.right, f.left] + rest, req, forb, nxt)  # release now
                go([f.right] + rest, req, forb, nxt | {f})    # stay obliged
            else:
                raise TypeError(f)

        ordered = sorted(self._sets[qid], key=nnf_key)
        go(ordered, None, frozenset(), frozenset())
        out = tuple(results)
        self._branches[qid] = out
        return out

    def successors(self, qid: int, letter: str) -> tuple[int, ...]:
        key = (qid, letter)
        cached = self._succ.get(key)
        if cached is not None:
            return cached
        seen = set()
        out = []
        for req, forb, nxt in self.branches(qid):
            if (req is None or req == letter) and letter not in forb:
                succ = self._intern(nxt)
                if succ not in seen:
                    seen.add(succ)
                    out.append(succ)
        result = tuple(out)
        self._succ[key] = result
        return result


# ---------------------------------------------------------------------------
# product searches

class CounterexampleSearch:
    """Search the (graph x automaton-of-negation) product for refutations."""

    def __init__(self, graph: StateGraph, phi: Formula, product_limit: int):
        self.graph = graph
        self.limit = product_limit
        self.aut = TableauAutomaton(to_nnf(phi, negate=True))
        # per graph state, outgoing (event, target) pairs in edge order
        self._moves: list[list[tuple[str, int]]] = []
        for i in range(len(graph.states)):
            moves = []
            seen = set()
            for e in graph.out_edges(i):
                key = (e.event, e.tgt)
                if key not in seen:  # parameter choices with equal labels collapse
                    seen.add(key)
                    moves.append(key)
            self._moves.append(moves)

    # -- shared product exploration ------------------------------------------

    def _explore_product(self):
        ids: dict[tuple[int, int], int] = {}
        nodes: list[tuple[int, int]] = []
        adj: list[list[tuple[int, str]]] = []

        def intern(node) -> int:
            nid = ids.get(node)
            if nid is None:
                if len(nodes) >= self.limit:
                    raise ExplorationLimitError(
                        f"product size exceeded the limit of {self.limit}")
                nid = len(nodes)
                ids[node] = nid
                nodes.append(node)
                adj.append([])
            return nid

        start = [intern((s, self.aut.initial)) for s in self.graph.initial]
        queue = deque(start)
        expanded = set(start)
        while queue:
            nid = queue.popleft()
            s, q = nodes[nid]
            for event, tgt in self._moves[s]:
                for q2 in self.aut.successors(q, event):
                    succ = intern((tgt, q2))
                    adj[nid].append((succ, event))
                    if succ not in expanded:
                        expanded.add(succ)
                        queue.append(succ)
        return ids, nodes, adj, start

    # -- finite maximal traces -------------------------------------------------

    def finite_counterexample(self) -> Optional[Trace]:
        if not self.graph.deadlocks:
            return None
        deadlocks = set(self.graph.deadlocks)
        ids, nodes, adj, start = self._explore_product()

        def accepting(nid: int) -> bool:
            s, q = nodes[nid]
            return s in deadlocks and self.aut.accepts_empty(q)

        parent: dict[int, tuple[int, str]] = {}
        for nid in start:
            if accepting(nid):
                return Trace(FINITE, ())
        queue = deque(start)
        seen = set(start)
        while queue:
            nid = queue.popleft()
            for succ, event in adj[nid]:
                if succ in seen:
                    continue
                seen.add(succ)
                parent[succ] = (nid, event)
                if accepting(succ):
                    events: list[str] = []
                    node = succ
                    while node in parent:
                        node, ev = parent[node]
                        events.append(ev)
                    return Trace(FINITE, tuple(reversed(events)))
                queue.append(succ)
        return None

    # -- infinite traces (accepting lassos) -------------------------------------

    def lasso_counterexample(self) -> Optional[Trace]:
        ids, nodes, adj, start = self._explore_product()
        sccs = _tarjan(len(nodes), adj)

        def is_accepting_scc(scc: list[int]) -> bool:
            """Generalized Buchi: every Until must be non-delayed somewhere."""
            for f in self.aut.untils:
                if not any(f not in self.aut.obligations(nodes[n][1]) for n in scc):
                    return False
            return True

        nontrivial = []
        for scc in sccs:
            members = set(scc)
            has_edge = any(succ in members for n in scc for succ, _ in adj[n])
            if has_edge and is_accepting_scc(scc):
                nontrivial.append(scc)
        if not nontrivial:
            return None

        dist, parent = _bfs_all(adj, start)
        best = None
        for scc in nontrivial:
            anchors = [n for n in scc if dist.get(n) is not None]
            if not anchors:
                continue
            anchor = min(anchors, key=lambda n: (dist[n], n))
            if best is None or dist[anchor] < dist[best[0]]:
                best = (anchor, scc)
        if best is None:
            return None
        anchor, scc = best

        prefix: list[str] = []
        node = anchor
        while node in parent:
            node, ev = parent[node]
            prefix.append(ev)
        prefix.reverse()

        cycle = self._stitch_cycle(anchor, set(scc), adj, nodes)
        return Trace(LASSO, tuple(prefix), tuple(cycle))

    def _stitch_cycle(self, anchor: int, members: set[int], adj, nodes) -> list[str]:
        """Closed walk at `anchor` inside one SCC that hits, for every Until,
        a node no longer delaying it."""
        events: list[str] = []
        visited = {anchor}
        cur = anchor
        for f in self.aut.untils:
            if any(f not in self.aut.obligations(nodes[n][1]) for n in visited):
                continue
            goal = {n for n in members if f not in self.aut.obligations(nodes[n][1])}
            segment, cur = _bfs_inside(adj, members, cur, goal, need_step=False)
            events.extend(segment)
            visited.add(cur)
        segment, _ = _bfs_inside(adj, members, cur, {anchor},
                                 need_step=not events)
        events.extend(segment)
        return events


def _bfs_all(adj, start: list[int]):
    dist = {n: 0 for n in start}
    parent: dict[int, tuple[int, str]] = {}
    queue = deque(start)
    while queue:
        n = queue.popleft()
        for succ, ev in adj[n]:
            if succ not in dist:
                dist[succ] = dist[n] + 1
                parent[succ] = (n, ev)
                queue.append(succ)
    return dist, parent


def _bfs_inside(adj, members: set[int], source: int, goals: set[int],
                need_step: bool):
    """Shortest event path within `members` from source to any goal.

    Goals are detected on edge relaxation so a cycle back to the source
    counts; with need_step the empty path is rejected even when the source
    is itself a goal.
    """
    if source in goals and not need_step:
        return [], source

    def chain(parent, node) -> list[str]:
        events: list[str] = []
        while node != source:
            node, ev = parent[node]
            events.append(ev)
        events.reverse()
        return events

    parent: dict[int, tuple[int, str]] = {}
    visited = {source}
    queue = deque([source])
    while queue:
        n = queue.popleft()
        for succ, ev in adj[n]:
            if succ not in members:
                continue
            if succ in goals:
                return chain(parent, n) + [ev], succ
            if succ not in visited:
                visited.add(succ)
                parent[succ] = (n, ev)
                queue.append(succ)
    raise ExplorationLimitError("internal SCC walk failed")  # pragma: no cover


def _tarjan(n: int, adj) -> list[list[int]]:
    """Iterative Tarjan SCC; components come out in reverse topological order."""
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    sccs: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            node, pi = work[-1]
            if pi == 0:
                index[node] = low[node] = counter
                counter += 1
                stack.append(node)
                on_stack[node] = True
            advanced = False
            while pi < len(adj[node]):
                succ = adj[node][pi][0]
                pi += 1
                if index[succ] == -1:
                    work[-1] = (node, pi)
                    work.append((succ, 0))
                    advanced = True
                    break
                if on_stack[succ]:
                    low[node] = min(low[node], index[succ])
            if advanced:
                continue
            work.pop()
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == node:
                        break
                sccs.append(comp)
            if work:
                pnode, _ = work[-1]
                low[pnode] = min(low[pnode], low[node])
    return sccs
