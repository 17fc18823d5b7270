"""Property preservation through refinement chains, as checked inference.

Two certified conclusions are supported, each with every hypothesis
machine-checked and recorded:

  * the recurrent-origin rule: a strategy-conforming chain whose final
    machine is deadlock free and free of anticipated events always
    eventually performs an event mapping back to the first machine, so
    `GF(disjunction of those events)` is asserted of the final machine;
  * the preservation rule: a property established at level i that is
    projection-insensitive (beta-dependent) over events of level i holds,
    translated through the composed renaming, in the final machine.

Beta-dependence has no general decision procedure here; certification is
layered.  A syntactic schema pass accepts shapes that provably cannot see
events outside their own alphabet (boolean combinations of GF/FG-of-
disjunction patterns, recurrence implications, and plain eventualities),
and a bounded semantic search hunts for refuting traces over an ambient
alphabet.  A schema certificate is conclusive; an exhausted search is
reported as `unknown` together with its bounds, never as certified.

Every asserted conclusion is cross-validated by directly model checking
the final machine; a disagreement raises, because it means this module and
the model checker cannot both be right.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product as iproduct
from typing import Optional

from .errors import EbltlError, RenamingError, ToolkitBug
from .formulas import (
    And, Atom, Finally, Formula, Globally, Not, Or, TrueFormula, Until,
    formula_to_text, or_all,
)
from .ltl import Verdict, alphabet, holds_on_trace, model_check
from .refine import (
    RefinementChain, RenamingMap, check_chain_pairs, check_strategy,
    compose_renamings,
)
from .semantics import StateGraph, check_deadlock_free
from .traces import FINITE, LASSO, Trace, project_trace

# ---------------------------------------------------------------------------
# formula translation through a renaming

def translate_formula(phi: Formula, h: RenamingMap) -> Formula:
    """Replace each atom by the disjunction of its preimages under h.

    Disjuncts come out in sorted order; an atom with no preimage becomes
    the empty disjunction, written !true.  A singleton preimage stays a
    plain atom, so identity renamings translate a formula to itself.
    """
    if isinstance(phi, TrueFormula):
        return phi
    if isinstance(phi, Atom):
        pre = h.preimage(phi.event)
        return or_all([Atom(e) for e in pre])
    if isinstance(phi, Not):
        return Not(translate_formula(phi.operand, h))
    if isinstance(phi, Or):
        return Or(translate_formula(phi.left, h), translate_formula(phi.right, h))
    if isinstance(phi, And):
        return And(translate_formula(phi.left, h), translate_formula(phi.right, h))
    if isinstance(phi, Until):
        return Until(translate_formula(phi.left, h), translate_formula(phi.right, h))
    if isinstance(phi, Finally):
        return Finally(translate_formula(phi.operand, h))
    if isinstance(phi, Globally):
        return Globally(translate_formula(phi.operand, h))
    raise TypeError(phi)


def complete_renaming(h: RenamingMap) -> RenamingMap:
    """Total completion: identity on every concrete event outside dom(h)."""
    mapping = h.mapping
    for event in sorted(h.concrete_alphabet - h.domain()):
        mapping[event] = event
    return RenamingMap(tuple(sorted(mapping.items())), h.concrete_alphabet,
                       h.abstract_alphabet | frozenset(h.concrete_alphabet - h.domain()))


def map_trace(h: RenamingMap, u: Trace) -> Trace:
    """Apply a renaming pointwise; every event of the trace must be in its
    domain (complete the renaming first if it is not)."""
    def image(event: str) -> str:
        out = h.apply(event)
        if out is None:
            raise RenamingError(f"event {event!r} outside the renaming domain")
        return out

    prefix = tuple(image(e) for e in u.prefix)
    if not u.is_lasso:
        return Trace(FINITE, prefix)
    return Trace(LASSO, prefix, tuple(image(e) for e in u.cycle))


# ---------------------------------------------------------------------------
# beta-dependence

@dataclass
class DependenceVerdict:
    status: str  # "certified" | "refuted" | "unknown"
    method: str  # "syntactic-schema" | "bounded-semantic"
    witness: Optional[Trace] = None
    bounds: dict = field(default_factory=dict)
    detail: str = ""

    @property
    def certified(self) -> bool:
        return self.status == "certified"

    def to_json_dict(self) -> dict:
        return {"status": self.status, "method": self.method,
                "witness": self.witness.to_json_dict() if self.witness else None,
                "bounds": self.bounds, "detail": self.detail}


def _atom_disjunction(phi: Formula) -> Optional[frozenset[str]]:
    if isinstance(phi, Atom):
        return frozenset({phi.event})
    if isinstance(phi, Or):
        left = _atom_disjunction(phi.left)
        right = _atom_disjunction(phi.right)
        if left is not None and right is not None:
            return left | right
    return None


def _schema_atom(phi: Formula) -> bool:
    """Shapes whose truth only depends on the subsequence of their own
    events, hence unchanged by projection onto any superset of it:

      GF(D)            infinitely many D events
      F(G(!D))         finitely many D events
      G(D1 => F D2)    recurrence: every D1 event is answered by a D2 event
      F(D)             some D event occurs
      true

    with D, D1, D2 nonempty disjunctions of atoms.  Projection keeps all
    of the formula's own events and their relative order, and the finite/
    empty-suffix corner cases agree on both sides, so each shape evaluates
    identically on a trace and on its projection.
    """
    if isinstance(phi, TrueFormula):
        return True
    if isinstance(phi, Globally):
        inner = phi.operand
        if isinstance(inner, Finally) and _atom_disjunction(inner.operand):
            return True  # GF(D)
        if isinstance(inner, Or):
            # G(!D1 | F D2) in either operand order
            for neg, pos in ((inner.left, inner.right), (inner.right, inner.left)):
                if (isinstance(neg, Not) and _atom_disjunction(neg.operand)
                        and isinstance(pos, Finally)
                        and _atom_disjunction(pos.operand)):
                    return True
        return False
    if isinstance(phi, Finally):
        inner = phi.operand
        if _atom_disjunction(inner):
            return True  # F(D)
        if isinstance(inner, Globally) and isinstance(inner.operand, Not) \
                and _atom_disjunction(inner.operand.operand):
            return True  # FG(!D)
        return False
    return False


def _schema_certified(phi: Formula) -> bool:
    """Boolean combinations of schema atoms."""
    if _schema_atom(phi):
        return True
    if isinstance(phi, Not):
        return _schema_certified(phi.operand)
    if isinstance(phi, (Or, And)):
        return _schema_certified(phi.left) and _schema_certified(phi.right)
    return False


def _bounded_traces(sigma: tuple[str, ...], prefix_bound: int, cycle_bound: int):
    """All traces over sigma in ascending total length: finite traces of
    length up to prefix+cycle, and lassos with prefix up to prefix_bound
    and cycle up to cycle_bound."""
    total_max = prefix_bound + cycle_bound
    for total in range(total_max + 1):
        for events in iproduct(sigma, repeat=total):
            yield Trace(FINITE, events)
        for plen in range(0, min(prefix_bound, total) + 1):
            clen = total - plen
            if not 1 <= clen <= cycle_bound:
                continue
            for prefix in iproduct(sigma, repeat=plen):
                for cycle in iproduct(sigma, repeat=clen):
                    yield Trace(LASSO, prefix, cycle)


def check_beta_dependent(phi: Formula, beta, sigma,
                         prefix_bound: int = 4, cycle_bound: int = 4) -> DependenceVerdict:
    """Is the formula's truth invariant under projecting traces onto beta?

    Requires alphabet(phi) to be contained in beta (that is part of the
    definition, not a refutable condition).  The schema pass certifies
    conclusively; otherwise all lassos and finite traces over `sigma`
    within the bounds are compared against their projections.  A mismatch
    refutes; exhaustion at the bounds stays `unknown`.
    """
    beta = frozenset(beta)
    sigma = tuple(sorted(frozenset(sigma) | beta))
    missing = alphabet(phi) - beta
    if missing:
        raise EbltlError(
            f"beta-dependence needs alphabet(phi) within beta; missing "
            f"{', '.join(sorted(missing))}")

    if _schema_certified(phi):
        return DependenceVerdict(
            status="certified", method="syntactic-schema",
            bounds={"sigma": list(sigma)},
            detail="projection-insensitive shape (boolean combination of "
                   "GF/FG/recurrence/eventuality patterns)")

    checked = 0
    for u in _bounded_traces(sigma, prefix_bound, cycle_bound):
        checked += 1
        if holds_on_trace(u, phi) != holds_on_trace(project_trace(u, beta), phi):
            return DependenceVerdict(
                status="refuted", method="bounded-semantic", witness=u,
                bounds={"sigma": list(sigma), "prefix": prefix_bound,
                        "cycle": cycle_bound, "traces_checked": checked},
                detail="truth changes under projection")
    return DependenceVerdict(
        status="unknown", method="bounded-semantic",
        bounds={"sigma": list(sigma), "prefix": prefix_bound,
                "cycle": cycle_bound, "traces_checked": checked},
        detail="no refutation within the bounds; not a certificate")


# ---------------------------------------------------------------------------
# certificates

@dataclass
class Hypothesis:
    name: str
    passed: bool
    detail: str = ""

    def to_json_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


@dataclass
class Certificate:
    lemma: int  # 1 or 3 for the GF rule, 2 or 4 for preservation
    chain: str
    machines: list[str]
    hypotheses: list[Hypothesis]
    conclusion: Optional[Formula]
    bounds: dict = field(default_factory=dict)
    cross_validation: Optional[Verdict] = None

    @property
    def asserted(self) -> bool:
        return all(h.passed for h in self.hypotheses)

    def failed_hypotheses(self) -> list[str]:
        return [h.name for h in self.hypotheses if not h.passed]

    def to_json_dict(self) -> dict:
        return {
            "lemma": self.lemma,
            "chain": self.chain,
            "machines": self.machines,
            "asserted": self.asserted,
            "hypotheses": [h.to_json_dict() for h in self.hypotheses],
            "conclusion": formula_to_text(self.conclusion) if self.conclusion else None,
            "bounds": self.bounds,
            "cross_validation": self.cross_validation.to_json_dict()
            if self.cross_validation else None,
        }


def _chain_hypotheses(chain: RefinementChain, graphs: list[StateGraph],
                      from_level: int = 0,
                      include_strategy: bool = True) -> list[Hypothesis]:
    hyps: list[Hypothesis] = []
    po_reports = check_chain_pairs(chain, from_level=from_level)
    for r in po_reports:
        hyps.append(Hypothesis(
            f"refinement obligations {r.abstract} -> {r.concrete}",
            r.ok, "all of FIS/GRD/INV/WFD hold" if r.ok
            else f"failed: {', '.join(r.failed())}"))
    if include_strategy:
        strat = check_strategy(chain)
        hyps.append(Hypothesis(
            "development strategy rules 1-6", strat.ok,
            "labels conform" if strat.ok else "; ".join(
                f"rule {v.rule}: {v.message}" for v in strat.violations)))
    dead = check_deadlock_free(graphs[-1])
    hyps.append(Hypothesis(
        f"{chain.final.name} deadlock free", dead.holds,
        dead.detail if dead.holds else
        f"deadlocked state reached by {dead.witness_path}"))
    anticipated = chain.final.events_with_status("anticipated")
    hyps.append(Hypothesis(
        f"no anticipated events in {chain.final.name}", not anticipated,
        "none remain" if not anticipated else f"still anticipated: {', '.join(anticipated)}"))
    return hyps


def _cross_validate(conclusion: Formula, graph_n: StateGraph) -> Verdict:
    verdict = model_check(graph_n, conclusion)
    if not verdict.holds:
        raise ToolkitBug(
            "certificate asserts a conclusion the model checker refutes: "
            f"{formula_to_text(conclusion)} with counterexample "
            f"{verdict.counterexample.render()}")
    return verdict


def apply_lemma_gf(chain: RefinementChain, graphs: list[StateGraph],
                   use_renaming: bool = True) -> Certificate:
    """Certify that the final machine always eventually performs an event
    relating back to the first machine.

    With identity renamings the conclusion quantifies the first machine's
    own alphabet; in general it quantifies the composed preimage.  The
    hypotheses are the per-step obligations, the strategy rules, deadlock
    freedom of the final machine and the absence of anticipated events.
    """
    hyps = _chain_hypotheses(chain, graphs)
    g = compose_renamings(chain, 1)
    if not use_renaming and not g.is_identity():
        raise RenamingError(
            "chain has non-identity renamings; the renamed rule is required")
    events = g.preimage_set(chain.machines[0].alphabet())
    conclusion = Globally(Finally(or_all([Atom(e) for e in events])))
    lemma = 1 if g.is_identity() else 3
    cert = Certificate(
        lemma=lemma, chain=chain.name, machines=[m.name for m in chain.machines],
        hypotheses=hyps, conclusion=conclusion,
        bounds={"final_states": len(graphs[-1].states)})
    if not cert.asserted:
        cert.conclusion = None
        return cert
    cert.cross_validation = _cross_validate(conclusion, graphs[-1])
    return cert


def apply_preservation(chain: RefinementChain, i: int, phi: Formula,
                       beta, graphs: list[StateGraph],
                       prefix_bound: int = 4, cycle_bound: int = 4,
                       accept_unknown_dependence: bool = False) -> Certificate:
    """Carry a property from level i to the final machine.

    Hypotheses: the property holds at level i; the obligations of every
    step from i on; the final machine is deadlock free and has no
    anticipated events left; the property is beta-dependent (certified by
    schema, or accepted at bounds only when the caller opts in); beta is
    within level i's alphabet.  The conclusion translates the property
    through the composed renaming; with identity renamings it is the
    property itself.
    """
    n = len(chain.machines) - 1
    if not 0 <= i < n:
        raise EbltlError(f"level {i} out of range 0..{n - 1}")
    machine_i = chain.machines[i]
    beta = frozenset(beta) if beta is not None else alphabet(phi)

    hyps: list[Hypothesis] = []
    base = model_check(graphs[i], phi)
    hyps.append(Hypothesis(
        f"{machine_i.name} satisfies {formula_to_text(phi)}", base.holds,
        "model checked" if base.holds else
        f"counterexample {base.counterexample.render()}"))
    hyps.extend(_chain_hypotheses(chain, graphs, from_level=i))

    sigma = frozenset(machine_i.alphabet()) | frozenset(chain.final.alphabet())
    dependence = check_beta_dependent(phi, beta, sigma,
                                      prefix_bound=prefix_bound,
                                      cycle_bound=cycle_bound)
    dep_ok = dependence.certified or (
        dependence.status == "unknown" and accept_unknown_dependence)
    dep_detail = f"{dependence.status} by {dependence.method}"
    if dependence.status == "unknown" and accept_unknown_dependence:
        dep_detail += " (accepted at bounds by explicit request)"
    if dependence.witness is not None:
        dep_detail += f"; witness {dependence.witness.render()}"
    hyps.append(Hypothesis(f"{formula_to_text(phi)} is beta-dependent",
                           dep_ok, dep_detail))

    extra = beta - frozenset(machine_i.alphabet())
    hyps.append(Hypothesis(
        f"beta within alphabet of {machine_i.name}", not extra,
        "contained" if not extra else f"outside events: {', '.join(sorted(extra))}"))

    g = compose_renamings(chain, i + 1)
    conclusion = translate_formula(phi, g)
    lemma = 2 if g.is_identity() else 4
    cert = Certificate(
        lemma=lemma, chain=chain.name,
        machines=[m.name for m in chain.machines[i:]],
        hypotheses=hyps, conclusion=conclusion,
        bounds={"level": i, "beta": sorted(beta),
                "dependence": dependence.to_json_dict(),
                "final_states": len(graphs[-1].states)})
    if not cert.asserted:
        cert.conclusion = None
        return cert
    cert.cross_validation = _cross_validate(conclusion, graphs[-1])
    return cert
