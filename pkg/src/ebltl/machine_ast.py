"""AST for the machine specification language.

A machine is a set of typed state variables, an invariant, an optional
natural-number variant, and a list of guarded events.  Events update the
state through parallel assignments and bounded nondeterministic choices.
Everything is finite by declaration: integers carry explicit ranges, sets
and enumeration values draw from declared carrier sets.

Every node carries a source position for error reporting; positions are
excluded from structural equality so that pretty-print/re-parse round
trips compare equal.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

Pos = tuple[int, int]

ORDINARY = "ordinary"
ANTICIPATED = "anticipated"
CONVERGENT = "convergent"
STATUSES = (ORDINARY, ANTICIPATED, CONVERGENT)

INIT_EVENT = "init"


# ---------------------------------------------------------------------------
# declared types

@dataclass(frozen=True)
class IntRangeType:
    lo: Union[int, str]  # literal or constant name, resolved by typecheck
    hi: Union[int, str]

    def __str__(self) -> str:
        return f"{self.lo}..{self.hi}"


@dataclass(frozen=True)
class BoolType:
    def __str__(self) -> str:
        return "bool"


@dataclass(frozen=True)
class SetType:
    carrier: str

    def __str__(self) -> str:
        return f"set of {self.carrier}"


@dataclass(frozen=True)
class ElemType:
    carrier: str

    def __str__(self) -> str:
        return self.carrier


VarType = Union[IntRangeType, BoolType, SetType, ElemType]


# ---------------------------------------------------------------------------
# expressions

@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class IntLit(Expr):
    value: int
    pos: Pos = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class BoolLit(Expr):
    value: bool
    pos: Pos = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Name(Expr):
    name: str
    pos: Pos = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class SetLit(Expr):
    items: tuple[Expr, ...]
    pos: Pos = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Unary(Expr):
    op: str  # 'neg' | 'not'
    operand: Expr
    pos: Pos = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr
    pos: Pos = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Call(Expr):
    fn: str  # 'card' | 'min' | 'max'
    args: tuple[Expr, ...]
    pos: Pos = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class IfExpr(Expr):
    cond: Expr
    then: Expr
    orelse: Expr
    pos: Pos = field(default=(0, 0), compare=False)


# ---------------------------------------------------------------------------
# actions and events

@dataclass(frozen=True)
class Param:
    name: str
    ptype: VarType
    pos: Pos = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Assign:
    target: str
    expr: Expr
    pos: Pos = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class AnyChoice:
    """Bounded nondeterministic block inside an event body.

    All valuations of `params` satisfying `where` are admissible; the inner
    assignments run in parallel with the surrounding ones.
    """

    params: tuple[Param, ...]
    where: Expr
    actions: tuple["Action", ...]
    pos: Pos = field(default=(0, 0), compare=False)


Action = Union[Assign, AnyChoice]


@dataclass(frozen=True)
class Event:
    name: str
    status: Optional[str]  # None when the source carries no status line
    refines: Optional[str]
    params: tuple[Param, ...]
    guard: Optional[Expr]  # None means `true`
    actions: tuple[Action, ...]
    pos: Pos = field(default=(0, 0), compare=False)

    @property
    def effective_status(self) -> str:
        return self.status if self.status is not None else ORDINARY


# ---------------------------------------------------------------------------
# machines

@dataclass
class Machine:
    name: str
    refines: Optional[str]
    carriers: tuple[tuple[str, tuple[str, ...]], ...]
    constants: tuple[tuple[str, int], ...]
    variables: tuple[tuple[str, VarType], ...]
    invariant: Optional[Expr]
    variant: Optional[Expr]
    linking: Optional[Expr]
    init: Event
    events: tuple[Event, ...]  # non-init events, in declaration order
    pos: Pos = field(default=(0, 0), compare=False)
    source_path: Optional[str] = field(default=None, compare=False)
    # populated by the typechecker
    sym: Optional["SymbolTable"] = field(default=None, compare=False, repr=False)

    def alphabet(self) -> tuple[str, ...]:
        """Event names of the machine, sorted; init is not part of it."""
        return tuple(sorted(e.name for e in self.events))

    def event(self, name: str) -> Event:
        for e in self.events:
            if e.name == name:
                return e
        raise KeyError(name)

    def events_with_status(self, status: str) -> tuple[str, ...]:
        return tuple(sorted(e.name for e in self.events if e.effective_status == status))


@dataclass
class SymbolTable:
    """Resolved view of a machine's declarations (built by typecheck)."""

    carrier_elems: dict[str, tuple[str, ...]]
    element_carrier: dict[str, str]
    constants: dict[str, int]
    var_types: dict[str, VarType]  # IntRangeType bounds resolved to ints
    var_names: tuple[str, ...]  # sorted

    def domain(self, vtype: VarType):
        """All values of a resolved declared type, in canonical order."""
        if isinstance(vtype, IntRangeType):
            return tuple(range(int(vtype.lo), int(vtype.hi) + 1))
        if isinstance(vtype, BoolType):
            return (False, True)
        if isinstance(vtype, ElemType):
            return tuple(sorted(self.carrier_elems[vtype.carrier]))
        if isinstance(vtype, SetType):
            elems = tuple(sorted(self.carrier_elems[vtype.carrier]))
            out = []
            for mask in range(1 << len(elems)):
                out.append(frozenset(e for i, e in enumerate(elems) if mask >> i & 1))
            return tuple(sorted(out, key=lambda s: (len(s), tuple(sorted(s)))))
        raise TypeError(f"unknown type {vtype!r}")


# ---------------------------------------------------------------------------
# pretty printing back to concrete syntax

_PREC = {
    "<=>": 1,
    "=>": 2,
    "or": 3,
    "&": 4,
    "=": 6, "/=": 6, "<": 6, "<=": 6, ">": 6, ">=": 6,
    "in": 6, "notin": 6, "<:": 6,
    "union": 7, "inter": 7, "diff": 7,
    "+": 8, "-": 8,
    "*": 9,
}

_OP_TEXT = {"union": "\\/", "inter": "/\\", "diff": "\\"}


def expr_to_text(e: Expr, parent_prec: int = 0) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, Name):
        return e.name
    if isinstance(e, SetLit):
        return "{ " + ", ".join(expr_to_text(i) for i in e.items) + " }" if e.items else "{}"
    if isinstance(e, Unary):
        inner = expr_to_text(e.operand, 10)
        return ("-" + inner) if e.op == "neg" else ("not " + inner)
    if isinstance(e, Binary):
        prec = _PREC[e.op]
        op = _OP_TEXT.get(e.op, e.op)
        text = f"{expr_to_text(e.left, prec)} {op} {expr_to_text(e.right, prec + 1)}"
        return f"({text})" if prec < parent_prec else text
    if isinstance(e, Call):
        return f"{e.fn}({', '.join(expr_to_text(a) for a in e.args)})"
    if isinstance(e, IfExpr):
        text = (f"if {expr_to_text(e.cond)} then {expr_to_text(e.then)}"
                f" else {expr_to_text(e.orelse)} end")
        return f"({text})" if parent_prec > 0 else text
    raise TypeError(f"unknown expression {e!r}")


def _action_to_text(a: Action) -> str:
    if isinstance(a, Assign):
        return f"{a.target} := {expr_to_text(a.expr)}"
    parts = ", ".join(f"{p.name} : {p.ptype}" for p in a.params)
    body = " || ".join(_action_to_text(x) for x in a.actions)
    return f"any {parts} where {expr_to_text(a.where)} then {body} end"


def _event_to_text(e: Event, out: list[str]) -> None:
    header = f"  event {e.name}"
    if e.refines:
        header += f" refines {e.refines}"
    out.append(header)
    if e.status is not None:
        out.append(f"    status {e.status}")
    if e.params:
        parts = ", ".join(f"{p.name} : {p.ptype}" for p in e.params)
        guard = expr_to_text(e.guard) if e.guard is not None else "true"
        out.append(f"    any {parts} where {guard}")
    elif e.guard is not None:
        out.append(f"    when {expr_to_text(e.guard)}")
    body = " || ".join(_action_to_text(a) for a in e.actions)
    out.append(f"    then {body} end")


def machine_to_text(m: Machine) -> str:
    """Render a machine back to concrete syntax; re-parses to an equal AST."""
    out: list[str] = []
    head = f"machine {m.name}"
    if m.refines:
        head += f" refines {m.refines}"
    out.append(head)
    if m.carriers:
        out.append("carriers")
        for name, elems in m.carriers:
            out.append(f"  {name} = {{ {', '.join(elems)} }}")
    if m.constants:
        out.append("constants")
        for name, value in m.constants:
            out.append(f"  {name} = {value}")
    if m.variables:
        out.append("variables")
        for name, vtype in m.variables:
            out.append(f"  {name} : {vtype}")
    if m.invariant is not None:
        out.append("invariant")
        out.append(f"  {expr_to_text(m.invariant)}")
    if m.variant is not None:
        out.append("variant")
        out.append(f"  {expr_to_text(m.variant)}")
    if m.linking is not None:
        out.append("linking")
        out.append(f"  {expr_to_text(m.linking)}")
    out.append("events")
    _event_to_text(m.init, out)
    for e in m.events:
        out.append("")
        _event_to_text(e, out)
    out.append("end")
    return "\n".join(out) + "\n"
