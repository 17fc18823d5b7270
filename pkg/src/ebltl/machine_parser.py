"""Lexer and recursive-descent parser for the machine language.

Concrete syntax, one machine per file (`.eb`):

    machine NAME [refines NAME]
    [carriers    NAME = { elem, ... } ...]
    [constants   NAME = INT ...]
    [variables   NAME : TYPE ...]
    [invariant   EXPR]
    [variant     EXPR]
    [linking     EXPR]
    events
      event init then ACTIONS end
      event NAME [refines NAME]
        [status ordinary|anticipated|convergent]
        [when EXPR | any NAME : TYPE, ... where EXPR]
        then ACTIONS end
      ...
    end

TYPE is `bool`, `set of CARRIER`, a carrier name (enumeration value), or an
integer range `LO..HI` whose bounds are literals or declared constants.
ACTIONS are `target := expr` assignments joined with `||`, or bounded
choice blocks `any x : TYPE where EXPR then ACTIONS end`.  Boolean
connectives are `&`, `or`, `not`, `=>`, `<=>`; set operators are `\\/`,
`/\\`, `\\`, `<:`, `in`, `notin`.  Comments run from `//` to end of line.

`parse_machine` also runs the typechecker, so a returned Machine is
well-formed except for its `linking` clause, which can only be checked
once the abstract machine is known.
"""
from __future__ import annotations

import re

from .errors import ParseError
from .machine_ast import (
    STATUSES, Assign, AnyChoice, Binary, BoolLit, BoolType, Call, ElemType,
    Event, Expr, IfExpr, IntLit, IntRangeType, Machine, Name, Param, SetLit,
    SetType, Unary, VarType,
)
from .typecheck import typecheck

KEYWORDS = {
    "machine", "refines", "carriers", "constants", "variables", "invariant",
    "variant", "linking", "events", "event", "status", "ordinary",
    "anticipated", "convergent", "any", "where", "when", "then", "end",
    "bool", "set", "of", "in", "notin", "or", "not", "if", "else",
    "true", "false", "card", "min", "max",
}

_TOKEN_RE = re.compile(r"""
      (?P<ws>[ \t\r\n]+)
    | (?P<comment>//[^\n]*)
    | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<int>[0-9]+)
    | (?P<op><=>|:=|\.\.|=>|<=|>=|/=|<:|\\/|/\\|\|\||[\\(){},:=<>+\-*&])
""", re.VERBOSE)


class Token:
    __slots__ = ("kind", "value", "line", "col")

    def __init__(self, kind: str, value: str, line: int, col: int):
        self.kind = kind  # 'name' | 'int' | 'kw' | operator text | 'eof'
        self.value = value
        self.line = line
        self.col = col

    def __repr__(self):
        return f"Token({self.kind!r}, {self.value!r}, {self.line}:{self.col})"


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col, i = 1, 1, 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if m is None:
            raise ParseError(f"unexpected character {text[i]!r}", line, col)
        kind = m.lastgroup
        value = m.group()
        if kind not in ("ws", "comment"):
            if kind == "name" and value in KEYWORDS:
                tokens.append(Token("kw", value, line, col))
            elif kind == "op":
                tokens.append(Token(value, value, line, col))
            else:
                tokens.append(Token(kind, value, line, col))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            col = len(value) - value.rfind("\n")
        else:
            col += len(value)
        i = m.end()
    tokens.append(Token("eof", "end of input", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    # -- token plumbing ----------------------------------------------------

    def peek(self) -> Token:
        return self.tokens[self.i]

    def at(self, kind: str, value: str | None = None) -> bool:
        t = self.peek()
        return t.kind == kind and (value is None or t.value == value)

    def advance(self) -> Token:
        t = self.tokens[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def expect(self, kind: str, value: str | None = None) -> Token:
        t = self.peek()
        if not self.at(kind, value):
            want = value or kind
            raise ParseError(f"unexpected {t.value!r}, expected {want!r}", t.line, t.col)
        return self.advance()

    def accept(self, kind: str, value: str | None = None) -> Token | None:
        if self.at(kind, value):
            return self.advance()
        return None

    def expect_name(self, what: str) -> Token:
        t = self.peek()
        if t.kind != "name":
            raise ParseError(f"unexpected {t.value!r}, expected {what}", t.line, t.col)
        return self.advance()

    # -- machine structure -------------------------------------------------

    def machine(self) -> Machine:
        head = self.expect("kw", "machine")
        name = self.expect_name("machine name").value
        refines = None
        if self.accept("kw", "refines"):
            refines = self.expect_name("abstract machine name").value

        carriers: list[tuple[str, tuple[str, ...]]] = []
        if self.accept("kw", "carriers"):
            while self.peek().kind == "name":
                cname = self.advance().value
                self.expect("=")
                self.expect("{")
                elems = [self.expect_name("carrier element").value]
                while self.accept(","):
                    elems.append(self.expect_name("carrier element").value)
                self.expect("}")
                carriers.append((cname, tuple(elems)))

        constants: list[tuple[str, int]] = []
        if self.accept("kw", "constants"):
            while self.peek().kind == "name":
                cname = self.advance().value
                self.expect("=")
                tok = self.expect("int")
                constants.append((cname, int(tok.value)))

        variables: list[tuple[str, VarType]] = []
        if self.accept("kw", "variables"):
            while self.peek().kind == "name":
                vname = self.advance().value
                self.expect(":")
                variables.append((vname, self.var_type()))

        invariant = self.expr() if self.accept("kw", "invariant") else None
        variant = self.expr() if self.accept("kw", "variant") else None
        linking = self.expr() if self.accept("kw", "linking") else None

        self.expect("kw", "events")
        init = None
        events: list[Event] = []
        while self.at("kw", "event"):
            ev = self.event()
            if ev.name == "init":
                if init is not None:
                    raise ParseError("duplicate init event", ev.pos[0], ev.pos[1])
                init = ev
            else:
                events.append(ev)
        if init is None:
            t = self.peek()
            raise ParseError("machine has no init event", t.line, t.col)
        self.expect("kw", "end")
        self.expect("eof")

        return Machine(
            name=name, refines=refines, carriers=tuple(carriers),
            constants=tuple(constants), variables=tuple(variables),
            invariant=invariant, variant=variant, linking=linking,
            init=init, events=tuple(events), pos=(head.line, head.col),
        )

    def var_type(self) -> VarType:
        t = self.peek()
        if self.accept("kw", "bool"):
            return BoolType()
        if self.accept("kw", "set"):
            self.expect("kw", "of")
            return SetType(self.expect_name("carrier name").value)
        if t.kind == "int":
            lo = int(self.advance().value)
            self.expect("..")
            return IntRangeType(lo, self.range_bound())
        if t.kind == "name":
            name = self.advance().value
            if self.accept(".."):
                return IntRangeType(name, self.range_bound())
            return ElemType(name)
        raise ParseError(f"unexpected {t.value!r}, expected a type", t.line, t.col)

    def range_bound(self) -> int | str:
        t = self.peek()
        if t.kind == "int":
            return int(self.advance().value)
        if t.kind == "name":
            return self.advance().value
        raise ParseError(f"unexpected {t.value!r}, expected a range bound", t.line, t.col)

    def event(self) -> Event:
        head = self.expect("kw", "event")
        name_tok = self.peek()
        if name_tok.kind == "name":
            name = self.advance().value
        else:
            raise ParseError(f"unexpected {name_tok.value!r}, expected event name",
                             name_tok.line, name_tok.col)
        refines = None
        if self.accept("kw", "refines"):
            refines = self.expect_name("abstract event name").value
        status = None
        if self.accept("kw", "status"):
            t = self.peek()
            if t.kind == "kw" and t.value in STATUSES:
                status = self.advance().value
            else:
                raise ParseError(
                    f"unexpected {t.value!r}, expected one of {', '.join(STATUSES)}",
                    t.line, t.col)

        params: tuple[Param, ...] = ()
        guard: Expr | None = None
        if self.at("kw", "any"):
            self.advance()
            params = self.param_list()
            self.expect("kw", "where")
            guard = self.expr()
        elif self.accept("kw", "when"):
            guard = self.expr()

        if name == "init" and (refines or status or params or guard is not None):
            raise ParseError("init takes no refines, status, parameters or guard",
                             head.line, head.col)

        self.expect("kw", "then")
        actions = self.action_list()
        self.expect("kw", "end")
        return Event(name=name, status=status, refines=refines, params=params,
                     guard=guard, actions=actions, pos=(head.line, head.col))

    def param_list(self) -> tuple[Param, ...]:
        params = []
        while True:
            t = self.expect_name("parameter name")
            self.expect(":")
            params.append(Param(t.value, self.var_type(), (t.line, t.col)))
            if not self.accept(","):
                break
        return tuple(params)

    def action_list(self) -> tuple:
        actions = [self.action()]
        while self.accept("||"):
            actions.append(self.action())
        return tuple(actions)

    def action(self):
        if self.at("kw", "any"):
            head = self.advance()
            params = self.param_list()
            self.expect("kw", "where")
            where = self.expr()
            self.expect("kw", "then")
            inner = self.action_list()
            self.expect("kw", "end")
            return AnyChoice(params, where, inner, (head.line, head.col))
        t = self.expect_name("assignment target")
        self.expect(":=")
        return Assign(t.value, self.expr(), (t.line, t.col))

    # -- expressions, precedence climbing ----------------------------------

    def expr(self) -> Expr:
        return self.iff()

    def iff(self) -> Expr:
        left = self.implies()
        while self.at("<=>"):
            t = self.advance()
            left = Binary("<=>", left, self.implies(), (t.line, t.col))
        return left

    def implies(self) -> Expr:
        left = self.disj()
        if self.at("=>"):
            t = self.advance()
            return Binary("=>", left, self.implies(), (t.line, t.col))
        return left

    def disj(self) -> Expr:
        left = self.conj()
        while self.at("kw", "or"):
            t = self.advance()
            left = Binary("or", left, self.conj(), (t.line, t.col))
        return left

    def conj(self) -> Expr:
        left = self.cmp()
        while self.at("&"):
            t = self.advance()
            left = Binary("&", left, self.cmp(), (t.line, t.col))
        return left

    _CMP = ("=", "/=", "<", "<=", ">", ">=", "<:")

    def cmp(self) -> Expr:
        left = self.set_ops()
        t = self.peek()
        if t.kind in self._CMP:
            self.advance()
            return Binary(t.kind, left, self.set_ops(), (t.line, t.col))
        if t.kind == "kw" and t.value in ("in", "notin"):
            self.advance()
            return Binary(t.value, left, self.set_ops(), (t.line, t.col))
        return left

    _SET_OPS = {"\\/": "union", "/\\": "inter", "\\": "diff"}

    def set_ops(self) -> Expr:
        left = self.add_sub()
        while self.peek().kind in self._SET_OPS:
            t = self.advance()
            left = Binary(self._SET_OPS[t.kind], left, self.add_sub(), (t.line, t.col))
        return left

    def add_sub(self) -> Expr:
        left = self.mul()
        while self.peek().kind in ("+", "-"):
            t = self.advance()
            left = Binary(t.kind, left, self.mul(), (t.line, t.col))
        return left

    def mul(self) -> Expr:
        left = self.atom()
        while self.at("*"):
            t = self.advance()
            left = Binary("*", left, self.atom(), (t.line, t.col))
        return left

    def atom(self) -> Expr:
        t = self.peek()
        pos = (t.line, t.col)
        if t.kind == "int":
            self.advance()
            return IntLit(int(t.value), pos)
        if self.accept("kw", "true"):
            return BoolLit(True, pos)
        if self.accept("kw", "false"):
            return BoolLit(False, pos)
        if self.accept("-"):
            return Unary("neg", self.atom(), pos)
        if self.accept("kw", "not"):
            return Unary("not", self.atom(), pos)
        if t.kind == "kw" and t.value in ("card", "min", "max"):
            self.advance()
            self.expect("(")
            args = [self.expr()]
            while self.accept(","):
                args.append(self.expr())
            self.expect(")")
            want = 1 if t.value == "card" else 2
            if len(args) != want:
                raise ParseError(f"{t.value} takes {want} argument(s)", t.line, t.col)
            return Call(t.value, tuple(args), pos)
        if self.accept("kw", "if"):
            cond = self.expr()
            self.expect("kw", "then")
            then = self.expr()
            self.expect("kw", "else")
            orelse = self.expr()
            self.expect("kw", "end")
            return IfExpr(cond, then, orelse, pos)
        if self.accept("("):
            inner = self.expr()
            self.expect(")")
            return inner
        if self.accept("{"):
            items = []
            if not self.at("}"):
                items.append(self.expr())
                while self.accept(","):
                    items.append(self.expr())
            self.expect("}")
            return SetLit(tuple(items), pos)
        if t.kind == "name":
            self.advance()
            return Name(t.value, pos)
        raise ParseError(f"unexpected {t.value!r} in expression", t.line, t.col)


def parse_expression(text: str):
    """Parse a standalone expression (used for linking invariants given as
    strings in chain manifests)."""
    parser = _Parser(tokenize(text))
    expr = parser.expr()
    parser.expect("eof")
    return expr


def parse_machine_source(text: str, source_path: str | None = None) -> Machine:
    """Parse only; no typecheck.  Prefer parse_machine."""
    machine = _Parser(tokenize(text)).machine()
    machine.source_path = source_path
    return machine


def parse_machine(text: str, source_path: str | None = None,
                  constant_overrides: dict[str, int] | None = None) -> Machine:
    """Parse and typecheck a machine source.

    Raises ParseError or TypecheckError with positions.  The linking clause
    is parsed but deferred: names it mentions may live in the abstract
    machine, which is only known once a refinement pair is assembled.
    `constant_overrides` replaces declared constant values by name (names
    the machine does not declare are ignored, so one override set can be
    applied across a whole chain).
    """
    machine = parse_machine_source(text, source_path)
    if constant_overrides:
        machine.constants = tuple(
            (name, constant_overrides.get(name, value))
            for name, value in machine.constants)
    typecheck(machine)
    return machine


def parse_machine_file(path, constant_overrides: dict[str, int] | None = None) -> Machine:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_machine(fh.read(), source_path=str(path),
                             constant_overrides=constant_overrides)
