"""Maximal executions as event sequences.

A trace is either finite (the machine deadlocks after the last event) or a
lasso: a finite prefix followed by a nonempty cycle repeated forever.  Only
event names are recorded; intermediate states play no role in property
evaluation.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import lcm

FINITE = "finite"
LASSO = "lasso"


@dataclass(frozen=True)
class Trace:
    kind: str  # FINITE | LASSO
    prefix: tuple[str, ...]
    cycle: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind == LASSO and not self.cycle:
            raise ValueError("a lasso needs a nonempty cycle")
        if self.kind == FINITE and self.cycle:
            raise ValueError("a finite trace has no cycle")

    @property
    def is_lasso(self) -> bool:
        return self.kind == LASSO

    def positions(self) -> int:
        """Number of distinct suffix positions (for finite traces this counts
        the empty suffix as well)."""
        if self.is_lasso:
            return len(self.prefix) + len(self.cycle)
        return len(self.prefix) + 1

    def event_at(self, i: int) -> str | None:
        """Event at position i of the unrolled word; None past a finite end."""
        if i < len(self.prefix):
            return self.prefix[i]
        if self.is_lasso:
            return self.cycle[(i - len(self.prefix)) % len(self.cycle)]
        return None

    def suffix(self, i: int) -> "Trace":
        """The trace with the first i events removed.

        For finite traces i may be at most the length (yielding the empty
        trace); for lassos any i is legal and the result is again a lasso.
        """
        if not self.is_lasso:
            if i > len(self.prefix):
                raise IndexError(f"suffix {i} of a length-{len(self.prefix)} trace")
            return Trace(FINITE, self.prefix[i:])
        if i <= len(self.prefix):
            return Trace(LASSO, self.prefix[i:], self.cycle)
        k = (i - len(self.prefix)) % len(self.cycle)
        return Trace(LASSO, (), self.cycle[k:] + self.cycle[:k])

    def unroll(self, n: int) -> tuple[str, ...]:
        """First n letters of the word (fewer if the trace is shorter)."""
        out = []
        for i in range(n):
            e = self.event_at(i)
            if e is None:
                break
            out.append(e)
        return tuple(out)

    def render(self) -> str:
        if self.is_lasso:
            head = ", ".join(self.prefix)
            return f"{head} | ({', '.join(self.cycle)})^ω"
        if not self.prefix:
            return "<empty> -| deadlock"
        return ", ".join(self.prefix) + " -| deadlock"

    def to_json_dict(self) -> dict:
        return {"kind": self.kind, "prefix": list(self.prefix), "cycle": list(self.cycle)}


def finite_trace(*events: str) -> Trace:
    return Trace(FINITE, tuple(events))


def lasso(prefix: tuple[str, ...], cycle: tuple[str, ...]) -> Trace:
    return Trace(LASSO, tuple(prefix), tuple(cycle))


def project_trace(u: Trace, beta) -> Trace:
    """Restrict a trace to the events in beta, pointwise.

    A lasso whose cycle loses all its events degenerates to the finite
    trace made of the filtered prefix.
    """
    keep = frozenset(beta)
    prefix = tuple(e for e in u.prefix if e in keep)
    if not u.is_lasso:
        return Trace(FINITE, prefix)
    cycle = tuple(e for e in u.cycle if e in keep)
    if not cycle:
        return Trace(FINITE, prefix)
    return Trace(LASSO, prefix, cycle)


def same_word(a: Trace, b: Trace) -> bool:
    """Do two traces denote the same (finite or ultimately periodic) word?"""
    if a.is_lasso != b.is_lasso:
        return False
    if not a.is_lasso:
        return a.prefix == b.prefix
    n = max(len(a.prefix), len(b.prefix)) + lcm(len(a.cycle), len(b.cycle))
    return a.unroll(n) == b.unroll(n)
