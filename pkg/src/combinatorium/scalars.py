"""Integer-set domain used to exercise the machine without a world."""

from __future__ import annotations

from .actors import Composition
from .opcodes import RELATION, Opcode

#: multiplication results above this bound are dropped to keep sets finite
TIMES_CAP = 1 << 20

PRIMALITY_SOURCE = "x0 pred iota amb x1 iota amb x1 times x0 equals some"


def pred(xs: frozenset) -> frozenset:
    return frozenset(max(x - 1, 0) for x in xs)


def iota(xs: frozenset) -> frozenset:
    out: set[int] = set()
    for x in xs:
        out.update(range(1, x + 1))
    return frozenset(out)


def times(xs: frozenset, ys: frozenset) -> frozenset:
    return frozenset(p for x in xs for y in ys if (p := x * y) <= TIMES_CAP)


def equals(xs: frozenset, ys: frozenset) -> frozenset:
    return xs & ys


_UNARY = {"pred": pred, "iota": iota}
_BINARY = {"times": times, "equals": equals, "same": equals,
           "different": lambda a, b: a - b}


class ScalarDomain:
    """Integers as actors: sets of non-negative ints, no side effects."""

    def step(self, op: Opcode, stack, intents):
        fn = _UNARY.get(op.name)
        if fn is not None:
            return stack[:-1] + (fn(stack[-1]),), intents, 0
        fn = _BINARY.get(op.name)
        if fn is None:
            return None
        x, y = stack[-2], stack[-1]
        cost = len(x) * len(y) if op.category == RELATION else 0
        return stack[:-2] + (fn(x, y),), intents, cost

    def commit(self, intents) -> int:
        return 0


def primality_program() -> Composition:
    """Succeeds on ``n >= 2`` composite, leaving a factor ``>= sqrt(n)`` on top."""
    return Composition.parse(PRIMALITY_SOURCE)
