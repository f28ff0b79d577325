"""Nondeterministic stack machine.

A program is a :class:`Composition` executed left to right on a stack of
sets (slot 0 is the bottom).  ``amb`` forks one branch per element of the top
set and the machine explores branches depth first in a seeded random order.
The first branch to reach the end of the program wins.  Every executed opcode
costs one tick on every branch explored, and relations additionally cost
``|x|*|y|``.

Opcodes outside the stack/guard core are delegated to a *domain* object:

``domain.step(op, stack, intents)`` returns ``(stack, intents, cost)`` or
``None`` when the branch fails, and ``domain.commit(intents)`` makes the
recorded intents real (raising to refuse) and returns a move penalty.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence

from .actors import Composition
from .opcodes import COPY, UNIT, UNIT_OP, Opcode

Stack = tuple[frozenset, ...]
Intent = tuple[Opcode, tuple[int, ...]]


class Domain(Protocol):
    def step(self, op: Opcode, stack: Stack, intents: tuple) -> tuple | None: ...

    def commit(self, intents: tuple) -> int: ...


class CommitRefused(Exception):
    """Raised by a domain when intents cannot be applied at commit time."""


@dataclass
class Outcome:
    succeeded: bool
    cost: int
    stack: Stack | None = None
    intents: tuple = ()
    penalty: int = 0
    branches: int = 0
    reason: str = ""

    @property
    def top(self) -> frozenset | None:
        return self.stack[-1] if self.stack else None


@dataclass
class EvalStack:
    """Convenience wrapper for building initial stacks."""

    slots: list = field(default_factory=list)

    def push(self, value: Iterable) -> "EvalStack":
        self.slots.append(frozenset(value))
        return self

    def freeze(self) -> Stack:
        return tuple(self.slots)


def copy_k(stack: Stack, k: int) -> Stack:
    """Push a copy of slot ``k`` counted from the bottom."""
    if k >= len(stack):
        raise IndexError(f"x{k} on a stack of depth {len(stack)}")
    return stack + (stack[k],)


def kleisli(*programs: Composition) -> Composition:
    """Sequence programs left to right; ``unit`` is the identity."""
    ops = [op for p in programs for op in p.ops if op is not UNIT_OP]
    return Composition(ops or [UNIT_OP])


def _as_stack(initial) -> Stack:
    if isinstance(initial, EvalStack):
        return initial.freeze()
    return tuple(frozenset(v) for v in initial)


def run_program(program: Composition | Sequence[Opcode], initial, domain: Domain,
                rng: random.Random | None = None, max_cost: int | None = None) -> Outcome:
    """Run ``program`` on ``initial`` and commit the winning branch's intents.

    ``max_cost`` bounds the search; exceeding it fails the run with the
    ticks spent so far.
    """
    rng = rng or random.Random(0)
    ops = program.ops if isinstance(program, Composition) else tuple(program)
    plan = [_plan(op) for op in ops]
    n = len(plan)
    limit = max_cost if max_cost is not None else float("inf")
    step = domain.step
    rand = rng.random
    cost = 0
    branches = 0
    frontier: list[tuple[int, Stack, tuple]] = [(0, _as_stack(initial), ())]
    while frontier:
        pc, stack, intents = frontier.pop()
        branches += 1
        ok = True
        while pc < n:
            if cost > limit:
                return Outcome(False, cost, branches=branches, reason="cost limit")
            code, arg, op = plan[pc]
            pc += 1
            cost += 1
            if code == _COPY:
                if arg >= len(stack):
                    ok = False
                    break
                stack = stack + (stack[arg],)
            elif code == _DOMAIN:
                if len(stack) < arg:
                    ok = False
                    break
                res = step(op, stack, intents)
                if res is None:
                    ok = False
                    break
                stack, intents, extra = res
                cost += extra
            elif code == _AMB:
                if not stack or not stack[-1]:
                    ok = False
                    break
                # uniform random order; sorting first makes it independent of set layout
                choices = sorted(stack[-1])
                choices.sort(key=lambda _: rand())
                base = stack[:-1]
                for e in reversed(choices[1:]):
                    frontier.append((pc, base + (frozenset((e,)),), intents))
                stack = base + (frozenset((choices[0],)),)
            elif code == _SOME:
                if not stack or not stack[-1]:
                    ok = False
                    break
                stack = stack[:-1]
            elif code == _NONE:
                if not stack or stack[-1]:
                    ok = False
                    break
                stack = stack[:-1]
        if not ok:
            continue
        try:
            penalty = domain.commit(intents)
        except CommitRefused as exc:
            return Outcome(False, cost, stack, intents, branches=branches,
                           reason=f"commit refused: {exc}")
        return Outcome(True, cost + penalty, stack, intents, penalty, branches)
    return Outcome(False, cost, branches=branches, reason="no branch succeeded")


_COPY, _UNIT, _AMB, _SOME, _NONE, _DOMAIN = range(6)


def _plan(op: Opcode) -> tuple[int, int, Opcode]:
    if op.category == COPY:
        return _COPY, op.copy_index, op
    if op.category == UNIT:
        return _UNIT, 0, op
    if op.name == "amb":
        return _AMB, 0, op
    if op.name == "some":
        return _SOME, 0, op
    if op.name == "none":
        return _NONE, 0, op
    return _DOMAIN, op.arity, op


class NullDomain:
    """Domain with no primitive operations; useful for pure stack programs."""

    def step(self, op, stack, intents):
        return None

    def commit(self, intents):
        return 0
