"""Semantics of the actor-domain combinators.

Generators map a set of actors to the union of per-actor results.  Relations
filter their first operand.  Actions validate their preconditions and mutate
the world; a failed precondition raises :class:`ActionRefused`.  Every action
returns the time penalty it incurs for moving mass.
"""

from __future__ import annotations

from typing import Callable

from .actors import Behavior, Combinator, Composition, type_key
from .machine import CommitRefused
from .opcodes import BINARY_ACTION, GENERATOR, RELATION, UNARY_ACTION, Opcode
from .world import DIRECTIONS, MAX_BOND_SPAN, World, WorldError


class ActionRefused(Exception):
    pass


def _require(cond, why: str):
    if not cond:
        raise ActionRefused(why)


# ----------------------------------------------------------------------
# generators


def _hands(w: World, a: int):
    h = w.actors[a].hand
    return () if h is None else (h,)


def _nexts(w: World, a: int):
    n = w.actors[a].next
    return () if n is None else (n,)


def _prevs(w: World, a: int):
    return w.actors[a].prevs.keys()


def _bonds(w: World, a: int):
    return w.actors[a].bond_partners()


def _neighbors(w: World, a: int):
    return w.neighborhood(a)


def _contents(w: World, a: int):
    c = w.actors[a].contents
    return c.keys() if c else ()


def _parents(w: World, a: int):
    p = w.actors[a].parent
    return () if p is None else (p,)


def _members(w: World, a: int):
    return w.groups[w.actors[a].group].members.keys()


def _others(w: World, a: int):
    return [m for m in w.groups[w.actors[a].group].members if m != a]


GENERATORS: dict[str, Callable] = {
    "hands": _hands,
    "nexts": _nexts,
    "prevs": _prevs,
    "bonds": _bonds,
    "neighbors": _neighbors,
    "contents": _contents,
    "parents": _parents,
    "members": _members,
    "others": _others,
}


def eval_generator(w: World, name: str, xs) -> frozenset:
    fn = GENERATORS[name]
    out: set[int] = set()
    for a in xs:
        out.update(fn(w, a))
    return frozenset(out)


# ----------------------------------------------------------------------
# relations


def eval_relation(w: World, name: str, xs: frozenset, ys: frozenset) -> tuple[frozenset, int]:
    """Return the filtered first operand and the logged cost ``|x|*|y|``."""
    cost = len(xs) * len(ys)
    if name == "same":
        return xs & ys, cost
    if name == "different":
        return xs - ys, cost
    if not xs:
        return frozenset(), cost
    actors = w.actors
    ykeys = {type_key(actors[b].kind) for b in ys}
    hits = [type_key(actors[a].kind) in ykeys for a in xs]
    if name == "similar":
        return (xs if all(hits) else frozenset()), cost
    if name == "dissimilar":
        return (xs if not any(hits) else frozenset()), cost
    raise KeyError(name)


# ----------------------------------------------------------------------
# unary actions


def act_drop(w: World, x: int) -> int:
    _require(w.actors[x].hand is not None, "no hand to drop")
    w.unlink_hand(x)
    return 0


def act_unbond(w: World, x: int) -> int:
    _require(w.actors[x].next is not None, "no outgoing bond")
    w.unlink_next(x)
    return 0


def act_unbond_prime(w: World, x: int) -> int:
    _require(bool(w.actors[x].prevs), "no incoming bond")
    w.unlink_prevs(x)
    return 0


def act_quit(w: World, x: int) -> int:
    _require(len(w.group_of(x).members) > 1, "already alone in group")
    w.isolate(x)
    return 0


def act_exit(w: World, x: int) -> int:
    a = w.actors[x]
    _require(a.parent is not None, "no parent")
    _require(not a.has_bonds(), "bonded actors cannot leave a container")
    w.release(x)
    return 0


def act_digest(w: World, x: int) -> int:
    a = w.actors[x]
    _require(a.is_combinator and len(a.comp) > 1, "not a composite combinator")
    ops = a.comp.ops
    site = w.pos(x)
    w.set_kind(x, Combinator(Composition(ops[:1])))
    for op in ops[1:]:
        w.combinator((op,), at=site)
    return 0


def act_on(w: World, x: int) -> int:
    a = w.actors[x]
    _require(a.is_combinator, "not a combinator")
    w.set_kind(x, Behavior(a.comp))
    return 0


def act_off(w: World, x: int) -> int:
    a = w.actors[x]
    _require(a.is_behavior, "not a behavior")
    w.set_kind(x, Combinator(a.comp))
    return 0


# ----------------------------------------------------------------------
# binary actions


def _near(w: World, x: int, y: int) -> bool:
    return w.distance(x, y) <= MAX_BOND_SPAN


def act_grab(w: World, x: int, y: int) -> int:
    ax, ay = w.actors[x], w.actors[y]
    _require(x != y, "cannot grab itself")
    _require(ax.hand is None and ay.hand is None, "hand taken")
    _require(ax.parent == ay.parent, "different containers")
    _require(_near(w, x, y), "too far to bond")
    w.link_hand(x, y)
    return 0


def act_bond(w: World, x: int, y: int) -> int:
    ax, ay = w.actors[x], w.actors[y]
    _require(ax.next is None, "outgoing bond taken")
    _require(ax.parent == ay.parent, "different containers")
    _require(_near(w, x, y), "too far to bond")
    w.link_next(x, y)
    return 0


def act_bond_prime(w: World, x: int, y: int) -> int:
    act_bond(w, y, x)
    return 0


def act_join(w: World, x: int, y: int) -> int:
    ax, ay = w.actors[x], w.actors[y]
    _require(ax.group != ay.group, "already in the same group")
    _require(ax.parent == ay.parent, "different containers")
    penalty = 0
    if ax.parent is None:
        here = w.pos(x)
        there = w.pos(y)
        if w.l1(here, there) > MAX_BOND_SPAN:
            sites = [w.wrap(there[0] + dx, there[1] + dy) for dx, dy in DIRECTIONS]
            free = [s for s in sites if w.is_empty(*s)] or sites
            target = min(free, key=lambda s: w.l1(here, s))
            for p in ax.bond_partners():
                if p != x:
                    _require(w.l1(target, w.pos(p)) <= MAX_BOND_SPAN, "bond would overstretch")
            penalty = ax.mass * w.l1(here, target)
            w.relocate(x, *target)
    w.set_group(x, ay.group)
    return penalty


def act_eat(w: World, x: int, y: int) -> int:
    ax, ay = w.actors[x], w.actors[y]
    _require(ay.is_object, "container is not an object")
    _require(ax.parent is None, "only roots can be eaten")
    _require(x != y and w.root_of(y) != x, "cannot eat itself")
    _require(not ax.has_bonds(), "bonded actors cannot be eaten")
    penalty = ax.mass * w.distance(x, y)
    w.contain(x, y)
    return penalty


def act_compose(w: World, x: int, y: int) -> int:
    ax, ay = w.actors[x], w.actors[y]
    _require(x != y, "cannot compose with itself")
    _require(ax.is_combinator and ay.is_combinator, "compose needs two combinators")
    _require(not ay.has_bonds(), "bonded combinators cannot be absorbed")
    penalty = ay.mass * w.distance(x, y)
    comp = ax.comp + ay.comp
    w.remove(y)
    w.set_kind(x, Combinator(comp))
    return penalty


def act_swap(w: World, x: int, y: int) -> int:
    ax, ay = w.actors[x], w.actors[y]
    _require(x != y, "cannot swap with itself")
    _require(ax.parent is None and ay.parent is None, "only roots swap")
    penalty = (ax.mass + ay.mass) * w.distance(x, y)

    def sig(v):
        return y if v == x else x if v == y else v

    hands = set()
    nexts = set()
    for a in (ax, ay):
        if a.hand is not None:
            hands.add(frozenset((a.id, a.hand)))
        if a.next is not None:
            nexts.add((a.id, a.next))
        nexts.update((p, a.id) for p in a.prevs)
    for a in (x, y):
        w.unlink_hand(a)
        w.unlink_next(a)
        w.unlink_prevs(a)
    for pair in sorted(tuple(sorted(p)) for p in hands):
        w.link_hand(sig(pair[0]), sig(pair[1]))
    for u, v in sorted(nexts):
        w.link_next(sig(u), sig(v))
    px, py = w.pos(x), w.pos(y)
    w.relocate(x, *py)
    w.relocate(y, *px)
    return penalty


UNARY_ACTIONS: dict[str, Callable[[World, int], int]] = {
    "drop": act_drop,
    "unbond": act_unbond,
    "unbond'": act_unbond_prime,
    "quit": act_quit,
    "exit": act_exit,
    "digest": act_digest,
    "on": act_on,
    "off": act_off,
}

BINARY_ACTIONS: dict[str, Callable[[World, int, int], int]] = {
    "grab": act_grab,
    "bond": act_bond,
    "bond'": act_bond_prime,
    "join": act_join,
    "eat": act_eat,
    "compose": act_compose,
    "swap": act_swap,
}


def apply_intent(w: World, op: Opcode, args: tuple[int, ...]) -> int:
    """Perform one action on the world, returning its move penalty."""
    if len(args) == 1:
        return UNARY_ACTIONS[op.name](w, args[0])
    return BINARY_ACTIONS[op.name](w, args[0], args[1])


class ActorDomain:
    """Binds the machine to a world.

    Actions are deferred: during search an action is trial-applied on top of
    the branch's earlier intents (then rolled back) so that generators always
    observe the committed world.  :meth:`commit` applies the winning intents
    atomically.
    """

    def __init__(self, world: World):
        self.world = world

    def step(self, op: Opcode, stack, intents):
        w = self.world
        cat = op.category
        if cat == GENERATOR:
            return stack[:-1] + (eval_generator(w, op.name, stack[-1]),), intents, 0
        if cat == RELATION:
            out, cost = eval_relation(w, op.name, stack[-2], stack[-1])
            return stack[:-2] + (out,), intents, cost
        if cat == UNARY_ACTION:
            args = _single(stack[-1])
            if args is None:
                return None
            intent = (op, args)
            keep = stack
        elif cat == BINARY_ACTION:
            a, b = _single(stack[-2]), _single(stack[-1])
            if a is None or b is None:
                return None
            intent = (op, a + b)
            keep = stack[:-1]
        else:
            return None
        if not self._feasible(intents, intent):
            return None
        return keep, intents + (intent,), 0

    def _feasible(self, intents, intent) -> bool:
        w = self.world
        w.begin()
        try:
            for prev_op, prev_args in intents:
                apply_intent(w, prev_op, prev_args)
            apply_intent(w, *intent)
            return True
        except (ActionRefused, KeyError, WorldError):
            return False
        finally:
            w.rollback()

    def commit(self, intents) -> int:
        if not intents:
            return 0
        w = self.world
        w.begin()
        penalty = 0
        try:
            for op, args in intents:
                penalty += apply_intent(w, op, args)
        except (ActionRefused, KeyError, WorldError) as exc:
            w.rollback()
            raise CommitRefused(str(exc)) from exc
        w.commit()
        return penalty


def _single(s: frozenset):
    if len(s) != 1:
        return None
    return tuple(s)
