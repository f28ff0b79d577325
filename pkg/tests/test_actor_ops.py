import random

import pytest

from combinatorium import snapshot
from combinatorium.actor_ops import (
    ActionRefused, ActorDomain, apply_intent, eval_generator, eval_relation,
)
from combinatorium.actors import Composition
from combinatorium.machine import CommitRefused, run_program
from combinatorium.opcodes import BY_NAME


def act(w, name, *args):
    return apply_intent(w, BY_NAME[name], args)


def state(w):
    """Bonds, kinds and containment, ignoring positions and group ids."""
    out = []
    for a in w.actors.values():
        out.append((a.id, a.kind, a.hand, a.next, tuple(sorted(a.prevs)), a.parent,
                    tuple(a.contents or ()), len(w.groups[a.group].members)))
    return out


def test_generators(world):
    o = world.obj(0, at=(4, 4))
    e = world.behavior(["x0"], parent=o)
    a = world.combinator(["amb"], at=(5, 4))
    b = world.combinator(["some"], at=(5, 5))
    world.link_next(a, b)
    world.link_hand(a, o)
    gen = lambda name, xs: eval_generator(world, name, frozenset(xs))
    assert gen("nexts", [a]) == {b}
    assert gen("prevs", [b]) == {a}
    assert gen("hands", [a, o]) == {o, a}
    assert gen("bonds", [a]) == {b, o}
    assert gen("contents", [o]) == {e}
    assert gen("parents", [e]) == {o}
    assert gen("neighbors", [e]) == {a, b}
    assert gen("members", [a]) == {a}
    assert gen("others", [a]) == frozenset()


def test_relations(world):
    a, b = world.combinator(["amb"], at=(1, 1)), world.combinator(["amb"], at=(2, 1))
    c = world.combinator(["some"], at=(3, 1))
    o0, o1 = world.obj(0, at=(4, 1)), world.obj(0, at=(5, 1))
    f = frozenset
    assert eval_relation(world, "same", f({a, b}), f({b, c})) == (f({b}), 4)
    assert eval_relation(world, "different", f({a, b}), f({b})) == (f({a}), 2)
    assert eval_relation(world, "similar", f({a, b}), f({b})) == (f({a, b}), 2)
    assert eval_relation(world, "similar", f({a, c}), f({b}))[0] == f()
    assert eval_relation(world, "dissimilar", f({c}), f({a}))[0] == f({c})
    assert eval_relation(world, "similar", f(), f({a}))[0] == f()
    # objects compare by class only
    world.combinator(["x0"], parent=o1)
    assert eval_relation(world, "similar", f({o0}), f({o1}))[0] == f({o0})


@pytest.mark.parametrize("do,undo", [("grab", "drop"), ("bond", "unbond")])
def test_bond_inverses(world, do, undo):
    a, b = world.combinator(["amb"], at=(1, 1)), world.combinator(["some"], at=(2, 2))
    before = state(world)
    act(world, do, a, b)
    assert state(world) != before
    act(world, undo, a)
    assert state(world) == before


def test_bond_prime_and_unbond_prime(world):
    a, b = world.combinator(["amb"], at=(1, 1)), world.combinator(["some"], at=(2, 1))
    before = state(world)
    assert act(world, "bond'", a, b) == 0
    assert world.actors[b].next == a
    act(world, "unbond'", a)
    assert state(world) == before


def test_self_bond_allowed(world):
    o = world.obj(0, at=(3, 3))
    act(world, "bond", o, o)
    assert world.actors[o].next == o and o in world.actors[o].prevs


def test_bond_too_far(world):
    a, b = world.combinator(["amb"], at=(1, 1)), world.combinator(["some"], at=(3, 2))
    with pytest.raises(ActionRefused):
        act(world, "bond", a, b)


def test_join_and_quit(world):
    a, b = world.combinator(["amb"], at=(1, 1)), world.combinator(["some"], at=(2, 1))
    before = state(world)
    assert act(world, "join", a, b) == 0
    assert world.actors[a].group == world.actors[b].group
    act(world, "quit", a)
    assert state(world) == before
    with pytest.raises(ActionRefused):
        act(world, "quit", a)


def test_join_from_afar_pays_distance(world):
    a = world.combinator(["amb", "some"], at=(1, 1))
    b = world.combinator(["some"], at=(6, 1))
    assert act(world, "join", a, b) == 2 * 4
    assert world.distance(a, b) == 1


def test_eat_and_exit(world):
    x = world.behavior(["x0", "amb", "some", "x1"], at=(1, 1))
    o = world.obj(0, at=(3, 2))
    before = state(world)
    mass = world.total_mass()
    assert act(world, "eat", x, o) == 4 * 3
    assert world.actors[x].parent == o
    assert world.total_mass() == mass
    act(world, "exit", x)
    assert state(world) == before
    assert world.pos(x) == (3, 2)


def test_eat_refuses_bonded_and_non_objects(world):
    a, b = world.combinator(["amb"], at=(1, 1)), world.combinator(["some"], at=(2, 1))
    with pytest.raises(ActionRefused):
        act(world, "eat", a, b)
    o = world.obj(1, at=(1, 2))
    world.link_next(a, b)
    with pytest.raises(ActionRefused):
        act(world, "eat", a, o)


def test_on_off(world):
    a = world.combinator(["amb", "some"], at=(1, 1))
    kind = world.actors[a].kind
    act(world, "on", a)
    assert world.actors[a].is_behavior
    act(world, "off", a)
    assert world.actors[a].kind == kind
    with pytest.raises(ActionRefused):
        act(world, "off", a)


def test_compose_and_digest_conserve_mass(world):
    a = world.combinator(["amb", "some"], at=(1, 1))
    b = world.combinator(["x1"], at=(2, 1))
    mass = world.total_mass()
    assert act(world, "compose", a, b) == 1
    assert world.actors[a].comp.names == ["amb", "some", "x1"]
    assert b not in world.actors
    assert world.total_mass() == mass
    act(world, "digest", a)
    pieces = [p for p in world.actors.values() if p.is_combinator]
    assert sorted(p.comp.names[0] for p in pieces) == ["amb", "some", "x1"]
    assert world.total_mass() == mass
    with pytest.raises(ActionRefused):
        act(world, "digest", a)


def test_swap_exchanges_places_and_bonds(world):
    a = world.combinator(["amb"], at=(1, 1))
    b = world.combinator(["some"], at=(3, 1))
    c = world.combinator(["x0"], at=(1, 2))
    world.link_next(c, a)
    pa, pb = world.pos(a), world.pos(b)
    assert act(world, "swap", a, b) == 2 * 2
    assert world.pos(a) == pb and world.pos(b) == pa
    assert world.actors[c].next == b
    act(world, "swap", a, b)
    assert world.actors[c].next == a


def test_domain_defers_and_commits_actions(world):
    o = world.obj(0, at=(4, 4))
    e = world.behavior(["x0"], parent=o)
    world.combinator(["amb"], at=(5, 4))
    prog = Composition.parse("x0 parents x0 parents bond")
    before = snapshot.dumps(world)
    out = run_program(prog, [frozenset({e})], ActorDomain(world), random.Random(0))
    assert out.succeeded
    # actions return their first argument
    assert out.top == {o}
    assert world.actors[o].next == o
    assert snapshot.dumps(world) != before


def test_failed_branch_leaves_world_untouched(world):
    o = world.obj(0, at=(4, 4))
    e = world.behavior(["x0"], parent=o)
    before = snapshot.dumps(world)
    prog = Composition.parse("x0 parents x0 parents bond x0 parents contents none")
    out = run_program(prog, [frozenset({e})], ActorDomain(world), random.Random(0))
    assert not out.succeeded
    assert snapshot.dumps(world) == before


def test_second_intent_sees_first(world):
    # the second bond fails because the first one already took o's next slot
    o = world.obj(0, at=(4, 4))
    e = world.behavior(["x0"], parent=o)
    world.combinator(["amb"], at=(5, 4))
    prog = Composition.parse("x0 parents x0 parents bond x0 parents bond")
    before = snapshot.dumps(world)
    out = run_program(prog, [frozenset({e})], ActorDomain(world), random.Random(0))
    assert not out.succeeded
    assert snapshot.dumps(world) == before


def test_commit_is_atomic(world):
    a, b = world.combinator(["amb"], at=(1, 1)), world.combinator(["some"], at=(2, 1))
    dom = ActorDomain(world)
    before = snapshot.dumps(world)
    with pytest.raises(CommitRefused):
        dom.commit(((BY_NAME["bond"], (a, b)), (BY_NAME["bond"], (a, b))))
    assert snapshot.dumps(world) == before


def test_actions_need_singletons(world):
    a, b = world.combinator(["amb"], at=(1, 1)), world.combinator(["some"], at=(2, 1))
    dom = ActorDomain(world)
    stack = (frozenset({a, b}), frozenset({b}))
    assert dom.step(BY_NAME["bond"], stack, ()) is None
    assert dom.step(BY_NAME["bond"], (frozenset({a}), frozenset({b})), ()) is not None


def test_generators_see_committed_world(world):
    # the bond is only an intent until commit, so nexts still reports nothing
    o = world.obj(0, at=(4, 4))
    e = world.behavior(["x0"], parent=o)
    prog = Composition.parse("x0 parents x0 parents bond x0 parents nexts none")
    out = run_program(prog, [frozenset({e})], ActorDomain(world), random.Random(0))
    assert out.succeeded
    assert world.actors[o].next == o
