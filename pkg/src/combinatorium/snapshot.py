"""Line-per-actor text snapshots.

Format::

    # combinatorium snapshot 1
    world <width> <height> <next actor id> <next group id>
    group <gid> <parent|-> <last cost>
    <id> <kind> <class|opcodes> <x,y|-> <parent|-> <group> <hand|-> <next|-> <prevs|->

``kind`` is ``-`` (combinator), ``+`` (behaviour) or ``o`` (object).
Opcodes and prevs are comma separated.  Actors are listed by id; contents
are restored in the order their members appear, which is insertion order
because containers record members as they arrive.
"""

from __future__ import annotations

from pathlib import Path

from .actors import Actor, Behavior, Combinator, Composition, ObjectKind
from .world import Group, World

HEADER = "# combinatorium snapshot 1"


def _opt(v) -> str:
    return "-" if v is None else str(v)


def dumps(world: World) -> str:
    lines = [HEADER, f"world {world.width} {world.height} {world._next_actor} {world._next_group}"]
    for gid in sorted(world.groups):
        g = world.groups[gid]
        lines.append(f"group {gid} {_opt(g.parent)} {g.last_cost}")
    order = _content_order(world)
    for aid in order:
        a = world.actors[aid]
        if a.is_object:
            kind, body = "o", str(a.kind.cls)
        else:
            kind, body = a.kind.tag, ",".join(a.comp.names)
        pos = "-" if a.parent is not None else f"{int(world.px[aid])},{int(world.py[aid])}"
        prevs = ",".join(str(p) for p in sorted(a.prevs)) or "-"
        lines.append(f"{aid} {kind} {body} {pos} {_opt(a.parent)} {a.group} "
                     f"{_opt(a.hand)} {_opt(a.next)} {prevs}")
    return "\n".join(lines) + "\n"


def _content_order(world: World) -> list[int]:
    """Ids sorted, except that siblings keep their container's order."""
    rank = {}
    for a in world.actors.values():
        if a.contents:
            for i, c in enumerate(a.contents):
                rank[c] = i
    return sorted(world.actors, key=lambda aid: (world.actors[aid].parent is not None,
                                                  world.actors[aid].parent or 0,
                                                  rank.get(aid, 0), aid))


def loads(text: str) -> World:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    head = lines[0].split()
    if head[0] != "world":
        raise ValueError("snapshot must start with a world line")
    width, height, next_actor, next_group = map(int, head[1:5])
    world = World(width, height, capacity=max(16, next_actor))
    world._ensure_group_cap(max(next_group, 1))
    records = []
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "group":
            gid = int(parts[1])
            g = Group(gid, None if parts[2] == "-" else int(parts[2]))
            g.last_cost = int(parts[3])
            world.groups[gid] = g
        else:
            records.append(parts)

    def opt(s):
        return None if s == "-" else int(s)

    for aid, kind, body, pos, parent, group, hand, nxt, prevs in records:
        aid = int(aid)
        if kind == "o":
            k = ObjectKind(int(body))
        else:
            comp = Composition(body.split(","))
            k = Combinator(comp) if kind == "-" else Behavior(comp)
        a = Actor(aid, k, int(group))
        a.hand = opt(hand)
        a.next = opt(nxt)
        a.prevs = {} if prevs == "-" else {int(p): None for p in prevs.split(",")}
        a.parent = opt(parent)
        world.actors[aid] = a
        world._ensure_actor_cap(aid)
        if pos != "-":
            x, y = map(int, pos.split(","))
            world._place(aid, x, y)
    # containers list members in the order records appear
    for aid, *_rest in records:
        a = world.actors[int(aid)]
        if a.parent is not None:
            world.actors[a.parent].contents[a.id] = None
    by_id = dict(sorted(world.actors.items()))
    world.actors = by_id
    for a in world.actors.values():
        world.groups[a.group].members[a.id] = None
    _recompute_masses(world)
    for gid in list(world.groups):
        g = world.groups[gid]
        g.members = dict(sorted(g.members.items()))
        world._sync_group(gid)
    for aid in world.actors:
        world._refresh_bonds(aid)
    world._next_actor = next_actor
    world._next_group = next_group
    world.touched.clear()
    world.dirty.clear()
    return world


def _recompute_masses(world: World):
    def mass(a: Actor) -> int:
        if a.is_object:
            a.mass = 1 + sum(mass(world.actors[c]) for c in a.contents)
        else:
            a.mass = a.comp.mass
        return a.mass

    for a in world.actors.values():
        if a.parent is None:
            mass(a)


def save(world: World, path: str | Path):
    Path(path).write_text(dumps(world))


def load(path: str | Path) -> World:
    return loads(Path(path).read_text())
