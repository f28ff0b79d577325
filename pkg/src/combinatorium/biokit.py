"""Plasmids, enzymes, ribosomes, factories and the replication experiment."""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from .actors import Behavior, Composition, type_key
from .compiler import compile_source
from .world import World

RIBOSOME_ENZYMES = ("ribA", "ribI", "ribE", "ribT")
FACTORY_ENZYMES = ("facA", "facB", "facY", "facZ", "facZ'")
RIBOSOME_CLASS = 0
FACTORY_CLASS = 1


class PlacementError(Exception):
    pass


def program_source(name: str) -> str:
    return resources.files(__package__).joinpath("programs", f"{name}.dfg").read_text()


@lru_cache(maxsize=None)
def enzyme_program(name: str) -> Composition:
    return compile_source(program_source(name))


def ribosome_programs() -> dict[str, str]:
    return {name: program_source(name) for name in RIBOSOME_ENZYMES}


def factory_programs() -> dict[str, str]:
    return {name: program_source(name) for name in FACTORY_ENZYMES}


# ----------------------------------------------------------------------
# construction


def plasmid_sites(n: int, origin: tuple[int, int]) -> list[tuple[int, int]]:
    """Hairpin layout: the first half runs along a row, the rest returns below it.

    Consecutive links are at L1 distance 1 (2 at the bend for odd ``n``), and
    the last link sits right below the first so the closing hand is short.
    """
    x, y = origin
    half = (n + 1) // 2
    sites = [(x + i, y) for i in range(half)]
    sites += [(x + (n - 1 - i), y + 1) for i in range(half, n)]
    return sites


def build_plasmid(world: World, ops, origin: tuple[int, int]) -> list[int]:
    """Reify ``ops`` as a chain c0 > c1 > ... closed by a hand c0 | c_{n-1}."""
    comp = ops if isinstance(ops, Composition) else Composition(ops)
    if len(comp) < 2:
        raise ValueError("a plasmid needs at least two links")
    sites = [world.wrap(*s) for s in plasmid_sites(len(comp), origin)]
    if any(not world.is_empty(*s) for s in sites):
        raise PlacementError(f"plasmid region at {origin} is occupied")
    chain = [world.combinator((op,), at=s) for op, s in zip(comp.ops, sites)]
    for a, b in zip(chain, chain[1:]):
        world.link_next(a, b)
    world.link_hand(chain[0], chain[-1])
    return chain


def is_origin(world: World, aid: int) -> bool:
    a = world.actors[aid]
    return a.hand is not None and a.next is not None and not a.prevs


def read_plasmid(world: World, origin: int) -> Composition:
    """Follow next bonds from the origin and return the encoded sequence."""
    ops = []
    seen = set()
    a = origin
    while a is not None and a not in seen:
        seen.add(a)
        ops.append(world.actors[a].comp.ops[0])
        a = world.actors[a].next
    return Composition(ops)


def _fill(world: World, obj: int, names):
    for name in names:
        world.behavior(enzyme_program(name), parent=obj)


def build_ribosome(world: World, at: tuple[int, int], enabled: bool = True) -> int:
    r = world.obj(RIBOSOME_CLASS, at=at)
    _fill(world, r, RIBOSOME_ENZYMES)
    if enabled:
        world.link_next(r, r)
    return r


def build_factory(world: World, at: tuple[int, int], model: str | None = None,
                  model_at: tuple[int, int] | None = None) -> int:
    """Factory object, optionally bonded to a model ("ribosome" or "factory")."""
    f = world.obj(FACTORY_CLASS, at=at)
    _fill(world, f, FACTORY_ENZYMES)
    if model is not None:
        if model_at is None:
            model_at = (at[0] + 1, at[1])
        if model == "ribosome":
            m = build_ribosome(world, model_at, enabled=False)
        elif model == "factory":
            m = build_factory(world, model_at)
        else:
            raise ValueError(f"unknown model kind {model!r}")
        world.link_next(f, m)
    return f


# ----------------------------------------------------------------------
# census


def _signature(names) -> Counter:
    return Counter(type_key(Behavior(enzyme_program(n))) for n in names)


def behavior_signature(world: World, obj: int) -> Counter:
    """Multiset of behaviour types directly inside ``obj``."""
    return Counter(type_key(world.actors[c].kind) for c in world.actors[obj].contents
                   if world.actors[c].is_behavior)


def is_complete(world: World, obj: int, cls: int) -> bool:
    a = world.actors[obj]
    if not a.is_object or a.kind.cls != cls:
        return False
    names = RIBOSOME_ENZYMES if cls == RIBOSOME_CLASS else FACTORY_ENZYMES
    return behavior_signature(world, obj) == _signature(names)


@dataclass
class Census:
    ribosomes: int
    factories: int
    enabled_ribosomes: int
    free_enzymes: int


def census(world: World) -> Census:
    rib = fac = enabled = free = 0
    for a in world.actors.values():
        if a.is_object:
            if a.kind.cls == RIBOSOME_CLASS and is_complete(world, a.id, RIBOSOME_CLASS):
                rib += 1
                if a.next == a.id:
                    enabled += 1
            elif a.kind.cls == FACTORY_CLASS and is_complete(world, a.id, FACTORY_CLASS):
                fac += 1
        elif a.is_behavior and a.parent is None:
            free += 1
    return Census(rib, fac, enabled, free)


# ----------------------------------------------------------------------
# experiment


@dataclass
class ExperimentSpec:
    width: int = 64
    height: int = 64
    ribosomes: int = 64
    factories_ribosome_model: int = 1
    factories_factory_model: int = 1
    #: plasmid copies per enzyme; the defaults follow the 2 R + 3 F stoichiometry
    plasmids_per_ribosome_enzyme: int = 2
    plasmids_per_factory_enzyme: int = 3
    #: free primitives kept per unit of stoichiometric demand
    consumable_scale: float = 1.0
    #: free empty objects kept per class
    empty_objects: dict = field(default_factory=lambda: {0: 2, 1: 3})
    #: explicit per-template overrides, e.g. {"op:amb": 10, "obj:0": 4}
    replenish_overrides: dict = field(default_factory=dict)


def stoichiometry(spec: ExperimentSpec) -> Counter:
    """Primitive demand of the enzyme multiset 2 R + 3 F (scaled by plasmid copies)."""
    need: Counter = Counter()
    for names, copies in ((RIBOSOME_ENZYMES, spec.plasmids_per_ribosome_enzyme),
                          (FACTORY_ENZYMES, spec.plasmids_per_factory_enzyme)):
        for name in names:
            for op in enzyme_program(name).ops:
                need[op.name] += copies
    return need


def replenish_targets(spec: ExperimentSpec) -> dict:
    targets = {}
    for name, n in stoichiometry(spec).items():
        targets[("op", name)] = max(1, round(n * spec.consumable_scale))
    for cls, n in spec.empty_objects.items():
        if n:
            targets[("obj", int(cls))] = int(n)
    for key, n in spec.replenish_overrides.items():
        kind, _, name = str(key).partition(":")
        if kind not in ("op", "obj") or not name:
            raise ValueError(f"bad replenish key {key!r}; use op:<name> or obj:<class>")
        tkey = ("obj", int(name)) if kind == "obj" else ("op", name)
        if n:
            targets[tkey] = int(n)
        else:
            targets.pop(tkey, None)
    return targets


def _random_origin(world: World, rng: random.Random, sites_for, tries: int = 2000):
    for _ in range(tries):
        origin = (rng.randrange(world.width), rng.randrange(world.height))
        sites = [world.wrap(*s) for s in sites_for(origin)]
        # keep a one-site margin so structures do not start out entangled
        ring = {world.wrap(sx + dx, sy + dy) for sx, sy in sites
                for dx in (-1, 0, 1) for dy in (-1, 0, 1)}
        if all(world.is_empty(*s) for s in ring):
            return origin
    raise PlacementError("no room left to place structure")


def setup_experiment(spec: ExperimentSpec, seed: int = 0) -> World:
    """Populate a world; consumables are added later by the replenisher."""
    world = World(spec.width, spec.height, capacity=4096)
    rng = random.Random(seed)
    for _ in range(spec.factories_ribosome_model):
        o = _random_origin(world, rng, lambda p: [p, (p[0] + 1, p[1])])
        build_factory(world, o, "ribosome", (o[0] + 1, o[1]))
    for _ in range(spec.factories_factory_model):
        o = _random_origin(world, rng, lambda p: [p, (p[0] + 1, p[1])])
        build_factory(world, o, "factory", (o[0] + 1, o[1]))
    for _ in range(spec.ribosomes):
        o = _random_origin(world, rng, lambda p: [p])
        build_ribosome(world, o)
    for names, copies in ((RIBOSOME_ENZYMES, spec.plasmids_per_ribosome_enzyme),
                          (FACTORY_ENZYMES, spec.plasmids_per_factory_enzyme)):
        for name in names:
            comp = enzyme_program(name)
            for _ in range(copies):
                o = _random_origin(world, rng, lambda p, n=len(comp): plasmid_sites(n, p))
                build_plasmid(world, comp, o)
    world.touched.clear()
    world.dirty.clear()
    return world
