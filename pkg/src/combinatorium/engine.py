"""Event-driven simulator.

Each embedded group carries one pending diffusion event and, if it holds
behaviours, one pending action event.  Events record the group's generation
when scheduled; bumping the generation invalidates them.
"""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import kernel
from .actor_ops import ActorDomain
from .machine import Outcome, run_program
from .world import DIRECTIONS, World

DIFFUSION = kernel.DIFFUSION
ACTION = kernel.ACTION

Template = tuple  # ("op", name) or ("obj", cls)


@dataclass
class SimConfig:
    D: float = 10.0
    seed: int = 0
    max_time: float | None = None
    max_events: int | None = None
    #: free-count targets keyed by template; empty disables replenishment
    replenish: dict = field(default_factory=dict)
    #: abandon a single behaviour search after this many ticks
    max_cost: int | None = 100_000
    log_events: bool = False

    def __post_init__(self):
        if not self.D > 0:
            raise ValueError("D must be positive")


def free_template(world: World, aid: int) -> Template | None:
    """Template of ``aid`` if it is a free consumable, else None."""
    a = world.actors.get(aid)
    if a is None or a.parent is not None or a.has_bonds():
        return None
    if len(world.groups[a.group].members) != 1:
        return None
    if a.is_object:
        return None if a.contents else ("obj", a.kind.cls)
    if a.is_combinator and len(a.comp) == 1:
        return ("op", a.comp.ops[0].name)
    return None


class Replenisher:
    """Keeps free consumable counts at their targets."""

    def __init__(self, world: World, targets: dict, rng: random.Random):
        self.world = world
        self.targets = dict(targets)
        self.rng = rng
        self.key_of: dict[int, Template] = {}
        self.counts: Counter = Counter()
        self.spawned_mass = 0
        for aid in list(world.actors):
            self._account(aid)
        world.dirty.clear()

    def _account(self, aid: int):
        old = self.key_of.pop(aid, None)
        if old is not None:
            self.counts[old] -= 1
        key = free_template(self.world, aid)
        if key is not None:
            self.key_of[aid] = key
            self.counts[key] += 1

    def update(self):
        w = self.world
        dirty = w.dirty
        w.dirty = set()
        for aid in dirty:
            self._account(aid)

    def free_count(self, key: Template) -> int:
        return self.counts[key]

    def top_up(self) -> int:
        """Spawn consumables until every target is met; returns how many."""
        self.update()
        if not self.targets:
            return 0
        made = 0
        for key in sorted(self.targets):
            need = self.targets[key] - self.counts[key]
            for _ in range(max(0, need)):
                site = self._empty_site()
                if site is None:
                    return made
                if key[0] == "obj":
                    aid = self.world.obj(key[1], at=site)
                else:
                    aid = self.world.combinator((key[1],), at=site)
                self.spawned_mass += self.world.actors[aid].mass
                made += 1
            self.update()
        return made

    def _empty_site(self):
        w = self.world
        n = w.width * w.height
        for _ in range(64):
            s = self.rng.randrange(n)
            if w.site_cnt[s] == 0:
                return s % w.width, s // w.width
        empties = np.flatnonzero(w.site_cnt == 0)
        if len(empties) == 0:
            return None
        s = int(empties[self.rng.randrange(len(empties))])
        return s % w.width, s // w.width


class Simulation:
    def __init__(self, world: World, config: SimConfig | None = None):
        self.world = world
        self.config = config or SimConfig()
        seed = self.config.seed
        self.rng = random.Random(seed)
        self.krng = kernel.rng_state(seed * 2 + 1)
        self.domain = ActorDomain(world)
        self.now = 0.0
        self.counters = np.zeros(2, dtype=np.int64)
        self._out = np.zeros(5, dtype=np.float64)
        self._alloc_heap(1024)
        self.log: list[tuple] = []
        self.last_outcome: Outcome | None = None
        self.replenisher = Replenisher(world, self.config.replenish, self.rng)
        self.replenisher.top_up()
        world.touched.clear()
        for gid in sorted(world.embedded_groups()):
            self.schedule_diffusion(gid)
            if world.group_behaviors(gid):
                self.schedule_action(gid)

    # ------------------------------------------------------------------
    # queue

    def _alloc_heap(self, cap: int):
        self.h_time = np.zeros(cap, dtype=np.float64)
        self.h_seq = np.zeros(cap, dtype=np.int64)
        self.h_gid = np.zeros(cap, dtype=np.int32)
        self.h_gen = np.zeros(cap, dtype=np.int64)
        self.h_kind = np.zeros(cap, dtype=np.int8)
        self.hstate = np.zeros(2, dtype=np.int64)

    def _reserve(self, extra: int = 1):
        n = int(self.hstate[0])
        cap = len(self.h_time)
        if n + extra <= cap:
            return
        new = max(cap * 2, n + extra)
        for name in ("h_time", "h_seq", "h_gid", "h_gen", "h_kind"):
            old = getattr(self, name)
            arr = np.zeros(new, dtype=old.dtype)
            arr[:n] = old[:n]
            setattr(self, name, arr)

    def _push(self, t: float, gid: int, kind: int):
        self._reserve()
        kernel.heap_push(self.h_time, self.h_seq, self.h_gid, self.h_gen, self.h_kind,
                         self.hstate, t, gid, int(self.world.g_gen[gid]), kind)

    @property
    def pending(self) -> int:
        return int(self.hstate[0])

    @property
    def event_count(self) -> int:
        return int(self.counters[0])

    def pending_events(self) -> list[tuple[float, int, int, int]]:
        """Valid queued events as (time, gid, gen, kind), in queue order."""
        n = self.pending
        w = self.world
        rows = [(float(self.h_time[i]), int(self.h_seq[i]), int(self.h_gid[i]),
                 int(self.h_gen[i]), int(self.h_kind[i])) for i in range(n)]
        rows.sort()
        return [(t, g, gen, k) for t, _, g, gen, k in rows
                if w.g_alive[g] and w.g_gen[g] == gen]

    # ------------------------------------------------------------------
    # scheduling

    def diffusion_delay(self, mass: float) -> float:
        return float(kernel.rng_exponential(self.krng, mass / self.config.D))

    def action_delay(self, cost: float) -> float:
        return self.rng.expovariate(1.0 / cost)

    def schedule_diffusion(self, gid: int) -> float:
        t = self.now + self.diffusion_delay(float(self.world.g_mass[gid]))
        self._push(t, gid, DIFFUSION)
        return t

    def schedule_action(self, gid: int, cost: float | None = None) -> float | None:
        if not self.world.group_behaviors(gid):
            return None
        g = self.world.groups[gid]
        c = max(1, g.last_cost if cost is None else cost)
        t = self.now + self.action_delay(c)
        self._push(t, gid, ACTION)
        return t

    def refresh_group(self, gid: int):
        """Invalidate a group's events and schedule fresh ones."""
        w = self.world
        w.g_gen[gid] += 1
        if gid in w.groups and w.groups[gid].parent is None:
            self.schedule_diffusion(gid)
            self.schedule_action(gid)

    # ------------------------------------------------------------------
    # event handling

    def dispatch_action(self, gid: int) -> tuple[Outcome | None, int | None]:
        behaviors = self.world.group_behaviors(gid)
        if not behaviors:
            return None, None
        b = behaviors[self.rng.randrange(len(behaviors))]
        program = self.world.actors[b].comp
        out = run_program(program, [frozenset((b,))], self.domain, self.rng,
                          self.config.max_cost)
        return out, b

    def _handle(self, t: float, gid: int, kind: int):
        w = self.world
        self.now = t
        self.counters[0] += 1
        g = w.groups.get(gid)
        if g is None or g.parent is not None:
            return
        if kind == DIFFUSION:
            offset = DIRECTIONS[self.rng.randrange(8)]
            if w.try_group_move(gid, offset, self.rng):
                self.counters[1] += 1
            self._push(t + self.diffusion_delay(float(w.g_mass[gid])), gid, DIFFUSION)
            if self.config.log_events:
                self.log.append((t, gid, DIFFUSION))
            return
        w.touched.clear()
        outcome, b = self.dispatch_action(gid)
        self.last_outcome = outcome
        if outcome is None:
            return
        cost = max(1, outcome.cost)
        if gid in w.groups:
            w.groups[gid].last_cost = cost
        if self.config.log_events:
            self.log.append((t, gid, ACTION, b, outcome.succeeded, outcome.cost))
        touched = w.touched
        w.touched = set()
        if gid not in touched and gid in w.groups:
            self.schedule_action(gid, cost)
        for g in sorted(touched):
            if g in w.groups:
                self.refresh_group(g)
        if self.replenisher.targets:
            self.replenisher.top_up()
            for g in sorted(w.touched):
                if g in w.groups:
                    self.refresh_group(g)
        else:
            self.replenisher.update()
        w.touched.clear()

    def _kernel(self, t_stop: float, max_events: int) -> int:
        w = self.world
        return kernel.run(
            self.h_time, self.h_seq, self.h_gid, self.h_gen, self.h_kind, self.hstate,
            w.px, w.py, w.site_head, w.site_nxt, w.site_prv, w.site_cnt, w.bp, w.nbp,
            w.g_single, w.g_mass, w.g_alive, w.g_gen,
            w.width, w.height, float(self.config.D), self.krng,
            float(t_stop), int(max_events), self.counters, self._out)

    def step(self) -> bool:
        """Process exactly one valid event; False when the queue is empty."""
        code = self._kernel(math.inf, self.event_count + 1)
        if code == kernel.HANDOFF:
            o = self._out
            self._handle(float(o[0]), int(o[1]), int(o[3]))
            return True
        if code == kernel.EVENT_LIMIT:
            self.now = float(self._out[4])
            return True
        return False

    def run(self, until: float | None = None, max_events: int | None = None,
            sample_dt: float | None = None, on_sample=None) -> int:
        """Advance the simulation; returns the number of valid events processed.

        ``on_sample(sim, t)`` is called at ``t = 0, dt, 2 dt, ...`` up to
        ``until`` (inclusive) with the world as it stands at that time.
        """
        until = self.config.max_time if until is None else until
        until = math.inf if until is None else until
        max_events = self.config.max_events if max_events is None else max_events
        limit = np.iinfo(np.int64).max if max_events is None else self.event_count + max_events
        start = self.event_count
        next_sample = None
        if on_sample is not None and sample_dt:
            k = math.ceil(self.now / sample_dt - 1e-12)
            next_sample = k * sample_dt
        while True:
            if next_sample is not None and next_sample <= self.now and next_sample <= until:
                on_sample(self, next_sample)
                next_sample += sample_dt
                continue
            t_stop = until if next_sample is None else min(until, next_sample)
            code = self._kernel(t_stop, limit)
            if code == kernel.HANDOFF:
                o = self._out
                self._handle(float(o[0]), int(o[1]), int(o[3]))
                continue
            self.now = max(self.now, float(self._out[4]))
            if code == kernel.TIME_LIMIT:
                if next_sample is not None and next_sample <= until:
                    self.now = next_sample
                    continue
                self.now = until
            break
        return self.event_count - start
