"""Toroidal lattice of reified actors.

Positions and per-site occupancy live in numpy arrays so the compiled
diffusion kernel can read and update them in place.  Everything else
(bonds, groups, containment, kinds) lives on :class:`Actor` objects.

All mutation goes through a small set of primitives that append an inverse
record to ``_journal`` while a transaction is open; :meth:`rollback` undoes
them.  The virtual machine relies on this to trial-apply deferred actions
during search without leaving a trace.
"""

from __future__ import annotations

from contextlib import contextmanager
from typing import Iterable

import numpy as np

from .actors import Actor, ActorKind, Behavior, Combinator, Composition, ObjectKind

BOND_SLOTS = 8
MAX_BOND_SPAN = 2

#: the 8 unit offsets, in a fixed order used for direction sampling
DIRECTIONS: tuple[tuple[int, int], ...] = (
    (-1, -1), (0, -1), (1, -1),
    (-1, 0), (1, 0),
    (-1, 1), (0, 1), (1, 1),
)


class WorldError(Exception):
    pass


class Group:
    __slots__ = ("id", "members", "parent", "last_cost")

    def __init__(self, gid: int, parent: int | None):
        self.id = gid
        self.members: dict[int, None] = {}
        self.parent = parent
        self.last_cost = 1

    @property
    def embedded(self) -> bool:
        return self.parent is None

    def __repr__(self) -> str:
        return f"<Group {self.id} {list(self.members)}>"


class World:
    def __init__(self, width: int, height: int, capacity: int = 1024):
        if width < 3 or height < 3:
            raise ValueError("world must be at least 3x3")
        self.width = width
        self.height = height
        self.actors: dict[int, Actor] = {}
        self.groups: dict[int, Group] = {}
        self._next_actor = 0
        self._next_group = 0
        self._journal: list | None = None
        #: embedded groups whose membership, mass or behaviour set changed
        self.touched: set[int] = set()
        #: actors whose bonds, group, container or kind changed
        self.dirty: set[int] = set()
        self._saved_touched: set[int] = set()

        nsites = width * height
        self.site_head = np.full(nsites, -1, dtype=np.int32)
        self.site_cnt = np.zeros(nsites, dtype=np.int32)
        self._alloc_actor_arrays(capacity)
        self._alloc_group_arrays(capacity)

    # ------------------------------------------------------------------
    # array storage

    def _alloc_actor_arrays(self, cap: int):
        self.px = np.full(cap, -1, dtype=np.int32)
        self.py = np.full(cap, -1, dtype=np.int32)
        self.site_nxt = np.full(cap, -1, dtype=np.int32)
        self.site_prv = np.full(cap, -1, dtype=np.int32)
        self.bp = np.full((cap, BOND_SLOTS), -1, dtype=np.int32)
        self.nbp = np.zeros(cap, dtype=np.int32)

    def _alloc_group_arrays(self, cap: int):
        self.g_single = np.full(cap, -1, dtype=np.int32)
        self.g_mass = np.ones(cap, dtype=np.float64)
        self.g_alive = np.zeros(cap, dtype=np.int8)
        self.g_gen = np.zeros(cap, dtype=np.int64)

    @staticmethod
    def _grow(arr: np.ndarray, cap: int, fill) -> np.ndarray:
        shape = (cap,) + arr.shape[1:]
        out = np.full(shape, fill, dtype=arr.dtype)
        out[: len(arr)] = arr
        return out

    def _ensure_actor_cap(self, aid: int):
        cap = len(self.px)
        if aid < cap:
            return
        cap = max(cap * 2, aid + 1)
        self.px = self._grow(self.px, cap, -1)
        self.py = self._grow(self.py, cap, -1)
        self.site_nxt = self._grow(self.site_nxt, cap, -1)
        self.site_prv = self._grow(self.site_prv, cap, -1)
        self.bp = self._grow(self.bp, cap, -1)
        self.nbp = self._grow(self.nbp, cap, 0)

    def _ensure_group_cap(self, gid: int):
        cap = len(self.g_single)
        if gid < cap:
            return
        cap = max(cap * 2, gid + 1)
        self.g_single = self._grow(self.g_single, cap, -1)
        self.g_mass = self._grow(self.g_mass, cap, 1.0)
        self.g_alive = self._grow(self.g_alive, cap, 0)
        self.g_gen = self._grow(self.g_gen, cap, 0)

    # ------------------------------------------------------------------
    # transactions

    def _log(self, fn, *args):
        if self._journal is not None:
            self._journal.append((fn, args))

    def begin(self):
        if self._journal is not None:
            raise WorldError("transaction already open")
        self._journal = []
        self._saved_touched = set(self.touched)

    def rollback(self):
        journal, self._journal = self._journal, None
        for fn, args in reversed(journal):
            fn(*args)
        self.touched = self._saved_touched

    def commit(self):
        self._journal = None

    @contextmanager
    def trial(self):
        """Apply mutations tentatively; they are always rolled back."""
        self.begin()
        try:
            yield
        finally:
            self.rollback()

    # ------------------------------------------------------------------
    # geometry

    def wrap(self, x: int, y: int) -> tuple[int, int]:
        return x % self.width, y % self.height

    def l1(self, p: tuple[int, int], q: tuple[int, int]) -> int:
        dx = abs(p[0] - q[0]) % self.width
        dy = abs(p[1] - q[1]) % self.height
        return min(dx, self.width - dx) + min(dy, self.height - dy)

    def linf(self, p: tuple[int, int], q: tuple[int, int]) -> int:
        dx = abs(p[0] - q[0]) % self.width
        dy = abs(p[1] - q[1]) % self.height
        return max(min(dx, self.width - dx), min(dy, self.height - dy))

    def site_index(self, x: int, y: int) -> int:
        return (y % self.height) * self.width + (x % self.width)

    def occupants(self, x: int, y: int) -> list[int]:
        out = []
        a = int(self.site_head[self.site_index(x, y)])
        while a >= 0:
            out.append(a)
            a = int(self.site_nxt[a])
        return out

    def is_empty(self, x: int, y: int) -> bool:
        return self.site_cnt[self.site_index(x, y)] == 0

    # ------------------------------------------------------------------
    # queries

    def __getitem__(self, aid: int) -> Actor:
        return self.actors[aid]

    def __contains__(self, aid: int) -> bool:
        return aid in self.actors

    def root_of(self, aid: int) -> int:
        a = self.actors[aid]
        while a.parent is not None:
            a = self.actors[a.parent]
        return a.id

    def is_root(self, aid: int) -> bool:
        return self.actors[aid].parent is None

    def pos(self, aid: int) -> tuple[int, int]:
        """Position of ``aid``; contained actors report their root's site."""
        r = self.root_of(aid)
        return int(self.px[r]), int(self.py[r])

    def distance(self, a: int, b: int) -> int:
        return self.l1(self.pos(a), self.pos(b))

    def neighborhood(self, aid: int) -> set[int]:
        """Root actors on the 3x3 block around ``aid``'s root, minus the root."""
        r = self.root_of(aid)
        x, y = int(self.px[r]), int(self.py[r])
        out = set()
        head, nxt = self.site_head, self.site_nxt
        w, h = self.width, self.height
        for dy in (-1, 0, 1):
            row = ((y + dy) % h) * w
            for dx in (-1, 0, 1):
                a = int(head[row + (x + dx) % w])
                while a >= 0:
                    out.add(a)
                    a = int(nxt[a])
        out.discard(r)
        return out

    def group_of(self, aid: int) -> Group:
        return self.groups[self.actors[aid].group]

    def group_mass(self, gid: int) -> int:
        return sum(self.actors[m].mass for m in self.groups[gid].members)

    def behaviors_in(self, aid: int) -> list[int]:
        """Behaviours at or transitively inside ``aid``."""
        out = []
        stack = [aid]
        while stack:
            a = self.actors[stack.pop()]
            if a.is_behavior:
                out.append(a.id)
            elif a.contents:
                stack.extend(a.contents)
        return out

    def group_behaviors(self, gid: int) -> list[int]:
        out = []
        for m in self.groups[gid].members:
            out.extend(self.behaviors_in(m))
        out.sort()
        return out

    def embedded_groups(self) -> list[int]:
        return [g.id for g in self.groups.values() if g.parent is None]

    def total_mass(self) -> int:
        return sum(a.mass for a in self.actors.values() if a.parent is None)

    def roots(self) -> Iterable[Actor]:
        return (a for a in self.actors.values() if a.parent is None)

    # ------------------------------------------------------------------
    # low level mutation primitives (journaled)

    def _refresh_bonds(self, aid: int):
        if aid not in self.actors:
            return
        a = self.actors[aid]
        partners = [p for p in a.bond_partners() if p != aid]
        row = self.bp[aid]
        row[:] = -1
        if len(partners) > BOND_SLOTS:
            self.nbp[aid] = -1
            return
        for i, p in enumerate(sorted(partners)):
            row[i] = p
        self.nbp[aid] = len(partners)

    def _set_hand_field(self, aid: int, value):
        a = self.actors[aid]
        self._log(self._set_hand_field, aid, a.hand)
        a.hand = value
        self.dirty.add(aid)
        self._refresh_bonds(aid)

    def _set_next_field(self, aid: int, value):
        a = self.actors[aid]
        old = a.next
        if old == value:
            return
        self._log(self._set_next_field, aid, old)
        self.dirty.add(aid)
        if old is not None:
            self.dirty.add(old)
        if value is not None:
            self.dirty.add(value)
        if old is not None and old in self.actors:
            self.actors[old].prevs.pop(aid, None)
            self._refresh_bonds(old)
        a.next = value
        if value is not None:
            self.actors[value].prevs[aid] = None
            self._refresh_bonds(value)
        self._refresh_bonds(aid)

    def _mark(self, aid: int):
        """Record that the embedded group holding ``aid`` changed."""
        a = self.actors.get(aid)
        if a is None:
            return
        while a.parent is not None:
            a = self.actors[a.parent]
        if a.group >= 0:
            self.touched.add(a.group)
            self._sync_group(a.group)

    def _sync_group(self, gid: int):
        g = self.groups.get(gid)
        if g is None:
            self.g_alive[gid] = 0
            self.g_single[gid] = -1
            return
        self.g_alive[gid] = 1
        if g.parent is None:
            self.g_mass[gid] = max(1, sum(self.actors[m].mass for m in g.members))
            self.g_single[gid] = next(iter(g.members)) if len(g.members) == 1 else -1
        else:
            self.g_single[gid] = -1

    def _new_group(self, parent: int | None) -> int:
        gid = self._next_group
        self._next_group += 1
        self._ensure_group_cap(gid)
        self.groups[gid] = Group(gid, parent)
        self._log(self._forget_group, gid)
        self._sync_group(gid)
        if parent is None:
            self.touched.add(gid)
        return gid

    def _forget_group(self, gid: int):
        self.groups.pop(gid)
        self._next_group = gid
        self._sync_group(gid)

    def _restore_group(self, g: Group):
        self.groups[g.id] = g
        self._sync_group(g.id)

    def _drop_group(self, gid: int):
        g = self.groups.pop(gid)
        if g.members:
            raise WorldError("cannot drop a non-empty group")
        self._log(self._restore_group, g)
        self._sync_group(gid)
        self.touched.discard(gid)

    def _set_group(self, aid: int, gid: int):
        a = self.actors[aid]
        old = a.group
        if old == gid:
            return
        self._log(self._set_group, aid, old)
        self.dirty.add(aid)
        if old >= 0 and old in self.groups:
            self.groups[old].members.pop(aid, None)
            self.dirty.update(self.groups[old].members)
            self._sync_group(old)
            if self.groups[old].parent is None:
                self.touched.add(old)
        a.group = gid
        if gid >= 0:
            g = self.groups[gid]
            g.members[aid] = None
            self.dirty.update(g.members)
            self._sync_group(gid)
            if g.parent is None:
                self.touched.add(gid)

    def _leave_group(self, aid: int):
        """Remove ``aid`` from its group, dropping the group if it empties."""
        old = self.actors[aid].group
        self._set_group(aid, -1)
        if old >= 0 and old in self.groups and not self.groups[old].members:
            self._drop_group(old)

    def _place(self, aid: int, x: int, y: int):
        x, y = x % self.width, y % self.height
        if self.px[aid] >= 0:
            raise WorldError(f"actor {aid} already placed")
        s = y * self.width + x
        head = self.site_head[s]
        self.site_nxt[aid] = head
        self.site_prv[aid] = -1
        if head >= 0:
            self.site_prv[head] = aid
        self.site_head[s] = aid
        self.site_cnt[s] += 1
        self.px[aid] = x
        self.py[aid] = y
        self._log(self._unplace, aid)

    def _unplace(self, aid: int):
        x, y = int(self.px[aid]), int(self.py[aid])
        if x < 0:
            raise WorldError(f"actor {aid} is not placed")
        s = y * self.width + x
        nxt, prv = self.site_nxt[aid], self.site_prv[aid]
        if prv >= 0:
            self.site_nxt[prv] = nxt
        else:
            self.site_head[s] = nxt
        if nxt >= 0:
            self.site_prv[nxt] = prv
        self.site_nxt[aid] = -1
        self.site_prv[aid] = -1
        self.site_cnt[s] -= 1
        self.px[aid] = -1
        self.py[aid] = -1
        self._log(self._place, aid, x, y)

    def _move(self, aid: int, x: int, y: int):
        self._unplace(aid)
        self._place(aid, x, y)

    def _set_parent(self, aid: int, parent: int | None):
        a = self.actors[aid]
        old = a.parent
        if old == parent:
            return
        self._log(self._set_parent, aid, old)
        self.dirty.add(aid)
        if old is not None:
            self.dirty.add(old)
        if parent is not None:
            self.dirty.add(parent)
        if old is not None:
            self.actors[old].contents.pop(aid, None)
        a.parent = parent
        if parent is not None:
            self.actors[parent].contents[aid] = None

    def _set_kind(self, aid: int, kind: ActorKind):
        a = self.actors[aid]
        self._log(self._set_kind, aid, a.kind)
        a.kind = kind
        self.dirty.add(aid)

    def _add_mass(self, aid: int, delta: int):
        """Change the mass of ``aid`` and of every enclosing object."""
        if not delta:
            return
        self._log(self._add_mass, aid, -delta)
        a = self.actors[aid]
        while True:
            a.mass += delta
            if a.parent is None:
                break
            a = self.actors[a.parent]
        if a.group >= 0:
            self._sync_group(a.group)
            if a.group in self.groups and self.groups[a.group].parent is None:
                self.touched.add(a.group)

    def _new_actor_id(self) -> int:
        aid = self._next_actor
        self._next_actor += 1
        self._ensure_actor_cap(aid)
        return aid

    def _register(self, actor: Actor):
        self.actors[actor.id] = actor
        self.dirty.add(actor.id)
        self._log(self._forget_actor, actor.id)

    def _forget_actor(self, aid: int):
        self.actors.pop(aid)
        self.dirty.add(aid)
        if aid == self._next_actor - 1:
            self._next_actor = aid
        self.bp[aid] = -1
        self.nbp[aid] = 0

    def _restore_actor(self, actor: Actor):
        self.actors[actor.id] = actor
        self.dirty.add(actor.id)
        self._refresh_bonds(actor.id)

    def _delete_actor(self, aid: int):
        a = self.actors[aid]
        if a.has_bonds() or a.group >= 0 or a.parent is not None or self.px[aid] >= 0:
            raise WorldError(f"actor {aid} still attached")
        self.actors.pop(aid)
        self.dirty.add(aid)
        self.bp[aid] = -1
        self.nbp[aid] = 0
        self._log(self._restore_actor, a)

    # ------------------------------------------------------------------
    # structural operations built from the primitives

    def spawn(self, kind: ActorKind, at: tuple[int, int] | None = None,
              parent: int | None = None, group: int | None = None) -> int:
        """Create an actor either at a site (root) or inside ``parent``.

        A fresh singleton group is made unless ``group`` is given.
        """
        if (at is None) == (parent is None):
            raise WorldError("give exactly one of a position or a parent")
        aid = self._new_actor_id()
        self._register(Actor(aid, kind))
        if parent is not None:
            self._set_parent(aid, parent)
            self._add_mass(parent, self.actors[aid].mass)
        else:
            self._place(aid, *at)
        if group is None:
            group = self._new_group(parent)
        elif self.groups[group].parent != parent:
            raise WorldError("group belongs to a different container")
        self._set_group(aid, group)
        return aid

    def combinator(self, ops, at=None, parent=None, group=None) -> int:
        comp = ops if isinstance(ops, Composition) else Composition(ops)
        return self.spawn(Combinator(comp), at=at, parent=parent, group=group)

    def behavior(self, ops, at=None, parent=None, group=None) -> int:
        comp = ops if isinstance(ops, Composition) else Composition(ops)
        return self.spawn(Behavior(comp), at=at, parent=parent, group=group)

    def obj(self, cls: int, at=None, parent=None, group=None) -> int:
        return self.spawn(ObjectKind(cls), at=at, parent=parent, group=group)

    def new_group(self, parent: int | None = None) -> int:
        return self._new_group(parent)

    def set_group(self, aid: int, gid: int):
        """Move ``aid`` into group ``gid`` (same container required)."""
        if self.groups[gid].parent != self.actors[aid].parent:
            raise WorldError("groups only hold actors with the same parent")
        self._leave_group(aid)
        self._set_group(aid, gid)

    def isolate(self, aid: int) -> int:
        """Put ``aid`` alone in a fresh group."""
        a = self.actors[aid]
        self._leave_group(aid)
        gid = self._new_group(a.parent)
        self._set_group(aid, gid)
        return gid

    def link_hand(self, a: int, b: int):
        if self.actors[a].hand is not None or self.actors[b].hand is not None:
            raise WorldError("hand already taken")
        self._set_hand_field(a, b)
        self._set_hand_field(b, a)

    def unlink_hand(self, a: int):
        b = self.actors[a].hand
        if b is None:
            return
        self._set_hand_field(a, None)
        if b in self.actors:
            self._set_hand_field(b, None)

    def link_next(self, a: int, b: int):
        if self.actors[a].next is not None:
            raise WorldError("next already taken")
        self._set_next_field(a, b)

    def unlink_next(self, a: int):
        self._set_next_field(a, None)

    def unlink_prevs(self, a: int):
        for p in list(self.actors[a].prevs):
            self._set_next_field(p, None)

    def contain(self, aid: int, container: int):
        """Move root ``aid`` (without bonds) inside ``container``."""
        a = self.actors[aid]
        if a.parent is not None:
            raise WorldError("only roots can be contained here")
        self._unplace(aid)
        self._leave_group(aid)
        self._set_parent(aid, container)
        self._add_mass(container, a.mass)
        self._set_group(aid, self._new_group(container))

    def release(self, aid: int):
        """Move ``aid`` into its parent's parent (root at the same site)."""
        a = self.actors[aid]
        parent = a.parent
        if parent is None:
            raise WorldError("actor has no parent")
        grand = self.actors[parent].parent
        site = self.pos(parent)
        self._leave_group(aid)
        self._add_mass(parent, -a.mass)
        self._set_parent(aid, grand)
        if grand is None:
            self._place(aid, *site)
        self._set_group(aid, self._new_group(grand))

    def remove(self, aid: int):
        """Delete an unbonded actor and its mass from the world."""
        a = self.actors[aid]
        if a.contents:
            raise WorldError("cannot remove a non-empty object")
        if a.parent is not None:
            self._add_mass(a.parent, -a.mass)
            self._set_parent(aid, None)
        else:
            self._unplace(aid)
        self._leave_group(aid)
        self._delete_actor(aid)

    def relocate(self, aid: int, x: int, y: int):
        self._move(aid, x, y)
        self._mark(aid)

    def set_kind(self, aid: int, kind: ActorKind):
        a = self.actors[aid]
        old_mass = a.mass
        self._set_kind(aid, kind)
        if not isinstance(kind, ObjectKind) and kind.comp.mass != old_mass:
            self._add_mass(aid, kind.comp.mass - old_mass)
        self._mark(aid)

    # ------------------------------------------------------------------
    # diffusion

    def move_feasible(self, members: Iterable[int], dx: int, dy: int) -> bool:
        """True if translating ``members`` keeps every bond within span 2."""
        members = set(members)
        for m in members:
            mx, my = int(self.px[m]) + dx, int(self.py[m]) + dy
            for p in self.actors[m].bond_partners():
                if p == m:
                    continue
                if p in members:
                    continue
                if self.l1((mx, my), (int(self.px[p]), int(self.py[p]))) > MAX_BOND_SPAN:
                    return False
        return True

    def try_group_move(self, gid: int, offset: tuple[int, int], rng) -> bool:
        """Translate an embedded group one step; returns whether it moved."""
        dx, dy = offset
        if max(abs(dx), abs(dy)) != 1:
            raise ValueError("offset must be a unit step")
        g = self.groups[gid]
        if g.parent is not None:
            raise WorldError("only embedded groups diffuse")
        members = list(g.members)
        if len(members) == 1:
            a = members[0]
            x, y = int(self.px[a]), int(self.py[a])
            if not self.is_empty(x + dx, y + dy):
                empties = [(ex, ey) for ex, ey in DIRECTIONS if self.is_empty(x + ex, y + ey)]
                if empties:
                    dx, dy = empties[rng.randrange(len(empties))]
        if not self.move_feasible(members, dx, dy):
            return False
        for m in members:
            self._move(m, int(self.px[m]) + dx, int(self.py[m]) + dy)
        return True

    # ------------------------------------------------------------------
    # consistency

    def check_invariants(self):
        """Raise :class:`WorldError` describing the first violated invariant."""
        actors = self.actors
        for a in actors.values():
            if a.hand is not None and actors[a.hand].hand != a.id:
                raise WorldError(f"hand of {a.id} not symmetric")
            if a.next is not None and a.id not in actors[a.next].prevs:
                raise WorldError(f"next of {a.id} has no matching prev")
            for p in a.prevs:
                if actors[p].next != a.id:
                    raise WorldError(f"prev {p} of {a.id} does not point back")
            if a.group not in self.groups or a.id not in self.groups[a.group].members:
                raise WorldError(f"actor {a.id} not in its group")
            if self.groups[a.group].parent != a.parent:
                raise WorldError(f"actor {a.id} grouped across containers")
            for p in a.bond_partners():
                if actors[p].parent != a.parent:
                    raise WorldError(f"bond {a.id}-{p} crosses containers")
                if a.parent is None and self.distance(a.id, p) > MAX_BOND_SPAN:
                    raise WorldError(f"bond {a.id}-{p} spans {self.distance(a.id, p)}")
            placed = self.px[a.id] >= 0
            if placed != (a.parent is None):
                raise WorldError(f"actor {a.id} placement disagrees with parent")
            if a.is_object:
                expect = 1 + sum(actors[c].mass for c in a.contents)
                for c in a.contents:
                    if actors[c].parent != a.id:
                        raise WorldError(f"content {c} of {a.id} has wrong parent")
            else:
                expect = a.comp.mass
            if a.mass != expect:
                raise WorldError(f"mass of {a.id} is {a.mass}, expected {expect}")
            row = self.bp[a.id]
            partners = sorted(p for p in a.bond_partners() if p != a.id)
            if self.nbp[a.id] >= 0 and sorted(int(v) for v in row[: self.nbp[a.id]]) != partners:
                raise WorldError(f"bond row of {a.id} is stale")
        count = 0
        for s in range(self.width * self.height):
            n = 0
            a = int(self.site_head[s])
            while a >= 0:
                if self.site_index(int(self.px[a]), int(self.py[a])) != s:
                    raise WorldError(f"actor {a} listed at wrong site")
                n += 1
                a = int(self.site_nxt[a])
            if n != self.site_cnt[s]:
                raise WorldError(f"site {s} count mismatch")
            count += n
        if count != sum(1 for a in actors.values() if a.parent is None):
            raise WorldError("occupancy does not match root count")
        for g in self.groups.values():
            if not g.members:
                raise WorldError(f"group {g.id} empty")
            if not self.g_alive[g.id]:
                raise WorldError(f"group {g.id} not flagged alive")
            if g.parent is None:
                single = next(iter(g.members)) if len(g.members) == 1 else -1
                if self.g_single[g.id] != single:
                    raise WorldError(f"group {g.id} single flag stale")
                if self.g_mass[g.id] != self.group_mass(g.id):
                    raise WorldError(f"group {g.id} mass stale")
