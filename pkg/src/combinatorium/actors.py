"""Actor data model: compositions, kinds, type hashing and mass."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from math import prod
from typing import Iterable, Union

from . import opcodes
from .opcodes import Opcode

COMBINATOR = "combinator"
BEHAVIOR = "behavior"
OBJECT = "object"

OBJECT_CLASSES = range(4)


class Composition:
    """Ordered, non-empty sequence of primitive opcodes.

    The type hash is the product of the member primes, so it only depends on
    the multiset of opcodes while the sequence keeps execution order.
    """

    __slots__ = ("ops", "hash")

    def __init__(self, ops: Iterable[Union[Opcode, str]]):
        ops = tuple(opcodes.lookup(op) if isinstance(op, str) else op for op in ops)
        if not ops:
            raise ValueError("a composition needs at least one opcode")
        self.ops: tuple[Opcode, ...] = ops
        self.hash: int = prod(op.prime for op in ops)

    @classmethod
    def parse(cls, text: str) -> "Composition":
        """Build from whitespace/comma separated opcode names."""
        return cls(tok for tok in text.replace(",", " ").split())

    @property
    def mass(self) -> int:
        return len(self.ops)

    @property
    def names(self) -> list[str]:
        return [op.name for op in self.ops]

    def __len__(self) -> int:
        return len(self.ops)

    def __iter__(self):
        return iter(self.ops)

    def __add__(self, other: "Composition") -> "Composition":
        return compose_kinds(self, other)

    def __eq__(self, other) -> bool:
        return isinstance(other, Composition) and self.ops == other.ops

    def __hash__(self) -> int:
        return hash(self.ops)

    def __repr__(self) -> str:
        return f"Composition({' '.join(self.names)})"


@dataclass(frozen=True)
class Combinator:
    comp: Composition
    tag = "-"


@dataclass(frozen=True)
class Behavior:
    comp: Composition
    tag = "+"


@dataclass(frozen=True)
class ObjectKind:
    cls: int
    tag = "o"

    def __post_init__(self):
        if self.cls not in OBJECT_CLASSES:
            raise ValueError(f"object class must be 0..3, got {self.cls}")


ActorKind = Union[Combinator, Behavior, ObjectKind]


def type_hash(kind: ActorKind) -> int:
    """Prime-product hash for combinators/behaviors, class index for objects."""
    if isinstance(kind, ObjectKind):
        return kind.cls
    return kind.comp.hash


def type_key(kind: ActorKind) -> tuple[str, int]:
    """Hash tagged by constructor; equal keys mean type-equivalent kinds."""
    return (kind.tag, type_hash(kind))


def type_equivalent(a: ActorKind, b: ActorKind) -> bool:
    return type_key(a) == type_key(b)


def compose_kinds(x: Composition, y: Composition) -> Composition:
    return Composition(x.ops + y.ops)


def decompose(x: Composition) -> Counter:
    """Multiset of primitive opcodes making up ``x``."""
    return Counter(x.ops)


def factorize(h: int) -> Counter:
    """Recover the opcode multiset of a composite hash by trial division."""
    out: Counter = Counter()
    for op in opcodes.OPCODES + opcodes.SCALAR_OPCODES:
        while h % op.prime == 0:
            out[op] += 1
            h //= op.prime
    if h != 1:
        raise ValueError("hash has factors outside the opcode table")
    return out


def recompose(parts: Counter) -> Composition:
    return Composition(sorted(parts.elements(), key=lambda op: op.prime))


class Actor:
    """A reified actor.

    ``prevs`` is the set of actors whose ``next`` bond points here; ``next``
    and ``hand`` are single-valued.  ``contents`` is an insertion-ordered set
    (a dict) and is only present on objects.
    """

    __slots__ = ("id", "kind", "hand", "next", "prevs", "group", "parent",
                 "contents", "mass")

    def __init__(self, aid: int, kind: ActorKind, group: int = -1):
        self.id = aid
        self.kind = kind
        self.hand: int | None = None
        self.next: int | None = None
        self.prevs: dict[int, None] = {}
        self.group = group
        self.parent: int | None = None
        self.contents: dict[int, None] | None = {} if isinstance(kind, ObjectKind) else None
        self.mass = 1 if isinstance(kind, ObjectKind) else kind.comp.mass

    @property
    def is_object(self) -> bool:
        return isinstance(self.kind, ObjectKind)

    @property
    def is_combinator(self) -> bool:
        return isinstance(self.kind, Combinator)

    @property
    def is_behavior(self) -> bool:
        return isinstance(self.kind, Behavior)

    @property
    def comp(self) -> Composition | None:
        return None if self.is_object else self.kind.comp

    def bond_partners(self) -> set[int]:
        out = set(self.prevs)
        if self.hand is not None:
            out.add(self.hand)
        if self.next is not None:
            out.add(self.next)
        return out

    def has_bonds(self) -> bool:
        return self.hand is not None or self.next is not None or bool(self.prevs)

    def __repr__(self) -> str:
        k = self.kind
        if isinstance(k, ObjectKind):
            desc = f"[{len(self.contents)}]_{k.cls}"
        else:
            desc = f"[{' '.join(k.comp.names)}]{k.tag}"
        return f"<Actor {self.id} {desc}>"
