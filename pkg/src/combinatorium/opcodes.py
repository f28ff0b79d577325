"""Primitive combinator table.

Each primitive combinator carries a distinct prime used as its type hash.
Primes follow table order: generators, guards, relations, unary actions,
binary actions, the ten stack copies and finally ``unit``.  The scalar
demonstration domain adds four more opcodes after those 42.
"""

from __future__ import annotations

from dataclasses import dataclass

GENERATOR = "generator"
GUARD = "guard"
RELATION = "relation"
UNARY_ACTION = "unary_action"
BINARY_ACTION = "binary_action"
COPY = "copy"
UNIT = "unit"
SCALAR_UNARY = "scalar_unary"
SCALAR_BINARY = "scalar_binary"

# categories whose opcodes pop two values and push one
BINARY_CATEGORIES = frozenset({RELATION, BINARY_ACTION, SCALAR_BINARY})
ACTION_CATEGORIES = frozenset({UNARY_ACTION, BINARY_ACTION})


@dataclass(frozen=True)
class Opcode:
    name: str
    prime: int
    category: str
    abbrev: str = ""

    @property
    def arity(self) -> int:
        if self.category in BINARY_CATEGORIES:
            return 2
        if self.category in (COPY, UNIT):
            return 0
        return 1

    @property
    def stack_effect(self) -> int:
        """Net change of stack depth when the opcode succeeds."""
        if self.category in BINARY_CATEGORIES:
            return -1
        if self.category == COPY:
            return 1
        if self.name in ("some", "none"):
            return -1
        return 0

    @property
    def is_action(self) -> bool:
        return self.category in ACTION_CATEGORIES

    @property
    def copy_index(self) -> int:
        if self.category != COPY:
            raise ValueError(f"{self.name} is not a copy combinator")
        return int(self.name[1:])

    def __repr__(self) -> str:
        return f"Opcode({self.name})"

    def __str__(self) -> str:
        return self.name


def _primes(count: int) -> list[int]:
    found: list[int] = []
    n = 2
    while len(found) < count:
        if all(n % p for p in found if p * p <= n):
            found.append(n)
        n += 1
    return found


_TABLE: list[tuple[str, str, str]] = [
    ("hands", GENERATOR, "|"),
    ("nexts", GENERATOR, ">"),
    ("prevs", GENERATOR, "<"),
    ("bonds", GENERATOR, ":"),
    ("neighbors", GENERATOR, "#"),
    ("contents", GENERATOR, "@"),
    ("parents", GENERATOR, "^"),
    ("members", GENERATOR, "*"),
    ("others", GENERATOR, "+"),
    ("amb", GUARD, "A"),
    ("some", GUARD, "S"),
    ("none", GUARD, "N"),
    ("same", RELATION, "="),
    ("different", RELATION, "!="),
    ("similar", RELATION, "~"),
    ("dissimilar", RELATION, "!~"),
    ("drop", UNARY_ACTION, "!|"),
    ("unbond", UNARY_ACTION, "!>"),
    ("unbond'", UNARY_ACTION, "!<"),
    ("quit", UNARY_ACTION, "*->"),
    ("exit", UNARY_ACTION, "@->"),
    ("digest", UNARY_ACTION, ">!>"),
    ("on", UNARY_ACTION, "/"),
    ("off", UNARY_ACTION, "\\"),
    ("grab", BINARY_ACTION, "|"),
    ("bond", BINARY_ACTION, ">"),
    ("bond'", BINARY_ACTION, "<"),
    ("join", BINARY_ACTION, "->*"),
    ("eat", BINARY_ACTION, "->@"),
    ("compose", BINARY_ACTION, ">=>"),
    ("swap", BINARY_ACTION, "%"),
] + [(f"x{k}", COPY, f"x{k}") for k in range(10)] + [("unit", UNIT, "")]

_SCALAR_TABLE: list[tuple[str, str, str]] = [
    ("pred", SCALAR_UNARY, "-1"),
    ("iota", SCALAR_UNARY, "ι"),
    ("times", SCALAR_BINARY, "×"),
    ("equals", SCALAR_BINARY, "=="),
]

_ALL_PRIMES = _primes(len(_TABLE) + len(_SCALAR_TABLE))

#: the 42 primitive combinators of the actor world, in table order
OPCODES: tuple[Opcode, ...] = tuple(
    Opcode(name, prime, cat, abbrev)
    for (name, cat, abbrev), prime in zip(_TABLE, _ALL_PRIMES)
)
#: opcodes only meaningful in the integer-set demonstration domain
SCALAR_OPCODES: tuple[Opcode, ...] = tuple(
    Opcode(name, prime, cat, abbrev)
    for (name, cat, abbrev), prime in zip(_SCALAR_TABLE, _ALL_PRIMES[len(_TABLE):])
)

BY_NAME: dict[str, Opcode] = {op.name: op for op in OPCODES + SCALAR_OPCODES}
BY_PRIME: dict[int, Opcode] = {op.prime: op for op in OPCODES + SCALAR_OPCODES}

_ALIASES = {"ι": "iota", "unbond_": "unbond'", "bond_": "bond'"}
_ALIASES.update({f"x{chr(0x2080 + k)}": f"x{k}" for k in range(10)})

# abbreviations are ambiguous between generators and actions ("|", ">", "<"),
# so lookups by abbreviation are split by table
_ABBREV_NONACTION = {op.abbrev: op for op in OPCODES if not op.is_action and op.abbrev}
_ABBREV_ACTION = {op.abbrev: op for op in OPCODES if op.is_action}


def lookup(name: str) -> Opcode:
    """Return the opcode called ``name`` (canonical name or alias)."""
    name = _ALIASES.get(name, name)
    try:
        return BY_NAME[name]
    except KeyError:
        raise KeyError(f"unknown opcode {name!r}") from None


def lookup_abbrev(token: str, action: bool) -> Opcode:
    table = _ABBREV_ACTION if action else _ABBREV_NONACTION
    if token in table:
        return table[token]
    raise KeyError(f"unknown {'action' if action else 'combinator'} {token!r}")


def copy_op(k: int) -> Opcode:
    if not 0 <= k <= 9:
        raise ValueError(f"copy index {k} outside 0..9")
    return BY_NAME[f"x{k}"]


UNIT_OP = BY_NAME["unit"]
