"""Dataflow graph language and its compiler to combinator sequences.

Grammar, one statement per line::

    <id>: input
    <id>: op <name>          generator, relation or scalar op
    <id>: guard <A|S|N>      amb / some / none
    <id>: act <name>         unary or binary action
    <src> -> <dst>           data edge, next free port of dst
    <src> ->2 <dst>          data edge into an explicit port
    <src> .-> <dst>          control edge (ordering only)
    # comment

Names may be given in full (``neighbors``) or by table abbreviation
(``#`` is only an abbreviation after ``op``, never at the start of a line).
"""

from __future__ import annotations

import heapq
import re
from dataclasses import dataclass, field
from pathlib import Path

from . import opcodes
from .actors import Composition
from .opcodes import GUARD, Opcode

INPUT = "input"
OP = "op"
GUARD_KIND = "guard"
ACT = "act"

MAX_COPY = 9

_GUARD_NAMES = {"A": "amb", "S": "some", "N": "none",
                "amb": "amb", "some": "some", "none": "none"}

_ID = r"[A-Za-z_][A-Za-z0-9_']*"
_DECL = re.compile(rf"^\s*({_ID})\s*:\s*(\S+)(?:\s+(\S+))?\s*$")
_EDGE = re.compile(rf"^\s*({_ID})\s*(\.->|->(\d)?)\s*({_ID})\s*$")


class CompileError(Exception):
    """Diagnostic with a 1-based source location (0 when not applicable)."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.message = message
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line else ""
        super().__init__(f"{where}{message}")


@dataclass
class Node:
    id: str
    kind: str
    op: Opcode | None = None
    line: int = 0

    @property
    def arity(self) -> int:
        if self.kind == INPUT:
            return 0
        return self.op.arity

    @property
    def is_action(self) -> bool:
        return self.kind == ACT

    @property
    def yields_value(self) -> bool:
        return not (self.kind == GUARD_KIND and self.op.name in ("some", "none"))


@dataclass
class DataflowGraph:
    nodes: dict[str, Node] = field(default_factory=dict)
    #: dst -> {port: src}, ports numbered from 1
    inputs: dict[str, dict[int, str]] = field(default_factory=dict)
    data_edges: list[tuple[str, str, int]] = field(default_factory=list)
    control_edges: list[tuple[str, str]] = field(default_factory=list)

    @property
    def input_node(self) -> str:
        return next(n.id for n in self.nodes.values() if n.kind == INPUT)

    def operands(self, nid: str) -> list[str]:
        ports = self.inputs.get(nid, {})
        return [ports[p] for p in sorted(ports)]

    def consumers(self) -> dict[str, int]:
        """Number of data uses of each node."""
        uses = {nid: 0 for nid in self.nodes}
        for src, _, _ in self.data_edges:
            uses[src] += 1
        return uses


def _resolve(kind: str, name: str, line: int, col: int) -> Opcode:
    if kind == GUARD_KIND:
        if name not in _GUARD_NAMES:
            raise CompileError(f"unknown guard {name!r} (expected A, S or N)", line, col)
        return opcodes.BY_NAME[_GUARD_NAMES[name]]
    action = kind == ACT
    try:
        op = opcodes.lookup(name)
    except KeyError:
        try:
            op = opcodes.lookup_abbrev(name, action)
        except KeyError:
            raise CompileError(f"unknown {'action' if action else 'op'} {name!r}", line, col) from None
    if op.is_action != action:
        want = "an action" if action else "a non-action op"
        raise CompileError(f"{op.name!r} is not {want}", line, col)
    if op.category in (opcodes.COPY, opcodes.UNIT):
        raise CompileError(f"{op.name!r} is inserted by the compiler, not a graph node", line, col)
    if op.category == GUARD:
        raise CompileError(f"use 'guard' to declare {op.name!r}", line, col)
    return op


def parse(text: str) -> DataflowGraph:
    g = DataflowGraph()
    pending: list[tuple[str, str, str, int, int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0] if not _is_decl_with_hash(raw) else _strip_comment_after_decl(raw)
        if not line.strip():
            continue
        col = len(line) - len(line.lstrip()) + 1
        m = _EDGE.match(line)
        if m:
            src, arrow, port, dst = m.groups()
            pending.append((src, arrow, dst, int(port) if port else 0, lineno, col))
            continue
        m = _DECL.match(line)
        if not m:
            raise CompileError("syntax error: expected a node declaration or an edge", lineno, col)
        nid, kind, name = m.groups()
        if nid in g.nodes:
            raise CompileError(f"duplicate node id {nid!r}", lineno, col)
        kcol = line.index(kind, m.end(1)) + 1
        if kind == INPUT:
            if name is not None:
                raise CompileError("input takes no operand name", lineno, kcol)
            g.nodes[nid] = Node(nid, INPUT, None, lineno)
        elif kind in (OP, GUARD_KIND, ACT):
            if name is None:
                raise CompileError(f"{kind} needs a name", lineno, kcol)
            ncol = line.index(name, kcol + len(kind) - 1) + 1
            g.nodes[nid] = Node(nid, kind, _resolve(kind, name, lineno, ncol), lineno)
        else:
            raise CompileError(f"unknown node kind {kind!r}", lineno, kcol)

    if not g.nodes:
        raise CompileError("empty graph: no nodes declared")
    inputs = [n for n in g.nodes.values() if n.kind == INPUT]
    if len(inputs) != 1:
        raise CompileError(f"expected exactly one input node, found {len(inputs)}")

    for src, arrow, dst, port, lineno, col in pending:
        for end in (src, dst):
            if end not in g.nodes:
                raise CompileError(f"undefined node {end!r}", lineno, col)
        if arrow == ".->":
            g.control_edges.append((src, dst))
            continue
        if not g.nodes[src].yields_value:
            raise CompileError(f"{src!r} is a filtering guard and produces no value", lineno, col)
        node = g.nodes[dst]
        ports = g.inputs.setdefault(dst, {})
        if port == 0:
            port = next((p for p in range(1, node.arity + 1) if p not in ports), node.arity + 1)
        if port > node.arity or port < 1:
            raise CompileError(f"arity mismatch: {dst!r} takes {node.arity} operand(s)", lineno, col)
        if port in ports:
            raise CompileError(f"port {port} of {dst!r} already connected", lineno, col)
        ports[port] = src
        g.data_edges.append((src, dst, port))

    for node in g.nodes.values():
        have = len(g.inputs.get(node.id, {}))
        if have != node.arity:
            raise CompileError(
                f"arity mismatch: {node.id!r} has {have} incoming edge(s), needs {node.arity}",
                node.line, 1)
    schedule(g)
    return g


def _is_decl_with_hash(raw: str) -> bool:
    # "#" is the neighbors abbreviation; inside "<id>: op #" it is not a comment
    return bool(re.match(rf"^\s*{_ID}\s*:\s*op\s+#", raw))


def _strip_comment_after_decl(raw: str) -> str:
    head, _, rest = raw.partition("#")
    tail = rest.split("#", 1)[0]
    return head + "#" + tail


def schedule(g: DataflowGraph) -> list[str]:
    """Topological order with non-actions first, ties broken by node id."""
    succ: dict[str, list[str]] = {nid: [] for nid in g.nodes}
    indeg = {nid: 0 for nid in g.nodes}
    for src, dst, _ in g.data_edges:
        succ[src].append(dst)
        indeg[dst] += 1
    for src, dst in g.control_edges:
        succ[src].append(dst)
        indeg[dst] += 1
    heap = [(g.nodes[n].is_action, n) for n, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        _, nid = heapq.heappop(heap)
        order.append(nid)
        for nxt in succ[nid]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                heapq.heappush(heap, (g.nodes[nxt].is_action, nxt))
    if len(order) != len(g.nodes):
        stuck = sorted(n for n, d in indeg.items() if d > 0)
        raise CompileError(f"cycle through {', '.join(stuck)}", g.nodes[stuck[0]].line, 1)
    return order


@dataclass
class Emitted:
    program: Composition
    #: node whose value occupies each stack slot at the end, bottom first
    final_stack: list[str]


def emit(g: DataflowGraph, order: list[str] | None = None) -> Emitted:
    order = order or schedule(g)
    remaining = g.consumers()
    entry = g.input_node
    stack: list[str] = [entry]
    ops: list[Opcode] = []
    for nid in order:
        node = g.nodes[nid]
        if node.kind == INPUT:
            continue
        copied = False
        for src in g.operands(nid):
            remaining[src] -= 1
            in_place = (not copied and stack and stack[-1] == src
                        and remaining[src] == 0 and src != entry)
            if in_place:
                # value stays where it is and becomes this node's operand
                stack[-1] = "<operand>"
                continue
            k = _slot(stack, src)
            if k > MAX_COPY:
                raise CompileError(f"stack too deep for copy combinator (x{k} needed for {src!r})",
                                   node.line, 1)
            ops.append(opcodes.copy_op(k))
            stack.append("<operand>")
            copied = True
        ops.append(node.op)
        del stack[len(stack) - node.arity:]
        if node.yields_value:
            stack.append(nid)
    return Emitted(Composition(ops or [opcodes.UNIT_OP]), stack)


def _slot(stack: list[str], nid: str) -> int:
    # the deepest copy is the canonical home; all copies hold the same value
    for i, v in enumerate(stack):
        if v == nid:
            return i
    raise CompileError(f"value of {nid!r} is no longer on the stack")


def compile_source(text: str) -> Composition:
    g = parse(text)
    return emit(g).program


def compile_file(path: str | Path) -> Composition:
    return compile_source(Path(path).read_text())


def format_cmb(program: Composition) -> str:
    return "".join(f"{op.name}\n" for op in program.ops)


def read_cmb(text: str) -> Composition:
    names = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    return Composition(n for n in names if n)
