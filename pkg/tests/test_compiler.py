import random

import pytest
from hypothesis import given, settings, strategies as st

from combinatorium import biokit
from combinatorium.compiler import (
    CompileError, compile_source, emit, format_cmb, parse, read_cmb, schedule,
)
from combinatorium.machine import run_program
from combinatorium.scalars import ScalarDomain, equals, pred, times

GOLDEN = "x0 pred iota amb x1 iota amb x1 times x0 equals some".split()


def test_primality_golden():
    prog = compile_source(biokit.program_source("primality"))
    assert prog.names == GOLDEN


def test_cmb_roundtrip():
    prog = compile_source(biokit.program_source("primality"))
    text = format_cmb(prog)
    assert len(text.splitlines()) == 12
    assert read_cmb(text + "# trailing comment\n") == prog


@pytest.mark.parametrize("name", biokit.RIBOSOME_ENZYMES + biokit.FACTORY_ENZYMES)
def test_enzymes_compile(name):
    prog = biokit.enzyme_program(name)
    assert prog.names[0].startswith("x")
    assert all(op.name != "unit" for op in prog)


def test_abbreviations_and_hash_in_decl():
    src = """
    a: input
    b: op ^     # parents
    c: op #     # neighbours, not a comment
    d: guard A
    a -> b
    b -> c
    c -> d
    """
    assert compile_source(src).names == ["x0", "parents", "neighbors", "amb"]


def test_diamond_reuses_by_copy():
    src = """
    i: input
    a: op pred
    b: op times
    i -> a
    a -> b
    a -> b
    """
    # once a copy is pushed for a node, later operands are copied too
    assert compile_source(src).names == ["x0", "pred", "x1", "x1", "times"]


def test_explicit_ports():
    src = """
    i: input
    p: op pred
    d: op different
    i -> p
    p ->2 d
    i ->1 d
    """
    prog = compile_source(src)
    out = run_program(prog, [frozenset({3, 5})], ScalarDomain())
    assert out.top == {3, 5} - {2, 4}


def test_actions_scheduled_after_values():
    src = """
    i: input
    r: op parents
    u: act unbond
    n: op nexts
    s: guard S
    i -> r
    r -> u
    r -> n
    n -> s
    """
    order = schedule(parse(src))
    assert order.index("u") > order.index("s")


def test_control_edge_orders_actions():
    src = """
    i: input
    a: act drop
    b: act off
    i -> a
    i -> b
    b .-> a
    """
    assert compile_source(src).names == ["x0", "off", "x0", "drop"]


def test_filtering_guard_keeps_stack_shape():
    src = """
    i: input
    n: op nexts
    s: guard N
    h: op hands
    i -> n
    n -> s
    i -> h
    """
    em = emit(parse(src))
    assert em.program.names == ["x0", "hands", "x0", "nexts", "none"]
    assert em.final_stack == ["i", "h"]


@pytest.mark.parametrize("src,msg,line", [
    ("", "empty graph", 0),
    ("a: input\nb: input\n", "exactly one input", 0),
    ("a: input\na: op pred\n", "duplicate", 2),
    ("a: input\nb: op frob\na -> b\n", "unknown op", 2),
    ("a: input\nb: act hands\na -> b\n", "not an action", 2),
    ("a: input\nb: op grab\n", "not a non-action", 2),
    ("a: input\nb: guard Q\n", "unknown guard", 2),
    ("a: input\nb: op x1\n", "inserted by the compiler", 2),
    ("a: input\nb: op pred\na -> c\n", "undefined node", 3),
    ("a: input\nb: op pred\n", "arity mismatch", 2),
    ("a: input\nb: op pred\na -> b\na -> b\n", "arity mismatch", 4),
    ("a: input\nb: op pred\na ->1 b\na ->1 b\n", "already connected", 4),
    ("a: input\ns: guard S\nb: op pred\na -> s\ns -> b\n", "produces no value", 5),
    ("a: input\nb: op times\nc: op pred\na -> b\nc -> b\nb -> c\n", "cycle", 2),
    ("a: input\nb pred\n", "syntax error", 2),
    ("a: input\nb: wibble pred\n", "unknown node kind", 2),
])
def test_errors_carry_position(src, msg, line):
    with pytest.raises(CompileError) as exc:
        compile_source(src)
    assert msg in str(exc.value)
    assert exc.value.line == line


def test_too_deep_stack_is_reported():
    lines = ["i: input"] + [f"q{k:02d}: op pred" for k in range(11)]
    lines += [f"i -> q{k:02d}" for k in range(11)]
    lines += ["t: op times", "q00 -> t", "q10 -> t"]
    with pytest.raises(CompileError, match="too deep"):
        compile_source("\n".join(lines))


# random dataflow graphs over deterministic scalar ops, checked against direct evaluation
_UN = {"pred": pred}
_BIN = {"times": times, "equals": equals, "different": lambda a, b: a - b}


@st.composite
def graphs(draw):
    n = draw(st.integers(1, 7))
    nodes = ["v0"]
    decls, edges, spec = ["v0: input"], [], {}
    for k in range(1, n + 1):
        nid = f"v{k}"
        name = draw(st.sampled_from(sorted(_UN) + sorted(_BIN)))
        args = [draw(st.sampled_from(nodes)) for _ in range(1 if name in _UN else 2)]
        decls.append(f"{nid}: op {name}")
        edges += [f"{a} ->{p} {nid}" for p, a in enumerate(args, start=1)]
        spec[nid] = (name, args)
        nodes.append(nid)
    return "\n".join(decls + edges), spec


@given(graphs(), st.frozensets(st.integers(0, 6), min_size=1, max_size=4))
@settings(max_examples=150, deadline=None)
def test_compiled_program_matches_graph_evaluation(graph, value):
    src, spec = graph
    env = {"v0": value}
    for nid, (name, args) in spec.items():
        vals = [env[a] for a in args]
        env[nid] = _UN[name](*vals) if name in _UN else _BIN[name](*vals)
    try:
        em = emit(parse(src))
    except CompileError as exc:
        assert "too deep" in str(exc)
        return
    out = run_program(em.program, [value], ScalarDomain(), random.Random(0))
    assert out.succeeded
    assert list(out.stack) == [env[nid] for nid in em.final_stack]
