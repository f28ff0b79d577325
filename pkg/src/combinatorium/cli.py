"""Command line entry points: compile, eval, sim, experiment."""

from __future__ import annotations

import argparse
import random
import sys
from pathlib import Path

from . import compiler, config
from .biokit import PlacementError
from .compiler import CompileError
from .machine import run_program
from .scalars import ScalarDomain


def _load_program(path: str):
    text = Path(path).read_text()
    if path.endswith(".dfg"):
        return compiler.compile_source(text)
    return compiler.read_cmb(text)


def _parse_set(text: str) -> frozenset:
    body = text.strip().strip("{}")
    if not body:
        return frozenset()
    return frozenset(int(v) for v in body.replace(",", " ").split())


def cmd_compile(args) -> int:
    try:
        program = compiler.compile_file(args.input)
    except CompileError as exc:
        print(f"{args.input}:{exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    text = compiler.format_cmb(program)
    out = args.output or str(Path(args.input).with_suffix(".cmb"))
    Path(out).write_text(text)
    sys.stdout.write(text)
    if args.emit_hash:
        print(f"hash {program.hash}")
    return 0


def cmd_eval(args) -> int:
    try:
        program = _load_program(args.program)
        initial = [_parse_set(v) for v in args.input]
    except (CompileError, KeyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    outcome = run_program(program, initial, ScalarDomain(), random.Random(args.seed))
    if outcome.succeeded:
        value = ",".join(str(v) for v in sorted(outcome.top)) if outcome.stack else ""
        print(f"Succeeded({{{value}}}) cost={outcome.cost}")
    else:
        print(f"Failed cost={outcome.cost}")
    return 0


def _run_config(args) -> config.RunConfig:
    cfg = config.load(args.config)
    if args.sample_dt is not None:
        cfg.sample_dt = args.sample_dt
    if args.seed is not None:
        cfg.seed = args.seed
    if getattr(args, "runs", None) is not None:
        cfg.runs = args.runs
    return config.validate(cfg)


def cmd_sim(args) -> int:
    from .experiment import run_single

    try:
        cfg = _run_config(args)
        result = run_single(cfg, cfg.seed, args.out_dir)
    except (config.ConfigError, PlacementError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    last = result.rows[-1]
    print(f"seed {cfg.seed}: t={last['time']} events={last['event_count']} "
          f"ribosomes={last['ribosome_count']} factories={last['factory_count']}")
    print(f"wrote {result.csv_path} and {result.snapshot_path}")
    return 0


def cmd_experiment(args) -> int:
    from .experiment import run_ensemble

    try:
        cfg = _run_config(args)
        seeds = [cfg.seed + i for i in range(cfg.runs)]
        results, summary = run_ensemble(cfg, seeds, args.out_dir, args.jobs)
    except (config.ConfigError, PlacementError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for r in results:
        first, last = r.rows[0], r.rows[-1]
        print(f"seed {r.seed}: ribosomes {first['ribosome_count']} -> {last['ribosome_count']}, "
              f"factories {first['factory_count']} -> {last['factory_count']}")
    print(f"wrote {summary}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="combinatorium", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compile", help="compile a .dfg dataflow graph to a .cmb sequence")
    c.add_argument("input")
    c.add_argument("-o", "--output")
    c.add_argument("--emit-hash", action="store_true", help="print the prime-product hash")
    c.set_defaults(func=cmd_compile)

    e = sub.add_parser("eval", help="run a program in the integer-set domain")
    e.add_argument("program", help=".cmb file (or .dfg, compiled on the fly)")
    e.add_argument("input", nargs="+", help="initial stack values, bottom first, e.g. 15 or {3,5}")
    e.add_argument("--seed", type=int, default=0)
    e.set_defaults(func=cmd_eval)

    for name, func, helptext in (("sim", cmd_sim, "single run with metrics and snapshot"),
                                 ("experiment", cmd_experiment, "ensemble of seeds with summary")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--config", help="YAML run configuration")
        s.add_argument("--seed", type=int)
        s.add_argument("--out-dir", default="out")
        s.add_argument("--sample-dt", type=float)
        if name == "experiment":
            s.add_argument("--runs", type=int)
            s.add_argument("--jobs", type=int, help="worker processes (default: config)")
        s.set_defaults(func=func)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
