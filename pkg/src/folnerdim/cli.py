"""Command line entry point: ``folnerdim <noun> <verb> ...``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from .errors import FolnerDimError
from .graphs import cayley_subgraph, iso_ratio
from .groups import ball_tree, parse_group
from .harness import (
    ExperimentSpec,
    bound_check,
    box,
    diagonal_conditions,
    diagonal_sequence,
    dimension_sequence,
    folner_sequence,
    quotient_sequence,
    torus_oracle,
)
from .linalg import format_scalar
from .operators import GroupRingMatrix, propagation
from .tiling import quasi_tile, verify_tiling_json


def _ints(text: str) -> list:
    return [int(t) for t in text.replace(" ", "").split(",") if t]


def _q(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _read_op(path: str) -> GroupRingMatrix:
    with open(path) as fh:
        return GroupRingMatrix.from_text(fh.read())


def cmd_group_info(args) -> int:
    ctx = parse_group(args.spec)
    print(f"group      {ctx}")
    print(f"family     {ctx.family.name.lower()}")
    print(f"abelian    {ctx.is_abelian}")
    print(f"order      {ctx.order if ctx.is_finite else 'infinite'}")
    print(f"generators {' '.join(','.join(map(str, g)) for g in ctx.generators)}")
    tree = ball_tree(ctx, args.radius)
    sizes = [tree.prefix(j) for j in range(args.radius + 1)]
    print(f"ball sizes {' '.join(map(str, sizes))}")
    return 0


def cmd_op_show(args) -> int:
    A = _read_op(args.file)
    print(f"group       {A.ctx}")
    print(f"block size  {A.d}")
    print(f"support     {len(A.support)}")
    print(f"propagation {propagation(A) if not A.is_zero() else 'undefined'}")
    for g, blk in A.support.items():
        rows = "; ".join(" ".join(format_scalar(x) for x in row) for row in blk)
        print(f"  {','.join(map(str, g))}: {rows}")
    return 0


def _describe(graphs, schedule) -> None:
    print("n,vertices,adjacencies,iso_ratio")
    for n, g in zip(schedule, graphs):
        F = [tuple(x) for x in g.labels]
        print(f"{n},{g.n},{g.num_adjacencies()},{_q(iso_ratio(g.label_ctx, F))}")


def _dump_graphs(graphs, schedule, outdir, prefix) -> None:
    if not outdir:
        return
    os.makedirs(outdir, exist_ok=True)
    for n, g in zip(schedule, graphs):
        with open(os.path.join(outdir, f"{prefix}_{n}.graph"), "w") as fh:
            fh.write(g.to_text())


def cmd_folner_build(args) -> int:
    ctx = parse_group(args.group)
    sched = _ints(args.schedule)
    graphs = folner_sequence(ctx, sched)
    _describe(graphs, sched)
    _dump_graphs(graphs, sched, args.out, "folner")
    return 0


def cmd_quotient_build(args) -> int:
    ctx = parse_group(args.group)
    sched = _ints(args.schedule)
    graphs = quotient_sequence(ctx, sched)
    _describe(graphs, sched)
    _dump_graphs(graphs, sched, args.out, "quotient")
    return 0


def cmd_diagonal_build(args) -> int:
    ctx = parse_group(args.group)
    sched = _ints(args.schedule)
    subgroups = [_ints(s) for s in args.subgroups.split(";")]
    graphs = diagonal_sequence(ctx, subgroups, sched)
    _describe(graphs, sched)
    cond = diagonal_conditions(graphs)
    print("similar fraction at step index: " + " ".join(_q(x) for x in cond["similar"]))
    print(f"isoperimetric ratios non-increasing: {cond['iso_decreasing']}")
    _dump_graphs(graphs, sched, args.out, "diagonal")
    return 0


def cmd_tile_run(args) -> int:
    ctx = parse_group(args.group)
    if ctx.is_finite:
        B = cayley_subgraph(ctx, ctx.elements())
        cover_ctx = ctx.cover
    else:
        B = folner_sequence(ctx, [args.box])[0]
        cover_ctx = ctx
    shapes = [sorted(box(cover_ctx, r)) for r in range(1, args.shapes + 1)]
    T = quasi_tile(B, shapes, Fraction(args.epsilon), mode=args.mode)
    print(f"vertices {B.n}")
    print(f"tiles    {len(T.tiles)}")
    print(f"shapes   {' '.join(map(str, T.params.indices))}")
    print(f"cover    {_q(T.cover)} ({float(T.cover):.12f})")
    print("disjoint verified")
    if args.out:
        T.dump(args.out)
    return 0


def cmd_tile_verify(args) -> int:
    with open(args.file) as fh:
        rep = verify_tiling_json(json.load(fh))
    for k, v in rep.items():
        print(f"{k:9s} {_q(v) if isinstance(v, Fraction) else v}")
    return 0 if rep["disjoint"] and rep["covers"] and rep["sizes_ok"] else 1


def cmd_dimseq_run(args) -> int:
    spec = ExperimentSpec.from_json(args.spec)
    if args.seed is not None:
        spec.seed = args.seed
    report = dimension_sequence(spec)
    sys.stdout.write(report.to_csv())
    return 0 if all(s.error is None for s in report.steps) else 1


def cmd_oracle_torus(args) -> int:
    A = _read_op(args.op)
    print(_q(torus_oracle(A, seed=args.seed)))
    return 0


def cmd_bounds_check(args) -> int:
    A = _read_op(args.op)
    ctx = A.ctx
    B = folner_sequence(ctx, [args.box])[0]
    shapes = [sorted(box(ctx, r)) for r in range(1, args.shapes + 1)]
    eps, delta = Fraction(args.epsilon), Fraction(args.delta)
    T = quasi_tile(B, shapes, eps)
    target = Fraction(args.target) if args.target is not None else torus_oracle(A, seed=args.seed)
    rep = bound_check(A, B, eps, delta, T, target, seed=args.seed)
    print(f"target     {_q(target)}")
    print(f"normalized {_q(rep['normalized'])}")
    print(f"lower      {_q(rep['lower'])} {'pass' if rep['lower_ok'] else 'FAIL'}")
    print(f"upper      {_q(rep['upper'])} {'pass' if rep['upper_ok'] else 'FAIL'}")
    print(f"cover      {_q(rep['cover'])}")
    for idx, s in rep["shapes"].items():
        print(f"shape {idx}: size {s['size']} restriction {s['restriction_dim']} minus {s['minus']} plus {s['plus']}")
    return 0 if rep["lower_ok"] and rep["upper_ok"] else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="folnerdim", description="Finite approximation of kernel dimensions over amenable groups.")
    nouns = p.add_subparsers(dest="noun", required=True)

    def verb(noun, name, func, help=None):
        sub = nouns.choices[noun] if noun in nouns.choices else nouns.add_parser(noun)
        if not hasattr(sub, "_verbs"):
            sub._verbs = sub.add_subparsers(dest="verb", required=True)
        v = sub._verbs.add_parser(name, help=help)
        v.set_defaults(func=func)
        return v

    v = verb("group", "info", cmd_group_info, "describe a group")
    v.add_argument("spec")
    v.add_argument("--radius", type=int, default=3)

    v = verb("op", "show", cmd_op_show, "describe an operator file")
    v.add_argument("file")

    for noun, func in (("folner", cmd_folner_build), ("quotient", cmd_quotient_build), ("diagonal", cmd_diagonal_build)):
        v = verb(noun, "build", func, f"build a {noun} graph sequence")
        v.add_argument("--group", required=True)
        v.add_argument("--schedule", required=True, help="comma separated sizes")
        v.add_argument("--out", help="directory for graph text files")
        if noun == "diagonal":
            v.add_argument("--subgroups", required=True, help="moduli per stage, e.g. '2,0;6,0'")

    v = verb("tile", "run", cmd_tile_run, "quasi-tile a box or finite quotient")
    v.add_argument("--epsilon", required=True)
    v.add_argument("--group", default="Z^2")
    v.add_argument("--box", type=int, default=100)
    v.add_argument("--shapes", type=int, default=30, help="largest shape radius")
    v.add_argument("--mode", choices=("practical", "theoretical"), default="practical")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out")
    v = verb("tile", "verify", cmd_tile_verify, "re-verify a tiling JSON file")
    v.add_argument("file")

    v = verb("dimseq", "run", cmd_dimseq_run, "run a dimension sequence experiment")
    v.add_argument("--spec", required=True)
    v.add_argument("--seed", type=int)

    v = verb("oracle", "torus", cmd_oracle_torus, "kernel dimension over Z^d from the symbol")
    v.add_argument("--op", required=True)
    v.add_argument("--seed", type=int, default=0)

    v = verb("bounds", "check", cmd_bounds_check, "check dimension bounds along a quasi-tiling")
    v.add_argument("--op", required=True)
    v.add_argument("--box", type=int, default=200)
    v.add_argument("--shapes", type=int, default=60)
    v.add_argument("--epsilon", default="1/4")
    v.add_argument("--delta", default="1/10")
    v.add_argument("--target")
    v.add_argument("--seed", type=int, default=0)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FolnerDimError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
