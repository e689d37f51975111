"""Experiment driver: graph sequences, dimension sequences, torus oracle, bound checks, output writers."""

from __future__ import annotations

import csv
import io
import itertools
import json
import os
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .errors import OracleInconclusiveError, PreconditionError
from .graphs import ColoredGraph, _as_set, cayley_subgraph, iso_ratio, similar_count
from .groups import Family, GroupContext, ball_elements, parse_group
from .linalg import SparseExactMatrix, as_fraction, exact_rank
from .operators import (
    GroupRingMatrix,
    build_Tn,
    property_minus_check,
    property_plus_check,
    restriction_to_set,
)
from .tiling import Tiling, check_witness

WORKERS_ENV = "FOLNERDIM_WORKERS"


# ---------------------------------------------------------------------------
# graph sequences
# ---------------------------------------------------------------------------

def box(ctx: GroupContext, n: int) -> frozenset:
    """[-n, n]^d in Z^d, or every residue of a coordinate whose modulus is <= 2n+1."""
    ranges = []
    for m in ctx.moduli if ctx.moduli else (0,) * ctx.dim:
        if m and m <= 2 * n + 1:
            ranges.append(range(m))
        else:
            ranges.append(range(-n, n + 1))
    return frozenset(ctx.normalize(c) for c in itertools.product(*ranges))


def folner_set(ctx: GroupContext, n: int) -> frozenset:
    if ctx.family is Family.FREE_ABELIAN:
        return box(ctx, n)
    if ctx.family is Family.HEISENBERG:
        return ball_elements(ctx, n)
    raise PreconditionError(f"Følner sets are built for Z^d and H3, not {ctx}")


def folner_sequence(ctx: GroupContext, schedule: Sequence[int]) -> list:
    """Induced Cayley subgraphs on boxes (Z^d) or word balls (H3)."""
    return [cayley_subgraph(ctx, folner_set(ctx, n)) for n in schedule]


def _strictly_increasing(xs) -> bool:
    return all(a < b for a, b in zip(xs, xs[1:]))


def quotient_sequence(ctx: GroupContext, moduli: Sequence[int]) -> list:
    """Full Cayley graphs of (Z/m)^d, colored by the generators of Z^d."""
    if ctx.family is not Family.FREE_ABELIAN:
        raise PreconditionError("quotient sequences are built over Z^d")
    if not _strictly_increasing(list(moduli)):
        raise PreconditionError("moduli must be strictly increasing")
    out = []
    for m in moduli:
        q = GroupContext.abelian_quotient((m,) * ctx.dim)
        out.append(cayley_subgraph(q, q.elements()))
    return out


def _divides(a: int, b: int) -> bool:
    return b == 0 if a == 0 else b % a == 0


def diagonal_sequence(ctx: GroupContext, subgroups: Sequence[Sequence[int]], radii: Sequence[int]) -> list:
    """Følner boxes inside the quotients Z^d / G_n, G_n = m_n1 Z x ... x m_nd Z.

    Coordinates with modulus 0 stay free.  The chain must be nested with an
    infinite quotient at every stage; whether the pair of schedules makes the
    sequence converge is reported by :func:`diagonal_conditions`.
    """
    if ctx.family is not Family.FREE_ABELIAN:
        raise PreconditionError("diagonal sequences are built over Z^d")
    if len(subgroups) != len(radii):
        raise PreconditionError("subgroup and Følner schedules differ in length")
    prev = None
    out = []
    for mods, r in zip(subgroups, radii):
        mods = tuple(int(m) for m in mods)
        if len(mods) != ctx.dim or any(m < 0 for m in mods):
            raise PreconditionError(f"subgroup {mods} does not match Z^{ctx.dim}")
        if 0 not in mods:
            raise PreconditionError(f"quotient by {mods} is finite")
        if prev is not None and not all(_divides(a, b) for a, b in zip(prev, mods)):
            raise PreconditionError(f"subgroup {mods} is not inside the previous one {prev}")
        prev = mods
        q = GroupContext.abelian_quotient(mods)
        out.append(cayley_subgraph(q, box(q, r)))
    return out


def diagonal_conditions(seq: Sequence[ColoredGraph]) -> dict:
    """Isoperimetric ratios and step-n similarity fractions of a diagonal sequence."""
    ratios = []
    similar = []
    for k, g in enumerate(seq, start=1):
        ctx = g.label_ctx
        F = [tuple(x) for x in g.labels]
        ratios.append(iso_ratio(ctx, F))
        similar.append(Fraction(similar_count(g, k), g.n))
    return {
        "iso_ratios": ratios,
        "similar": similar,
        "iso_decreasing": all(a >= b for a, b in zip(ratios, ratios[1:])),
    }


# ---------------------------------------------------------------------------
# torus oracle
# ---------------------------------------------------------------------------

def symbol_at(A: GroupRingMatrix, point: Sequence[Fraction]) -> list:
    """The d x d symbol sum_g A_g z^g evaluated at a rational point."""
    d = A.d
    out = [[Fraction(0)] * d for _ in range(d)]
    for g, blk in A.support.items():
        mono = Fraction(1)
        for z, e in zip(point, g):
            mono *= z ** e
        for i in range(d):
            for j in range(d):
                out[i][j] += blk[i][j] * mono
    return out


def torus_oracle(A: GroupRingMatrix, seed: int = 0, points: int = 3, retries: int = 5) -> Fraction:
    """dim of ker A over Z^d as d minus the generic rank of the symbol.

    The generic rank is the rank at random rational points; ``points`` draws
    must agree, otherwise fresh points are drawn up to ``retries`` times.
    """
    ctx = A.ctx
    if ctx.family is not Family.FREE_ABELIAN:
        raise PreconditionError("the torus oracle covers Z^d only")
    if A.is_zero():
        return Fraction(A.d)
    rng = random.Random(seed)
    seen = []
    for _ in range(retries):
        ranks = []
        for _ in range(points):
            pt = [Fraction(rng.randint(1, 997) * rng.choice((1, -1)), rng.randint(1, 997)) for _ in range(ctx.dim)]
            ranks.append(exact_rank(SparseExactMatrix.from_dense(symbol_at(A, pt))))
        seen.append(ranks)
        if len(set(ranks)) == 1:
            return Fraction(A.d - ranks[0])
    raise OracleInconclusiveError(f"symbol ranks disagree across evaluation points: {seen}")


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

@dataclass
class ExperimentSpec:
    group: str
    operator: str                      # path to an operator file, or inline operator text
    kind: str = "quotient"             # folner | quotient | diagonal
    schedule: list = field(default_factory=list)
    subgroups: list = field(default_factory=list)   # diagonal only
    epsilon: Fraction = Fraction(1, 4)
    delta: Fraction = Fraction(1, 10)
    csv: Optional[str] = None
    json: Optional[str] = None
    svg: Optional[str] = None
    seed: int = 0

    def __post_init__(self):
        self.epsilon = as_fraction(self.epsilon)
        self.delta = as_fraction(self.delta)
        if self.kind not in ("folner", "quotient", "diagonal"):
            raise PreconditionError(f"unknown sequence kind {self.kind!r}")
        if not self.schedule or not _strictly_increasing(list(self.schedule)):
            raise PreconditionError("schedule must be non-empty and strictly increasing")
        if not (0 < self.epsilon < 1 and 0 < self.delta < 1):
            raise PreconditionError("epsilon and delta must lie in (0, 1)")

    @classmethod
    def from_json(cls, data, base_dir: str = ".") -> "ExperimentSpec":
        if isinstance(data, str):
            with open(data) as fh:
                base_dir = os.path.dirname(os.path.abspath(data))
                data = json.load(fh)
        data = dict(data)
        out = data.pop("outputs", {}) or {}
        for key in ("csv", "json", "svg"):
            if key in out:
                data[key] = out[key]
        op = data["operator"]
        if "\n" not in op and not os.path.isabs(op):
            cand = os.path.join(base_dir, op)
            if os.path.exists(cand):
                data["operator"] = cand
        return cls(**data)

    def load_operator(self) -> GroupRingMatrix:
        text = self.operator
        if "\n" not in text and os.path.exists(text):
            with open(text) as fh:
                text = fh.read()
        A = GroupRingMatrix.from_text(text)
        if A.ctx != parse_group(self.group):
            raise PreconditionError(f"operator is over {A.ctx}, experiment is over {self.group}")
        return A

    def graphs(self) -> list:
        ctx = parse_group(self.group)
        if self.kind == "folner":
            return folner_sequence(ctx, self.schedule)
        if self.kind == "quotient":
            return quotient_sequence(ctx, self.schedule)
        return diagonal_sequence(ctx, self.subgroups, self.schedule)


@dataclass
class StepRecord:
    n: int
    vertices: int
    kernel_dim: Optional[int]
    normalized: Optional[Fraction]
    seconds: float
    error: Optional[str] = None


@dataclass
class DimensionReport:
    steps: list
    oracle: Optional[Fraction]
    d: int
    params: dict
    tail_gap: Optional[Fraction] = None

    def rows(self) -> list:
        out = []
        for s in self.steps:
            gap = None if s.normalized is None or self.oracle is None else abs(s.normalized - self.oracle)
            out.append([
                s.n, s.vertices,
                "" if s.kernel_dim is None else s.kernel_dim,
                _q(s.normalized), _dec(s.normalized),
                _q(self.oracle), _dec(self.oracle),
                _q(gap), _dec(gap),
                s.error or "",
            ])
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "vertices", "kernel_dim", "normalized", "normalized_dec",
                    "oracle", "oracle_dec", "gap", "gap_dec", "error"])
        w.writerows(self.rows())
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "params": self.params,
            "d": self.d,
            "oracle": _q(self.oracle),
            "tail_gap": _q(self.tail_gap),
            "steps": [
                {"n": s.n, "vertices": s.vertices, "kernel_dim": s.kernel_dim,
                 "normalized": _q(s.normalized), "seconds": round(s.seconds, 6), "error": s.error}
                for s in self.steps
            ],
        }

    def to_svg(self, width: int = 480, height: int = 320) -> str:
        return convergence_svg(
            [(s.n, s.normalized) for s in self.steps if s.normalized is not None],
            self.oracle, self.d, width, height,
        )


def _q(x) -> str:
    if x is None:
        return ""
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _dec(x) -> str:
    return "" if x is None else f"{float(x):.12f}"


def convergence_svg(points, oracle, d, width=480, height=320) -> str:
    """Polyline of normalized dimension against step size, with the oracle level dashed."""
    pad = 40
    if not points:
        return f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}"></svg>\n'
    xs = [p[0] for p in points]
    x0, x1 = min(xs), max(xs)
    ymax = max(float(d), max(float(p[1]) for p in points))
    sx = lambda x: pad + (width - 2 * pad) * ((x - x0) / (x1 - x0) if x1 > x0 else 0.5)
    sy = lambda y: height - pad - (height - 2 * pad) * (float(y) / ymax if ymax else 0)
    poly = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in points)
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{pad}" y="{height - pad / 3:.1f}" font-size="10">{x0}</text>',
        f'<text x="{width - pad}" y="{height - pad / 3:.1f}" font-size="10">{x1}</text>',
        f'<text x="2" y="{pad}" font-size="10">{ymax:g}</text>',
        f'<polyline fill="none" stroke="steelblue" points="{poly}"/>',
    ]
    if oracle is not None:
        y = sy(oracle)
        lines.append(f'<line x1="{pad}" y1="{y:.2f}" x2="{width - pad}" y2="{y:.2f}" stroke="gray" stroke-dasharray="4"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _run_step(args):
    n, graph, A = args
    t0 = time.perf_counter()
    try:
        k = build_Tn(graph, A).kernel_dimension()
        return StepRecord(n, graph.n, k, Fraction(k, graph.n), time.perf_counter() - t0)
    except Exception as exc:  # recorded per step, the run continues
        return StepRecord(n, graph.n, None, None, time.perf_counter() - t0, f"{type(exc).__name__}: {exc}")


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def dimension_sequence(spec: ExperimentSpec, write: bool = True) -> DimensionReport:
    """Normalized kernel dimensions of T_n along the spec's graph sequence."""
    A = spec.load_operator()
    graphs = spec.graphs()
    jobs = [(n, g, A) for n, g in zip(spec.schedule, graphs)]
    workers = min(worker_count(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            steps = list(pool.map(_run_step, jobs))
    else:
        steps = [_run_step(j) for j in jobs]
    oracle = torus_oracle(A, seed=spec.seed) if A.ctx.family is Family.FREE_ABELIAN else None
    vals = [s.normalized for s in steps if s.normalized is not None]
    tail = vals[len(vals) // 2:]
    tail_gap = max((abs(a - b) for a in tail for b in tail), default=None)
    params = {"group": spec.group, "kind": spec.kind, "schedule": list(spec.schedule), "seed": spec.seed}
    report = DimensionReport(steps, oracle, A.d, params, tail_gap)
    if write:
        write_outputs(report, spec.csv, spec.json, spec.svg)
    return report


def write_outputs(report: DimensionReport, csv_path=None, json_path=None, svg_path=None) -> None:
    if csv_path:
        with open(csv_path, "w", newline="") as fh:
            fh.write(report.to_csv())
    if json_path:
        with open(json_path, "w") as fh:
            json.dump(report.to_json(), fh, indent=1)
    if svg_path:
        with open(svg_path, "w") as fh:
            fh.write(report.to_svg())


# ---------------------------------------------------------------------------
# bounds along a quasi-tiling
# ---------------------------------------------------------------------------

def bound_check(
    A: GroupRingMatrix, B: ColoredGraph, eps, delta, tiling: Optional[Tiling], target, seed: int = 0,
) -> dict:
    """Exact lower and upper bounds on dim ker T / |V(B)| along a verified tiling.

    lower: (target - delta)(1 - eps); upper: (target + delta)/(1 - eps) + eps.
    Per-shape property verdicts are computed and reported as evidence; they
    do not gate the result.
    """
    eps, delta, target = as_fraction(eps), as_fraction(delta), as_fraction(target)
    if tiling is None:
        raise PreconditionError("bound check needs a quasi-tiling")
    tiles = tiling.tiles
    if tiles.graph is not B and list(tiles.ground) != list(B.ids):
        raise PreconditionError("tiling is over a different graph")
    if not check_witness(tiles, tiling.witness, eps):
        raise PreconditionError("tiling witness does not verify")
    cover = Fraction(int(tiles.covered_mask().sum()), B.n)
    if cover < 1 - eps:
        raise PreconditionError(f"tiling covers {cover} < {1 - eps}")
    ctx = A.ctx
    shapes = {}
    for idx, F in sorted(tiling.shapes.items()):
        F = _as_set(ctx, F)
        minus = property_minus_check(A, F, eps, delta, target, seed=seed)
        plus = property_plus_check(A, F, delta, target)
        shapes[idx] = {
            "size": len(F),
            "restriction_dim": restriction_to_set(A, F),
            "minus": minus.status,
            "plus": plus.status,
        }
    k = build_Tn(B, A).kernel_dimension()
    value = Fraction(k, B.n)
    lower = (target - delta) * (1 - eps)
    upper = (target + delta) / (1 - eps) + eps
    return {
        "kernel_dim": k,
        "vertices": B.n,
        "normalized": value,
        "lower": lower,
        "upper": upper,
        "lower_ok": value >= lower,
        "upper_ok": value <= upper,
        "tile_total": sum(len(t) for t in tiles),
        "cover": cover,
        "shapes": shapes,
    }
