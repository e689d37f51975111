"""Ornstein-Weiss quasi-tilings of colored graphs by transplanted Følner sets.

Predicates (epsilon-disjointness, cover fraction, even covers), greedy
selection of an epsilon-disjoint subfamily, the single-scale tiling step,
(alpha, s)-good subsequences and the multi-scale driver.

All thresholds are compared as exact rationals.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (
    ExhaustionError,
    InternalInvariantError,
    MalformedCollectionError,
    PostconditionError,
    PreconditionError,
)
from .graphs import ColoredGraph, _as_set, defect_distance, similar_count, similar_images
from .groups import GroupContext, inradius, radius
from .linalg import as_fraction


@dataclass(frozen=True)
class Tile:
    center: Optional[int]
    shape_index: int
    vertices: tuple

    def __len__(self):
        return len(self.vertices)


class TileCollection:
    """Tiles over a finite ground set of vertex ids (optionally a graph)."""

    def __init__(self, tiles: Iterable[Tile], ground):
        self.tiles = list(tiles)
        if isinstance(ground, ColoredGraph):
            self.graph = ground
            self.ground = np.asarray(ground.ids, dtype=np.int64)
        else:
            self.graph = None
            self.ground = np.asarray(sorted(set(int(v) for v in ground)), dtype=np.int64)
        self._pos = {int(v): i for i, v in enumerate(self.ground)}
        for t in self.tiles:
            if len(set(t.vertices)) != len(t.vertices):
                raise MalformedCollectionError(f"tile at {t.center} repeats a vertex")
            for v in t.vertices:
                if v not in self._pos:
                    raise MalformedCollectionError(f"tile vertex {v} is not in the ground set")

    @classmethod
    def from_sets(cls, sets: Iterable, ground) -> "TileCollection":
        return cls([Tile(None, 0, tuple(sorted(s))) for s in sets], ground)

    def __len__(self):
        return len(self.tiles)

    def __iter__(self):
        return iter(self.tiles)

    def positions(self, tile: Tile) -> np.ndarray:
        return np.fromiter((self._pos[v] for v in tile.vertices), dtype=np.int64, count=len(tile.vertices))

    def multiplicity(self) -> np.ndarray:
        counts = np.zeros(len(self.ground), dtype=np.int64)
        for t in self.tiles:
            counts[self.positions(t)] += 1
        return counts

    def covered_mask(self) -> np.ndarray:
        return self.multiplicity() > 0

    def subcollection(self, tiles) -> "TileCollection":
        return TileCollection(tiles, self.graph if self.graph is not None else self.ground)


@dataclass
class DisjointnessWitness:
    subsets: list  # frozenset of vertex ids per tile, same order as the collection


def _at_least(part: int, whole: int, frac: Fraction) -> bool:
    return Fraction(part) >= frac * whole


def is_epsilon_disjoint(c: TileCollection, eps) -> Optional[DisjointnessWitness]:
    """Greedy witness search in input order.

    Each tile keeps the vertices not claimed by earlier tiles; succeeds iff
    every tile keeps at least (1 - eps) of itself.  ``None`` means the greedy
    search failed, not that no witness exists.
    """
    eps = as_fraction(eps)
    claimed = np.zeros(len(c.ground), dtype=bool)
    subsets = []
    for t in c.tiles:
        pos = c.positions(t)
        free = ~claimed[pos]
        if not _at_least(int(free.sum()), len(pos), 1 - eps):
            return None
        claimed[pos] = True
        subsets.append(frozenset(int(v) for v, f in zip(t.vertices, free) if f))
    return DisjointnessWitness(subsets)


def check_witness(c: TileCollection, witness: DisjointnessWitness, eps) -> bool:
    """Exact validation of a supplied witness."""
    eps = as_fraction(eps)
    if len(witness.subsets) != len(c.tiles):
        return False
    seen: set = set()
    for t, sub in zip(c.tiles, witness.subsets):
        sub = set(sub)
        if not sub <= set(t.vertices):
            return False
        if not _at_least(len(sub), len(t.vertices), 1 - eps):
            return False
        if seen & sub:
            return False
        seen |= sub
    return True


def cover_fraction(c: TileCollection) -> Fraction:
    """|V intersected with the union of tiles| / |V|."""
    n = len(c.ground)
    if n == 0:
        raise MalformedCollectionError("empty ground set")
    return Fraction(int(c.covered_mask().sum()), n)


def is_even_cover(c: TileCollection, delta) -> Optional[int]:
    """Least M with multiplicity <= M and sum |H_j| >= (1 - delta) M |X|, or None.

    The sum is fixed, so only M = max multiplicity needs testing.
    """
    delta = as_fraction(delta)
    mult = c.multiplicity()
    m = int(mult.max()) if mult.size else 0
    total = int(mult.sum())
    if Fraction(total) >= (1 - delta) * m * len(c.ground):
        return m
    return None


def _selection_key(item):
    i, t = item
    center = t.center if t.center is not None else -1
    return (-len(t.vertices), -t.shape_index, center, i)


def select_epsilon_disjoint(c: TileCollection, eps, delta) -> TileCollection:
    """Greedy epsilon-disjoint subfamily of a delta-even cover.

    Tiles are scanned by decreasing size (ties: shape index descending, then
    center ascending); a tile is kept when at most eps of it is already
    covered.  Both conclusions (epsilon-disjoint, cover >= eps(1 - delta))
    are verified and a failure raises :class:`PostconditionError`.
    """
    eps = as_fraction(eps)
    delta = as_fraction(delta)
    covered = np.zeros(len(c.ground), dtype=bool)
    chosen = []
    for _, t in sorted(enumerate(c.tiles), key=_selection_key):
        pos = c.positions(t)
        overlap = int(covered[pos].sum())
        if Fraction(overlap) <= eps * len(pos):
            chosen.append(t)
            covered[pos] = True
    out = c.subcollection(chosen)
    if is_epsilon_disjoint(out, eps) is None:
        raise PostconditionError("selected family is not verifiably epsilon-disjoint")
    if cover_fraction(out) < eps * (1 - delta):
        raise PostconditionError(
            f"selection covers {cover_fraction(out)} < {eps * (1 - delta)}; input was not a {delta}-even cover"
        )
    return out


def type_check(ctx: GroupContext, H, K: int, alpha) -> bool:
    """Whether |B_K(H)| / |H| < 1 + alpha, aborting the BFS once it cannot hold."""
    alpha = as_fraction(alpha)
    H = _as_set(ctx, H)
    if not H:
        raise PreconditionError("type check of an empty set")
    limit = (1 + alpha) * len(H)
    if len(H) >= limit:
        return False
    seen = set(H)
    layer = list(H)
    gens = ctx.generators
    for _ in range(K):
        nxt = []
        for x in layer:
            for s in gens:
                y = ctx.mul(s, x)
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
                    if len(seen) >= limit:
                        return False
        if not nxt:
            break
        layer = nxt
    return len(seen) < limit


# ---------------------------------------------------------------------------
# single tiling step
# ---------------------------------------------------------------------------

@dataclass
class StepResult:
    selected: TileCollection
    residual: ColoredGraph
    shape_index: int
    radius: int
    candidates: int          # |Q^B_L|
    delta: Fraction          # even-cover parameter used for the selection
    cover: Fraction          # selected cover fraction of the step's ground
    beta1: Optional[Fraction] = None
    bound: dict = field(default_factory=dict)


def _candidate_tiles(B: ColoredGraph, shape: Sequence, L: int, shape_index: int, centers=None):
    """Tiles T_x(shape) for x in Q^B_L, ordered by center id."""
    cand = None if centers is None else centers
    centers, images, tree = similar_images(B, L, candidates=cand)
    try:
        cols = np.array([tree.index[g] for g in shape], dtype=np.int64)
    except KeyError as exc:
        raise PreconditionError(f"shape element {exc} lies outside the radius-{L} ball") from exc
    ids = B.ids
    tile_pos = images[:, cols]
    tiles = [
        Tile(int(ids[x]), shape_index, tuple(int(v) for v in ids[row]))
        for x, row in zip(centers.tolist(), tile_pos)
    ]
    return centers, tiles


def tile_step(B: ColoredGraph, shape, L: int, eps1, delta=None, shape_index: int = 0, centers=None) -> StepResult:
    """Tile B once with T_x(shape), x in Q^B_L, and return the uncovered remainder.

    The candidate family is checked to be an even cover with M = |shape|;
    ``delta`` defaults to the observed deficit 1 - |Q^B_L|/|V(B)|.
    """
    eps1 = as_fraction(eps1)
    ctx = B.ctx
    shape = sorted(_as_set(ctx, shape))
    n = B.n
    centers, tiles = _candidate_tiles(B, shape, L, shape_index, centers)
    q = len(tiles)
    delta = Fraction(n - q, n) if delta is None else as_fraction(delta)
    family = TileCollection(tiles, B)
    mult = family.multiplicity()
    h = len(shape)
    if mult.size and mult.max() > h:
        raise InternalInvariantError(f"a vertex is covered by {mult.max()} > |H| = {h} tiles")
    if Fraction(int(mult.sum())) < (1 - delta) * h * n:
        raise InternalInvariantError(f"candidate tiles are not a {delta}-even cover with M = {h}")
    selected = select_epsilon_disjoint(family, eps1, delta) if tiles else family
    covered = selected.covered_mask()
    residual = B.induced(np.nonzero(~covered)[0])
    return StepResult(selected, residual, shape_index, L, q, delta, cover_fraction(selected) if n else Fraction(0))


def inductional_step(
    B: ColoredGraph, H, K: int, alpha, L: int, beta, eps, eps1, shape_index: int = 0,
) -> StepResult:
    """One scale of the multi-scale construction with its preconditions enforced.

    Requires H of type (K, alpha), H inside B_{L/100}(1), K < L/10,
    |Q^B_L| > (1 - beta)|V(B)| and eps1 < eps/100.  Selection uses
    (eps1, beta).  ``beta1 = alpha (1 - eps1)^-1 (2/eps)`` is returned, and
    when more than (eps/2)|V(B)| vertices stay uncovered the residual
    similarity count is compared with (1 - beta1) times |V(B)| ("literal")
    and times |V(residual)| ("normalized") in ``bound``.
    """
    ctx = B.ctx
    alpha, beta, eps, eps1 = (as_fraction(x) for x in (alpha, beta, eps, eps1))
    H = _as_set(ctx, H)
    n = B.n
    if not eps1 < eps / 100:
        raise PreconditionError(f"eps1 = {eps1} must be below eps/100 = {eps / 100}")
    if not type_check(ctx, H, K, alpha):
        raise PreconditionError(f"shape is not of type ({K}, {alpha})")
    if 100 * radius(ctx, H) > L:
        raise PreconditionError(f"shape radius {radius(ctx, H)} exceeds L/100 = {Fraction(L, 100)}")
    if not 10 * K < L:
        raise PreconditionError(f"K = {K} must be below L/10 = {Fraction(L, 10)}")
    q = similar_count(B, L)
    if not Fraction(q) > (1 - beta) * n:
        raise PreconditionError(f"|Q^B_L| = {q} is not above (1 - beta)|V(B)| = {(1 - beta) * n}")
    step = tile_step(B, H, L, eps1, delta=beta, shape_index=shape_index)
    beta1 = alpha / (1 - eps1) * 2 / eps
    res_n = step.residual.n
    if Fraction(res_n) > (1 - eps1 * (1 - beta)) * n:
        raise PostconditionError(f"residual {res_n} exceeds (1 - eps1(1 - beta))|V(B)|")
    active = Fraction(res_n) > eps / 2 * n
    bound = {"active": active, "residual": res_n, "vertices": n}
    if active:
        qk = similar_count(step.residual, K)
        bound.update(
            similar=qk,
            literal_ok=Fraction(qk) >= (1 - beta1) * n,
            normalized_ok=Fraction(qk) >= (1 - beta1) * res_n,
        )
    step.beta1 = beta1
    step.bound = bound
    return step


# ---------------------------------------------------------------------------
# parameters and good subsequences
# ---------------------------------------------------------------------------

@dataclass
class TilingParams:
    epsilon: Fraction
    epsilon1: Fraction
    M: int
    beta: Fraction
    alpha: list
    s: list
    indices: list = field(default_factory=list)
    mode: str = "theoretical"

    def check(self) -> dict:
        """Exact truth values of the parameter inequalities."""
        e, e1 = self.epsilon, self.epsilon1
        return {
            "eps1_small": e1 < e / 100,
            "decay": (1 - e1 / 2) ** self.M < e / 100,
            "beta_small": self.beta * self.M < e / 100,
            "alpha_small": all(a / (1 - e1) * 2 / e < self.beta for a in self.alpha),
            "s_growth": all(x >= 1 for x in self.s) and all(b >= 10 * a for a, b in zip(self.s, self.s[1:])),
        }

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "epsilon": _q(self.epsilon),
            "epsilon1": _q(self.epsilon1),
            "M": self.M,
            "beta": _q(self.beta),
            "alpha": [_q(a) for a in self.alpha],
            "s": [int(x) for x in self.s],
            "shapes": list(self.indices),
        }

    @classmethod
    def from_json(cls, data: dict) -> "TilingParams":
        return cls(
            Fraction(data["epsilon"]), Fraction(data["epsilon1"]), int(data["M"]),
            Fraction(data["beta"]), [Fraction(a) for a in data["alpha"]],
            [int(x) for x in data["s"]], list(data.get("shapes", [])), data.get("mode", "theoretical"),
        )


def _q(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def choose_epsilon1(eps) -> Fraction:
    """Largest power of 1/2 strictly below eps/100."""
    eps = as_fraction(eps)
    e1 = Fraction(1)
    while e1 >= eps / 100:
        e1 /= 2
    return e1


def minimal_M(eps, eps1) -> int:
    """Least M with (1 - eps1/2)^M < eps/100."""
    eps, eps1 = as_fraction(eps), as_fraction(eps1)
    base = 1 - eps1 / 2
    target = eps / 100
    m = max(1, math.ceil(math.log(float(target)) / math.log(float(base))) - 2)
    while base ** m >= target:
        m += 1
    while m > 1 and base ** (m - 1) < target:
        m -= 1
    return m


def theoretical_params(eps, s1: int = 1) -> TilingParams:
    """Parameters satisfying the schedule inequalities exactly.

    beta = eps/(200 M); alpha_i = beta eps (1 - eps1)/4; s_k = s1 11^(k-1).
    """
    eps = as_fraction(eps)
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    e1 = choose_epsilon1(eps)
    M = minimal_M(eps, e1)
    beta = eps / (200 * M)
    alpha = [beta * eps * (1 - e1) / 4] * M
    # ratio 11 rather than 10 keeps K = 100 s_k strictly below L/10 = 10 s_(k+1)
    s = [s1 * 11 ** k for k in range(M)]
    return TilingParams(eps, e1, M, beta, alpha, s)


def good_subsequence(ctx: GroupContext, exhaustion: Sequence, alpha: Sequence, s: Sequence) -> list:
    """Indices n_1 < ... < n_M (0-based) of an (alpha, s)-good subsequence.

    Constraints: 1 in F_{n_1}; F_{n_i} inside B_{s_i}(1); B_{s_i}(1) inside
    F_{n_{i+1}}; F_{n_{i+1}} of type (100 s_i, alpha_i).  The earliest
    admissible index is taken at each position.
    """
    s = [int(x) for x in s]
    if any(x < 1 for x in s) or any(b < 10 * a for a, b in zip(s, s[1:])):
        raise ValueError("s must satisfy s_k >= 1 and s_{k+1} >= 10 s_k")
    if len(alpha) < max(0, len(s) - 1):
        raise ValueError("need at least M - 1 alpha values")
    sets = [_as_set(ctx, F) for F in exhaustion]
    out: list = []
    start = 0
    for i, si in enumerate(s):
        failure = "exhaustion too short"
        found = None
        for j in range(start, len(sets)):
            F = sets[j]
            if i == 0:
                if ctx.identity not in F:
                    failure = f"1 in F_(n_1) fails at index {j}"
                    continue
            else:
                prev = s[i - 1]
                if inradius(ctx, F) < prev:
                    failure = f"B_{prev}(1) inside F_(n_{i + 1}) fails up to index {j}"
                    continue
                if not type_check(ctx, F, 100 * prev, alpha[i - 1]):
                    failure = f"F_(n_{i + 1}) of type ({100 * prev}, {alpha[i - 1]}) fails up to index {j}"
                    continue
            if radius(ctx, F) > si:
                failure = f"F_(n_{i + 1}) inside B_{si}(1) fails from index {j}"
                break
            found = j
            break
        if found is None:
            raise ExhaustionError(f"position {i + 1}: {failure}")
        out.append(found)
        start = found + 1
    return out


# ---------------------------------------------------------------------------
# multi-scale driver
# ---------------------------------------------------------------------------

@dataclass
class Tiling:
    tiles: TileCollection
    params: TilingParams
    shapes: dict             # shape index -> sorted list of group elements
    witness: DisjointnessWitness
    cover: Fraction
    steps: list

    def to_json(self) -> dict:
        return {
            "params": self.params.to_json(),
            "group": str(self.tiles.graph.ctx) if self.tiles.graph is not None else None,
            "shape_sets": {str(k): [list(g) for g in v] for k, v in sorted(self.shapes.items())},
            "vertices": [int(v) for v in self.tiles.ground],
            "tiles": [
                {"shape_index": t.shape_index, "center": t.center, "vertices": list(t.vertices)}
                for t in self.tiles
            ],
        }

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)


def _verify(tiles: TileCollection, eps: Fraction):
    witness = is_epsilon_disjoint(tiles, eps)
    if witness is None:
        raise PostconditionError("tiling is not verifiably epsilon-disjoint")
    cover = cover_fraction(tiles)
    if cover < 1 - eps:
        raise PostconditionError(f"tiling covers {cover} < {1 - eps}")
    return witness, cover


def _shape_list(ctx, exhaustion):
    return [sorted(_as_set(ctx, F)) for F in exhaustion]


def quasi_tile(
    B: ColoredGraph,
    exhaustion: Sequence,
    eps,
    mode: str = "practical",
    shape_indices: Optional[Sequence[int]] = None,
    min_density=None,
    s1: int = 1,
) -> Tiling:
    """epsilon-quasi-tile V(B) by transplanted exhaustion sets.

    ``mode="theoretical"`` derives the schedule from :func:`theoretical_params`
    and a good subsequence and enforces every precondition; it is only
    satisfiable on astronomically large inputs.  ``mode="practical"`` runs
    the same descending tiling steps at desk scale: at each step it uses the
    largest unused shape F whose radius-r(F) similarity density in the
    current residual reaches ``min_density`` (default 1 - eps/2), falling
    back to the shape of highest density.  Either way the result
    is verified to be epsilon-disjoint and (1 - eps)-covering.
    """
    eps = as_fraction(eps)
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    ctx = B.ctx
    shapes = _shape_list(ctx, exhaustion)
    if not shapes:
        raise PreconditionError("empty exhaustion")
    if B.n < min(len(F) for F in shapes):
        raise PreconditionError("graph is smaller than the smallest Følner shape")
    if mode == "theoretical":
        params = theoretical_params(eps, s1=s1)
        params.indices = good_subsequence(ctx, shapes, params.alpha, params.s)
        return run_schedule(B, shapes, params)
    if mode != "practical":
        raise ValueError(f"unknown mode {mode!r}")
    return _practical(B, shapes, eps, shape_indices, min_density)


def run_schedule(B: ColoredGraph, shapes: Sequence, params: TilingParams) -> Tiling:
    """Run the descending schedule given by ``params`` through :func:`inductional_step`.

    Step j uses shape ``indices[M - j]`` with L = 100 s_{M-j+1} and
    K = 100 s_{M-j} (0 for the last step).
    """
    eps, e1, M = params.epsilon, params.epsilon1, params.M
    n = B.n
    L0 = 100 * params.s[M - 1]
    q = similar_count(B, L0)
    if not Fraction(q) > (1 - params.beta) * n:
        raise PreconditionError(
            f"|Q^B_{L0}|/|V(B)| = {Fraction(q, n)} is not above 1 - beta = {1 - params.beta}"
        )
    residual = B
    beta = params.beta
    chosen: list = []
    steps = []
    for j in range(M, 0, -1):
        if Fraction(residual.n) <= eps * n:
            break
        idx = params.indices[j - 1]
        # the last (smallest) shape has no further scale below it; type (0, 1) is vacuous
        K = 100 * params.s[j - 2] if j >= 2 else 0
        alpha = params.alpha[j - 2] if j >= 2 else Fraction(1)
        L = 100 * params.s[j - 1]
        try:
            step = inductional_step(residual, shapes[idx], K, alpha, L, beta, eps, e1, idx)
        except PreconditionError as exc:
            raise PostconditionError(f"schedule step for shape {idx} broke its preconditions: {exc}") from exc
        steps.append(step)
        chosen.extend(step.selected.tiles)
        residual = step.residual
        beta = step.beta1
    tiles = TileCollection(chosen, B)
    witness, cover = _verify(tiles, eps)
    used = {t.shape_index for t in chosen}
    return Tiling(tiles, params, {i: shapes[i] for i in used}, witness, cover, steps)


def _pick_shape(residual, dd, order, radii, threshold):
    """Largest shape whose verified similar density reaches ``threshold``,
    else the shape of highest density (larger on ties)."""
    n = residual.n
    seen = {}
    for i in order:
        cand = np.nonzero(dd >= radii[i])[0]
        if Fraction(cand.size, n) < threshold:
            continue
        seen[i] = similar_images(residual, radii[i], candidates=cand)[0]
        if Fraction(seen[i].size, n) >= threshold:
            return i, seen[i]
    best = None
    for i in order:
        cand = np.nonzero(dd >= radii[i])[0]
        if cand.size == 0 or best is not None and cand.size <= best[1].size:
            continue
        centers = seen[i] if i in seen else similar_images(residual, radii[i], candidates=cand)[0]
        if centers.size and (best is None or centers.size > best[1].size):
            best = (i, centers)
    return best


def _practical(B, shapes, eps, shape_indices, min_density) -> Tiling:
    ctx = B.ctx
    n = B.n
    e1 = choose_epsilon1(eps)
    threshold = 1 - eps / 2 if min_density is None else as_fraction(min_density)
    order = sorted(set(range(len(shapes)) if shape_indices is None else shape_indices), reverse=True)
    order = [i for i in order if len(shapes[i]) <= n and ctx.identity in shapes[i]]
    radii = {i: radius(ctx, shapes[i]) for i in order}
    residual = B
    chosen: list = []
    steps = []
    used: list = []
    while Fraction(residual.n) > eps * n and order:
        dd = defect_distance(residual)
        pick = _pick_shape(residual, dd, order, radii, threshold)
        if pick is None:
            break
        i, centers = pick
        step = tile_step(residual, shapes[i], radii[i], e1, shape_index=i, centers=centers)
        steps.append(step)
        used.append(i)
        chosen.extend(step.selected.tiles)
        residual = step.residual
        order = [j for j in order if j < i]
    tiles = TileCollection(chosen, B)
    witness, cover = _verify(tiles, eps)
    params = TilingParams(
        eps, e1, len(steps), max((st.delta for st in steps), default=Fraction(0)),
        [], [st.radius for st in steps], used, mode="practical",
    )
    return Tiling(tiles, params, {i: shapes[i] for i in used}, witness, cover, steps)


def verify_tiling_json(data: dict) -> dict:
    """Re-verify a serialized tiling: witness search and cover fraction."""
    eps = Fraction(data["params"]["epsilon"])
    tiles = [Tile(t["center"], int(t["shape_index"]), tuple(t["vertices"])) for t in data["tiles"]]
    c = TileCollection(tiles, data["vertices"])
    witness = is_epsilon_disjoint(c, eps)
    cover = cover_fraction(c)
    sizes_ok = all(len(t.vertices) == len(data["shape_sets"][str(t.shape_index)]) for t in tiles)
    return {
        "epsilon": eps,
        "disjoint": witness is not None and check_witness(c, witness, eps),
        "cover": cover,
        "covers": cover >= 1 - eps,
        "sizes_ok": sizes_ok,
        "tiles": len(tiles),
    }
