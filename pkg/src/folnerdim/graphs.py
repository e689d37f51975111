"""Edge-colored graphs, Cayley subgraphs, Følner-set combinatorics and
k-similarity to the Cayley graph of the covering group."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator, Optional

import numpy as np

from .errors import EmptySetError, ParseError
from .groups import BallTree, GroupContext, ball_tree, parse_group, word_length

_CHUNK_BUDGET = 2_000_000


@dataclass(frozen=True, eq=False)
class ColoredGraph:
    """Finite graph whose directed edges are colored by the generators of ``ctx``.

    Vertices live at positions ``0..n-1``; ``ids`` holds their stable ids,
    which survive :meth:`induced`.  ``nbr[v, s]`` is the position reached
    from ``v`` along color ``s`` or -1.  Storing one target per color makes
    outgoing colors distinct by construction; inverse pairing is validated.
    """

    ctx: GroupContext
    nbr: np.ndarray
    ids: np.ndarray
    labels: Optional[tuple] = None
    label_ctx: Optional[GroupContext] = None

    def __post_init__(self):
        nbr = np.asarray(self.nbr, dtype=np.int64)
        ids = np.asarray(self.ids, dtype=np.int64)
        ncol = len(self.ctx.color_generators)
        if nbr.ndim != 2 or nbr.shape[1] != ncol:
            nbr = nbr.reshape(-1, ncol)
        if ids.shape != (nbr.shape[0],):
            raise ValueError("ids must have one entry per vertex")
        if len(np.unique(ids)) != len(ids):
            raise ValueError("vertex ids must be distinct")
        if self.labels is not None and len(self.labels) != len(ids):
            raise ValueError("labels must have one entry per vertex")
        if nbr.size and (nbr.max() >= len(ids) or nbr.min() < -1):
            raise ValueError("neighbor index out of range")
        inv = self.ctx.color_inverse
        src, col = np.nonzero(nbr >= 0)
        if src.size and not np.array_equal(nbr[nbr[src, col], inv[col]], src):
            raise ValueError("edge coloring violates inverse pairing")
        nbr.setflags(write=False)
        ids.setflags(write=False)
        object.__setattr__(self, "nbr", nbr)
        object.__setattr__(self, "ids", ids)

    @classmethod
    def from_edges(cls, ctx, n, edges, ids=None, labels=None, label_ctx=None) -> "ColoredGraph":
        """Build from ``(src_pos, dst_pos, color)`` triples."""
        nbr = np.full((n, len(ctx.color_generators)), -1, dtype=np.int64)
        for a, b, s in edges:
            if nbr[a, s] not in (-1, b):
                raise ValueError(f"vertex {a} has two outgoing edges of color {s}")
            nbr[a, s] = b
        ids = np.arange(n) if ids is None else ids
        return cls(ctx, nbr, ids, labels, label_ctx)

    @property
    def n(self) -> int:
        return len(self.ids)

    def __len__(self) -> int:
        return self.n

    @cached_property
    def position(self) -> dict:
        return {int(v): i for i, v in enumerate(self.ids)}

    def edges(self) -> Iterator[tuple]:
        """Directed edges as (src_id, dst_id, color)."""
        src, col = np.nonzero(self.nbr >= 0)
        for a, s in zip(src, col):
            yield int(self.ids[a]), int(self.ids[self.nbr[a, s]]), int(s)

    def num_adjacencies(self) -> int:
        """Number of undirected adjacent vertex pairs (loops excluded)."""
        pairs = set()
        for a, b, _ in self.edges():
            if a != b:
                pairs.add((min(a, b), max(a, b)))
        return len(pairs)

    def degrees(self) -> np.ndarray:
        return (self.nbr >= 0).sum(axis=1)

    def induced(self, positions) -> "ColoredGraph":
        """Subgraph induced on the given positions, keeping stable ids."""
        positions = np.asarray(sorted(set(int(p) for p in positions)), dtype=np.int64)
        remap = np.full(self.n + 1, -1, dtype=np.int64)
        remap[positions] = np.arange(len(positions))
        sub = self.nbr[positions]
        sub = np.where(sub >= 0, remap[sub], -1)
        labels = None if self.labels is None else tuple(self.labels[p] for p in positions)
        return ColoredGraph(self.ctx, sub, self.ids[positions], labels, self.label_ctx)

    def distances(self, sources, limit: Optional[int] = None) -> np.ndarray:
        """BFS distances (in positions) from a set of source positions; -1 if unreached."""
        dist = np.full(self.n, -1, dtype=np.int64)
        frontier = np.unique(np.asarray(list(sources), dtype=np.int64))
        if frontier.size == 0:
            return dist
        dist[frontier] = 0
        d = 0
        while frontier.size and (limit is None or d < limit):
            nxt = self.nbr[frontier].ravel()
            nxt = nxt[nxt >= 0]
            nxt = np.unique(nxt[dist[nxt] < 0])
            d += 1
            dist[nxt] = d
            frontier = nxt
        return dist

    def ball(self, x: int, k: int) -> np.ndarray:
        """Positions within distance k of position x."""
        return np.nonzero(self.distances([x], limit=k) >= 0)[0]

    # -- text format -------------------------------------------------------

    def to_text(self) -> str:
        head = f"group {self.ctx}"
        if self.label_ctx is not None:
            head += f" labels {self.label_ctx}"
        lines = [head]
        for i, v in enumerate(self.ids):
            if self.labels is None:
                lines.append(f"v {v}")
            else:
                lines.append(f"v {v} {','.join(map(str, self.labels[i]))}")
        for a, b, s in self.edges():
            lines.append(f"e {a} {b} {s}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ColoredGraph":
        ctx = label_ctx = None
        ids, labels, edges = [], [], []
        for ln in text.splitlines():
            parts = ln.split()
            if not parts or parts[0].startswith("#"):
                continue
            try:
                if parts[0] == "group":
                    ctx = parse_group(parts[1])
                    if len(parts) >= 4 and parts[2] == "labels":
                        label_ctx = parse_group(parts[3])
                elif parts[0] == "v":
                    ids.append(int(parts[1]))
                    labels.append(tuple(int(t) for t in parts[2].split(",")) if len(parts) > 2 else None)
                elif parts[0] == "e":
                    edges.append((int(parts[1]), int(parts[2]), int(parts[3])))
                else:
                    raise ParseError(f"unknown record {parts[0]!r}")
            except (IndexError, ValueError) as exc:
                raise ParseError(f"bad graph line {ln!r}") from exc
        if ctx is None:
            raise ParseError("graph text lacks a 'group' header")
        pos = {v: i for i, v in enumerate(ids)}
        has_labels = bool(labels) and all(lb is not None for lb in labels)
        return cls.from_edges(
            ctx, len(ids), [(pos[a], pos[b], s) for a, b, s in edges],
            ids=np.array(ids, dtype=np.int64),
            labels=tuple(labels) if has_labels else None,
            label_ctx=label_ctx,
        )


@dataclass(frozen=True)
class FolnerSet:
    """Finite subset of a group, stored as normalized coordinate tuples."""

    ctx: GroupContext
    elements: frozenset

    def __post_init__(self):
        object.__setattr__(self, "elements", frozenset(self.ctx.normalize(x) for x in self.elements))

    def __iter__(self):
        return iter(sorted(self.elements))

    def __len__(self):
        return len(self.elements)

    def __contains__(self, x):
        return x in self.elements

    @cached_property
    def radius(self) -> int:
        return max(word_length(self.ctx, x) for x in self.elements)


def _as_set(ctx: GroupContext, F) -> frozenset:
    if isinstance(F, FolnerSet):
        return F.elements
    if isinstance(F, frozenset):
        return F
    return frozenset(ctx.normalize(x) for x in F)


def cayley_subgraph(ctx: GroupContext, F) -> ColoredGraph:
    """Subgraph of the Cayley graph induced on F, with edge x -> s*x colored s.

    Colors are the cover's generators, so graphs of quotients are colored by
    the generators of the group they approximate.
    """
    elems = sorted(_as_set(ctx, F))
    pos = {e: i for i, e in enumerate(elems)}
    colors = ctx.color_generators
    nbr = np.full((len(elems), len(colors)), -1, dtype=np.int64)
    mul = ctx.mul
    for i, x in enumerate(elems):
        row = nbr[i]
        for si, s in enumerate(colors):
            row[si] = pos.get(mul(s, x), -1)
    return ColoredGraph(ctx.cover, nbr, np.arange(len(elems)), tuple(elems), ctx)


def k_neighborhood(ctx: GroupContext, F, k: int) -> frozenset:
    """B_k(F): all elements within word distance k of F."""
    out = set(_as_set(ctx, F))
    layer = list(out)
    gens = ctx.generators
    for _ in range(k):
        nxt = []
        for x in layer:
            for s in gens:
                y = ctx.mul(s, x)
                if y not in out:
                    out.add(y)
                    nxt.append(y)
        layer = nxt
    return frozenset(out)


def _distance_to_complement(ctx: GroupContext, F: frozenset, limit: int) -> dict:
    """d(p, F^c) for p in F, capped: points farther than ``limit`` are omitted."""
    gens = ctx.generators
    outer = {ctx.mul(s, x) for x in F for s in gens} - F
    dist = {}
    layer = list(outer)
    seen = set(outer)
    d = 0
    while layer and d < limit:
        d += 1
        nxt = []
        for x in layer:
            for s in gens:
                y = ctx.mul(s, x)
                if y in F and y not in seen:
                    seen.add(y)
                    dist[y] = d
                    nxt.append(y)
        layer = nxt
    return dist


def k_interior(ctx: GroupContext, F, k: int) -> frozenset:
    """Omega_k(F): points of F at distance > k from the complement."""
    F = _as_set(ctx, F)
    near = _distance_to_complement(ctx, F, k)
    return frozenset(p for p in F if p not in near)


def boundary(ctx: GroupContext, F) -> frozenset:
    """Points of F at distance exactly 1 from the complement."""
    F = _as_set(ctx, F)
    return frozenset(_distance_to_complement(ctx, F, 1))


def iso_ratio(ctx: GroupContext, F) -> Fraction:
    """|boundary(F)| / |F| as an exact rational."""
    F = _as_set(ctx, F)
    if not F:
        raise EmptySetError("isoperimetric ratio of the empty set")
    return Fraction(len(boundary(ctx, F)), len(F))


# ---------------------------------------------------------------------------
# k-similarity
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BallIsomorphism:
    """Color-preserving bijection from the radius-k Cayley ball onto the
    radius-k ball of ``center``; ``images[i]`` is the vertex id of
    ``tree.elements[i]``."""

    center: int
    radius: int
    tree: BallTree
    images: tuple

    def __call__(self, g) -> int:
        return self.images[self.tree.index[tuple(g)]]

    @property
    def mapping(self) -> dict:
        return dict(zip(self.tree.elements, self.images))


def defect_distance(B: ColoredGraph) -> np.ndarray:
    """Distance from each vertex to the nearest vertex missing some color.

    Vertices that cannot reach such a vertex get ``np.iinfo(int64).max``.
    """
    deficient = np.nonzero((B.nbr < 0).any(axis=1))[0]
    dist = B.distances(deficient)
    return np.where(dist < 0, np.iinfo(np.int64).max, dist)


def similar_images(B: ColoredGraph, k: int, candidates=None, ctx: Optional[GroupContext] = None):
    """Vectorized k-similarity test.

    Returns ``(centers, images, tree)`` where ``centers`` are the positions in
    Q^B_k (ascending) and ``images[j, i]`` is the position of
    ``tree.elements[i]`` under the color-guided map centered at ``centers[j]``.

    The map is grown from ``1 -> x`` along the BFS tree of the Cayley ball.
    A candidate is rejected when the map is not injective, when a Cayley-ball
    edge is missing from B, or when B has an edge between image vertices that
    the Cayley ball lacks.
    """
    ctx = B.ctx if ctx is None else ctx
    tree = ball_tree(ctx, k)
    b = len(tree)
    if candidates is None:
        dd = defect_distance(B)
        candidates = np.nonzero(dd >= k)[0]
    candidates = np.asarray(candidates, dtype=np.int64)
    if B.n == 0 or candidates.size == 0:
        return np.zeros(0, dtype=np.int64), np.zeros((0, b), dtype=np.int64), tree

    nbr_ext = np.vstack([B.nbr, np.full((1, B.nbr.shape[1]), -1, dtype=np.int64)])
    inside = tree.nbr >= 0
    in_src, in_col = np.nonzero(inside)
    in_dst = tree.nbr[in_src, in_col]
    out_src, out_col = np.nonzero(~inside)
    big = B.n + 1

    chunk = max(1, _CHUNK_BUDGET // (b * max(1, B.nbr.shape[1])))
    keep_c, keep_i = [], []
    for start in range(0, candidates.size, chunk):
        cand = candidates[start:start + chunk]
        c = cand.size
        imgs = np.empty((c, b), dtype=np.int64)
        imgs[:, 0] = cand
        for j in range(1, k + 1):
            lo, hi = tree.layer_starts[j], tree.layer_starts[j + 1]
            if lo == hi:
                break
            imgs[:, lo:hi] = nbr_ext[imgs[:, tree.parent[lo:hi]], tree.gen[lo:hi]]
        ok = (imgs >= 0).all(axis=1)
        safe = np.where(imgs >= 0, imgs, B.n)
        srt = np.sort(safe, axis=1)
        ok &= ~(srt[:, 1:] == srt[:, :-1]).any(axis=1)
        if in_src.size:
            got = nbr_ext[safe[:, in_src], in_col]
            ok &= (got == safe[:, in_dst]).all(axis=1)
        if out_src.size:
            tgt = nbr_ext[safe[:, out_src], out_col]
            offs = (np.arange(c, dtype=np.int64) * big)[:, None]
            flat = (srt + offs).ravel()
            q = tgt + offs
            where = np.minimum(np.searchsorted(flat, q.ravel()), flat.size - 1).reshape(q.shape)
            hit = (flat[where] == q) & (tgt >= 0)
            ok &= ~hit.any(axis=1)
        keep_c.append(cand[ok])
        keep_i.append(imgs[ok])
    centers = np.concatenate(keep_c)
    images = np.concatenate(keep_i) if keep_i else np.zeros((0, b), dtype=np.int64)
    order = np.argsort(centers, kind="stable")
    return centers[order], images[order], tree


def k_similar_vertices(B: ColoredGraph, k: int, ctx: Optional[GroupContext] = None) -> dict:
    """Q^B_k as a map from vertex id to its :class:`BallIsomorphism`."""
    centers, images, tree = similar_images(B, k, ctx=ctx)
    ids = B.ids
    return {
        int(ids[x]): BallIsomorphism(int(ids[x]), k, tree, tuple(int(v) for v in ids[row]))
        for x, row in zip(centers, images)
    }


def similar_count(B: ColoredGraph, k: int) -> int:
    return int(similar_images(B, k)[0].size)


def convergence_profile(seq: Iterable[ColoredGraph], k: int) -> list:
    """|Q^{B_n}_k| / |V(B_n)| for each graph of a sequence."""
    out = []
    for B in seq:
        if B.n == 0:
            raise EmptySetError("convergence profile of an empty graph")
        out.append(Fraction(similar_count(B, k), B.n))
    return out
