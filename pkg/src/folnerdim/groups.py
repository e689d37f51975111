"""Concrete finitely generated groups: free abelian groups, their quotients,
the discrete Heisenberg group and its mod-m reductions.

Elements are handled internally as plain integer tuples ("coords"); the
:class:`GroupElement` wrapper pairs coords with their context for the public
arithmetic API.  Left multiplication by a generator, ``x -> s*x``, is the
edge convention used everywhere (Cayley graphs, balls, word lengths).
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Iterator, Union

import numpy as np

from .errors import CapExceededError, ContextMismatchError, ParseError

Coords = tuple

DEFAULT_RADIUS_CAP = 64


class Family(enum.Enum):
    FREE_ABELIAN = "free_abelian"
    ABELIAN_QUOTIENT = "abelian_quotient"
    HEISENBERG = "heisenberg"
    HEISENBERG_QUOTIENT = "heisenberg_quotient"


@dataclass(frozen=True)
class GroupContext:
    """A group from the closed family list together with its generating set.

    For abelian quotients a modulus of 0 leaves that coordinate free, so
    ``Z^2/(6,0)`` is the infinite group Z/6 x Z.
    """

    family: Family
    dim: int
    moduli: tuple = ()

    @staticmethod
    def free_abelian(d: int) -> "GroupContext":
        if d < 1:
            raise ValueError("rank must be at least 1")
        return GroupContext(Family.FREE_ABELIAN, d, (0,) * d)

    @staticmethod
    def abelian_quotient(moduli) -> "GroupContext":
        moduli = tuple(int(m) for m in moduli)
        if not moduli or any(m < 0 for m in moduli):
            raise ValueError(f"bad moduli {moduli}")
        if all(m == 0 for m in moduli):
            return GroupContext.free_abelian(len(moduli))
        return GroupContext(Family.ABELIAN_QUOTIENT, len(moduli), moduli)

    @staticmethod
    def heisenberg() -> "GroupContext":
        return GroupContext(Family.HEISENBERG, 3, (0, 0, 0))

    @staticmethod
    def heisenberg_quotient(m: int) -> "GroupContext":
        if m < 1:
            raise ValueError("modulus must be >= 1")
        return GroupContext(Family.HEISENBERG_QUOTIENT, 3, (m, m, m))

    # -- structure ---------------------------------------------------------

    @property
    def is_abelian(self) -> bool:
        return self.family in (Family.FREE_ABELIAN, Family.ABELIAN_QUOTIENT)

    @property
    def is_finite(self) -> bool:
        return all(m > 0 for m in self.moduli)

    @property
    def order(self) -> int:
        if not self.is_finite:
            raise ValueError(f"{self} is infinite")
        out = 1
        for m in self.moduli:
            out *= m
        return out

    @cached_property
    def cover(self) -> "GroupContext":
        """The infinite group this one is a quotient of (itself if free)."""
        if self.is_abelian:
            return GroupContext.free_abelian(self.dim)
        return GroupContext.heisenberg()

    @cached_property
    def identity(self) -> Coords:
        return (0,) * self.dim

    def normalize(self, coords) -> Coords:
        coords = tuple(int(c) for c in coords)
        if len(coords) != self.dim:
            raise ContextMismatchError(f"{coords} has wrong length for {self}")
        return tuple(c % m if m else c for c, m in zip(coords, self.moduli))

    project = normalize

    def mul(self, a: Coords, b: Coords) -> Coords:
        if self.is_abelian:
            return tuple((x + y) % m if m else x + y for x, y, m in zip(a, b, self.moduli))
        m = self.moduli[0]
        c = a[2] + b[2] + a[0] * b[1]
        out = (a[0] + b[0], a[1] + b[1], c)
        return tuple(v % m for v in out) if m else out

    def inv(self, a: Coords) -> Coords:
        if self.is_abelian:
            return tuple(-x % m if m else -x for x, m in zip(a, self.moduli))
        m = self.moduli[0]
        out = (-a[0], -a[1], -a[2] + a[0] * a[1])
        return tuple(v % m for v in out) if m else out

    @cached_property
    def color_generators(self) -> tuple:
        """Images of the cover's generators, in the cover's order.

        Entries may repeat or be the identity in small quotients; graph
        colors index into this tuple.
        """
        if self.is_abelian:
            gens = []
            for i in range(self.dim):
                for sign in (1, -1):
                    e = [0] * self.dim
                    e[i] = sign
                    gens.append(tuple(e))
        else:
            gens = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0)]
        return tuple(self.normalize(g) for g in gens)

    @cached_property
    def generators(self) -> tuple:
        """Symmetric generating set: distinct non-identity generator images."""
        seen = []
        for g in self.color_generators:
            if g != self.identity and g not in seen:
                seen.append(g)
        return tuple(seen)

    @cached_property
    def color_inverse(self) -> np.ndarray:
        """Index of the inverse color for each color of the cover."""
        gens = self.cover.color_generators
        return np.array([gens.index(self.cover.inv(s)) for s in gens], dtype=np.int64)

    def elements(self) -> Iterator[Coords]:
        """All elements of a finite group, in lexicographic order."""
        if not self.is_finite:
            raise ValueError(f"{self} is infinite")
        yield from _product_ranges(self.moduli)

    def __str__(self) -> str:
        if self.family is Family.FREE_ABELIAN:
            return "Z" if self.dim == 1 else f"Z^{self.dim}"
        if self.family is Family.ABELIAN_QUOTIENT:
            base = "Z" if self.dim == 1 else f"Z^{self.dim}"
            if self.dim == 1:
                return f"{base}/{self.moduli[0]}"
            return f"{base}/({','.join(map(str, self.moduli))})"
        if self.family is Family.HEISENBERG:
            return "H3"
        return f"H3/{self.moduli[0]}"


def _product_ranges(moduli) -> Iterator[Coords]:
    if not moduli:
        yield ()
        return
    for head in range(moduli[0]):
        for tail in _product_ranges(moduli[1:]):
            yield (head,) + tail


_SPEC_RE = re.compile(
    r"^\s*(?:(?P<z>Z)(?:\^(?P<d>\d+))?|(?P<h>H3))"
    r"(?:/(?:\((?P<mods>[\d,\s]+)\)|(?P<mod>\d+)))?\s*$"
)


def parse_group(spec: str) -> GroupContext:
    """Parse a group spec string.

    Grammar::

        spec    := "Z" ["^" d] ["/" quot] | "H3" ["/" m]
        quot    := m | "(" m {"," m} ")"

    A single modulus after ``Z^d`` applies to every coordinate; modulus 0
    leaves a coordinate free.  Examples: ``Z``, ``Z^2``, ``Z/12``,
    ``Z^2/(10,10)``, ``Z^2/(6,0)``, ``H3``, ``H3/7``.
    """
    m = _SPEC_RE.match(spec)
    if not m:
        raise ParseError(f"cannot parse group spec {spec!r}")
    mods = None
    if m.group("mods") is not None:
        try:
            mods = [int(t) for t in m.group("mods").split(",")]
        except ValueError as exc:
            raise ParseError(f"bad moduli in {spec!r}") from exc
    elif m.group("mod") is not None:
        mods = [int(m.group("mod"))]
    if m.group("h"):
        if mods is None:
            return GroupContext.heisenberg()
        if len(mods) != 1 or mods[0] < 1:
            raise ParseError(f"Heisenberg quotient needs one modulus >= 1: {spec!r}")
        return GroupContext.heisenberg_quotient(mods[0])
    d = int(m.group("d") or 1)
    if d < 1:
        raise ParseError(f"rank must be positive: {spec!r}")
    if mods is None:
        return GroupContext.free_abelian(d)
    if len(mods) == 1:
        mods = mods * d
    if len(mods) != d:
        raise ParseError(f"expected {d} moduli in {spec!r}")
    return GroupContext.abelian_quotient(mods)


@dataclass(frozen=True)
class GroupElement:
    ctx: GroupContext
    coords: Coords

    def __post_init__(self):
        object.__setattr__(self, "coords", self.ctx.normalize(self.coords))

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return compose(self, other)

    def inverse(self) -> "GroupElement":
        return GroupElement(self.ctx, self.ctx.inv(self.coords))

    def __repr__(self) -> str:
        return f"GroupElement({self.ctx}, {self.coords})"


def element(ctx: GroupContext, *coords) -> GroupElement:
    if len(coords) == 1 and not isinstance(coords[0], int):
        coords = tuple(coords[0])
    return GroupElement(ctx, coords)


def identity(ctx: GroupContext) -> GroupElement:
    return GroupElement(ctx, ctx.identity)


def compose(g: GroupElement, h: GroupElement) -> GroupElement:
    if g.ctx != h.ctx:
        raise ContextMismatchError(f"cannot multiply elements of {g.ctx} and {h.ctx}")
    return GroupElement(g.ctx, g.ctx.mul(g.coords, h.coords))


def _coords(ctx: GroupContext, g) -> Coords:
    if isinstance(g, GroupElement):
        if g.ctx != ctx:
            raise ContextMismatchError(f"{g} is not in {ctx}")
        return g.coords
    return ctx.normalize(g)


def bfs_layers(ctx: GroupContext, gens=None) -> Iterator[list]:
    """Yield the spheres of the Cayley graph around the identity, layer by layer."""
    gens = ctx.generators if gens is None else gens
    seen = {ctx.identity}
    layer = [ctx.identity]
    while layer:
        yield layer
        nxt = []
        for x in layer:
            for s in gens:
                y = ctx.mul(s, x)
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        layer = nxt


def word_length(ctx: GroupContext, g, cap: int = DEFAULT_RADIUS_CAP, method: str = "auto") -> int:
    """Length of a shortest generator word for ``g``.

    Abelian families use the per-coordinate closed form; ``method="bfs"``
    forces breadth-first search, which is also the only route for the
    Heisenberg families.  BFS beyond ``cap`` raises :class:`CapExceededError`.
    """
    x = _coords(ctx, g)
    if method == "auto" and ctx.is_abelian:
        return sum(min(c, m - c) if m else abs(c) for c, m in zip(x, ctx.moduli))
    for r, layer in enumerate(bfs_layers(ctx)):
        if r > cap:
            break
        if x in layer:
            return r
    raise CapExceededError(f"word length of {x} exceeds cap {cap}")


@dataclass(frozen=True, eq=False)
class BallTree:
    """Breadth-first spanning tree of the radius-k ball around the identity.

    ``elements`` are listed in BFS order (so the radius-j ball is a prefix for
    every j <= k).  Element ``i > 0`` equals ``colors[gen[i]] * elements[parent[i]]``.
    ``nbr[i, s]`` is the ball index of ``colors[s] * elements[i]`` or -1 when
    that product leaves the ball.
    """

    ctx: GroupContext
    radius: int
    elements: tuple
    index: dict
    parent: np.ndarray
    gen: np.ndarray
    layer_starts: tuple
    nbr: np.ndarray

    def __len__(self) -> int:
        return len(self.elements)

    def prefix(self, j: int) -> int:
        """Number of elements of word length <= j."""
        return self.layer_starts[min(j, self.radius) + 1]


@lru_cache(maxsize=128)
def ball_tree(ctx: GroupContext, k: int) -> BallTree:
    """BFS tree of the ball of radius ``k``, colored by ``ctx.color_generators``."""
    if k < 0:
        raise ValueError("radius must be >= 0")
    colors = ctx.color_generators
    elements = [ctx.identity]
    index = {ctx.identity: 0}
    parent = [-1]
    gen = [-1]
    starts = [0, 1]
    lo = 0
    for _ in range(k):
        hi = len(elements)
        for i in range(lo, hi):
            x = elements[i]
            for si, s in enumerate(colors):
                y = ctx.mul(s, x)
                if y not in index:
                    index[y] = len(elements)
                    elements.append(y)
                    parent.append(i)
                    gen.append(si)
        lo = hi
        starts.append(len(elements))
    nbr = np.full((len(elements), len(colors)), -1, dtype=np.int64)
    for i, x in enumerate(elements):
        for si, s in enumerate(colors):
            nbr[i, si] = index.get(ctx.mul(s, x), -1)
    return BallTree(
        ctx, k, tuple(elements), index,
        np.array(parent, dtype=np.int64), np.array(gen, dtype=np.int64),
        tuple(starts), nbr,
    )


def ball_elements(ctx: GroupContext, k: int) -> frozenset:
    """All elements of word length <= k."""
    return frozenset(ball_tree(ctx, k).elements)


def radius(ctx: GroupContext, F: Iterable) -> int:
    """Maximal word length over a finite set."""
    return max(word_length(ctx, x) for x in F)


def inradius(ctx: GroupContext, F) -> int:
    """Largest r with B_r(1) contained in F; -1 if the identity is missing."""
    F = F if isinstance(F, (set, frozenset)) else set(F)
    r = -1
    for layer in bfs_layers(ctx):
        if any(x not in F for x in layer):
            return r
        r += 1
    return r


GroupLike = Union[GroupContext, str]


def as_context(ctx: GroupLike) -> GroupContext:
    return parse_group(ctx) if isinstance(ctx, str) else ctx
