"""Group-ring matrices over Q(i)G, their convolution action, compressions to
finite sets, the subspaces Z/W/V, the finite approximations T on colored
graphs, and the Følner-set properties used in the dimension bounds."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Optional


from .errors import ContextMismatchError, ParseError, UndefinedPropagationError
from .graphs import ColoredGraph, _as_set, k_interior, k_neighborhood, similar_images
from .groups import GroupContext, parse_group, word_length
from .linalg import (
    SparseExactMatrix,
    as_fraction,
    as_scalar,
    format_scalar,
    kernel_dimension,
    parse_scalar,
    restriction_dimension,
)


def _block(d: int, value) -> tuple:
    """Coerce a scalar (d == 1) or nested sequence into a d x d tuple block."""
    if d == 1 and not isinstance(value, (list, tuple)):
        return ((as_scalar(value),),)
    rows = tuple(tuple(as_scalar(v) for v in row) for row in value)
    if len(rows) != d or any(len(r) != d for r in rows):
        raise ValueError(f"expected a {d}x{d} block, got {value!r}")
    return rows


def _is_zero(blk) -> bool:
    return not any(v for row in blk for v in row)


def _add_blocks(a, b):
    return tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def zero_block(d: int) -> tuple:
    return tuple((Fraction(0),) * d for _ in range(d))


@dataclass(frozen=True, eq=False)
class GroupRingMatrix:
    """A = sum_g A_g * g in Mat_{d x d}(Q(i)G), with finite support."""

    ctx: GroupContext
    d: int
    support: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for g, blk in self.support.items():
            g = self.ctx.normalize(g)
            blk = _block(self.d, blk)
            clean[g] = _add_blocks(clean[g], blk) if g in clean else blk
        object.__setattr__(self, "support", {g: b for g, b in sorted(clean.items()) if not _is_zero(b)})

    @classmethod
    def identity(cls, ctx: GroupContext, d: int = 1) -> "GroupRingMatrix":
        blk = tuple(tuple(Fraction(int(i == j)) for j in range(d)) for i in range(d))
        return cls(ctx, d, {ctx.identity: blk})

    @classmethod
    def zero(cls, ctx: GroupContext, d: int = 1) -> "GroupRingMatrix":
        return cls(ctx, d, {})

    def block(self, g) -> tuple:
        return self.support.get(self.ctx.normalize(g), zero_block(self.d))

    def is_zero(self) -> bool:
        return not self.support

    def __eq__(self, other):
        return (
            isinstance(other, GroupRingMatrix)
            and self.ctx == other.ctx
            and self.d == other.d
            and self.support == other.support
        )

    def project(self, qctx: GroupContext) -> "GroupRingMatrix":
        """Image under the epimorphism onto a quotient of ``self.ctx``."""
        if qctx.cover != self.ctx:
            raise ContextMismatchError(f"{qctx} is not a quotient of {self.ctx}")
        out = {}
        for g, blk in self.support.items():
            q = qctx.normalize(g)
            out[q] = _add_blocks(out[q], blk) if q in out else blk
        return GroupRingMatrix(qctx, self.d, out)

    # -- text format -------------------------------------------------------

    def to_text(self) -> str:
        lines = [f"group {self.ctx} d {self.d}"]
        for g, blk in self.support.items():
            vals = " ".join(format_scalar(v) for row in blk for v in row)
            lines.append(f"{' '.join(map(str, g))} ; {vals}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "GroupRingMatrix":
        ctx = None
        d = None
        terms = {}
        for ln in text.splitlines():
            ln = ln.split("#", 1)[0].strip()
            if not ln:
                continue
            if ln.startswith("group"):
                parts = ln.split()
                if len(parts) != 4 or parts[2] != "d":
                    raise ParseError(f"bad header {ln!r}; expected 'group <spec> d <d>'")
                ctx = parse_group(parts[1])
                d = int(parts[3])
                continue
            if ctx is None:
                raise ParseError("operator text must start with a 'group' header")
            if ";" not in ln:
                raise ParseError(f"missing ';' in {ln!r}")
            left, right = ln.split(";", 1)
            try:
                g = ctx.normalize(int(t) for t in left.split())
            except ValueError as exc:
                raise ParseError(f"bad group element in {ln!r}") from exc
            vals = [parse_scalar(t) for t in right.split()]
            if len(vals) != d * d:
                raise ParseError(f"expected {d * d} entries in {ln!r}")
            blk = tuple(tuple(vals[i * d:(i + 1) * d]) for i in range(d))
            terms[g] = _add_blocks(terms[g], blk) if g in terms else blk
        if ctx is None:
            raise ParseError("empty operator text")
        return cls(ctx, d, terms)


def propagation(A: GroupRingMatrix) -> int:
    """Largest word length in the support of A."""
    if A.is_zero():
        raise UndefinedPropagationError("propagation of the zero operator is undefined")
    return max(word_length(A.ctx, g) for g in A.support)


def transformation_kernel(A: GroupRingMatrix, gamma, delta) -> tuple:
    """Ã(gamma, delta) = A_{gamma delta^-1}."""
    ctx = A.ctx
    return A.block(ctx.mul(ctx.normalize(gamma), ctx.inv(ctx.normalize(delta))))


@dataclass(frozen=True, eq=False)
class FiniteVector:
    """Finitely supported map from group elements to vectors in Q(i)^d."""

    ctx: GroupContext
    d: int
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for g, v in self.values.items():
            if self.d == 1 and not isinstance(v, (list, tuple)):
                v = (v,)
            v = tuple(as_scalar(x) for x in v)
            if len(v) != self.d:
                raise ValueError(f"vector at {g} has wrong length")
            if any(v):
                clean[self.ctx.normalize(g)] = v
        object.__setattr__(self, "values", clean)

    @property
    def support(self) -> frozenset:
        return frozenset(self.values)

    def __eq__(self, other):
        return isinstance(other, FiniteVector) and self.d == other.d and self.values == other.values


def apply(A: GroupRingMatrix, f: FiniteVector) -> FiniteVector:
    """(A f)(delta) = sum_g A_g f(g^-1 delta)."""
    if A.ctx != f.ctx:
        raise ContextMismatchError("operator and vector live on different groups")
    out: dict = {}
    for g, blk in A.support.items():
        for p, v in f.values.items():
            delta = A.ctx.mul(g, p)
            acc = out.setdefault(delta, [Fraction(0)] * A.d)
            for i in range(A.d):
                acc[i] = acc[i] + sum((blk[i][j] * v[j] for j in range(A.d)), Fraction(0))
    return FiniteVector(A.ctx, A.d, {g: tuple(v) for g, v in out.items()})


def system_matrix(A: GroupRingMatrix, rows, cols) -> SparseExactMatrix:
    """Matrix of f |-> (A f)|_rows for f supported on ``cols``.

    Rows and columns are indexed ``position * d + component`` following the
    given element orders.
    """
    d = A.d
    rows = list(rows)
    cols = list(cols)
    rpos = {g: i for i, g in enumerate(rows)}
    ent: dict = {}
    mul = A.ctx.mul
    for j, p in enumerate(cols):
        for g, blk in A.support.items():
            i = rpos.get(mul(g, p))
            if i is None:
                continue
            for a in range(d):
                for b in range(d):
                    v = blk[a][b]
                    if v:
                        key = (i * d + a, j * d + b)
                        ent[key] = ent[key] + v if key in ent else v
    return SparseExactMatrix(len(rows) * d, len(cols) * d, ent)


def compress(A: GroupRingMatrix, F) -> SparseExactMatrix:
    """P A P* for the coordinate projection onto F (elements in sorted order)."""
    F = sorted(_as_set(A.ctx, F))
    return system_matrix(A, F, F)


class SubspaceDims(NamedTuple):
    z: int
    w: int
    v: int


def subspace_dims(A: GroupRingMatrix, F) -> SubspaceDims:
    """Exact dimensions of Z_F, W_F and V_F = ker(P A P*)."""
    ctx = A.ctx
    F = _as_set(ctx, F)
    w = propagation(A) if not A.is_zero() else 0
    nbhd = k_neighborhood(ctx, F, w)
    dim_z = kernel_dimension(system_matrix(A, sorted(F), sorted(nbhd)))
    dim_w = _interior_kernel(A, k_interior(ctx, F, w), w)
    dim_v = kernel_dimension(compress(A, F))
    return SubspaceDims(dim_z, dim_w, dim_v)


def quotient_matrix(A: GroupRingMatrix, qctx: GroupContext) -> SparseExactMatrix:
    """Matrix of the image of A acting on l^2 of a finite quotient."""
    Aq = A.project(qctx)
    elems = list(qctx.elements())
    return system_matrix(Aq, elems, elems)


# ---------------------------------------------------------------------------
# approximating operators on colored graphs
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ApproxOperator:
    """T on l^2(V(B))^d; column block x is nonzero only when x is w(A)-similar."""

    matrix: SparseExactMatrix
    graph: ColoredGraph
    d: int
    similar: frozenset

    def block(self, y: int, x: int) -> tuple:
        d = self.d
        return tuple(
            tuple(self.matrix.entries.get((y * d + a, x * d + b), Fraction(0)) for b in range(d))
            for a in range(d)
        )

    def provenance(self, x: int) -> str:
        return "transplanted" if x in self.similar else "zero"

    def kernel_dimension(self) -> int:
        return kernel_dimension(self.matrix)


def build_Tn(B: ColoredGraph, A: GroupRingMatrix) -> ApproxOperator:
    """Transplant A onto B along the ball isomorphisms at w(A)-similar vertices.

    For x in Q^B_w and y = phi^x(gamma), the block T(y, x) is A_gamma.
    """
    if A.ctx != B.ctx:
        raise ContextMismatchError(f"operator over {A.ctx} cannot act on a graph colored by {B.ctx}")
    d = A.d
    n = B.n
    if A.is_zero():
        return ApproxOperator(SparseExactMatrix(n * d, n * d), B, d, frozenset())
    w = propagation(A)
    centers, images, tree = similar_images(B, w)
    ent = {}
    for g, blk in A.support.items():
        col = tree.index[g]
        for x, y in zip(centers.tolist(), images[:, col].tolist()):
            for a in range(d):
                for b in range(d):
                    if blk[a][b]:
                        ent[(y * d + a, x * d + b)] = blk[a][b]
    return ApproxOperator(SparseExactMatrix(n * d, n * d, ent), B, d, frozenset(centers.tolist()))


# ---------------------------------------------------------------------------
# Følner-set properties
# ---------------------------------------------------------------------------

@dataclass
class PropertyVerdict:
    status: str  # "proven", "supported" or "refuted"
    checked: int
    threshold: Fraction
    worst: int
    counterexample: Optional[frozenset] = None

    @property
    def holds(self) -> bool:
        return self.status != "refuted"


def _interior_kernel(A: GroupRingMatrix, inner: frozenset, w: int) -> int:
    # A f = 0 for f on ``inner`` only involves rows in B_w(inner)
    if not inner:
        return 0
    return kernel_dimension(system_matrix(A, sorted(k_neighborhood(A.ctx, inner, w)), sorted(inner)))


def kernel_on_interior(A: GroupRingMatrix, K, w: Optional[int] = None) -> int:
    """dim{f : supp f in Omega_w(K), A f = 0}."""
    w = propagation(A) if w is None else w
    return _interior_kernel(A, k_interior(A.ctx, _as_set(A.ctx, K), w), w)


def _minus_threshold(target, delta, size, normalized):
    base = (1 - delta) * target
    return base * size if normalized else base


def property_minus_check(
    A: GroupRingMatrix, F, eps, delta, target, trials: int = 100,
    seed: int = 0, normalized: bool = True, exhaustive_limit: int = 20,
) -> PropertyVerdict:
    """Check the lower dimension property over subsets K of F with |K|/|F| > 1 - eps.

    Exhaustive when |F| <= ``exhaustive_limit`` (verdict "proven"), otherwise
    ``trials`` random subsets (verdict "supported").  With ``normalized`` the
    requirement is dim R >= (1 - delta) * target * |F|.
    """
    ctx = A.ctx
    eps, delta, target = as_fraction(eps), as_fraction(delta), as_fraction(target)
    elems = sorted(_as_set(ctx, F))
    n = len(elems)
    w = propagation(A) if not A.is_zero() else 0
    min_size = int((1 - eps) * n) + 1
    threshold = _minus_threshold(target, delta, n, normalized)
    cache: dict = {}

    def dim_r(K):
        inner = k_interior(ctx, K, w)
        if inner not in cache:
            cache[inner] = _interior_kernel(A, inner, w)
        return cache[inner]

    if n <= exhaustive_limit:
        subsets = (frozenset(c) for s in range(min_size, n + 1) for c in itertools.combinations(elems, s))
        status = "proven"
    else:
        rng = random.Random(seed)

        def sampler():
            for _ in range(trials):
                s = rng.randint(min_size, n)
                yield frozenset(rng.sample(elems, s))

        subsets = sampler()
        status = "supported"
    checked = 0
    worst = None
    for K in subsets:
        checked += 1
        val = dim_r(K)
        worst = val if worst is None else min(worst, val)
        if val < threshold:
            return PropertyVerdict("refuted", checked, threshold, val, K)
    return PropertyVerdict(status, checked, threshold, worst if worst is not None else 0)


def restriction_to_set(A: GroupRingMatrix, F) -> int:
    """Dimension of Z_F restricted to F."""
    ctx = A.ctx
    F = _as_set(ctx, F)
    w = propagation(A) if not A.is_zero() else 0
    cols = sorted(k_neighborhood(ctx, F, w))
    m = system_matrix(A, sorted(F), cols)
    d = A.d
    subset = [j * d + b for j, g in enumerate(cols) if g in F for b in range(d)]
    return restriction_dimension(m, subset)


def property_plus_check(A: GroupRingMatrix, F, delta, target, normalized: bool = True) -> PropertyVerdict:
    """Check dim(Z_F restricted to F) <= (target + delta) * |F| (or without |F|)."""
    delta, target = as_fraction(delta), as_fraction(target)
    F = _as_set(A.ctx, F)
    dim_q = restriction_to_set(A, F)
    threshold = (target + delta) * len(F) if normalized else target + delta
    status = "proven" if dim_q <= threshold else "refuted"
    return PropertyVerdict(status, 1, threshold, dim_q, None if status == "proven" else F)
