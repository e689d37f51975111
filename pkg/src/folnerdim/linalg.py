"""Exact sparse linear algebra over the Gaussian rationals Q(i).

Real entries are stored as :class:`fractions.Fraction`, complex ones as
:class:`GaussianRational`; elimination over a purely real matrix therefore
never touches the complex code path.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable

import numpy as np

from .errors import BadPrimeError, ParseError


class GaussianRational:
    """Exact complex number ``re + im*i`` with rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = as_fraction(re)
        self.im = as_fraction(im)

    @staticmethod
    def _lift(x):
        if isinstance(x, GaussianRational):
            return x
        if isinstance(x, (int, Fraction)):
            return GaussianRational(x, 0)
        return NotImplemented

    def __add__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return _simplify(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return _simplify(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return o - self

    def __mul__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return _simplify(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        den = o.re * o.re + o.im * o.im
        if not den:
            raise ZeroDivisionError("division by zero Gaussian rational")
        return _simplify(
            (self.re * o.re + self.im * o.im) / den,
            (self.im * o.re - self.re * o.im) / den,
        )

    def __rtruediv__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return o / self

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return False
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if not self.im:
            return hash(self.re)
        return hash((self.re, self.im))

    def conjugate(self):
        return GaussianRational(self.re, -self.im)

    def __repr__(self):
        return f"GaussianRational({format_scalar(self)!r})"

    def __str__(self):
        return format_scalar(self)


def _simplify(re, im):
    return re if not im else GaussianRational(re, im)


def as_fraction(x) -> Fraction:
    """Exact rational from int, Fraction, decimal string or float.

    Floats go through their shortest repr, so ``0.1`` becomes 1/10.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot convert {x!r} to an exact rational")


def as_scalar(x):
    """Normalize to the stored scalar type: Fraction when real, else GaussianRational."""
    if isinstance(x, GaussianRational):
        return _simplify(x.re, x.im)
    if isinstance(x, complex):
        return _simplify(as_fraction(x.real), as_fraction(x.imag))
    if isinstance(x, str):
        return parse_scalar(x)
    return as_fraction(x)


I = GaussianRational(0, 1)


def real_imag(x):
    if isinstance(x, GaussianRational):
        return x.re, x.im
    return as_fraction(x), Fraction(0)


_RAT = r"[0-9]+(?:/[0-9]+)?"
_TERM_RE = re.compile(rf"([+-]?)({_RAT})?(i?)")


def parse_scalar(text: str):
    """Parse ``a``, ``bi``, ``a+bi``, ``a-bi``, ``i``, ``-i`` with rational a, b."""
    s = text.strip().replace(" ", "")
    if not s:
        raise ParseError("empty scalar")
    re_part = Fraction(0)
    im_part = Fraction(0)
    pos = 0
    seen = False
    while pos < len(s):
        m = _TERM_RE.match(s, pos)
        if not m or m.end() == pos or (seen and not m.group(1)):
            raise ParseError(f"cannot parse scalar {text!r}")
        sign, num, imag = m.groups()
        if not num and not imag:
            raise ParseError(f"cannot parse scalar {text!r}")
        value = Fraction(num) if num else Fraction(1)
        if sign == "-":
            value = -value
        if imag:
            im_part += value
        else:
            re_part += value
        pos = m.end()
        seen = True
    return _simplify(re_part, im_part)


def _fmt_rat(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def format_scalar(x) -> str:
    re_part, im_part = real_imag(x)
    if not im_part:
        return _fmt_rat(re_part)
    mag = abs(im_part)
    imag = "i" if mag == 1 else f"{_fmt_rat(mag)}i"
    if not re_part:
        return ("-" if im_part < 0 else "") + imag
    return f"{_fmt_rat(re_part)}{'-' if im_part < 0 else '+'}{imag}"


@dataclass(eq=False)
class SparseExactMatrix:
    """Sparse matrix over Q(i); ``entries`` maps (row, col) to a nonzero scalar."""

    nrows: int
    ncols: int
    entries: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for (r, c), v in self.entries.items():
            if not (0 <= r < self.nrows and 0 <= c < self.ncols):
                raise IndexError(f"entry ({r}, {c}) outside {self.nrows}x{self.ncols}")
            v = as_scalar(v)
            if v:
                clean[(int(r), int(c))] = v
        self.entries = clean

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    @property
    def nnz(self) -> int:
        return len(self.entries)

    def __eq__(self, other):
        return (
            isinstance(other, SparseExactMatrix)
            and self.shape == other.shape
            and self.entries == other.entries
        )

    def is_real(self) -> bool:
        return not any(isinstance(v, GaussianRational) for v in self.entries.values())

    @classmethod
    def from_dense(cls, rows) -> "SparseExactMatrix":
        rows = [list(r) for r in rows]
        ncols = len(rows[0]) if rows else 0
        ent = {(i, j): v for i, r in enumerate(rows) for j, v in enumerate(r) if v}
        return cls(len(rows), ncols, ent)

    @classmethod
    def identity(cls, n: int) -> "SparseExactMatrix":
        return cls(n, n, {(i, i): 1 for i in range(n)})

    def to_dense(self) -> list:
        out = [[Fraction(0)] * self.ncols for _ in range(self.nrows)]
        for (r, c), v in self.entries.items():
            out[r][c] = v
        return out

    def transpose(self) -> "SparseExactMatrix":
        return SparseExactMatrix(self.ncols, self.nrows, {(c, r): v for (r, c), v in self.entries.items()})

    def select_columns(self, cols) -> "SparseExactMatrix":
        cols = list(cols)
        pos = {c: i for i, c in enumerate(cols)}
        ent = {(r, pos[c]): v for (r, c), v in self.entries.items() if c in pos}
        return SparseExactMatrix(self.nrows, len(cols), ent)

    def select_rows(self, rows) -> "SparseExactMatrix":
        rows = list(rows)
        pos = {r: i for i, r in enumerate(rows)}
        ent = {(pos[r], c): v for (r, c), v in self.entries.items() if r in pos}
        return SparseExactMatrix(len(rows), self.ncols, ent)

    def matvec(self, x) -> list:
        out = [Fraction(0)] * self.nrows
        for (r, c), v in self.entries.items():
            out[r] = out[r] + v * x[c]
        return out

    # -- text dump ---------------------------------------------------------

    def dumps(self) -> str:
        lines = [f"{self.nrows} {self.ncols} {self.nnz}"]
        for (r, c) in sorted(self.entries):
            re_part, im_part = real_imag(self.entries[(r, c)])
            lines.append(f"{r} {c} {_fmt_rat(re_part)} {_fmt_rat(im_part)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "SparseExactMatrix":
        lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("%")]
        if not lines:
            raise ParseError("empty matrix dump")
        try:
            nrows, ncols, nnz = (int(t) for t in lines[0].split())
            ent = {}
            for ln in lines[1:]:
                r, c, re_s, im_s = ln.split()
                ent[(int(r), int(c))] = _simplify(Fraction(re_s), Fraction(im_s))
        except ValueError as exc:
            raise ParseError(f"malformed matrix dump: {exc}") from exc
        if len(ent) != nnz:
            raise ParseError(f"header says {nnz} entries, found {len(ent)}")
        return cls(nrows, ncols, ent)


def block_diag(*mats: SparseExactMatrix) -> SparseExactMatrix:
    ent = {}
    r0 = c0 = 0
    for m in mats:
        for (r, c), v in m.entries.items():
            ent[(r + r0, c + c0)] = v
        r0 += m.nrows
        c0 += m.ncols
    return SparseExactMatrix(r0, c0, ent)


# ---------------------------------------------------------------------------
# elimination
# ---------------------------------------------------------------------------

def _choose_pivot(rows: dict, cols: dict):
    """Markowitz pivot among the shortest rows and singleton columns.

    Cost is (row_len - 1) * (col_len - 1); ties go to the lowest row index,
    then the lowest column index.
    """
    best = None
    for c, rs in cols.items():
        if len(rs) == 1:
            (r,) = rs
            key = (0, r, c)
            if best is None or key < best:
                best = key
    if best is not None:
        return best[1], best[2]
    shortest = min(len(row) for row in rows.values())
    for r, row in rows.items():
        if len(row) != shortest:
            continue
        for c in row:
            key = ((shortest - 1) * (len(cols[c]) - 1), r, c)
            if best is None or key < best:
                best = key
    return best[1], best[2]


def exact_rank(m: SparseExactMatrix) -> int:
    """Rank over Q(i) by sparse Gaussian elimination with Markowitz pivoting."""
    rows: dict = {}
    cols: dict = {}
    for (r, c), v in m.entries.items():
        rows.setdefault(r, {})[c] = v
        cols.setdefault(c, set()).add(r)
    rank = 0
    while rows:
        pr, pc = _choose_pivot(rows, cols)
        prow = rows.pop(pr)
        for c in prow:
            cols[c].discard(pr)
        pv = prow[pc]
        for r in sorted(cols[pc]):
            row = rows[r]
            f = row[pc] / pv
            for c, v in prow.items():
                new = row.get(c, 0) - f * v
                if new:
                    if c not in row:
                        cols[c].add(r)
                    row[c] = new
                elif c in row:
                    del row[c]
                    cols[c].discard(r)
            if not row:
                del rows[r]
        del cols[pc]
        for c in [c for c, rs in cols.items() if not rs]:
            del cols[c]
        rank += 1
    return rank


def kernel_dimension(m: SparseExactMatrix) -> int:
    return m.ncols - exact_rank(m)


def restriction_dimension(m: SparseExactMatrix, subset: Iterable[int]) -> int:
    """Dimension of ker(m) projected onto the coordinates in ``subset``.

    Equals dim ker(m) minus the dimension of the kernel vectors that vanish
    on ``subset``, i.e. minus the nullity of m with those columns deleted.
    """
    subset = set(subset)
    if not subset:
        return 0
    keep = [c for c in range(m.ncols) if c not in subset]
    return kernel_dimension(m) - kernel_dimension(m.select_columns(keep))


# ---------------------------------------------------------------------------
# modular probe
# ---------------------------------------------------------------------------

def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    f = 3
    while f * f <= p:
        if p % f == 0:
            return False
        f += 2
    return True


def sqrt_minus_one(p: int) -> int | None:
    """A square root of -1 mod p, or None when none exists."""
    if p == 2:
        return 1
    if p % 4 != 1:
        return None
    for c in range(2, p):
        if pow(c, (p - 1) // 2, p) == p - 1:
            return pow(c, (p - 1) // 4, p)
    return None


def _mod(q: Fraction, p: int) -> int:
    if q.denominator % p == 0:
        raise BadPrimeError(f"denominator {q.denominator} vanishes mod {p}")
    return q.numerator * pow(q.denominator, -1, p) % p


def _rank_gfp(a: np.ndarray, p: int) -> int:
    a = a.copy()
    nr, nc = a.shape
    rank = 0
    for c in range(nc):
        if rank == nr:
            break
        nz = np.nonzero(a[rank:, c])[0]
        if nz.size == 0:
            continue
        piv = rank + nz[0]
        if piv != rank:
            a[[rank, piv]] = a[[piv, rank]]
        inv = pow(int(a[rank, c]), -1, p)
        a[rank] = a[rank] * inv % p
        others = np.nonzero(a[:, c])[0]
        others = others[others != rank]
        if others.size:
            a[others] = (a[others] - np.outer(a[others, c], a[rank])) % p
        rank += 1
    return rank


def _rank_gfp2(re: np.ndarray, im: np.ndarray, p: int) -> int:
    """Rank over GF(p)[i]/(i^2+1), a field when p = 3 mod 4."""
    re, im = re.copy(), im.copy()
    nr, nc = re.shape
    rank = 0
    for c in range(nc):
        if rank == nr:
            break
        nz = np.nonzero((re[rank:, c] != 0) | (im[rank:, c] != 0))[0]
        if nz.size == 0:
            continue
        piv = rank + nz[0]
        if piv != rank:
            re[[rank, piv]] = re[[piv, rank]]
            im[[rank, piv]] = im[[piv, rank]]
        a, b = int(re[rank, c]), int(im[rank, c])
        ninv = pow((a * a + b * b) % p, -1, p)
        ia, ib = a * ninv % p, (-b) * ninv % p
        r0, i0 = re[rank].copy(), im[rank].copy()
        re[rank] = (r0 * ia - i0 * ib) % p
        im[rank] = (r0 * ib + i0 * ia) % p
        others = np.nonzero((re[:, c] != 0) | (im[:, c] != 0))[0]
        others = others[others != rank]
        if others.size:
            fr, fi = re[others, c].copy(), im[others, c].copy()
            pr, pi = re[rank], im[rank]
            re[others] = (re[others] - (np.outer(fr, pr) - np.outer(fi, pi))) % p
            im[others] = (im[others] - (np.outer(fr, pi) + np.outer(fi, pr))) % p
        rank += 1
    return rank


def modular_rank_probe(m: SparseExactMatrix, p: int) -> int:
    """Rank of the reduction of ``m`` modulo a prime ``p``; never exceeds exact_rank.

    ``i`` maps to a square root of -1 when one exists mod p, otherwise the
    reduction lands in GF(p^2) = GF(p)[i].
    """
    if not _is_prime(p) or p >= 2**31:
        raise BadPrimeError(f"{p} is not a prime below 2^31")
    re = np.zeros(m.shape, dtype=np.int64)
    im = np.zeros(m.shape, dtype=np.int64)
    for (r, c), v in m.entries.items():
        a, b = real_imag(v)
        re[r, c] = _mod(a, p)
        im[r, c] = _mod(b, p)
    if not im.any():
        return _rank_gfp(re, p)
    root = sqrt_minus_one(p)
    if root is not None:
        return _rank_gfp((re + root * im) % p, p)
    return _rank_gfp2(re, im, p)
