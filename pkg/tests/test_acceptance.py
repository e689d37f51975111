"""Acceptance criteria, one test per criterion.

Each test records a one-line PASS/FAIL verdict, printed in the terminal
summary under "acceptance criteria".
"""

import random
import time
from fractions import Fraction


from folnerdim.errors import PostconditionError
from folnerdim.graphs import cayley_subgraph
from folnerdim.groups import GroupContext
from folnerdim.harness import bound_check, folner_sequence, quotient_sequence, torus_oracle
from folnerdim.linalg import (
    GaussianRational,
    SparseExactMatrix,
    block_diag,
    exact_rank,
    kernel_dimension,
    modular_rank_probe,
)
from folnerdim.operators import build_Tn, quotient_matrix, subspace_dims
from folnerdim.tiling import (
    TileCollection,
    check_witness,
    cover_fraction,
    inductional_step,
    is_epsilon_disjoint,
    is_even_cover,
    quasi_tile,
    select_epsilon_disjoint,
)

from conftest import Z, Z2, averaging2, cycle, e1, e2, interval


def square(r):
    return [(i, j) for i in range(-r, r + 1) for j in range(-r, r + 1)]


def test_quotient_identity(criterion):
    criterion["id"] = 1
    t0 = time.perf_counter()
    A = e1()
    dims = []
    for m in (6, 12, 24, 48):
        q = GroupContext.abelian_quotient((m,))
        T = build_Tn(cycle(m), A)
        assert T.matrix == quotient_matrix(A, q)
        assert Fraction(T.kernel_dimension(), m) == Fraction(1, m)
        dims.append(f"1/{m}")
    elapsed = time.perf_counter() - t0
    criterion["detail"] = f"T_m == circulant, dims {' '.join(dims)}, {elapsed:.2f}s"
    assert elapsed < 5


def test_e1_interval_convergence(criterion):
    criterion["id"] = 2
    t0 = time.perf_counter()
    A = e1()
    oracle = torus_oracle(A)
    vals = {}
    for n, B in zip((10, 50, 200), folner_sequence(Z, (10, 50, 200))):
        v = Fraction(build_Tn(B, A).kernel_dimension(), B.n)
        vals[n] = v
        assert v <= Fraction(2, 2 * n + 1)
    elapsed = time.perf_counter() - t0
    criterion["detail"] = (
        f"oracle {oracle}, dims " + " ".join(f"n={n}:{v}" for n, v in vals.items()) + f", {elapsed:.2f}s"
    )
    assert oracle == 0
    assert abs(vals[200] - oracle) <= Fraction(1, 100)
    assert elapsed < 10


def test_e2_quotient_convergence(criterion):
    criterion["id"] = 3
    t0 = time.perf_counter()
    A = e2()
    oracle = torus_oracle(A)
    vals = {}
    for m, B in zip((10, 50, 100), quotient_sequence(Z, (10, 50, 100))):
        vals[m] = Fraction(build_Tn(B, A).kernel_dimension(), B.n)
        assert vals[m] == Fraction(m + 1, m)
    elapsed = time.perf_counter() - t0
    criterion["detail"] = f"oracle {oracle}, dims " + " ".join(f"m={m}:{v}" for m, v in vals.items()) + f", {elapsed:.2f}s"
    assert oracle == 1
    assert abs(vals[50] - oracle) <= Fraction(2, 100)
    assert elapsed < 30


def test_z2_torus_convergence(criterion):
    criterion["id"] = 4
    t0 = time.perf_counter()
    A = averaging2()
    oracle = torus_oracle(A)
    vals = {}
    for m, B in zip((6, 10, 16), quotient_sequence(Z2, (6, 10, 16))):
        vals[m] = Fraction(build_Tn(B, A).kernel_dimension(), B.n)
        assert vals[m] <= Fraction(1, m * m)
    elapsed = time.perf_counter() - t0
    criterion["detail"] = f"oracle {oracle}, dims " + " ".join(f"m={m}:{v}" for m, v in vals.items()) + f", {elapsed:.2f}s"
    assert oracle == 0
    assert elapsed < 60


def test_subspace_sandwich(criterion):
    criterion["id"] = 5
    worst = 0
    for A, name in ((e1(), "E1"), (e2(), "E2")):
        for n in (1, 2, 3, 5, 10, 20, 40, 80):
            F = interval(n)
            z, w, v = subspace_dims(A, F)
            assert w <= v and w <= z
            assert abs(z - v) <= 4
            worst = max(worst, abs(z - v))
            closed = (2, 0, 0) if name == "E1" else (2 * n + 5, 2 * n - 1, 2 * n + 1)
            assert (z, w, v) == closed
    criterion["detail"] = f"E1, E2 on [-n,n] for n up to 80; max |dimZ - dimV| = {worst} <= 4"


def test_quasi_tiler(criterion):
    criterion["id"] = 6
    eps = Fraction(1, 4)
    t0 = time.perf_counter()
    box = cayley_subgraph(Z2, square(100))
    T1 = quasi_tile(box, [square(r) for r in range(1, 40)], eps)
    T2 = quasi_tile(cycle(4096), [interval(n) for n in range(1, 200)], eps)
    elapsed = time.perf_counter() - t0
    for T in (T1, T2):
        assert check_witness(T.tiles, T.witness, eps)
        assert cover_fraction(T.tiles) >= 1 - eps
    criterion["detail"] = (
        f"box cover {T1.cover} ({float(T1.cover):.4f}, {len(T1.tiles)} tiles), "
        f"cycle cover {T2.cover} ({float(T2.cover):.4f}, {len(T2.tiles)} tiles), {elapsed:.1f}s"
    )
    assert elapsed < 120


def _random_even_cover(rng, delta):
    """All translates of one or two random shapes on a cycle or torus, with up
    to a delta fraction of the tile mass removed."""
    if rng.random() < 0.5:
        n = rng.randint(20, 300)
        ground = range(n)
        shapes = [list(range(rng.randint(1, min(20, n)))) for _ in range(rng.randint(1, 2))]
        tiles = [{(x + s) % n for s in sh} for sh in shapes for x in range(n)]
    else:
        m = rng.randint(5, 18)
        ground = range(m * m)
        shapes = []
        for _ in range(rng.randint(1, 2)):
            a, b = rng.randint(1, m), rng.randint(1, m)
            shapes.append([(i, j) for i in range(a) for j in range(b)])
        tiles = [{((x + i) % m) * m + (y + j) % m for i, j in sh} for sh in shapes for x in range(m) for y in range(m)]
    rng.shuffle(tiles)
    total = sum(len(t) for t in tiles)
    budget = int(delta * total)
    keep = []
    for t in tiles:
        if budget >= len(t) and rng.random() < 0.5:
            budget -= len(t)
        else:
            keep.append(t)
    return TileCollection.from_sets(keep, ground)


def test_selection_suite(criterion):
    criterion["id"] = 7
    silent = loud = 0
    seeds = []
    for k in range(200):
        seed = 1000 + k
        seeds.append(seed)
        rng = random.Random(seed)
        delta = (Fraction(0), Fraction(1, 10), Fraction(3, 10))[k % 3]
        eps = rng.choice([Fraction(1, 10), Fraction(1, 5), Fraction(1, 4), Fraction(1, 2)])
        c = _random_even_cover(rng, delta)
        assert is_even_cover(c, delta) is not None, f"seed {seed} did not build an even cover"
        try:
            out = select_epsilon_disjoint(c, eps, delta)
        except PostconditionError:
            loud += 1
            continue
        w = is_epsilon_disjoint(out, eps)
        if w is None or not check_witness(out, w, eps) or cover_fraction(out) < eps * (1 - delta):
            silent += 1
    criterion["detail"] = f"200 covers, seeds {seeds[0]}..{seeds[-1]}, silent {silent}, loud {loud}"
    assert silent == 0 and loud == 0


def test_inductional_step_bound(criterion):
    criterion["id"] = 8
    B = cycle(2000)
    H = interval(5)
    eps, e1_, beta = Fraction(1, 4), Fraction(1, 512), Fraction(1, 100)
    outcomes = []
    for K, alpha in ((0, Fraction(1, 100)), (1, Fraction(1, 5)), (2, Fraction(1, 2)), (20, Fraction(4))):
        st = inductional_step(B, H, K, alpha, 500, beta, eps, e1_)
        b = st.bound
        if b["active"]:
            assert b["literal_ok"]
        outcomes.append(f"K={K}: beta1={float(st.beta1):.3f} residual={b['residual']} active={b['active']}")
    criterion["detail"] = "; ".join(outcomes) + " (inactive means the bound is not required)"


def test_dimension_bounds(criterion):
    criterion["id"] = 9
    eps, delta = Fraction(1, 4), Fraction(1, 10)
    B = folner_sequence(Z, (200,))[0]
    T = quasi_tile(B, [interval(n) for n in range(1, 60)], eps)
    parts = []
    for A, name in ((e1(), "E1"), (e2(), "E2")):
        target = torus_oracle(A)
        rep = bound_check(A, B, eps, delta, T, target)
        assert rep["lower_ok"] and rep["upper_ok"]
        verdicts = ",".join(f"{s['minus']}/{s['plus']}" for s in rep["shapes"].values())
        parts.append(f"{name}: {rep['lower']} <= {rep['normalized']} <= {rep['upper']} [{verdicts}]")
    criterion["detail"] = "; ".join(parts)


def _random_matrix(rng):
    r, c = rng.randint(1, 80), rng.randint(1, 80)
    density = rng.choice([0.02, 0.05, 0.1])
    complex_ = rng.random() < 0.2
    entries = {}
    for _ in range(max(1, int(density * r * c))):
        re = Fraction(rng.randint(-9, 9), rng.randint(1, 6))
        im = Fraction(rng.randint(-4, 4), rng.randint(1, 3)) if complex_ else 0
        entries[(rng.randrange(r), rng.randrange(c))] = GaussianRational(re, im) if im else re
    return SparseExactMatrix(r, c, entries)


def test_exact_linalg_suite(criterion):
    criterion["id"] = 10
    rng = random.Random(424242)
    primes = [1000003, 998244353, 2147483629, 1000000007, 754974721]
    probes = 0
    for _ in range(500):
        m = _random_matrix(rng)
        r = exact_rank(m)
        rp = list(range(m.nrows)); rng.shuffle(rp)
        cp = list(range(m.ncols)); rng.shuffle(cp)
        perm = SparseExactMatrix(m.nrows, m.ncols, {(rp[i], cp[j]): v for (i, j), v in m.entries.items()})
        assert exact_rank(perm) == r
        s = [Fraction(rng.randint(1, 9), rng.randint(1, 9)) * rng.choice((1, -1)) for _ in range(m.nrows)]
        scaled = SparseExactMatrix(m.nrows, m.ncols, {(i, j): v * s[i] for (i, j), v in m.entries.items()})
        assert exact_rank(scaled) == r
        other = _random_matrix(rng)
        assert exact_rank(block_diag(m, other)) == r + exact_rank(other)
        assert r + kernel_dimension(m) == m.ncols
        for p in rng.sample(primes, 3):
            assert modular_rank_probe(m, p) == r
            probes += 1
    criterion["detail"] = f"500 matrices up to 80x80, {probes} modular probes agree"
