from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from folnerdim.errors import EmptySetError
from folnerdim.graphs import (
    ColoredGraph,
    boundary,
    cayley_subgraph,
    convergence_profile,
    defect_distance,
    iso_ratio,
    k_interior,
    k_neighborhood,
    k_similar_vertices,
    similar_count,
)
from folnerdim.groups import GroupContext, ball_elements

from conftest import H3, Z, Z2, cycle, interval


def square(n):
    return [(i, j) for i in range(-n, n + 1) for j in range(-n, n + 1)]


def test_path_graph():
    g = cayley_subgraph(Z, [(0,), (1,), (2,)])
    assert g.n == 3 and g.num_adjacencies() == 2
    assert sorted(g.edges()) == [(0, 1, 0), (1, 0, 1), (1, 2, 0), (2, 1, 1)]


def test_cycle_degrees():
    g = cycle(5)
    assert g.n == 5 and set(g.degrees().tolist()) == {2}


def test_box_counts():
    g = cayley_subgraph(Z2, square(2))
    assert g.n == 25 and g.num_adjacencies() == 40


def test_duplicate_outgoing_color_rejected():
    with pytest.raises(ValueError):
        ColoredGraph.from_edges(Z, 3, [(0, 1, 0), (0, 2, 0)])


def test_inverse_pairing_enforced():
    nbr = np.array([[1, -1], [-1, -1]])
    with pytest.raises(ValueError):
        ColoredGraph(Z, nbr, np.arange(2))


def test_text_round_trip():
    g = cayley_subgraph(H3, ball_elements(H3, 2)).induced([0, 3, 4, 5, 7, 9])
    h = ColoredGraph.from_text(g.to_text())
    assert h.to_text() == g.to_text()
    assert list(h.ids) == list(g.ids) and h.labels == g.labels


def test_interval_combinatorics():
    n = 6
    F = interval(n)
    assert boundary(Z, F) == {(-n,), (n,)}
    assert iso_ratio(Z, F) == Fraction(2, 2 * n + 1)
    assert k_interior(Z, F, 1) == set(interval(n - 1))
    assert k_neighborhood(Z, F, 1) == set(interval(n + 1))


def test_box_interior():
    n = 5
    assert len(k_interior(Z2, square(n), 1)) == (2 * n - 1) ** 2


def test_empty_set_ratio():
    with pytest.raises(EmptySetError):
        iso_ratio(Z, [])


def test_cycle_similarity():
    assert similar_count(cycle(5), 2) == 0
    for m in (6, 7, 12):
        assert similar_count(cycle(m), 2) == m
    assert similar_count(cycle(12), 5) == 12
    assert similar_count(cycle(11), 5) == 0


def test_box_similarity_is_interior():
    F = square(6)
    g = cayley_subgraph(Z2, F)
    for k in range(4):
        Q = {g.labels[p] for p in (g.position[i] for i in k_similar_vertices(g, k))}
        assert Q == set(k_interior(Z2, F, k))


def test_isomorphism_maps_ball_by_translation():
    F = square(4)
    g = cayley_subgraph(Z2, F)
    iso = k_similar_vertices(g, 2)
    x = g.labels.index((1, -1))
    phi = iso[int(g.ids[x])]
    for gam in ball_elements(Z2, 2):
        assert g.labels[g.position[phi(gam)]] == (gam[0] + 1, gam[1] - 1)


def test_torus_and_heisenberg_quotient_similarity():
    q = GroupContext.abelian_quotient((10, 10))
    g = cayley_subgraph(q, q.elements())
    assert [similar_count(g, k) for k in (3, 4, 5)] == [100, 100, 0]
    h = GroupContext.heisenberg_quotient(8)
    g = cayley_subgraph(h, h.elements())
    assert similar_count(g, 3) == 512 and similar_count(g, 4) == 0


def test_convergence_profiles():
    boxes = [cayley_subgraph(Z2, square(n)) for n in (3, 6, 12)]
    assert convergence_profile(boxes, 1) == [Fraction((2 * n - 1) ** 2, (2 * n + 1) ** 2) for n in (3, 6, 12)]
    assert convergence_profile([cycle(m) for m in (8, 16)], 3) == [1, 1]
    single = ColoredGraph(Z, np.full((1, 2), -1), np.arange(1))
    assert convergence_profile([single], 1) == [0]


def test_defect_distance_on_interval():
    g = cayley_subgraph(Z, interval(4))
    assert defect_distance(g).tolist() == [0, 1, 2, 3, 4, 3, 2, 1, 0]


def _translation_oracle(ctx, F, k):
    ball = ball_elements(ctx, k)
    return {x for x in F if all(ctx.mul(b, x) in F for b in ball)}


@settings(max_examples=40, deadline=None)
@given(st.sets(st.tuples(st.integers(-4, 4), st.integers(-4, 4)), min_size=1, max_size=60), st.integers(0, 3))
def test_similarity_of_induced_subgraphs_z2(F, k):
    g = cayley_subgraph(Z2, F)
    Q = {g.labels[g.position[i]] for i in k_similar_vertices(g, k)}
    assert Q == _translation_oracle(Z2, F, k)


heis_pts = st.tuples(st.integers(-2, 2), st.integers(-2, 2), st.integers(-3, 3))


@settings(max_examples=30, deadline=None)
@given(st.sets(heis_pts, min_size=1, max_size=120), st.integers(0, 2))
def test_similarity_of_induced_subgraphs_heisenberg(F, k):
    F = set(F) | set(ball_elements(H3, 1))
    g = cayley_subgraph(H3, F)
    Q = {g.labels[g.position[i]] for i in k_similar_vertices(g, k)}
    assert Q == _translation_oracle(H3, F, k)


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 40), st.integers(0, 8))
def test_cycle_similarity_threshold(m, k):
    assert similar_count(cycle(m), k) == (m if m >= 2 * k + 2 else 0)
