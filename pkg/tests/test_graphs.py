import itertools

import pytest

from hypstrata.graphs import (
    StableGraph,
    aut_count,
    canonicalize,
    classify_edges,
    enumerate_stable_graphs,
    graph_record,
    is_in_G_tilde,
    make_graph,
    parse_graph_record,
)
from hypstrata.hyperelliptic import template_strata


@pytest.mark.parametrize(
    "g, n, count",
    [(0, 3, 1), (0, 4, 4), (0, 5, 26), (1, 1, 2), (1, 2, 5), (2, 0, 7)],
)
def test_graph_counts(g, n, count):
    # small cases are classical: M_{0,5} has 10 divisors and 15 points,
    # M_{1,1} has one boundary point, \bar M_2 has seven strata
    assert len(enumerate_stable_graphs(g, n)) == count


def test_compact_type_counts_genus_two():
    # trees of genus 2 with no legs: the smooth curve and the two elliptic tails
    assert len(enumerate_stable_graphs(2, 0, "ct")) == 2


def test_record_round_trip():
    for gr in enumerate_stable_graphs(2, 1):
        assert parse_graph_record(graph_record(gr)) == gr


def test_canonical_form_ignores_vertex_order():
    a = make_graph([1, 0], [(1, 1), (2, 1)], [(0, 1)])[0]
    b = make_graph([0, 1], [(1, 0), (2, 0)], [(0, 1)])[0]
    assert canonicalize(a)[0] == canonicalize(b)[0]


def test_automorphisms_of_loops_and_double_edges():
    loop = make_graph([1], [], [(0, 0)])[0]
    banana = make_graph([0, 0], [], [(0, 1), (0, 1), (0, 1)])[0]
    assert aut_count(loop) == 2
    assert aut_count(banana) == 12


def test_edge_classes():
    gr = make_graph([1, 1], [(1, 0)], [(0, 1)])[0]
    e1, e2, nd = classify_edges(gr)
    assert (e1, e2, nd) == ([0], [], [])


EXCLUDED = [
    ("g1(1) | 0-0", (1,)),
    ("g0(3) g0(1,2) | 0-1 0-1 0-1", (1, 2, 3)),
    ("g0(2) g1(1) | 0-1 0-1", (1, 2)),
    ("g1() g0(1,2) g0(3) | 0-1 0-2 1-2", (1, 2, 3)),
    ("g1(3) g0() g0(1,2) | 0-1 0-1 1-2", (1, 2, 3)),
    ("g1() g0() g0(4) g0(1,2,3) | 0-1 0-1 1-2 2-3", (1, 2, 3, 4)),
    ("g1() g0() g0(1,2) g0(3,4) | 0-1 0-1 1-2 1-3", (1, 2, 3, 4)),
]

INCLUDED = [
    ("g1() g0(1,2) | 0-1 0-1", (1, 2)),
    ("g1() g0(1,2) g0(3,4) | 0-1 0-2 1-2", (1, 2, 3, 4)),
    ("g0(1,2) g0() g0(3,4) | 0-1 0-1 1-2 1-2", (1, 2, 3, 4)),
    ("g1(1) g0(2) g0(3,4) | 0-1 0-1 1-2", (1, 2, 3, 4)),
]


@pytest.mark.parametrize("text, marks", EXCLUDED)
def test_enlarged_set_excludes(text, marks):
    (gr, _), = template_strata(text, marks)
    assert not is_in_G_tilde(gr)


@pytest.mark.parametrize("text, marks", INCLUDED)
def test_enlarged_set_includes(text, marks):
    (gr, _), = template_strata(text, marks)
    assert is_in_G_tilde(gr)


def test_enlarged_set_contains_compact_type():
    for gr in enumerate_stable_graphs(2, 3, "ct"):
        assert is_in_G_tilde(gr)


def test_tilde_two_points_outside_compact_type():
    outside = [gr for gr in enumerate_stable_graphs(2, 2, "tilde", max_edges=2) if gr.h1]
    # only the elliptic vertex joined twice to a rational vertex with both points
    assert len(outside) == 1
    assert sorted(outside[0].genera) == [0, 1]


def test_relabelling_preserves_membership():
    for gr in enumerate_stable_graphs(2, 3, "all", max_edges=3):
        for perm in itertools.permutations((1, 2, 3)):
            m = dict(zip((1, 2, 3), perm))
            other = StableGraph(gr.genera, tuple(sorted((m[a], v) for a, v in gr.legs)), gr.edges)
            assert is_in_G_tilde(other) == is_in_G_tilde(gr)
