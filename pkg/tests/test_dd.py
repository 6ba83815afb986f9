from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from ewfs import dd, polytope
from ewfs.dd import HRep, VRep


def test_unit_square():
    h = HRep.make([[1, 0], [-1, 0], [0, 1], [0, -1]], [1, 0, 1, 0])
    v = dd.h_to_v(h)
    assert sorted(v.vertices) == sorted(tuple(Fraction(c) for c in p) for p in product([0, 1], repeat=2))


def test_three_simplex():
    h = HRep.make([[-1, 0, 0], [0, -1, 0], [0, 0, -1], [1, 1, 1]], [0, 0, 0, 1])
    v = dd.h_to_v(h)
    assert len(v.vertices) == 4
    assert (Fraction(0),) * 3 in v.vertices


def test_equality_constrained_simplex():
    # probability simplex in R^3 through an equality
    h = HRep.make([[-1, 0, 0], [0, -1, 0], [0, 0, -1]], [0, 0, 0], E=[[1, 1, 1]], f=[1])
    v = dd.h_to_v(h)
    assert sorted(v.vertices) == sorted(tuple(Fraction(int(i == j)) for j in range(3)) for i in range(3))


def test_redundant_inequality_is_harmless():
    h = HRep.make([[1, 0], [-1, 0], [0, 1], [0, -1], [1, 1]], [1, 0, 1, 0, 5])
    assert len(dd.h_to_v(h).vertices) == 4


def test_rational_vertices_are_exact():
    h = HRep.make([[3, 1], [1, 3], [-1, 0], [0, -1]], [1, 1, 0, 0])
    verts = set(dd.h_to_v(h).vertices)
    assert (Fraction(1, 4), Fraction(1, 4)) in verts
    assert (Fraction(1, 3), Fraction(0)) in verts


def test_unbounded_raises():
    with pytest.raises(dd.UnboundedError):
        dd.h_to_v(HRep.make([[-1, 0], [0, -1]], [0, 0]))


def test_empty_polytope():
    h = HRep.make([[1], [-1]], [0, -1])
    assert dd.h_to_v(h).vertices == ()


def test_ns_2222_has_24_vertices():
    vs = polytope.ns_vertices(2, 2, 2, 2)
    assert len(vs) == 24
    det = [v for v in vs.vertices if np.all((v == 0) | (v == 1))]
    assert len(det) == 16
    nonlocal_ = [v for v in vs.vertices if not np.all((v == 0) | (v == 1))]
    assert all(set(np.unique(v)) == {0.0, 0.5} for v in nonlocal_)


def test_v_to_h_square_and_round_trip():
    v = VRep.make([[0, 0], [1, 0], [0, 1], [1, 1]])
    h = dd.v_to_h(v)
    assert len(h.A) == 4
    back = dd.h_to_v(h)
    assert sorted(back.vertices) == sorted(v.vertices)


def test_round_trip_incidence_sets_bell_2222():
    vs = polytope.bell_vertices(2, 2, 2, 2)
    v = VRep.make(vs.flat().astype(int).tolist())
    h = dd.v_to_h(v)
    back = dd.h_to_v(h)
    assert sorted(back.vertices) == sorted(v.vertices)
    inc = dd.incidence(h, v)
    # every facet of a 8-dim polytope touches at least 8 vertices; every vertex lies on >= 8 facets
    assert all(len(s) >= 8 for s in inc)
    for i in range(len(v.vertices)):
        assert sum(i in s for s in inc) >= 8
    # incidence is preserved when the vertex list comes back from H
    assert dd.incidence(h, back) == dd.incidence(h, VRep(tuple(sorted(v.vertices))))


def test_affine_hull_equalities():
    v = VRep.make([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    h = dd.v_to_h(v)
    assert len(h.E) == 1
    for p in v.vertices:
        assert all(sum(a * x for a, x in zip(row, p)) == f for row, f in zip(h.E, h.f))
    assert len(h.A) == 3


def test_contains():
    h = HRep.make([[1, 0], [-1, 0], [0, 1], [0, -1]], [1, 0, 1, 0])
    assert dd.contains(h, [0.5, 0.5])
    assert not dd.contains(h, [1.5, 0.5])


def test_size_guard():
    n = dd.MAX_DIM + 2
    A = [[int(i == j) for j in range(n)] for i in range(n)] + [[-int(i == j) for j in range(n)] for i in range(n)]
    with pytest.raises(dd.SizeGuardError):
        dd.h_to_v(HRep.make(A, [1] * (2 * n)))


def test_solve_affine_inconsistent():
    assert dd.solve_affine([[Fraction(1)], [Fraction(1)]], [Fraction(0), Fraction(1)], 1) is None
