import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emdkit.multiset import WeightedPointSet, intersect, normalize, sum_sets, total_mass, unite


def wps(pairs, **kw):
    return WeightedPointSet.from_pairs(pairs, **kw)


class TestConstruction:
    def test_zero_masses_dropped(self):
        s = wps([((0.0,), 1.0), ((1.0,), 0.0)])
        assert len(s) == 1
        assert s.total_mass == 1.0

    def test_duplicates_merged(self):
        s = wps([((1.0,), 2.0), ((1.0,), 3.0), ((0.0,), 1.0)])
        assert len(s) == 2
        assert s.total_mass == 6.0
        # support sorted lexicographically
        assert s.points[0, 0] == 0.0

    def test_negative_mass_rejected(self):
        with pytest.raises(ValueError):
            wps([((0.0,), -1.0)])

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            WeightedPointSet(np.array([[0.0, 1.0], [1.0, 2.0]]), np.array([1.0]))

    def test_empty(self):
        e = WeightedPointSet.empty(3)
        assert len(e) == 0
        assert e.dimension == 3
        assert total_mass(e) == 0.0

    def test_immutable(self):
        s = wps([((0.0,), 1.0)])
        with pytest.raises(ValueError):
            s.points[0, 0] = 5.0

    @given(st.lists(st.tuples(st.integers(-3, 3), st.floats(0.0, 10.0)), max_size=12))
    @settings(max_examples=100, deadline=None)
    def test_canonical_form_order_independent(self, pairs):
        fwd = wps([((float(p),), m) for p, m in pairs], dimension=1)
        rev = wps([((float(p),), m) for p, m in reversed(pairs)], dimension=1)
        assert fwd == rev


class TestAlgebra:
    def test_intersect_pointwise_min(self):
        a = wps([((0.0,), 2.0), ((1.0,), 1.0)])
        b = wps([((0.0,), 1.0), ((2.0,), 3.0)])
        i = intersect(a, b)
        assert i == wps([((0.0,), 1.0)])

    def test_intersect_idempotent(self):
        a = wps([((0.0,), 2.0), ((1.0,), 1.0)])
        assert intersect(a, a) == a

    def test_empty_absorbs(self):
        a = wps([((0.0,), 2.0)])
        assert intersect(a, a.empty_like()) == a.empty_like()

    def test_union_pointwise_max(self):
        a = wps([((0.0,), 2.0)])
        b = wps([((0.0,), 1.0), ((2.0,), 3.0)])
        u = unite(a, b)
        assert u == wps([((0.0,), 2.0), ((2.0,), 3.0)])

    def test_sum_sets(self):
        a = wps([((0.0,), 1.0)])
        b = wps([((0.0,), 2.0)])
        assert sum_sets(a, b) == wps([((0.0,), 3.0)])

    def test_dimension_mismatch(self):
        a = wps([((0.0,), 1.0)])
        b = WeightedPointSet(np.array([[0.0, 0.0]]), np.array([1.0]))
        with pytest.raises(ValueError):
            intersect(a, b)

    @given(st.lists(st.tuples(st.integers(-2, 2), st.floats(0.01, 5.0)), min_size=1, max_size=8),
           st.lists(st.tuples(st.integers(-2, 2), st.floats(0.01, 5.0)), min_size=1, max_size=8))
    @settings(max_examples=100, deadline=None)
    def test_inclusion_exclusion(self, pa, pb):
        a = wps([((float(p),), m) for p, m in pa], dimension=1)
        b = wps([((float(p),), m) for p, m in pb], dimension=1)
        lhs = total_mass(intersect(a, b)) + total_mass(unite(a, b))
        rhs = total_mass(a) + total_mass(b)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, rhs)

    @given(st.lists(st.tuples(st.integers(-2, 2), st.floats(0.01, 5.0)), min_size=1, max_size=8))
    @settings(max_examples=50, deadline=None)
    def test_measure_monotone_on_subsets(self, pa):
        b = wps([((float(p),), m) for p, m in pa], dimension=1)
        a = b._replace_masses(b.masses * 0.5)  # pointwise <= b
        assert total_mass(a) <= total_mass(b) + 1e-12


class TestNormalize:
    def test_basic(self):
        s = normalize(wps([((0.0,), 2.0), ((1.0,), 2.0)]))
        assert np.allclose(s.masses, [0.5, 0.5])
        assert abs(s.total_mass - 1.0) <= 1e-12

    def test_already_normalized_stable(self):
        s = normalize(wps([((0.0,), 0.25), ((1.0,), 0.75)]))
        t = normalize(s)
        assert np.allclose(s.masses, t.masses, rtol=0, atol=0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            normalize(WeightedPointSet.empty(1))
