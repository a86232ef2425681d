import math

import numpy as np
import pytest

from emdkit import ground
from emdkit.gram import diagnose
from emdkit.ground import (
    SinkSpec,
    circle_geodesic,
    circle_geodesic_reference,
    discrete,
    distance_from_kernel,
    euclidean,
    kernel_from_distance,
    load_matrix_csv,
    precomputed,
    save_matrix_csv,
    squared_euclidean,
)


class TestEval:
    def test_euclidean(self):
        assert euclidean()((0.0, 0.0), (3.0, 4.0)) == 5.0

    def test_discrete(self):
        d = discrete()
        assert d((1.0, 2.0), (1.0, 2.0)) == 0.0
        assert d((1.0, 2.0), (1.0, 3.0)) == 1.0

    def test_circle_wraparound(self):
        d = circle_geodesic()
        assert abs(d((0.0,), (1.5 * math.pi,)) - 0.5 * math.pi) < 1e-15

    def test_circle_domain_checked(self):
        with pytest.raises(ValueError):
            circle_geodesic()((0.0,), (7.0,))

    def test_symmetry_sampled(self, rng):
        for dist in (euclidean(), squared_euclidean(), discrete(), euclidean(threshold=0.7)):
            for _ in range(20):
                x, y = rng.normal(size=2), rng.normal(size=2)
                assert dist(x, y) == pytest.approx(dist(y, x), abs=0)
                assert dist(x, x) == 0.0

    def test_threshold_clamps(self):
        d = euclidean(threshold=2.0)
        assert d((0.0,), (10.0,)) == 2.0
        assert d.bound == 2.0

    def test_threshold_monotone(self, rng):
        d1 = euclidean(threshold=0.5)
        d2 = euclidean(threshold=1.5)
        for _ in range(50):
            x, y = rng.normal(size=3), rng.normal(size=3)
            assert d1(x, y) <= d2(x, y) + 1e-15

    def test_bounds(self):
        assert math.isinf(euclidean().bound)
        assert discrete().bound == 1.0
        assert circle_geodesic().bound == math.pi
        assert discrete(threshold=3.0).bound == 1.0  # base bound is tighter

    def test_precomputed(self):
        m = np.array([[0.0, 1.0], [1.0, 0.0]])
        d = precomputed(m)
        assert d((0.0,), (1.0,)) == 1.0
        with pytest.raises(IndexError):
            d((0.0,), (5.0,))
        with pytest.raises(ValueError):
            precomputed(np.array([[0.0, 1.0], [2.0, 0.0]]))


class TestCircleReference:
    def test_fast_path_matches_reference(self, rng):
        d = circle_geodesic()
        for _ in range(500):
            x = float(rng.uniform(0, 2 * math.pi))
            y = float(rng.uniform(0, 2 * math.pi))
            assert abs(d((x,), (y,)) - circle_geodesic_reference(x, y)) <= 1e-12


class TestKernelFromDistance:
    def test_squared_euclidean_gives_dot_product(self, rng):
        k = kernel_from_distance(squared_euclidean(), (0.0,))
        for _ in range(20):
            x, y = float(rng.normal()), float(rng.normal())
            # expand (x - y)^2: d(x,0) + d(y,0) - d(x,y) = 2xy
            assert k((x,), (y,)) == pytest.approx(2 * x * y, rel=1e-12, abs=1e-12)

    def test_anchor_row_vanishes(self, rng):
        x0 = rng.normal(size=2)
        k = kernel_from_distance(euclidean(), x0)
        for _ in range(10):
            y = rng.normal(size=2)
            assert k(x0, y) == pytest.approx(0.0, abs=1e-12)

    def test_discrete_fresh_anchor_matches_definition(self):
        pts = [(0.0,), (1.0,), (2.0,), (3.0,)]
        p = (9.0,)
        d = discrete()
        k = kernel_from_distance(d, p)
        for x in pts:
            for y in pts:
                expected = d(x, p) + d(y, p) - d(x, y) - d(p, p)
                assert k(x, y) == expected
                assert expected == (2.0 if x == y else 1.0)

    def test_anchored_kernel_psd_for_cnd_input(self, rng):
        # squared Euclidean is classically CND; the anchored kernel Gram must be PSD
        pts = rng.normal(size=(6, 2))
        k = kernel_from_distance(squared_euclidean(), pts[0])
        gram = ground.pairwise_kernel(k, pts, pts)
        assert diagnose(gram, tol=1e-8).is_psd


class TestDistanceFromKernel:
    def test_dot_product_gives_squared_euclidean(self, rng):
        k = lambda x, y: float(np.dot(x, y))
        d = distance_from_kernel(k)
        for _ in range(20):
            x, y = rng.normal(size=3), rng.normal(size=3)
            assert d(x, y) == pytest.approx(float(np.sum((x - y) ** 2)), rel=1e-10)

    def test_discrete_kernel_gives_doubled_metric(self):
        k = lambda x, y: 1.0 if np.array_equal(x, y) else 0.0
        d = distance_from_kernel(k)
        assert d((0.0,), (0.0,)) == 0.0
        assert d((0.0,), (1.0,)) == 2.0

    def test_round_trip_doubles_zero_diagonal_distance(self, rng):
        base = squared_euclidean()
        k = kernel_from_distance(base, rng.normal(size=2))
        d2 = distance_from_kernel(k)
        for _ in range(20):
            x, y = rng.normal(size=2), rng.normal(size=2)
            assert d2(x, y) == pytest.approx(2.0 * base(x, y), rel=1e-9, abs=1e-12)


class TestDiscreteMetricCnd:
    def test_centered_gram_has_no_positive_eigenvalue(self, rng):
        for n in range(2, 9):
            pts = np.arange(n, dtype=float).reshape(-1, 1)
            g = discrete().pairwise(pts, pts)
            rep = diagnose(g, tol=1e-10)
            assert rep.centered_max_eig <= 1e-10 * max(rep.max_abs_eig, 1.0)


class TestSinkSpec:
    def test_flat_rate(self):
        s = SinkSpec.flat_rate(2.5)
        assert s.self_cost(euclidean()) == 0.0
        np.testing.assert_allclose(s.cost_to_sink(euclidean(), np.zeros((3, 2))), 2.5)

    def test_point_sink(self):
        s = SinkSpec.at_point((1.0, 0.0))
        d = euclidean()
        assert s.self_cost(d) == 0.0
        np.testing.assert_allclose(s.cost_to_sink(d, np.array([[0.0, 0.0]])), [1.0])

    def test_flat_rate_positive(self):
        with pytest.raises(ValueError):
            SinkSpec.flat_rate(0.0)


class TestMatrixCsv:
    def test_round_trip(self, tmp_path, rng):
        n = 4
        m = rng.normal(size=(n, n))
        m = 0.5 * (m + m.T)
        ids = [f"s{i}" for i in range(n)]
        path = tmp_path / "m.csv"
        save_matrix_csv(path, ids, m)
        ids2, m2 = load_matrix_csv(path)
        assert ids2 == ids
        np.testing.assert_allclose(m2, m, rtol=0, atol=0)

    def test_asymmetry_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        with open(path, "w") as fh:
            fh.write(",a,b\na,0.0,1.0\nb,2.0,0.0\n")
        with pytest.raises(ValueError):
            load_matrix_csv(path)

    def test_small_asymmetry_averaged(self, tmp_path):
        path = tmp_path / "ok.csv"
        with open(path, "w") as fh:
            fh.write(",a,b\na,0.0,1.0\nb,1.0000000001,0.0\n")
        _, m = load_matrix_csv(path, tol=1e-6)
        assert m[0, 1] == m[1, 0]
