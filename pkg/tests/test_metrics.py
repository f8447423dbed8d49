import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st
from scipy.stats import norm

from curvtest.errors import ConformanceError
from curvtest.metrics import (
    Euclidean,
    FisherRao,
    GaussianBW,
    Hyperbolic2,
    ObjectSample,
    Spd,
    SpdMetric,
    Sphere,
    Wasserstein1D,
    check_distance_matrix,
    distance,
    distance_matrix,
    distances_to,
    parse_space,
    probability_grid,
    space_label,
)

from conftest import random_density, random_hyperboloid, random_spd, random_unit

SPD_METRICS = list(SpdMetric)


def draw(space, rng, count):
    """Random conformant objects for any space."""
    if isinstance(space, Euclidean):
        return rng.standard_normal((count, space.dim))
    if isinstance(space, Sphere):
        return random_unit(rng, space.dim + 1, count)
    if isinstance(space, Hyperbolic2):
        return random_hyperboloid(rng, count)
    if isinstance(space, (Spd, GaussianBW)):
        return random_spd(rng, space.dim, count)
    if isinstance(space, Wasserstein1D):
        return np.sort(rng.standard_normal((count, space.grid_size)), axis=1)
    if isinstance(space, FisherRao):
        return random_density(rng, space.grid_size, count)
    raise TypeError(space)


ALL_SPACES = [
    Euclidean(3),
    Sphere(2),
    Sphere(5),
    Hyperbolic2(),
    *[Spd(3, m) for m in SPD_METRICS],
    Spd(2, SpdMetric.POWER_FROBENIUS, 0.25),
    Wasserstein1D(51),
    GaussianBW(2),
    FisherRao(64),
]


class TestExamples:
    def test_sphere_orthogonal(self):
        assert distance(Sphere(2), [1, 0, 0], [0, 1, 0]) == pytest.approx(math.pi / 2, abs=1e-15)

    def test_bures_wasserstein_diagonal(self):
        d = distance(Spd(2, SpdMetric.BURES_WASSERSTEIN), np.eye(2), np.diag([4.0, 1.0]))
        assert d == pytest.approx(1.0, abs=1e-12)

    def test_affine_invariant_diagonal(self):
        d = distance(Spd(2, SpdMetric.AFFINE_INVARIANT), np.eye(2), np.diag([math.e ** 2, 1.0]))
        assert d == pytest.approx(2.0, abs=1e-12)

    def test_wasserstein_location_shift(self):
        p = probability_grid(1001)
        d = distance(Wasserstein1D(1001), norm.ppf(p), norm.ppf(p) + 2.0)
        assert abs(d - 2.0) < 1e-3

    def test_wasserstein_scale_change(self):
        # W2 between N(0, 1) and N(0, 4) is |1 - 2| = 1; the grid truncates tails slightly
        p = probability_grid(2001)
        d = distance(Wasserstein1D(2001), norm.ppf(p), 2.0 * norm.ppf(p))
        assert abs(d - 1.0) < 1e-3

    def test_hyperbolic_against_arccosh(self, rng):
        a, b = random_hyperboloid(rng, 2, spread=0.7)
        ref = math.acosh(a[2] * b[2] - a[0] * b[0] - a[1] * b[1])
        assert distance(Hyperbolic2(), a, b) == pytest.approx(ref, rel=1e-10)

    @pytest.mark.parametrize("space", ALL_SPACES, ids=space_label)
    def test_identity(self, space, rng):
        x = draw(space, rng, 1)[0]
        assert abs(distance(space, x, x)) <= 1e-12


class TestOracles:
    def test_bures_wasserstein_trace_formula(self, rng):
        for dim in (2, 3, 5):
            u, v = random_spd(rng, dim, 2)
            ru = scipy.linalg.sqrtm(u).real
            inner = scipy.linalg.sqrtm(ru @ v @ ru).real
            ref = math.sqrt(max(np.trace(u) + np.trace(v) - 2 * np.trace(inner), 0.0))
            assert distance(GaussianBW(dim), u, v) == pytest.approx(ref, abs=1e-10)

    def test_affine_invariant_generalized_eigen(self, rng):
        u, v = random_spd(rng, 4, 2)
        lam = scipy.linalg.eigh(v, u, eigvals_only=True)
        ref = math.sqrt(np.sum(np.log(lam) ** 2))
        assert distance(Spd(4, SpdMetric.AFFINE_INVARIANT), u, v) == pytest.approx(ref, rel=1e-10)

    def test_log_euclidean_scipy(self, rng):
        u, v = random_spd(rng, 3, 2)
        ref = np.linalg.norm(scipy.linalg.logm(u).real - scipy.linalg.logm(v).real)
        assert distance(Spd(3, SpdMetric.LOG_EUCLIDEAN), u, v) == pytest.approx(ref, rel=1e-9)

    def test_cholesky_factor(self, rng):
        u, v = random_spd(rng, 3, 2)
        ref = np.linalg.norm(np.linalg.cholesky(u) - np.linalg.cholesky(v))
        assert distance(Spd(3, SpdMetric.CHOLESKY), u, v) == pytest.approx(ref, rel=1e-12)

    def test_power_frobenius(self, rng):
        u, v = random_spd(rng, 3, 2)
        a = 0.5
        ref = np.linalg.norm(scipy.linalg.sqrtm(u).real - scipy.linalg.sqrtm(v).real) / a
        assert distance(Spd(3, SpdMetric.POWER_FROBENIUS, a), u, v) == pytest.approx(ref, rel=1e-9)

    def test_sphere_arccos(self, rng):
        x, y = random_unit(rng, 4, 2)
        assert distance(Sphere(3), x, y) == pytest.approx(math.acos(x @ y), abs=1e-12)

    def test_fisher_rao_bhattacharyya(self, rng):
        m = 200
        f, g = random_density(rng, m, 2)
        w = np.full(m, 1.0 / (m - 1))
        w[0] = w[-1] = 0.5 / (m - 1)
        bc = np.sum(w * np.sqrt(f * g))
        assert distance(FisherRao(m), f, g) == pytest.approx(math.acos(min(bc, 1.0)), abs=1e-9)


class TestInvariants:
    @pytest.mark.parametrize("space", ALL_SPACES, ids=space_label)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_exact_symmetry(self, space, seed):
        x, y = draw(space, np.random.default_rng(seed), 2)
        assert distance(space, x, y) == distance(space, y, x)

    @pytest.mark.parametrize("space", ALL_SPACES, ids=space_label)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_triangle_inequality(self, space, seed):
        x, y, z = draw(space, np.random.default_rng(seed), 3)
        assert distance(space, x, z) <= distance(space, x, y) + distance(space, y, z) + 1e-9

    @pytest.mark.parametrize("space", ALL_SPACES, ids=space_label)
    def test_nonnegative(self, space, rng):
        d = distance_matrix(ObjectSample(space, draw(space, rng, 8)))
        assert np.all(d >= 0)

    def test_gaussian_bw_matches_spd_bw(self, rng):
        objs = random_spd(rng, 3, 6)
        a = distance_matrix(ObjectSample(GaussianBW(3), objs))
        b = distance_matrix(ObjectSample(Spd(3, SpdMetric.BURES_WASSERSTEIN), objs))
        assert np.array_equal(a, b)

    def test_power_one_is_frobenius(self, rng):
        objs = random_spd(rng, 3, 6)
        a = distance_matrix(ObjectSample(Spd(3, SpdMetric.POWER_FROBENIUS, 1.0), objs))
        b = distance_matrix(ObjectSample(Spd(3, SpdMetric.FROBENIUS), objs))
        assert np.max(np.abs(a - b)) < 1e-10

    def test_fisher_rao_self_and_disjoint(self):
        m = 101
        f = np.zeros(m)
        g = np.zeros(m)
        f[:50] = 1.0
        g[51:] = 1.0
        space = FisherRao(m)
        w = np.full(m, 1.0 / (m - 1))
        w[0] = w[-1] = 0.5 / (m - 1)
        f /= f @ w
        g /= g @ w
        assert distance(space, f, f) == pytest.approx(0.0, abs=1e-12)
        assert abs(distance(space, f, g) - math.pi / 2) < 1e-6

    def test_spd_rotation_invariance(self, rng):
        u, v = random_spd(rng, 3, 2)
        q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        for m in SPD_METRICS:
            if m is SpdMetric.CHOLESKY:
                continue  # the Cholesky distance is not invariant under rotations
            space = Spd(3, m)
            assert distance(space, q @ u @ q.T, q @ v @ q.T) == pytest.approx(
                distance(space, u, v), rel=1e-8)


class TestDistanceMatrix:
    def test_three_points(self):
        d = distance_matrix(ObjectSample(Euclidean(1), [[0.0], [1.0], [2.0]]))
        assert np.array_equal(d, [[0, 1, 2], [1, 0, 1], [2, 1, 0]])

    def test_two_points(self, rng):
        d = distance_matrix(ObjectSample(GaussianBW(2), random_spd(rng, 2, 2)))
        assert d.shape == (2, 2) and d[0, 1] == d[1, 0] and d[0, 0] == 0

    def test_sphere_against_pairwise(self, rng):
        x = random_unit(rng, 3, 10)
        d = distance_matrix(ObjectSample(Sphere(2), x))
        ref = np.array([[distance(Sphere(2), a, b) for b in x] for a in x])
        assert np.max(np.abs(d - ref)) <= 1e-12
        off = ~np.eye(10, dtype=bool)
        assert np.max(np.abs(d - np.arccos(np.clip(x @ x.T, -1, 1)))[off]) < 1e-10

    def test_chunking_does_not_change_values(self, rng):
        sample = ObjectSample(Spd(3, SpdMetric.AFFINE_INVARIANT), random_spd(rng, 3, 30))
        assert np.array_equal(distance_matrix(sample), distance_matrix(sample, max_pairs=7))

    def test_distances_to(self, rng):
        sample = ObjectSample(Hyperbolic2(), random_hyperboloid(rng, 12))
        d = distance_matrix(sample)
        assert np.array_equal(distances_to(sample.space, sample.objects[3], sample.objects), d[3])

    def test_check_distance_matrix(self):
        with pytest.raises(ConformanceError):
            check_distance_matrix([[0, 1], [2, 0]])
        with pytest.raises(ConformanceError):
            check_distance_matrix([[1, 1], [1, 0]])
        with pytest.raises(ConformanceError):
            check_distance_matrix([[0, -1], [-1, 0]])
        with pytest.raises(ConformanceError):
            check_distance_matrix(np.zeros((2, 3)))


class TestConformance:
    def test_sphere_norm(self):
        with pytest.raises(ConformanceError, match="object 1"):
            ObjectSample(Sphere(2), [[1, 0, 0], [1.001, 0, 0]])
        ObjectSample(Sphere(2), [[1, 0, 0], [1 + 5e-10, 0, 0]])

    def test_spd_checks(self):
        with pytest.raises(ConformanceError, match="symmetric"):
            ObjectSample(Spd(2), [np.eye(2), [[1, 0.5], [0, 1]]])
        with pytest.raises(ConformanceError, match="positive definite"):
            ObjectSample(Spd(2), [np.eye(2), np.diag([1.0, -1.0])])
        with pytest.raises(ConformanceError, match="positive definite"):
            distance(Spd(2, SpdMetric.AFFINE_INVARIANT), np.eye(2), np.diag([1.0, 0.0]))

    def test_quantile_grid_monotone(self):
        with pytest.raises(ConformanceError, match="nondecreasing"):
            ObjectSample(Wasserstein1D(3), [[0, 1, 2], [0, 2, 1]])

    def test_density(self):
        with pytest.raises(ConformanceError, match="integrate"):
            ObjectSample(FisherRao(3), [[1, 1, 1], [2, 2, 2]])
        with pytest.raises(ConformanceError, match="negative"):
            ObjectSample(FisherRao(3), [[1, 1, 1], [-1, 2, 3]])

    def test_hyperboloid(self):
        with pytest.raises(ConformanceError, match="hyperboloid"):
            ObjectSample(Hyperbolic2(), [[0, 0, 1], [0, 0, -1]])

    def test_shapes(self):
        with pytest.raises(ConformanceError, match="shape"):
            ObjectSample(Euclidean(2), [[1, 2, 3], [4, 5, 6]])
        with pytest.raises(ConformanceError):
            distance(Euclidean(2), [1, 2], [1, 2, 3])

    def test_non_finite(self):
        with pytest.raises(ConformanceError, match="non-finite"):
            ObjectSample(Euclidean(1), [[0.0], [np.nan]])

    def test_minimum_size(self):
        with pytest.raises(ConformanceError, match="at least 2"):
            ObjectSample(Euclidean(1), [[0.0]])

    def test_immutable(self):
        s = ObjectSample(Euclidean(1), [[0.0], [1.0]])
        with pytest.raises(ValueError):
            s.objects[0, 0] = 5.0

    def test_space_parameters(self):
        with pytest.raises(ValueError):
            Euclidean(0)
        with pytest.raises(ValueError):
            Wasserstein1D(1)
        with pytest.raises(ValueError):
            Spd(2, SpdMetric.POWER_FROBENIUS, 0.0)


@pytest.mark.parametrize("space", ALL_SPACES, ids=space_label)
def test_label_round_trip(space):
    assert parse_space(space_label(space)) == space


def test_parse_aliases():
    assert parse_space("spd:3:bw") == Spd(3, SpdMetric.BURES_WASSERSTEIN)
    assert parse_space("spd:2:air") == Spd(2, SpdMetric.AFFINE_INVARIANT)
    with pytest.raises(ValueError):
        parse_space("torus:2")
