import dataclasses
import math

import numpy as np
import pytest
from scipy import integrate

from curvtest.metrics import Euclidean, GaussianBW, Spd, SpdMetric, distance_matrix
from curvtest.simgen import (
    Hemisphere,
    Hyperboloid,
    Plane,
    RandomSpd,
    RotatedGaussians,
    SparseSphere,
    SphereCap,
    generate,
    monte_carlo_power,
)
from curvtest.statsutil import derive_seed

ALL_SPECS = [
    Hemisphere(50, 0.1),
    Hemisphere(50, 0.2, noise="truncated"),
    Hyperboloid(50, 0.1),
    Plane(50, 0.1),
    SphereCap(50, 0.5),
    SphereCap(50, 0.0),
    RandomSpd(50),
    RotatedGaussians(50),
    SparseSphere(50, 10, 0.1),
    SparseSphere(50, 10, snr=True),
]


class TestDesigns:
    def test_plane(self):
        x = generate(Plane(500, 0.0, seed=3)).objects
        assert np.all(x[:, 2] == 0.0)
        assert np.all((x[:, :2] >= 0) & (x[:, :2] <= 1))

    def test_hemisphere_on_sphere(self):
        x = generate(Hemisphere(500, 0.0, seed=3)).objects
        assert np.max(np.abs(np.linalg.norm(x, axis=1) - 1)) <= 1e-12
        assert np.all(x[:, 2] >= 0)

    def test_hemisphere_height(self):
        # the polar angle is uniform on [0, pi/2], so E[z] = 2/pi
        z = generate(Hemisphere(20000, 0.0, seed=9)).objects[:, 2]
        expected = integrate.quad(math.cos, 0, math.pi / 2)[0] / (math.pi / 2)
        assert abs(z.mean() - expected) <= 3 * z.std() / math.sqrt(z.size)

    def test_hyperboloid_surface(self):
        x = generate(Hyperboloid(500, 0.0, seed=3)).objects
        assert np.allclose(x[:, 1] ** 2 + x[:, 2] ** 2 - x[:, 0] ** 2, 1.0, atol=1e-10)
        assert np.all(np.abs(x[:, 0]) <= math.sqrt(15))
        assert np.all(x[:, 2] >= 0)

    @pytest.mark.parametrize("make", [
        lambda s, sig, kind: Hemisphere(300, sig, noise=kind, seed=s),
        lambda s, sig, kind: Plane(300, sig, noise=kind, seed=s),
        lambda s, sig, kind: Hyperboloid(300, sig, noise=kind, seed=s),
    ])
    @pytest.mark.parametrize("kind", ["gaussian", "truncated"])
    def test_noise_is_additive(self, make, kind):
        clean = generate(make(4, 0.0, kind)).objects
        noisy = generate(make(4, 0.5, kind)).objects
        delta = noisy - clean
        assert delta.std() > 0.2
        if kind == "truncated":
            assert np.all(np.abs(delta) <= 1.5)

    def test_truncated_noise_scale(self):
        clean = generate(Hemisphere(4000, 0.0, noise="truncated", seed=2)).objects
        noisy = generate(Hemisphere(4000, 1 / 32, noise="truncated", seed=2)).objects
        assert (noisy - clean).std() == pytest.approx(1 / 32, rel=0.05)

    @pytest.mark.parametrize("kappa", [0.25, 0.5, 1.0])
    def test_cap(self, kappa):
        x = generate(SphereCap(800, kappa, seed=1)).objects
        r = 1 / math.sqrt(kappa)
        assert np.allclose(np.linalg.norm(x, axis=1), r, rtol=1e-12)
        assert np.all(x[:, 2] >= math.cos(math.pi * math.sqrt(kappa) / 4) * r - 1e-12)
        assert np.all(x[:, 2] <= r + 1e-12)
        polar = np.arccos(np.clip(x[:, 2] / r, -1, 1))
        # geodesic diameter of the cap is at most pi / 2
        assert 2 * polar.max() * r <= math.pi / 2 + 1e-9

    def test_cap_area_uniform(self):
        x = generate(SphereCap(20000, 1.0, seed=5)).objects
        top = 1 - math.cos(math.pi / 4)
        u = (1 - x[:, 2]) / top
        assert abs(u.mean() - 0.5) <= 3 * math.sqrt(1 / 12 / u.size)

    def test_flat_cap(self):
        x = generate(SphereCap(500, 0.0, seed=1)).objects
        side = math.pi / (2 * math.sqrt(2))
        assert np.all(x[:, 2] == 0) and np.all((x[:, :2] >= 0) & (x[:, :2] <= side))

    def test_random_spd(self):
        s = generate(RandomSpd(200, p=3, seed=2))
        assert s.space == Spd(3)
        assert np.all(np.linalg.eigvalsh(s.objects) > 0)
        lam = s.meta["eigen_draws"]
        assert lam.shape == (200, 3) and np.all((lam > 0) & (lam < 100))

    def test_random_spd_metric(self):
        s = generate(RandomSpd(20, metric="air", seed=2))
        assert s.space.metric is SpdMetric.AFFINE_INVARIANT

    def test_rotated_gaussians(self):
        s = generate(RotatedGaussians(200, seed=1))
        assert s.space == GaussianBW(2)
        w = np.linalg.eigvalsh(s.objects)
        assert np.allclose(w, [1.0, 4.0], atol=1e-12)
        theta = s.meta["theta"]
        assert np.all((theta > 0) & (theta < 1))

    def test_sparse_sphere(self):
        s = generate(SparseSphere(100, 8, 0.0, seed=1))
        assert s.space == Euclidean(8)
        assert np.all(s.objects[:, 3:] == 0)
        assert SparseSphere(10, 25, snr=True).noise_level == pytest.approx(3 / (10 * 5))
        assert SparseSphere(10, 25, 0.2).noise_level == 0.2

    def test_sparse_sphere_shares_signal(self):
        a = generate(SparseSphere(50, 6, 0.0, seed=4)).objects
        b = generate(Hemisphere(50, 0.0, seed=4)).objects
        assert np.array_equal(a[:, :3], b)


class TestDeterminism:
    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: type(s).__name__)
    def test_same_seed_same_bytes(self, spec):
        a = generate(dataclasses.replace(spec, seed=77)).objects
        b = generate(dataclasses.replace(spec, seed=77)).objects
        assert a.tobytes() == b.tobytes()

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: type(s).__name__)
    def test_seed_matters(self, spec):
        a = generate(dataclasses.replace(spec, seed=1)).objects
        b = generate(dataclasses.replace(spec, seed=2)).objects
        assert not np.array_equal(a, b)

    def test_derive_seed(self):
        seeds = [derive_seed(5, r) for r in range(100)]
        assert len(set(seeds)) == 100
        assert seeds == [derive_seed(5, r) for r in range(100)]
        assert derive_seed(6, 0) != derive_seed(5, 0)


class TestValidation:
    @pytest.mark.parametrize("make", [
        lambda: Hemisphere(1),
        lambda: Hemisphere(10, -0.1),
        lambda: Hemisphere(10, 0.1, noise="laplace"),
        lambda: Hyperboloid(10, trunc=0.0),
        lambda: SphereCap(10, 1.5),
        lambda: SphereCap(10, -0.1),
        lambda: RandomSpd(10, p=0),
        lambda: RandomSpd(10, nu=0.0),
        lambda: RotatedGaussians(10, lam1=-1.0),
        lambda: SparseSphere(10, 2),
    ])
    def test_rejects(self, make):
        with pytest.raises(ValueError):
            make()

    def test_unknown_spec(self):
        with pytest.raises(TypeError):
            generate(object())


class TestPower:
    def test_table_shape_and_bounds(self):
        cells = monte_carlo_power([SphereCap(150, 1.0), SphereCap(150, 0.0)], runs=8, seed=3)
        assert len(cells) == 2
        for cell in cells:
            assert cell.runs == 8 and 0 <= cell.rejections <= cell.valid
            assert 0.0 <= cell.rate <= 1.0 and cell.se >= 0
        assert cells[0].rate >= cells[1].rate

    def test_deterministic(self):
        a = monte_carlo_power([SphereCap(100, 0.5)], runs=5, seed=1)
        b = monte_carlo_power([SphereCap(100, 0.5)], runs=5, seed=1)
        assert a == b

    def test_ambient_degenerate_counted(self):
        with pytest.warns(RuntimeWarning):
            (cell,) = monte_carlo_power([Plane(50, 0.1)], runs=4, mode="ambient")
        assert cell.degenerate == 4 and cell.valid == 0 and math.isnan(cell.rate)

    def test_ambient_mode_on_spd(self):
        (cell,) = monte_carlo_power([RandomSpd(40, metric="bw")], runs=4, mode="ambient")
        assert cell.degenerate == 0

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            monte_carlo_power([Plane(20)], runs=0)
        with pytest.raises(ValueError):
            monte_carlo_power([Plane(20)], runs=1, mode="extrinsic")
