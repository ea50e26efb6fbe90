"""Fiber quadrature: volume density, symbol, weight, Binet-Legendre, conformal."""

import numpy as np
import pytest
from scipy.integrate import quad as scipy_quad

from fspec import (ConformalMetric, FiberQuadrature, IllPosedMetricError,
                   RandersMetric, RiemannianMetric, SymbolField, TorusGrid,
                   binet_legendre, bilipschitz_ratio, conformal_transform,
                   energy_from_symbol, quasireversibility,
                   randers_angular_closed_forms, randers_angular_integrals,
                   randers_axis_symbol, randers_energy_direct,
                   resolve_fiber_nodes, symbol_matrix, volume_density, weight)
from conftest import random_metric, random_point, random_randers

QUAD = FiberQuadrature.trapezoid(256)


class TestQuadratureRule:
    def test_weights_sum_to_2pi(self):
        for n in (16, 256, 1000):
            q = FiberQuadrature.trapezoid(n)
            assert abs(float(q.weights.sum()) - 2 * np.pi) < 1e-12

    def test_too_few_nodes(self):
        with pytest.raises(ValueError):
            FiberQuadrature.trapezoid(8)


class TestVolumeDensity:
    def test_euclidean_is_one(self):
        mu = float(volume_density(RiemannianMetric.euclidean(), 0.3, 0.7, QUAD))
        np.testing.assert_allclose(mu, 1.0, rtol=1e-12)

    def test_riemannian_sqrt_det(self):
        h, r = 2.0, 0.5
        g = RiemannianMetric.stretched(h, r)
        mu = float(volume_density(g, 0.1, 0.9, QUAD))

        # independent oracle: (1/2pi) Int dphi / (cos^2/h^2 + sin^2/r^2)
        oracle, _ = scipy_quad(
            lambda t: 1.0 / (np.cos(t) ** 2 / h**2 + np.sin(t) ** 2 / r**2),
            0.0, 2 * np.pi)
        oracle /= 2 * np.pi
        np.testing.assert_allclose(mu, oracle, rtol=1e-10)
        np.testing.assert_allclose(mu, h * r, rtol=1e-10)

    def test_randers_volume_identity(self):
        # the drift does not change the volume density, constant or not
        grid_t = np.linspace(0.0, 1.0, 9)[:-1]
        for profile in (1.0, "0.5 + 0.4*sin(2*pi*y)"):
            spec = RandersMetric.axis_drift_torus(2.0, 0.9, profile=profile)
            mu_r = volume_density(spec, grid_t[:, None], grid_t[None, :], QUAD)
            mu_0 = volume_density(spec.base, grid_t[:, None], grid_t[None, :], QUAD)
            assert float(np.abs(mu_r - mu_0).max()) < 1e-8


class TestSymbol:
    def test_euclidean_identity(self):
        sig = symbol_matrix(RiemannianMetric.euclidean(), 0.2, 0.4, QUAD)
        np.testing.assert_allclose(sig, np.eye(2), atol=1e-12)

    def test_riemannian_inverse(self, rng):
        for _ in range(10):
            spec = random_metric(rng, allow_conformal=False)
            while spec.variant != "riemannian":
                spec = random_metric(rng, allow_conformal=False)
            x, y = random_point(rng)
            gi = spec.inverse_matrix(x, y)
            sig = symbol_matrix(spec, x, y, QUAD)
            assert float(np.abs(sig - gi).max() / np.abs(gi).max()) < 1e-8

    def test_randers_axis_closed_form(self):
        h, eta = 2.0, 0.6
        spec = RandersMetric.axis_drift_torus(h, eta)
        A, B = randers_axis_symbol(h, 1.0 / h, eta)
        sig = symbol_matrix(spec, 0.3, 0.3, QUAD)
        np.testing.assert_allclose(sig, np.diag([A, B]), atol=1e-10 * max(A, B))

    def test_spd_property(self, rng):
        for _ in range(100):
            spec = random_metric(rng)
            x, y = random_point(rng)
            sig = symbol_matrix(spec, x, y, QUAD)
            assert sig[0, 0] > 0
            assert np.linalg.det(sig) > 0
            np.testing.assert_allclose(sig[0, 1], sig[1, 0], rtol=1e-12)

    def test_fiber_normalization(self, rng):
        # the fiber density (1/mu) F*^(-2) integrates to 2 pi at every point
        for _ in range(100):
            spec = random_metric(rng)
            x, y = random_point(rng)
            covs = QUAD.unit_covectors()
            dual = spec.dual(np.asarray(x)[..., None], np.asarray(y)[..., None], covs)
            mu = float(volume_density(spec, x, y, QUAD))
            total = float((QUAD.weights / dual**2).sum()) / mu
            assert abs(total - 2 * np.pi) < 1e-10

    def test_quadrature_convergence_doubling(self, rng):
        # smooth specs: 256 -> 512 nodes moves mu and sigma* by < 1e-10
        for _ in range(5):
            spec = random_randers(rng, eta_max=0.7)
            x, y = random_point(rng)
            q512 = FiberQuadrature.trapezoid(512)
            mu_a = float(volume_density(spec, x, y, QUAD))
            mu_b = float(volume_density(spec, x, y, q512))
            assert abs(mu_a - mu_b) < 1e-10
            sig_a = symbol_matrix(spec, x, y, QUAD)
            sig_b = symbol_matrix(spec, x, y, q512)
            assert float(np.abs(sig_a - sig_b).max()) < 1e-10

    def test_mu_bound_from_bilipschitz(self, rng):
        # C-bi-Lipschitz to Euclidean controls mu within [C^-2, C^2]
        e = RiemannianMetric.euclidean()
        for _ in range(10):
            spec = random_metric(rng)
            lo, hi = bilipschitz_ratio(spec, e, direction_samples=2048,
                                       point_samples=1024)
            big_c = max(hi, 1.0 / lo) * (1 + 1e-9)
            x, y = random_point(rng)
            mu = float(volume_density(spec, x, y, QUAD))
            assert big_c**-2 <= mu <= big_c**2

    def test_degenerate_guard(self):
        # exp(f) with huge f drives F* below the safety floor
        tiny = ConformalMetric(RiemannianMetric.euclidean(), 20.0)
        with pytest.raises(IllPosedMetricError):
            volume_density(tiny, 0.1, 0.1, QUAD)


class TestRandersClosedForms:
    def test_axis_symbol_eta_zero(self):
        A, B = randers_axis_symbol(2.0, 0.5, 0.0)
        np.testing.assert_allclose([A, B], [0.25, 4.0], rtol=1e-15)

    def test_axis_symbol_frozen_values(self):
        # h = r = 1, eta = 0.6: s = 0.8, A = 2/(1.8*0.8) = 25/18, B = 2/1.8 = 10/9
        A, B = randers_axis_symbol(1.0, 1.0, 0.6)
        np.testing.assert_allclose(A, 25.0 / 18.0, rtol=1e-15)
        np.testing.assert_allclose(B, 10.0 / 9.0, rtol=1e-15)

    def test_axis_symbol_algebraic_identity(self, rng):
        for _ in range(50):
            h = float(rng.uniform(0.5, 4.0))
            eta = float(rng.uniform(0.0, 0.999))
            A, _ = randers_axis_symbol(h, 1.0, eta)
            s = np.sqrt(1 - eta**2)
            np.testing.assert_allclose(A * (1 + s) * s * h**2 / 2.0, 1.0,
                                       rtol=1e-12)

    def test_axis_symbol_rejects_bad_eta(self):
        with pytest.raises(IllPosedMetricError):
            randers_axis_symbol(1.0, 1.0, 1.0)

    def test_angular_integrals_match_closed_forms(self):
        for eta in (0.1, 0.5, 0.9, 0.99):
            got = randers_angular_integrals(eta, 512)
            want = randers_angular_closed_forms(eta)
            assert abs(got[0] - want[0]) < 1e-8
            assert abs(got[1]) < 1e-10
            assert abs(got[2] - want[2]) < 1e-8

    def test_angular_integrals_against_adaptive_quadrature(self):
        # independent oracle for the same integrals
        for eta in (0.3, 0.8):
            c2, _ = scipy_quad(lambda t: np.cos(t) ** 2 / (1 + eta * np.cos(t)),
                               0.0, 2 * np.pi)
            s2, _ = scipy_quad(lambda t: np.sin(t) ** 2 / (1 + eta * np.cos(t)),
                               0.0, 2 * np.pi)
            got = randers_angular_integrals(eta, 512)
            np.testing.assert_allclose(got[0], c2, rtol=1e-10)
            np.testing.assert_allclose(got[2], s2, rtol=1e-10)

    def test_axis_symbol_vs_quadrature(self):
        # A = h^-2/pi * Int cos^2/(1 + eta cos)
        h, eta = 1.7, 0.85
        A, B = randers_axis_symbol(h, 1.0 / h, eta)
        c2, _, s2 = randers_angular_integrals(eta, 512)
        np.testing.assert_allclose(A, c2 / (np.pi * h**2), rtol=1e-12)
        np.testing.assert_allclose(B, s2 * h**2 / np.pi, rtol=1e-12)


class TestWeight:
    def test_riemannian_weight_is_one(self, rng):
        for _ in range(10):
            spec = random_metric(rng, allow_conformal=False)
            while spec.variant != "riemannian":
                spec = random_metric(rng, allow_conformal=False)
            x, y = random_point(rng)
            mu = volume_density(spec, x, y, QUAD)
            sig = symbol_matrix(spec, x, y, QUAD, mu=mu)
            np.testing.assert_allclose(float(weight(sig, mu)), 1.0, rtol=1e-8)

    def test_randers_torus_constant_weight(self):
        # unit-volume torus: mu = 1, so a = sqrt(A B)
        h, eta = 2.0, 0.6
        spec = RandersMetric.axis_drift_torus(h, eta)
        A, B = randers_axis_symbol(h, 1.0 / h, eta)
        mu = volume_density(spec, 0.4, 0.2, QUAD)
        sig = symbol_matrix(spec, 0.4, 0.2, QUAD, mu=mu)
        np.testing.assert_allclose(float(weight(sig, mu)), np.sqrt(A * B),
                                   rtol=1e-10)

    def test_weight_is_conformal_invariant_on_surfaces(self, rng):
        for _ in range(20):
            sig = np.array([[2.0, 0.3], [0.3, 1.0]])
            mu = 1.7
            f = float(rng.uniform(-1.0, 1.0))
            sig2, mu2 = conformal_transform(sig, mu, f)
            np.testing.assert_allclose(float(weight(sig2, mu2)),
                                       float(weight(sig, mu)), rtol=1e-12)


class TestBinetLegendre:
    def test_euclidean_identity(self):
        bl = binet_legendre(RiemannianMetric.euclidean(), 0.2, 0.8, QUAD)
        np.testing.assert_allclose(bl, np.eye(2), atol=1e-12)

    def test_riemannian_reduction(self, rng):
        for _ in range(10):
            spec = random_metric(rng, allow_conformal=False)
            while spec.variant != "riemannian":
                spec = random_metric(rng, allow_conformal=False)
            x, y = random_point(rng)
            bl = binet_legendre(spec, x, y, QUAD)
            g = spec.matrix(x, y)
            assert float(np.abs(bl - g).max() / np.abs(g).max()) < 1e-6

    def test_randers_bilipschitz_bounds(self, rng):
        # F and sqrt(g_BL) are (2c)^3-bi-Lipschitz for measured quasireversibility c
        spec = RandersMetric.axis_drift_torus(2.0, 0.5)
        c = quasireversibility(spec)
        lo, hi = (2 * c) ** -3, (2 * c) ** 3
        xs = rng.random(100)
        ys = rng.random(100)
        bl = binet_legendre(spec, xs[:, None], ys[:, None], QUAD)[:, 0]
        vs = rng.normal(size=(100, 2))
        fv = spec.value(xs, ys, vs)
        bl_norm = np.sqrt(np.einsum("kij,ki,kj->k", bl, vs, vs))
        ratio = fv / bl_norm
        assert float(ratio.min()) > lo
        assert float(ratio.max()) < hi

    def test_symbol_vs_binet_legendre_ratio_bounded(self, rng):
        # the symbol form stays positive and bounded against the averaged metric
        for _ in range(10):
            spec = random_metric(rng)
            x, y = random_point(rng)
            sig = symbol_matrix(spec, x, y, QUAD)
            bl = binet_legendre(spec, x, y, QUAD)
            bl_dual = np.linalg.inv(bl)
            for p in (np.array([1.0, 0.0]), np.array([0.0, 1.0]),
                      np.array([1.0, 1.0])):
                ratio = float(p @ sig @ p) / float(p @ bl_dual @ p)
                assert 0.0 < ratio < np.inf
                assert 1e-6 < ratio < 1e6


class TestConformalTransform:
    def test_zero_exponent_identity(self):
        sig = np.array([[2.0, 0.1], [0.1, 0.5]])
        sig2, mu2 = conformal_transform(sig, 1.3, 0.0)
        np.testing.assert_allclose(sig2, sig)
        np.testing.assert_allclose(mu2, 1.3)

    def test_log2_scales_by_four(self):
        sig = np.array([[2.0, 0.1], [0.1, 0.5]])
        sig2, mu2 = conformal_transform(sig, 1.3, np.log(2.0))
        np.testing.assert_allclose(mu2, 4 * 1.3, rtol=1e-15)
        np.testing.assert_allclose(sig2, sig / 4, rtol=1e-15)

    def test_pipeline_composite(self):
        # symbol of exp(f) F from scratch vs transformed symbol of F
        base = RandersMetric.axis_drift_torus(2.0, 0.6)
        conf = ConformalMetric(base, "0.3*sin(2*pi*x)")
        t = np.linspace(0.0, 1.0, 13)[:-1]
        x, y = t[:, None], t[None, :]
        sig_scratch = symbol_matrix(conf, x, y, QUAD)
        mu_scratch = volume_density(conf, x, y, QUAD)
        sig_base = symbol_matrix(base, x, y, QUAD)
        mu_base = volume_density(base, x, y, QUAD)
        f_vals = conf.exponent(x, y)
        sig_t, mu_t = conformal_transform(sig_base, mu_base, f_vals)
        assert float(np.abs(sig_scratch - sig_t).max()) < 1e-8
        assert float(np.abs(mu_scratch - mu_t).max()) < 1e-8


class TestSymbolField:
    def test_compute_matches_pointwise(self):
        spec = RandersMetric.axis_drift_torus(2.0, 0.6)
        grid = TorusGrid.square(8)
        field = SymbolField.compute(spec, grid, QUAD)
        x, y = grid.mesh()
        np.testing.assert_allclose(field.mu, volume_density(spec, x, y, QUAD),
                                   rtol=1e-14)
        np.testing.assert_allclose(field.sigma_star,
                                   symbol_matrix(spec, x, y, QUAD), rtol=1e-14)
        # consistency identity a = mu sqrt(det sigma*)
        np.testing.assert_allclose(field.a, weight(field.sigma_star, field.mu),
                                   rtol=1e-14)

    def test_csv_export(self, tmp_path):
        spec = RiemannianMetric.stretched(2.0)
        field = SymbolField.compute(spec, TorusGrid.square(8), QUAD)
        out = tmp_path / "field.csv"
        field.to_csv(out)
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "node,sigma11,sigma12,sigma22,mu,a"
        assert len(lines) == 1 + 64
        first = lines[1].split(",")
        np.testing.assert_allclose(float(first[1]), 0.25, rtol=1e-12)
        np.testing.assert_allclose(float(first[4]), 1.0, rtol=1e-10)

    def test_resolve_fiber_nodes_smooth(self):
        spec = RandersMetric.axis_drift_torus(2.0, 0.6)
        q = resolve_fiber_nodes(spec)
        assert q.size == 512  # first doubling already stabilizes mu

    def test_resolve_fiber_nodes_cap(self):
        spec = RandersMetric.axis_drift_torus(2.0, 1.0 - 1e-6)
        q = resolve_fiber_nodes(spec, start=32, cap=128, tol=1e-300)
        assert q.size == 128


class TestTwoRouteEnergy:
    def test_symbol_route_equals_fiber_route(self):
        spec = RandersMetric.axis_drift_torus(2.0, 0.9,
                                              profile="0.5 + 0.4*sin(2*pi*y)")
        grid = TorusGrid.square(24)
        field = SymbolField.compute(spec, grid, QUAD)

        def grad(x, y):
            gx = 2 * np.pi * np.cos(2 * np.pi * x) * np.cos(2 * np.pi * y)
            gy = -2 * np.pi * np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y)
            return np.stack(np.broadcast_arrays(gx, gy), axis=-1)

        e_sym = energy_from_symbol(field, grad)
        e_dir = randers_energy_direct(spec, grad, grid, QUAD)
        np.testing.assert_allclose(e_sym, e_dir, rtol=1e-6)
