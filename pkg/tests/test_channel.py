import numpy as np
import pytest

from nma.channel import (
    channel_vector,
    deriv_coeffs,
    deriv_vectors,
    exact_distance,
    fresnel_distance_approx,
    steering_vector,
)
from nma.geometry import ApmPlanar, ApvLinear, TargetParams1D, TargetParams2D
from conftest import (
    draw_eta_1d,
    draw_eta_2d,
    draw_geometry,
    draw_scenario_1d,
    draw_scenario_2d,
    scenario_1d,
)


class TestDistances:
    def test_antenna_at_origin(self):
        assert exact_distance(0.0, TargetParams1D(u=0.5, r=4.0)) == pytest.approx(4.0)

    def test_broadside_pythagoras(self):
        got = exact_distance(0.2, TargetParams1D(u=0.0, r=4.0))
        assert got == pytest.approx(np.sqrt(16.04), rel=1e-15)
        assert got == pytest.approx(4.005, abs=5e-4)

    def test_oblique_direct_evaluation(self):
        # direct evaluation of sqrt(r^2 - 2 x u r + x^2)
        got = exact_distance(0.2, TargetParams1D(u=0.71, r=4.0))
        assert got == pytest.approx(np.sqrt(16.0 - 2 * 0.2 * 0.71 * 4.0 + 0.04), rel=1e-15)
        assert got == pytest.approx(3.860569, abs=1e-6)

    def test_approx_at_origin_is_r(self):
        eta = TargetParams1D(u=0.3, r=2.0)
        assert fresnel_distance_approx(0.0, eta) == pytest.approx(2.0)

    def test_approx_broadside_value(self):
        got = fresnel_distance_approx(0.2, TargetParams1D(u=0.0, r=4.0))
        assert got == pytest.approx(4.0 + 0.04 / 8.0, rel=1e-15)

    def test_approx_error_sweep(self):
        # The leading neglected term is x^3 u (1-u^2) / (2 r^3) relative, so the
        # worst case sits at (x = A/2, u ~ 0.7, r = r_min).  Measured extremes
        # over the feasible box are frozen here.
        sc = scenario_1d()
        xs = np.linspace(0.0, 0.2, 41)
        us = np.linspace(0.0, sc.u_max, 21)
        worst_all = 0.0
        worst_far = 0.0
        for r in np.geomspace(sc.r_min, sc.r_max, 60):
            for u in us:
                eta = TargetParams1D(u=float(u), r=float(r))
                rel = np.abs(
                    (fresnel_distance_approx(xs, eta) - exact_distance(xs, eta))
                    / exact_distance(xs, eta)
                )
                worst_all = max(worst_all, float(rel.max()))
                if r >= 2.5:
                    worst_far = max(worst_far, float(rel.max()))
        assert worst_all < 1.4e-2  # attained at r = r_min, x = A/2
        assert worst_far < 1e-4  # the tight regime needs r a few times r_min

    def test_phase_error_consistency(self):
        # Not a hard physical gate: records the worst Fresnel phase error over
        # the feasible region for the default scenario.  The 0.15 rad level is
        # only reached for r beyond ~2 m; the full box peaks at r_min.
        sc = scenario_1d()
        xs = np.linspace(0.0, sc.aperture / 2, 41)
        worst = 0.0
        worst_beyond_2m = 0.0
        for r in np.geomspace(sc.r_min, sc.r_max, 80):
            for u in np.linspace(0.0, sc.u_max, 21):
                eta = TargetParams1D(u=float(u), r=float(r))
                err = np.abs(exact_distance(xs, eta) - fresnel_distance_approx(xs, eta))
                phase = float(err.max()) * 2 * np.pi / sc.wavelength
                worst = max(worst, phase)
                if r >= 2.0:
                    worst_beyond_2m = max(worst_beyond_2m, phase)
        assert worst < 1.9  # 1.83 rad at (r_min, u ~ 0.67, x = A/2)
        assert worst_beyond_2m < 0.15

    def test_2d_distance_matches_3d_norm(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            eta = TargetParams2D(u=rng.uniform(0, 0.7), v=rng.uniform(0, 0.6),
                                 r=rng.uniform(1, 10))
            pos = rng.uniform(-0.2, 0.2, 2)
            target = eta.r * np.array([eta.u, eta.v, np.sqrt(1 - eta.u**2 - eta.v**2)])
            direct = np.linalg.norm(target - np.array([pos[0], pos[1], 0.0]))
            assert exact_distance(pos, eta) == pytest.approx(direct, rel=1e-12)


class TestSteering:
    def test_single_antenna_at_origin(self):
        geom = ApvLinear(np.array([0.0]))
        a = steering_vector(geom, TargetParams1D(u=0.4, r=3.0), 0.02)
        assert a[0] == pytest.approx(1.0 + 0.0j)

    def test_far_field_limit_plane_wave(self):
        lam = 0.02
        geom = ApvLinear(np.arange(4) * 0.01)
        eta = TargetParams1D(u=0.5, r=1e9)
        a = steering_vector(geom, eta, lam)
        expected = np.exp(1j * 2 * np.pi * geom.x * eta.u / lam)
        np.testing.assert_allclose(a, expected, atol=1e-6)

    def test_half_wavelength_endfire(self):
        lam = 0.02
        geom = ApvLinear(np.array([0.0, lam / 2]))
        a = steering_vector(geom, TargetParams1D(u=1.0 - 1e-15, r=1e9), lam)
        np.testing.assert_allclose(a, [1.0, -1.0], atol=1e-6)

    def test_unit_magnitude(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            sc = draw_scenario_1d(rng)
            a = steering_vector(draw_geometry(rng, sc), draw_eta_1d(rng, sc), sc.wavelength)
            np.testing.assert_allclose(np.abs(a), 1.0, atol=1e-12)
        for _ in range(25):
            sc = draw_scenario_2d(rng)
            a = steering_vector(draw_geometry(rng, sc), draw_eta_2d(rng, sc), sc.wavelength)
            np.testing.assert_allclose(np.abs(a), 1.0, atol=1e-12)

    def test_channel_vector_is_scaled_steering(self, sc_1d):
        geom = ApvLinear(np.array([0.0, 0.05, 0.2]))
        eta = TargetParams1D(u=0.3, r=5.0)
        h = channel_vector(sc_1d, geom, eta)
        a = steering_vector(geom, eta, sc_1d.wavelength)
        beta = np.sqrt(sc_1d.gain_sq) * np.exp(-1j * 2 * np.pi * eta.r / sc_1d.wavelength)
        np.testing.assert_allclose(h, beta * a, rtol=1e-12)
        np.testing.assert_allclose(np.abs(h), np.sqrt(sc_1d.gain_sq), rtol=1e-12)


class TestDerivVectors:
    def test_broadside_zeta_u_is_x(self):
        geom = ApvLinear(np.array([0.0, 0.1, 0.3]))
        d = deriv_coeffs(geom, TargetParams1D(u=0.0, r=4.0))
        np.testing.assert_allclose(d.zeta_u, geom.x)

    def test_endfire_zeta_r_vanishes(self):
        geom = ApvLinear(np.array([0.0, 0.1, 0.3]))
        d = deriv_coeffs(geom, TargetParams1D(u=1.0 - 1e-16, r=4.0))
        np.testing.assert_allclose(d.zeta_r, 0.0, atol=1e-12)

    def test_2d_broadside_reduction(self):
        xy = np.array([[0.1, -0.05], [-0.2, 0.15], [0.0, 0.2]])
        d = deriv_coeffs(ApmPlanar(xy), TargetParams2D(u=0.0, v=0.0, r=8.0))
        np.testing.assert_allclose(d.xi, xy[:, 0])
        np.testing.assert_allclose(d.pi, xy[:, 1])
        np.testing.assert_allclose(d.rho, (xy[:, 0] ** 2 + xy[:, 1] ** 2) / (2 * 64.0))

    @pytest.mark.parametrize("dim", [1, 2])
    def test_finite_difference_gradients(self, dim):
        # psi_p must match the central difference of the steering part of the
        # channel to 1e-5 relative, across random feasible draws.
        rng = np.random.default_rng(100 + dim)
        draws = 100
        for _ in range(draws):
            sc = draw_scenario_1d(rng) if dim == 1 else draw_scenario_2d(rng)
            geom = draw_geometry(rng, sc)
            eta = draw_eta_1d(rng, sc) if dim == 1 else draw_eta_2d(rng, sc)
            psis = deriv_vectors(sc, geom, eta)
            beta = np.sqrt(sc.gain_sq) * np.exp(-1j * 2 * np.pi * eta.r / sc.wavelength)
            for p, psi in psis.items():
                scale = eta.r if p == "r" else 1.0
                eps = 1e-7 * scale
                hi = _shift(eta, p, +eps)
                lo = _shift(eta, p, -eps)
                num = beta * (
                    steering_vector(geom, hi, sc.wavelength)
                    - steering_vector(geom, lo, sc.wavelength)
                ) / (2 * eps)
                rel = np.linalg.norm(num - psi) / np.linalg.norm(psi)
                assert rel < 1e-5


def _shift(eta, p, eps):
    kw = {k: getattr(eta, k) for k in ("u", "v", "r") if hasattr(eta, k)}
    kw[p] = kw[p] + eps
    return type(eta)(**kw)
