import numpy as np
import pytest

import nma
from nma.correlation import (
    AmbiguityError,
    correlation_map,
    correlation_value,
    lobe_metrics,
)
from nma.geometry import ApvLinear, TargetParams1D
from nma.music import GridSpec
from nma.optimize import closed_form_apv
from conftest import draw_eta_1d, draw_geometry, draw_scenario_1d, scenario_1d

LAM = 0.02
U_REF = 0.71
R_REF = 4.0


def u_cut_map(geom, lo=-0.95, hi=0.95, n=3801, r=R_REF):
    spec = GridSpec(axes={"u": np.linspace(lo, hi, n)}, fixed={"r": r})
    return correlation_map(geom, TargetParams1D(u=U_REF, r=r), spec, LAM)


class TestCorrelationValue:
    def test_reference_point_is_unity(self, sc_1d):
        geom = closed_form_apv(sc_1d)
        eta = TargetParams1D(u=0.3, r=5.0)
        assert correlation_value(geom, eta, eta, LAM) == pytest.approx(1.0, abs=1e-12)

    def test_single_antenna_always_unity(self):
        geom = ApvLinear(np.array([0.1]))
        a = TargetParams1D(u=0.2, r=3.0)
        for uq in (-0.5, 0.0, 0.8):
            b = TargetParams1D(u=uq, r=6.0)
            assert correlation_value(geom, a, b, LAM) == pytest.approx(1.0, abs=1e-12)

    def test_grating_lobe_of_sparse_uniform_line(self, sc_1d):
        # full-aperture uniform line with ~1.05 wavelength pitch: strong
        # secondary lobe near u' = -0.23 when the reference sits at 0.71
        geom = nma.benchmark_geometry("sparse-ula", sc_1d)
        ref = TargetParams1D(u=U_REF, r=R_REF)
        window = np.linspace(-0.28, -0.18, 401)
        vals = [correlation_value(geom, ref, TargetParams1D(u=float(uq), r=R_REF), LAM)
                for uq in window]
        assert max(vals) > 0.5

    def test_symmetry_of_arguments(self):
        rng = np.random.default_rng(31)
        for _ in range(30):
            sc = draw_scenario_1d(rng)
            geom = draw_geometry(rng, sc)
            a, b = draw_eta_1d(rng, sc), draw_eta_1d(rng, sc)
            fwd = correlation_value(geom, a, b, sc.wavelength)
            rev = correlation_value(geom, b, a, sc.wavelength)
            assert fwd == pytest.approx(rev, abs=1e-12)

    def test_bounded_by_one(self):
        rng = np.random.default_rng(32)
        for _ in range(100):
            sc = draw_scenario_1d(rng)
            geom = draw_geometry(rng, sc)
            val = correlation_value(geom, draw_eta_1d(rng, sc), draw_eta_1d(rng, sc),
                                    sc.wavelength)
            assert val <= 1.0 + 1e-12

    def test_far_field_shift_invariance(self, sc_1d):
        # rigid translation cancels in the plane-wave limit
        rng = np.random.default_rng(33)
        base = nma.geometry.random_feasible_apv(sc_1d, rng)
        shifted = ApvLinear(base.x + 0.05)
        a = TargetParams1D(u=0.4, r=1e9)
        b = TargetParams1D(u=0.1, r=1e9)
        v1 = correlation_value(base, a, b, LAM)
        v2 = correlation_value(shifted, a, b, LAM)
        assert v1 == pytest.approx(v2, abs=1e-9)


class TestCorrelationMap:
    def test_peak_cell_is_reference_cell(self, sc_1d):
        geom = closed_form_apv(sc_1d)
        cmap = u_cut_map(geom)
        axis = cmap.axes["u"]
        nearest = axis[np.argmin(np.abs(axis - U_REF))]
        assert cmap.argmax_point()["u"] == pytest.approx(nearest, abs=1e-12)

    def test_proposed_has_narrower_main_lobe(self, sc_1d):
        widths = {}
        for name, geom in {
            "proposed": closed_form_apv(sc_1d),
            "compact": nma.benchmark_geometry("ula", sc_1d),
            "sparse": nma.benchmark_geometry("sparse-ula", sc_1d),
        }.items():
            widths[name] = lobe_metrics(u_cut_map(geom)).main_lobe_width["u"]
        assert widths["proposed"] < widths["compact"]
        assert widths["proposed"] < widths["sparse"]

    def test_distance_lobe_wider_than_angle_lobe(self, sc_1d):
        # same geometry: -3 dB lobe along r spans a larger fraction of its
        # feasible range than the lobe along u
        geom = closed_form_apv(sc_1d)
        u_width = lobe_metrics(u_cut_map(geom)).main_lobe_width["u"]
        r_axis = np.linspace(sc_1d.r_min, sc_1d.r_max, 3801)
        r_spec = GridSpec(axes={"r": r_axis}, fixed={"u": U_REF})
        r_map = correlation_map(geom, TargetParams1D(u=U_REF, r=R_REF), r_spec, LAM)
        r_width = lobe_metrics(r_map).main_lobe_width["r"]
        u_frac = u_width / 1.9  # searched u span
        r_frac = r_width / (sc_1d.r_max - sc_1d.r_min)
        assert r_frac > u_frac

    def test_cartesian_projection_coordinates(self, sc_1d):
        geom = closed_form_apv(sc_1d)
        spec = GridSpec(axes={"u": np.linspace(0.0, 0.9, 11)}, fixed={"r": R_REF})
        cmap = correlation_map(geom, TargetParams1D(u=U_REF, r=R_REF), spec, LAM,
                               projection="cartesian")
        u = spec.axes["u"]
        np.testing.assert_allclose(cmap.cartesian[:, 0], R_REF * u)
        np.testing.assert_allclose(cmap.cartesian[:, 1], R_REF * np.sqrt(1 - u**2))
        np.testing.assert_allclose(cmap.cartesian[:, 2], cmap.values.ravel())


class TestLobeMetrics:
    def test_flat_map_raises_ambiguity(self):
        geom = ApvLinear(np.array([0.1]))  # single antenna: R == 1 everywhere
        cmap = u_cut_map(geom, n=101)
        with pytest.raises(AmbiguityError):
            lobe_metrics(cmap)

    def test_sparse_line_peak_sidelobe_location(self, sc_1d):
        geom = nma.benchmark_geometry("sparse-ula", sc_1d)
        metrics = lobe_metrics(u_cut_map(geom))
        assert metrics.peak_sidelobe_level > 0.5
        assert metrics.sidelobe_locations[0]["u"] == pytest.approx(-0.23, abs=0.02)

    def test_uniform_line_far_field_null_spacing(self):
        # classical result: first nulls at 2/N from the peak for a
        # half-wavelength uniform line in the plane-wave regime
        n = 20
        geom = ApvLinear(np.arange(n) * LAM / 2)
        r_far = 1e7
        spec = GridSpec(axes={"u": np.linspace(0.3, 0.9, 24001)}, fixed={"r": r_far})
        cmap = correlation_map(geom, TargetParams1D(u=0.6, r=r_far), spec, LAM)
        vals, axis = cmap.values, spec.axes["u"]
        peak = int(np.argmax(vals))
        right = peak + int(np.argmin(vals[peak:peak + 5000]))
        null_offset = axis[right] - axis[peak]
        assert null_offset == pytest.approx(2.0 / n, rel=0.02)
