#!/usr/bin/env python3
"""Steering-vector correlation: main lobes, grating lobes, estimation ambiguity.

Compares the correlation cut R(u') of three layouts around a 45-degree
reference target.  The sparse full-aperture line buys a narrow main lobe at
the price of a near-unity grating lobe (an ambiguous look direction); the
two-end-group layout keeps the narrow lobe without the ambiguity.  Also shows
the distance-axis cut, whose lobe is far broader than the angle cut.
"""

import numpy as np

from nma import benchmark_geometry, closed_form_apv, correlation
from nma.geometry import Scenario, TargetParams1D, fresnel_distance, rayleigh_distance
from nma.music import GridSpec

LAM = 0.02
A = 20 * LAM
sc = Scenario(
    wavelength=LAM, aperture=A, n_antennas=20, min_spacing=LAM / 2,
    r_min=fresnel_distance(A, LAM, 1), r_max=rayleigh_distance(A, LAM, 1) / 2,
    u_max=0.95, gain_sq=100.0,
)
ref = TargetParams1D(u=0.71, r=4.0)
u_axis = GridSpec(axes={"u": np.linspace(-0.95, 0.95, 3801)}, fixed={"r": ref.r})

layouts = {
    "compact line": benchmark_geometry("ula", sc),
    "sparse line": benchmark_geometry("sparse-ula", sc),
    "two end groups": closed_form_apv(sc),
}

print(f"reference target: u={ref.u}, r={ref.r} m\n")
print("== angle cuts R(u') at the known distance")
for name, geom in layouts.items():
    cmap = correlation.correlation_map(geom, ref, u_axis, sc.wavelength)
    lob = correlation.lobe_metrics(cmap)
    side = lob.sidelobe_locations[0]["u"] if lob.sidelobe_locations else float("nan")
    print(f"  {name:15s} main lobe width {lob.main_lobe_width['u']:.4f}, "
          f"peak sidelobe R={lob.peak_sidelobe_level:.3f} at u'={side:+.3f}")

print("\n  the sparse line's R>0.9 lobe near u'=-0.23 means a target at 0.71 is")
print("  nearly indistinguishable from one at -0.23: an estimation ambiguity")

print("\n== distance cut R(r') for the two-end-group layout")
geom = layouts["two end groups"]
r_axis = GridSpec(axes={"r": np.linspace(sc.r_min, sc.r_max, 3801)}, fixed={"u": ref.u})
rmap = correlation.correlation_map(geom, ref, r_axis, sc.wavelength)
rlob = correlation.lobe_metrics(rmap)
ulob = correlation.lobe_metrics(
    correlation.correlation_map(geom, ref, u_axis, sc.wavelength)
)
u_frac = ulob.main_lobe_width["u"] / 1.9
r_frac = rlob.main_lobe_width["r"] / (sc.r_max - sc.r_min)
print(f"  angle lobe spans {100 * u_frac:.2f}% of the searched angle range,")
print(f"  distance lobe spans {100 * r_frac:.2f}% of the distance range:")
print("  angular accuracy comes much cheaper than range accuracy")

print("\n== physical-plane projection (scattered x, y, R triples)")
spec2 = GridSpec(axes={"u": np.linspace(0.2, 0.95, 101),
                       "r": np.linspace(2.0, 6.0, 101)}, fixed={})
cart = correlation.correlation_map(geom, ref, spec2, sc.wavelength,
                                   projection="cartesian")
top = cart.cartesian[np.argsort(cart.cartesian[:, 2])[-3:]]
for x, y, r_val in top:
    print(f"  R={r_val:.3f} at (x, y) = ({x:+.3f}, {y:+.3f}) m")
print(f"  truth sits at ({ref.r * ref.u:+.3f}, {ref.r * np.sqrt(1 - ref.u**2):+.3f}) m")
