#!/usr/bin/env python3
"""Worst-case estimation bounds for the stock layouts, and why placement matters.

Walks the default linear scenario (20 antennas, 20-wavelength segment,
15 GHz, 20 dB): computes the worst-case angle/distance/joint bounds for the
compact half-wavelength line, the sparse full-aperture line, and the
two-end-group layout, then confirms the analytic worst-case parameter points
against an exhaustive grid search.
"""

import numpy as np

from nma import benchmark_geometry, closed_form_apv, crb
from nma.geometry import Scenario, fresnel_distance, rayleigh_distance

LAM = 0.02
A = 20 * LAM

sc = Scenario(
    wavelength=LAM,
    aperture=A,
    n_antennas=20,
    min_spacing=LAM / 2,
    r_min=fresnel_distance(A, LAM, 1),
    r_max=rayleigh_distance(A, LAM, 1) / 2,
    u_max=0.95,
    snapshots=100,
    gain_sq=100.0,  # 20 dB with unit power and noise
)
known = {"u": np.cos(np.pi / 4), "r": rayleigh_distance(A, LAM, 1) / 4}

layouts = {
    "compact line (d pitch)": benchmark_geometry("ula", sc),
    "sparse line (full aperture)": benchmark_geometry("sparse-ula", sc),
    "two end groups (optimal)": closed_form_apv(sc),
}

print(f"scenario: N={sc.n_antennas}, A={sc.aperture} m, "
      f"r in [{sc.r_min:.3f}, {sc.r_max:.1f}] m, SNR={10*np.log10(sc.snr):.0f} dB\n")

for case, label in (("c11", "angle, distance known"),
                    ("c12", "distance, angle known"),
                    ("c13", "joint angle+distance")):
    print(f"== case {case} ({label}): worst-case bounds")
    for name, geom in layouts.items():
        try:
            vals = crb.worst_case_crb(case, sc, geom, known)
            pretty = ", ".join(f"{p}={v:.3e}" for p, v in vals.items())
            print(f"  {name:29s} {pretty}")
        except crb.SingularFimError as e:
            print(f"  {name:29s} singular ({e})")
    print()

print("== the analytic worst-case points hold up under grid search (c11, c12)")
geom = closed_form_apv(sc)
for case in ("c11", "c12"):
    res = crb.worst_case_search(case, sc, geom, resolution=301, known=known)
    p = res.params
    print(f"  {case}: grid argmax at u={p.u:.3f}, r={p.r:.3f} "
          f"(analytic: u=0 for c11, r=r_max for c12)")

print("\n== the two-end-group layout maximizes both position-spread moments")
m = crb.moments(geom)
print(f"  var(x) = {m.var('x'):.4e}   var(x^2) = {m.var('xsq'):.4e}")
print("  (no feasible layout exceeds either; see the optimizer demo)")
