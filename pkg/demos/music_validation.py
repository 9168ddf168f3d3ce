#!/usr/bin/env python3
"""Subspace estimation against the bounds: snapshots, spectrum, Monte Carlo.

Simulates echo snapshots for the optimal linear layout, walks the estimation
pipeline (sample covariance, noise subspace, spectrum peak with local
refinement), then runs a seeded Monte Carlo at several SNRs and compares the
empirical MSE with the angle bound.
"""

import numpy as np

from nma import closed_form_apv, crb, music
from nma.geometry import Scenario, TargetParams1D, fresnel_distance, rayleigh_distance

LAM = 0.02
A = 20 * LAM


def scenario(snr_db):
    return Scenario(
        wavelength=LAM, aperture=A, n_antennas=20, min_spacing=LAM / 2,
        r_min=fresnel_distance(A, LAM, 1), r_max=rayleigh_distance(A, LAM, 1) / 2,
        u_max=0.95, snapshots=100, gain_sq=10.0 ** (snr_db / 10.0),
    )


eta = TargetParams1D(u=np.cos(np.pi / 4), r=4.0)
sc = scenario(20.0)
geom = closed_form_apv(sc)

print("== one run, step by step (20 dB)")
block = music.simulate_snapshots(sc, geom, eta, seed=7)
r_y = music.sample_covariance(block)
sub = music.noise_subspace(r_y)
evals = np.linalg.eigvalsh(r_y)
print(f"  covariance eigenvalues: signal {evals[-1]:.1f}, "
      f"noise floor ~{evals[:-1].mean():.2f} (T={sc.snapshots})")
spec = music.default_grid_spec("c11", sc, known={"r": eta.r})
sg = music.spectrum(sc, geom, sub, spec)
print(f"  spectrum peak at u={sg.argmax_point()['u']:.4f} (truth {eta.u:.4f})")
est = music.estimate(sc, geom, block, "c11", spec)
print(f"  refined estimate u={est.u:.6f}, error {est.u - eta.u:+.2e}")

print("\n== seeded Monte Carlo vs the bound (500 trials per SNR)")
print("  snr    empirical MSE   angle bound     MSE/CRB")
for snr_db in (10, 20, 30):
    sc_i = scenario(snr_db)
    geom_i = closed_form_apv(sc_i)
    res = music.monte_carlo_mse(sc_i, geom_i, eta, "c11", trials=500, seed=1,
                                grid_spec=music.default_grid_spec(
                                    "c11", sc_i, known={"r": eta.r}))
    bound = crb.crb_case11(sc_i, geom_i, eta.u, eta.r)
    print(f"  {snr_db:3d}dB  {res.mse['u']:.3e}      {bound:.3e}      "
          f"{10 * np.log10(res.mse['u'] / bound):+.2f} dB")
print("\n  (the estimator tracks the bound once above threshold; reruns with the")
print("   same seed reproduce these numbers bit for bit)")
