"""Shared scenario fixtures and random-draw helpers."""

from __future__ import annotations

import numpy as np
import pytest

from nma.geometry import (
    Scenario,
    TargetParams1D,
    TargetParams2D,
    fresnel_distance,
    random_feasible_apm,
    random_feasible_apv,
    rayleigh_distance,
)

WAVELENGTH = 0.02
HALF = WAVELENGTH / 2.0


def scenario_1d(n: int = 20, aperture_wl: float = 20.0, snr_db: float = 20.0,
                snapshots: int = 100) -> Scenario:
    a = aperture_wl * WAVELENGTH
    return Scenario(
        wavelength=WAVELENGTH,
        aperture=a,
        n_antennas=n,
        min_spacing=HALF,
        r_min=fresnel_distance(a, WAVELENGTH, 1),
        r_max=rayleigh_distance(a, WAVELENGTH, 1) / 2.0,
        u_max=0.95,
        snapshots=snapshots,
        gain_sq=10.0 ** (snr_db / 10.0),
    )


def scenario_2d(n: int = 64, aperture_wl: float = 20.0, snr_db: float = 10.0,
                snapshots: int = 100) -> Scenario:
    a = aperture_wl * WAVELENGTH
    return Scenario(
        wavelength=WAVELENGTH,
        aperture=a,
        n_antennas=n,
        min_spacing=HALF,
        r_min=fresnel_distance(a, WAVELENGTH, 1),  # near bound quoted with the linear rule
        r_max=rayleigh_distance(a, WAVELENGTH, 2) / 2.0,
        u_max=0.95,
        v_max=0.95,
        snapshots=snapshots,
        gain_sq=10.0 ** (snr_db / 10.0),
        ndim=2,
        fresnel_rule=1,
    )


@pytest.fixture
def sc_1d() -> Scenario:
    return scenario_1d()


@pytest.fixture
def sc_1d_small() -> Scenario:
    return scenario_1d(n=8, aperture_wl=10.0)


@pytest.fixture
def sc_2d() -> Scenario:
    return scenario_2d()


@pytest.fixture
def sc_2d_small() -> Scenario:
    return scenario_2d(n=16, aperture_wl=10.0)


def draw_scenario_1d(rng: np.random.Generator) -> Scenario:
    lam = rng.uniform(0.005, 0.05)
    n = int(rng.integers(4, 25))
    a = lam * rng.uniform(max(6.0, (n - 1) * 0.6), 40.0)
    d = min(lam / 2.0, a / (n - 1) * rng.uniform(0.3, 0.95))
    return Scenario(
        wavelength=lam,
        aperture=a,
        n_antennas=n,
        min_spacing=d,
        r_min=fresnel_distance(a, lam, 1),
        r_max=rayleigh_distance(a, lam, 1) / 2.0,
        u_max=rng.uniform(0.5, 0.95),
        snapshots=int(rng.integers(10, 200)),
        tx_power=rng.uniform(0.1, 10.0),
        noise_power=rng.uniform(0.1, 10.0),
        gain_sq=rng.uniform(0.5, 500.0),
    )


def draw_scenario_2d(rng: np.random.Generator) -> Scenario:
    lam = rng.uniform(0.005, 0.05)
    n = int(rng.integers(4, 17))
    a = lam * rng.uniform(8.0, 30.0)
    m = int(np.ceil(np.sqrt(n)))
    d = min(lam / 2.0, a / (m - 1) * rng.uniform(0.2, 0.6)) if m > 1 else lam / 2.0
    return Scenario(
        wavelength=lam,
        aperture=a,
        n_antennas=n,
        min_spacing=d,
        r_min=fresnel_distance(a, lam, 2),
        r_max=rayleigh_distance(a, lam, 2) / 2.0,
        u_max=rng.uniform(0.5, 0.9),
        v_max=rng.uniform(0.5, 0.9),
        snapshots=int(rng.integers(10, 200)),
        tx_power=rng.uniform(0.1, 10.0),
        noise_power=rng.uniform(0.1, 10.0),
        gain_sq=rng.uniform(0.5, 500.0),
        ndim=2,
    )


def draw_eta_1d(rng: np.random.Generator, sc: Scenario) -> TargetParams1D:
    return TargetParams1D(
        u=rng.uniform(0.0, sc.u_max), r=rng.uniform(sc.r_min, sc.r_max)
    )


def draw_eta_2d(rng: np.random.Generator, sc: Scenario) -> TargetParams2D:
    u = rng.uniform(0.0, sc.u_max)
    v_cap = min(sc.v_max or 0.0, np.sqrt(max(1.0 - u * u, 0.0)) * 0.98)
    v = rng.uniform(0.0, v_cap)
    return TargetParams2D(u=u, v=v, r=rng.uniform(sc.r_min, sc.r_max))


def draw_geometry(rng: np.random.Generator, sc: Scenario):
    if sc.ndim == 1:
        return random_feasible_apv(sc, rng)
    return random_feasible_apm(sc, rng)
