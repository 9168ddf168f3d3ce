"""Near-field channel model under the uniform-spherical-wave assumption.

The antenna-to-target distance is expanded to second order in the antenna
coordinates (Fresnel approximation), which makes the steering-vector phase a
linear-plus-quadratic function of position.  All estimation bounds in
:mod:`nma.crb` are driven by the analytic gradients of that phase; the
coefficient vectors live in :class:`DerivVectors1D` / :class:`DerivVectors2D`
and finite differences appear only in the test suite.

Phase convention.  Each steering entry carries ``exp(+j 2*pi/lambda * phi_n)``
with the relative phase ``phi_n = r - r_n`` of the expanded distance, i.e.

* 1D: ``phi_n = x_n u - x_n^2 (1 - u^2) / (2 r)``;
* 2D: ``phi_n = x_n u + y_n v - ((x_n^2 + y_n^2) - (x_n u + y_n v)^2) / (2 r)``.

The common factor ``exp(-j 2*pi r/lambda)`` lives in the complex gain beta.
With this sign choice the phase gradients w.r.t. (u, v, r) are exactly the
coefficient vectors below, in both dimensionalities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import (
    ApvLinear,
    Geometry,
    Scenario,
    TargetParams,
    TargetParams1D,
    TargetParams2D,
)


def target_position(eta: TargetParams) -> np.ndarray:
    """Cartesian target coordinates: (ru, r*sqrt(1-u^2)) in-plane for 1D, r*[u, v, w] for 2D."""
    if isinstance(eta, TargetParams1D):
        return np.array([eta.r * eta.u, eta.r * np.sqrt(1.0 - eta.u**2)])
    w = np.sqrt(1.0 - eta.u**2 - eta.v**2)
    return eta.r * np.array([eta.u, eta.v, w])


def exact_distance(pos, eta: TargetParams) -> np.ndarray | float:
    """Euclidean antenna-to-target distance.

    ``pos`` is a scalar/array of x-coordinates (1D) or an (..., 2) array of
    (x, y) pairs (2D).
    """
    if isinstance(eta, TargetParams1D):
        x = np.asarray(pos, dtype=float)
        d2 = eta.r**2 - 2.0 * x * eta.u * eta.r + x**2
        out = np.sqrt(d2)
        return float(out) if out.ndim == 0 else out
    xy = np.asarray(pos, dtype=float)
    x, y = xy[..., 0], xy[..., 1]
    proj = x * eta.u + y * eta.v
    d2 = eta.r**2 - 2.0 * eta.r * proj + x**2 + y**2
    out = np.sqrt(d2)
    return float(out) if out.ndim == 0 else out


def fresnel_distance_approx(pos, eta: TargetParams) -> np.ndarray | float:
    """Second-order expansion of :func:`exact_distance` in the antenna coordinates."""
    if isinstance(eta, TargetParams1D):
        x = np.asarray(pos, dtype=float)
        out = eta.r - x * eta.u + x**2 * (1.0 - eta.u**2) / (2.0 * eta.r)
        return float(out) if out.ndim == 0 else out
    xy = np.asarray(pos, dtype=float)
    x, y = xy[..., 0], xy[..., 1]
    proj = x * eta.u + y * eta.v
    out = eta.r - proj + (x**2 + y**2 - proj**2) / (2.0 * eta.r)
    return float(out) if out.ndim == 0 else out


def _phase(geom: Geometry, eta: TargetParams) -> np.ndarray:
    """Relative steering phase phi_n = r - r_n (Fresnel-expanded), in meters."""
    if isinstance(geom, ApvLinear):
        if not isinstance(eta, TargetParams1D):
            raise TypeError("linear geometry needs 1D target parameters")
        x = geom.x
        return x * eta.u - x**2 * (1.0 - eta.u**2) / (2.0 * eta.r)
    if not isinstance(eta, TargetParams2D):
        raise TypeError("planar geometry needs 2D target parameters")
    x, y = geom.xy[:, 0], geom.xy[:, 1]
    proj = x * eta.u + y * eta.v
    return proj - (x**2 + y**2 - proj**2) / (2.0 * eta.r)


def steering_vector(geom: Geometry, eta: TargetParams, wavelength: float) -> np.ndarray:
    """Unit-magnitude steering vector alpha(geometry, eta)."""
    return np.exp(1j * (2.0 * np.pi / wavelength) * _phase(geom, eta))


def channel_gain(sc: Scenario, eta: TargetParams) -> complex:
    """Complex gain beta = |beta| exp(-j 2 pi r / lambda)."""
    return np.sqrt(sc.gain_sq) * np.exp(-1j * 2.0 * np.pi * eta.r / sc.wavelength)


def channel_vector(sc: Scenario, geom: Geometry, eta: TargetParams) -> np.ndarray:
    """Echoed LoS channel vector h = beta * alpha."""
    return channel_gain(sc, eta) * steering_vector(geom, eta, sc.wavelength)


@dataclass(frozen=True)
class DerivVectors1D:
    """Phase-gradient coefficients for a linear array.

    ``zeta_u[n] = x_n + x_n^2 u / r`` (meters) and
    ``zeta_r[n] = x_n^2 (1 - u^2) / (2 r^2)`` (dimensionless).
    """

    zeta_u: np.ndarray
    zeta_r: np.ndarray

    def coeff(self, name: str) -> np.ndarray:
        return {"u": self.zeta_u, "r": self.zeta_r}[name]

    @property
    def names(self) -> tuple[str, ...]:
        return ("u", "r")


@dataclass(frozen=True)
class DerivVectors2D:
    """Phase-gradient coefficients for a planar array.

    ``xi[n] = x_n + x_n (x_n u + y_n v) / r``,
    ``pi[n] = y_n + y_n (x_n u + y_n v) / r``,
    ``rho[n] = (x_n^2 + y_n^2 - (x_n u + y_n v)^2) / (2 r^2)``.
    """

    xi: np.ndarray
    pi: np.ndarray
    rho: np.ndarray

    def coeff(self, name: str) -> np.ndarray:
        return {"u": self.xi, "v": self.pi, "r": self.rho}[name]

    @property
    def names(self) -> tuple[str, ...]:
        return ("u", "v", "r")


def deriv_coeffs(geom: Geometry, eta: TargetParams) -> DerivVectors1D | DerivVectors2D:
    """Analytic phase-gradient coefficient vectors at the given parameter point."""
    if isinstance(geom, ApvLinear):
        if not isinstance(eta, TargetParams1D):
            raise TypeError("linear geometry needs 1D target parameters")
        x = geom.x
        return DerivVectors1D(
            zeta_u=x + x**2 * eta.u / eta.r,
            zeta_r=x**2 * (1.0 - eta.u**2) / (2.0 * eta.r**2),
        )
    if not isinstance(eta, TargetParams2D):
        raise TypeError("planar geometry needs 2D target parameters")
    x, y = geom.xy[:, 0], geom.xy[:, 1]
    proj = x * eta.u + y * eta.v
    return DerivVectors2D(
        xi=x + x * proj / eta.r,
        pi=y + y * proj / eta.r,
        rho=(x**2 + y**2 - proj**2) / (2.0 * eta.r**2),
    )


def deriv_vectors(
    sc: Scenario, geom: Geometry, eta: TargetParams
) -> dict[str, np.ndarray]:
    """Complex derivative vectors psi_p = j (2 pi / lambda) coeff_p * h per parameter.

    The common range phase of beta is excluded (it is annihilated by the
    signal-space projector, so the information bounds are unaffected); the
    vectors are therefore the gradients of the steering part of the channel.
    """
    h = channel_vector(sc, geom, eta)
    coeffs = deriv_coeffs(geom, eta)
    scale = 1j * 2.0 * np.pi / sc.wavelength
    return {name: scale * coeffs.coeff(name) * h for name in coeffs.names}
