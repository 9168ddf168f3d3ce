"""Array geometries, feasibility checks, and near-field region boundaries.

A sensing setup is described by a :class:`Scenario` (physical constants plus
parameter bounds), a geometry (:class:`ApvLinear` for a linear segment,
:class:`ApmPlanar` for a square plane), and a target parameter point
(:class:`TargetParams1D` / :class:`TargetParams2D` in direction-cosine +
distance coordinates).

Conventions, fixed once and used everywhere:

* all positions and distances are stored in meters;
* the 1D array occupies ``[0, A]`` with the origin at the left end;
* the 2D array occupies ``[-A/2, A/2]^2`` with the origin at the plane center;
* validators return violation *lists* (data), they never raise on bad
  geometry: construction errors are reserved for nonsensical scalars.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Sequence, Union

import numpy as np

# Spacing checks absorb float round-off from grid arithmetic; ordering stays exact.
SPACING_TOL = 1e-12

ULA = "ula"
SPARSE_ULA = "sparse-ula"
UPA = "upa"
SPARSE_UPA = "sparse-upa"
BENCHMARK_KINDS = (ULA, SPARSE_ULA, UPA, SPARSE_UPA)


def fresnel_distance(aperture: float, wavelength: float, ndim: int = 1) -> float:
    """Lower boundary of the radiating near field.

    ``(A^4 / (8 lambda))^(1/3)`` for a linear aperture, ``(A^4 / (2 lambda))^(1/3)``
    for a planar one.
    """
    if aperture <= 0 or wavelength <= 0:
        raise ValueError("aperture and wavelength must be positive")
    divisor = 8.0 if ndim == 1 else 2.0
    return float((aperture**4 / (divisor * wavelength)) ** (1.0 / 3.0))


def rayleigh_distance(aperture: float, wavelength: float, ndim: int = 1) -> float:
    """Upper boundary of the radiating near field: ``2 A^2/lambda`` (1D) or ``4 A^2/lambda`` (2D)."""
    if aperture <= 0 or wavelength <= 0:
        raise ValueError("aperture and wavelength must be positive")
    factor = 2.0 if ndim == 1 else 4.0
    return float(factor * aperture**2 / wavelength)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Scenario:
    """Physical constants and parameter bounds for one sensing setup.

    ``gain_sq`` is the squared channel-gain magnitude ``|beta|^2``; with the
    default ``tx_power = noise_power = 1`` it equals the received SNR, which is
    how configs normally specify it (only the product ``T P N |beta|^2 / sigma^2``
    ever enters the bounds).

    ``fresnel_rule`` selects which Fresnel-distance formula bounds ``r_min``
    (1 or 2); it defaults to ``ndim``.  The planar literature quotes both
    conventions, so the choice is explicit rather than hidden.
    """

    wavelength: float
    aperture: float
    n_antennas: int
    min_spacing: float
    r_min: float
    r_max: float
    u_max: float = 0.95
    v_max: float | None = None
    snapshots: int = 100
    tx_power: float = 1.0
    noise_power: float = 1.0
    gain_sq: float = 100.0
    ndim: int = 1
    fresnel_rule: int | None = None

    def __post_init__(self) -> None:
        if self.ndim not in (1, 2):
            raise ValueError("ndim must be 1 or 2")
        if self.wavelength <= 0 or self.aperture <= 0 or self.min_spacing <= 0:
            raise ValueError("wavelength, aperture and min_spacing must be positive")
        if self.n_antennas < 2:
            raise ValueError("need at least two antennas")
        if self.snapshots < 1:
            raise ValueError("snapshots must be >= 1")
        if self.tx_power <= 0 or self.gain_sq <= 0:
            raise ValueError("tx_power and gain_sq must be positive")
        if self.noise_power < 0:
            raise ValueError("noise_power must be nonnegative")
        if not 0.0 <= self.u_max < 1.0:
            raise ValueError("u_max must lie in [0, 1)")
        if self.ndim == 2:
            if self.v_max is None:
                raise ValueError("2D scenarios need v_max")
            if not 0.0 <= self.v_max < 1.0:
                raise ValueError("v_max must lie in [0, 1)")
        if self.fresnel_rule is not None and self.fresnel_rule not in (1, 2):
            raise ValueError("fresnel_rule must be 1 or 2")
        if self.ndim == 1:
            if (self.n_antennas - 1) * self.min_spacing > self.aperture + SPACING_TOL:
                raise ValueError(
                    f"infeasible 1D scenario: (N-1)*d = "
                    f"{(self.n_antennas - 1) * self.min_spacing:.6g} exceeds A = {self.aperture:.6g}"
                )
        else:
            # Constructive check: the sparse uniform grid must satisfy the spacing
            # (sufficient, not necessary, for N points to fit in the square).
            m = math.ceil(math.sqrt(self.n_antennas))
            if m > 1 and self.aperture / (m - 1) < self.min_spacing - SPACING_TOL:
                raise ValueError(
                    f"infeasible 2D scenario: a {m}x{m} grid over A x A has pitch "
                    f"{self.aperture / (m - 1):.6g} < d = {self.min_spacing:.6g}"
                )
        fres = self.fresnel_limit()
        rayl = rayleigh_distance(self.aperture, self.wavelength, self.ndim)
        if self.r_min < fres * (1.0 - 1e-9):
            raise ValueError(f"r_min = {self.r_min:.6g} is below the Fresnel distance {fres:.6g}")
        if self.r_max > rayl * (1.0 + 1e-9):
            raise ValueError(f"r_max = {self.r_max:.6g} is beyond the Rayleigh distance {rayl:.6g}")
        if self.r_min > self.r_max:
            raise ValueError("r_min must not exceed r_max")

    # -- derived quantities -------------------------------------------------

    def fresnel_limit(self) -> float:
        """Fresnel distance under this scenario's chosen rule."""
        rule = self.fresnel_rule if self.fresnel_rule is not None else self.ndim
        return fresnel_distance(self.aperture, self.wavelength, rule)

    def rayleigh_limit(self) -> float:
        return rayleigh_distance(self.aperture, self.wavelength, self.ndim)

    @property
    def snr(self) -> float:
        """Average received SNR ``P |beta|^2 / sigma^2``."""
        if self.noise_power == 0:
            return math.inf
        return self.tx_power * self.gain_sq / self.noise_power

    def to_dict(self) -> dict:
        d = {
            "wavelength": self.wavelength,
            "aperture": self.aperture,
            "antennas": self.n_antennas,
            "min_spacing": self.min_spacing,
            "r_min": self.r_min,
            "r_max": self.r_max,
            "u_max": self.u_max,
            "snapshots": self.snapshots,
            "tx_power": self.tx_power,
            "noise_power": self.noise_power,
            "gain_sq": self.gain_sq,
            "dimensions": self.ndim,
        }
        if self.v_max is not None:
            d["v_max"] = self.v_max
        if self.fresnel_rule is not None:
            d["fresnel_rule"] = self.fresnel_rule
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        return cls(
            wavelength=d["wavelength"],
            aperture=d["aperture"],
            n_antennas=d["antennas"],
            min_spacing=d["min_spacing"],
            r_min=d["r_min"],
            r_max=d["r_max"],
            u_max=d.get("u_max", 0.95),
            v_max=d.get("v_max"),
            snapshots=d.get("snapshots", 100),
            tx_power=d.get("tx_power", 1.0),
            noise_power=d.get("noise_power", 1.0),
            gain_sq=d.get("gain_sq", 100.0),
            ndim=d.get("dimensions", 1),
            fresnel_rule=d.get("fresnel_rule"),
        )

    def with_updates(self, **kw) -> "Scenario":
        return replace(self, **kw)


@dataclass(frozen=True, eq=False)
class ApvLinear:
    """Antenna position vector of a linear array: N ascending positions in meters."""

    x: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", _readonly(np.atleast_1d(self.x)))

    @property
    def n(self) -> int:
        return self.x.size

    def aperture_used(self) -> float:
        return float(self.x[-1] - self.x[0])


@dataclass(frozen=True, eq=False)
class ApmPlanar:
    """Antenna position matrix of a planar array: N (x, y) pairs in meters."""

    xy: np.ndarray

    def __post_init__(self) -> None:
        a = np.atleast_2d(np.array(self.xy, dtype=float))
        if a.shape[1] != 2:
            raise ValueError("planar geometry needs an (N, 2) array")
        object.__setattr__(self, "xy", _readonly(a))

    @property
    def n(self) -> int:
        return self.xy.shape[0]


Geometry = Union[ApvLinear, ApmPlanar]


@dataclass(frozen=True)
class TargetParams1D:
    """Target parameters for a linear array: direction cosine u and distance r."""

    u: float
    r: float

    def __post_init__(self) -> None:
        if not -1.0 < self.u < 1.0:
            raise ValueError("u must lie in (-1, 1)")
        if self.r <= 0:
            raise ValueError("r must be positive")

    def violations(self, sc: Scenario) -> list[str]:
        out = []
        if not 0.0 <= self.u <= sc.u_max:
            out.append(f"u={self.u:.6g} outside [0, {sc.u_max:.6g}]")
        if not sc.r_min <= self.r <= sc.r_max:
            out.append(f"r={self.r:.6g} outside [{sc.r_min:.6g}, {sc.r_max:.6g}]")
        return out


@dataclass(frozen=True)
class TargetParams2D:
    """Target parameters for a planar array: direction cosines (u, v) and distance r."""

    u: float
    v: float
    r: float

    def __post_init__(self) -> None:
        if self.u * self.u + self.v * self.v >= 1.0:
            raise ValueError("u^2 + v^2 must be < 1")
        if self.r <= 0:
            raise ValueError("r must be positive")

    def violations(self, sc: Scenario) -> list[str]:
        out = []
        if not 0.0 <= self.u <= sc.u_max:
            out.append(f"u={self.u:.6g} outside [0, {sc.u_max:.6g}]")
        vmax = sc.v_max if sc.v_max is not None else 0.0
        if not 0.0 <= self.v <= vmax:
            out.append(f"v={self.v:.6g} outside [0, {vmax:.6g}]")
        if not sc.r_min <= self.r <= sc.r_max:
            out.append(f"r={self.r:.6g} outside [{sc.r_min:.6g}, {sc.r_max:.6g}]")
        return out


TargetParams = Union[TargetParams1D, TargetParams2D]


# -- validators --------------------------------------------------------------


def validate_apv(apv: ApvLinear | np.ndarray, sc: Scenario) -> list[str]:
    """Check a linear geometry against the scenario; returns violation labels.

    Empty list means the geometry is feasible.  Indices in the labels are
    1-based.  Ordering is checked with exact comparison; spacing with a
    1e-12 m tolerance.
    """
    x = apv.x if isinstance(apv, ApvLinear) else np.atleast_1d(np.asarray(apv, dtype=float))
    out: list[str] = []
    if x.size < 2:
        out.append("count: need at least 2 antennas")
    if not np.all(np.isfinite(x)):
        out.append("finite: positions must be finite")
        return out
    for i, xi in enumerate(x, start=1):
        if xi < 0.0 or xi > sc.aperture:
            out.append(f"bounds({i})")
    for i in range(1, x.size):
        if not x[i] > x[i - 1]:
            out.append(f"order({i},{i + 1})")
        if x[i] - x[i - 1] < sc.min_spacing - SPACING_TOL:
            out.append(f"spacing({i},{i + 1})")
    return out


def validate_apm(apm: ApmPlanar | np.ndarray, sc: Scenario) -> list[str]:
    """Check a planar geometry: coordinates inside the square, pairwise distance >= d."""
    xy = apm.xy if isinstance(apm, ApmPlanar) else np.atleast_2d(np.asarray(apm, dtype=float))
    out: list[str] = []
    if xy.shape[0] < 2:
        out.append("count: need at least 2 antennas")
    if not np.all(np.isfinite(xy)):
        out.append("finite: positions must be finite")
        return out
    half = sc.aperture / 2.0
    for i, (xi, yi) in enumerate(xy, start=1):
        if abs(xi) > half or abs(yi) > half:
            out.append(f"bounds({i})")
    n = xy.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            if np.hypot(*(xy[i] - xy[j])) < sc.min_spacing - SPACING_TOL:
                out.append(f"spacing({i + 1},{j + 1})")
    return out


def validate(geom: Geometry, sc: Scenario) -> list[str]:
    if isinstance(geom, ApvLinear):
        return validate_apv(geom, sc)
    return validate_apm(geom, sc)


# -- benchmark layouts -------------------------------------------------------


def benchmark_geometry(kind: str, sc: Scenario) -> Geometry:
    """One of the four reference layouts.

    * ``ula``: half-``d``-pitched line from the origin, ``x_n = (n-1) d``;
    * ``sparse-ula``: full-aperture line, ``x_n = (n-1) A/(N-1)``;
    * ``upa``: square grid with pitch ``d``, centered on the origin;
    * ``sparse-upa``: square grid with pitch ``A/(sqrt(N)-1)``, centered.

    Planar kinds require ``N`` to be a perfect square.
    """
    kind = kind.lower()
    n = sc.n_antennas
    if kind == ULA:
        return ApvLinear(np.arange(n) * sc.min_spacing)
    if kind == SPARSE_ULA:
        return ApvLinear(np.arange(n) * (sc.aperture / (n - 1)))
    if kind in (UPA, SPARSE_UPA):
        m = math.isqrt(n)
        if m * m != n:
            raise ValueError(f"planar benchmark needs a perfect-square antenna count, got {n}")
        pitch = sc.min_spacing if kind == UPA else sc.aperture / (m - 1)
        c = (np.arange(m) - (m - 1) / 2.0) * pitch
        gx, gy = np.meshgrid(c, c, indexing="ij")
        return ApmPlanar(np.column_stack([gx.ravel(), gy.ravel()]))
    raise ValueError(f"unknown benchmark kind {kind!r}; expected one of {BENCHMARK_KINDS}")


# -- serialization -----------------------------------------------------------


def geometry_to_csv(geom: Geometry, header_lines: Sequence[str] = ()) -> str:
    """CSV text: one antenna per row (index, x [, y]); optional '#' header lines."""
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    if isinstance(geom, ApvLinear):
        w.writerow(["index", "x"])
        for i, xi in enumerate(geom.x, start=1):
            w.writerow([i, repr(float(xi))])
    else:
        w.writerow(["index", "x", "y"])
        for i, (xi, yi) in enumerate(geom.xy, start=1):
            w.writerow([i, repr(float(xi)), repr(float(yi))])
    return buf.getvalue()


def geometry_from_csv(text: str) -> Geometry:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise ValueError("empty geometry file")
    header = [c.strip().lower() for c in rows[0]]
    data = rows[1:] if header and header[0] == "index" else rows
    if header == ["index", "x", "y"] or (len(data[0]) == 3 and header[0] != "index"):
        xy = np.array([[float(r[-2]), float(r[-1])] for r in data])
        return ApmPlanar(xy)
    x = np.array([float(r[-1]) for r in data])
    return ApvLinear(x)


def random_feasible_apv(sc: Scenario, rng: np.random.Generator) -> ApvLinear:
    """Uniform draw from the feasible set {0 <= x_1 < ... < x_N <= A, spacing >= d}."""
    slack = sc.aperture - (sc.n_antennas - 1) * sc.min_spacing
    u = np.sort(rng.uniform(0.0, slack, sc.n_antennas))
    return ApvLinear(u + np.arange(sc.n_antennas) * sc.min_spacing)


def random_feasible_apm(
    sc: Scenario, rng: np.random.Generator, max_tries: int = 2000
) -> ApmPlanar:
    """Rejection-sampled planar layout with pairwise spacing >= d."""
    half = sc.aperture / 2.0
    pts: list[np.ndarray] = []
    tries = 0
    while len(pts) < sc.n_antennas:
        cand = rng.uniform(-half, half, 2)
        if all(np.hypot(*(cand - p)) >= sc.min_spacing for p in pts):
            pts.append(cand)
        tries += 1
        if tries > max_tries * sc.n_antennas:
            raise RuntimeError("could not sample a feasible planar layout; region too crowded")
    return ApmPlanar(np.array(pts))
