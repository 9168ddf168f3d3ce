"""Steering-vector correlation maps and lobe metrics.

The correlation between two parameter points is the normalized squared inner
product of their steering vectors, ``R = |alpha_ref^H alpha_query|^2 / N^2``;
it equals 1 at the reference point and is bounded by 1 everywhere
(Cauchy-Schwarz with unit-magnitude entries).  Sparse layouts show grating
lobes: secondary near-1 ridges that create estimation ambiguity.  Maps can be
projected from parameter space to the physical x-y plane for plotting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ApvLinear, Geometry, TargetParams
from .channel import steering_vector
from .music import GridSpec, _flat_grid, _steering_over_grid


def correlation_value(
    geom: Geometry, eta_ref: TargetParams, eta_query: TargetParams, wavelength: float
) -> float:
    """``|alpha(ref)^H alpha(query)|^2 / N^2`` for a single query point."""
    a = steering_vector(geom, eta_ref, wavelength)
    b = steering_vector(geom, eta_query, wavelength)
    n = a.size
    return float(np.abs(np.vdot(a, b)) ** 2) / (n * n)


@dataclass(frozen=True)
class CorrelationMap:
    """Correlation values on the axes' outer-product grid (row-major).

    ``cartesian`` holds scattered (x, y, R) triples when a plane projection
    was requested; interpolation onto rasters is left to plotting tools.
    """

    axes: dict[str, np.ndarray]
    values: np.ndarray
    reference: TargetParams
    cartesian: np.ndarray | None = None

    def argmax_point(self) -> dict[str, float]:
        idx = np.unravel_index(int(np.argmax(self.values)), self.values.shape)
        return {p: float(a[i]) for (p, a), i in zip(self.axes.items(), idx)}


def correlation_map(
    geom: Geometry,
    eta_ref: TargetParams,
    spec: GridSpec,
    wavelength: float,
    projection: str = "parameter",
) -> CorrelationMap:
    """Correlation against the reference point over a parameter grid.

    ``projection="cartesian"`` additionally maps each grid point to the
    physical plane: ``(r u, r sqrt(1 - u^2))`` for linear arrays, ``(r u, r v)``
    for planar ones.
    """
    if projection not in ("parameter", "cartesian"):
        raise ValueError("projection must be 'parameter' or 'cartesian'")
    ndim = 1 if isinstance(geom, ApvLinear) else 2
    flat = _flat_grid(spec, ndim)
    a_ref = steering_vector(geom, eta_ref, wavelength)
    n = a_ref.size
    size = next(iter(flat.values())).size
    vals = np.empty(size)
    chunk = max(1, (1 << 22) // n)
    for lo in range(0, size, chunk):
        hi = min(size, lo + chunk)
        aq = _steering_over_grid(geom, wavelength, {p: v[lo:hi] for p, v in flat.items()})
        vals[lo:hi] = np.abs(a_ref.conj() @ aq) ** 2 / (n * n)
    cartesian = None
    if projection == "cartesian":
        u, r = flat["u"], flat["r"]
        if ndim == 1:
            xy = np.column_stack([r * u, r * np.sqrt(1.0 - u**2)])
        else:
            xy = np.column_stack([r * u, r * flat["v"]])
        cartesian = np.column_stack([xy, vals])
    return CorrelationMap(
        axes=dict(spec.axes),
        values=vals.reshape(spec.shape()),
        reference=eta_ref,
        cartesian=cartesian,
    )


class AmbiguityError(RuntimeError):
    """The map has multiple global peaks; lobe structure is undefined."""

    def __init__(self, peaks: list[dict[str, float]]):
        super().__init__(f"map has {len(peaks)} tied global peaks")
        self.peaks = peaks


@dataclass(frozen=True)
class LobeMetrics:
    """Main-lobe widths per axis plus the strongest off-lobe value and locations."""

    peak_point: dict[str, float]
    peak_value: float
    main_lobe_width: dict[str, float]
    peak_sidelobe_level: float
    sidelobe_locations: list[dict[str, float]]

    def to_json_dict(self) -> dict:
        return {
            "peak_point": dict(self.peak_point),
            "peak_value": self.peak_value,
            "main_lobe_width": dict(self.main_lobe_width),
            "peak_sidelobe_level": self.peak_sidelobe_level,
            "sidelobe_locations": [dict(p) for p in self.sidelobe_locations],
        }


def _lobe_bounds_on_cut(cut: np.ndarray, peak_idx: int) -> tuple[int, int]:
    """Indices of the first local minima flanking the peak (plateaus break toward the peak)."""
    lo = peak_idx
    while lo > 0 and cut[lo - 1] < cut[lo]:
        lo -= 1
    hi = peak_idx
    while hi < cut.size - 1 and cut[hi + 1] < cut[hi]:
        hi += 1
    return lo, hi


def _width_at_half_power(axis: np.ndarray, cut: np.ndarray, peak_idx: int) -> float:
    """-3 dB width of the lobe around peak_idx, linearly interpolated between samples."""
    half = cut[peak_idx] / 2.0

    def cross(direction: int) -> float:
        i = peak_idx
        while 0 <= i + direction < cut.size and cut[i + direction] > half:
            i += direction
        j = i + direction
        if j < 0 or j >= cut.size:
            return float(axis[i])  # lobe clipped by the grid edge
        frac = (cut[i] - half) / (cut[i] - cut[j])
        return float(axis[i] + frac * (axis[j] - axis[i]))

    return abs(cross(+1) - cross(-1))


def lobe_metrics(cmap: CorrelationMap, tie_rel_tol: float = 1e-12) -> LobeMetrics:
    """Quantify the main lobe and strongest sidelobe of a correlation map.

    The main lobe is delimited per axis by the first local minima around the
    global peak (axis-aligned cuts through the peak); the peak sidelobe is the
    largest value outside the main-lobe box.  Multiple tied global peaks raise
    :class:`AmbiguityError`.
    """
    vals = cmap.values
    axes = list(cmap.axes.items())
    peak_flat = int(np.argmax(vals))
    peak_val = float(vals.ravel()[peak_flat])
    ties = np.argwhere(vals >= peak_val * (1.0 - tie_rel_tol))
    if len(ties) > 1:
        points = [
            {name: float(ax[i]) for (name, ax), i in zip(axes, idx)} for idx in ties
        ]
        raise AmbiguityError(points)
    peak_idx = np.unravel_index(peak_flat, vals.shape)

    widths: dict[str, float] = {}
    lobe_slices: list[slice] = []
    for dim, (name, ax) in enumerate(axes):
        cut_index: list = list(peak_idx)
        cut_index[dim] = slice(None)
        cut = vals[tuple(cut_index)]
        lo, hi = _lobe_bounds_on_cut(cut, peak_idx[dim])
        lobe_slices.append(slice(lo, hi + 1))
        widths[name] = _width_at_half_power(ax, cut, peak_idx[dim])

    outside = np.ones_like(vals, dtype=bool)
    outside[tuple(lobe_slices)] = False
    if not np.any(outside):
        return LobeMetrics(
            peak_point={name: float(ax[i]) for (name, ax), i in zip(axes, peak_idx)},
            peak_value=peak_val,
            main_lobe_width=widths,
            peak_sidelobe_level=0.0,
            sidelobe_locations=[],
        )
    side_val = float(vals[outside].max())
    side_idx = np.argwhere((vals >= side_val * (1.0 - tie_rel_tol)) & outside)
    return LobeMetrics(
        peak_point={name: float(ax[i]) for (name, ax), i in zip(axes, peak_idx)},
        peak_value=peak_val,
        main_lobe_width=widths,
        peak_sidelobe_level=side_val,
        sidelobe_locations=[
            {name: float(ax[i]) for (name, ax), i in zip(axes, idx)} for idx in side_idx
        ],
    )
