"""Antenna-position optimizers.

Two routes, matching the structure of the bounds in :mod:`nma.crb`:

* a closed-form layout for the single-parameter linear cases (``c11``/``c12``):
  split the antennas into two minimally-spaced groups pinned to the segment
  ends, which simultaneously maximizes ``var(x)`` and ``var(x^2)``;
* a discrete sampling-based sequential update for everything else: the
  movement region is discretized, and each antenna in turn is moved to the
  feasible grid point that maximizes the case objective while the others stay
  fixed.  Each per-antenna candidate set contains the incumbent position, so
  the objective never decreases and the sweep always terminates.

Objectives are "larger is better" (inverse worst-case bounds); geometries
with singular information evaluate to ``-inf`` and are never selected.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import crb
from .geometry import (
    SPACING_TOL,
    ApmPlanar,
    ApvLinear,
    Geometry,
    Scenario,
    TargetParams1D,
    TargetParams2D,
    validate_apm,
    validate_apv,
)

CONVERGE = 0  # sweeps=CONVERGE repeats passes until the objective stalls
_REL_IMPROVEMENT_TOL = 1e-10
_MAX_SWEEPS = 500


class InfeasibleInitError(ValueError):
    """Initial geometry violates bounds/spacing after snapping to the grid."""


@dataclass(frozen=True)
class SamplingGrid1D:
    """Uniform 1D candidate grid: points ``i * spacing`` for ``i = 0..m``.

    The zero endpoint is included so the grid can represent layouts with an
    antenna at the origin; ``spacing = aperture / m`` and the point count is
    ``m + 1``.
    """

    m: int
    spacing: float
    points: np.ndarray

    @classmethod
    def build(cls, aperture: float, m: int) -> "SamplingGrid1D":
        if m < 1:
            raise ValueError("grid needs at least one interval")
        spacing = aperture / m
        pts = np.arange(m + 1) * spacing
        pts.setflags(write=False)
        return cls(m=m, spacing=spacing, points=pts)


@dataclass(frozen=True)
class SamplingGrid2D:
    """Uniform square grid: points ``(k, l) * spacing`` for half-open symmetric indices.

    ``m`` is forced odd so the index set ``{-(m-1)/2 .. (m-1)/2}`` is symmetric
    about the plane center; all points lie strictly inside ``[-A/2, A/2]^2``.
    """

    m: int
    spacing: float
    points: np.ndarray  # (m*m, 2), row-major over (k, l)

    @classmethod
    def build(cls, aperture: float, m: int) -> "SamplingGrid2D":
        if m < 1:
            raise ValueError("grid needs at least one point per dimension")
        if m % 2 == 0:
            warnings.warn(f"2D sampling grid needs odd m; using m={m + 1}", stacklevel=2)
            m += 1
        spacing = aperture / m
        half = (m - 1) // 2
        c = np.arange(-half, half + 1) * spacing
        gx, gy = np.meshgrid(c, c, indexing="ij")
        pts = np.column_stack([gx.ravel(), gy.ravel()])
        pts.setflags(write=False)
        return cls(m=m, spacing=spacing, points=pts)


def default_grid_1d(sc: Scenario, m: int | None = None) -> SamplingGrid1D:
    return SamplingGrid1D.build(sc.aperture, m or 10 * (sc.n_antennas - 1) + 1)


def default_grid_2d(sc: Scenario, m: int | None = None) -> SamplingGrid2D:
    return SamplingGrid2D.build(sc.aperture, m or 10 * (sc.n_antennas - 1) + 1)


def closed_form_apv(sc: Scenario) -> ApvLinear:
    """Two-end-group layout: optimal for the single-parameter linear cases.

    ``x_n = (n-1) d`` for the first ``floor(N/2)`` antennas and
    ``x_n = A - (N-n) d`` for the rest.  When ``A = (N-1) d`` the groups meet
    and the layout degenerates to the uniform line.
    """
    n, a, d = sc.n_antennas, sc.aperture, sc.min_spacing
    if (n - 1) * d > a + SPACING_TOL:
        raise ValueError("infeasible scenario: antennas do not fit at minimum spacing")
    nl = n // 2
    left = np.arange(nl) * d
    right = a - np.arange(n - nl)[::-1] * d
    return ApvLinear(np.concatenate([left, right]))


# -- objectives ----------------------------------------------------------------


def _worst_point(case: str, sc: Scenario, known: Mapping[str, float] | None):
    return crb.worst_case_params(case, sc, known)


def objective(
    case: str, sc: Scenario, geom: Geometry | np.ndarray, known: Mapping[str, float] | None = None
) -> float:
    """Scalar case objective (larger is better) at the case's worst-case point.

    ``c11``/``c12``/``c22`` maximize an information term directly
    (``var(x)``, the distance information at the far bound, ``var(rho)``);
    the joint cases maximize the inverse of the worst-case bound sum.
    Singular geometries return ``-inf``.
    """
    p = _worst_point(case, sc, known)
    try:
        if case == "c11":
            m = crb.moments(geom if isinstance(geom, ApvLinear) else np.asarray(geom, float))
            return m.var("x")
        if case == "c12":
            x = geom.x if isinstance(geom, ApvLinear) else np.asarray(geom, float)
            m = crb.moments(x)
            c = (1.0 - p.u**2) / (2.0 * p.r**2)
            return c * c * m.var("xsq")
        if case == "c13":
            return 1.0 / sum(crb.crb_case13(sc, geom, p))
        if case == "c21":
            return 1.0 / sum(crb.crb_case21(sc, geom, p, p.r))
        if case == "c22":
            m = crb.moments(_xy(geom), p)
            return m.var("rho")
        if case == "c23":
            return 1.0 / sum(crb.crb_case23(sc, geom, p))
    except crb.SingularFimError:
        return float("-inf")
    raise ValueError(f"unknown case {case!r}")


def _xy(geom) -> np.ndarray:
    return geom.xy if isinstance(geom, ApmPlanar) else np.atleast_2d(np.asarray(geom, float))


def _candidate_objectives_1d(
    case: str,
    sc: Scenario,
    fixed: np.ndarray,
    cand: np.ndarray,
    p: TargetParams1D,
) -> np.ndarray:
    """Objective for each candidate position of one antenna, others fixed."""
    n = fixed.size + 1
    s1, s2 = fixed.sum(), (fixed**2).sum()
    s3, s4 = (fixed**3).sum(), (fixed**4).sum()
    e1 = (s1 + cand) / n
    e2 = (s2 + cand**2) / n
    e3 = (s3 + cand**3) / n
    e4 = (s4 + cand**4) / n
    var = e2 - e1 * e1
    if case == "c11":
        return var
    vart = e4 - e2 * e2
    if case == "c12":
        c = (1.0 - p.u**2) / (2.0 * p.r**2)
        return c * c * vart
    # joint case: inverse bound sum at the worst-case parameter point
    cov = e3 - e1 * e2
    det = var * vart - cov * cov
    k = crb.kappa(sc)
    u, r = p.u, p.r
    num_r = 4.0 * r**4 * var + 8.0 * u * r**3 * cov + 4.0 * u**2 * r**2 * vart
    with np.errstate(divide="ignore", invalid="ignore"):
        total = k * vart / det + k * num_r / ((1.0 - u**2) ** 2 * det)
        obj = np.where(det > crb.SINGULAR_REL_TOL * np.maximum(var * vart, 1e-300),
                       1.0 / total, -np.inf)
    return obj


def _coeffs_2d(xy: np.ndarray, p: TargetParams2D) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    x, y = xy[..., 0], xy[..., 1]
    proj = x * p.u + y * p.v
    return x + x * proj / p.r, y + y * proj / p.r, (x**2 + y**2 - proj**2) / (2.0 * p.r**2)


def _candidate_objectives_2d(
    case: str,
    sc: Scenario,
    fixed_xy: np.ndarray,
    cand_xy: np.ndarray,
    p: TargetParams2D,
) -> np.ndarray:
    n = fixed_xy.shape[0] + 1
    fx, fp, fr = _coeffs_2d(fixed_xy, p)
    cx, cp, cr = _coeffs_2d(cand_xy, p)
    sx, sp, sr = fx.sum(), fp.sum(), fr.sum()
    sxx, spp, srr = (fx**2).sum(), (fp**2).sum(), (fr**2).sum()
    sxp, sxr, spr = (fx * fp).sum(), (fx * fr).sum(), (fp * fr).sum()
    mx, mp, mr = (sx + cx) / n, (sp + cp) / n, (sr + cr) / n
    vx = (sxx + cx * cx) / n - mx * mx
    vp = (spp + cp * cp) / n - mp * mp
    if case == "c22":
        vr = (srr + cr * cr) / n - mr * mr
        return vr
    cxp = (sxp + cx * cp) / n - mx * mp
    k = crb.kappa(sc)
    with np.errstate(divide="ignore", invalid="ignore"):
        if case == "c21":
            det = vx * vp - cxp * cxp
            return np.where(det > crb.SINGULAR_REL_TOL * np.maximum(vx * vp, 1e-300),
                            det / (k * (vx + vp)), -np.inf)
        vr = (srr + cr * cr) / n - mr * mr
        cxr = (sxr + cx * cr) / n - mx * mr
        cpr = (spr + cp * cr) / n - mp * mr
        cu, cv, crr_, det = crb._inv3_diagonal(vx, vp, vr, cxp, cxr, cpr)
        return np.where(det > crb.SINGULAR_REL_TOL * np.maximum(vx * vp * vr, 1e-300),
                        det / (k * (cu + cv + crr_)), -np.inf)


# -- feasible candidate sets -----------------------------------------------------


def feasible_points_1d(
    grid: SamplingGrid1D, fixed_positions: Sequence[float] | np.ndarray, min_spacing: float
) -> np.ndarray:
    """Grid points at distance >= d (with round-off tolerance) from every fixed position."""
    pts = grid.points
    mask = np.ones(pts.size, dtype=bool)
    for f in np.atleast_1d(np.asarray(fixed_positions, dtype=float)):
        mask &= np.abs(pts - f) >= min_spacing - SPACING_TOL
    return pts[mask]


def feasible_points_2d(
    grid: SamplingGrid2D, fixed_positions: np.ndarray, min_spacing: float
) -> np.ndarray:
    pts = grid.points
    mask = np.ones(pts.shape[0], dtype=bool)
    dmin2 = (min_spacing - SPACING_TOL) ** 2
    for f in np.atleast_2d(np.asarray(fixed_positions, dtype=float)):
        mask &= (pts[:, 0] - f[0]) ** 2 + (pts[:, 1] - f[1]) ** 2 >= dmin2
    return pts[mask]


# -- traces ------------------------------------------------------------------------


@dataclass(frozen=True)
class TraceStep:
    sweep: int
    antenna: int
    position: tuple[float, ...]
    objective: float


@dataclass(frozen=True)
class OptimizationTrace:
    """Full per-step log of a sampling run plus the final geometry."""

    case: str
    steps: tuple[TraceStep, ...]
    geometry: Geometry
    converged: bool
    sweeps_run: int
    grid_m: int
    grid_spacing: float

    def objectives(self) -> np.ndarray:
        return np.array([s.objective for s in self.steps])

    def check_monotone(self, rel_tol: float = 1e-9) -> bool:
        """True when per-step objectives never decrease beyond float round-off."""
        vals = self.objectives()
        if vals.size < 2:
            return True
        drops = np.diff(vals)
        scale = np.maximum(np.abs(vals[:-1]), 1e-300)
        return bool(np.all(drops >= -rel_tol * scale))

    def to_json_dict(self) -> dict:
        geom = self.geometry
        if isinstance(geom, ApvLinear):
            gdict = {"kind": "linear", "x": [float(v) for v in geom.x]}
        else:
            gdict = {"kind": "planar", "xy": [[float(a), float(b)] for a, b in geom.xy]}
        return {
            "case": self.case,
            "converged": self.converged,
            "sweeps_run": self.sweeps_run,
            "grid": {"m": self.grid_m, "spacing": self.grid_spacing},
            "steps": [
                {
                    "sweep": s.sweep,
                    "antenna": s.antenna,
                    "position": list(s.position),
                    "objective": s.objective,
                }
                for s in self.steps
            ],
            "geometry": gdict,
        }


def _snap_1d(init: np.ndarray, grid: SamplingGrid1D) -> np.ndarray:
    idx = np.clip(np.round(init / grid.spacing).astype(int), 0, grid.m)
    return grid.points[idx].astype(float)


def _snap_2d(init: np.ndarray, grid: SamplingGrid2D) -> np.ndarray:
    half = (grid.m - 1) // 2
    idx = np.clip(np.round(init / grid.spacing).astype(int), -half, half)
    return idx.astype(float) * grid.spacing


def _sweep_order(n: int, order: str, rng: np.random.Generator | None) -> np.ndarray:
    if order == "ascending":
        return np.arange(n)
    if order == "random":
        if rng is None:
            raise ValueError("random update order needs an rng")
        return rng.permutation(n)
    raise ValueError(f"unknown update order {order!r}")


def optimize_sampling_1d(
    case: str,
    sc: Scenario,
    init: ApvLinear | np.ndarray,
    grid: SamplingGrid1D | None = None,
    sweeps: int = 1,
    order: str = "ascending",
    rng: np.random.Generator | None = None,
    known: Mapping[str, float] | None = None,
) -> OptimizationTrace:
    """Sequential per-antenna exhaustive update on a 1D grid.

    One sweep updates antennas in index order (or a random permutation), each
    to the feasible grid point maximizing the case objective; ties resolve to
    the lowest grid index.  ``sweeps=CONVERGE`` repeats sweeps until the
    objective improves by less than 1e-10 relative.  The returned geometry is
    sorted ascending.
    """
    if case not in crb.CASES_1D:
        raise ValueError(f"{case!r} is not a linear-array case")
    grid = grid or default_grid_1d(sc)
    x0 = init.x if isinstance(init, ApvLinear) else np.asarray(init, dtype=float)
    x = _snap_1d(x0, grid)
    bad = validate_apv(np.sort(x), sc)
    if bad:
        raise InfeasibleInitError(f"init violates constraints after grid snapping: {bad}")
    p = _worst_point(case, sc, known)

    steps: list[TraceStep] = []
    n = x.size
    target_sweeps = _MAX_SWEEPS if sweeps == CONVERGE else sweeps
    prev_obj = objective(case, sc, np.sort(x), known)
    converged = False
    sweeps_run = 0
    for sweep in range(target_sweeps):
        for antenna in _sweep_order(n, order, rng):
            fixed = np.delete(x, antenna)
            cand = feasible_points_1d(grid, fixed, sc.min_spacing)
            if cand.size == 0:
                steps.append(TraceStep(sweep, int(antenna), (float(x[antenna]),), prev_obj))
                continue
            objs = _candidate_objectives_1d(case, sc, fixed, cand, p)
            j = int(np.argmax(objs))
            x[antenna] = cand[j]
            steps.append(TraceStep(sweep, int(antenna), (float(cand[j]),), float(objs[j])))
        sweeps_run = sweep + 1
        new_obj = steps[-1].objective
        if new_obj - prev_obj <= _REL_IMPROVEMENT_TOL * max(abs(prev_obj), 1e-300):
            converged = True
            if sweeps == CONVERGE:
                break
        prev_obj = new_obj
    return OptimizationTrace(
        case=case,
        steps=tuple(steps),
        geometry=ApvLinear(np.sort(x)),
        converged=converged,
        sweeps_run=sweeps_run,
        grid_m=grid.m,
        grid_spacing=grid.spacing,
    )


def optimize_sampling_2d(
    case: str,
    sc: Scenario,
    init: ApmPlanar | np.ndarray,
    grid: SamplingGrid2D | None = None,
    sweeps: int = 1,
    order: str = "ascending",
    rng: np.random.Generator | None = None,
    known: Mapping[str, float] | None = None,
) -> OptimizationTrace:
    """Planar analog of :func:`optimize_sampling_1d` with Euclidean spacing.

    Feasibility over the (large) grid is tracked with a per-point blocker
    count that is updated incrementally as antennas move, so each step costs a
    few passes over the grid instead of one per fixed antenna.
    """
    if case not in crb.CASES_2D:
        raise ValueError(f"{case!r} is not a planar-array case")
    grid = grid or default_grid_2d(sc)
    xy0 = init.xy if isinstance(init, ApmPlanar) else np.atleast_2d(np.asarray(init, float))
    xy = _snap_2d(xy0, grid)
    bad = validate_apm(xy, sc)
    if bad:
        raise InfeasibleInitError(f"init violates constraints after grid snapping: {bad}")
    p = _worst_point(case, sc, known)

    gx, gy = grid.points[:, 0], grid.points[:, 1]
    dmin2 = (sc.min_spacing - SPACING_TOL) ** 2

    def disk(pos: np.ndarray) -> np.ndarray:
        return (gx - pos[0]) ** 2 + (gy - pos[1]) ** 2 < dmin2

    block = np.zeros(grid.points.shape[0], dtype=np.int32)
    for row in xy:
        block += disk(row)

    steps: list[TraceStep] = []
    n = xy.shape[0]
    target_sweeps = _MAX_SWEEPS if sweeps == CONVERGE else sweeps
    prev_obj = objective(case, sc, ApmPlanar(xy), known)
    converged = False
    sweeps_run = 0
    for sweep in range(target_sweeps):
        for antenna in _sweep_order(n, order, rng):
            own = disk(xy[antenna])
            feas = block == own  # zero blockers besides (possibly) itself
            if not np.any(feas):
                steps.append(
                    TraceStep(sweep, int(antenna), tuple(map(float, xy[antenna])), prev_obj)
                )
                continue
            cand = grid.points[feas]
            fixed = np.delete(xy, antenna, axis=0)
            objs = _candidate_objectives_2d(case, sc, fixed, cand, p)
            j = int(np.argmax(objs))
            new = cand[j]
            if not np.array_equal(new, xy[antenna]):
                block -= own
                xy[antenna] = new
                block += disk(new)
            steps.append(TraceStep(sweep, int(antenna), tuple(map(float, new)), float(objs[j])))
        sweeps_run = sweep + 1
        new_obj = steps[-1].objective
        if new_obj - prev_obj <= _REL_IMPROVEMENT_TOL * max(abs(prev_obj), 1e-300):
            converged = True
            if sweeps == CONVERGE:
                break
        prev_obj = new_obj
    return OptimizationTrace(
        case=case,
        steps=tuple(steps),
        geometry=ApmPlanar(xy),
        converged=converged,
        sweeps_run=sweeps_run,
        grid_m=grid.m,
        grid_spacing=grid.spacing,
    )


def symmetry_defect(apm: ApmPlanar, reduce: str = "mean") -> float:
    """Per-antenna distance between the layout and its x<->y mirror, after optimal matching.

    Zero for layouts symmetric under coordinate swap; used to quantify the
    near-symmetry of optimized angle-estimation layouts.  ``reduce`` selects
    the mean (defect per antenna) or the max over antennas.
    """
    from scipy.optimize import linear_sum_assignment

    a = apm.xy
    b = a[:, ::-1]
    cost = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=-1)
    rows, cols = linear_sum_assignment(cost)
    matched = cost[rows, cols]
    return float(matched.mean() if reduce == "mean" else matched.max())
