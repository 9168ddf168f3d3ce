"""Estimation bounds for near-field angle/distance sensing.

Six cases are covered, three per array dimensionality:

========  =========================  ==============================
case      unknown parameters         known parameters
========  =========================  ==============================
``c11``   u                          r (linear array)
``c12``   r                          u (linear array)
``c13``   u, r                       --
``c21``   u, v                       r (planar array)
``c22``   r                          u, v (planar array)
``c23``   u, v, r                    --
========  =========================  ==============================

Every bound is ``kappa`` times an inverse (co)variance expression of the
phase-gradient coefficient vectors from :mod:`nma.channel`: the Fisher
information matrix of the unknown subset equals ``(1/kappa) * M`` with ``M``
the population covariance matrix of the corresponding coefficient vectors.
The closed forms below expand the small matrix inverses explicitly; the
projector-based :func:`fim_oracle` rebuilds the same information matrix from
the complex derivative vectors without using any of those expansions, and is
the ground truth each closed form is tested against.

All moments are population moments (divide by N).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import channel
from .geometry import (
    ApmPlanar,
    ApvLinear,
    Geometry,
    Scenario,
    TargetParams,
    TargetParams1D,
    TargetParams2D,
)

CASES_1D = ("c11", "c12", "c13")
CASES_2D = ("c21", "c22", "c23")
CASES = CASES_1D + CASES_2D

# A moment matrix is treated as singular when its determinant falls below
# this fraction of the product of its diagonal entries.
SINGULAR_REL_TOL = 1e-12
# fim_oracle additionally rejects information matrices with condition numbers
# beyond this (numerically meaningless inverses).
MAX_CONDITION = 1e12


class SingularFimError(RuntimeError):
    """The Fisher information is (numerically) singular for this geometry/parameters."""

    def __init__(self, msg: str, condition_number: float | None = None):
        super().__init__(msg)
        self.condition_number = condition_number


def case_ndim(case: str) -> int:
    if case in CASES_1D:
        return 1
    if case in CASES_2D:
        return 2
    raise ValueError(f"unknown case {case!r}; expected one of {CASES}")


def case_unknowns(case: str) -> tuple[str, ...]:
    return {
        "c11": ("u",),
        "c12": ("r",),
        "c13": ("u", "r"),
        "c21": ("u", "v"),
        "c22": ("r",),
        "c23": ("u", "v", "r"),
    }[case]


def kappa(sc: Scenario) -> float:
    """Bound scale factor ``sigma^2 lambda^2 / (8 pi^2 T P N |beta|^2)``."""
    if sc.noise_power <= 0:
        raise ValueError("kappa needs a positive noise power")
    return sc.noise_power * sc.wavelength**2 / (
        8.0 * np.pi**2 * sc.snapshots * sc.tx_power * sc.n_antennas * sc.gain_sq
    )


# -- moments ------------------------------------------------------------------


@dataclass(frozen=True)
class MomentSet:
    """Population means, variances and pairwise covariances of named vectors."""

    means: Mapping[str, float]
    variances: Mapping[str, float]
    covariances: Mapping[tuple[str, str], float]
    seconds: Mapping[str, float]  # raw second moments, used for singularity scales

    def mean(self, a: str) -> float:
        return self.means[a]

    def var(self, a: str) -> float:
        return self.variances[a]

    def cov(self, a: str, b: str) -> float:
        if a == b:
            return self.variances[a]
        return self.covariances[(a, b) if (a, b) in self.covariances else (b, a)]

    def cauchy_schwarz_violations(self, tol: float = 1e-9) -> list[tuple[str, str]]:
        out = []
        for (a, b), c in self.covariances.items():
            bound = math.sqrt(max(self.variances[a], 0.0) * max(self.variances[b], 0.0))
            if abs(c) > bound * (1.0 + tol) + 1e-300:
                out.append((a, b))
        return out


def _moments_from_vectors(vectors: Mapping[str, np.ndarray]) -> MomentSet:
    names = list(vectors)
    means = {a: float(np.mean(vectors[a])) for a in names}
    seconds = {a: float(np.mean(vectors[a] ** 2)) for a in names}
    variances = {a: seconds[a] - means[a] ** 2 for a in names}
    covariances = {}
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            covariances[(a, b)] = float(np.mean(vectors[a] * vectors[b])) - means[a] * means[b]
    return MomentSet(means, variances, covariances, seconds)


def moments(geom: Geometry | np.ndarray, eta: TargetParams | None = None) -> MomentSet:
    """Moment set of the coefficient vectors relevant to the geometry's cases.

    Linear arrays yield moments of ``x`` and ``xsq`` (elementwise square);
    planar arrays yield moments of ``xi``, ``pi`` and ``rho`` and require
    ``eta``.
    """
    if isinstance(geom, ApvLinear) or (
        not isinstance(geom, ApmPlanar) and np.asarray(geom).ndim == 1
    ):
        x = geom.x if isinstance(geom, ApvLinear) else np.asarray(geom, dtype=float)
        return _moments_from_vectors({"x": x, "xsq": x**2})
    if eta is None:
        raise ValueError("planar moments need target parameters")
    apm = geom if isinstance(geom, ApmPlanar) else ApmPlanar(np.asarray(geom, dtype=float))
    coeffs = channel.deriv_coeffs(apm, eta)
    return _moments_from_vectors({"xi": coeffs.xi, "pi": coeffs.pi, "rho": coeffs.rho})


def _as_x(geom) -> np.ndarray:
    return geom.x if isinstance(geom, ApvLinear) else np.atleast_1d(np.asarray(geom, dtype=float))


def _as_xy(geom) -> np.ndarray:
    return geom.xy if isinstance(geom, ApmPlanar) else np.atleast_2d(np.asarray(geom, dtype=float))


# -- 1D closed forms -----------------------------------------------------------


def _xmoments(x: np.ndarray) -> tuple[float, float, float, float, float]:
    """(var(x), var(xsq), cov(x, xsq), E[x^2], E[x^4])."""
    xsq = x * x
    mx, mxsq = float(np.mean(x)), float(np.mean(xsq))
    ex2, ex4 = mxsq, float(np.mean(xsq * xsq))
    var = ex2 - mx * mx
    vart = ex4 - mxsq * mxsq
    cov = float(np.mean(x * xsq)) - mx * mxsq
    return var, vart, cov, ex2, ex4


def _guard_scalar(f: float, scale: float, what: str) -> None:
    if not f > SINGULAR_REL_TOL * max(scale, 1e-300):
        raise SingularFimError(f"singular Fisher information: {what} = {f:.3e}")


def crb_case11(sc: Scenario, apv, u: float, r_star: float) -> float:
    """Angle bound with known distance: ``kappa / var(zeta_u)``."""
    var, vart, cov, ex2, _ = _xmoments(_as_x(apv))
    f_u = var + 2.0 * u / r_star * cov + (u / r_star) ** 2 * vart
    _guard_scalar(f_u, ex2, "var(zeta_u)")
    return kappa(sc) / f_u


def crb_case12(sc: Scenario, apv, u_star: float, r: float) -> float:
    """Distance bound with known angle: ``kappa / (((1-u*^2)/(2r^2))^2 var(xsq))``."""
    _, vart, _, _, ex4 = _xmoments(_as_x(apv))
    c = (1.0 - u_star**2) / (2.0 * r**2)
    f_r = c * c * vart
    _guard_scalar(f_r, c * c * ex4, "var(zeta_r)")
    return kappa(sc) / f_r


def crb_case13(sc: Scenario, apv, eta: TargetParams1D) -> tuple[float, float]:
    """Joint angle/distance bounds (2x2 inverse diagonal).

    The angle bound is parameter-free; the distance bound is evaluated at
    ``eta``.
    """
    var, vart, cov, ex2, ex4 = _xmoments(_as_x(apv))
    det = var * vart - cov * cov
    if not det > SINGULAR_REL_TOL * max(var * vart, ex2 * ex4 * SINGULAR_REL_TOL, 1e-300):
        raise SingularFimError(f"singular joint Fisher information: det = {det:.3e}")
    k = kappa(sc)
    crb_u = k * vart / det
    u, r = eta.u, eta.r
    num = 4.0 * r**4 * var + 8.0 * u * r**3 * cov + 4.0 * u**2 * r**2 * vart
    crb_r = k * num / ((1.0 - u**2) ** 2 * det)
    return crb_u, crb_r


# -- 2D closed forms -----------------------------------------------------------


def crb_case21(sc: Scenario, apm, eta: TargetParams2D, r_star: float) -> tuple[float, float]:
    """Direction-cosine pair bounds with known distance (Schur complements)."""
    at = TargetParams2D(eta.u, eta.v, r_star)
    m = moments(_as_xy(apm), at)
    vx, vp, cxp = m.var("xi"), m.var("pi"), m.cov("xi", "pi")
    det = vx * vp - cxp * cxp
    if not det > SINGULAR_REL_TOL * max(vx * vp, 1e-300):
        raise SingularFimError(f"singular angle Fisher information: det = {det:.3e}")
    k = kappa(sc)
    return k * vp / det, k * vx / det


def crb_case22(sc: Scenario, apm, u_star: float, v_star: float, r: float) -> float:
    """Distance bound with known angles: ``kappa / var(rho)``."""
    m = moments(_as_xy(apm), TargetParams2D(u_star, v_star, r))
    vr = m.var("rho")
    _guard_scalar(vr, m.seconds["rho"], "var(rho)")
    return kappa(sc) / vr


def _inv3_diagonal(
    vx: float, vp: float, vr: float, cxp: float, cxr: float, cpr: float
) -> tuple[float, float, float, float]:
    """Diagonal cofactors and determinant of the 3x3 covariance matrix of (xi, pi, rho)."""
    det = (
        vx * vp * vr
        + 2.0 * cxp * cxr * cpr
        - vx * cpr * cpr
        - vp * cxr * cxr
        - vr * cxp * cxp
    )
    return vp * vr - cpr * cpr, vx * vr - cxr * cxr, vx * vp - cxp * cxp, det


def crb_case23(
    sc: Scenario, apm, eta: TargetParams2D
) -> tuple[float, float, float]:
    """Joint (u, v, r) bounds: diagonal of the 3x3 moment-matrix inverse times kappa."""
    m = moments(_as_xy(apm), eta)
    vx, vp, vr = m.var("xi"), m.var("pi"), m.var("rho")
    cxp, cxr, cpr = m.cov("xi", "pi"), m.cov("xi", "rho"), m.cov("pi", "rho")
    cu, cv, cr, det = _inv3_diagonal(vx, vp, vr, cxp, cxr, cpr)
    if not det > SINGULAR_REL_TOL * max(vx * vp * vr, 1e-300):
        raise SingularFimError(f"singular joint Fisher information: det = {det:.3e}")
    k = kappa(sc)
    return k * cu / det, k * cv / det, k * cr / det


# -- oracle ---------------------------------------------------------------------


def fim_oracle(
    sc: Scenario,
    geom: Geometry,
    eta: TargetParams,
    unknowns: Sequence[str] | None = None,
) -> np.ndarray:
    """Full CRB matrix from the projector form of the Fisher information.

    Builds the derivative matrix Psi column-by-column from the analytic
    derivative vectors, forms ``FIM = (2 T P / sigma^2) Re{Psi^H (I - h h^H /
    (N |beta|^2)) Psi}`` and inverts it.  This path never touches the
    moment-based closed forms, which makes it an independent check of every
    one of them.
    """
    if unknowns is None:
        unknowns = ("u", "r") if isinstance(geom, ApvLinear) else ("u", "v", "r")
    psis = channel.deriv_vectors(sc, geom, eta)
    try:
        psi = np.column_stack([psis[p] for p in unknowns])
    except KeyError as e:
        raise ValueError(f"unknown parameter {e} for this geometry") from e
    h = channel.channel_vector(sc, geom, eta)
    n = h.size
    if n < 2:
        raise SingularFimError("a single-antenna array carries no angular information")
    proj = psi - h[:, None] * (h.conj() @ psi)[None, :] / (n * sc.gain_sq)
    fim = (2.0 * sc.snapshots * sc.tx_power / sc.noise_power) * np.real(psi.conj().T @ proj)
    cond = float(np.linalg.cond(fim))
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularFimError(
            f"numerically singular Fisher information (condition number {cond:.3e})",
            condition_number=cond,
        )
    return np.linalg.inv(fim)


# -- worst-case parameter points -------------------------------------------------


def worst_case_params(
    case: str, sc: Scenario, known: Mapping[str, float] | None = None
) -> TargetParams:
    """Analytic worst-case parameter point for each case.

    Angle-only estimation is worst at broadside; distance-only at the far
    bound; joint estimation nearest end-fire and farthest.  ``known`` fills
    the parameters the estimator knows (defaults: ``r = r_max``,
    ``u = v = 0``); they do not affect the worst-case coordinates themselves.
    """
    known = dict(known or {})
    r_known = float(known.get("r", sc.r_max))
    u_known = float(known.get("u", 0.0))
    v_known = float(known.get("v", 0.0))
    if case == "c11":
        return TargetParams1D(u=0.0, r=r_known)
    if case == "c12":
        return TargetParams1D(u=u_known, r=sc.r_max)
    if case == "c13":
        return TargetParams1D(u=sc.u_max, r=sc.r_max)
    if case == "c21":
        return TargetParams2D(u=0.0, v=0.0, r=r_known)
    if case == "c22":
        return TargetParams2D(u=u_known, v=v_known, r=sc.r_max)
    if case == "c23":
        return TargetParams2D(u=0.0, v=sc.v_max or 0.0, r=sc.r_max)
    raise ValueError(f"unknown case {case!r}")


def worst_case_crb(
    case: str,
    sc: Scenario,
    geom: Geometry,
    known: Mapping[str, float] | None = None,
) -> dict[str, float]:
    """Closed-form bounds per unknown parameter at the analytic worst-case point."""
    p = worst_case_params(case, sc, known)
    if case == "c11":
        return {"u": crb_case11(sc, geom, p.u, p.r)}
    if case == "c12":
        return {"r": crb_case12(sc, geom, p.u, p.r)}
    if case == "c13":
        cu, cr = crb_case13(sc, geom, p)
        return {"u": cu, "r": cr}
    if case == "c21":
        cu, cv = crb_case21(sc, geom, p, p.r)
        return {"u": cu, "v": cv}
    if case == "c22":
        return {"r": crb_case22(sc, geom, p.u, p.v, p.r)}
    cu, cv, cr = crb_case23(sc, geom, p)
    return {"u": cu, "v": cv, "r": cr}


# -- vectorized worst-case objective surfaces ------------------------------------


def _surface_1d(case: str, sc: Scenario, x: np.ndarray, u, r) -> np.ndarray:
    """Case metric (CRB or CRB sum) on broadcastable (u, r) arrays; NaN marks singular."""
    var, vart, cov, ex2, ex4 = _xmoments(x)
    k = kappa(sc)
    u = np.asarray(u, dtype=float)
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        if case == "c11":
            f = var + 2.0 * u / r * cov + (u / r) ** 2 * vart
            out = np.where(f > SINGULAR_REL_TOL * ex2, k / f, np.nan)
        elif case == "c12":
            c = (1.0 - u**2) / (2.0 * r**2)
            f = c * c * vart
            out = np.where(f > SINGULAR_REL_TOL * c * c * ex4, k / f, np.nan)
        else:  # c13 sum
            det = var * vart - cov * cov
            if not det > SINGULAR_REL_TOL * max(var * vart, 1e-300):
                return np.full(np.broadcast(u, r).shape, np.nan)
            crb_u = k * vart / det
            num = 4.0 * r**4 * var + 8.0 * u * r**3 * cov + 4.0 * u**2 * r**2 * vart
            out = crb_u + k * num / ((1.0 - u**2) ** 2 * det)
    return out


def _surface_2d(
    case: str, sc: Scenario, xy: np.ndarray, u, v, r, chunk: int = 1 << 16
) -> np.ndarray:
    """Case metric on flat (u, v, r) arrays of equal length; NaN marks singular cells."""
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    r = np.asarray(r, dtype=float).ravel()
    x, y = xy[:, 0], xy[:, 1]
    k = kappa(sc)
    out = np.empty(u.size)
    for lo in range(0, u.size, max(1, chunk // max(1, x.size))):
        hi = min(u.size, lo + max(1, chunk // max(1, x.size)))
        uu, vv, rr = u[lo:hi, None], v[lo:hi, None], r[lo:hi, None]
        proj = x[None, :] * uu + y[None, :] * vv
        xi = x[None, :] + x[None, :] * proj / rr
        pi = y[None, :] + y[None, :] * proj / rr
        rho = (x[None, :] ** 2 + y[None, :] ** 2 - proj**2) / (2.0 * rr**2)
        def _var(a):
            return (a * a).mean(axis=1) - a.mean(axis=1) ** 2
        def _cov(a, b):
            return (a * b).mean(axis=1) - a.mean(axis=1) * b.mean(axis=1)
        vx, vp, vr = _var(xi), _var(pi), _var(rho)
        with np.errstate(divide="ignore", invalid="ignore"):
            if case == "c21":
                cxp = _cov(xi, pi)
                det = vx * vp - cxp * cxp
                val = np.where(det > SINGULAR_REL_TOL * np.maximum(vx * vp, 1e-300),
                               k * (vx + vp) / det, np.nan)
            elif case == "c22":
                val = np.where(vr > SINGULAR_REL_TOL * (rho * rho).mean(axis=1), k / vr, np.nan)
            else:  # c23 sum
                cxp, cxr, cpr = _cov(xi, pi), _cov(xi, rho), _cov(pi, rho)
                cu, cv_, cr, det = _inv3_diagonal(vx, vp, vr, cxp, cxr, cpr)
                val = np.where(det > SINGULAR_REL_TOL * np.maximum(vx * vp * vr, 1e-300),
                               k * (cu + cv_ + cr) / det, np.nan)
        out[lo:hi] = val
    return out


@dataclass(frozen=True)
class SearchResult:
    params: TargetParams
    value: float
    skipped_cells: int
    grid_shape: tuple[int, ...]


def worst_case_search(
    case: str,
    sc: Scenario,
    geom: Geometry,
    resolution: int,
    known: Mapping[str, float] | None = None,
) -> SearchResult:
    """Exhaustive grid argmax of the case's worst-case metric over the feasible box.

    Validates :func:`worst_case_params` empirically.  Grid evaluation is
    vectorized; ties resolve to the lowest row-major grid index.  Cells with
    singular information (or outside ``u^2 + v^2 < 1``) are skipped and
    counted.
    """
    if resolution < 2:
        raise ValueError("need at least 2 grid points per searched dimension")
    known = dict(known or {})
    ndim = case_ndim(case)
    unknowns = case_unknowns(case)
    axes = {}
    for p in unknowns:
        if p == "u":
            axes[p] = np.linspace(0.0, sc.u_max, resolution)
        elif p == "v":
            axes[p] = np.linspace(0.0, sc.v_max or 0.0, resolution)
        else:
            axes[p] = np.linspace(sc.r_min, sc.r_max, resolution)

    if ndim == 1:
        x = _as_x(geom)
        r_known = float(known.get("r", sc.r_max))
        u_known = float(known.get("u", 0.0))
        if case == "c11":
            vals = _surface_1d(case, sc, x, axes["u"], r_known)
        elif case == "c12":
            vals = _surface_1d(case, sc, x, u_known, axes["r"])
        else:
            uu, rr = np.meshgrid(axes["u"], axes["r"], indexing="ij")
            vals = _surface_1d(case, sc, x, uu, rr)
    else:
        xy = _as_xy(geom)
        r_known = float(known.get("r", sc.r_max))
        if case == "c21":
            uu, vv = np.meshgrid(axes["u"], axes["v"], indexing="ij")
            vals = _surface_2d(case, sc, xy, uu, vv, np.full(uu.size, r_known)).reshape(uu.shape)
            vals[uu**2 + vv**2 >= 1.0] = np.nan
        elif case == "c22":
            u_known = float(known.get("u", 0.0))
            v_known = float(known.get("v", 0.0))
            rg = axes["r"]
            vals = _surface_2d(case, sc, xy, np.full(rg.size, u_known),
                               np.full(rg.size, v_known), rg)
        else:
            uu, vv, rr = np.meshgrid(axes["u"], axes["v"], axes["r"], indexing="ij")
            vals = _surface_2d(case, sc, xy, uu, vv, rr).reshape(uu.shape)
            vals[uu**2 + vv**2 >= 1.0] = np.nan

    vals = np.asarray(vals)
    skipped = int(np.count_nonzero(~np.isfinite(vals)))
    if skipped == vals.size:
        raise SingularFimError("every grid cell is singular for this geometry")
    flat = np.where(np.isfinite(vals), vals, -np.inf).ravel()
    best = int(np.argmax(flat))
    idx = np.unravel_index(best, vals.shape) if vals.ndim > 1 else (best,)
    point = {p: float(axes[p][i]) for p, i in zip(unknowns, idx)}
    if ndim == 1:
        params = TargetParams1D(
            u=point.get("u", float(known.get("u", 0.0))),
            r=point.get("r", float(known.get("r", sc.r_max))),
        )
    else:
        params = TargetParams2D(
            u=point.get("u", float(known.get("u", 0.0))),
            v=point.get("v", float(known.get("v", 0.0))),
            r=point.get("r", float(known.get("r", sc.r_max))),
        )
    return SearchResult(params=params, value=float(flat[best]),
                        skipped_cells=skipped, grid_shape=vals.shape)


def crb_at_params(
    case: str, sc: Scenario, geom: Geometry, eta: TargetParams
) -> dict[str, float]:
    """Closed-form bounds per unknown at an explicit parameter point.

    Known parameters (r* for c11/c21, u*/v* for c12/c22) are read from
    ``eta`` itself.
    """
    if case == "c11":
        return {"u": crb_case11(sc, geom, eta.u, eta.r)}
    if case == "c12":
        return {"r": crb_case12(sc, geom, eta.u, eta.r)}
    if case == "c13":
        cu, cr = crb_case13(sc, geom, eta)
        return {"u": cu, "r": cr}
    if case == "c21":
        cu, cv = crb_case21(sc, geom, eta, eta.r)
        return {"u": cu, "v": cv}
    if case == "c22":
        return {"r": crb_case22(sc, geom, eta.u, eta.v, eta.r)}
    cu, cv, cr = crb_case23(sc, geom, eta)
    return {"u": cu, "v": cv, "r": cr}


def worst_case_metric(
    case: str, sc: Scenario, geom: Geometry, params: TargetParams
) -> float:
    """The searched metric (CRB or CRB sum) evaluated at one parameter point."""
    if case == "c11":
        return crb_case11(sc, geom, params.u, params.r)
    if case == "c12":
        return crb_case12(sc, geom, params.u, params.r)
    if case == "c13":
        return sum(crb_case13(sc, geom, params))
    if case == "c21":
        return sum(crb_case21(sc, geom, params, params.r))
    if case == "c22":
        return crb_case22(sc, geom, params.u, params.v, params.r)
    return sum(crb_case23(sc, geom, params))


# -- closed-form variance of the squared optimal layout ---------------------------


def _s1(m: int) -> float:
    return m * (m - 1) / 2.0


def _s2(m: int) -> float:
    return m * (m - 1) * (2 * m - 1) / 6.0


def _s3(m: int) -> float:
    return (m * (m - 1)) ** 2 / 4.0


def _s4(m: int) -> float:
    return m * (m - 1) * (2 * m - 1) * (3 * m * m - 3 * m - 1) / 30.0


def var_tilde_closed_form(aperture: float, n: int, spacing: float) -> float:
    """``var(xsq)`` of the two-end-group layout, as an explicit polynomial.

    The layout packs ``floor(N/2)`` antennas at pitch ``d`` from 0 and the
    remaining ``N - floor(N/2)`` at pitch ``d`` ending at ``A``; the variance
    of the squared positions then reduces to power sums of 0..m-1, expanded
    here so no positions are ever materialized.  Grows as ``A^4`` once
    ``A >> (N-1) d``.
    """
    if n < 2:
        raise ValueError("need at least two antennas")
    if spacing < 0:
        raise ValueError("spacing must be nonnegative")
    if (n - 1) * spacing > aperture * (1.0 + 1e-12):
        raise ValueError("infeasible layout: (N-1) d exceeds the aperture")
    nl = n // 2
    nr = n - nl
    a, d = float(aperture), float(spacing)
    sum_xsq = d * d * _s2(nl) + nr * a * a - 2.0 * a * d * _s1(nr) + d * d * _s2(nr)
    sum_x4 = (
        d**4 * _s4(nl)
        + nr * a**4
        - 4.0 * a**3 * d * _s1(nr)
        + 6.0 * a**2 * d**2 * _s2(nr)
        - 4.0 * a * d**3 * _s3(nr)
        + d**4 * _s4(nr)
    )
    return sum_x4 / n - (sum_xsq / n) ** 2


# -- report --------------------------------------------------------------------


@dataclass(frozen=True)
class CrbReport:
    """Worst-case bounds for one (case, scenario, geometry) triple."""

    case: str
    crb_values: dict[str, float]
    worst_case_params: TargetParams
    kappa: float
    fim_condition_number: float
    searched_params: TargetParams | None = None
    searched_value: float | None = None
    search_gap: float | None = None

    def metric(self) -> float:
        return float(sum(self.crb_values.values()))

    def to_json_dict(self) -> dict:
        p = self.worst_case_params
        out = {
            "case": self.case,
            "crb": dict(self.crb_values),
            "crb_sum": self.metric(),
            "worst_case_params": vars(p).copy() if hasattr(p, "__dict__") else {
                k: getattr(p, k) for k in ("u", "v", "r") if hasattr(p, k)
            },
            "kappa": self.kappa,
            "fim_condition_number": self.fim_condition_number,
        }
        if self.searched_params is not None:
            out["searched_params"] = {
                k: getattr(self.searched_params, k)
                for k in ("u", "v", "r")
                if hasattr(self.searched_params, k)
            }
            out["searched_value"] = self.searched_value
            out["search_gap"] = self.search_gap
        return out


def report(
    case: str,
    sc: Scenario,
    geom: Geometry,
    known: Mapping[str, float] | None = None,
    search_resolution: int = 0,
) -> CrbReport:
    """Bounds at the analytic worst-case point, plus an optional grid-searched check.

    ``search_gap`` is the relative excess of the searched maximum over the
    analytic point's metric; values near zero confirm the analytic point.
    """
    params = worst_case_params(case, sc, known)
    values = worst_case_crb(case, sc, geom, known)
    fim = np.linalg.inv(fim_oracle(sc, geom, params, case_unknowns(case)))
    cond = float(np.linalg.cond(fim))
    searched_params = searched_value = gap = None
    if search_resolution:
        res = worst_case_search(case, sc, geom, search_resolution, known)
        searched_params, searched_value = res.params, res.value
        analytic = worst_case_metric(case, sc, geom, params)
        gap = (res.value - analytic) / analytic
    return CrbReport(
        case=case,
        crb_values=values,
        worst_case_params=params,
        kappa=kappa(sc),
        fim_condition_number=cond,
        searched_params=searched_params,
        searched_value=searched_value,
        search_gap=gap,
    )
