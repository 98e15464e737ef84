"""Periods of conservative annulus flows and the divergence criterion for robustness.

For a non-vanishing field ``X = (a, b)`` on an annulus, ``Z = (-b, a) / |X|^2``
is the auxiliary field whose flux through a periodic orbit equals the
orbit's period.  Between two orbits the period difference is the area
integral of ``div Z``, so a sign-definite ``div Z`` makes periods strictly
monotone across the annulus.

Orientation is fixed once: orbits are compared as concentric curves with
the outer one ``gamma2``, and the area integral is taken to equal
``T(gamma2) - T(gamma1)``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy.integrate import simpson

from .errors import DomainError, ParameterError, SingularityError
from .flowcore import Annulus, Point2, VectorFieldSpec, _as_points, _rk4

DIV_TOL = 1e-6
TANGENCY_TOL = 1e-8
CRITERION_TOL = 1e-8
DEFAULT_H = 1e-4


@dataclass(frozen=True)
class RadialProfile:
    """A profile ``f`` of ``u = r^2`` with its derivative, for ``X_f = f(r^2) (y, -x)``."""

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    df: Callable[[np.ndarray], np.ndarray]


def linear_profile() -> RadialProfile:
    return RadialProfile("linear", lambda u: u, lambda u: np.ones_like(u))


def constant_profile(c: float = 1.0) -> RadialProfile:
    if c == 0:
        raise ParameterError("constant profile must be nonzero")
    return RadialProfile(f"constant({c})", lambda u: np.full_like(u, c, dtype=float),
                         lambda u: np.zeros_like(u, dtype=float))


def perturbed_linear_profile(eps: float = 0.01) -> RadialProfile:
    return RadialProfile(f"linear+{eps}sin", lambda u: u + eps * np.sin(u), lambda u: 1.0 + eps * np.cos(u))


def unit_speed_profile() -> RadialProfile:
    """``f(u) = -u^(-1/2)``: ``X_f = (-y, x)/r``, the unit-speed periodic band."""
    return RadialProfile("unit_speed", lambda u: -1.0 / np.sqrt(u), lambda u: 0.5 * u ** -1.5)


def inverse_profile() -> RadialProfile:
    """``f(u) = 1/u``, decreasing: periods ``2 pi r^2`` grow outward."""
    return RadialProfile("inverse", lambda u: 1.0 / u, lambda u: -1.0 / u ** 2)


PROFILES: dict[str, Callable[..., RadialProfile]] = {
    "linear": linear_profile,
    "constant": constant_profile,
    "perturbed_linear": perturbed_linear_profile,
    "unit_speed": unit_speed_profile,
    "inverse": inverse_profile,
}


def get_profile(name: str, **params) -> RadialProfile:
    try:
        return PROFILES[name](**params)
    except KeyError:
        raise ParameterError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}") from None


@dataclass(frozen=True)
class ConservativeFieldSpec:
    """A divergence-free annulus field tangent to both boundary circles.

    The preconditions are checked numerically at construction.
    """

    underlying: VectorFieldSpec
    profile: Optional[RadialProfile] = None
    check: bool = True

    def __post_init__(self):
        dom = self.underlying.domain
        if not isinstance(dom, Annulus):
            raise ParameterError("conservative fields live on an annulus")
        if self.check:
            audit_conservative(self.underlying)

    @property
    def annulus(self) -> Annulus:
        return self.underlying.domain

    def __call__(self, pts):
        return self.underlying.evaluator(np.atleast_2d(pts))


def radial_profile_field(profile: RadialProfile, r_in: float = 1.0, r_out: float = 2.0,
                         check: bool = True) -> ConservativeFieldSpec:
    """``X_f(x, y) = f(x^2 + y^2) (y, -x)`` on ``r_in <= r <= r_out``."""
    f = profile.f

    def ev(pts):
        u = pts[:, 0] ** 2 + pts[:, 1] ** 2
        fu = f(u)
        return np.column_stack([fu * pts[:, 1], -fu * pts[:, 0]])

    spec = VectorFieldSpec(f"X_{profile.name}", Annulus(r_in, r_out), ev, {"r_in": r_in, "r_out": r_out})
    return ConservativeFieldSpec(spec, profile, check)


def _polar_grid(ann: Annulus, n_r: int, n_t: int, inset: float = 0.0):
    r = np.linspace(ann.r_in + inset, ann.r_out - inset, n_r)
    t = 2.0 * np.pi * np.arange(n_t) / n_t
    R, TH = np.meshgrid(r, t, indexing="ij")
    return R, TH, np.stack([R * np.cos(TH), R * np.sin(TH)], axis=-1)


def _divergence(ev, pts: np.ndarray, h: float) -> np.ndarray:
    flat = pts.reshape(-1, 2)
    ex = np.array([h, 0.0])
    ey = np.array([0.0, h])
    div = (ev(flat + ex)[:, 0] - ev(flat - ex)[:, 0] + ev(flat + ey)[:, 1] - ev(flat - ey)[:, 1]) / (2 * h)
    return div.reshape(pts.shape[:-1])


def audit_conservative(spec: VectorFieldSpec, n: int = 16, h: float = DEFAULT_H) -> None:
    ann = spec.domain
    _, _, pts = _polar_grid(ann, n, n, inset=2 * h)
    div = np.abs(_divergence(spec.evaluator, pts, h))
    if div.max() >= DIV_TOL:
        raise ParameterError(f"field {spec.name} is not divergence free: |div X| up to {div.max():.3g}")
    t = 2.0 * np.pi * np.arange(64) / 64
    for r in (ann.r_in, ann.r_out):
        p = np.column_stack([r * np.cos(t), r * np.sin(t)])
        v = spec.evaluator(p)
        speed = np.hypot(v[:, 0], v[:, 1])
        if speed.min() == 0:
            raise ParameterError(f"field {spec.name} vanishes on the circle r = {r}")
        radial = np.abs((v * p).sum(axis=1)) / r
        if radial.max() >= TANGENCY_TOL:
            raise ParameterError(f"field {spec.name} is not tangent to r = {r}: radial part {radial.max():.3g}")
    _, _, inner = _polar_grid(ann, n, n)
    v = spec.evaluator(inner.reshape(-1, 2))
    if np.hypot(v[:, 0], v[:, 1]).min() == 0:
        raise ParameterError(f"field {spec.name} vanishes inside the annulus")


def _z(ev, pts):
    v = ev(pts)
    n2 = v[:, 0] ** 2 + v[:, 1] ** 2
    return np.column_stack([-v[:, 1], v[:, 0]]) / n2[:, None], n2


def z_field(X: ConservativeFieldSpec, p) -> tuple[float, float]:
    """``Z = X^perp / |X|^2`` at ``p``, with ``(a, b)^perp = (-b, a)``."""
    pt = _as_points(p).reshape(1, 2)
    if not X.annulus.contains(pt)[0]:
        raise DomainError(f"{tuple(pt[0])} is outside {X.annulus}")
    z, n2 = _z(X.underlying.evaluator, pt)
    if n2[0] == 0:
        raise SingularityError(f"X vanishes at {tuple(pt[0])}; Z is undefined")
    return float(z[0, 0]), float(z[0, 1])


def _z_evaluator(X: ConservativeFieldSpec):
    ev = X.underlying.evaluator
    return lambda pts: _z(ev, pts)[0]


def div_z(X: ConservativeFieldSpec, p, h: float = DEFAULT_H) -> float:
    """Central-difference divergence of ``Z`` at ``p`` (stencil half-width ``h``)."""
    pt = _as_points(p).reshape(1, 2)
    stencil = pt + np.array([[h, 0], [-h, 0], [0, h], [0, -h]])
    if not X.annulus.contains(stencil).all():
        raise DomainError(f"difference stencil at {tuple(pt[0])} leaves the annulus; use a smaller h")
    return float(_divergence(_z_evaluator(X), pt, h)[0])


def div_z_closed(profile: RadialProfile, r) -> np.ndarray | float:
    """``div Z = -2 f'(r^2) / f(r^2)^2`` for the field ``X_f``."""
    u = np.asarray(r, dtype=float) ** 2
    out = -2.0 * profile.df(u) / profile.f(u) ** 2
    return float(out) if np.ndim(out) == 0 else out


# ------------------------------------------------------------------ periods


@dataclass(frozen=True)
class CircleOrbit:
    r: float


@dataclass(frozen=True)
class PolylineOrbit:
    """Closed sampled curve; the first and last points coincide."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if len(pts) < 4 or not np.allclose(pts[0], pts[-1], atol=1e-12):
            raise ParameterError("polyline orbit must be closed (first point equals last)")
        object.__setattr__(self, "points", pts)


OrbitCurve = Union[CircleOrbit, PolylineOrbit]


@dataclass(frozen=True)
class PeriodReport:
    flux_period: float
    direct_period: Optional[float] = None
    residual: Optional[float] = None
    direct_converged: bool = True


def _inv_speed(X: ConservativeFieldSpec, pts: np.ndarray) -> np.ndarray:
    v = X.underlying.evaluator(pts)
    speed = np.hypot(v[:, 0], v[:, 1])
    if (speed == 0).any():
        raise SingularityError("X vanishes on the orbit")
    return 1.0 / speed


def flux_period(X: ConservativeFieldSpec, gamma: OrbitCurve, quad_n: int = 512) -> float:
    """Line integral of ``1/|X|`` along ``gamma`` (= flux of ``Z`` through it)."""
    if quad_n < 64:
        raise ParameterError("quad_n must be at least 64")
    if isinstance(gamma, CircleOrbit):
        if not X.annulus.r_in - 1e-12 <= gamma.r <= X.annulus.r_out + 1e-12:
            raise DomainError(f"circle r = {gamma.r} is not inside {X.annulus}")
        t = 2.0 * np.pi * np.arange(quad_n) / quad_n
        pts = np.column_stack([gamma.r * np.cos(t), gamma.r * np.sin(t)])
        # periodic trapezoid rule: spectrally accurate for smooth integrands
        return float(np.sum(_inv_speed(X, pts)) * 2.0 * np.pi * gamma.r / quad_n)
    pts = gamma.points
    if not X.annulus.contains(pts).all():
        raise DomainError("polyline orbit leaves the annulus")
    w = _inv_speed(X, pts)
    seg = np.hypot(*np.diff(pts, axis=0).T)
    return float(np.sum(seg * 0.5 * (w[:-1] + w[1:])))


def direct_period(X: ConservativeFieldSpec, start, dt: float = 1e-4, max_time: float = 1e3
                  ) -> Optional[float]:
    """Time for the orbit of ``start`` to wind once around the origin.

    Integrates with fixed-step RK4, tracks the unwrapped polar angle and
    interpolates linearly inside the step where it reaches ``2 pi``.
    Returns ``None`` if no full turn happens before ``max_time``.
    """
    p = _as_points(start).reshape(1, 2)
    angle = 0.0
    theta_prev = math.atan2(p[0, 1], p[0, 0])
    t = 0.0
    spec = X.underlying
    while t < max_time:
        q = _rk4(spec, p, dt)
        theta = math.atan2(q[0, 1], q[0, 0])
        d = (theta - theta_prev + math.pi) % (2 * math.pi) - math.pi
        if abs(angle + d) >= 2 * math.pi:
            frac = (2 * math.pi - abs(angle)) / abs(d)
            return t + frac * dt
        angle += d
        theta_prev = theta
        p = q
        t += dt
    return None


def orbit_period_flux(X: ConservativeFieldSpec, gamma: OrbitCurve, quad_n: int = 512,
                      direct: bool = False, dt: float = 1e-4) -> PeriodReport:
    """Period of ``gamma`` as a flux integral, optionally cross-checked by integration."""
    fp = flux_period(X, gamma, quad_n)
    if not direct:
        return PeriodReport(fp)
    start = (gamma.r, 0.0) if isinstance(gamma, CircleOrbit) else gamma.points[0]
    dp = direct_period(X, start, dt, max_time=10.0 * fp + 10.0)
    if dp is None:
        return PeriodReport(fp, None, None, direct_converged=False)
    return PeriodReport(fp, dp, abs(fp - dp))


def area_integral_div_z(X: ConservativeFieldSpec, r1: float, r2: float, quad_n: int = 512,
                        rule: str = "simpson", h: float = DEFAULT_H) -> float:
    """``iint div Z dx dy`` over ``r1 <= r <= r2`` in polar coordinates.

    ``div Z`` is taken by central differences, the angle by the periodic
    trapezoid rule and the radius by composite Simpson (default) or
    trapezoid.
    """
    n_r = quad_n + 1 if quad_n % 2 == 0 else quad_n
    r = np.linspace(r1, r2, n_r)
    t = 2.0 * np.pi * np.arange(quad_n) / quad_n
    R, TH = np.meshgrid(r, t, indexing="ij")
    pts = np.stack([R * np.cos(TH), R * np.sin(TH)], axis=-1)
    # the stencil may reach h past the boundary circles; the evaluator is
    # still defined there and nothing is integrated in time
    div = _divergence(_z_evaluator(X), pts, h)
    radial = div.mean(axis=1) * 2.0 * np.pi * r
    if rule == "simpson":
        return float(simpson(radial, x=r))
    if rule == "trapezoid":
        return float(np.trapezoid(radial, r))
    raise ParameterError(f"unknown quadrature rule {rule!r}")


def green_check(X: ConservativeFieldSpec, r1: float, r2: float, quad_n: int = 512,
                rule: str = "simpson") -> float:
    """``|(flux(gamma2) - flux(gamma1)) - iint div Z|`` for concentric circles ``r1 < r2``.

    Fluxes of ``Z`` are taken with the outward normal, so for clockwise
    fields the left side is the period difference ``T(gamma2) - T(gamma1)``.
    """
    if not (X.annulus.r_in - 1e-12 <= r1 < r2 <= X.annulus.r_out + 1e-12):
        raise ParameterError(f"need r_in <= r1 < r2 <= r_out, got {r1}, {r2}")
    lhs, rhs = green_sides(X, r1, r2, quad_n, rule)
    return abs(lhs - rhs)


def outward_flux(X: ConservativeFieldSpec, r: float, quad_n: int = 512) -> float:
    """``oint Z . n ds`` over the circle of radius ``r`` with outward normal ``n``.

    This is the period for clockwise circulation and minus the period for
    counterclockwise circulation, since ``Z`` then points inward.
    """
    t = 2.0 * np.pi * np.arange(quad_n) / quad_n
    pts = np.column_stack([r * np.cos(t), r * np.sin(t)])
    z, n2 = _z(X.underlying.evaluator, pts)
    if (n2 == 0).any():
        raise SingularityError(f"X vanishes on the circle r = {r}")
    return float(np.sum(z[:, 0] * pts[:, 0] + z[:, 1] * pts[:, 1]) * 2.0 * np.pi / quad_n)


def green_sides(X: ConservativeFieldSpec, r1: float, r2: float, quad_n: int = 512,
                rule: str = "simpson") -> tuple[float, float]:
    """Signed flux difference and area integral of ``div Z`` between two circles.

    For clockwise fields (the ``X_f`` family with ``f > 0``) the flux
    difference is exactly ``T(gamma2) - T(gamma1)``.
    """
    lhs = outward_flux(X, r2, quad_n) - outward_flux(X, r1, quad_n)
    rhs = area_integral_div_z(X, r1, r2, quad_n, rule)
    return lhs, rhs


@dataclass(frozen=True)
class CriterionVerdict:
    satisfied: bool
    min_abs_div: float
    argmin: Point2
    grid: tuple = ()


def div_z_grid(X: ConservativeFieldSpec, grid_n: int, h: float = DEFAULT_H):
    """``(R, Theta, div Z)`` on a polar grid; closed form when the profile is known.

    Without a profile the grid is inset by ``2h`` so the difference stencil
    stays inside the annulus.
    """
    inset = 0.0 if X.profile is not None else 2 * h
    R, TH, pts = _polar_grid(X.annulus, grid_n, grid_n, inset)
    if X.profile is not None:
        div = div_z_closed(X.profile, R)
    else:
        div = _divergence(_z_evaluator(X), pts, h)
    return R, TH, np.asarray(div, dtype=float)


def robust_criterion(X: ConservativeFieldSpec, grid_n: int = 64, tol: float = CRITERION_TOL) -> CriterionVerdict:
    """Check that ``|div Z|`` stays above ``tol`` over a polar grid.

    Ties for the minimum resolve to the smallest (radius, angle) grid index.
    """
    if grid_n < 16:
        raise ParameterError("grid_n must be at least 16")
    R, TH, div = div_z_grid(X, grid_n)
    a = np.abs(div)
    k = int(np.argmin(a))  # row-major: first (r, theta) index attaining the min
    i, j = np.unravel_index(k, a.shape)
    r, t = R[i, j], TH[i, j]
    m = float(a[i, j])
    return CriterionVerdict(m > tol, m, Point2(float(r * np.cos(t)), float(r * np.sin(t))), (R, TH, div))


def flux_periods(X: ConservativeFieldSpec, radii, quad_n: int = 512) -> np.ndarray:
    return np.array([flux_period(X, CircleOrbit(float(r)), quad_n) for r in radii])


def periods_strictly_monotone(X: ConservativeFieldSpec, n_radii: int = 32, quad_n: int = 512) -> int:
    """+1 if flux periods strictly increase with the radius, -1 if they strictly
    decrease, 0 otherwise.
    """
    radii = np.linspace(X.annulus.r_in, X.annulus.r_out, n_radii)
    d = np.diff(flux_periods(X, radii, quad_n))
    if (d > 0).all():
        return 1
    if (d < 0).all():
        return -1
    return 0


def period_table_csv(X: ConservativeFieldSpec, radii, quad_n: int = 512, direct: bool = False,
                     dt: float = 1e-4) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["r", "flux_period", "direct_period", "residual"])
    for r in radii:
        rep = orbit_period_flux(X, CircleOrbit(float(r)), quad_n, direct, dt)
        w.writerow([repr(float(r)), repr(rep.flux_period),
                    "" if rep.direct_period is None else repr(rep.direct_period),
                    "" if rep.residual is None else repr(rep.residual)])
    return buf.getvalue()


def div_grid_csv(R, TH, div) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["r", "theta", "div_z"])
    for r, t, d in zip(R.ravel(), TH.ravel(), np.asarray(div).ravel()):
        w.writerow([repr(float(r)), repr(float(t)), repr(float(d))])
    return buf.getvalue()
