"""Planar and flat-torus vector fields, a fixed-step RK4 integrator and domain metrics.

Fields are evaluated on arrays of shape ``(k, 2)`` so that several points
(both members of a pair, or a whole sweep) advance on one step grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, NamedTuple, Sequence, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DomainError, EscapeError, ParameterError, SingularityError

FloatArray = NDArray[np.float64]

DEFAULT_DT = 1e-3
# Slack on domain membership; RK4 round-off on boundary circles is ~1e-15.
DOMAIN_TOL = 1e-9


class Point2(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class Annulus:
    r_in: float
    r_out: float

    def __post_init__(self):
        if not (self.r_in > 0 and self.r_out > self.r_in):
            raise ParameterError(f"annulus radii must satisfy 0 < r_in < r_out, got {self.r_in}, {self.r_out}")

    def contains(self, pts: FloatArray, tol: float = DOMAIN_TOL) -> NDArray[np.bool_]:
        r = np.hypot(pts[..., 0], pts[..., 1])
        return (r >= self.r_in - tol) & (r <= self.r_out + tol)

    def clamp(self, pts: FloatArray) -> FloatArray:
        r = np.hypot(pts[..., 0], pts[..., 1])
        scale = np.clip(r, self.r_in, self.r_out) / np.where(r > 0, r, 1.0)
        return pts * scale[..., None]

    @property
    def diameter(self) -> float:
        return 2.0 * self.r_out


@dataclass(frozen=True)
class Disc:
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ParameterError(f"disc radius must be positive, got {self.radius}")

    def contains(self, pts: FloatArray, tol: float = DOMAIN_TOL) -> NDArray[np.bool_]:
        return np.hypot(pts[..., 0], pts[..., 1]) <= self.radius + tol

    def clamp(self, pts: FloatArray) -> FloatArray:
        r = np.hypot(pts[..., 0], pts[..., 1])
        scale = np.minimum(r, self.radius) / np.where(r > 0, r, 1.0)
        return pts * scale[..., None]

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius


@dataclass(frozen=True)
class FlatTorus:
    def contains(self, pts: FloatArray, tol: float = DOMAIN_TOL) -> NDArray[np.bool_]:
        return np.isfinite(pts).all(axis=-1)

    def clamp(self, pts: FloatArray) -> FloatArray:
        return np.mod(pts, 1.0)

    @property
    def diameter(self) -> float:
        return math.sqrt(0.5)


Domain = Union[Annulus, Disc, FlatTorus]


@dataclass(frozen=True)
class VectorFieldSpec:
    """A closed-form planar or torus velocity field.

    ``evaluator`` maps an array of points with shape ``(k, 2)`` to
    velocities of the same shape.
    """

    name: str
    domain: Domain
    evaluator: Callable[[FloatArray], FloatArray]
    parameters: Mapping[str, float] = field(default_factory=dict)
    singular_points: tuple[Point2, ...] = ()

    def reversed(self) -> "VectorFieldSpec":
        """The same field with velocities negated (time reversal)."""
        ev = self.evaluator
        return VectorFieldSpec(
            name=f"{self.name}~reversed",
            domain=self.domain,
            evaluator=lambda pts: -ev(pts),
            parameters=dict(self.parameters),
            singular_points=self.singular_points,
        )


@dataclass(frozen=True)
class Trajectory:
    start_time: float
    step: float
    points: FloatArray
    domain: Domain

    def __post_init__(self):
        if len(self.points) == 0:
            raise ParameterError("trajectory must contain at least one point")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def times(self) -> FloatArray:
        return self.start_time + self.step * np.arange(len(self.points))


def _as_points(p: ArrayLike) -> FloatArray:
    arr = np.asarray(p, dtype=np.float64)
    if arr.shape[-1] != 2:
        raise ParameterError(f"points must have a trailing dimension of 2, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ParameterError("points must be finite")
    return arr


def _reduce(domain: Domain, pts: FloatArray) -> FloatArray:
    if isinstance(domain, FlatTorus):
        return np.mod(pts, 1.0)
    return pts


def eval_field(spec: VectorFieldSpec, p: ArrayLike) -> tuple[float, float]:
    """Velocity of ``spec`` at the single point ``p``."""
    pt = _as_points(p).reshape(1, 2)
    for s in spec.singular_points:
        if pt[0, 0] == s.x and pt[0, 1] == s.y:
            raise SingularityError(f"{spec.name} is singular at {tuple(s)}")
    if not spec.domain.contains(pt)[0]:
        raise DomainError(f"point {tuple(pt[0])} is outside the domain of {spec.name}")
    v = spec.evaluator(pt)[0]
    return float(v[0]), float(v[1])


SNAP_TOL = 1e-6


def _check_stage(spec: VectorFieldSpec, pts: FloatArray, stage: int, slack: float = 0.0) -> None:
    inside = spec.domain.contains(pts, DOMAIN_TOL + slack)
    if not inside.all():
        bad = pts[np.argmin(inside)]
        where = f"stage {stage}" if stage else "update"
        raise EscapeError(f"RK4 {where} left the domain of {spec.name} at {tuple(bad)}", stage, bad)


def _rk4(spec: VectorFieldSpec, pts: FloatArray, dt: float) -> FloatArray:
    ev = spec.evaluator
    k1 = ev(pts)
    # Intermediate stages are straight-line probes, so on an invariant
    # boundary circle they sit off the curve by about (dt * speed)^2.
    reach = dt * float(np.max(np.abs(k1), initial=0.0))
    slack = 4.0 * reach * reach
    s = pts + 0.5 * dt * k1
    _check_stage(spec, s, 2, slack)
    k2 = ev(s)
    s = pts + 0.5 * dt * k2
    _check_stage(spec, s, 3, slack)
    k3 = ev(s)
    s = pts + dt * k3
    _check_stage(spec, s, 4, slack)
    k4 = ev(s)
    out = pts + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    # Local truncation error on an invariant boundary circle is O(reach^5);
    # overshoots that small are projected back, anything larger is a
    # genuine escape.
    _check_stage(spec, out, 0, min(reach**4, SNAP_TOL))
    return spec.domain.clamp(out)


def step_rk4(spec: VectorFieldSpec, p: ArrayLike, dt: float) -> Point2:
    """One classical fourth-order Runge-Kutta step of size ``dt``."""
    if dt == 0:
        raise ParameterError("dt must be nonzero")
    pt = _as_points(p).reshape(1, 2)
    if not spec.domain.contains(pt)[0]:
        raise DomainError(f"point {tuple(pt[0])} is outside the domain of {spec.name}")
    out = _rk4(spec, pt, dt)[0]
    return Point2(float(out[0]), float(out[1]))


def _step_plan(t: float, dt: float) -> tuple[int, float]:
    n_full = int(math.floor(abs(t) / dt))
    rem = abs(t) - n_full * dt
    if rem <= 1e-12 * max(1.0, abs(t)):
        rem = 0.0
    return n_full, rem


def flow_points(spec: VectorFieldSpec, pts: ArrayLike, t: float, dt: float = DEFAULT_DT) -> FloatArray:
    """Advance every row of ``pts`` by time ``t`` (vectorised :func:`flow_to`)."""
    if not dt > 0:
        raise ParameterError("dt must be positive")
    cur = _reduce(spec.domain, _as_points(pts).reshape(-1, 2).copy())
    if t == 0:
        return cur
    h = math.copysign(dt, t)
    n_full, rem = _step_plan(t, dt)
    for _ in range(n_full):
        cur = _rk4(spec, cur, h)
    if rem:
        cur = _rk4(spec, cur, math.copysign(rem, t))
    return cur


def flow_to(spec: VectorFieldSpec, p: ArrayLike, t: float, dt: float = DEFAULT_DT) -> Point2:
    """Image of ``p`` under the time-``t`` flow; negative ``t`` runs backwards."""
    out = flow_points(spec, p, t, dt)[0]
    if t == 0:
        return Point2(*map(float, _as_points(p)))
    return Point2(float(out[0]), float(out[1]))


def n_samples(horizon: float, dt: float) -> int:
    """Number of samples at 0, dt, ..., floor(horizon/dt) dt."""
    return int(math.floor(abs(horizon) / dt + 1e-9)) + 1


def sample_trajectory(spec: VectorFieldSpec, p: ArrayLike, horizon: float, dt: float = DEFAULT_DT) -> Trajectory:
    """Sample the orbit of ``p`` at multiples of ``dt`` up to ``horizon``.

    A negative ``horizon`` samples the backward orbit.
    """
    if horizon == 0 or not dt > 0:
        raise ParameterError("horizon must be nonzero and dt positive")
    h = math.copysign(dt, horizon)
    n = n_samples(horizon, dt)
    out = np.empty((n, 2))
    out[0] = _reduce(spec.domain, check_in_domain(spec.domain, p, "start point").reshape(2))
    cur = out[0:1].copy()
    for k in range(1, n):
        try:
            cur = _rk4(spec, cur, h)
        except EscapeError as exc:
            exc.partial = Trajectory(0.0, h, out[:k].copy(), spec.domain)
            raise
        out[k] = cur[0]
    return Trajectory(0.0, h, out, spec.domain)


def pairwise_distance(domain: Domain, P: ArrayLike, Q: ArrayLike) -> FloatArray:
    """Distance matrix between the rows of ``P`` and ``Q``."""
    P = np.asarray(P, dtype=np.float64)[:, None, :]
    Q = np.asarray(Q, dtype=np.float64)[None, :, :]
    return _metric(domain, P - Q)


def rowwise_distance(domain: Domain, P: ArrayLike, Q: ArrayLike) -> FloatArray:
    """Distances between corresponding rows of ``P`` and ``Q``."""
    return _metric(domain, np.asarray(P, dtype=np.float64) - np.asarray(Q, dtype=np.float64))


def _metric(domain: Domain, diff: FloatArray) -> FloatArray:
    if isinstance(domain, FlatTorus):
        d = np.mod(np.abs(diff), 1.0)
        d = np.minimum(d, 1.0 - d)
        return np.hypot(d[..., 0], d[..., 1])
    return np.hypot(diff[..., 0], diff[..., 1])


def domain_distance(domain: Domain, p: ArrayLike, q: ArrayLike) -> float:
    """Euclidean distance, or the flat quotient distance on the torus."""
    return float(rowwise_distance(domain, np.reshape(p, (1, 2)), np.reshape(q, (1, 2)))[0])


def segment_diameter(domain: Domain, pts: FloatArray, chunk: int = 1024) -> float:
    diam = 0.0
    for i in range(0, len(pts), chunk):
        d = pairwise_distance(domain, pts[i:i + chunk], pts[i:])
        diam = max(diam, float(d.max()))
    return diam


def orbit_segment_diameter(spec: VectorFieldSpec, p: ArrayLike, s: float, dt: float = DEFAULT_DT) -> float:
    """Sampled diameter of the orbit segment from ``p`` over time ``s``.

    This is a lower bound on the true diameter that converges as ``dt``
    shrinks. The final fractional step is included so that the segment
    ends exactly at time ``s``.
    """
    if s == 0:
        return 0.0
    traj = sample_trajectory(spec, p, s, dt)
    pts = traj.points
    n_full, rem = _step_plan(s, dt)
    if rem:
        pts = np.vstack([pts, flow_points(spec, pts[-1], math.copysign(rem, s), dt)])
    return segment_diameter(spec.domain, pts)


def check_in_domain(domain: Domain, pts: ArrayLike, name: str = "point") -> FloatArray:
    arr = _as_points(pts)
    if not domain.contains(arr.reshape(-1, 2)).all():
        raise DomainError(f"{name} outside the domain {domain}")
    return arr


def as_point(p: Sequence[float]) -> Point2:
    x, y = p
    return Point2(float(x), float(y))
