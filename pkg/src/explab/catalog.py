"""Constructors for the worked examples, with their exact parameters."""
from __future__ import annotations

import enum
import math
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import ParameterError
from .flowcore import Annulus, FlatTorus, Point2, VectorFieldSpec
from .insertion import CodedPoint, DenjoyTent, InsertedRotation, InsertionCircle, NotchedRoof, orbit_position
from .suspension import (
    Circle,
    Constant,
    FiniteSet,
    Halving,
    Identity,
    Interval,
    Negation,
    PiecewiseLinear,
    Quadratic,
    Reciprocal,
    ReturnTime,
    Rotation,
    Sinusoidal,
    SuspensionFlow,
)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
DENJOY_MAX_TOTAL = 0.5


class ExampleId(str, enum.Enum):
    PeriodicBand = "PeriodicBand"
    RigidBand = "RigidBand"
    TorusFakeSaddle = "TorusFakeSaddle"
    MoebiusSuspension = "MoebiusSuspension"
    DiscReciprocal = "DiscReciprocal"
    BandKnots = "BandKnots"
    IdentitySuspension = "IdentitySuspension"
    DenjoySuspension = "DenjoySuspension"
    KSMinimal = "KSMinimal"
    RotationSmooth = "RotationSmooth"


# ------------------------------------------------------------- vector fields


def _band(pts):
    r = np.hypot(pts[:, 0], pts[:, 1])
    return np.column_stack([-pts[:, 1] / r, pts[:, 0] / r])


def _rigid(pts):
    return np.column_stack([-pts[:, 1], pts[:, 0]])


def periodic_band(rigid: bool = False) -> VectorFieldSpec:
    """Circles around the origin in the annulus ``1 <= r <= 2``.

    The default moves at unit speed (period ``2 pi r``); ``rigid=True``
    rotates at unit angular velocity (period ``2 pi`` on every circle).
    """
    if rigid:
        return VectorFieldSpec("RigidBand", Annulus(1.0, 2.0), _rigid)
    return VectorFieldSpec("PeriodicBand", Annulus(1.0, 2.0), _band, singular_points=(Point2(0.0, 0.0),))


def fake_saddle_density(p: Point2):
    px, py = p

    def f(pts):
        return np.sin(np.pi * (pts[:, 0] - px)) ** 2 + np.sin(np.pi * (pts[:, 1] - py)) ** 2

    return f


def torus_fake_saddle(alpha: float = GOLDEN, p: Point2 = Point2(0.0, 0.0)) -> VectorFieldSpec:
    """Linear flow of slope ``alpha`` on the flat torus, slowed to rest at ``p``."""
    p = Point2(float(p[0]) % 1.0, float(p[1]) % 1.0)
    f = fake_saddle_density(p)
    direction = np.array([1.0, alpha])

    def ev(pts):
        return f(pts)[:, None] * direction

    return VectorFieldSpec("TorusFakeSaddle", FlatTorus(), ev, {"alpha": alpha, "px": p.x, "py": p.y})


# ---------------------------------------------------------------- suspensions


def moebius_suspension() -> SuspensionFlow:
    """``x -> -x`` on [-1, 1] under the even roof ``1 + x^2``."""
    return SuspensionFlow(Interval(-1.0, 1.0), Negation(), Quadratic(), name="MoebiusSuspension")


def disc_reciprocal_suspension(x_min: float = 2.0 ** -40) -> SuspensionFlow:
    """Halving on ``[x_min, 1]`` under the roof ``1/x``.

    The base is truncated away from 0, where the roof blows up, so orbits
    end once they drop below ``x_min``.
    """
    if not 0.0 < x_min < 1.0:
        raise ParameterError(f"x_min must lie in (0, 1), got {x_min}")
    return SuspensionFlow(
        Interval(x_min, 1.0), Halving(), Reciprocal(), name="DiscReciprocal", allow_exit=True,
        metadata={"x_min": x_min},
    )


def band_knot_points(n_max: int) -> tuple[list[float], list[float]]:
    a = [math.ldexp(1.0, -n) for n in range(n_max + 2)]
    b = [math.ldexp(0.5 + math.ldexp(1.0, -(n + 2)), -n) for n in range(n_max + 1)]
    return a, b


def band_knots_suspension(n_max: int = 30) -> SuspensionFlow:
    """Halving on [0, 1] with a piecewise-linear roof.

    Knots: ``T = 1`` at ``a_n = 2^-n`` and at 0, ``T(b_n) = 1 + 1/(n+1)`` at
    ``b_n = 2^-n (1/2 + 2^-(n+2))``, for ``n <= n_max``.  Halving is not
    onto [0, 1], so backward orbits end when they leave the base.
    """
    if not 1 <= n_max <= 40:
        raise ParameterError(f"n_max must lie in [1, 40], got {n_max}")
    a, b = band_knot_points(n_max)
    knots = [(0.0, 1.0)] + [(x, 1.0) for x in a] + [(x, 1.0 + 1.0 / (n + 1)) for n, x in enumerate(b)]
    return SuspensionFlow(
        Interval(0.0, 1.0), Halving(), PiecewiseLinear(tuple(knots)), name="BandKnots",
        allow_exit=True, metadata={"n_max": n_max, "a": a, "b": b},
    )


def identity_suspension(base, time: ReturnTime) -> SuspensionFlow:
    """Suspension of the identity; the roof must be injective on the base."""
    pts = np.asarray(base.grid(2001), dtype=float)
    vals = np.array([time(x) for x in pts])
    order = np.argsort(vals, kind="stable")
    same = np.nonzero(np.diff(vals[order]) == 0)[0]
    if same.size:
        i, j = order[same[0]], order[same[0] + 1]
        raise ParameterError(
            f"return time is not injective: T({pts[i]}) = T({pts[j]}) = {vals[i]}"
        )
    if isinstance(base, Interval) and np.unique(np.sign(np.diff(vals))).size > 1:
        k = int(np.argmax(np.sign(np.diff(vals)) != np.sign(vals[1] - vals[0])))
        raise ParameterError(
            f"return time is not monotone, hence not injective, near {pts[k]}..{pts[k + 1]}"
        )
    return SuspensionFlow(base, Identity(), time, name="IdentitySuspension")


def denjoy_suspension(alpha: float = GOLDEN, interval_length: float = 0.05, n_max: int = 30) -> SuspensionFlow:
    """Denjoy blow-up of the rotation by ``alpha`` with a tent-shaped roof.

    The interval ``I = J_0`` and its images ``J_n`` have lengths
    ``interval_length * 2^-|n|``, so forward images contract by exactly
    one half.  The roof is 1 except on ``J_n`` (``n >= 1``), where it peaks
    at ``1 + 1/n``.
    """
    if not 1 <= n_max <= 30:
        raise ParameterError(f"n_max must lie in [1, 30], got {n_max}")
    circle = InsertionCircle(alpha, interval_length, n_max)
    if circle.total >= DENJOY_MAX_TOTAL:
        raise ParameterError(
            f"inserted intervals total {circle.total:.6g} >= {DENJOY_MAX_TOTAL}; reduce interval_length"
        )
    return SuspensionFlow(
        circle, InsertedRotation(alpha), DenjoyTent(), name="DenjoySuspension",
        metadata={"I": (CodedPoint(0, 0.0), CodedPoint(0, 1.0)), "n_max": n_max},
    )


def record_minima(alpha: float, count: int) -> list[int]:
    """First ``count`` times ``n >= 1`` at which ``n alpha mod 1`` hits a new minimum.

    Uses the mediant recursion on the lowest and highest fractional parts
    seen so far, in exact rational arithmetic.
    """
    a = Fraction(alpha)
    n_lo, d_lo = 1, a
    n_hi, d_hi = 1, 1 - a
    out = [1]
    while len(out) < count:
        if d_lo == d_hi or d_lo == 0 or d_hi == 0:
            raise ParameterError(f"alpha = {alpha} is effectively rational; records stop at {out}")
        if d_lo > d_hi:
            n_lo, d_lo = n_lo + n_hi, d_lo - d_hi
            out.append(n_lo)
        else:
            n_hi, d_hi = n_lo + n_hi, d_hi - d_lo
    return out


def ks_minimal_suspension(alpha: float = GOLDEN, j_max: int = 12, insert_length: float = 0.1,
                          cap: int = 30) -> SuspensionFlow:
    """Rotation split along the orbit of 0 under a notched roof.

    ``x_{n_j}`` are the successive record minima of the orbit of 0; the
    roof is ``1 + 1/j`` at ``x_{n_j}^+`` and decays linearly to 1 over
    ``[x_{n_j}, x_{n_j} + delta_j]``.  ``delta_j`` is halved until these
    intervals are pairwise disjoint.
    """
    if not 1 <= j_max <= 20:
        raise ParameterError(f"j_max must lie in [1, 20], got {j_max}")
    ns = record_minima(alpha, j_max)
    xs = [orbit_position(alpha, n) for n in ns]
    notches = []
    delta = 0.5 * (1.0 - xs[0])
    for j, (n, x) in enumerate(zip(ns, xs), start=1):
        if j > 1:
            while x + delta >= xs[j - 2]:
                delta *= 0.5
        if x + delta == x or delta == 0.0:
            raise ParameterError(f"cannot separate notch intervals in float precision at j = {j}")
        notches.append((n, x, delta, j))
    circle = InsertionCircle(alpha, insert_length, cap)
    return SuspensionFlow(
        circle, InsertedRotation(alpha), NotchedRoof(alpha, tuple(notches)), name="KSMinimal",
        metadata={"n_j": ns, "notches": notches, "zero_minus": CodedPoint(0, 0.0),
                  "zero_plus": CodedPoint(0, 1.0)},
    )


def rotation_smooth_suspension(alpha: float = GOLDEN, amplitude: float = 0.3) -> SuspensionFlow:
    """Rotation by ``alpha`` under ``1 + amplitude * sin(2 pi x)``; mean roof is 1."""
    if not 0.0 <= amplitude < 1.0:
        raise ParameterError(f"amplitude must lie in [0, 1), got {amplitude}")
    time = Sinusoidal(amplitude) if amplitude else Constant(1.0)
    return SuspensionFlow(Circle(), Rotation(alpha), time, name="RotationSmooth",
                          metadata={"alpha": alpha, "amplitude": amplitude})


# ------------------------------------------------------------------ registry


def _identity_default(points=(0.0, 0.3, 1.0), times=(1.0, 1.5, 2.0)) -> SuspensionFlow:
    return identity_suspension(FiniteSet(tuple(points)), PiecewiseLinear(tuple(zip(points, times))))


BUILDERS: dict[ExampleId, Callable] = {
    ExampleId.PeriodicBand: lambda: periodic_band(False),
    ExampleId.RigidBand: lambda: periodic_band(True),
    ExampleId.TorusFakeSaddle: torus_fake_saddle,
    ExampleId.MoebiusSuspension: moebius_suspension,
    ExampleId.DiscReciprocal: disc_reciprocal_suspension,
    ExampleId.BandKnots: band_knots_suspension,
    ExampleId.IdentitySuspension: _identity_default,
    ExampleId.DenjoySuspension: denjoy_suspension,
    ExampleId.KSMinimal: ks_minimal_suspension,
    ExampleId.RotationSmooth: rotation_smooth_suspension,
}

DESCRIPTIONS: dict[ExampleId, str] = {
    ExampleId.PeriodicBand: "unit-speed circles in the annulus 1<=r<=2 (kinematic expansive)",
    ExampleId.RigidBand: "rigid rotation of the same annulus (time change that is not kinematic expansive)",
    ExampleId.TorusFakeSaddle: "irrational linear torus flow stopped at one point (fake saddle)",
    ExampleId.MoebiusSuspension: "x -> -x on [-1,1] under T = 1 + x^2 (separating, not kinematic expansive)",
    ExampleId.DiscReciprocal: "halving map under T = 1/x (divergent return-time gaps on the disc)",
    ExampleId.BandKnots: "halving map on [0,1] under a piecewise-linear knotted roof (annulus semi-flow)",
    ExampleId.IdentitySuspension: "identity map under an injective roof",
    ExampleId.DenjoySuspension: "Denjoy circle map with halving wandering intervals under a tent roof",
    ExampleId.KSMinimal: "rotation split along the orbit of 0 under a notched roof (positive only)",
    ExampleId.RotationSmooth: "irrational rotation under a smooth sinusoidal roof (never kinematic expansive)",
}


def build(example: str | ExampleId, **params):
    """Construct a catalog example by name, overriding constructor parameters."""
    try:
        key = ExampleId(example)
    except ValueError:
        raise ParameterError(f"unknown example {example!r}; choose from {[e.value for e in ExampleId]}") from None
    if key in (ExampleId.PeriodicBand, ExampleId.RigidBand) and params:
        raise ParameterError(f"{key.value} takes no parameters")
    if key is ExampleId.TorusFakeSaddle and "p" in params:
        params["p"] = Point2(*params["p"])
    return BUILDERS[key](**params)
