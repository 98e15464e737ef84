"""Suspension flows of one-dimensional base maps under a positive roof.

A state ``(x, s)`` sits at height ``s`` above the base point ``x``; it
climbs the fiber at unit speed and at height ``T(x)`` is glued to
``(f(x), 0)``.  ``T_n(x)`` denotes the time needed for ``n`` wraps, so
that flowing ``(x, 0)`` for ``T_n(x)`` lands on ``(f^n(x), 0)``.

Base points are plain floats for intervals, circles and finite sets.
The blown-up circles of :mod:`explab.insertion` additionally use
:class:`~explab.insertion.CodedPoint` values; everything here only relies
on the base space, map and roof agreeing on the point type.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterator, NamedTuple, Sequence, Union

import numpy as np

from .errors import DomainError, OrbitExit, ParameterError

GRID_AUDIT = 10_000
BIJECTION_TOL = 1e-12


# ---------------------------------------------------------------- base spaces


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ParameterError(f"interval needs lo < hi, got [{self.lo}, {self.hi}]")

    def contains(self, x) -> bool:
        return isinstance(x, (int, float, np.floating)) and self.lo <= x <= self.hi

    def distance(self, a, b) -> float:
        return abs(a - b)

    def grid(self, n: int) -> np.ndarray:
        return np.linspace(self.lo, self.hi, n)

    @property
    def length(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class Circle:
    """The unit-length circle, coordinates in [0, 1)."""

    def contains(self, x) -> bool:
        return isinstance(x, (int, float, np.floating)) and 0.0 <= x < 1.0

    def distance(self, a, b) -> float:
        d = abs(a - b) % 1.0
        return min(d, 1.0 - d)

    def grid(self, n: int) -> np.ndarray:
        return np.arange(n) / n

    @property
    def length(self) -> float:
        return 0.5


@dataclass(frozen=True)
class FiniteSet:
    points: tuple[float, ...]

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        if len(pts) == 0 or any(b <= a for a, b in zip(pts, pts[1:])):
            raise ParameterError("finite-set points must be nonempty and strictly increasing")
        object.__setattr__(self, "points", pts)

    def contains(self, x) -> bool:
        return x in self.points

    def distance(self, a, b) -> float:
        return abs(a - b)

    def grid(self, n: int) -> np.ndarray:
        return np.array(self.points)

    @property
    def length(self) -> float:
        return self.points[-1] - self.points[0]


# ----------------------------------------------------------------- base maps


class BaseMap:
    """Invertible self-map of a base space.

    Subclasses define ``forward`` and ``inverse``; ``iterate`` and
    ``orbit`` fall back to repeated application.
    """

    exact_inverse = False

    def forward(self, x):
        raise NotImplementedError

    def inverse(self, x):
        raise NotImplementedError

    def iterate(self, x, n: int):
        step = self.forward if n > 0 else self.inverse
        for _ in range(abs(n)):
            x = step(x)
        return x

    def orbit(self, x, n: int) -> Iterator:
        """Yield ``f^0 x, f^{±1} x, ..., f^{n} x`` (sign of ``n`` picks the direction)."""
        step = self.forward if n >= 0 else self.inverse
        yield x
        for _ in range(abs(n)):
            x = step(x)
            yield x


@dataclass(frozen=True)
class Identity(BaseMap):
    exact_inverse = True

    def forward(self, x):
        return x

    def inverse(self, x):
        return x

    def iterate(self, x, n: int):
        return x


@dataclass(frozen=True)
class Halving(BaseMap):
    """``x -> x/2``; powers of two keep every iterate exact."""

    exact_inverse = True

    def forward(self, x):
        return x * 0.5

    def inverse(self, x):
        return x * 2.0

    def iterate(self, x, n: int):
        return np.ldexp(x, -n) if isinstance(x, np.ndarray) else math.ldexp(x, -n)


@dataclass(frozen=True)
class Negation(BaseMap):
    exact_inverse = True

    def forward(self, x):
        return -x

    def inverse(self, x):
        return -x

    def iterate(self, x, n: int):
        return x if n % 2 == 0 else -x


@dataclass(frozen=True)
class Rotation(BaseMap):
    """Rotation of the unit circle by ``alpha``.

    Iterates are one modular step, ``x + (n alpha mod 1) mod 1``, so long
    orbits accumulate no round-off.
    """

    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ParameterError(f"rotation number must lie in (0, 1), got {self.alpha}")

    def forward(self, x):
        return self.iterate(x, 1)

    def inverse(self, x):
        return self.iterate(x, -1)

    def iterate(self, x, n: int):
        num, den = float(self.alpha).as_integer_ratio()
        shift = ((n * num) % den) / den
        y = np.mod(x + shift, 1.0)
        if isinstance(y, np.ndarray):
            y[y >= 1.0] = 0.0
            return y
        y = float(y)
        return 0.0 if y >= 1.0 else y

    def orbit(self, x, n: int) -> Iterator:
        sign = 1 if n >= 0 else -1
        for i in range(abs(n) + 1):
            yield self.iterate(x, sign * i)


@dataclass(frozen=True)
class FinitePermutation(BaseMap):
    table: tuple[tuple[float, float], ...]

    exact_inverse = True

    def __post_init__(self):
        pairs = tuple((float(a), float(b)) for a, b in self.table)
        src = [a for a, _ in pairs]
        dst = [b for _, b in pairs]
        if sorted(src) != sorted(dst) or len(set(src)) != len(src):
            raise ParameterError("finite permutation table must be a bijection of its points")
        object.__setattr__(self, "table", pairs)
        object.__setattr__(self, "_fwd", dict(pairs))
        object.__setattr__(self, "_inv", {b: a for a, b in pairs})

    def forward(self, x):
        return self._fwd[x]

    def inverse(self, x):
        return self._inv[x]


# -------------------------------------------------------------- return times


class ReturnTime:
    """A strictly positive roof function ``T`` on the base."""

    def __call__(self, x) -> float:
        raise NotImplementedError

    def knots(self) -> Sequence:
        return ()


@dataclass(frozen=True)
class Constant(ReturnTime):
    c: float

    def __call__(self, x):
        if isinstance(x, np.ndarray):
            return np.full(x.shape, float(self.c))
        return float(self.c)

    @property
    def mean(self) -> float:
        return float(self.c)


@dataclass(frozen=True)
class Reciprocal(ReturnTime):
    def __call__(self, x):
        return 1.0 / x


@dataclass(frozen=True)
class Quadratic(ReturnTime):
    def __call__(self, x):
        return 1.0 + x * x


@dataclass(frozen=True)
class Sinusoidal(ReturnTime):
    """``1 + amplitude * sin(2 pi x)``; its circle mean is exactly 1."""

    amplitude: float

    def __call__(self, x):
        return 1.0 + self.amplitude * np.sin(2.0 * np.pi * x)

    @property
    def mean(self) -> float:
        return 1.0

    @property
    def lipschitz(self) -> float:
        return 2.0 * math.pi * abs(self.amplitude)


@dataclass(frozen=True)
class PiecewiseLinear(ReturnTime):
    """Linear interpolation through sorted ``(position, value)`` knots.

    Off the knot support the roof equals ``default``.
    """

    knots_: tuple[tuple[float, float], ...]
    default: float = 1.0

    def __post_init__(self):
        pairs = tuple(sorted((float(p), float(v)) for p, v in self.knots_))
        xs = [p for p, _ in pairs]
        if len(pairs) == 0 or any(b <= a for a, b in zip(xs, xs[1:])):
            raise ParameterError("piecewise-linear knots must have distinct positions")
        object.__setattr__(self, "knots_", pairs)
        object.__setattr__(self, "_xs", np.array(xs))
        object.__setattr__(self, "_vs", np.array([v for _, v in pairs]))

    def __call__(self, x):
        lo, hi = self._xs[0], self._xs[-1]
        if isinstance(x, np.ndarray):
            out = np.interp(x, self._xs, self._vs)
            out[(x < lo) | (x > hi)] = self.default
            return out
        if x < lo or x > hi:
            return self.default
        return float(np.interp(x, self._xs, self._vs))

    def knots(self):
        return self._xs


# ----------------------------------------------------------------- the flow


BaseSpace = Union[Interval, Circle, FiniteSet, Any]


@dataclass(frozen=True)
class SuspensionFlow:
    """Suspension of ``map`` over ``base`` with roof ``time``.

    Construction audits positivity of the roof on a 10^4-point grid plus
    every knot, and that the map keeps grid points in the base (unless
    ``allow_exit`` marks a deliberately truncated, non-invariant base).
    """

    base: BaseSpace
    map: BaseMap
    time: ReturnTime
    name: str = ""
    allow_exit: bool = False
    audit: bool = True
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.audit:
            self._audit()

    def _audit(self):
        pts = list(self.base.grid(GRID_AUDIT))
        pts += [k for k in self.time.knots() if self.base.contains(float(k))]
        for x in pts:
            tx = self.time(x)
            if not (np.isfinite(tx) and tx > 0):
                raise ParameterError(f"return time must be positive, T({x}) = {tx}")
        if isinstance(self.time, PiecewiseLinear) and isinstance(self.base, Interval):
            lo, hi = self.time._xs[0], self.time._xs[-1]
            if (self.base.lo < lo and self.time._vs[0] != self.time.default) or (
                self.base.hi > hi and self.time._vs[-1] != self.time.default
            ):
                raise ParameterError("piecewise-linear roof is discontinuous where its knots meet the default")
        if not self.allow_exit:
            for x in pts[:: max(1, len(pts) // 500)]:
                for y in (self.map.forward(x), self.map.inverse(x)):
                    if not self.base.contains(y):
                        raise ParameterError(f"base map sends {x} to {y}, outside the base")

    def min_time(self, n: int = GRID_AUDIT) -> float:
        pts = list(self.base.grid(n)) + [k for k in self.time.knots() if self.base.contains(float(k))]
        return float(min(self.time(x) for x in pts))

    def step_forward(self, x):
        y = self.map.forward(x)
        if self.allow_exit and not self.base.contains(y):
            raise OrbitExit(f"orbit of {x} left the base", 1)
        return y

    def step_inverse(self, x):
        y = self.map.inverse(x)
        if self.allow_exit and not self.base.contains(y):
            raise OrbitExit(f"backward orbit of {x} left the base", -1)
        return y


class SuspState(NamedTuple):
    x: Any
    s: float


def check_state(flow: SuspensionFlow, state: SuspState) -> SuspState:
    x, s = state
    if not flow.base.contains(x):
        raise DomainError(f"base point {x!r} is not in {flow.base}")
    if not 0.0 <= s < flow.time(x):
        raise DomainError(f"fiber height {s} outside [0, T(x)) = [0, {flow.time(x)})")
    return SuspState(x, float(s))


def base_iterate(map: BaseMap, x, n: int):
    """``f^n(x)``; negative ``n`` applies the inverse."""
    if n == 0:
        return x
    return map.iterate(x, n)


def _orbit(flow: SuspensionFlow, x, n: int) -> Iterator:
    if not flow.allow_exit:
        yield from flow.map.orbit(x, n)
        return
    for i, y in enumerate(flow.map.orbit(x, n)):
        if not flow.base.contains(y):
            raise OrbitExit(f"orbit of {x} left the base after {i} steps", i if n >= 0 else -i)
        yield y


def birkhoff_sum(flow: SuspensionFlow, x, n: int) -> float:
    """``T_n(x)``: sum of ``T(f^i x)`` for ``0 <= i < n``; for ``n < 0`` it is
    ``-sum T(f^{-i} x)`` for ``1 <= i <= |n|``, so ``T_n`` is a cocycle on ℤ.
    """
    if n == 0:
        return 0.0
    it = _orbit(flow, x, n)
    if n > 0:
        total = math.fsum(flow.time(y) for _, y in zip(range(n), it))
        return total
    next(it)
    return -math.fsum(flow.time(y) for y in it)


def birkhoff_series(flow: SuspensionFlow, x, n: int) -> np.ndarray:
    """Array ``[T_0(x), T_sign(1)(x), ..., T_n(x)]`` of running Birkhoff sums."""
    vals = np.zeros(abs(n) + 1)
    if n == 0:
        return vals
    it = _orbit(flow, x, n)
    if n > 0:
        terms = [flow.time(y) for _, y in zip(range(n), it)]
        vals[1:] = np.cumsum(terms)
    else:
        next(it)
        vals[1:] = -np.cumsum([flow.time(y) for y in it])
    return vals


def suspension_evaluate(flow: SuspensionFlow, state: SuspState, t: float) -> SuspState:
    """Flow ``state`` for time ``t`` (either sign)."""
    x, s = check_state(flow, state)
    if t == 0:
        return SuspState(x, s)
    r = s + t
    if t > 0:
        tx = flow.time(x)
        while r >= tx:
            r -= tx
            x = flow.step_forward(x)
            tx = flow.time(x)
    else:
        while r < 0:
            x = flow.step_inverse(x)
            r += flow.time(x)
        # round-off can leave r == T(x) after adding it back
        if r >= flow.time(x):
            r -= flow.time(x)
            x = flow.step_forward(x)
    return SuspState(x, r)


def suspension_distance(flow: SuspensionFlow, a: SuspState, b: SuspState) -> float:
    """Metric on the mapping torus built from three local charts.

    Direct comparison, plus the two charts that pass through the gluing
    ``(x, T(x)) ~ (f(x), 0)`` from either side.
    """
    d_base = flow.base.distance
    xa, sa = a
    xb, sb = b
    direct = d_base(xa, xb) + abs(sa - sb)
    via_a = d_base(flow.map.forward(xa), xb) + (flow.time(xa) - sa) + sb
    via_b = d_base(xa, flow.map.forward(xb)) + (flow.time(xb) - sb) + sa
    return float(min(direct, via_a, via_b))


def check_bijective(map: BaseMap, points: Sequence, distance=None, tol: float = BIJECTION_TOL) -> float:
    """Largest ``|f^{-1}(f(x)) - x|`` over ``points``; raises if above ``tol``."""
    dist = distance or (lambda a, b: abs(a - b))
    worst = 0.0
    for x in points:
        err = dist(map.inverse(map.forward(x)), x)
        worst = max(worst, err)
        if err > tol:
            raise ParameterError(f"base map is not invertible at {x}: error {err}")
    return worst


@dataclass(frozen=True)
class InverseMap(BaseMap):
    inner: BaseMap

    exact_inverse = True

    def forward(self, x):
        return self.inner.inverse(x)

    def inverse(self, x):
        return self.inner.forward(x)

    def iterate(self, x, n: int):
        return self.inner.iterate(x, -n)


@dataclass(frozen=True)
class ShiftedRoof(ReturnTime):
    """``x -> T(f^{-1}(x))``, the roof of the time-reversed suspension."""

    inner: ReturnTime
    map: BaseMap

    def __call__(self, x):
        return self.inner(self.map.inverse(x))


def reversed_suspension(flow: SuspensionFlow) -> SuspensionFlow:
    """The time reversal: suspension of ``f^{-1}`` under ``T o f^{-1}``."""
    return SuspensionFlow(
        flow.base, InverseMap(flow.map), ShiftedRoof(flow.time, flow.map),
        name=f"{flow.name}~reversed", allow_exit=flow.allow_exit, audit=False,
    )
