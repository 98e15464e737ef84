"""Circles blown up along a rotation orbit.

Starting from the rotation ``x -> x + alpha`` of [0, 1), every orbit
point ``x_n = n alpha mod 1`` is replaced by an interval ``J_n`` of length
``lengths(n)``.  Points of the new circle are coded as either

* a plain ``float`` ``theta``: an original point off the orbit of 0, or
* ``CodedPoint(n, u)``: the point at relative position ``u`` in ``J_n``
  (``u = 0`` is the left end ``x_n^-``, ``u = 1`` the right end ``x_n^+``).

The lifted map sends ``theta`` to ``theta + alpha`` and ``J_n`` affinely
onto ``J_{n+1}``, i.e. ``(n, u) -> (n + 1, u)``.  On codes this is an exact
bijection for every ``n``; only the float embedding used for distances is
truncated, summing interval lengths for ``|n| <= cap``.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import ParameterError
from .suspension import BaseMap, ReturnTime


class CodedPoint(NamedTuple):
    n: int
    u: float


def orbit_position(alpha: float, n: int) -> float:
    """``n alpha mod 1`` in [0, 1), computed exactly for the binary ``alpha``.

    Float products ``n * alpha`` lose the small fractional parts that
    deep record-minimum orbit points depend on.
    """
    num, den = float(alpha).as_integer_ratio()
    y = ((n * num) % den) / den
    return 0.0 if y >= 1.0 else y


@dataclass(frozen=True)
class InsertionCircle:
    """Unit circle with intervals of length ``base_length * 2**-|n|`` inserted at ``x_n``.

    The whole circle is rescaled by ``1 + total`` so that embedded
    coordinates stay in [0, 1).
    """

    alpha: float
    base_length: float
    cap: int

    _xs: np.ndarray = field(init=False, repr=False, compare=False)
    _cum: np.ndarray = field(init=False, repr=False, compare=False)
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ParameterError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.base_length > 0:
            raise ParameterError("inserted interval length must be positive")
        ns = list(range(-self.cap, self.cap + 1))
        pos = [orbit_position(self.alpha, n) for n in ns]
        order = np.argsort(pos, kind="stable")
        xs = np.array(pos)[order]
        if np.any(np.diff(xs) <= 0):
            raise ParameterError("orbit points collide at this cap; alpha is effectively rational")
        lens = np.array([self.length(ns[i]) for i in order])
        cum = np.concatenate([[0.0], np.cumsum(lens)])
        object.__setattr__(self, "_xs", xs)
        object.__setattr__(self, "_cum", cum)
        object.__setattr__(self, "_index", {ns[i]: k for k, i in enumerate(order)})

    def length(self, n: int) -> float:
        """Unscaled length of ``J_n``."""
        return math.ldexp(self.base_length, -abs(n))

    @property
    def total(self) -> float:
        """Total inserted length for ``|n| <= cap``."""
        return float(self._cum[-1])

    @property
    def scale(self) -> float:
        return 1.0 + self.total

    def contains(self, p) -> bool:
        if isinstance(p, CodedPoint):
            return 0.0 <= p.u <= 1.0
        return isinstance(p, (float, int, np.floating)) and 0.0 <= p < 1.0

    def _shift_before(self, theta: float) -> float:
        return float(self._cum[bisect.bisect_left(self._xs, theta)])

    def embed(self, p) -> float:
        """Coordinate of ``p`` on the rescaled circle, in [0, 1)."""
        if isinstance(p, CodedPoint):
            theta = orbit_position(self.alpha, p.n)
            k = self._index.get(p.n)
            inner = p.u * self.length(p.n) if k is not None else 0.0
            before = float(self._cum[k]) if k is not None else self._shift_before(theta)
            return (theta + before + inner) / self.scale
        return (p + self._shift_before(p)) / self.scale

    def interval(self, n: int) -> tuple[float, float]:
        """Embedded endpoints of ``J_n`` (requires ``|n| <= cap``)."""
        left = self.embed(CodedPoint(n, 0.0))
        return left, left + self.length(n) / self.scale

    def distance(self, a, b) -> float:
        if isinstance(a, CodedPoint) and isinstance(b, CodedPoint) and a.n == b.n:
            # exact inside one inserted interval, for every n
            return abs(a.u - b.u) * self.length(a.n) / self.scale
        d = abs(self.embed(a) - self.embed(b)) % 1.0
        return min(d, 1.0 - d)

    def grid(self, n: int) -> np.ndarray:
        # offset keeps grid points off the (countable) orbit of 0
        return (np.arange(n) + 0.5 * math.sqrt(2) - 0.5) / n


@dataclass(frozen=True)
class InsertedRotation(BaseMap):
    """The rotation lifted to an :class:`InsertionCircle`."""

    alpha: float
    exact_inverse = True

    def forward(self, p):
        return self.iterate(p, 1)

    def inverse(self, p):
        return self.iterate(p, -1)

    def iterate(self, p, n: int):
        if isinstance(p, CodedPoint):
            return CodedPoint(p.n + n, p.u)
        y = p + orbit_position(self.alpha, n)
        return y - 1.0 if y >= 1.0 else y

    def orbit(self, p, n: int):
        sign = 1 if n >= 0 else -1
        for i in range(abs(n) + 1):
            yield self.iterate(p, sign * i)


@dataclass(frozen=True)
class DenjoyTent(ReturnTime):
    """Roof equal to 1 except on forward images ``J_n`` (``n >= 1``).

    There it is a tent with peak ``1 + 1/n`` at relative position
    ``1/(n + 2)`` and value 1 at both ends of the interval.
    """

    def __call__(self, p):
        if not isinstance(p, CodedPoint) or p.n < 1:
            return 1.0
        peak = 1.0 / (p.n + 2)
        height = 1.0 / p.n
        if p.u <= peak:
            return 1.0 + height * p.u / peak
        return 1.0 + height * (1.0 - p.u) / (1.0 - peak)

    @staticmethod
    def peak_point(n: int) -> CodedPoint:
        return CodedPoint(n, 1.0 / (n + 2))


@dataclass(frozen=True)
class NotchedRoof(ReturnTime):
    """Roof for the minimal split-rotation example.

    ``notches`` holds ``(n_j, x_{n_j}, delta_j, j)``.  On the original
    circle the roof is ``1 + 1/j`` at ``x_{n_j}`` falling linearly to 1 at
    ``x_{n_j} + delta_j``, and 1 elsewhere.  The split at ``x_{n_j}``
    carries the left limit 1 on ``x^-`` and ``1 + 1/j`` on ``x^+``,
    interpolated across the inserted interval.
    """

    alpha: float
    notches: tuple[tuple[int, float, float, int], ...]
    _by_index: dict = field(init=False, repr=False, compare=False)
    _starts: list = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_by_index", {n: (x, d, j) for n, x, d, j in self.notches})
        ordered = sorted((x, d, j) for _, x, d, j in self.notches)
        object.__setattr__(self, "_starts", ordered)

    def _plain(self, theta: float) -> float:
        k = bisect.bisect_right(self._starts, (theta, math.inf, math.inf)) - 1
        if k < 0:
            return 1.0
        x, d, j = self._starts[k]
        if theta <= x or theta >= x + d:
            return 1.0
        return 1.0 + (1.0 / j) * (1.0 - (theta - x) / d)

    def __call__(self, p):
        if isinstance(p, CodedPoint):
            hit = self._by_index.get(p.n)
            if hit is not None:
                return 1.0 + p.u / hit[2]
            return self._plain(orbit_position(self.alpha, p.n))
        return self._plain(p)

    def right_limit(self, theta: float, eps: float) -> float:
        return self._plain(theta + eps)

    def left_limit(self, theta: float, eps: float) -> float:
        return self._plain(theta - eps)
