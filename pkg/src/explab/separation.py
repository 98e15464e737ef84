"""Separation tests for flows and suspensions.

Every "not separated" verdict is relative to a finite horizon and grid
and carries a margin: the threshold minus the largest observed distance
(or time gap).  Ties at the threshold count as separated.
"""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional, Sequence, Union

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError, ExplabError, OrbitExit, ParameterError
from .flowcore import (
    DEFAULT_DT,
    Trajectory,
    VectorFieldSpec,
    _as_points,
    _rk4,
    check_in_domain,
    n_samples,
    pairwise_distance,
    rowwise_distance,
)
from .suspension import Constant, Rotation, Sinusoidal, SuspensionFlow

CERTIFICATE_THRESHOLD = 1e3


class SeparationMode(str, enum.Enum):
    Forward = "forward"
    Backward = "backward"
    Bidirectional = "bidirectional"


def _mode(mode) -> SeparationMode:
    if isinstance(mode, SeparationMode):
        return mode
    try:
        return SeparationMode(str(mode).lower())
    except ValueError:
        raise ParameterError(f"unknown separation mode {mode!r}") from None


@dataclass(frozen=True)
class SeparationVerdict:
    separated: bool
    threshold: float
    horizon: float
    margin: float
    witness_time: Optional[float] = None
    witness_index: Optional[int] = None
    channel: Optional[str] = None

    def __post_init__(self):
        has_witness = self.witness_time is not None or self.witness_index is not None
        if self.separated != has_witness:
            raise ParameterError("a verdict is separated exactly when it carries a witness")
        if not self.threshold > 0:
            raise ParameterError("threshold must be positive")

    @property
    def witness(self):
        return self.witness_time if self.witness_time is not None else self.witness_index


# ------------------------------------------------------ continuous-time flows


def _first_crossing(spec, A, B, delta, horizon, dt, sign):
    """Per-pair first sample index with distance >= delta, and max distance seen.

    ``A`` and ``B`` hold one pair per row; all rows share one step grid.
    """
    k = len(A)
    pts = np.vstack([A, B])
    dom = spec.domain
    n = n_samples(horizon, dt)
    hit = np.full(k, -1)
    dmax = rowwise_distance(dom, A, B)
    hit[dmax >= delta] = 0
    h = sign * dt
    for i in range(1, n):
        if (hit >= 0).all():
            break
        pts = _rk4(spec, pts, h)
        d = rowwise_distance(dom, pts[:k], pts[k:])
        dmax = np.maximum(dmax, np.where(hit >= 0, dmax, d))
        new = (hit < 0) & (d >= delta)
        hit[new] = i
    return hit, dmax, n - 1


def _continuous_batch(spec, A, B, delta, horizon, dt, mode):
    mode = _mode(mode)
    results = []
    dirs = {SeparationMode.Forward: (1,), SeparationMode.Backward: (-1,),
            SeparationMode.Bidirectional: (1, -1)}[mode]
    per_dir = {sign: _first_crossing(spec, A, B, delta, horizon, dt, sign) for sign in dirs}
    for p in range(len(A)):
        best = None
        dmax = 0.0
        for sign in dirs:
            hit, dm, _ = per_dir[sign]
            dmax = max(dmax, float(dm[p]))
            if hit[p] >= 0:
                t = sign * hit[p] * dt
                if best is None or abs(t) < abs(best):
                    best = t
        if best is not None:
            results.append(SeparationVerdict(True, delta, horizon, delta - dmax, witness_time=float(best)))
        else:
            results.append(SeparationVerdict(False, delta, horizon, delta - dmax))
    return results


def separation_time(spec: VectorFieldSpec, a, b, delta: Optional[float] = None, horizon: float = 10.0,
                    dt: float = DEFAULT_DT, mode="forward") -> SeparationVerdict:
    """First sampled time at which the orbits of ``a`` and ``b`` are ``delta`` apart.

    Both points ride the same step grid with no reparametrisation.
    Backward mode integrates with negative steps (the reversed field) and
    reports a negative witness time; bidirectional keeps the witness of
    smaller magnitude.
    """
    A = check_in_domain(spec.domain, a, "a").reshape(1, 2)
    B = check_in_domain(spec.domain, b, "b").reshape(1, 2)
    if np.array_equal(A, B):
        raise ParameterError("separation_time needs two distinct points")
    if delta is None:
        delta = 0.1 * spec.domain.diameter
    if not delta > 0 or not horizon > 0 or not dt > 0:
        raise ParameterError("delta, horizon and dt must be positive")
    return _continuous_batch(spec, A, B, delta, horizon, dt, mode)[0]


# --------------------------------------------------------------- suspensions


def default_rho(flow: SuspensionFlow) -> float:
    """Half the minimum return time."""
    return 0.5 * flow.min_time()


def _scan(flow: SuspensionFlow, x, y, rho: float, N: int, sign: int):
    """Walk n = 0, sign, ..., sign*N; return (witness, channel, max seen, last n)."""
    d_base = flow.base.distance
    T = flow.time
    step = flow.step_forward if sign > 0 else flow.step_inverse
    gap = 0.0
    worst = 0.0
    n = 0
    xn, yn = x, y
    while True:
        d = d_base(xn, yn)
        if d >= rho:
            return n, "base-distance", max(worst, d), n
        if abs(gap) >= rho:
            return n, "time-gap", max(worst, abs(gap)), n
        worst = max(worst, d, abs(gap))
        if abs(n) >= N:
            return None, None, worst, n
        try:
            if sign > 0:
                gap += T(xn) - T(yn)
                xn, yn = step(xn), step(yn)
            else:
                xn, yn = step(xn), step(yn)
                gap -= T(xn) - T(yn)
        except OrbitExit:
            return None, None, worst, n
        n += sign


def kinematic_check_pair(flow: SuspensionFlow, x, y, rho: Optional[float] = None, N: int = 1000,
                         mode="forward") -> SeparationVerdict:
    """Scan ``dist(f^n x, f^n y)`` and ``|T_n(x) - T_n(y)|`` against ``rho``.

    Reports the first index ``n`` where either reaches ``rho`` and which
    channel fired.  Orbits of non-invariant (truncated) bases stop where
    they leave the base; ``horizon`` then records the last index reached.
    """
    if rho is None:
        rho = default_rho(flow)
    if not rho > 0 or N < 1:
        raise ParameterError("rho must be positive and N >= 1")
    for p in (x, y):
        if not flow.base.contains(p):
            raise DomainError(f"{p!r} is not a point of the base")
    mode = _mode(mode)
    signs = {SeparationMode.Forward: (1,), SeparationMode.Backward: (-1,),
             SeparationMode.Bidirectional: (1, -1)}[mode]
    best = None
    worst = 0.0
    reach = 0
    for sign in signs:
        w, ch, seen, last = _scan(flow, x, y, rho, N, sign)
        worst = max(worst, seen)
        reach = max(reach, abs(last))
        if w is not None and (best is None or abs(w) < abs(best[0])):
            best = (w, ch)
    if best is None:
        return SeparationVerdict(False, rho, reach, rho - worst)
    return SeparationVerdict(True, rho, reach, rho - worst, witness_index=best[0], channel=best[1])


@dataclass(frozen=True)
class SeriesCertificate:
    """Partial sums ``S_N = sum_{i<=N} T(f^i x) - T(f^i y)``."""

    partial_sums: np.ndarray
    threshold: float
    crossed: Optional[int]


def divergence_partial_sums(flow: SuspensionFlow, x, y, N: int,
                            threshold: float = CERTIFICATE_THRESHOLD) -> SeriesCertificate:
    """Running sums of return-time gaps along the paired orbits of ``x`` and ``y``.

    ``S_N`` equals ``T_{N+1}(x) - T_{N+1}(y)``.  Truncated bases stop the
    series where an orbit leaves the base.
    """
    if N < 1:
        raise ParameterError("N must be >= 1")
    if x == y:
        raise ParameterError("divergence certificate needs two distinct points")
    T = flow.time
    terms = []
    xn, yn = x, y
    for i in range(N + 1):
        terms.append(T(xn) - T(yn))
        if i == N:
            break
        try:
            xn, yn = flow.step_forward(xn), flow.step_forward(yn)
        except OrbitExit:
            break
    sums = np.cumsum(terms)
    over = np.nonzero(np.abs(sums) > threshold)[0]
    return SeriesCertificate(sums, threshold, int(over[0]) if over.size else None)


# ------------------------------------------------------------------ Fréchet


def discrete_frechet(ta: Trajectory, tb: Trajectory) -> float:
    """Discrete Fréchet distance between two sampled trajectories.

    Monotone couplings anchored at both ends, measured in the shared
    domain's metric.
    """
    if ta.domain != tb.domain:
        raise DomainError(f"trajectories live on different domains: {ta.domain} vs {tb.domain}")
    d = pairwise_distance(ta.domain, ta.points, tb.points)
    p, q = d.shape
    prev = np.maximum.accumulate(d[0])
    for i in range(1, p):
        row = np.empty(q)
        row[0] = max(prev[0], d[i, 0])
        # diagonal and vertical predecessors are known up front; only the
        # horizontal one forces a sequential scan
        up = np.minimum(prev[1:], prev[:-1])
        di = d[i]
        r = row[0]
        for j in range(1, q):
            m = up[j - 1]
            if r < m:
                m = r
            r = m if m > di[j] else di[j]
            row[j] = r
        prev = row
    return float(prev[-1])


# ------------------------------------------------------------------- sweeps


@dataclass
class SweepReport:
    verdicts: list
    pairs: list
    errors: dict = field(default_factory=dict)

    @property
    def fraction_separated(self) -> float:
        ok = [v for v in self.verdicts if v is not None]
        return sum(v.separated for v in ok) / len(ok) if ok else 0.0

    @property
    def witnesses(self) -> list:
        return [v.witness for v in self.verdicts if v is not None and v.separated]

    @property
    def min_witness(self):
        w = self.witnesses
        return min(w, key=abs) if w else None

    @property
    def max_witness(self):
        w = self.witnesses
        return max(w, key=abs) if w else None

    def by_margin(self) -> list[int]:
        """Pair indices ordered from the most to the least comfortably unseparated."""
        idx = [i for i, v in enumerate(self.verdicts) if v is not None]
        return sorted(idx, key=lambda i: (-self.verdicts[i].margin, i))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["pair_id", "x", "y", "separated", "witness", "channel", "margin"])
        for i, (pair, v) in enumerate(zip(self.pairs, self.verdicts)):
            x, y = (_fmt_point(p) for p in pair)
            if v is None:
                w.writerow([i, x, y, "error", "", self.errors.get(i, ""), ""])
                continue
            witness = "" if v.witness is None else repr(v.witness)
            w.writerow([i, x, y, str(v.separated).lower(), witness, v.channel or "", repr(float(v.margin))])
        return buf.getvalue()


def _fmt_point(p) -> str:
    if isinstance(p, tuple) and hasattr(p, "_fields") and "u" in p._fields:
        return f"J{p.n}:{p.u!r}"
    arr = np.atleast_1d(np.asarray(p, dtype=float))
    return " ".join(repr(float(c)) for c in arr)


def _one_pair(target, pair, threshold, horizon, mode, dt):
    a, b = pair
    if isinstance(target, VectorFieldSpec):
        if np.array_equal(np.asarray(a, float), np.asarray(b, float)):
            return SeparationVerdict(False, threshold, horizon, threshold)
        return separation_time(target, a, b, threshold, horizon, dt, mode)
    return kinematic_check_pair(target, a, b, threshold, int(horizon), mode)


def pair_sweep(target: Union[VectorFieldSpec, SuspensionFlow], pairs: Sequence, threshold: Optional[float] = None,
               horizon: float = 10.0, mode="forward", dt: float = DEFAULT_DT, n_jobs: Optional[int] = None
               ) -> SweepReport:
    """Run the separation test on every pair and aggregate.

    For a vector field ``threshold`` is delta and ``horizon`` a time; for a
    suspension they are rho and the iterate count N.  Errors on single
    pairs are recorded and the sweep continues; output keeps pair order.
    """
    pairs = list(pairs)
    if not pairs:
        raise ParameterError("pair_sweep needs at least one pair")
    if threshold is None:
        threshold = (0.1 * target.domain.diameter if isinstance(target, VectorFieldSpec)
                     else default_rho(target))
    if isinstance(target, VectorFieldSpec) and n_jobs in (None, 1):
        try:
            A = np.array([np.asarray(a, float) for a, _ in pairs])
            B = np.array([np.asarray(b, float) for _, b in pairs])
            check_in_domain(target.domain, A)
            check_in_domain(target.domain, B)
            verdicts = _continuous_batch(target, A, B, threshold, horizon, dt, mode)
            for i, (a, b) in enumerate(pairs):
                if np.array_equal(A[i], B[i]):
                    verdicts[i] = SeparationVerdict(False, threshold, horizon, threshold)
            return SweepReport(verdicts, pairs)
        except ExplabError:
            pass  # fall back to per-pair runs so the failing pairs are isolated

    def run(pair):
        try:
            return _one_pair(target, pair, threshold, horizon, mode, dt), None
        except ExplabError as exc:
            return None, f"{type(exc).__name__}: {exc}"

    if n_jobs in (None, 1):
        out = [run(p) for p in pairs]
    else:
        from joblib import Parallel, delayed

        out = Parallel(n_jobs=n_jobs, prefer="threads")(delayed(run)(p) for p in pairs)
    verdicts = [v for v, _ in out]
    errors = {i: e for i, (_, e) in enumerate(out) if e is not None}
    return SweepReport(verdicts, pairs, errors)


# ------------------------------------------------- Denjoy-Koksma obstruction


def continued_fraction_denominators(alpha: float, k: int) -> list[int]:
    """Denominators ``q_1 < q_2 < ... < q_k`` of the convergents of ``alpha``.

    The expansion runs in exact arithmetic on the binary value of
    ``alpha``; a partial quotient above 10^9 or a terminating expansion
    means ``alpha`` is rational to working precision.
    """
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    if not 1 <= k <= 25:
        raise ParameterError(f"k must lie in [1, 25], got {k}")
    x = Fraction(alpha)
    q_prev, q = 0, 1
    qs: list[int] = []
    quotients: list[int] = []
    while len(qs) < k:
        if x == 0:
            raise ParameterError(f"alpha is rational; expansion ended with quotients {quotients}")
        x = 1 / x
        a = math.floor(x)
        x -= a
        if a > 10 ** 9:
            raise ParameterError(f"alpha is effectively rational; partial quotients so far {quotients}")
        quotients.append(a)
        q_prev, q = q, a * q + q_prev
        if not qs or q > qs[-1]:
            qs.append(q)
    return qs


def sinusoid_koksma_bound(amplitude: float, alpha: float, q: int) -> float:
    """``amplitude |sin(pi q alpha)| / |sin(pi alpha)|``: the exact sup of ``|T_q - q|``
    for the roof ``1 + amplitude sin(2 pi x)`` over the rotation by ``alpha``.
    """
    return abs(amplitude) * abs(math.sin(math.pi * q * alpha)) / abs(math.sin(math.pi * alpha))


def _mean_roof(flow: SuspensionFlow, grid: int) -> float:
    T = flow.time
    mean = getattr(T, "mean", None)
    if mean is not None:
        return float(mean)
    x = np.arange(grid) / grid
    return float(np.mean(T(x)))


def denjoy_koksma_gap(flow: SuspensionFlow, n: int, grid: int = 10_000) -> float:
    """``g_n = sup_x |tau q_n - T_{q_n}(x)|`` for a smooth roof over a rotation.

    ``tau`` is the mean of the roof.  The sup is taken on a uniform grid and
    then polished by a bounded scalar search around the best grid point.
    """
    if not isinstance(flow.map, Rotation):
        raise ParameterError("denjoy_koksma_gap needs a rotation base map")
    if not isinstance(flow.time, (Sinusoidal, Constant)) and not hasattr(flow.time, "mean"):
        raise ParameterError("denjoy_koksma_gap needs a smooth roof with known mean")
    if grid < 1000:
        raise ParameterError("grid must be at least 1000")
    q = continued_fraction_denominators(flow.map.alpha, n)[-1]
    tau = _mean_roof(flow, grid)
    T = flow.time
    rot = flow.map

    def birkhoff(xs):
        total = np.zeros_like(xs)
        for i in range(q):
            total += T(rot.iterate(xs, i))
        return total

    xs = np.arange(grid) / grid
    dev = np.abs(tau * q - birkhoff(xs))
    k = int(np.argmax(dev))
    h = 1.0 / grid
    res = minimize_scalar(lambda t: -abs(tau * q - birkhoff(np.array([t % 1.0]))[0]),
                          bounds=(xs[k] - h, xs[k] + h), method="bounded",
                          options={"xatol": 1e-12})
    return float(max(dev[k], -res.fun))
