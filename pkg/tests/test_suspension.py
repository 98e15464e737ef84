import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from explab.catalog import (
    GOLDEN,
    band_knots_suspension,
    disc_reciprocal_suspension,
    moebius_suspension,
    rotation_smooth_suspension,
)
from explab.errors import DomainError, OrbitExit, ParameterError
from explab.suspension import (
    Circle,
    Constant,
    FinitePermutation,
    FiniteSet,
    Halving,
    Identity,
    Interval,
    Negation,
    PiecewiseLinear,
    Reciprocal,
    Rotation,
    SuspensionFlow,
    SuspState,
    base_iterate,
    birkhoff_series,
    birkhoff_sum,
    check_bijective,
    reversed_suspension,
    suspension_distance,
    suspension_evaluate,
)


def unit_identity(c=1.0):
    return SuspensionFlow(Interval(0.0, 1.0), Identity(), Constant(c))


class TestBaseSpaces:
    def test_interval_order(self):
        with pytest.raises(ParameterError):
            Interval(1.0, 0.0)

    def test_finite_set_strictly_increasing(self):
        with pytest.raises(ParameterError):
            FiniteSet((0.0, 0.0, 1.0))

    def test_circle_distance_wraps(self):
        assert Circle().distance(0.05, 0.95) == pytest.approx(0.1)


class TestBaseIterate:
    def test_identity_large_n(self):
        assert base_iterate(Identity(), 0.37, 10**6) == 0.37

    def test_halving(self):
        assert base_iterate(Halving(), 1.0, 3) == 0.125

    def test_rotation_modular(self):
        assert base_iterate(Rotation(0.25), 0.9, 2) == pytest.approx(0.4, abs=1e-15)

    def test_zero_iterate_is_exact(self):
        for m in (Identity(), Halving(), Negation(), Rotation(GOLDEN)):
            assert base_iterate(m, 0.3, 0) == 0.3

    def test_negative_iterate_inverts(self):
        assert base_iterate(Halving(), 0.125, -3) == 1.0
        assert base_iterate(Rotation(0.25), 0.4, -2) == pytest.approx(0.9, abs=1e-15)

    def test_rotation_rejects_bad_alpha(self):
        with pytest.raises(ParameterError):
            Rotation(1.5)

    def test_permutation_cycle(self):
        perm = FinitePermutation(((0.0, 0.3), (0.3, 1.0), (1.0, 0.0)))
        assert base_iterate(perm, 0.0, 3) == 0.0
        assert base_iterate(perm, 0.0, -1) == 1.0

    def test_permutation_must_be_bijective(self):
        with pytest.raises(ParameterError):
            FinitePermutation(((0.0, 0.3), (0.3, 0.3)))

    @pytest.mark.parametrize("m", [Identity(), Negation(), Halving(), Rotation(GOLDEN)])
    def test_inverse_after_forward(self, m):
        pts = np.linspace(-0.9, 0.9, 101) if isinstance(m, Negation) else np.linspace(0.01, 0.99, 101)
        if isinstance(m, Rotation):
            worst = check_bijective(m, pts, Circle().distance)
        else:
            worst = check_bijective(m, pts)
        assert worst <= 1e-12


class TestRoofs:
    def test_piecewise_linear_default_off_support(self):
        T = PiecewiseLinear(((0.2, 1.0), (0.5, 3.0), (0.8, 1.0)))
        assert T(0.1) == 1.0 and T(0.35) == pytest.approx(2.0) and T(0.9) == 1.0

    def test_piecewise_linear_rejects_duplicate_knots(self):
        with pytest.raises(ParameterError):
            PiecewiseLinear(((0.2, 1.0), (0.2, 2.0)))

    def test_nonpositive_roof_rejected(self):
        with pytest.raises(ParameterError):
            SuspensionFlow(Interval(0.0, 1.0), Identity(), PiecewiseLinear(((0.0, 1.0), (0.5, -1.0), (1.0, 1.0))))

    def test_discontinuous_roof_rejected(self):
        with pytest.raises(ParameterError):
            SuspensionFlow(Interval(0.0, 1.0), Identity(), PiecewiseLinear(((0.2, 2.0), (0.8, 1.0))))

    def test_map_must_preserve_base(self):
        with pytest.raises(ParameterError):
            SuspensionFlow(Interval(0.0, 1.0), Negation(), Constant(1.0))


class TestBirkhoffSum:
    def test_zero_steps(self):
        assert birkhoff_sum(moebius_suspension(), 0.4, 0) == 0.0

    def test_constant_roof(self):
        assert birkhoff_sum(unit_identity(2.5), 0.3, 7) == pytest.approx(17.5)
        assert birkhoff_sum(unit_identity(2.5), 0.3, -4) == pytest.approx(-10.0)

    def test_identity_injective_roof_gap_is_linear(self):
        T = PiecewiseLinear(((0.0, 1.0), (1.0, 2.0)))
        flow = SuspensionFlow(Interval(0.0, 1.0), Identity(), T)
        x, y = 0.25, 0.75
        for n in (1, 5, 40):
            assert birkhoff_sum(flow, y, n) - birkhoff_sum(flow, x, n) == n * (T(y) - T(x))

    def test_reciprocal_values(self):
        disc = disc_reciprocal_suspension()
        assert birkhoff_sum(disc, 1.0, 3) == 1.0 + 2.0 + 4.0

    def test_truncated_orbit_exits(self):
        disc = disc_reciprocal_suspension(0.1)
        with pytest.raises(OrbitExit):
            birkhoff_sum(disc, 0.5, 5)

    def test_series_matches_sums(self):
        flow = rotation_smooth_suspension()
        series = birkhoff_series(flow, 0.123, 30)
        for n in (0, 1, 7, 30):
            assert series[n] == pytest.approx(birkhoff_sum(flow, 0.123, n), abs=1e-12)


class TestEvaluate:
    def test_zero_time(self):
        assert suspension_evaluate(moebius_suspension(), SuspState(0.3, 0.2), 0.0) == (0.3, 0.2)

    def test_constant_identity(self):
        x, s = suspension_evaluate(unit_identity(), SuspState(0.4, 0.0), 2.5)
        assert x == 0.4 and s == pytest.approx(0.5)

    def test_halving_reciprocal_lands_on_section(self):
        disc = disc_reciprocal_suspension()
        x, s = suspension_evaluate(disc, SuspState(1.0, 0.0), 3.0)
        assert x == 0.25 and s == pytest.approx(0.0, abs=1e-12)

    def test_negative_time(self):
        flow = moebius_suspension()
        x, s = suspension_evaluate(flow, SuspState(0.5, 0.1), -0.3)
        # one step back through the gluing: f^{-1}(0.5) = -0.5, T(-0.5) = 1.25
        assert x == -0.5 and s == pytest.approx(1.25 - 0.2)

    def test_invalid_state(self):
        with pytest.raises(DomainError):
            suspension_evaluate(unit_identity(), SuspState(0.4, 1.5), 1.0)


class TestDistance:
    def test_self(self):
        flow = unit_identity()
        assert suspension_distance(flow, SuspState(0.3, 0.4), SuspState(0.3, 0.4)) == 0.0

    def test_same_fiber(self):
        flow = unit_identity()
        assert suspension_distance(flow, SuspState(0.3, 0.2), SuspState(0.3, 0.7)) == pytest.approx(0.5)

    def test_wrap_through_gluing(self):
        flow = unit_identity()
        assert suspension_distance(flow, SuspState(0.3, 0.95), SuspState(0.3, 0.0)) == pytest.approx(0.05)

    def test_symmetric(self):
        flow = moebius_suspension()
        a, b = SuspState(0.2, 1.0), SuspState(-0.2, 0.1)
        assert suspension_distance(flow, a, b) == suspension_distance(flow, b, a)


class TestReversal:
    def test_reversed_sums_mirror(self):
        flow = rotation_smooth_suspension()
        rev = reversed_suspension(flow)
        for n in (1, 5, 20):
            assert birkhoff_sum(rev, 0.3, n) == pytest.approx(-birkhoff_sum(flow, 0.3, -n), abs=1e-12)


# ------------------------------------------------------------- properties

circle_pt = st.floats(0.0, 1.0, exclude_max=True)
steps = st.integers(-200, 200)


@settings(max_examples=60, deadline=None)
@given(circle_pt, steps, steps)
def test_cocycle_on_rotation(x, m, n):
    flow = rotation_smooth_suspension(GOLDEN, 0.3)
    lhs = birkhoff_sum(flow, x, m + n)
    rhs = birkhoff_sum(flow, base_iterate(flow.map, x, n), m) + birkhoff_sum(flow, x, n)
    assert abs(lhs - rhs) < 1e-10


@settings(max_examples=40, deadline=None)
@given(st.floats(-1.0, 1.0), steps, steps)
def test_cocycle_on_moebius(x, m, n):
    flow = moebius_suspension()
    lhs = birkhoff_sum(flow, x, m + n)
    rhs = birkhoff_sum(flow, base_iterate(flow.map, x, n), m) + birkhoff_sum(flow, x, n)
    assert abs(lhs - rhs) < 1e-10


@settings(max_examples=40, deadline=None)
@given(st.floats(0.5, 1.0), st.integers(0, 30), st.integers(0, 10))
def test_cocycle_on_band_knots_forward(x, m, n):
    flow = band_knots_suspension(30)
    lhs = birkhoff_sum(flow, x, m + n)
    rhs = birkhoff_sum(flow, base_iterate(flow.map, x, n), m) + birkhoff_sum(flow, x, n)
    assert abs(lhs - rhs) < 1e-10


def _state_close(flow, a, b, tol):
    return suspension_distance(flow, a, b) < tol


@settings(max_examples=60, deadline=None)
@given(circle_pt, st.floats(0.0, 0.999), st.floats(-30.0, 30.0), st.floats(-30.0, 30.0))
def test_semigroup(x, frac, s, t):
    flow = rotation_smooth_suspension(GOLDEN, 0.3)
    state = SuspState(x, frac * flow.time(x))
    two = suspension_evaluate(flow, suspension_evaluate(flow, state, s), t)
    one = suspension_evaluate(flow, state, s + t)
    assert _state_close(flow, two, one, 1e-9)


@settings(max_examples=60, deadline=None)
@given(circle_pt, st.integers(-100, 100))
def test_section_recovery(x, n):
    flow = rotation_smooth_suspension(GOLDEN, 0.3)
    landed = suspension_evaluate(flow, SuspState(x, 0.0), birkhoff_sum(flow, x, n))
    target = SuspState(base_iterate(flow.map, x, n), 0.0)
    assert _state_close(flow, landed, target, 1e-10)


@settings(max_examples=60)
@given(circle_pt, st.integers(1, 50), st.integers(2, 60))
def test_rational_rotation_period(x, p, q):
    assume(p < q and math.gcd(p, q) == 1)
    m = Rotation(p / q)
    assert Circle().distance(base_iterate(m, x, q), x) < 1e-12


@settings(max_examples=60, deadline=None)
@given(circle_pt, st.integers(1, 300))
def test_birkhoff_positive_and_increasing(x, n):
    flow = rotation_smooth_suspension(GOLDEN, 0.9)
    series = birkhoff_series(flow, x, n)
    assert series[1] > 0 and np.all(np.diff(series) > 0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.001, 1.0), st.integers(1, 9))
def test_reciprocal_positive_on_truncated_orbit(x, n):
    flow = disc_reciprocal_suspension(2.0 ** -10)
    assume(x * 2.0 ** -(n - 1) >= 2.0 ** -10)
    assert birkhoff_sum(flow, x, n) > 0
    assert isinstance(Reciprocal()(x), float)
