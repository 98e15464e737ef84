import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from explab.catalog import (
    GOLDEN,
    disc_reciprocal_suspension,
    ks_minimal_suspension,
    moebius_suspension,
    periodic_band,
    rotation_smooth_suspension,
    torus_fake_saddle,
)
from explab.errors import DomainError, ParameterError
from explab.flowcore import Annulus, Disc, Trajectory, rowwise_distance, sample_trajectory
from explab.separation import (
    SeparationMode,
    SeparationVerdict,
    continued_fraction_denominators,
    denjoy_koksma_gap,
    discrete_frechet,
    divergence_partial_sums,
    kinematic_check_pair,
    pair_sweep,
    separation_time,
    sinusoid_koksma_bound,
)
from explab.suspension import Constant, Identity, Interval, SuspensionFlow, birkhoff_sum, reversed_suspension

BAND = periodic_band()
RIGID = periodic_band(True)


def two_circle_oracle(r1, r2, delta):
    """First t where points on circles r1, r2 at angular speeds 1/r are delta apart."""
    c = (r1 * r1 + r2 * r2 - delta * delta) / (2 * r1 * r2)
    return math.acos(c) / abs(1 / r1 - 1 / r2)


class TestVerdict:
    def test_witness_required(self):
        with pytest.raises(ParameterError):
            SeparationVerdict(True, 0.1, 1.0, 0.0)
        with pytest.raises(ParameterError):
            SeparationVerdict(False, 0.1, 1.0, 0.0, witness_index=3)

    def test_threshold_positive(self):
        with pytest.raises(ParameterError):
            SeparationVerdict(False, 0.0, 1.0, 0.0)


class TestSeparationTime:
    def test_rigid_never_separates(self):
        v = separation_time(RIGID, (1, 0), (1.1, 0), 0.5, 100)
        assert not v.separated and v.margin == pytest.approx(0.4, abs=1e-6)

    def test_band_matches_two_circle_oracle(self):
        v = separation_time(BAND, (1, 0), (1.1, 0), 0.2, 10)
        oracle = two_circle_oracle(1.0, 1.1, 0.2)
        assert v.separated and abs(v.witness_time - oracle) / oracle < 0.15

    def test_delta_above_diameter(self):
        v = separation_time(BAND, (1, 0), (-1.5, 0), 5.0, 10)
        assert not v.separated

    def test_equal_points_rejected(self):
        with pytest.raises(ParameterError):
            separation_time(BAND, (1, 0), (1, 0), 0.2)

    def test_tie_counts_as_separated(self):
        v = separation_time(RIGID, (1, 0), (2, 0), 1.0, 1.0)
        assert v.separated and v.witness_time == 0.0

    def test_backward_mirror(self):
        fwd = separation_time(BAND, (1, 0), (1.1, 0), 0.2, 10)
        bwd = separation_time(BAND, (1, 0), (1.1, 0), 0.2, 10, mode="backward")
        assert bwd.witness_time == pytest.approx(-fwd.witness_time, abs=2e-3)

    def test_bidirectional_takes_smaller(self):
        v = separation_time(BAND, (1, 0), (1.1, 0), 0.2, 10, mode=SeparationMode.Bidirectional)
        assert abs(v.witness_time) == pytest.approx(1.819, abs=2e-3)

    def test_default_delta(self):
        v = separation_time(BAND, (1, 0), (1.1, 0), horizon=1.0)
        assert v.threshold == pytest.approx(0.4)

    def test_torus(self):
        v = separation_time(torus_fake_saddle(), (0.3, 0.3), (0.3, 0.31), 0.05, 5.0, dt=0.01)
        assert v.threshold == 0.05


class TestKinematicCheck:
    def test_same_point(self):
        v = kinematic_check_pair(moebius_suspension(), 0.3, 0.3, rho=0.01, N=500)
        assert not v.separated and v.margin == 0.01

    def test_moebius_pair(self):
        v = kinematic_check_pair(moebius_suspension(), 0.1, -0.1, rho=0.5, N=10000)
        assert not v.separated and v.margin == pytest.approx(0.3)

    def test_halving_reciprocal_witness(self):
        flow = disc_reciprocal_suspension()
        v = kinematic_check_pair(flow, 0.5, 0.75, rho=3.0, N=50)
        assert v.separated and v.channel == "time-gap"
        # index n compares |T_n(x) - T_n(y)|, the sum of the first n gaps
        assert v.witness_index == 3
        assert abs(birkhoff_sum(flow, 0.5, 3) - birkhoff_sum(flow, 0.75, 3)) >= 3.0
        assert abs(birkhoff_sum(flow, 0.5, 2) - birkhoff_sum(flow, 0.75, 2)) < 3.0

    def test_base_channel(self):
        v = kinematic_check_pair(moebius_suspension(), 0.1, -0.4, rho=0.5, N=10)
        assert v.separated and v.channel == "base-distance" and v.witness_index == 0

    def test_default_rho(self):
        v = kinematic_check_pair(moebius_suspension(), 0.1, -0.1, N=10)
        assert v.threshold == pytest.approx(0.5, abs=1e-7)

    def test_point_outside_base(self):
        with pytest.raises(DomainError):
            kinematic_check_pair(moebius_suspension(), 0.1, 2.0)

    def test_truncated_orbit_stops(self):
        flow = disc_reciprocal_suspension(0.01)
        v = kinematic_check_pair(flow, 0.5, 0.51, rho=100.0, N=1000)
        assert not v.separated and v.horizon < 10


class TestSeries:
    def test_constant_identity_all_zero(self):
        flow = SuspensionFlow(Interval(0, 1), Identity(), Constant(1.0))
        cert = divergence_partial_sums(flow, 0.2, 0.6, 50)
        assert np.all(cert.partial_sums == 0.0) and cert.crossed is None

    def test_reciprocal_geometric_sum(self):
        cert = divergence_partial_sums(disc_reciprocal_suspension(), 0.5, 0.75, 10)
        for n in range(11):
            assert cert.partial_sums[n] == pytest.approx((2 / 3) * (2 ** (n + 1) - 1), rel=1e-12)
        assert cert.partial_sums[10] == pytest.approx(1364.6667, abs=1e-3)
        assert cert.crossed == 10

    def test_consistent_with_birkhoff(self):
        flow = rotation_smooth_suspension()
        cert = divergence_partial_sums(flow, 0.1, 0.35, 200)
        for N in (0, 1, 50, 200):
            expect = birkhoff_sum(flow, 0.1, N + 1) - birkhoff_sum(flow, 0.35, N + 1)
            assert abs(cert.partial_sums[N] - expect) < 1e-10

    def test_ks_harmonic(self):
        flow = ks_minimal_suspension()
        md = flow.metadata
        cert = divergence_partial_sums(flow, md["zero_plus"], md["zero_minus"], md["n_j"][5])
        for j, nj in enumerate(md["n_j"][:6], start=1):
            assert abs(cert.partial_sums[nj] - sum(1 / k for k in range(1, j + 1))) < 1e-9

    def test_distinct_points_required(self):
        with pytest.raises(ParameterError):
            divergence_partial_sums(moebius_suspension(), 0.1, 0.1, 5)


def _circle_traj(r, n):
    th = np.linspace(0, 2 * math.pi, n)
    return Trajectory(0.0, 1.0, np.column_stack([r * np.cos(th), r * np.sin(th)]), Annulus(1, 2))


class TestFrechet:
    def test_identical(self):
        t = sample_trajectory(BAND, (1.2, 0.0), 3.0, 0.05)
        assert discrete_frechet(t, t) == 0.0

    def test_single_points(self):
        a = Trajectory(0, 1, np.array([[1.0, 0.0]]), Annulus(1, 2))
        b = Trajectory(0, 1, np.array([[0.0, 1.5]]), Annulus(1, 2))
        assert discrete_frechet(a, b) == pytest.approx(math.hypot(1.0, 1.5))

    def test_concentric_orbits(self):
        ta = sample_trajectory(BAND, (1.0, 0.0), 2 * math.pi, 0.01)
        tb = sample_trajectory(BAND, (1.1, 0.0), 2 * math.pi * 1.1, 0.01)
        assert abs(discrete_frechet(ta, tb) - 0.1) < 1e-2

    def test_symmetric(self):
        a, b = _circle_traj(1.0, 40), _circle_traj(1.3, 57)
        assert discrete_frechet(a, b) == discrete_frechet(b, a)

    def test_domain_mismatch(self):
        a = Trajectory(0, 1, np.array([[1.0, 0.0]]), Annulus(1, 2))
        b = Trajectory(0, 1, np.array([[1.0, 0.0]]), Disc(3))
        with pytest.raises(DomainError):
            discrete_frechet(a, b)


class TestSweep:
    def test_diagonal_pairs(self):
        rep = pair_sweep(BAND, [((1.2, 0), (1.2, 0)), ((0, 1.5), (0, 1.5))], 0.1, 2.0)
        assert rep.fraction_separated == 0.0

    def test_rigid_below_threshold(self):
        pairs = [((r, 0.0), (r + 0.1, 0.0)) for r in np.linspace(1.0, 1.8, 9)]
        rep = pair_sweep(RIGID, pairs, 0.2, 20.0)
        assert rep.fraction_separated == 0.0
        assert rep.by_margin()[0] in range(9)

    def test_rigid_initial_gap_above_threshold(self):
        rep = pair_sweep(RIGID, [((1.0, 0.0), (1.5, 0.0))], 0.2, 5.0)
        assert rep.fraction_separated == 1.0 and rep.min_witness == 0.0

    def test_errors_recorded_and_sweep_continues(self):
        rep = pair_sweep(BAND, [((1.2, 0), (1.5, 0)), ((5.0, 0), (1.5, 0))], 0.2, 3.0)
        assert rep.verdicts[0] is not None and rep.verdicts[1] is None
        assert 1 in rep.errors and "DomainError" in rep.errors[1]

    def test_suspension_sweep_and_csv(self):
        rep = pair_sweep(moebius_suspension(), [(0.1, -0.1), (0.2, 0.9)], 0.5, 100)
        lines = rep.to_csv().splitlines()
        assert lines[0] == "pair_id,x,y,separated,witness,channel,margin"
        assert lines[1].startswith("0,0.1,-0.1,false")
        assert lines[2].split(",")[3:6] == ["true", "0", "base-distance"]

    def test_parallel_matches_serial(self):
        pairs = [(float(x), float(-x)) for x in np.linspace(0.05, 0.45, 8)]
        a = pair_sweep(moebius_suspension(), pairs, 0.5, 50).to_csv()
        b = pair_sweep(moebius_suspension(), pairs, 0.5, 50, n_jobs=4).to_csv()
        assert a == b

    def test_empty(self):
        with pytest.raises(ParameterError):
            pair_sweep(BAND, [])


class TestContinuedFractions:
    def test_golden_fibonacci(self):
        assert continued_fraction_denominators(GOLDEN, 10) == [1, 2, 3, 5, 8, 13, 21, 34, 55, 89]

    def test_silver_pell(self):
        assert continued_fraction_denominators(math.sqrt(2) - 1, 5) == [2, 5, 12, 29, 70]

    def test_recurrence_and_best_approximation(self):
        alpha = math.pi - 3
        qs = continued_fraction_denominators(alpha, 8)
        dist = [abs(q * alpha - round(q * alpha)) for q in qs]
        assert all(b < a for a, b in zip(dist, dist[1:]))
        assert all(b > a for a, b in zip(qs, qs[1:]))

    def test_rational_alpha(self):
        with pytest.raises(ParameterError, match="rational"):
            continued_fraction_denominators(0.375, 10)

    def test_k_range(self):
        with pytest.raises(ParameterError):
            continued_fraction_denominators(GOLDEN, 26)


class TestDenjoyKoksma:
    def test_constant_roof(self):
        flow = rotation_smooth_suspension(amplitude=0.0)
        assert denjoy_koksma_gap(flow, 5) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("n", range(1, 11))
    def test_matches_closed_form(self, n):
        flow = rotation_smooth_suspension(GOLDEN, 0.3)
        q = continued_fraction_denominators(GOLDEN, n)[-1]
        assert abs(denjoy_koksma_gap(flow, n) - sinusoid_koksma_bound(0.3, GOLDEN, q)) < 1e-6

    def test_closed_form_by_direct_geometric_sum(self):
        # independent oracle: |sum_k sin(2 pi (x + k alpha))| maximised over x is
        # |sin(pi q alpha) / sin(pi alpha)|, checked on a fine grid
        q, x = 13, np.linspace(0, 1, 200001)
        s = np.abs(sum(np.sin(2 * np.pi * (x + k * GOLDEN)) for k in range(q))).max()
        assert s * 0.3 == pytest.approx(sinusoid_koksma_bound(0.3, GOLDEN, q), rel=1e-8)

    def test_later_gaps_below_g2(self):
        flow = rotation_smooth_suspension()
        g2 = denjoy_koksma_gap(flow, 2)
        assert all(denjoy_koksma_gap(flow, n) < g2 for n in range(4, 11))

    def test_needs_rotation(self):
        with pytest.raises(ParameterError):
            denjoy_koksma_gap(moebius_suspension(), 3)


# ------------------------------------------------------------- properties


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 0.999), st.floats(0.0, 0.999), st.integers(1, 300))
def test_backward_equals_forward_on_reversal(x, y, N):
    flow = rotation_smooth_suspension(GOLDEN, 0.3)
    bwd = kinematic_check_pair(flow, x, y, 0.05, N, mode="backward")
    fwd = kinematic_check_pair(reversed_suspension(flow), x, y, 0.05, N, mode="forward")
    assert bwd.separated == fwd.separated
    if bwd.separated:
        assert bwd.witness_index == -fwd.witness_index and bwd.channel == fwd.channel


@settings(max_examples=25, deadline=None)
@given(st.floats(1.0, 2.0), st.floats(0, 2 * math.pi), st.floats(1.0, 2.0), st.floats(0, 2 * math.pi))
def test_frechet_below_sup_distance(r1, a1, r2, a2):
    ta = sample_trajectory(BAND, (r1 * math.cos(a1), r1 * math.sin(a1)), 5.0, 0.05)
    tb = sample_trajectory(BAND, (r2 * math.cos(a2), r2 * math.sin(a2)), 5.0, 0.05)
    sup = float(np.max(rowwise_distance(BAND.domain, ta.points, tb.points)))
    assert discrete_frechet(ta, tb) <= sup + 1e-15


@settings(max_examples=30, deadline=None)
@given(st.floats(-1.0, 1.0))
def test_moebius_null_gap(x):
    flow = moebius_suspension()
    for n in (1, 2, 3, 10, 101):
        assert birkhoff_sum(flow, x, n) - birkhoff_sum(flow, -x, n) == 0.0


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 0.5), st.floats(0.05, 0.5))
def test_verdict_monotone_in_threshold(d1, d2):
    lo, hi = sorted((d1, d2))
    a = separation_time(BAND, (1.0, 0.0), (1.3, 0.0), lo, 5.0, dt=0.01)
    b = separation_time(BAND, (1.0, 0.0), (1.3, 0.0), hi, 5.0, dt=0.01)
    if b.separated:
        assert a.separated and a.witness_time <= b.witness_time
