import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from explab.catalog import disc_reciprocal_suspension, moebius_suspension, periodic_band
from explab.errors import DomainError, ParameterError
from explab.estimators import BirkhoffSum, FlowMap, KinematicSeparation, SuspensionSeparation
from explab.flowcore import flow_to


class TestFlowMap:
    def test_matches_flow_to(self):
        spec = periodic_band(True)
        X = np.array([[1.0, 0.0], [0.0, 1.5], [-2.0, 0.0]])
        out = FlowMap(spec, t=0.7, dt=0.01).fit(X).transform(X)
        for p, q in zip(X, out):
            assert np.allclose(q, flow_to(spec, p, 0.7, 0.01), atol=1e-14)

    def test_rigid_quarter_turn(self):
        X = np.array([[1.5, 0.0]])
        out = FlowMap(periodic_band(True), t=math.pi / 2).fit_transform(X)
        assert np.allclose(out, [[0.0, 1.5]], atol=1e-9)

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            FlowMap(periodic_band()).transform([[1.0, 0.0]])

    def test_rejects_outside(self):
        with pytest.raises(DomainError):
            FlowMap(periodic_band()).fit([[0.1, 0.0]])

    def test_rejects_wrong_width(self):
        with pytest.raises(ParameterError):
            FlowMap(periodic_band()).fit([[1.0, 0.0, 0.0]])

    def test_needs_spec(self):
        with pytest.raises(ParameterError):
            FlowMap().fit([[1.0, 0.0]])

    def test_params_and_clone(self):
        est = FlowMap(periodic_band(), t=2.0)
        assert est.get_params()["t"] == 2.0
        twin = clone(est).set_params(t=3.0)
        assert twin.t == 3.0 and est.t == 2.0


class TestKinematicSeparation:
    def test_band_vs_rigid(self):
        X = np.array([[1.0, 0.0, 1.1, 0.0], [1.5, 0.0, 1.6, 0.0]])
        band = KinematicSeparation(periodic_band(), delta=0.2, horizon=20.0, dt=0.01).fit(X)
        rigid = KinematicSeparation(periodic_band(True), delta=0.2, horizon=20.0, dt=0.01).fit(X)
        assert band.predict(X).tolist() == [True, True]
        assert rigid.score(X) == 0.0
        assert len(band.verdicts_) == 2

    def test_pair_width(self):
        with pytest.raises(ParameterError):
            KinematicSeparation(periodic_band(), 0.2).fit([[1.0, 0.0]])


class TestSuspensionSeparation:
    def test_moebius_symmetric_pairs(self):
        X = np.array([[0.01, -0.01], [0.1, -0.1]])
        est = SuspensionSeparation(moebius_suspension(), rho=0.5, N=1000).fit(X)
        assert not est.predict(X).any()

    def test_reciprocal_time_gap(self):
        X = np.array([[0.5, 0.75]])
        est = SuspensionSeparation(disc_reciprocal_suspension(), rho=100.0, N=30).fit(X)
        assert est.predict(X).tolist() == [True]
        assert est.verdicts_[0].channel == "time-gap"

    def test_outside_base(self):
        with pytest.raises(DomainError):
            SuspensionSeparation(moebius_suspension(), rho=0.5).fit([[0.1, 3.0]])


class TestBirkhoffSum:
    def test_reciprocal_column(self):
        out = BirkhoffSum(disc_reciprocal_suspension(), n=3).fit_transform(np.array([1.0, 0.5]))
        assert out.shape == (2, 1)
        assert out[:, 0].tolist() == [7.0, 14.0]

    def test_moebius_zero_steps(self):
        out = BirkhoffSum(moebius_suspension(), n=0).fit_transform([0.3])
        assert out.tolist() == [[0.0]]
