"""scikit-learn style wrappers around the flow and separation operations.

The dynamics have nothing to learn, so ``fit`` only validates inputs and
records shapes.  The wrappers exist so that batches of points or pairs
can go through ``transform``/``predict`` and parameters can be inspected
or cloned with the usual ``get_params``/``set_params`` machinery.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import DomainError, ParameterError
from .flowcore import DEFAULT_DT, VectorFieldSpec, flow_points
from .separation import kinematic_check_pair, pair_sweep
from .suspension import SuspensionFlow, birkhoff_sum


def check_points(X, spec: VectorFieldSpec) -> np.ndarray:
    """Validate an ``(n, 2)`` array of points lying in the field's domain."""
    X = check_array(X, dtype=np.float64)
    if X.shape[1] != 2:
        raise ParameterError(f"expected points with 2 columns, got {X.shape[1]}")
    inside = spec.domain.contains(X)
    if not inside.all():
        raise DomainError(f"row {int(np.argmin(inside))} is outside the domain of {spec.name}")
    return X


def check_pairs(X, width: int) -> np.ndarray:
    """Validate a pair table: ``(n, 4)`` rows ``(ax, ay, bx, by)`` or ``(n, 2)`` rows ``(x, y)``."""
    X = check_array(X, dtype=np.float64)
    if X.shape[1] != width:
        raise ParameterError(f"expected pair rows with {width} columns, got {X.shape[1]}")
    return X


def _check_base(X, flow: SuspensionFlow) -> np.ndarray:
    X = check_array(X, dtype=np.float64, ensure_2d=False).ravel()
    for x in X:
        if not flow.base.contains(float(x)):
            raise DomainError(f"{x!r} is not a point of the base of {flow.name or 'the suspension'}")
    return X


class FlowMap(TransformerMixin, BaseEstimator):
    """Time-``t`` map of a vector field, applied row-wise."""

    def __init__(self, spec: VectorFieldSpec = None, t: float = 1.0, dt: float = DEFAULT_DT):
        self.spec = spec
        self.t = t
        self.dt = dt

    def fit(self, X, y=None):
        if self.spec is None:
            raise ParameterError("FlowMap needs a vector field")
        check_points(X, self.spec)
        self.n_features_in_ = 2
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        return flow_points(self.spec, check_points(X, self.spec), self.t, self.dt)


class KinematicSeparation(BaseEstimator):
    """Predict which point pairs of a vector field separate within ``horizon``.

    Rows of ``X`` are ``(ax, ay, bx, by)``.  After ``predict`` the full
    verdicts are kept in ``verdicts_``.
    """

    def __init__(self, spec: VectorFieldSpec = None, delta: float = None, horizon: float = 10.0,
                 dt: float = DEFAULT_DT, mode: str = "forward"):
        self.spec = spec
        self.delta = delta
        self.horizon = horizon
        self.dt = dt
        self.mode = mode

    def fit(self, X, y=None):
        if self.spec is None:
            raise ParameterError("KinematicSeparation needs a vector field")
        check_pairs(X, 4)
        self.n_features_in_ = 4
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "n_features_in_")
        X = check_pairs(X, 4)
        pairs = [(row[:2], row[2:]) for row in X]
        report = pair_sweep(self.spec, pairs, self.delta, self.horizon, self.mode, self.dt)
        self.verdicts_ = report.verdicts
        return np.array([v is not None and v.separated for v in report.verdicts])

    def score(self, X, y=None) -> float:
        """Fraction of pairs separated."""
        return float(np.mean(self.predict(X)))


class SuspensionSeparation(BaseEstimator):
    """Birkhoff-sum separation test for base-coordinate pairs ``(x, y)``."""

    def __init__(self, flow: SuspensionFlow = None, rho: float = None, N: int = 1000, mode: str = "forward"):
        self.flow = flow
        self.rho = rho
        self.N = N
        self.mode = mode

    def fit(self, X, y=None):
        if self.flow is None:
            raise ParameterError("SuspensionSeparation needs a suspension flow")
        _check_base(check_pairs(X, 2), self.flow)
        self.n_features_in_ = 2
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "n_features_in_")
        X = check_pairs(X, 2)
        self.verdicts_ = [kinematic_check_pair(self.flow, float(a), float(b), self.rho, self.N, self.mode)
                          for a, b in X]
        return np.array([v.separated for v in self.verdicts_])


class BirkhoffSum(TransformerMixin, BaseEstimator):
    """Return-time sums ``T_n(x)`` of base points, one output column."""

    def __init__(self, flow: SuspensionFlow = None, n: int = 1):
        self.flow = flow
        self.n = n

    def fit(self, X, y=None):
        if self.flow is None:
            raise ParameterError("BirkhoffSum needs a suspension flow")
        _check_base(X, self.flow)
        self.n_features_in_ = 1
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        xs = _check_base(X, self.flow)
        return np.array([[birkhoff_sum(self.flow, float(x), self.n)] for x in xs])
