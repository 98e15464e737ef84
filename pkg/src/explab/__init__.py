"""Numerical experiments on kinematic expansiveness of flows.

Modules
-------
flowcore
    Planar and torus vector fields, a fixed-step RK4 integrator and metrics.
suspension
    Base maps, return times, Birkhoff sums and the suspension flow.
separation
    Separation times, the Birkhoff-sum criterion, divergence certificates,
    discrete Frechet distance and the Denjoy-Koksma obstruction.
insertion
    Circles with inserted intervals (Denjoy blow-ups) and their coded points.
catalog
    Constructors for the worked examples.
annulus
    Flux periods of conservative annulus flows and the divergence criterion.
estimators
    scikit-learn style wrappers for batches of points and pairs.
config
    Experiment configuration schema and validation.
cli
    The ``explab`` experiment runner.
"""
from .errors import (
    ConfigError,
    DomainError,
    EscapeError,
    ExplabError,
    NumericalDomainError,
    OrbitExit,
    ParameterError,
    SingularityError,
)
from .flowcore import Annulus, Disc, FlatTorus, Point2, Trajectory, VectorFieldSpec, flow_to, sample_trajectory
from .suspension import SuspensionFlow, SuspState, base_iterate, birkhoff_sum, suspension_evaluate
from .separation import (
    SeparationMode,
    SeparationVerdict,
    SeriesCertificate,
    discrete_frechet,
    divergence_partial_sums,
    kinematic_check_pair,
    pair_sweep,
    separation_time,
)
from .catalog import ExampleId, build

__version__ = "0.1.0"
