"""Command-line experiment runner.

Usage::

    explab <operation> --config <file> [--out <path>] [--seed <n>]
    explab list-examples

Exit status is 0 on success, 2 for configuration or parameter errors and
3 when a computation leaves its numerical domain.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field, replace
from typing import Any, Optional, Sequence

import numpy as np

from . import annulus as ann
from .catalog import DESCRIPTIONS, ExampleId, build
from .config import OPERATIONS, ExperimentConfig, OutputSpec, parse_config_dict
from .errors import ConfigError, EscapeError, ExplabError, NumericalDomainError, OrbitExit, ParameterError
from .flowcore import Annulus, Disc, VectorFieldSpec, rowwise_distance, sample_trajectory
from .insertion import CodedPoint, InsertionCircle
from .separation import (
    continued_fraction_denominators,
    denjoy_koksma_gap,
    discrete_frechet,
    divergence_partial_sums,
    pair_sweep,
    sinusoid_koksma_bound,
)
from .suspension import (
    Circle,
    Constant,
    FinitePermutation,
    FiniteSet,
    Halving,
    Identity,
    Interval,
    Negation,
    PiecewiseLinear,
    Quadratic,
    Reciprocal,
    Rotation,
    Sinusoidal,
    SuspensionFlow,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DOMAIN = 3


@dataclass
class Report:
    """Tabular result of one experiment plus its one-line summary."""

    operation: str
    header: list
    rows: list = field(default_factory=list)
    summary: str = ""

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for row in self.rows:
            w.writerow([_cell(v) for v in row])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = [[_json_cell(v) for v in row] for row in self.rows]
        return json.dumps({"operation": self.operation, "summary": self.summary,
                           "columns": self.header, "rows": rows}, indent=2) + "\n"

    def render(self, fmt: str) -> str:
        return self.to_json() if fmt == "json" else self.to_csv()


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _json_cell(v):
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


class PartialResult(Exception):
    """Carries the report computed before a numerical-domain failure."""

    def __init__(self, report: Report, cause: NumericalDomainError):
        super().__init__(str(cause))
        self.report = report
        self.cause = cause


# ----------------------------------------------------------------- targets

_BASES = {
    "interval": lambda p: Interval(p["lo"], p["hi"]),
    "circle": lambda p: Circle(),
    "finite": lambda p: FiniteSet(tuple(p["points"])),
}
_MAPS = {
    "identity": lambda p: Identity(),
    "halving": lambda p: Halving(),
    "negation": lambda p: Negation(),
    "rotation": lambda p: Rotation(p["alpha"]),
    "permutation": lambda p: FinitePermutation(tuple(tuple(r) for r in p["table"])),
}
_TIMES = {
    "constant": lambda p: Constant(p["c"]),
    "reciprocal": lambda p: Reciprocal(),
    "quadratic": lambda p: Quadratic(),
    "sinusoidal": lambda p: Sinusoidal(p["amplitude"]),
    "piecewise_linear": lambda p: PiecewiseLinear(tuple(tuple(k) for k in p["knots"]), p.get("default", 1.0)),
}


def _inline_part(table: dict, spec: dict, path: str):
    kind = spec.get("kind")
    if kind not in table:
        raise ConfigError(f"unknown kind {kind!r}; choose from {sorted(table)}", f"{path}.kind")
    try:
        return table[kind](spec)
    except KeyError as exc:
        raise ConfigError(f"missing field {exc.args[0]!r} for kind {kind!r}", path) from None


def build_target(example):
    """Turn the ``example`` entry of a config into a field, flow or annulus field."""
    if isinstance(example, str):
        return build(example)
    if "profile" in example:
        profile = ann.get_profile(example["profile"], **example["params"])
        return ann.radial_profile_field(profile, example["r_in"], example["r_out"])
    if "inline" in example:
        spec = example["inline"]
        base = _inline_part(_BASES, spec["base"], "example.inline.base")
        fmap = _inline_part(_MAPS, spec["map"], "example.inline.map")
        time = _inline_part(_TIMES, spec["time"], "example.inline.time")
        return SuspensionFlow(base, fmap, time, name=spec.get("name", "inline"))
    return build(example["name"], **example["params"])


def _target_name(target) -> str:
    if isinstance(target, ann.ConservativeFieldSpec):
        return target.underlying.name
    return target.name or type(target).__name__


def _require(target, kind, operation: str):
    if not isinstance(target, kind):
        raise ConfigError(f"{operation} needs a {kind.__name__}, the example gives {type(target).__name__}",
                          "example")
    return target


def parse_base_point(flow: SuspensionFlow, value, path: str):
    """Decode a base point: a number, ``{"n": .., "u": ..}``, or ``"0-"``/``"0+"``."""
    if isinstance(flow.base, InsertionCircle):
        if value == "0-":
            return flow.metadata.get("zero_minus", CodedPoint(0, 0.0))
        if value == "0+":
            return flow.metadata.get("zero_plus", CodedPoint(0, 1.0))
        if isinstance(value, dict):
            if set(value) != {"n", "u"}:
                raise ConfigError("coded points need exactly the keys 'n' and 'u'", path)
            return CodedPoint(int(value["n"]), float(value["u"]))
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"cannot read {value!r} as a base point", path)
    return float(value)


def random_pairs(seed: int, spec: dict, target) -> list:
    """Seeded random pairs.

    One ``Generator(PCG64(seed))`` draws a single ``uniform`` array: shape
    ``(count, 2)`` of base coordinates in ``[low, high)`` for suspensions,
    shape ``(count, 2, 2)`` for planar fields.  Planar draws are either
    box coordinates (``cartesian``; ``low``/``high`` are 2-vectors) or
    ``(radius, angle/2pi)`` (``polar``; ``low``/``high`` are radii).
    Without ``low``/``high`` the whole base interval, annulus, disc or
    unit square is used.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    n = spec["count"]
    low, high = spec["low"], spec["high"]
    coords = spec["coords"]
    if low is None:
        low, high, coords = _default_bounds(target)
    if isinstance(target, SuspensionFlow):
        draws = rng.uniform(float(low), float(high), size=(n, 2))
        return [(float(a), float(b)) for a, b in draws]
    if coords == "polar":
        u = rng.uniform(size=(n, 2, 2))
        r = float(low) + (float(high) - float(low)) * u[..., 0]
        th = 2.0 * math.pi * u[..., 1]
        pts = np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)
    else:
        lo = np.asarray(low, dtype=float)
        hi = np.asarray(high, dtype=float)
        if lo.shape != (2,) or hi.shape != (2,):
            raise ConfigError("cartesian bounds must be 2-vectors", "parameters.random_pairs.low")
        pts = lo + (hi - lo) * rng.uniform(size=(n, 2, 2))
    return [(tuple(map(float, p[0])), tuple(map(float, p[1]))) for p in pts]


def _default_bounds(target):
    if isinstance(target, SuspensionFlow):
        base = target.base
        if isinstance(base, Interval):
            return base.lo, base.hi, "cartesian"
        if isinstance(base, Circle):
            return 0.0, 1.0, "cartesian"
        raise ConfigError(f"cannot draw random points on {type(base).__name__}; list explicit pairs",
                          "parameters.random_pairs")
    dom = target.domain
    if isinstance(dom, Annulus):
        return dom.r_in, dom.r_out, "polar"
    if isinstance(dom, Disc):
        return 0.0, dom.radius, "polar"
    return [0.0, 0.0], [1.0, 1.0], "cartesian"


def _planar_pairs(pairs, path: str) -> list:
    out = []
    for i, pair in enumerate(pairs):
        try:
            a, b = pair
            out.append((tuple(map(float, a)), tuple(map(float, b))))
        except (TypeError, ValueError):
            raise ConfigError("expected [[ax, ay], [bx, by]]", f"{path}[{i}]") from None
    return out


# -------------------------------------------------------------- operations


def _simulate(target, p, cfg) -> Report:
    spec = _require(target, VectorFieldSpec, "simulate")
    report = Report("simulate", ["t", "x", "y"])
    try:
        traj = sample_trajectory(spec, p["point"], p["horizon"], p["dt"])
    except EscapeError as exc:
        if exc.partial is not None:
            part = exc.partial
            report.rows = [[t, x, y] for t, (x, y) in zip(part.times, part.points)]
        report.summary = f"simulate {spec.name}: escaped after {len(report.rows)} samples"
        raise PartialResult(report, exc) from None
    report.rows = [[t, x, y] for t, (x, y) in zip(traj.times, traj.points)]
    end = traj.points[-1]
    report.summary = (f"simulate {spec.name}: {len(traj)} samples to t={traj.times[-1]:.6g}, "
                      f"final ({end[0]:.6g}, {end[1]:.6g})")
    return report


def _sweep_summary(op: str, name: str, rep) -> str:
    ok = [v for v in rep.verdicts if v is not None]
    n_sep = sum(v.separated for v in ok)
    margin = min((v.margin for v in ok), default=float("nan"))
    return (f"{op} {name}: {n_sep}/{len(rep.verdicts)} separated ({100.0 * rep.fraction_separated:.1f}%), "
            f"min witness {rep.min_witness}, min margin {margin:.6g}, errors {len(rep.errors)}")


def _sweep_report(op: str, rep) -> Report:
    text = rep.to_csv().splitlines()
    reader = csv.reader(text)
    header = next(reader)
    return Report(op, header, [row for row in reader])


def _separation_sweep(target, p, cfg) -> Report:
    spec = _require(target, VectorFieldSpec, "separation-sweep")
    if p["pairs"] is not None:
        pairs = _planar_pairs(p["pairs"], "parameters.pairs")
    else:
        pairs = random_pairs(cfg.seed, p["random_pairs"], spec)
    rep = pair_sweep(spec, pairs, p["threshold"], p["horizon"], p["mode"], p["dt"], p["n_jobs"])
    report = _sweep_report("separation-sweep", rep)
    report.summary = _sweep_summary("separation-sweep", spec.name, rep)
    return report


def _suspension_check(target, p, cfg) -> Report:
    flow = _require(target, SuspensionFlow, "suspension-check")
    if p["pairs"] is not None:
        pairs = []
        for i, pair in enumerate(p["pairs"]):
            if not isinstance(pair, list) or len(pair) != 2:
                raise ConfigError("expected [x, y]", f"parameters.pairs[{i}]")
            pairs.append(tuple(parse_base_point(flow, v, f"parameters.pairs[{i}][{k}]") for k, v in enumerate(pair)))
    else:
        pairs = random_pairs(cfg.seed, p["random_pairs"], flow)
    rep = pair_sweep(flow, pairs, p["rho"], p["N"], p["mode"], n_jobs=p["n_jobs"])
    report = _sweep_report("suspension-check", rep)
    report.summary = _sweep_summary("suspension-check", flow.name, rep)
    return report


def _series(target, p, cfg) -> Report:
    flow = _require(target, SuspensionFlow, "series")
    x = parse_base_point(flow, p["x"], "parameters.x")
    y = parse_base_point(flow, p["y"], "parameters.y")
    cert = divergence_partial_sums(flow, x, y, p["N"], p["threshold"])
    terms = np.diff(np.concatenate([[0.0], cert.partial_sums]))
    report = Report("series", ["n", "term", "partial_sum"],
                    [[i, float(t), float(s)] for i, (t, s) in enumerate(zip(terms, cert.partial_sums))])
    report.summary = (f"series {flow.name}: S_{len(cert.partial_sums) - 1} = {cert.partial_sums[-1]:.10g}, "
                      f"crossed {cert.threshold:g} at {cert.crossed}")
    if len(cert.partial_sums) < p["N"] + 1:
        done = len(cert.partial_sums) - 1
        raise PartialResult(report, OrbitExit(f"orbit left the base after S_{done} of S_{p['N']}", done + 1))
    return report


def _frechet(target, p, cfg) -> Report:
    spec = _require(target, VectorFieldSpec, "frechet")
    ta = sample_trajectory(spec, p["a"], p["horizon"], p["dt"])
    tb = sample_trajectory(spec, p["b"], p["horizon"], p["dt"])
    fr = discrete_frechet(ta, tb)
    sup = float(np.max(rowwise_distance(spec.domain, ta.points, tb.points)))
    report = Report("frechet", ["frechet", "sup_distance", "samples"], [[fr, sup, len(ta)]])
    report.summary = f"frechet {spec.name}: discrete Frechet {fr:.6g}, index-paired sup {sup:.6g}"
    return report


def _denjoy_koksma(target, p, cfg) -> Report:
    flow = _require(target, SuspensionFlow, "denjoy-koksma")
    if not isinstance(flow.map, Rotation):
        raise ConfigError("denjoy-koksma needs a rotation base map", "example")
    alpha = flow.map.alpha
    qs = continued_fraction_denominators(alpha, p["n"])
    amp = getattr(flow.time, "amplitude", 0.0)
    report = Report("denjoy-koksma", ["n", "q_n", "g_n", "closed_form"])
    for i, q in enumerate(qs, 1):
        g = denjoy_koksma_gap(flow, i, p["grid"])
        report.rows.append([i, q, g, sinusoid_koksma_bound(amp, alpha, q)])
    gs = [r[2] for r in report.rows]
    decreasing = all(b < a for a, b in zip(gs, gs[1:]))
    report.summary = (f"denjoy-koksma {flow.name}: g_{len(qs)} = {gs[-1]:.6g} (q = {qs[-1]}), "
                      f"strictly decreasing: {str(decreasing).lower()}")
    return report


def _annulus_period(target, p, cfg) -> Report:
    X = _require(target, ann.ConservativeFieldSpec, "annulus-period")
    radii = p["radii"] if p["radii"] is not None else list(np.linspace(X.annulus.r_in, X.annulus.r_out, p["n_radii"]))
    report = Report("annulus-period", ["r", "flux_period", "direct_period", "residual"])
    for r in radii:
        rep = ann.orbit_period_flux(X, ann.CircleOrbit(float(r)), p["quad_n"], p["direct"], p["dt"])
        report.rows.append([float(r), rep.flux_period, rep.direct_period, rep.residual])
    res = [row[3] for row in report.rows if row[3] is not None]
    periods = [row[1] for row in report.rows]
    d = np.diff(periods)
    trend = "increasing" if (d > 0).all() else "decreasing" if (d < 0).all() else "not monotone"
    worst = f", max residual {max(res):.3g}" if res else ""
    report.summary = f"annulus-period {X.underlying.name}: {len(radii)} circles, periods {trend}{worst}"
    return report


def _green_check(target, p, cfg) -> Report:
    X = _require(target, ann.ConservativeFieldSpec, "green-check")
    r1 = X.annulus.r_in if p["r1"] is None else p["r1"]
    r2 = X.annulus.r_out if p["r2"] is None else p["r2"]
    if not r1 < r2:
        raise ConfigError("need r1 < r2", "parameters.r1")
    lhs, rhs = ann.green_sides(X, r1, r2, p["quad_n"], p["rule"])
    res = ann.green_check(X, r1, r2, p["quad_n"], p["rule"])
    report = Report("green-check", ["r1", "r2", "flux_difference", "area_integral", "residual"],
                    [[float(r1), float(r2), lhs, rhs, res]])
    report.summary = f"green-check {X.underlying.name}: residual {res:.3g} ({p['rule']}, quad_n={p['quad_n']})"
    return report


def _robust_criterion(target, p, cfg) -> Report:
    X = _require(target, ann.ConservativeFieldSpec, "robust-criterion")
    v = ann.robust_criterion(X, p["grid_n"])
    R, TH, div = v.grid
    report = Report("robust-criterion", ["r", "theta", "div_z"],
                    [[float(r), float(t), float(d)] for r, t, d in zip(R.ravel(), TH.ravel(), div.ravel())])
    report.summary = (f"robust-criterion {X.underlying.name}: satisfied {str(v.satisfied).lower()}, "
                      f"min |div Z| {v.min_abs_div:.6g} at ({v.argmin.x:.6g}, {v.argmin.y:.6g})")
    return report


RUNNERS = {
    "simulate": _simulate,
    "separation-sweep": _separation_sweep,
    "suspension-check": _suspension_check,
    "series": _series,
    "frechet": _frechet,
    "denjoy-koksma": _denjoy_koksma,
    "annulus-period": _annulus_period,
    "green-check": _green_check,
    "robust-criterion": _robust_criterion,
}


def execute(config: ExperimentConfig) -> Report:
    """Run one experiment and return its report; raises on failure."""
    target = build_target(config.example)
    return RUNNERS[config.operation](target, config.parameters, config)


def _write(report: Report, output: OutputSpec, stdout) -> None:
    text = report.render(output.format)
    if output.path:
        with open(output.path, "w", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)


def run(config: ExperimentConfig, stdout=None, stderr=None) -> int:
    """Execute ``config``, write its report and print the summary line.

    Returns the process exit status.  When a numerical-domain error stops
    an experiment part way, whatever was computed is still written.
    """
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        report = execute(config)
    except PartialResult as part:
        _write(part.report, config.output, stdout)
        print(part.report.summary, file=stdout)
        print(f"numerical domain error: {part.cause}", file=stderr)
        return EXIT_DOMAIN
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=stderr)
        return EXIT_CONFIG
    except NumericalDomainError as exc:
        print(f"numerical domain error: {exc}", file=stderr)
        return EXIT_DOMAIN
    _write(report, config.output, stdout)
    print(report.summary, file=stdout)
    return EXIT_OK


def list_examples(stdout=None) -> None:
    stdout = stdout or sys.stdout
    width = max(len(e.value) for e in ExampleId)
    for e in ExampleId:
        print(f"{e.value:<{width}}  {DESCRIPTIONS[e]}", file=stdout)


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="explab", description="Expansive-flow experiment runner.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list-examples", help="print the catalog of worked examples")
    for op in OPERATIONS:
        p = sub.add_parser(op, help=f"run a {op} experiment")
        p.add_argument("--config", required=True, help="JSON experiment configuration")
        p.add_argument("--out", help="report path (overrides output.path)")
        p.add_argument("--seed", type=int, help="seed for random pairs (overrides seed)")
    return parser


def load_config(path: str, operation: str, out: Optional[str] = None, seed: Optional[int] = None) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc.msg} at line {exc.lineno} column {exc.colno}", path) from None
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object", path)
    data.setdefault("operation", operation)
    if data["operation"] != operation:
        raise ConfigError(f"config is for {data['operation']!r} but {operation!r} was requested", "operation")
    if seed is not None:
        data["seed"] = seed
    config = parse_config_dict(data)
    if out is not None:
        config = replace(config, output=OutputSpec(out, config.output.format))
    return config


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "list-examples":
        list_examples()
        return EXIT_OK
    try:
        config = load_config(args.config, args.command, args.out, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(config)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
