"""Simulation-in-the-loop gain optimization.

Projected finite-difference gradient descent with backtracking line
search.  The decision vector defaults to the eleven-parameter layout
(three shared observer gains plus a PD pair per subsystem); a twenty
parameter per-subsystem layout is also supported.  Signal requirements
are expressed as piecewise bounds whose integrated excess is penalized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import adrc
from .disturbances import DisturbanceParams
from .errors import DivergenceError, InvalidParameterError, QuadArmError
from .model import QuadParams
from .sim import ControllerGains, Scenario, TraceLog, estimation_oracle, run

#: finite cost assigned to runs that diverge or cannot be constructed
SENTINEL_COST = 1e12

SHARED_LAYOUT = ("p1", "p2", "p3",
                 "kp_roll", "kd_roll", "kp_pitch", "kd_pitch",
                 "kp_yaw", "kd_yaw", "kp_altitude", "kd_altitude")

PER_SUBSYSTEM_LAYOUT = tuple(
    f"{g}_{s}" for s in adrc.SUBSYSTEMS for g in ("p1", "p2", "p3")
) + SHARED_LAYOUT[3:]


def table_gains_vector() -> np.ndarray:
    """The stock optimized gain set in the shared eleven-parameter layout."""
    g = ControllerGains()
    return np.array([
        g.eso.p1, g.eso.p2, g.eso.p3,
        g.pd_roll.kp, g.pd_roll.kd,
        g.pd_pitch.kp, g.pd_pitch.kd,
        g.pd_yaw.kp, g.pd_yaw.kd,
        g.pd_altitude.kp, g.pd_altitude.kd,
    ])


def gains_from_vector(vector, layout: str = "shared") -> ControllerGains:
    v = np.asarray(vector, dtype=float)
    if layout == "shared":
        if v.shape != (11,):
            raise InvalidParameterError("shared layout needs 11 parameters")
        eso = adrc.EsoGains(v[0], v[1], v[2])
        pd_vals = v[3:]
        overrides = {}
    elif layout == "per_subsystem":
        if v.shape != (20,):
            raise InvalidParameterError("per-subsystem layout needs 20 parameters")
        overrides = {name: adrc.EsoGains(*v[3 * i:3 * i + 3])
                     for i, name in enumerate(adrc.SUBSYSTEMS)}
        eso = overrides[adrc.ROLL]
        pd_vals = v[12:]
    else:
        raise InvalidParameterError(f"unknown layout {layout!r}")
    return ControllerGains(
        eso=eso,
        eso_overrides=overrides,
        pd_roll=adrc.PdGains(pd_vals[0], pd_vals[1]),
        pd_pitch=adrc.PdGains(pd_vals[2], pd_vals[3]),
        pd_yaw=adrc.PdGains(pd_vals[4], pd_vals[5]),
        pd_altitude=adrc.PdGains(pd_vals[6], pd_vals[7]),
    )


@dataclass(frozen=True)
class SignalBound:
    """Piecewise requirement band on one logged signal."""

    signal: str
    segments: tuple  # of (t_start, t_end, lower, upper)

    def __post_init__(self):
        prev_end = -math.inf
        for t0, t1, lo, hi in self.segments:
            if t0 >= t1:
                raise InvalidParameterError("bound segment must have t_start < t_end")
            if lo > hi:
                raise InvalidParameterError("bound segment needs lower <= upper")
            if t0 < prev_end:
                raise InvalidParameterError("bound segments must not overlap")
            prev_end = t1

    def violation(self, t: np.ndarray, values: np.ndarray, dt: float) -> float:
        """Integrated excess of the signal outside the band."""
        total = 0.0
        for t0, t1, lo, hi in self.segments:
            mask = (t >= t0) & (t <= t1)
            seg = values[mask]
            excess = np.maximum(seg - hi, 0.0) + np.maximum(lo - seg, 0.0)
            total += float(np.sum(excess) * dt)
        return total


@dataclass(frozen=True)
class CostWeights:
    tracking: float = 1.0
    estimation: float = 1.0
    effort: float = 0.01
    bound_penalty: float = 1e3

    def __post_init__(self):
        if min(self.tracking, self.estimation, self.effort, self.bound_penalty) < 0:
            raise InvalidParameterError("cost weights must be non-negative")


@dataclass
class TuneProblem:
    """Gain-tuning problem backed by the closed-loop simulation."""

    scenario: Scenario = field(default_factory=Scenario)
    params: QuadParams = field(default_factory=QuadParams)
    dist_params: DisturbanceParams = field(default_factory=DisturbanceParams)
    weights: CostWeights = field(default_factory=CostWeights)
    bounds: tuple = ()
    layout: str = "shared"
    box_lower: np.ndarray | None = None
    box_upper: np.ndarray | None = None

    def __post_init__(self):
        n = 11 if self.layout == "shared" else 20
        if self.box_lower is None:
            self.box_lower = np.full(n, 1e-3)
        if self.box_upper is None:
            self.box_upper = np.full(n, 1e5)
        self.box_lower = np.asarray(self.box_lower, dtype=float)
        self.box_upper = np.asarray(self.box_upper, dtype=float)
        if np.any(self.box_lower > self.box_upper):
            raise InvalidParameterError("box lower bound exceeds upper bound")

    def evaluate(self, vector) -> tuple[float, dict]:
        return cost(vector, self)


def _hurwitz_violation(vector, layout: str) -> float:
    """Non-negative slack deficit of the Routh condition p1*p2 > p3."""
    v = np.asarray(vector, dtype=float)
    triples = [v[0:3]] if layout == "shared" else [v[3 * i:3 * i + 3] for i in range(4)]
    worst = 0.0
    for p1, p2, p3 in triples:
        worst = max(worst, p3 - p1 * p2, -p1, -p3)
    return max(worst, 0.0)


def cost(vector, problem: TuneProblem) -> tuple[float, dict]:
    """Scalar cost of one gain vector plus a per-bound violation report.

    Infeasible or diverging configurations map to a large finite sentinel
    so the optimizer can always compare candidates.
    """
    report: dict = {"bound_violations": {}, "feasible": True}
    hv = _hurwitz_violation(vector, problem.layout)
    if hv > 0:
        report["feasible"] = False
        report["hurwitz_violation"] = hv
        return SENTINEL_COST + hv, report

    try:
        gains = gains_from_vector(vector, problem.layout)
        trace = run(problem.scenario, problem.params, problem.dist_params, gains)
    except DivergenceError as exc:
        report["feasible"] = False
        report["diverged_at"] = exc.time
        return SENTINEL_COST, report
    except QuadArmError:
        report["feasible"] = False
        return SENTINEL_COST, report

    w = problem.weights
    dt = problem.scenario.dt
    t = trace.column("t")

    tracking = 0.0
    for signal, ref in (("phi", "ref_roll"), ("theta", "ref_pitch"),
                        ("psi", "ref_yaw"), ("z", "ref_z")):
        e = trace.column(ref) - trace.column(signal)
        tracking += float(np.sum(e ** 2) * dt)

    estimation = 0.0
    if w.estimation > 0:
        oracle = estimation_oracle(trace, problem.params, problem.dist_params,
                                   problem.scenario.flags, problem.params.masses)
        for name in adrc.SUBSYSTEMS:
            estimation += float(np.sum(oracle[name]["error"] ** 2) * dt)

    effort = 0.0
    for name in adrc.SUBSYSTEMS:
        u = trace.column(f"u_{name}")
        effort += float(np.sum(u ** 2) * dt)

    violation = 0.0
    for bound in problem.bounds:
        try:
            values = trace.column(bound.signal)
        except KeyError:
            raise InvalidParameterError(f"unknown bounded signal {bound.signal!r}")
        vb = bound.violation(t, values, dt)
        report["bound_violations"][bound.signal] = vb
        violation += vb

    total = (w.tracking * tracking + w.estimation * estimation
             + w.effort * effort + w.bound_penalty * violation)
    report.update(tracking=tracking, estimation=estimation, effort=effort,
                  bound_violation=violation)
    return total, report


@dataclass(frozen=True)
class TuneOptions:
    max_iterations: int = 20
    fd_eps_rel: float = 1e-4
    fd_eps_floor: float = 1e-6
    initial_step: float = 1.0
    max_backtracks: int = 25
    rel_tol: float = 1e-6


@dataclass
class TuneResult:
    vector: np.ndarray
    cost: float
    report: dict
    history: list  # of (vector, cost) accepted iterates
    iterations: int
    converged: bool


def _project(x, lower, upper):
    return np.minimum(np.maximum(x, lower), upper)


def tune(problem, x0, options: TuneOptions | None = None) -> TuneResult:
    """Projected gradient descent with central differences and backtracking.

    ``problem`` needs ``box_lower``, ``box_upper`` and ``evaluate(vector)``;
    anything satisfying that works (the tests use an analytic fixture).
    The 2n finite-difference probes per iteration are independent of each
    other and safe to evaluate concurrently.
    """
    options = options or TuneOptions()
    lower, upper = np.asarray(problem.box_lower), np.asarray(problem.box_upper)
    x = np.asarray(x0, dtype=float).copy()
    if np.any(x < lower) or np.any(x > upper):
        raise InvalidParameterError("initial vector outside box bounds")

    f, report = problem.evaluate(x)
    if f >= SENTINEL_COST:
        raise InvalidParameterError("initial vector is infeasible")

    # per-coordinate scaling so a unit step is comparable across gains of
    # very different magnitude
    scale = np.maximum(np.abs(x), 1e-3)

    history = [(x.copy(), f)]
    converged = False
    iterations = 0
    for iterations in range(1, options.max_iterations + 1):
        grad = np.zeros_like(x)
        for i in range(len(x)):
            eps = max(options.fd_eps_rel * abs(x[i]), options.fd_eps_floor)
            xp, xm = x.copy(), x.copy()
            xp[i] = min(x[i] + eps, upper[i])
            xm[i] = max(x[i] - eps, lower[i])
            if xp[i] == xm[i]:
                continue
            fp, _ = problem.evaluate(xp)
            fm, _ = problem.evaluate(xm)
            grad[i] = (fp - fm) / (xp[i] - xm[i])

        direction = -grad * scale ** 2  # steepest descent in scaled coords
        if not np.any(direction):
            converged = True
            break

        step = options.initial_step / max(np.max(np.abs(direction / scale)), 1e-300)
        accepted = False
        for _ in range(options.max_backtracks):
            candidate = _project(x + step * direction, lower, upper)
            fc, rc = problem.evaluate(candidate)
            if fc < f:
                x, f, report = candidate, fc, rc
                accepted = True
                break
            step *= 0.5

        if not accepted:
            converged = True
            break
        prev = history[-1][1]
        history.append((x.copy(), f))
        if prev - f < options.rel_tol * max(abs(prev), 1.0):
            converged = True
            break

    return TuneResult(vector=x, cost=f, report=report, history=history,
                      iterations=iterations, converged=converged)
