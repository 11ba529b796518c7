"""Fixed-step closed-loop simulation, scenarios, and trace logging."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import adrc, disturbances, model
from .adrc import ALTITUDE, PITCH, ROLL, SUBSYSTEMS, YAW, AdrcController, StepDiagnostics
from .disturbances import DisturbanceFlags, DisturbanceParams, lump
from .errors import DivergenceError, IntegrationError, InvalidParameterError
from .model import ControlInputs, QuadParams, QuadState, rotor_speeds, state_derivative

DIVERGENCE_LIMIT = 1e6

DEG = math.pi / 180.0


@dataclass(frozen=True)
class PiecewiseConstant:
    """Right-continuous step profile: list of (t_start, value), sorted."""

    segments: tuple = ((0.0, 0.0),)

    def __post_init__(self):
        if not self.segments:
            raise InvalidParameterError("profile needs at least one segment")
        starts = [s[0] for s in self.segments]
        if starts != sorted(starts):
            raise InvalidParameterError("profile segments must be time-sorted")
        if not all(math.isfinite(v) for _, v in self.segments):
            raise InvalidParameterError("profile values must be finite")

    def __call__(self, t: float) -> float:
        value = self.segments[0][1]
        for t_start, v in self.segments:
            if t >= t_start:
                value = v
            else:
                break
        return value

    @classmethod
    def constant(cls, value: float) -> "PiecewiseConstant":
        return cls(((0.0, float(value)),))


@dataclass
class Scenario:
    duration: float = 10.0
    dt: float = 0.001
    initial_state: QuadState = field(default_factory=QuadState)
    # piecewise-constant reference per controlled subsystem
    ref_roll: PiecewiseConstant = field(default_factory=lambda: PiecewiseConstant.constant(5 * DEG))
    ref_pitch: PiecewiseConstant = field(default_factory=lambda: PiecewiseConstant.constant(5 * DEG))
    ref_yaw: PiecewiseConstant = field(default_factory=lambda: PiecewiseConstant.constant(5 * DEG))
    ref_z: PiecewiseConstant = field(default_factory=lambda: PiecewiseConstant.constant(5.0))
    flags: DisturbanceFlags = field(default_factory=DisturbanceFlags.all_on)
    d1_profile: PiecewiseConstant | None = None  # arm position; None = constant default
    open_loop: bool = False
    open_loop_u1: PiecewiseConstant = field(default_factory=lambda: PiecewiseConstant.constant(0.0))

    def __post_init__(self):
        if self.dt <= 0:
            raise InvalidParameterError("dt must be positive")
        if self.duration < 0:
            raise InvalidParameterError("duration must be non-negative")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    def references(self, t: float):
        return (self.ref_roll(t), self.ref_pitch(t), self.ref_yaw(t), self.ref_z(t))


STATE_COLUMNS = ["phi", "phi_dot", "theta", "theta_dot", "psi", "psi_dot",
                 "z", "z_dot", "x", "x_dot", "y", "y_dot"]
ACCEL_COLUMNS = ["acc_phi", "acc_theta", "acc_psi", "acc_z", "acc_x", "acc_y"]
REF_COLUMNS = ["ref_roll", "ref_pitch", "ref_yaw", "ref_z"]
PER_SUBSYSTEM = ["u", "u0", "f_hat", "x1_hat", "x2_hat", "sat"]
DELTA_COLUMNS = ["delta_a", "delta_b", "delta_c", "delta_d", "delta_e", "delta_f"]

COLUMNS = (["t"] + STATE_COLUMNS + ACCEL_COLUMNS + REF_COLUMNS
           + [f"{f}_{s}" for s in SUBSYSTEMS for f in PER_SUBSYSTEM]
           + ["G"] + DELTA_COLUMNS + ["omega_r", "rotor_sat"])


class TraceLog:
    """Uniform-grid record of one simulation run."""

    def __init__(self, columns=None):
        self.columns = list(columns) if columns is not None else list(COLUMNS)
        self.rows: list[list[float]] = []

    def append(self, row):
        if len(row) != len(self.columns):
            raise InvalidParameterError("row width does not match columns")
        self.rows.append([float(v) for v in row])

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        try:
            idx = self.columns.index(name)
        except ValueError:
            raise KeyError(name) from None
        return np.array([r[idx] for r in self.rows])

    def as_array(self) -> np.ndarray:
        return np.array(self.rows)

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            for row in self.rows:
                writer.writerow([repr(v) for v in row])

    @classmethod
    def from_csv(cls, path) -> "TraceLog":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if not header:
                raise InvalidParameterError(f"{path}: empty trace file")
            log = cls(columns=header)
            for row in reader:
                log.append([float(v) for v in row])
        return log


def rk4_step(state: QuadState, deriv_fn, t: float, dt: float) -> QuadState:
    """Classical fourth-order step.

    ``deriv_fn(t, vector, lagged) -> (derivative, accelerations)``; the
    lagged accelerations are held constant over the step and replaced by
    the final-stage accelerations afterwards.
    """
    if dt <= 0:
        raise InvalidParameterError("dt must be positive")
    y = state.vector
    lag = state.lagged_accel
    k1, _ = deriv_fn(t, y, lag)
    k2, _ = deriv_fn(t + 0.5 * dt, y + 0.5 * dt * k1, lag)
    k3, _ = deriv_fn(t + 0.5 * dt, y + 0.5 * dt * k2, lag)
    k4, acc = deriv_fn(t + dt, y + dt * k3, lag)
    for k in (k1, k2, k3, k4):
        if not np.all(np.isfinite(k)):
            raise IntegrationError(t)
    new_vec = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return QuadState(new_vec, acc)


def build_controllers(gains: "ControllerGains", params: QuadParams) -> dict:
    """Instantiate the four subsystem controllers."""
    ia = params.inertia
    b_hats = {ROLL: ia.a6, PITCH: ia.a7, YAW: ia.a8, ALTITUDE: -1.0 / params.m}
    controllers = {}
    for name in SUBSYSTEMS:
        cfg = adrc.SubsystemConfig(
            which=name,
            b_hat=b_hats[name],
            eso=gains.eso_for(name),
            pd=gains.pd_for(name),
            u_limits=gains.u_limits[name],
        )
        controllers[name] = AdrcController(cfg)
    return controllers


@dataclass(frozen=True)
class ControllerGains:
    """Stock optimized gain set; ESO gains shared across subsystems by
    default, with optional per-subsystem overrides."""

    eso: adrc.EsoGains = field(default_factory=adrc.EsoGains)
    pd_roll: adrc.PdGains = field(default_factory=lambda: adrc.PdGains(90.3979, 19.6321))
    pd_pitch: adrc.PdGains = field(default_factory=lambda: adrc.PdGains(79.3794, 21.1666))
    pd_yaw: adrc.PdGains = field(default_factory=lambda: adrc.PdGains(69.8457, 16.8096))
    pd_altitude: adrc.PdGains = field(default_factory=lambda: adrc.PdGains(10.5246, 9.5557))
    eso_overrides: dict = field(default_factory=dict)
    u_limits: dict = field(default_factory=lambda: {
        ROLL: (-5.0, 5.0), PITCH: (-5.0, 5.0), YAW: (-5.0, 5.0),
        ALTITUDE: (0.0, 40.0),
    })

    def eso_for(self, name: str) -> adrc.EsoGains:
        return self.eso_overrides.get(name, self.eso)

    def pd_for(self, name: str) -> adrc.PdGains:
        return {ROLL: self.pd_roll, PITCH: self.pd_pitch,
                YAW: self.pd_yaw, ALTITUDE: self.pd_altitude}[name]


def run(scenario: Scenario, params: QuadParams,
        dist_params: DisturbanceParams | None = None,
        gains: ControllerGains | None = None) -> TraceLog:
    """Integrate the closed loop (or the open-loop fixture) and log it."""
    dist_params = dist_params or DisturbanceParams()
    controllers = None
    if not scenario.open_loop:
        controllers = build_controllers(gains or ControllerGains(), params)

    masses = params.masses
    state = scenario.initial_state.copy()
    dt = scenario.dt
    flags = scenario.flags
    log = TraceLog()

    idle = StepDiagnostics()
    diags = {name: idle for name in SUBSYSTEMS}
    u = ControlInputs()

    n = scenario.n_steps
    for k in range(n + 1):
        t = k * dt
        if scenario.d1_profile is not None:
            masses = params.masses.with_d1(scenario.d1_profile(t))

        dist_now = lump(state, t, dist_params, flags, masses)
        refs = scenario.references(t)

        if scenario.open_loop:
            # the open-loop fixture drives the thrust channel directly
            u = ControlInputs(U1=scenario.open_loop_u1(t))
        elif k < n:
            measurements = {
                ROLL: state.vector[model.PHI],
                PITCH: state.vector[model.THETA],
                YAW: state.vector[model.PSI],
                ALTITUDE: state.vector[model.Z],
            }
            b_alt, _ = adrc.b_hat_altitude(state.phi, state.theta, dist_now.G, masses.m)
            for i, name in enumerate(SUBSYSTEMS):
                ctrl = controllers[name]
                b_hat = b_alt if name == ALTITUDE else None
                diags[name] = ctrl.step(measurements[name], refs[i], 0.0, dt, b_hat=b_hat)
            u = rotor_speeds([diags[ALTITUDE].u, diags[ROLL].u,
                              diags[PITCH].u, diags[YAW].u], params.mixer)

        row = [t, *state.vector, *state.lagged_accel, *refs]
        for name in SUBSYSTEMS:
            d = diags[name]
            row += [d.u, d.u0, d.f_hat, d.x1_hat, d.x2_hat, float(d.saturated)]
        row += [dist_now.G, *dist_now.as_vector(), u.omega_r, float(u.rotor_saturated)]
        log.append(row)

        if k == n:
            break

        def deriv_fn(tau, vector, lagged, _u=u, _masses=masses):
            st = QuadState.__new__(QuadState)
            st.vector = vector
            st.lagged_accel = lagged
            dist = lump(st, tau, dist_params, flags, _masses)
            return state_derivative(st, _u, dist, params)

        state = rk4_step(state, deriv_fn, t, dt)
        if np.max(np.abs(state.vector)) > DIVERGENCE_LIMIT:
            raise DivergenceError(t + dt)

    return log


def estimation_oracle(trace: TraceLog, params: QuadParams,
                      dist_params: DisturbanceParams | None = None,
                      flags: DisturbanceFlags | None = None,
                      masses=None) -> dict:
    """Reconstruct each subsystem's true total disturbance from the log.

    The reconstruction repeats the model algebra (everything in the
    acceleration row except the b_hat*u term) from the logged states, so
    it is independent of the observer path it is checked against.
    Returns per subsystem: true series, estimated series, error series.
    """
    dist_params = dist_params or DisturbanceParams()
    flags = flags or DisturbanceFlags.all_on()
    masses = masses or params.masses
    ia = params.inertia

    t_col = trace.column("t")
    states = np.column_stack([trace.column(c) for c in STATE_COLUMNS])
    lagged = np.column_stack([trace.column(c) for c in ACCEL_COLUMNS])
    omega_r = trace.column("omega_r")

    result = {}
    f_true = {name: np.zeros(len(trace)) for name in SUBSYSTEMS}
    for i in range(len(trace)):
        st = QuadState(states[i], lagged[i])
        d = lump(st, t_col[i], dist_params, flags, masses)
        x2, x4, x6 = states[i][model.DPHI], states[i][model.DTHETA], states[i][model.DPSI]
        f_true[ROLL][i] = ia.a1 * x4 * x6 - ia.a2 * x4 * omega_r[i] + d.delta_a
        f_true[PITCH][i] = ia.a3 * x2 * x6 + ia.a4 * x2 * omega_r[i] + d.delta_b
        f_true[YAW][i] = ia.a5 * x2 * x4 + d.delta_c
        f_true[ALTITUDE][i] = params.g + d.delta_d

    for name in SUBSYSTEMS:
        f_hat = trace.column(f"f_hat_{name}")
        result[name] = {
            "f_true": f_true[name],
            "f_hat": f_hat,
            "error": f_hat - f_true[name],
        }
    return result
