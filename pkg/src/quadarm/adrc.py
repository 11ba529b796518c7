"""Per-subsystem active disturbance rejection: ESO + cancellation + PD.

Four instances run side by side (roll, pitch, yaw, altitude).  Each owns a
three-state linear observer whose third state estimates the subsystem's
total disturbance; the cancellation law divides it out, leaving a double
integrator for the PD loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ConfigurationError, InvalidParameterError

ROLL, PITCH, YAW, ALTITUDE = "roll", "pitch", "yaw", "altitude"
SUBSYSTEMS = (ROLL, PITCH, YAW, ALTITUDE)

#: smallest admissible |b_hat|; keeps the cancellation bounded when the
#: altitude effectiveness degenerates near +-90 deg attitude
B_MIN = 0.05


def is_hurwitz(p1: float, p2: float, p3: float) -> bool:
    """Routh condition for s^3 + p1 s^2 + p2 s + p3."""
    return p1 > 0 and p3 > 0 and p1 * p2 > p3


@dataclass(frozen=True)
class EsoGains:
    p1: float = 29.5659
    p2: float = 2907.0
    p3: float = 3000.0

    def __post_init__(self):
        if not is_hurwitz(self.p1, self.p2, self.p3):
            raise ConfigurationError(
                f"observer gains ({self.p1}, {self.p2}, {self.p3}) are not Hurwitz "
                "(need p1>0, p3>0, p1*p2>p3)")

    @classmethod
    def from_bandwidth(cls, omega0: float) -> "EsoGains":
        """Triple pole at -omega0."""
        return cls(3 * omega0, 3 * omega0 ** 2, omega0 ** 3)


@dataclass
class EsoState:
    x1_hat: float = 0.0  # estimated output
    x2_hat: float = 0.0  # estimated rate
    x3_hat: float = 0.0  # estimated total disturbance


@dataclass(frozen=True)
class PdGains:
    kp: float
    kd: float

    def __post_init__(self):
        if self.kp <= 0 or self.kd <= 0:
            raise InvalidParameterError("PD gains must be positive")


@dataclass(frozen=True)
class SubsystemConfig:
    which: str
    b_hat: float  # control effectiveness (recomputed per step for altitude)
    eso: EsoGains
    pd: PdGains
    u_limits: tuple[float, float]

    def __post_init__(self):
        if self.which not in SUBSYSTEMS:
            raise InvalidParameterError(f"unknown subsystem {self.which!r}")
        if self.which != ALTITUDE and abs(self.b_hat) < B_MIN:
            raise InvalidParameterError("b_hat too close to zero")
        if self.u_limits[0] >= self.u_limits[1]:
            raise InvalidParameterError("u_limits must be an increasing pair")


def eso_step(eso: EsoState, y: float, u: float, b_hat: float,
             gains: EsoGains, dt: float) -> EsoState:
    """Advance the observer one step (RK4, measurement held over the step)."""
    if dt <= 0:
        raise InvalidParameterError("dt must be positive")
    p1, p2, p3 = gains.p1, gains.p2, gains.p3
    bu = b_hat * u

    def deriv(x1, x2, x3):
        e = y - x1
        return x2 + p1 * e, x3 + p2 * e + bu, p3 * e

    x1, x2, x3 = eso.x1_hat, eso.x2_hat, eso.x3_hat
    k1 = deriv(x1, x2, x3)
    k2 = deriv(x1 + 0.5 * dt * k1[0], x2 + 0.5 * dt * k1[1], x3 + 0.5 * dt * k1[2])
    k3 = deriv(x1 + 0.5 * dt * k2[0], x2 + 0.5 * dt * k2[1], x3 + 0.5 * dt * k2[2])
    k4 = deriv(x1 + dt * k3[0], x2 + dt * k3[1], x3 + dt * k3[2])
    sixth = dt / 6.0
    return EsoState(
        x1 + sixth * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
        x2 + sixth * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
        x3 + sixth * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]),
    )


def clamp_b_hat(b_hat: float) -> tuple[float, bool]:
    """Bound |b_hat| away from zero; flags when the clamp engaged."""
    if abs(b_hat) >= B_MIN:
        return b_hat, False
    sign = -1.0 if b_hat < 0 else 1.0
    return sign * B_MIN, True


def cancel(u0: float, f_hat: float, b_hat: float,
           u_limits: tuple[float, float] | None = None) -> tuple[float, bool, bool]:
    """Disturbance-cancelling control u = (u0 - f_hat) / b_hat.

    Returns (u, saturated, degenerate_b).
    """
    b, degenerate = clamp_b_hat(b_hat)
    u = (u0 - f_hat) / b
    saturated = False
    if u_limits is not None:
        lo, hi = u_limits
        if u < lo:
            u, saturated = lo, True
        elif u > hi:
            u, saturated = hi, True
    return u, saturated, degenerate


def pd(ref: float, ref_rate: float, x1_hat: float, x2_hat: float,
       gains: PdGains) -> float:
    """PD law on the estimated states of the reduced double integrator."""
    return gains.kp * (ref - x1_hat) + gains.kd * (ref_rate - x2_hat)


def b_hat_altitude(phi: float, theta: float, G: float, m: float) -> tuple[float, bool]:
    """Altitude control effectiveness -(G/m) cos(theta) cos(phi), clamped."""
    raw = -(G / m) * math.cos(theta) * math.cos(phi)
    return clamp_b_hat(raw)


@dataclass
class StepDiagnostics:
    u: float = 0.0
    u0: float = 0.0
    f_hat: float = 0.0
    x1_hat: float = 0.0
    x2_hat: float = 0.0
    estimation_error: float = 0.0  # y - x1_hat
    saturated: bool = False
    degenerate_b: bool = False


class AdrcController:
    """One subsystem's controller; owns its observer state across steps."""

    def __init__(self, config: SubsystemConfig):
        self.config = config
        self.eso = EsoState()
        self._last_u = 0.0
        self._initialized = False

    def reset(self):
        self.eso = EsoState()
        self._last_u = 0.0
        self._initialized = False

    def step(self, y: float, ref: float, ref_rate: float, dt: float,
             b_hat: float | None = None) -> StepDiagnostics:
        """One control period: observe with the previously applied input,
        then compute the new cancelling control.

        ``b_hat`` overrides the configured effectiveness (used by the
        altitude loop, whose effectiveness depends on attitude and the
        ground-effect factor).
        """
        cfg = self.config
        b = cfg.b_hat if b_hat is None else b_hat
        if not self._initialized:
            # start the observer on the first measurement to avoid a large
            # artificial transient
            self.eso = EsoState(x1_hat=y)
            self._initialized = True
        else:
            self.eso = eso_step(self.eso, y, self._last_u, b, cfg.eso, dt)

        u0 = pd(ref, ref_rate, self.eso.x1_hat, self.eso.x2_hat, cfg.pd)
        u, saturated, degenerate = cancel(u0, self.eso.x3_hat, b, cfg.u_limits)
        self._last_u = u
        return StepDiagnostics(
            u=u, u0=u0, f_hat=self.eso.x3_hat,
            x1_hat=self.eso.x1_hat, x2_hat=self.eso.x2_hat,
            estimation_error=y - self.eso.x1_hat,
            saturated=saturated, degenerate_b=degenerate,
        )
