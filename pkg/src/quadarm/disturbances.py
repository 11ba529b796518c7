"""Disturbance channels: drag, ground effect, wind, CoM coupling, lumping.

Each channel is independently switchable; disabled channels contribute
exactly zero to the lumped accelerations delta_a..delta_f.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError
from .model import DPHI, DPSI, DTHETA, DX, DY, DZ, MassProperties, QuadState

# velocity-state indices in the order of the six lumped channels
_VEL_IDX = (DPHI, DTHETA, DPSI, DZ, DX, DY)


@dataclass(frozen=True)
class DragParams:
    """Per-axis linear drag coefficients for the six velocity states."""

    k: tuple = (0.3729,) * 6

    def __post_init__(self):
        if len(self.k) != 6:
            raise InvalidParameterError("need six drag coefficients")
        if any(ki < 0 for ki in self.k):
            raise InvalidParameterError("drag coefficients must be non-negative")


@dataclass(frozen=True)
class GroundEffectParams:
    rho: float = 8.6  # ground-effect coefficient
    r: float = 0.1905  # rotor radius, m
    z_min: float = 0.2  # altitude clamp floor, m (landing skids keep z > 0)

    def __post_init__(self):
        if self.rho <= 0 or self.r <= 0:
            raise InvalidParameterError("rho and r must be positive")
        # below r*sqrt(rho)/4 the thrust scaling is singular
        singular = self.r * math.sqrt(self.rho) / 4
        if self.z_min <= singular:
            raise InvalidParameterError(
                f"z_min={self.z_min} must exceed the singular altitude {singular:.4f}")


@dataclass(frozen=True)
class WindParams:
    """Sinusoidal gust: offset alpha plus amplitude beta at frequency n.

    The default frequency is quasi-static.  With the stock observer gains
    the disturbance-estimate channel has a dominant pole near 1 rad/s, so
    gusts much faster than ~0.01 rad/s cannot be estimated accurately;
    see the README for the trade-off.
    """

    alpha: float = 0.1
    beta: float = 1.0
    n: float = 0.002  # rad/s

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.alpha, self.beta, self.n)):
            raise InvalidParameterError("wind parameters must be finite")
        if self.n <= 0:
            raise InvalidParameterError("wind frequency must be positive")


@dataclass(frozen=True)
class DisturbanceFlags:
    drag: bool = False
    ground_effect: bool = False
    wind: bool = False
    com: bool = False

    @classmethod
    def all_on(cls):
        return cls(drag=True, ground_effect=True, wind=True, com=True)


@dataclass(frozen=True)
class DisturbanceParams:
    drag: DragParams = field(default_factory=DragParams)
    ground_effect: GroundEffectParams = field(default_factory=GroundEffectParams)
    wind: WindParams = field(default_factory=WindParams)
    # sign convention of the lumped terms exactly as published (the yaw
    # CoM term enters with + and the altitude drag with +); set False for
    # the uniformly-dissipative variant
    strict_signs: bool = True


@dataclass
class DisturbanceOutputs:
    """Lumped disturbance accelerations and the thrust scaling factor."""

    delta_a: float = 0.0
    delta_b: float = 0.0
    delta_c: float = 0.0
    delta_d: float = 0.0
    delta_e: float = 0.0
    delta_f: float = 0.0
    G: float = 1.0

    def as_vector(self) -> np.ndarray:
        return np.array([self.delta_a, self.delta_b, self.delta_c,
                         self.delta_d, self.delta_e, self.delta_f])


def drag(k: float, v: float) -> float:
    """Linear drag magnitude k*v (sign applied at the lumping stage)."""
    return k * v


def ground_effect_factor(z: float, p: GroundEffectParams) -> float:
    """Thrust amplification factor near the ground; ->1 as z -> infinity."""
    zc = max(z, p.z_min)
    return 1.0 / (1.0 - p.rho * (p.r / (4.0 * zc)) ** 2)


def wind(t: float, p: WindParams) -> float:
    return p.alpha + p.beta * math.sin(p.n * t)


def com_shift(masses: MassProperties) -> float:
    """Combined center-of-mass offset along z."""
    if masses.m <= 0:
        raise InvalidParameterError("total mass must be positive")
    return masses.z_G


def com_effect(state: QuadState, z_G: float, m: float) -> np.ndarray:
    """Coupling accelerations induced by the shifted center of mass.

    Acceleration terms on the right-hand side are taken from the previous
    step (``state.lagged_accel``), which is zero-initialized.
    """
    s = state.vector
    x2, x4, x6 = s[DPHI], s[DTHETA], s[DPSI]
    x10, x12 = s[DX], s[DY]
    d_x2, d_x4, _, _, d_x10, d_x12 = state.lagged_accel
    return np.array([
        -m * z_G * (d_x12 + x10 * x6),
        m * z_G * (d_x10 - x12 * x6),
        m * z_G * (x12 * x4 + x4 * x2),
        z_G * (x2 ** 2 - x4 ** 2),
        -z_G * (x2 * x6 - d_x4),
        -z_G * (x4 * x6 - d_x2),
    ])


def lump(state: QuadState, t: float, params: DisturbanceParams,
         flags: DisturbanceFlags, masses: MassProperties) -> DisturbanceOutputs:
    """Assemble delta_a..delta_f from the enabled channels plus G."""
    com_terms = np.zeros(6)
    if flags.com:
        com_terms = com_effect(state, masses.z_G, masses.m)

    drag_terms = np.zeros(6)
    if flags.drag:
        vel = state.vector[list(_VEL_IDX)]
        drag_terms = np.asarray(params.drag.k) * vel

    wind_term = wind(t, params.wind) if flags.wind else 0.0

    # per-channel signs on the CoM and drag contributions
    if params.strict_signs:
        com_sign = np.array([-1.0, -1.0, 1.0, -1.0, -1.0, -1.0])
        drag_sign = np.array([-1.0, -1.0, -1.0, 1.0, -1.0, -1.0])
    else:
        com_sign = np.array([-1.0, -1.0, -1.0, -1.0, -1.0, -1.0])
        drag_sign = -np.ones(6)

    delta = com_sign * com_terms + drag_sign * drag_terms + wind_term

    G = ground_effect_factor(state.z, params.ground_effect) if flags.ground_effect else 1.0
    return DisturbanceOutputs(*delta, G=G)
