"""Rigid-body model of the quadrotor with a 1-DOF prismatic arm.

State convention (12 states): roll phi=x1, pitch theta=x3, yaw psi=x5,
altitude z=x7, translations x=x9, y=x11, with rates at the even indices.
Angles are not wrapped; the controller operates in the small-angle regime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InvalidInputError, InvalidParameterError

GRAVITY = 9.81

# indices into the 12-state vector
PHI, DPHI, THETA, DTHETA, PSI, DPSI, Z, DZ, X, DX, Y, DY = range(12)


@dataclass
class QuadState:
    """Full vehicle state plus the previous step's accelerations.

    ``lagged_accel`` stores the six accelerations (dx2, dx4, dx6, dx8,
    dx10, dx12) from the previous integration step.  The center-of-mass
    coupling terms contain accelerations on their right-hand side, which
    would otherwise create an algebraic loop; a one-step lag (O(dt)
    accurate) breaks it.
    """

    vector: np.ndarray = field(default_factory=lambda: np.zeros(12))
    lagged_accel: np.ndarray = field(default_factory=lambda: np.zeros(6))

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=float)
        self.lagged_accel = np.asarray(self.lagged_accel, dtype=float)
        if self.vector.shape != (12,):
            raise InvalidParameterError("state vector must have 12 entries")
        if self.lagged_accel.shape != (6,):
            raise InvalidParameterError("lagged_accel must have 6 entries")
        if not (np.all(np.isfinite(self.vector)) and np.all(np.isfinite(self.lagged_accel))):
            raise InvalidParameterError("state entries must be finite")

    def copy(self) -> "QuadState":
        return QuadState(self.vector.copy(), self.lagged_accel.copy())

    @property
    def phi(self):
        return self.vector[PHI]

    @property
    def theta(self):
        return self.vector[THETA]

    @property
    def psi(self):
        return self.vector[PSI]

    @property
    def z(self):
        return self.vector[Z]


@dataclass(frozen=True)
class MassProperties:
    """Component masses and the resulting center-of-mass shift."""

    m_q: float = 1.8  # quadrotor mass, kg
    m_r: float = 0.2  # manipulator mass, kg
    d0: float = 0.0  # quadrotor CoM reference offset, m
    d1: float = 0.8  # arm CoM distance from d0, m

    def __post_init__(self):
        if self.m_q <= 0:
            raise InvalidParameterError("m_q must be positive")
        if self.m_r < 0:
            raise InvalidParameterError("m_r must be non-negative")

    @property
    def m(self) -> float:
        return self.m_q + self.m_r

    @property
    def z_G(self) -> float:
        return (self.m_q * self.d0 + self.m_r * self.d1) / (self.m_q + self.m_r)

    def with_d1(self, d1: float) -> "MassProperties":
        """New mass properties for a repositioned prismatic arm."""
        return MassProperties(self.m_q, self.m_r, self.d0, d1)


@dataclass(frozen=True)
class GeometryParams:
    """Cylinder (airframe cross) and cuboid (arm) dimensions, meters."""

    R_q: float  # cylinder radius
    L_q: float  # cylinder length
    L_r: float  # cuboid length
    W_r: float  # cuboid width
    H_r: float  # cuboid height
    D_r: float  # cuboid distance to the central axis

    def __post_init__(self):
        for name in ("R_q", "L_q", "L_r", "W_r", "H_r", "D_r"):
            if getattr(self, name) <= 0:
                raise InvalidParameterError(f"geometry dimension {name} must be positive")


@dataclass(frozen=True)
class InertiaParams:
    """Principal inertias plus the derived dynamics coefficients a1..a8."""

    I_xx: float = 0.018
    I_yy: float = 0.018
    I_zz: float = 0.035
    J_r: float = 6e-3  # rotor inertia
    l: float = 0.45  # arm length of the airframe cross

    def __post_init__(self):
        if min(self.I_xx, self.I_yy, self.I_zz) <= 0:
            raise InvalidParameterError("principal inertias must be positive")

    @property
    def a1(self):
        return (self.I_yy - self.I_zz) / self.I_xx

    @property
    def a2(self):
        return self.J_r / self.I_xx

    @property
    def a3(self):
        return (self.I_zz - self.I_xx) / self.I_yy

    @property
    def a4(self):
        return self.J_r / self.I_yy

    @property
    def a5(self):
        return (self.I_xx - self.I_yy) / self.I_zz

    @property
    def a6(self):
        return self.l / self.I_xx

    @property
    def a7(self):
        return self.l / self.I_yy

    @property
    def a8(self):
        return 1.0 / self.I_zz


def compose_inertia(geometry: GeometryParams, masses: MassProperties,
                    J_r: float = 6e-3, l: float = 0.45) -> InertiaParams:
    """Build the combined inertia from component shapes (parallel-axis sum).

    The airframe is modelled as a crossed pair of cylinders, the arm as a
    cuboid offset ``D_r`` from the central axis.  The default construction
    path elsewhere in the package takes the principal inertias directly;
    this geometric path is an optional alternative.
    """
    g, mp = geometry, masses
    I_xq = mp.m_q * (g.R_q ** 2 / 4 + g.L_q ** 2 / 12 + g.R_q ** 2 / 2)
    I_yq = I_xq
    I_zq = mp.m_q * (g.R_q ** 2 / 4 + g.L_q ** 2 / 12 + g.R_q ** 2 / 4 + g.L_q ** 2 / 12)

    I_xr = mp.m_r * (g.W_r ** 2 / 12 + g.H_r ** 2 / 12 + g.D_r ** 2)
    I_yr = mp.m_r * (g.L_r ** 2 / 12 + g.H_r ** 2 / 12 + g.D_r ** 2)
    I_zr = mp.m_r * (g.L_r ** 2 / 2 + g.W_r ** 2 / 2)

    return InertiaParams(I_xx=I_xq + I_xr, I_yy=I_yq + I_yr, I_zz=I_zq + I_zr,
                         J_r=J_r, l=l)


@dataclass(frozen=True)
class MixerParams:
    """Aerodynamic force/moment constants of the control allocation.

    The numeric defaults are implementer-chosen; they affect only the
    decomposition of U into rotor speeds (and hence the relative rotor
    speed), not the closed-loop torques, which use U directly.
    """

    k_f: float = 1e-5  # N s^2 / rad^2
    k_m: float = 1.5e-6  # N m s^2 / rad^2

    def __post_init__(self):
        if self.k_f <= 0 or self.k_m <= 0:
            raise InvalidParameterError("k_f and k_m must be positive")

    def matrix(self) -> np.ndarray:
        kf, km = self.k_f, self.k_m
        return np.array([
            [kf, kf, kf, kf],
            [0.0, -kf, 0.0, kf],
            [kf, 0.0, -kf, 0.0],
            [km, -km, km, -km],
        ])


@dataclass
class ControlInputs:
    """Generalized inputs U1..U4 with the realizing rotor speeds."""

    U1: float = 0.0  # total thrust, N
    U2: float = 0.0  # roll input
    U3: float = 0.0  # pitch input
    U4: float = 0.0  # yaw input
    omega: np.ndarray = field(default_factory=lambda: np.zeros(4))  # rad/s
    rotor_saturated: bool = False

    @property
    def omega_r(self) -> float:
        """Relative rotor speed -O1 + O2 - O3 + O4."""
        o = self.omega
        return -o[0] + o[1] - o[2] + o[3]

    def as_vector(self) -> np.ndarray:
        return np.array([self.U1, self.U2, self.U3, self.U4])


def mix(omega_squared, params: MixerParams) -> ControlInputs:
    """Map squared rotor speeds to the generalized inputs U1..U4."""
    w2 = np.asarray(omega_squared, dtype=float)
    if w2.shape != (4,):
        raise InvalidInputError("expected four squared rotor speeds")
    if np.any(w2 < 0):
        raise InvalidInputError("squared rotor speeds must be non-negative")
    u = params.matrix() @ w2
    return ControlInputs(U1=u[0], U2=u[1], U3=u[2], U4=u[3], omega=np.sqrt(w2))


def unmix(u, params: MixerParams) -> tuple[np.ndarray, bool]:
    """Invert the allocation: U1..U4 -> squared rotor speeds.

    Components that solve negative are clamped to zero; the second return
    value flags that saturation.
    """
    uv = u.as_vector() if isinstance(u, ControlInputs) else np.asarray(u, dtype=float)
    m = params.matrix()
    if abs(np.linalg.det(m)) < 1e-300:
        raise ConfigurationError("allocation matrix is singular")
    w2 = np.linalg.solve(m, uv)
    saturated = bool(np.any(w2 < 0))
    return np.maximum(w2, 0.0), saturated


def rotor_speeds(u, params: MixerParams) -> ControlInputs:
    """Attach realizable rotor speeds to a commanded input vector.

    The commanded U1..U4 are kept verbatim for the dynamics; the rotor
    decomposition only feeds the gyroscopic relative-speed term.
    """
    uv = u.as_vector() if isinstance(u, ControlInputs) else np.asarray(u, dtype=float)
    w2, saturated = unmix(uv, params)
    return ControlInputs(U1=uv[0], U2=uv[1], U3=uv[2], U4=uv[3],
                         omega=np.sqrt(w2), rotor_saturated=saturated)


@dataclass(frozen=True)
class QuadParams:
    """Aggregate physical parameter set (Table-of-constants defaults)."""

    masses: MassProperties = field(default_factory=MassProperties)
    inertia: InertiaParams = field(default_factory=InertiaParams)
    mixer: MixerParams = field(default_factory=MixerParams)
    g: float = GRAVITY

    @property
    def m(self) -> float:
        return self.masses.m


def state_derivative(state: QuadState, u: ControlInputs, dist,
                     params: QuadParams) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate the 12-state derivative and the six accelerations.

    ``dist`` carries the lumped disturbance accelerations delta_a..delta_f
    and the ground-effect thrust factor G.  The six accelerations are
    returned separately so the caller can store them as the next step's
    lagged values.
    """
    s = state.vector
    if not np.all(np.isfinite(s)):
        raise InvalidInputError("state must be finite")
    ia = params.inertia
    m = params.m
    g = params.g
    G = dist.G

    x2, x4, x6, x8 = s[DPHI], s[DTHETA], s[DPSI], s[DZ]
    sin1, cos1 = math.sin(s[PHI]), math.cos(s[PHI])
    sin3, cos3 = math.sin(s[THETA]), math.cos(s[THETA])
    sin5, cos5 = math.sin(s[PSI]), math.cos(s[PSI])
    omega_r = u.omega_r

    acc_phi = u.U2 * ia.a6 - ia.a2 * x4 * omega_r + ia.a1 * x4 * x6 + dist.delta_a
    acc_theta = u.U3 * ia.a7 + ia.a4 * x2 * omega_r + ia.a3 * x2 * x6 + dist.delta_b
    acc_psi = u.U4 * ia.a8 + ia.a5 * x2 * x4 + dist.delta_c
    acc_z = g - G * (u.U1 / m) * cos3 * cos1 + dist.delta_d
    acc_x = -(u.U1 / m) * (sin1 * sin5 + sin3 * cos1 * cos5) + dist.delta_e
    acc_y = -(u.U1 / m) * (cos1 * sin3 * sin5 - sin1 * cos5) + dist.delta_f

    deriv = np.array([
        x2, acc_phi,
        x4, acc_theta,
        x6, acc_psi,
        x8, acc_z,
        s[DX], acc_x,
        s[DY], acc_y,
    ])
    accels = np.array([acc_phi, acc_theta, acc_psi, acc_z, acc_x, acc_y])
    return deriv, accels
