"""Quadrotor-manipulator simulation and active disturbance rejection control."""

from .adrc import AdrcController, EsoGains, EsoState, PdGains, SubsystemConfig
from .disturbances import (DisturbanceFlags, DisturbanceOutputs, DisturbanceParams,
                           DragParams, GroundEffectParams, WindParams,
                           ground_effect_factor)
from .model import (ControlInputs, GeometryParams, InertiaParams, MassProperties,
                    MixerParams, QuadParams, QuadState, compose_inertia, mix,
                    state_derivative, unmix)
from .sim import (ControllerGains, PiecewiseConstant, Scenario, TraceLog,
                  estimation_oracle, rk4_step, run)
from .tuner import (CostWeights, SignalBound, TuneOptions, TuneProblem,
                    TuneResult, cost, tune)

__all__ = [name for name in dir() if not name.startswith("_")]
