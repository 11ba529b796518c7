import math

import numpy as np
import pytest

from quadarm import (DisturbanceFlags, PiecewiseConstant, QuadParams, QuadState,
                     Scenario, run)

DEG = math.pi / 180.0


@pytest.fixture(scope="session")
def params():
    return QuadParams()


@pytest.fixture(scope="session")
def standard_trace(params):
    """Stock tracking scenario: 5 deg attitude / 5 m altitude set-points,
    all disturbance channels enabled."""
    return run(Scenario(duration=10.0), params)


@pytest.fixture(scope="session")
def estimation_scenario():
    """Hover-hold estimation benchmark: drag + wind + CoM coupling active,
    level attitude, constant 5 m altitude."""
    initial = QuadState(np.array([0, 0, 0, 0, 0, 0, 5.0, 0, 0, 0, 0, 0], float))
    zero = PiecewiseConstant.constant(0.0)
    return Scenario(
        duration=10.0,
        initial_state=initial,
        ref_roll=zero, ref_pitch=zero, ref_yaw=zero,
        ref_z=PiecewiseConstant.constant(5.0),
        flags=DisturbanceFlags(drag=True, wind=True, com=True),
    )


@pytest.fixture(scope="session")
def estimation_trace(estimation_scenario, params):
    return run(estimation_scenario, params)
