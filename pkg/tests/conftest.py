import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from phasegeom import kinematics as KIN
from phasegeom import metrics as M

settings.register_profile(
    "default",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

METRIC_IDS = ("minkowski", "schwarzschild", "wavy", "tilted")


@pytest.fixture(scope="session")
def metrics():
    return {name: M.build_metric(name) for name in METRIC_IDS}


@pytest.fixture(scope="session")
def schwarzschild():
    return M.schwarzschild(1.0)


def sample(metric, count, seed=0, c=1.0):
    pts, _ = KIN.sample_phase_points(metric, count, seed, c=c)
    assert len(pts) == count
    return pts


def mx(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0
