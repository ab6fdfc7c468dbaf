"""Shared fixtures. Default intrinsics and panel are module-level constants
in all but name, so build them once per session."""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from vlp.geometry import Attitude, CameraIntrinsics, LedPanel, Pose, Vec3

settings.register_profile(
    "ci",
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def intr() -> CameraIntrinsics:
    return CameraIntrinsics()


@pytest.fixture(scope="session")
def panel() -> LedPanel:
    return LedPanel()


def nadir_pose(x: float, y: float, h: float, yaw: float = 0.0) -> Pose:
    return Pose(Vec3(x, y, h), Attitude(0.0, 0.0, yaw))


def rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)
