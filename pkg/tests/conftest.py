"""Shared fixtures: small scenes, cameras, and tone-motion helpers."""

import numpy as np
import pytest

from virtimu.simulate import CameraConfig, Scene, make_scene
from virtimu.sigcore import MotionTrace


@pytest.fixture(scope="session")
def scene_64():
    return make_scene(64, 64, seed=3)


@pytest.fixture(scope="session")
def scene_120x160():
    return make_scene(120, 160, seed=7)


@pytest.fixture
def cam_rolling():
    return CameraConfig(frame_w=64, frame_h=64, fps=30.0, shutter="rolling")


@pytest.fixture
def cam_global():
    return CameraConfig(frame_w=64, frame_h=64, fps=30.0, shutter="global")


def tone_motion(freq_hz, amp_px, duration_s, rate_hz, axis="tx", phase=0.0):
    """Single-axis sinusoid motion trace; the other axis is zero."""
    n = int(round(duration_s * rate_hz)) + 1
    t = np.arange(n) / rate_hz
    sig = amp_px * np.sin(2 * np.pi * freq_hz * t + phase)
    data = np.zeros((2, n))
    data[0 if axis == "tx" else 1] = sig
    return MotionTrace(rate_hz, ["tx", "ty"], data)


@pytest.fixture
def make_tone():
    return tone_motion
