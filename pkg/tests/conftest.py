import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from physdepth.camera import CameraModel, Extrinsics, Intrinsics  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def kitti_intr():
    return Intrinsics(fx=721.5377, fy=721.5377, ox=609.5593, oy=172.854, width=1242, height=375)


@pytest.fixture
def simple_intr():
    return Intrinsics(fx=700.0, fy=700.0, ox=600.0, oy=180.0, width=1200, height=360)


@pytest.fixture
def small_cam():
    return CameraModel(
        Intrinsics(fx=80.0, fy=80.0, ox=32.0, oy=12.0, width=64, height=32),
        Extrinsics(camera_height=1.5),
    )


DATA = Path(__file__).parent / "data"


@pytest.fixture
def data_dir():
    return DATA


# one line per acceptance criterion, appended by tests/test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
