import math

import numpy as np
import pytest

from convins.earth import GeodeticPosition
from convins.trajectory import SegmentSpec


@pytest.fixture
def origin():
    return GeodeticPosition(math.radians(45.0), math.radians(7.0), 100.0)


@pytest.fixture
def short_script():
    """Two minutes of straights, turns and a climb at 15 m/s."""
    r = math.radians(3.0)
    return [
        SegmentSpec("straight", 20.0, 15.0),
        SegmentSpec("turn", 30.0, 15.0, turn_rate=r),
        SegmentSpec("climb", 30.0, 15.0, climb_rate=1.0),
        SegmentSpec("turn", 20.0, 15.0, turn_rate=-r),
        SegmentSpec("straight", 20.0, 15.0),
    ]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


SMALL_TOML = """
[trajectory]
[[trajectory.segments]]
kind = "straight"
duration = 60.0
speed = 15.0
[[trajectory.segments]]
kind = "turn"
duration = 30.0
speed = 15.0
turn_rate_deg_s = 3.0
[[trajectory.segments]]
kind = "climb"
duration = 40.0
speed = 15.0
climb_rate = 1.0
[[trajectory.segments]]
kind = "straight"
duration = 70.0
speed = 15.0

[train]
epochs = 2
window = 24
"""


@pytest.fixture
def small_toml(tmp_path):
    """A 200 s scenario with a two-epoch training budget, written to disk."""
    p = tmp_path / "small.toml"
    p.write_text(SMALL_TOML)
    return p


@pytest.fixture
def small_cfg():
    from convins.config import parse_config
    return parse_config(SMALL_TOML)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
