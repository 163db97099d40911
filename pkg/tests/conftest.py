import math

import numpy as np
import pytest
from hypothesis import settings

from fasthex.vehicle import VehicleParams

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def params():
    return VehicleParams()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_rotation(rng):
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


DEG = math.pi / 180.0


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import REPORT

    if not REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(REPORT, key=lambda c: int(c[1:])):
        parts = REPORT[cid]
        ok = all(p["ok"] for p in parts)
        detail = "; ".join(p["detail"] for p in parts if p["detail"])
        runtime = sum(p["runtime"] for p in parts)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {cid:>3}  {parts[0]['title']} [{runtime:.2f} s]  {detail}")
