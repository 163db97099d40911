import math

import pytest

from fasthex.config import dump_kv, load_dataclass, parse_kv, save_dataclass
from fasthex.controller import ControllerGains, ControllerSettings, SaturationModel
from fasthex.drivetrain import DrivetrainParams
from fasthex.vehicle import VehicleParams


def test_parse_kv_types():
    text = "# comment\nmass = 2.5\nn = 4\ninertia = 0.1, 0.2, 0.3  # principal\nflag = false\nname = hex\n"
    assert parse_kv(text) == {"mass": 2.5, "n": 4, "inertia": (0.1, 0.2, 0.3), "flag": False, "name": "hex"}


@pytest.mark.parametrize("obj", [VehicleParams(mass=2.0), ControllerGains(kp=(1.0, 2.0, 3.0)), DrivetrainParams(bend_angle=0.1),
                                 ControllerSettings(freeze_integrators_on_clamp=False), SaturationModel((1.0, 2.0, 3.0), 0.8)])
def test_round_trip(obj, tmp_path):
    path = tmp_path / "p.cfg"
    save_dataclass(obj, path)
    again = load_dataclass(type(obj), path)
    assert dump_kv(again) == dump_kv(obj)


def test_overrides_and_unknown_keys(tmp_path):
    path = tmp_path / "v.cfg"
    path.write_text("mass = 4.0\n")
    p = VehicleParams.from_file(path, arm_length=0.4)
    assert p.mass == 4.0 and p.arm_length == 0.4
    assert p.alpha_max == pytest.approx(math.radians(35))
    path.write_text("massive = 4.0\n")
    with pytest.raises(ValueError, match="massive"):
        VehicleParams.from_file(path)
