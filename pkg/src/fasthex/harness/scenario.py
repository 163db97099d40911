"""Scenario descriptions and reference trajectory generators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np
import yaml

from ..controller import ReferencePose
from ..drivetrain import Schedule
from ..dynamics import Disturbance
from ..geometry import from_euler_zyx


def parse_angle(value) -> float:
    """Radians from a number or a string such as ``"30deg"``."""
    if isinstance(value, str):
        s = value.strip().lower()
        if s.endswith("deg"):
            return math.radians(float(s[:-3]))
        if s.endswith("rad"):
            s = s[:-3]
        return float(s)
    return float(value)


@dataclass
class Scenario:
    name: str
    duration: float
    trajectory: dict
    alpha_schedule: list = field(default_factory=lambda: [(0.0, 0.0)])
    initial_state: Any = "reference"
    disturbances: list = field(default_factory=list)
    noise: dict = field(default_factory=dict)
    blanking: float = 2.0
    outputs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("scenario duration must be positive")
        self.alpha_schedule = [(float(t), parse_angle(a)) for t, a in self.alpha_schedule]
        Schedule(self.alpha_schedule)  # validates ordering
        self.disturbances = [d if isinstance(d, Disturbance) else Disturbance(**d) for d in self.disturbances]

    @property
    def schedule(self) -> Schedule:
        return Schedule(self.alpha_schedule)

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        return cls(**d)

    @classmethod
    def from_file(cls, path: str | Path) -> "Scenario":
        return cls.from_dict(yaml.safe_load(Path(path).read_text()))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "duration": self.duration,
            "trajectory": self.trajectory,
            "alpha_schedule": [list(p) for p in self.alpha_schedule],
            "initial_state": self.initial_state,
            "disturbances": [vars(d) | {"force": list(d.force), "torque": list(d.torque)} for d in self.disturbances],
            "noise": self.noise,
            "blanking": self.blanking,
            "outputs": self.outputs,
        }


def _attitude(spec: dict) -> np.ndarray:
    rpy = [parse_angle(a) for a in spec.get("attitude_rpy", (0.0, 0.0, 0.0))]
    return from_euler_zyx(*rpy)


def make_trajectory(spec: dict) -> Callable[[float], ReferencePose]:
    """Reference generator ``t -> ReferencePose`` with exact velocity and acceleration.

    Supported ``type`` values:

    ``constant``
        ``position``, optional ``attitude_rpy``.
    ``sinusoid_position``
        ``position`` (centre), ``axis`` (0/1/2), ``amplitude`` (half range, m),
        ``angular_frequency`` (rad/s), optional ``attitude_rpy``.
    ``sinusoid_roll``
        ``position``, ``amplitude`` (rad or "6deg"), ``frequency`` (Hz),
        optional ``attitude_rpy`` giving constant pitch and yaw.
    """
    kind = spec.get("type")
    zero = np.zeros(3)
    try:
        p0 = np.array(spec["position"], dtype=float)
    except KeyError as exc:
        raise ValueError("trajectory spec needs a position") from exc
    if p0.shape != (3,):
        raise ValueError("position must have three entries")

    if kind == "constant":
        R = _attitude(spec)
        pose = ReferencePose(p0, zero, zero, R)
        return lambda t: pose

    if kind == "sinusoid_position":
        axis = int(spec.get("axis", 0))
        if axis not in (0, 1, 2):
            raise ValueError("axis must be 0, 1 or 2")
        A = float(spec["amplitude"])
        w = float(spec["angular_frequency"])
        R = _attitude(spec)
        e = np.eye(3)[axis]

        def sinusoid(t: float) -> ReferencePose:
            s, c = math.sin(w * t), math.cos(w * t)
            return ReferencePose(p0 + e * (A * s), e * (A * w * c), e * (-A * w * w * s), R)

        return sinusoid

    if kind == "sinusoid_roll":
        A = parse_angle(spec["amplitude"])
        f = float(spec["frequency"])
        _, pitch, yaw = [parse_angle(a) for a in spec.get("attitude_rpy", (0.0, 0.0, 0.0))]

        def rolling(t: float) -> ReferencePose:
            return ReferencePose(p0, zero, zero, from_euler_zyx(A * math.sin(2 * math.pi * f * t), pitch, yaw))

        return rolling

    raise ValueError(f"unknown trajectory type {kind!r}")


# Built-in scenarios mirroring the flight experiments. The translation
# amplitude 1.2 m is read as peak-to-peak: 0.6 m half range at 1/0.6 rad/s
# gives the stated 1 m/s and 1.67 m/s^2 peaks.
EXP1_POSITION = [-0.14, -0.05, 1.0]
EXP2B_POSITION = [-0.08, -0.03, 1.0]


def experiment_1(duration: float = 80.0, switch_up: float = 20.0, switch_down: float = 50.0, tilt="30deg") -> Scenario:
    return Scenario(
        name="exp1_static_hover",
        duration=duration,
        trajectory={"type": "constant", "position": EXP1_POSITION},
        alpha_schedule=[(0, 0), (switch_up, 0), (switch_up, tilt), (switch_down, tilt), (switch_down, 0)],
    )


def experiment_2a(alpha="0deg", duration: float = 20.0) -> Scenario:
    return Scenario(
        name=f"exp2a_translation_{alpha}",
        duration=duration,
        trajectory={
            "type": "sinusoid_position",
            "position": [0.0, 0.0, 1.0],
            "axis": 0,
            "amplitude": 0.6,
            "angular_frequency": 1.0 / 0.6,
        },
        alpha_schedule=[(0, alpha)],
        initial_state="reference",
    )


def experiment_2b(alpha="0deg", duration: float = 20.0) -> Scenario:
    return Scenario(
        name=f"exp2b_roll_{alpha}",
        duration=duration,
        trajectory={"type": "sinusoid_roll", "position": EXP2B_POSITION, "amplitude": "6deg", "frequency": 0.1},
        alpha_schedule=[(0, alpha)],
        initial_state="reference",
    )


BUILTIN = {
    "exp1": experiment_1,
    "exp2a_udt": lambda: experiment_2a("0deg"),
    "exp2a_mdt": lambda: experiment_2a("30deg"),
    "exp2b_udt": lambda: experiment_2b("0deg"),
    "exp2b_mdt": lambda: experiment_2b("30deg"),
}
