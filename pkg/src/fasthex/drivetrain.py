"""Single-servo tilting mechanism: Cardan chain and rate-limited servo."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import config
from .vehicle import N_PROPS, TILT_SIGN, VehicleParams


@dataclass(frozen=True)
class DrivetrainParams:
    gear_ratio: float = 0.05  # worm drive, 20:1
    bend_angle: float = math.radians(30.0)  # universal-joint bend between adjacent axles

    def __post_init__(self):
        if not 0 < self.gear_ratio <= 1:
            raise ValueError("gear_ratio must be in (0, 1]")
        if not 0 <= self.bend_angle < math.pi / 2:
            raise ValueError("bend_angle must be in [0, pi/2)")

    @classmethod
    def from_file(cls, path: str | Path | None = None, **overrides) -> "DrivetrainParams":
        return config.load_dataclass(cls, path, **overrides)


def joint_count(i: int) -> int:
    """Universal joints between the servo and propeller ``i``: 1, 3, 5, 5, 3, 1."""
    return 6 - abs(2 * i - 7)


def _joint(gamma: float, cos_beta: float) -> float:
    # atan2 wraps; follow the input continuously since the shaft turns many times
    out = math.atan2(math.sin(gamma), cos_beta * math.cos(gamma))
    d = (out - gamma + math.pi) % (2.0 * math.pi) - math.pi
    return gamma + d


def cardan_chain(alpha_des: float, params: DrivetrainParams = DrivetrainParams()) -> np.ndarray:
    """Signed tilt angles of the six propellers for a commanded synchronized tilt."""
    if params.bend_angle == 0.0:
        # straight shafts: skip the k * (alpha / k) round trip so the result is exact
        return TILT_SIGN * alpha_des
    k = params.gear_ratio
    cb = math.cos(params.bend_angle)
    gammas = [alpha_des / k]
    for _ in range(5):
        gammas.append(_joint(gammas[-1], cb))
    return np.array([k * TILT_SIGN[i - 1] * gammas[joint_count(i)] for i in range(1, N_PROPS + 1)])


def max_divergence(alpha_des: float, params: DrivetrainParams = DrivetrainParams()) -> float:
    """Largest ``| |alpha_i| - alpha_des |`` over the six propellers."""
    return float(np.max(np.abs(np.abs(cardan_chain(alpha_des, params)) - alpha_des)))


@dataclass(frozen=True)
class TiltState:
    alpha_command: float = 0.0
    alpha_actual: float = 0.0
    alpha_rate: float = 0.0
    angles: tuple = field(default=(0.0,) * N_PROPS)

    @classmethod
    def at(cls, alpha: float, params: DrivetrainParams = DrivetrainParams()) -> "TiltState":
        return cls(alpha, alpha, 0.0, tuple(cardan_chain(alpha, params)))


def servo_step(
    state: TiltState,
    alpha_ref: float,
    dt: float,
    vehicle: VehicleParams = VehicleParams(),
    params: DrivetrainParams = DrivetrainParams(),
) -> TiltState:
    """Move the servo toward ``alpha_ref`` at no more than the rate limit."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    target = min(max(alpha_ref, vehicle.alpha_min), vehicle.alpha_max)
    max_step = vehicle.alpha_rate_max * dt
    delta = min(max(target - state.alpha_actual, -max_step), max_step)
    alpha = min(max(state.alpha_actual + delta, vehicle.alpha_min), vehicle.alpha_max)
    if alpha == state.alpha_actual:
        return replace(state, alpha_command=alpha_ref, alpha_rate=0.0)
    return TiltState(alpha_ref, alpha, (alpha - state.alpha_actual) / dt, tuple(cardan_chain(alpha, params)))


class Schedule:
    """Piecewise-linear profile through ``(time, value)`` pairs.

    Two points at the same time make a step. Held constant outside the range.
    """

    def __init__(self, points):
        pts = [(float(t), float(v)) for t, v in points]
        if not pts:
            raise ValueError("schedule needs at least one point")
        times = [t for t, _ in pts]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("schedule times must be non-decreasing")
        self.points = pts
        self._t = times

    def __call__(self, t: float) -> float:
        pts = self.points
        j = bisect.bisect_right(self._t, t)
        if j == 0:
            return pts[0][1]
        if j == len(pts):
            return pts[-1][1]
        (t0, v0), (t1, v1) = pts[j - 1], pts[j]
        if t1 == t0:
            return v1
        return v0 + (v1 - v0) * (t - t0) / (t1 - t0)

    @classmethod
    def constant(cls, value: float) -> "Schedule":
        return cls([(0.0, value)])
