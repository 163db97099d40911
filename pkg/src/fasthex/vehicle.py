"""Platform parameters and the tilt-dependent actuation maps.

Propeller ``i`` (1-based) sits at ``l * rot_z((i-1) pi/3) e1`` and is tilted
about its radial axis by ``(-1)**(i-1) * alpha``. Thrusts ``u = [f1..f6]``
map to the body-frame force ``F1(alpha) u`` and the torque about the centre
``F2(alpha) u``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import config
from .geometry import E1, E3, rot_x, rot_z

N_PROPS = 6
# Zero singular values are judged relative to the largest one.
RANK_RTOL = 1e-9

# sin/cos of (i-1) pi/3 written out exactly so opposite arms cancel to the last bit
_S3 = math.sqrt(3.0) / 2.0
_SIN_PSI = np.array([0.0, _S3, _S3, 0.0, -_S3, -_S3])
_COS_PSI = np.array([1.0, 0.5, -0.5, -1.0, -0.5, 0.5])
# (-1)**(i-1) for i = 1..6
TILT_SIGN = np.array([1.0, -1.0, 1.0, -1.0, 1.0, -1.0])
# (-1)**i, sign of the drag moment
DRAG_SIGN = -TILT_SIGN


@dataclass(frozen=True)
class VehicleParams:
    """Physical constants. Defaults match the reference prototype."""

    mass: float = 3.1
    inertia: tuple[float, float, float] = (0.089, 0.091, 0.164)
    arm_length: float = 0.305
    c_f: float = 9.9e-4  # N/Hz^2
    c_tau: float = 1.9e-2  # m, drag moment per unit thrust
    gravity: float = 9.81
    w_min: float = 16.0  # Hz
    w_max: float = 102.0  # Hz
    alpha_min: float = 0.0
    alpha_max: float = math.radians(35.0)
    alpha_rate_max: float = math.radians(10.0)
    f_max_nominal: float = 10.0  # N, nameplate value; the binding bound is c_f * w_max**2

    def __post_init__(self):
        object.__setattr__(self, "inertia", tuple(float(x) for x in self.inertia))
        if self.mass <= 0 or self.arm_length <= 0 or self.c_f <= 0 or self.c_tau <= 0:
            raise ValueError("mass, arm_length, c_f and c_tau must be positive")
        if len(self.inertia) != 3 or min(self.inertia) <= 0:
            raise ValueError("inertia must be three positive principal moments")
        if not 0 < self.w_min < self.w_max:
            raise ValueError("need 0 < w_min < w_max")
        if not (self.alpha_min == 0.0 and self.alpha_max >= self.alpha_min):
            raise ValueError("tilt range must be [0, alpha_max]")

    @property
    def J(self) -> np.ndarray:
        return np.diag(self.inertia)

    @property
    def weight(self) -> float:
        return self.mass * self.gravity

    @property
    def f_min(self) -> float:
        return self.c_f * self.w_min**2

    @property
    def f_max(self) -> float:
        return self.c_f * self.w_max**2

    @classmethod
    def from_file(cls, path: str | Path | None = None, **overrides) -> "VehicleParams":
        return config.load_dataclass(cls, path, **overrides)


def _check_index(i: int) -> None:
    if not (isinstance(i, (int, np.integer)) and 1 <= i <= N_PROPS):
        raise IndexError(f"propeller index must be in 1..{N_PROPS}, got {i!r}")


def propeller_attitude(i: int, alpha: float) -> np.ndarray:
    _check_index(i)
    return rot_z((i - 1) * math.pi / 3.0) @ rot_x((-1) ** (i - 1) * alpha)


def propeller_position(i: int, params: VehicleParams = VehicleParams()) -> np.ndarray:
    _check_index(i)
    return params.arm_length * (rot_z((i - 1) * math.pi / 3.0) @ E1)


def propeller_wrench(i: int, f_i: float, alpha: float, params: VehicleParams = VehicleParams()):
    """Body-frame (force, torque about O_B) of one propeller with thrust ``f_i``."""
    force = propeller_attitude(i, alpha) @ (f_i * E3)
    torque = np.cross(propeller_position(i, params), force) + (-1) ** i * params.c_tau * force
    return force, torque


def allocation_from_angles(angles, params: VehicleParams = VehicleParams()):
    """(F1, F2) for propellers tilted by the given *signed* angles.

    ``angles[i-1]`` is the rotation about the radial axis of propeller ``i``,
    already including the alternating sign. Used by the simulator with the
    true drivetrain angles.
    """
    a = np.asarray(angles, dtype=float)
    sa, ca = np.sin(a), np.cos(a)
    F1 = np.empty((3, N_PROPS))
    F1[0] = _SIN_PSI * sa
    F1[1] = -_COS_PSI * sa
    F1[2] = ca
    l = params.arm_length
    # p_i x z_i in closed form
    F2 = np.empty((3, N_PROPS))
    F2[0] = l * _SIN_PSI * ca
    F2[1] = -l * _COS_PSI * ca
    F2[2] = -l * sa
    F2 += params.c_tau * DRAG_SIGN * F1
    return F1, F2


def allocation_F1(alpha: float, params: VehicleParams = VehicleParams()) -> np.ndarray:
    return allocation_from_angles(TILT_SIGN * alpha, params)[0]


def allocation_F2(alpha: float, params: VehicleParams = VehicleParams()) -> np.ndarray:
    return allocation_from_angles(TILT_SIGN * alpha, params)[1]


def allocation_F(alpha: float, params: VehicleParams = VehicleParams()) -> np.ndarray:
    """Body-frame 6x6 map from thrusts to the stacked wrench [force; torque]."""
    return np.vstack(allocation_from_angles(TILT_SIGN * alpha, params))


def allocation_F_derivative(alpha: float, params: VehicleParams = VehicleParams()) -> np.ndarray:
    """Analytic d F(alpha) / d alpha."""
    s = TILT_SIGN
    a = s * alpha
    dz = np.vstack([_SIN_PSI * s * np.cos(a), -_COS_PSI * s * np.cos(a), -s * np.sin(a)])
    l = params.arm_length
    dpz = np.vstack([-l * _SIN_PSI * s * np.sin(a), l * _COS_PSI * s * np.sin(a), -l * s * np.cos(a)])
    return np.vstack([dz, dpz + params.c_tau * DRAG_SIGN * dz])


def numerical_rank(M, rtol: float = RANK_RTOL) -> int:
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s / s[0] > rtol))


def thrust_from_spin(w, params: VehicleParams = VehicleParams()):
    w = np.asarray(w, dtype=float)
    if np.any(w < 0):
        raise ValueError("spin rate must be non-negative")
    out = params.c_f * w**2
    return float(out) if out.ndim == 0 else out


def spin_from_thrust(f, params: VehicleParams = VehicleParams()):
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ValueError("thrust must be non-negative")
    out = np.sqrt(f / params.c_f)
    return float(out) if out.ndim == 0 else out


def input_feasible(u, params: VehicleParams = VehicleParams()) -> bool:
    """True iff every thrust corresponds to a spin rate within [w_min, w_max]."""
    u = np.asarray(u, dtype=float)
    if u.shape != (N_PROPS,) or np.any(u < 0):
        return False
    w = np.sqrt(u / params.c_f)
    return bool(np.all((w >= params.w_min) & (w <= params.w_max)))


def clamp_thrust(u, params: VehicleParams = VehicleParams()):
    """Project ``u`` onto the input box. Returns (clamped u, per-propeller clamp mask)."""
    u = np.asarray(u, dtype=float)
    lo, hi = params.f_min, params.f_max
    clamped = np.clip(u, lo, hi)
    # a tiny tolerance keeps exact boundary values from counting as clamping events
    mask = (u < lo * (1 - 1e-12)) | (u > hi * (1 + 1e-12))
    return clamped, mask
