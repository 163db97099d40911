"""Full-pose geometric controller with prioritized position tracking.

Outer position loop -> (body control force, desired attitude), inner attitude
loop -> control torque, then a regularized wrench mapper -> six thrusts.
When the lateral force needed to hold the reference attitude exceeds what the
current tilt can produce, the desired attitude is rotated toward the reference
force just enough to make the remainder feasible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import analysis, config
from .dynamics import RigidBodyState
from .geometry import cross, rodrigues, vee
from .vehicle import VehicleParams, allocation_F, allocation_F1, clamp_thrust


@dataclass(frozen=True)
class ControllerGains:
    kp: tuple = (50.0, 50.0, 50.0)
    kpi: tuple = (20.0, 20.0, 20.0)
    kv: tuple = (14.14, 14.14, 14.14)
    kR: tuple = (15.0, 15.0, 6.0)
    kRi: tuple = (1.0, 1.0, 1.0)
    kw: tuple = (1.5, 1.5, 0.5)

    def __post_init__(self):
        for name in ("kp", "kpi", "kv", "kR", "kRi", "kw"):
            val = tuple(float(x) for x in getattr(self, name))
            if len(val) != 3 or min(val) <= 0:
                raise ValueError(f"gain {name} must have three positive entries")
            object.__setattr__(self, name, val)

    @classmethod
    def from_file(cls, path=None, **overrides) -> "ControllerGains":
        return config.load_dataclass(cls, path, **overrides)


@dataclass(frozen=True)
class ControllerSettings:
    n_iterations: int = 20
    e_pi_limit: float = 0.5  # m s
    e_Ri_limit: float = 0.5  # rad s
    freeze_integrators_on_clamp: bool = True

    @classmethod
    def from_file(cls, path=None, **overrides) -> "ControllerSettings":
        return config.load_dataclass(cls, path, **overrides)


@dataclass(frozen=True)
class Regularization:
    """Tikhonov weight ``gamma(alpha) = k1 / (alpha + k2)``.

    The default k1 is the rounded-down output of :func:`calibrate_regularization`.
    """

    k1: float = 1e-8
    k2: float = 0.02

    def __post_init__(self):
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("k1 and k2 must be positive")

    def gamma(self, alpha: float) -> float:
        return self.k1 / (alpha + self.k2)

    @classmethod
    def from_file(cls, path=None, **overrides) -> "Regularization":
        return config.load_dataclass(cls, path, **overrides)


@dataclass(frozen=True)
class SaturationModel:
    """Lateral force bound ``r_xy(alpha)``: scaled quadratic with a dead zone near 0."""

    coeffs: tuple = (0.0, 0.0, 0.0)  # highest power first, N
    scale: float = 0.9
    dead_zone: float = math.radians(2.0)
    fit_rms: float = float("nan")  # relative RMS residual of the calibration fit

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not 0 < self.scale <= 1:
            raise ValueError("scale must be in (0, 1]")
        if self.dead_zone < 0:
            raise ValueError("dead_zone must be non-negative")

    @classmethod
    def from_file(cls, path=None, **overrides) -> "SaturationModel":
        return config.load_dataclass(cls, path, **overrides)


@dataclass(frozen=True)
class ControllerState:
    e_pi: np.ndarray = field(default_factory=lambda: np.zeros(3))
    e_Ri: np.ndarray = field(default_factory=lambda: np.zeros(3))
    clamp_active: bool = False


@dataclass(frozen=True)
class ReferencePose:
    p: np.ndarray
    v: np.ndarray
    a: np.ndarray
    R: np.ndarray


@dataclass
class ControlOutput:
    u: np.ndarray
    R_d: np.ndarray
    ctl: ControllerState
    e_p: np.ndarray
    e_R: np.ndarray
    r_xy: float
    theta: float
    f_r: np.ndarray
    u_f: np.ndarray
    u_tau: np.ndarray
    clamp_mask: np.ndarray
    lateral_saturated: bool


def lateral_bound(alpha: float, model: SaturationModel) -> float:
    if alpha < model.dead_zone:
        return 0.0
    return max(0.0, model.scale * float(np.polyval(model.coeffs, alpha)))


def calibrate_lateral_bound(
    params: VehicleParams = VehicleParams(),
    alphas=None,
    scale: float = 0.9,
    dead_zone: float = math.radians(2.0),
) -> SaturationModel:
    """Fit a quadratic to the hover lateral-force radius over a tilt grid."""
    if alphas is None:
        alphas = np.linspace(0.0, params.alpha_max, 36)
    alphas = np.asarray(alphas, dtype=float)
    if alphas.min() < params.alpha_min or alphas.max() > params.alpha_max + 1e-12:
        raise ValueError("calibration grid outside the tilt range")
    r = []
    for a in alphas:
        try:
            r.append(analysis.max_lateral_force(a, params))
        except analysis.EmptyFeasibleSet as exc:
            raise AssertionError(f"hover infeasible at alpha={a}") from exc
    r = np.array(r)
    coeffs = np.polyfit(alphas, r, 2)
    resid = np.polyval(coeffs, alphas) - r
    rms = float(np.sqrt(np.mean(resid**2)) / max(np.max(np.abs(r)), 1e-12))
    return SaturationModel(tuple(coeffs), scale, dead_zone, rms)


def calibrate_regularization(
    params: VehicleParams = VehicleParams(), k2: float = 0.02, hover_tol: float = 5e-7
) -> Regularization:
    """Largest k1 whose level-hover split at alpha = 0 stays within ``hover_tol`` of m g / 6.

    On the vertical direction the regularized inverse shrinks the exact
    solution by sigma^2 / (sigma^2 + gamma), so the bound on gamma(0) is explicit.
    """
    sigma2 = float(np.sum(allocation_F1(0.0, params)[2] ** 2))
    exact = params.weight / 6.0
    # exact * gamma / (sigma2 + gamma) <= hover_tol
    gamma0 = hover_tol * sigma2 / (exact - hover_tol)
    return Regularization(gamma0 * k2, k2)


def wrench_map(u_f, u_tau, alpha: float, reg: Regularization = Regularization(), params: VehicleParams = VehicleParams()):
    """Thrusts realizing [u_f; u_tau] via the regularized inverse of F(alpha).

    Returns ``(u, clamp_mask)``; ``u`` is already projected onto the input box.
    """
    w = np.concatenate([np.asarray(u_f, dtype=float), np.asarray(u_tau, dtype=float)])
    return clamp_thrust(regularized_inverse(float(alpha), reg, params) @ w, params)


@lru_cache(maxsize=256)
def regularized_inverse(alpha: float, reg: Regularization = Regularization(), params: VehicleParams = VehicleParams()) -> np.ndarray:
    """``(F^T F + gamma I)^-1 F^T`` at tilt ``alpha``. Cached; do not modify the result."""
    F = allocation_F(alpha, params)
    M = np.linalg.solve(F.T @ F + reg.gamma(alpha) * np.eye(6), F.T)
    M.setflags(write=False)
    return M


def desired_orientation(R_r, f_r, r_xy: float, n_it: int = 20):
    """Attitude closest to ``R_r`` whose lateral force share fits within ``r_xy``.

    The reference thrust axis is rotated toward ``f_r`` by bisection on the
    angle; returns ``(R_d, theta)``.
    """
    R_r = np.asarray(R_r, dtype=float)
    f = np.asarray(f_r, dtype=float)
    b1r, b2r, b3r = R_r[:, 0], R_r[:, 1], R_r[:, 2]
    f_norm = math.sqrt(f @ f)
    axis = cross(b3r, f)
    c_norm = math.sqrt(axis @ axis)
    if f_norm < 1e-9 or c_norm < 1e-9:
        return R_r.copy(), 0.0
    # atan2 keeps the bracket correct when f_r points below the reference plane
    theta_max = math.atan2(c_norm, float(b3r @ f))
    k = axis / c_norm
    threshold = math.sqrt(max(f_norm * f_norm - r_xy * r_xy, 0.0))
    fb, fkb, fk_kb = float(f @ b3r), float(f @ cross(k, b3r)), float(f @ k) * float(k @ b3r)

    def projected(theta):
        c, s = math.cos(theta), math.sin(theta)
        return fb * c + fkb * s + fk_kb * (1.0 - c)

    if projected(0.0) >= threshold:
        theta = 0.0
    else:
        theta = 0.5 * theta_max
        step = 0.5 * theta_max
        for _ in range(n_it):
            step *= 0.5
            theta = theta - step if projected(theta) >= threshold else theta + step
        theta = min(max(theta, 0.0), theta_max)
    b3d = rodrigues(b3r, k, theta)
    return _frame_from_axis(b3d, b1r, b2r), theta


def _frame_from_axis(b3d, b1r, b2r) -> np.ndarray:
    b2d = cross(b3d, b1r)
    n = np.linalg.norm(b2d)
    if n < 1e-6:
        # b1r is (nearly) along the thrust axis; seed the heading from b2r instead
        b1d = cross(b2r, b3d)
        b1d /= np.linalg.norm(b1d)
        b2d = cross(b3d, b1d)
    else:
        b2d /= n
        b1d = cross(b2d, b3d)
    return np.column_stack([b1d, b2d, b3d])


def attitude_error(R_d, R_B) -> np.ndarray:
    M = R_d.T @ R_B
    return 0.5 * vee(M - M.T)


def position_control(
    state: RigidBodyState,
    ref: ReferencePose,
    ctl: ControllerState,
    gains: ControllerGains,
    params: VehicleParams,
    r_xy: float,
    dt: float,
    settings: ControllerSettings = ControllerSettings(),
):
    """Returns ``(u_f, R_d, ctl, info)`` with ``info`` holding e_p, f_r, theta and the saturation flag."""
    e_p = state.p - ref.p
    e_v = state.v - ref.v
    e_pi = ctl.e_pi
    if not (settings.freeze_integrators_on_clamp and ctl.clamp_active):
        lim = settings.e_pi_limit
        e_pi = np.clip(e_pi + e_p * dt, -lim, lim)
    f_r = (
        params.mass * (ref.a + np.array([0.0, 0.0, params.gravity]))
        - np.multiply(gains.kp, e_p)
        - np.multiply(gains.kpi, e_pi)
        - np.multiply(gains.kv, e_v)
    )
    f_body = state.R.T @ f_r
    lateral = f_body[:2]
    lat_norm = math.hypot(lateral[0], lateral[1])
    saturated = lat_norm > r_xy
    if saturated:
        lateral = lateral * (r_xy / lat_norm) if lat_norm > 0 else lateral
    u_f = np.array([lateral[0], lateral[1], f_body[2]])
    R_d, theta = desired_orientation(ref.R, f_r, r_xy, settings.n_iterations)
    info = {"e_p": e_p, "f_r": f_r, "theta": theta, "lateral_saturated": bool(saturated)}
    return u_f, R_d, replace(ctl, e_pi=e_pi), info


def attitude_control(
    state: RigidBodyState,
    R_d,
    ctl: ControllerState,
    gains: ControllerGains,
    params: VehicleParams,
    dt: float,
    settings: ControllerSettings = ControllerSettings(),
):
    """Returns ``(u_tau, ctl, e_R)``."""
    e_R = attitude_error(R_d, state.R)
    e_Ri = ctl.e_Ri
    if not (settings.freeze_integrators_on_clamp and ctl.clamp_active):
        lim = settings.e_Ri_limit
        e_Ri = np.clip(e_Ri + e_R * dt, -lim, lim)
    w = state.omega
    Jw = np.multiply(params.inertia, w)
    u_tau = cross(w, Jw) - np.multiply(gains.kR, e_R) - np.multiply(gains.kRi, e_Ri) - np.multiply(gains.kw, w)
    return u_tau, replace(ctl, e_Ri=e_Ri), e_R


def control_step(
    state: RigidBodyState,
    ref: ReferencePose,
    alpha: float,
    ctl: ControllerState,
    gains: ControllerGains = ControllerGains(),
    params: VehicleParams = VehicleParams(),
    sat: SaturationModel = SaturationModel(),
    dt: float = 0.002,
    reg: Regularization = Regularization(),
    settings: ControllerSettings = ControllerSettings(),
) -> ControlOutput:
    """One controller period: position loop, attitude loop, wrench mapping."""
    r_xy = lateral_bound(alpha, sat)
    u_f, R_d, ctl, info = position_control(state, ref, ctl, gains, params, r_xy, dt, settings)
    u_tau, ctl, e_R = attitude_control(state, R_d, ctl, gains, params, dt, settings)
    u, mask = wrench_map(u_f, u_tau, alpha, reg, params)
    ctl = replace(ctl, clamp_active=bool(mask.any()))
    return ControlOutput(
        u=u,
        R_d=R_d,
        ctl=ctl,
        e_p=info["e_p"],
        e_R=e_R,
        r_xy=r_xy,
        theta=info["theta"],
        f_r=info["f_r"],
        u_f=u_f,
        u_tau=u_tau,
        clamp_mask=mask,
        lateral_saturated=info["lateral_saturated"],
    )


def default_saturation_model(params: VehicleParams = VehicleParams()) -> SaturationModel:
    """Calibrated model, cached per parameter set."""
    key = params
    if key not in _SAT_CACHE:
        _SAT_CACHE[key] = calibrate_lateral_bound(params)
    return _SAT_CACHE[key]


_SAT_CACHE: dict = {}
