"""Newton-Euler rigid-body simulation driven by per-propeller thrusts.

Gyroscopic tilt torques, inertia shifts and aerodynamic drag are not
modelled; the disturbance schedule is the only way to add external effects.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from .drivetrain import TiltState
from .geometry import cross, exp_so3, orthonormalize, skew
from .vehicle import VehicleParams, allocation_from_angles, clamp_thrust

DIVERGENCE_LIMIT = 1e6


class SimulationDiverged(RuntimeError):
    def __init__(self, t: float, state: "RigidBodyState", msg: str = ""):
        self.t = t
        self.state = state
        super().__init__(msg or f"simulation diverged at t={t:.4f}s")


@dataclass(frozen=True)
class RigidBodyState:
    p: np.ndarray = field(default_factory=lambda: np.zeros(3))  # world, m
    R: np.ndarray = field(default_factory=lambda: np.eye(3))  # body -> world
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))  # world, m/s
    omega: np.ndarray = field(default_factory=lambda: np.zeros(3))  # body, rad/s

    def __post_init__(self):
        for name in ("p", "R", "v", "omega"):
            object.__setattr__(self, name, np.array(getattr(self, name), dtype=float))

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(x)) for x in (self.p, self.R, self.v, self.omega))


@dataclass(frozen=True)
class Disturbance:
    t_start: float
    t_end: float
    force: tuple = (0.0, 0.0, 0.0)  # world frame, N
    torque: tuple = (0.0, 0.0, 0.0)  # body frame, N m

    def __post_init__(self):
        # YAML 1.1 reads "1.0e12" as a string, so coerce everything
        for name in ("t_start", "t_end"):
            object.__setattr__(self, name, float(getattr(self, name)))
        for name in ("force", "torque"):
            vec = tuple(float(x) for x in getattr(self, name))
            if len(vec) != 3:
                raise ValueError(f"disturbance {name} needs three components")
            object.__setattr__(self, name, vec)


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.002
    integrator: str = "rk4"
    disturbances: Sequence[Disturbance] = ()
    substeps: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.integrator not in ("rk4", "euler"):
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")

    def disturbance_at(self, t: float):
        f = np.zeros(3)
        tau = np.zeros(3)
        for d in self.disturbances:
            if d.t_start <= t < d.t_end:
                f += d.force
                tau += d.torque
        return f, tau


class Derivative(NamedTuple):
    p_dot: np.ndarray
    v_dot: np.ndarray
    omega: np.ndarray  # body rate driving R_dot = R [omega]x
    omega_dot: np.ndarray


@lru_cache(maxsize=256)
def _allocation(angles: tuple, params: VehicleParams):
    # the tilt is piecewise constant in most runs, so this hits almost every step
    F1, F2 = allocation_from_angles(angles, params)
    F1.setflags(write=False)
    F2.setflags(write=False)
    return F1, F2


def body_wrench(u, tilt: TiltState, params: VehicleParams):
    """Body-frame thrust force and torque using the true per-propeller tilts."""
    F1, F2 = _allocation(tuple(tilt.angles), params)
    u = np.asarray(u, dtype=float)
    return F1 @ u, F2 @ u


def _accelerations(R, omega, f_body, tau_body, f_dist, tau_dist, params: VehicleParams):
    J = params.inertia
    a = (R @ f_body + f_dist) / params.mass
    a[2] -= params.gravity
    Jw = np.array([J[0] * omega[0], J[1] * omega[1], J[2] * omega[2]])
    wdot = (tau_body + tau_dist - cross(omega, Jw)) / np.array(J)
    return a, wdot


def dynamics_rhs(
    state: RigidBodyState,
    u,
    tilt: TiltState,
    params: VehicleParams = VehicleParams(),
    disturbance=None,
) -> Derivative:
    f_body, tau_body = body_wrench(u, tilt, params)
    f_dist, tau_dist = (np.zeros(3), np.zeros(3)) if disturbance is None else map(np.asarray, disturbance)
    a, wdot = _accelerations(state.R, state.omega, f_body, tau_body, f_dist, tau_dist, params)
    return Derivative(state.v.copy(), a, state.omega.copy(), wdot)


def _rk4(p, v, R, w, h, f_body, tau_body, f_dist, tau_dist, params):
    # classical RK4 on the embedded matrix ODE R' = R [w]x, projected back onto SO(3)
    acc = lambda R_, w_: _accelerations(R_, w_, f_body, tau_body, f_dist, tau_dist, params)
    a1, b1 = acc(R, w)
    K1 = R @ skew(w)
    R2, v2, w2 = R + 0.5 * h * K1, v + 0.5 * h * a1, w + 0.5 * h * b1
    a2, b2 = acc(R2, w2)
    K2 = R2 @ skew(w2)
    R3, v3, w3 = R + 0.5 * h * K2, v + 0.5 * h * a2, w + 0.5 * h * b2
    a3, b3 = acc(R3, w3)
    K3 = R3 @ skew(w3)
    R4, v4, w4 = R + h * K3, v + h * a3, w + h * b3
    a4, b4 = acc(R4, w4)
    K4 = R4 @ skew(w4)
    p_new = p + h / 6.0 * (v + 2 * v2 + 2 * v3 + v4)
    v_new = v + h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4)
    w_new = w + h / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4)
    R_new = orthonormalize(R + h / 6.0 * (K1 + 2 * K2 + 2 * K3 + K4))
    return p_new, v_new, R_new, w_new


def _euler(p, v, R, w, h, f_body, tau_body, f_dist, tau_dist, params):
    a, b = _accelerations(R, w, f_body, tau_body, f_dist, tau_dist, params)
    return p + h * v, v + h * a, orthonormalize(R @ exp_so3(w, h)), w + h * b


def step(
    state: RigidBodyState,
    u,
    tilt: TiltState,
    params: VehicleParams = VehicleParams(),
    config: SimConfig = SimConfig(),
    t: float = 0.0,
) -> RigidBodyState:
    """Advance one control period. Thrusts are clamped to the input box first."""
    u, _ = clamp_thrust(u, params)
    f_body, tau_body = body_wrench(u, tilt, params)
    f_dist, tau_dist = config.disturbance_at(t)
    integrate = _rk4 if config.integrator == "rk4" else _euler
    h = config.dt / config.substeps
    p, v, R, w = state.p, state.v, state.R, state.omega
    for _ in range(config.substeps):
        p, v, R, w = integrate(p, v, R, w, h, f_body, tau_body, f_dist, tau_dist, params)
    new = RigidBodyState(p, R, v, w)
    if not new.is_finite() or max(np.max(np.abs(p)), np.max(np.abs(v)), np.max(np.abs(w))) > DIVERGENCE_LIMIT:
        raise SimulationDiverged(t + config.dt, new, f"state exceeded {DIVERGENCE_LIMIT:g} at t={t + config.dt:.4f}s")
    return new


def hover_thrust(params: VehicleParams = VehicleParams(), alpha: float = 0.0) -> np.ndarray:
    """Equal thrusts holding the level platform at rest for synchronized tilt ``alpha``."""
    return np.full(6, params.weight / (6.0 * np.cos(alpha)))


def mechanical_energy(state: RigidBodyState, params: VehicleParams = VehicleParams()) -> float:
    J = np.asarray(params.inertia)
    return float(
        0.5 * params.mass * state.v @ state.v
        + 0.5 * np.sum(J * state.omega**2)
        + params.mass * params.gravity * state.p[2]
    )
