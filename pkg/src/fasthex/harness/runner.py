"""Closed-loop execution of a scenario."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..controller import (
    ControllerGains,
    ControllerSettings,
    ControllerState,
    Regularization,
    SaturationModel,
    control_step,
    default_saturation_model,
)
from ..drivetrain import DrivetrainParams, TiltState, servo_step
from ..dynamics import RigidBodyState, SimConfig, SimulationDiverged, step
from ..geometry import euler_zyx, exp_so3, from_euler_zyx
from ..vehicle import VehicleParams
from .metrics import LOG_COLUMNS, Metrics, compute_metrics
from .scenario import Scenario, make_trajectory, parse_angle


class ScenarioDiverged(RuntimeError):
    def __init__(self, name: str, cause: SimulationDiverged, log: dict):
        self.log = log
        self.cause = cause
        super().__init__(f"{name}: {cause}")


@dataclass
class RunConfig:
    params: VehicleParams = field(default_factory=VehicleParams)
    gains: ControllerGains = field(default_factory=ControllerGains)
    sat: SaturationModel | None = None  # calibrated on demand
    reg: Regularization = field(default_factory=Regularization)
    settings: ControllerSettings = field(default_factory=ControllerSettings)
    drivetrain: DrivetrainParams = field(default_factory=DrivetrainParams)
    sim: SimConfig = field(default_factory=SimConfig)
    seed: int | None = None


def initial_state(scenario: Scenario, traj) -> RigidBodyState:
    spec = scenario.initial_state
    if spec == "reference":
        ref = traj(0.0)
        return RigidBodyState(ref.p, ref.R, ref.v, np.zeros(3))
    if isinstance(spec, dict):
        rpy = [parse_angle(a) for a in spec.get("attitude_rpy", (0, 0, 0))]
        return RigidBodyState(
            spec.get("p", np.zeros(3)), from_euler_zyx(*rpy), spec.get("v", np.zeros(3)), spec.get("omega", np.zeros(3))
        )
    raise ValueError(f"unsupported initial_state {spec!r}")


def _measure(state: RigidBodyState, noise: dict, rng) -> RigidBodyState:
    if not noise:
        return state
    n = lambda key: rng.normal(0.0, float(noise.get(key, 0.0)), 3)
    return RigidBodyState(
        state.p + n("position"),
        state.R @ exp_so3(n("attitude")),
        state.v + n("velocity"),
        state.omega + n("rate"),
    )


def run_scenario(scenario: Scenario, cfg: RunConfig | None = None) -> tuple[dict, Metrics]:
    """Run closed loop to the scenario's end; returns (columnar log, metrics).

    Raises :class:`ScenarioDiverged` carrying the partial log if the state blows up.
    """
    cfg = cfg or RunConfig()
    params = cfg.params
    sat = cfg.sat or default_saturation_model(params)
    dt = cfg.sim.dt
    traj = make_trajectory(scenario.trajectory)
    schedule = scenario.schedule
    rng = np.random.default_rng(cfg.seed)
    sim = replace(cfg.sim, disturbances=tuple(cfg.sim.disturbances) + tuple(scenario.disturbances))

    state = initial_state(scenario, traj)
    tilt = TiltState.at(min(max(schedule(0.0), 0.0), params.alpha_max), cfg.drivetrain)
    ctl = ControllerState()
    rows = []
    n_steps = int(round(scenario.duration / dt))
    try:
        for k in range(n_steps + 1):
            t = k * dt
            ref = traj(t)
            out = control_step(
                _measure(state, scenario.noise, rng), ref, tilt.alpha_actual, ctl,
                cfg.gains, params, sat, dt, cfg.reg, cfg.settings,
            )
            ctl = out.ctl
            w = np.sqrt(out.u / params.c_f)
            rows.append(
                [t, *state.p, *state.v, *euler_zyx(state.R), *state.omega, *ref.p, *ref.a,
                 *euler_zyx(ref.R), *euler_zyx(out.R_d), *out.e_p, *out.e_R, out.r_xy, out.theta,
                 *out.u, *w, tilt.alpha_command, tilt.alpha_actual, *tilt.angles,
                 float(out.clamp_mask.any()), float(out.lateral_saturated)]
            )
            if k == n_steps:
                break
            state = step(state, out.u, tilt, params, sim, t)
            tilt = servo_step(tilt, schedule(t), dt, params, cfg.drivetrain)
    except SimulationDiverged as exc:
        raise ScenarioDiverged(scenario.name, exc, _columns(rows)) from exc
    log = _columns(rows)
    return log, compute_metrics(log, scenario.blanking, sat.dead_zone)


def _columns(rows) -> dict:
    data = np.array(rows, dtype=float).reshape(len(rows), len(LOG_COLUMNS))
    return {name: data[:, j] for j, name in enumerate(LOG_COLUMNS)}
