"""Tracking statistics from a run log."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..geometry import wrap_angle

# Fixed column order of the per-step CSV log.
LOG_COLUMNS = (
    ["t"]
    + ["p_x", "p_y", "p_z", "v_x", "v_y", "v_z"]
    + ["roll", "pitch", "yaw", "omega_x", "omega_y", "omega_z"]
    + ["pr_x", "pr_y", "pr_z", "ar_x", "ar_y", "ar_z"]
    + ["roll_r", "pitch_r", "yaw_r", "roll_d", "pitch_d", "yaw_d"]
    + ["ep_x", "ep_y", "ep_z", "eR_x", "eR_y", "eR_z"]
    + ["r_xy", "theta"]
    + [f"u{i}" for i in range(1, 7)]
    + [f"w{i}" for i in range(1, 7)]
    + ["alpha_cmd", "alpha_act"]
    + [f"alpha_{i}" for i in range(1, 7)]
    + ["thrust_clamped", "lateral_saturated"]
)


def write_log(log: dict, path: str | Path) -> None:
    cols = [np.asarray(log[c]) for c in LOG_COLUMNS]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(LOG_COLUMNS)
        for row in zip(*cols):
            w.writerow([repr(float(x)) for x in row])


def read_log(path: str | Path) -> dict:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array(body, dtype=float).reshape(len(body), len(header))
    return {name: data[:, j] for j, name in enumerate(header)}


@dataclass
class Metrics:
    mean_position_error: float  # m
    mean_attitude_error: tuple  # rad (roll, pitch, yaw), actual vs desired
    mean_reference_attitude_error: tuple  # rad, actual vs reference
    udt: dict = field(default_factory=dict)
    mdt: dict = field(default_factory=dict)
    clamp_events: int = 0
    lateral_saturation_events: int = 0
    max_alpha_spread: float = 0.0  # rad
    n_samples: int = 0
    n_blanked: int = 0
    n_udt: int = 0
    n_mdt: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def _stats(ep, att, att_ref, mask) -> dict:
    if not np.any(mask):
        nan = float("nan")
        return {"mean_position_error": nan, "mean_attitude_error": (nan,) * 3, "mean_reference_attitude_error": (nan,) * 3}
    return {
        "mean_position_error": float(np.mean(ep[mask])),
        "mean_attitude_error": tuple(float(x) for x in np.mean(att[mask], axis=0)),
        "mean_reference_attitude_error": tuple(float(x) for x in np.mean(att_ref[mask], axis=0)),
    }


def blanking_mask(t, alpha, dead_zone: float, window: float) -> np.ndarray:
    """Samples to ignore around each configuration change.

    A change is the tilt crossing the dead zone. The whole tilt motion that
    contains the crossing is blanked, plus ``window`` seconds after it ends.
    """
    t = np.asarray(t)
    alpha = np.asarray(alpha)
    blank = np.zeros(len(t), dtype=bool)
    if len(t) < 2:
        return blank
    mode = alpha >= dead_zone
    moving = np.r_[False, np.diff(alpha) != 0.0]
    for k in np.nonzero(mode[1:] != mode[:-1])[0] + 1:
        start = k
        while start > 0 and moving[start - 1]:
            start -= 1
        end = k
        while end + 1 < len(t) and moving[end + 1]:
            end += 1
        blank |= (t >= t[max(start - 1, 0)]) & (t <= t[end] + window)
    return blank


def compute_metrics(log: dict, blanking: float = 2.0, dead_zone: float = math.radians(2.0)) -> Metrics:
    t = np.asarray(log["t"])
    if len(t) == 0:
        raise ValueError("empty log")
    ep = np.linalg.norm(np.column_stack([log["ep_x"], log["ep_y"], log["ep_z"]]), axis=1)
    eul = np.column_stack([log["roll"], log["pitch"], log["yaw"]])
    eul_d = np.column_stack([log["roll_d"], log["pitch_d"], log["yaw_d"]])
    eul_r = np.column_stack([log["roll_r"], log["pitch_r"], log["yaw_r"]])
    att = np.abs(wrap_angle(eul - eul_d))
    att_ref = np.abs(wrap_angle(eul - eul_r))
    alpha = np.asarray(log["alpha_act"])
    blank = blanking_mask(t, alpha, dead_zone, blanking)
    keep = ~blank
    udt = keep & (alpha < dead_zone)
    mdt = keep & (alpha >= dead_zone)
    props = np.column_stack([log[f"alpha_{i}"] for i in range(1, 7)])
    overall = _stats(ep, att, att_ref, keep)
    return Metrics(
        mean_position_error=overall["mean_position_error"],
        mean_attitude_error=overall["mean_attitude_error"],
        mean_reference_attitude_error=overall["mean_reference_attitude_error"],
        udt=_stats(ep, att, att_ref, udt),
        mdt=_stats(ep, att, att_ref, mdt),
        clamp_events=int(np.sum(np.asarray(log["thrust_clamped"]) > 0)),
        lateral_saturation_events=int(np.sum(np.asarray(log["lateral_saturated"]) > 0)),
        max_alpha_spread=float(np.max(np.abs(np.abs(props) - alpha[:, None]))),
        n_samples=len(t),
        n_blanked=int(blank.sum()),
        n_udt=int(udt.sum()),
        n_mdt=int(mdt.sum()),
    )
