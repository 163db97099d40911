"""Acceptance suite: one test per criterion, each bounded in runtime.

A PASS/FAIL line per criterion is printed in the terminal summary.
"""

import contextlib
import itertools
import math
import time
from collections import defaultdict
from functools import lru_cache

import numpy as np
import pytest

from fasthex.analysis import (
    attainable_force_set, attainable_torque_set, force_efficiency, hover_efficiency_curve, locate_rank_drops,
    rank_sweep, sample_slice, box_slice_vertices,
)
from fasthex.controller import Regularization, desired_orientation, wrench_map
from fasthex.drivetrain import DrivetrainParams, TiltState, max_divergence
from fasthex.dynamics import Disturbance, RigidBodyState, SimConfig, hover_thrust, step
from fasthex.geometry import E3, rot_x, rot_z
from fasthex.harness import run_scenario
from fasthex.harness.metrics import blanking_mask
from fasthex.harness.scenario import experiment_1, experiment_2a, experiment_2b
from fasthex.vehicle import VehicleParams, allocation_F, allocation_F1, allocation_F2, numerical_rank

DEG = math.pi / 180.0
P = VehicleParams()
REPORT = defaultdict(list)


@contextlib.contextmanager
def criterion(cid, title, budget):
    """Record the outcome of one criterion (or one part of it) and enforce its runtime."""
    rec = {"title": title, "ok": False, "detail": "", "runtime": 0.0}
    notes = []
    t0 = time.perf_counter()
    try:
        yield notes
        rec["runtime"] = time.perf_counter() - t0
        assert rec["runtime"] < budget, f"runtime {rec['runtime']:.2f} s exceeds {budget} s"
        rec["ok"] = True
    except AssertionError as exc:
        notes.append(f"FAILED: {str(exc).splitlines()[0]}")
        raise
    finally:
        rec["runtime"] = rec["runtime"] or time.perf_counter() - t0
        rec["detail"] = ", ".join(notes)
        REPORT[cid].append(rec)


def errors(log):
    return np.linalg.norm(np.column_stack([log["ep_x"], log["ep_y"], log["ep_z"]]), axis=1)


def spins(log):
    return np.column_stack([log[f"w{i}"] for i in range(1, 7)])


# closed-loop runs are shared by the criteria that inspect them
@lru_cache(maxsize=None)
def timed_run(kind, alpha):
    scenario = {"exp1": lambda: experiment_1(), "2a": lambda: experiment_2a(alpha), "2b": lambda: experiment_2b(alpha)}[kind]()
    t0 = time.perf_counter()
    log, metrics = run_scenario(scenario)
    return log, metrics, time.perf_counter() - t0


def test_c1_efficiency_identities():
    with criterion("C1", "force-efficiency identities", 1.0) as notes:
        rng = np.random.default_rng(1)
        for u in rng.uniform(P.f_min, P.f_max, (100, 6)):
            assert abs(force_efficiency(0.0, u, P) - 1.0) <= 1e-9
        for deg in (0, 10, 20, 30, 35):
            assert abs(force_efficiency(deg * DEG, np.full(6, 5.0), P) - math.cos(deg * DEG)) <= 1e-9
        eta35 = hover_efficiency_curve([35 * DEG], P)[0][1]
        assert round(eta35, 4) == 0.8192
        notes.append(f"eta(35 deg) = {eta35:.6f}")


def test_c2_rank_structure():
    with criterion("C2", "allocation rank structure", 5.0) as notes:
        assert numerical_rank(allocation_F(0.0, P)) == 4
        for deg in (5, 15, 30):
            assert numerical_rank(allocation_F(deg * DEG, P)) == 6
        grid = np.radians(np.round(np.arange(-400, -299) * 0.01, 2))
        drops = locate_rank_drops(grid, P)
        assert [rank for _, rank in drops] == [5]
        root = math.degrees(drops[0][0])
        assert abs(root - (-3.56)) < 0.01
        ratio = min(r for _, _, r in rank_sweep(grid, P))
        notes.append(f"rank 5 at {root:.4f} deg (grid sigma ratio min {ratio:.1e})")


def brute_force_wrench(alpha, u):
    w = np.zeros(6)
    for i in range(1, 7):
        psi = (i - 1) * math.pi / 3
        f = rot_z(psi) @ rot_x((-1) ** (i - 1) * alpha) @ (u[i - 1] * E3)
        pos = P.arm_length * (rot_z(psi) @ np.array([1.0, 0.0, 0.0]))
        w[:3] += f
        w[3:] += np.cross(pos, f) + (-1) ** i * P.c_tau * f
    return w


def test_c3_allocation_oracle():
    with criterion("C3", "allocation vs per-propeller sum", 5.0) as notes:
        rng = np.random.default_rng(3)
        worst = 0.0
        for _ in range(1000):
            alpha, u = rng.uniform(-40, 40) * DEG, rng.uniform(0, P.f_max, 6)
            ref = brute_force_wrench(alpha, u)
            worst = max(worst, np.linalg.norm(allocation_F(alpha, P) @ u - ref) / np.linalg.norm(ref))
        assert worst <= 1e-10
        notes.append(f"max rel err {worst:.1e}")


def grid_oracle(b3r, f, r_xy, n=10_000):
    fn = np.linalg.norm(f)
    theta_max = math.acos(np.clip(b3r @ f / fn, -1.0, 1.0))
    k = np.cross(b3r, f)
    k /= np.linalg.norm(k)
    th = np.linspace(0.0, theta_max, n)[:, None]
    b3 = b3r * np.cos(th) + np.cross(k, b3r) * np.sin(th) + k * (k @ b3r) * (1 - np.cos(th))
    ok = b3 @ f >= math.sqrt(max(fn**2 - r_xy**2, 0.0)) - 1e-12 * fn
    return (th[np.argmax(ok), 0] if ok.any() else theta_max), theta_max, theta_max / (n - 1)


def test_c4_bisection_contract():
    with criterion("C4", "bisection contract", 10.0) as notes:
        rng = np.random.default_rng(4)
        worst_cells, worst_res = 0.0, math.inf
        for _ in range(1000):
            R_r = np.linalg.qr(rng.normal(size=(3, 3)))[0]
            R_r[:, 2] = np.cross(R_r[:, 0], R_r[:, 1])
            f = rng.normal(size=3) * rng.uniform(1, 40) + [0, 0, rng.uniform(0, 30)]
            fn = np.linalg.norm(f)
            r_xy = rng.uniform(0, 1.2 * fn)
            R_d, theta = desired_orientation(R_r, f, r_xy, 20)
            ref, theta_max, cell = grid_oracle(R_r[:, 2], f, r_xy)
            eps = 2 * fn * math.sin(theta_max * 2.0**-20)
            residual = f @ R_d[:, 2] - math.sqrt(max(fn**2 - r_xy**2, 0.0))
            assert residual >= -eps - 1e-12 * fn
            assert 0.0 <= theta <= theta_max + 1e-12
            worst_res = min(worst_res, residual / max(eps, 1e-300))
            worst_cells = max(worst_cells, abs(theta - ref) / cell)
        assert worst_cells <= 2.0
        notes.append(f"max |theta - grid| = {worst_cells:.2f} cells, min residual/eps = {worst_res:.2f}")


def test_c5_tikhonov():
    with criterion("C5", "Tikhonov wrench map", 5.0) as notes:
        reg = Regularization()
        rng = np.random.default_rng(5)
        F30 = allocation_F(30 * DEG, P)
        worst = 0.0
        for u in rng.uniform(P.f_min, P.f_max, (1000, 6)):
            w = F30 @ u
            got, _ = wrench_map(w[:3], w[3:], 30 * DEG, reg, P)
            worst = max(worst, np.linalg.norm(F30 @ got - w) / np.linalg.norm(w))
        assert worst < 1e-3
        hover, _ = wrench_map([0, 0, P.weight], np.zeros(3), 0.0, reg, P)
        hover_err = np.max(np.abs(hover - P.weight / 6))
        assert hover_err <= 1e-6
        notes.append(f"residual {worst:.1e}, hover err {hover_err:.1e} N")


def continuity_jump(thrusts, delta=1e-4):
    reg = Regularization()
    F0 = allocation_F(0.0, P)
    jumps = []
    for u in thrusts:
        w = F0 @ u
        a, _ = wrench_map(w[:3], w[3:], 0.0, reg, P)
        b, _ = wrench_map(w[:3], w[3:], delta, reg, P)
        jumps.append(np.linalg.norm(b - a) / np.linalg.norm(a))
    return np.array(jumps)


@pytest.mark.xfail(strict=True, reason="yaw authority l sin(a) + c_tau cos(a) has relative slope l / c_tau = 16 per rad at a = 0")
def test_c5_continuity():
    with criterion("C5", "Tikhonov wrench map", 5.0) as notes:
        random_jump = continuity_jump(np.random.default_rng(55).uniform(P.f_min, P.f_max, (1000, 6))).max()
        corners = np.array(list(itertools.product((P.f_min, P.f_max), repeat=6)))
        corner_jump = continuity_jump(corners).max()
        linear = continuity_jump(corners, 1e-5).max() * 10
        notes.append(f"jump at 1e-4 rad: random {random_jump:.2e}, box corners {corner_jump:.2e} "
                     f"(10x the 1e-5 jump: {linear:.2e}, so continuous and linear)")
        assert max(random_jump, corner_jump) <= 1e-3, f"jump {corner_jump:.2e} > 1e-3"


def test_c6_cardan_drivetrain():
    with criterion("C6", "Cardan drivetrain spread", 1.0) as notes:
        params = DrivetrainParams(gear_ratio=0.05)
        spread = math.degrees(max_divergence(35 * DEG, params))
        assert 0.2 <= spread <= 3.0
        assert max_divergence(35 * DEG, DrivetrainParams(gear_ratio=0.05, bend_angle=0.0)) == 0.0
        notes.append(f"beta = {math.degrees(params.bend_angle):.0f} deg, max divergence at 35 deg = {spread:.4f} deg")


def test_c7_experiment_1():
    with criterion("C7", "experiment 1 tilt steps", 30.0) as notes:
        log, m, runtime = timed_run("exp1", None)
        notes.append(f"sim {runtime:.1f} s")
        assert runtime < 30.0
        dz = 2 * DEG
        keep = ~blanking_mask(log["t"], log["alpha_act"], dz, 2.0)
        ep = errors(log)
        att = np.abs(np.column_stack([log[f"{a}"] - log[f"{a}_d"] for a in ("roll", "pitch", "yaw")]))
        # steady state is judged by the per-configuration means over non-blanked samples
        for name, sel in (("UDT", keep & (log["alpha_act"] < dz)), ("MDT", keep & (log["alpha_act"] >= dz))):
            assert sel.sum() > 1000
            mean_ep, mean_att = ep[sel].mean(), np.degrees(att[sel].mean(axis=0))
            assert mean_ep < 1e-3, f"{name} mean |e_p| {mean_ep:.2e}"
            assert mean_att.max() < 0.05, f"{name} attitude error {mean_att.max():.3f} deg"
            notes.append(f"{name} mean |e_p| {1e3 * mean_ep:.3f} mm (max {1e3 * ep[sel].max():.2f}), "
                         f"mean att err {mean_att.max():.4f} deg (max {np.degrees(att[sel]).max():.4f})")
        w = spins(log)
        assert w.min() >= 16.0 and w.max() <= 102.0
        notes.append(f"w in [{w.min():.1f}, {w.max():.1f}] Hz (flight data for context: 8.7 mm mean)")


def test_c8_experiment_2b():
    with criterion("C8", "experiment 2b roll sinusoid", 30.0) as notes:
        log, m, rt_mdt = timed_run("2b", "30deg")
        roll_err = math.degrees(np.mean(np.abs(log["roll"] - log["roll_r"])))
        ep = errors(log).mean()
        assert roll_err < 0.5 and ep < 5e-3
        notes.append(f"30 deg: roll err {roll_err:.3f} deg, |e_p| {1e3 * ep:.3f} mm")
        log, m, rt_udt = timed_run("2b", "0deg")
        roll_d = math.degrees(np.max(np.abs(log["roll_d"])))
        ep = errors(log).mean()
        assert roll_d < 0.5 and ep < 5e-3
        notes.append(f"0 deg: desired roll amplitude {roll_d:.1e} deg, |e_p| {1e3 * ep:.3f} mm")
        assert rt_mdt + rt_udt < 30.0


def test_c9_experiment_2a():
    with criterion("C9", "experiment 2a translation sinusoid", 30.0) as notes:
        log, _, rt_udt = timed_run("2a", "0deg")
        pitch_amp = math.degrees(np.max(np.abs(log["pitch_d"])))
        assert pitch_amp > 5.0
        notes.append(f"0 deg: desired pitch amplitude {pitch_amp:.2f} deg")
        log, _, rt_mdt = timed_run("2a", "30deg")
        tilt = np.degrees(np.arccos(np.clip(np.cos(log["roll_d"]) * np.cos(log["pitch_d"]), -1, 1)))
        clamp = (log["thrust_clamped"] > 0) | (log["lateral_saturated"] > 0)
        assert np.all(tilt[~clamp] < 2.0)
        a = np.abs(log["ar_x"])
        if clamp.any():
            assert a[clamp].min() >= 0.5 * a.max(), "clamping away from acceleration peaks"
        notes.append(f"30 deg: max desired tilt {tilt.max():.2e} deg, clamp samples {int(clamp.sum())}")
        assert rt_udt + rt_mdt < 30.0


def test_c10_attainable_sets():
    with criterion("C10", "attainable-set properties", 60.0) as notes:
        seg = attainable_force_set(0.0, P)
        assert seg.dim == 1
        assert np.allclose(seg.vertices[:, :2], 0.0, atol=1e-12)
        rng = np.random.default_rng(10)
        n_total = 0
        cases = [(attainable_force_set, allocation_F2, allocation_F1, np.zeros(3), a) for a in (0, 10, 20, 30)]
        cases.append((attainable_torque_set, allocation_F1, allocation_F2, np.array([0, 0, P.weight]), 30))
        for build, cons, image, rhs, deg in cases:
            alpha = deg * DEG
            hull = build(alpha, P)
            U = sample_slice(cons(alpha, P), rhs, P.f_min, P.f_max, 100_000, rng=rng)
            assert np.all(hull.contains(U @ image(alpha, P).T, tol=1e-6))
            n_total += len(U)
        notes.append(f"alpha = 0 force set is a z-segment, {n_total} samples inside hulls")


@pytest.mark.xfail(strict=True, reason="the all-max-thrust apex height 6 f_max cos(alpha) shrinks with tilt")
def test_c10_force_set_containment():
    with criterion("C10", "attainable-set properties", 60.0) as notes:
        sets = {d: attainable_force_set(d * DEG, P) for d in (10, 20, 30)}
        notes.append("volumes " + " < ".join(f"{sets[d].volume:.0f}" for d in (10, 20, 30)))
        for lo, hi in ((10, 20), (20, 30)):
            inside = sets[hi].contains(sets[lo].vertices, tol=1e-6)
            out = sets[lo].vertices[~inside]
            assert inside.all(), f"{lo} deg set not inside {hi} deg set at {np.round(out, 2).tolist()}"


def test_c11_integrator_sanity():
    with criterion("C11", "integrator sanity", 5.0) as notes:
        cfg = SimConfig(dt=0.002, disturbances=(Disturbance(0.0, 2.0, force=(0.0, 0.0, -6 * P.f_min)),))
        u = np.full(6, P.f_min)
        p0, v0 = np.array([0.0, 0.0, 10.0]), np.array([0.3, -0.2, 1.0])
        s = RigidBodyState(p0, np.eye(3), v0)
        for k in range(500):
            s = step(s, u, TiltState(), P, cfg, k * cfg.dt)
        fall = np.max(np.abs(s.p - (p0 + v0 - 0.5 * P.gravity * E3)))
        assert fall < 1e-6
        s = RigidBodyState([0, 0, 1.0])
        tilt = TiltState.at(0.0)
        u = hover_thrust(P)
        for k in range(10_000):
            s = step(s, u, tilt, P, SimConfig(), k * 0.002)
        drift = np.max(np.abs(s.p - [0, 0, 1.0]))
        assert drift < 1e-9
        notes.append(f"free-fall err {fall:.1e} m, hover drift {drift:.1e} m")
