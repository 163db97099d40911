"""Command line entry point: ``fasthex {run,analyze,calibrate,replay-metrics}``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis, config
from .controller import ControllerGains, Regularization, SaturationModel, calibrate_lateral_bound, calibrate_regularization
from .harness import BUILTIN, RunConfig, Scenario, ScenarioDiverged, compute_metrics, read_log, run_scenario, write_log
from .vehicle import VehicleParams

log = logging.getLogger("fasthex")

EXIT_DIVERGED = 3
EXIT_INFEASIBLE = 4


def _load_scenario(ref: str) -> Scenario:
    if ref in BUILTIN:
        return BUILTIN[ref]()
    path = Path(ref)
    if not path.exists():
        raise ValueError(f"no scenario file or built-in named {ref!r} (built-ins: {', '.join(BUILTIN)})")
    return Scenario.from_file(path)


def _run_config(args) -> RunConfig:
    params = VehicleParams.from_file(args.params)
    return RunConfig(
        params=params,
        gains=ControllerGains.from_file(args.gains),
        sat=SaturationModel.from_file(args.saturation) if args.saturation else None,
        reg=Regularization.from_file(args.regularization) if args.regularization else Regularization(),
        seed=args.seed,
    )


def _write_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, default=float, allow_nan=True))


def _write_run_log(data: dict, stem: Path, fmt: str) -> Path:
    path = stem.with_name(f"{stem.name}.{fmt}")
    if fmt == "json":
        _write_json({k: np.asarray(v).tolist() for k, v in data.items()}, path)
    else:
        write_log(data, path)
    return path


def _run_one(job) -> tuple[str, int, dict | None, str]:
    ref, cfg, out_dir, fmt = job
    scenario = _load_scenario(ref)
    stem = out_dir / f"{scenario.name}.log"
    try:
        data, metrics = run_scenario(scenario, cfg)
    except ScenarioDiverged as exc:
        path = _write_run_log(exc.log, stem, fmt) if len(exc.log["t"]) else None
        return scenario.name, EXIT_DIVERGED, None, f"{exc} (partial log: {path})"
    _write_run_log(data, stem, fmt)
    _write_json(metrics.to_dict(), out_dir / f"{scenario.name}.metrics.json")
    return scenario.name, 0, metrics.to_dict(), ""


def cmd_run(args) -> int:
    cfg = _run_config(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for ref in args.scenario:
        _load_scenario(ref)  # fail fast on bad specs
    jobs = [(ref, cfg, out_dir, args.format) for ref in args.scenario]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    code = 0
    for name, status, metrics, msg in results:
        if status:
            log.error("%s", msg)
            code = max(code, status)
            continue
        print(f"{name}: mean |e_p| = {1e3 * metrics['mean_position_error']:.3f} mm, "
              f"mean attitude error (deg) = {np.degrees(metrics['mean_attitude_error']).round(4).tolist()}, "
              f"clamp events = {metrics['clamp_events']}")
    return code


def _parse_range(text: str) -> np.ndarray:
    """``start:stop:step`` in degrees, inclusive of ``stop``."""
    try:
        start, stop, step = (float(x) for x in text.split(":"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError("expected start:stop:step in degrees") from exc
    if step <= 0 or stop < start:
        raise argparse.ArgumentTypeError("need step > 0 and stop >= start")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return np.radians(start + step * np.arange(n))


def cmd_analyze(args) -> int:
    params = VehicleParams.from_file(args.params)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    alphas = args.alphas
    ext = args.format
    if args.what == "efficiency":
        rows = [(math.degrees(a), eta) for a, eta in analysis.hover_efficiency_curve(alphas, params)]
        analysis.export_rows(rows, ["alpha_deg", "efficiency"], out_dir / f"efficiency.{ext}", ext)
    elif args.what == "rank":
        rows = [(math.degrees(a), r, s) for a, r, s in analysis.rank_sweep(alphas, params)]
        analysis.export_rows(rows, ["alpha_deg", "rank", "sigma_ratio"], out_dir / f"rank.{ext}", ext)
        for root, rank in analysis.locate_rank_drops(alphas, params):
            print(f"singular at alpha = {math.degrees(root):.6f} deg (rank {rank})")
    else:
        build = {
            "force-set": analysis.attainable_force_set,
            "torque-set": analysis.attainable_torque_set,
            "lateral-set": analysis.lateral_force_set,
        }[args.what]
        for a in alphas:
            poly = build(float(a), params)
            analysis.export_polytope(poly, out_dir / f"{args.what}_{math.degrees(a):06.2f}deg.{ext}", ext)
            print(f"{args.what} alpha = {math.degrees(a):6.2f} deg: dim {poly.dim}, volume {poly.volume:.6g}")
    print(f"wrote results to {out_dir}")
    return 0


def cmd_calibrate(args) -> int:
    params = VehicleParams.from_file(args.params)
    sat = calibrate_lateral_bound(params, scale=args.scale, dead_zone=math.radians(args.dead_zone))
    reg = calibrate_regularization(params, k2=args.k2)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config.save_dataclass(sat, out_dir / "saturation.cfg")
    config.save_dataclass(reg, out_dir / "regularization.cfg")
    a, b, c = sat.coeffs
    print(f"r_xy(alpha) = {sat.scale} * ({a:.6g} a^2 + {b:.6g} a + {c:.6g}) N, relative rms {sat.fit_rms:.3%}")
    print(f"Tikhonov k1 = {reg.k1:.6g}, k2 = {reg.k2:g}")
    return 0


def cmd_replay(args) -> int:
    path = Path(args.log)
    if path.suffix == ".json":
        data = {k: np.asarray(v, dtype=float) for k, v in json.loads(path.read_text()).items()}
    else:
        data = read_log(path)
    metrics = compute_metrics(data, args.blanking, math.radians(args.dead_zone)).to_dict()
    text = json.dumps(metrics, indent=2, default=float)
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{path.stem}.metrics.json").write_text(text)
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fasthex", description="Synchronized-tilt hexarotor simulator and analysis tools.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--params", help="vehicle parameter file (key = value)")
    common.add_argument("--out-dir", default="out")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("run", parents=[common], help="run scenarios closed loop")
    p.add_argument("--scenario", action="append", required=True,
                   help=f"YAML scenario file or built-in name ({', '.join(BUILTIN)}); repeatable")
    p.add_argument("--gains", help="controller gain file")
    p.add_argument("--saturation", help="lateral-bound model file from 'calibrate'")
    p.add_argument("--regularization", help="Tikhonov parameter file from 'calibrate'")
    p.add_argument("--seed", type=int, default=None, help="seed for measurement noise")
    p.add_argument("--jobs", type=int, default=1, help="scenarios to run in parallel")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("analyze", parents=[common], help="tilt-angle sweeps")
    p.add_argument("what", choices=("efficiency", "rank", "force-set", "torque-set", "lateral-set"))
    p.add_argument("--alphas", type=_parse_range, default=_parse_range("0:35:5"),
                   help="degrees as start:stop:step (default 0:35:5)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("calibrate", parents=[common], help="fit the lateral-force bound and Tikhonov weight")
    p.add_argument("--scale", type=float, default=0.9)
    p.add_argument("--dead-zone", type=float, default=2.0, help="degrees")
    p.add_argument("--k2", type=float, default=0.02)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("replay-metrics", help="recompute metrics from a saved log")
    p.add_argument("log")
    p.add_argument("--blanking", type=float, default=2.0, help="seconds")
    p.add_argument("--dead-zone", type=float, default=2.0, help="degrees")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, KeyError, TypeError, AssertionError, FileNotFoundError, analysis.EmptyFeasibleSet) as exc:
        log.error("invalid configuration: %s", exc)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
