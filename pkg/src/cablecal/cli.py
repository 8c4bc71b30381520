"""Command-line front end: ``cablecal {simulate,calibrate,compare,fk}``."""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .beetle import write_trace
from .ekf import write_ekf_trace
from .errors import CalibrationError
from .error_model import read_dataset, write_dataset
from .kinematics import (
    RobotConfig, apply_deviation, cable_length, default_robot, forward_kinematics, load_robot, save_robot,
)
from .pipeline import (
    CLI_NAMES, EKF, PipelineConfig, Scenario, calibrate, compare, method_from_name,
)
from .simulate import DeviationSpec, NoiseModel, inject_deviation, sample_joint_configs, simulate_measurements, \
    write_truth


class UsageError(Exception):
    pass


def _g(x):
    return f"{x:.9g}"


def _robot(path) -> RobotConfig:
    return default_robot() if path is None else load_robot(path)


def _caps(text):
    try:
        a, d, alpha, theta = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected four comma-separated numbers A_MM,D_MM,ALPHA_RAD,THETA_RAD")
    return a, d, alpha, theta


def _write_manifest(path, command, args, outputs, seeds, timings=None):
    doc = {
        "command": command,
        "args": {k: v for k, v in sorted(vars(args).items()) if k != "func"},
        "seeds": seeds,
        "outputs": [str(p) for p in outputs],
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    if timings:
        doc["timings_ms"] = timings
    Path(path).write_text(json.dumps(doc, indent=2, default=str) + "\n")


def _pipeline_config(args):
    cfg = PipelineConfig()
    if args.split is not None:
        cfg.train_fraction = args.split
    if args.max_iters is not None:
        cfg.max_iters = args.max_iters
    return cfg


# --- commands ---------------------------------------------------------------------------

def cmd_simulate(args):
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    robot = _robot(args.robot)
    noise = NoiseModel.parse(args.noise, seed=args.seed + 2)
    spec = DeviationSpec(*args.caps, seed=args.seed + 1)
    qs = sample_joint_configs(args.n, robot.table, seed=args.seed)
    sim = simulate_measurements(robot.table, inject_deviation(spec), qs, robot.p0, noise)
    out = Path(args.out)
    truth = out.with_name(out.name + ".truth.json")
    write_dataset(out, sim.data, comments=[f"simulated by cablecal {__version__}; seed {args.seed}; "
                                           f"noise {args.noise}"])
    write_truth(truth, sim, spec)
    _write_manifest(out.with_name(out.name + ".manifest.json"), "simulate", args, [out, truth],
                    {"configs": args.seed, "deviation": args.seed + 1, "noise": args.seed + 2})
    print(f"wrote {len(sim.data)} samples to {out}")


def cmd_calibrate(args):
    method = method_from_name(args.method)
    robot = _robot(args.robot)
    data = read_dataset(args.data, default_p0=robot.p0)
    cfg = _pipeline_config(args)
    result = calibrate(method, robot.table, data, cfg, seed=args.seed)

    prefix = Path(args.out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    report = prefix.with_name(prefix.name + ".report.json")
    table = prefix.with_name(prefix.name + ".robot.json")
    outputs = [report, table]
    doc = result.to_dict()
    doc["config"] = cfg.to_dict()
    report.write_text(json.dumps(doc, indent=2) + "\n")
    calibrated = RobotConfig(apply_deviation(robot.table, result.delta_hat), robot.p0,
                             name=f"{robot.name} (calibrated, {method})", source=robot.source)
    save_robot(calibrated, table)
    if "search" in result.trace:
        path = prefix.with_name(prefix.name + ".trace.csv")
        write_trace(path, result.trace["search"])
        outputs.append(path)
    if "ekf" in result.trace:
        path = prefix.with_name(prefix.name + (".trace.csv" if method == EKF else ".ekf_trace.csv"))
        write_ekf_trace(path, result.trace["ekf"])
        outputs.append(path)
    _write_manifest(prefix.with_name(prefix.name + ".manifest.json"), "calibrate", args, outputs,
                    {"calibrate": args.seed}, {"calibrate": result.wall_ms})
    print(f"{'':<8}{'RMSE(mm)':>16}{'Std(mm)':>16}{'Max(mm)':>16}")
    for label, m in (("before", result.before), ("after", result.after)):
        print(f"{label:<8}{_g(m.rmse):>16}{_g(m.std):>16}{_g(m.max):>16}")


def _scenario(args):
    doc = {}
    base = Path.cwd()
    if args.scenario is not None:
        path = Path(args.scenario)
        if not path.is_file():
            raise CalibrationError(f"scenario file {path} not found")
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise CalibrationError(f"scenario file {path}: invalid JSON at line {exc.lineno}") from None
        base = path.parent
    robot_path = args.robot or (str(base / doc["robot"]) if doc.get("robot") else None)
    caps = doc.get("caps", {})
    spec = DeviationSpec(**{k: float(caps[k]) for k in ("a_mm", "d_mm", "alpha_rad", "theta_rad") if k in caps})
    if args.caps is not None:
        spec = DeviationSpec(*args.caps)
    n = args.n if args.n is not None else int(doc.get("n", 120))
    if n < 2:
        raise UsageError("--n must be >= 2 for a train/test split")
    noise = args.noise or doc.get("noise", "gaussian:0.1")
    NoiseModel.parse(noise)
    return Scenario(robot=_robot(robot_path), n=n, noise=noise, caps=spec), doc


def cmd_compare(args):
    methods = [method_from_name(m) for m in args.method.split(",") if m.strip()]
    scenario, doc = _scenario(args)
    cfg = _pipeline_config(args)
    if args.split is None and "split" in doc:
        cfg.train_fraction = float(doc["split"])
    if args.max_iters is None and "max_iters" in doc:
        cfg.max_iters = int(doc["max_iters"])
    trials = args.trials if args.trials is not None else int(doc.get("trials", 20))
    if trials < 1:
        raise UsageError("--trials must be >= 1")
    comp = compare(methods, scenario, trials, args.seed, cfg)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = [out / "report.json", out / "table.txt"]
    report = comp.to_dict()
    report["config"] = cfg.to_dict()
    (out / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    (out / "table.txt").write_text(comp.table())
    first = comp.trials[0]["results"]
    for m in methods:
        name = next(k for k, v in CLI_NAMES.items() if v == m)
        path = out / f"trace_{name}.csv"
        trace = first[m].trace
        if "search" in trace:
            write_trace(path, trace["search"])
        else:
            write_ekf_trace(path, trace["ekf"])
        outputs.append(path)
    timings = {m: [t["results"][m].wall_ms for t in comp.trials] for m in methods}
    _write_manifest(out / "manifest.json", "compare", args, outputs, {"compare": args.seed}, timings)
    sys.stdout.write(comp.table())


def cmd_fk(args):
    if len(args.q) != 6:
        raise UsageError(f"fk needs exactly 6 joint angles, got {len(args.q)}")
    robot = _robot(args.robot)
    pose = forward_kinematics(robot.table, np.array(args.q))
    print("position_mm: " + " ".join(_g(x) for x in pose.p))
    print("rotation:")
    for row in pose.r:
        print("  " + " ".join(_g(x) for x in row))
    print("cable_length_mm: " + _g(cable_length(pose.p, robot.p0)))


# --- parser ---------------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="cablecal", description="DH calibration from drawstring cable lengths")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a noisy cable-length dataset")
    p.add_argument("--robot", help="robot config JSON (default: packaged IRB 120)")
    p.add_argument("--n", type=int, default=120)
    p.add_argument("--noise", default="gaussian:0.1", help="none | gaussian:S | uniform:H | mixture:S,P,K")
    p.add_argument("--caps", type=_caps, default=(1.0, 1.0, 0.01, 0.01), help="A_MM,D_MM,ALPHA_RAD,THETA_RAD")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", help="identify DH deviations from a dataset")
    p.add_argument("--method", required=True, choices=sorted(CLI_NAMES))
    p.add_argument("--robot")
    p.add_argument("--data", required=True)
    p.add_argument("--split", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--out", required=True, help="output prefix")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("compare", help="paired comparison of methods over simulated trials")
    p.add_argument("--method", default="ekf,bas,qibas,ekf-qibas", help="comma-separated method names")
    p.add_argument("--scenario", help="scenario JSON: robot, n, noise, caps, split, max_iters, trials")
    p.add_argument("--robot")
    p.add_argument("--n", type=int)
    p.add_argument("--noise")
    p.add_argument("--caps", type=_caps)
    p.add_argument("--split", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("fk", help="print the end-effector pose and cable length")
    p.add_argument("--robot")
    p.add_argument("q", nargs="*", type=float, help="six joint angles (rad)")
    p.set_defaults(func=cmd_fk)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (CalibrationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
