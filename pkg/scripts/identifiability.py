"""Singular values of the stacked cable-length Jacobian.

Shows which deviation directions the measurements cannot see. Near-zero
singular values bound how well any method can recover individual parameters,
even from noise-free data.

    python scripts/identifiability.py --n 96
"""

import argparse

import numpy as np

from cablecal.error_model import distance_jacobians
from cablecal.kinematics import LENGTH_MASK, PARAM_NAMES, default_robot, deviation_to_params
from cablecal.simulate import DeviationSpec, inject_deviation, sample_joint_configs


def report(label, params, qs, p0):
    rows, _ = distance_jacobians(params, qs, p0)
    # scale angle columns to mm at a 300 mm lever so the spectrum is unit-comparable
    scale = np.where(LENGTH_MASK, 1.0, 300.0)
    _, s, vt = np.linalg.svd(rows / scale, full_matrices=False)
    print(f"== {label}: singular values (mm per mm-equivalent)")
    print("  " + " ".join(f"{x:.2e}" for x in s))
    for k in np.flatnonzero(s < 2e-3 * s[0])[::-1]:
        v = vt[k]
        top = np.argsort(-np.abs(v))[:3]
        mix = ", ".join(f"{v[j]:+.2f} {PARAM_NAMES[j]}" for j in top)
        print(f"  weak direction s={s[k]:.2e}: {mix}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=96)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    robot = default_robot()
    qs = sample_joint_configs(args.n, robot.table, args.seed)
    base = robot.table.as_array()
    report("nominal geometry", base, qs, robot.p0)
    delta = inject_deviation(DeviationSpec(seed=args.seed))
    report("perturbed geometry", base + deviation_to_params(delta), qs, robot.p0)


if __name__ == "__main__":
    main()
