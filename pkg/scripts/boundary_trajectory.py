"""Decision boundaries a(eps), b(eps) of the two-Gaussian model and the densities.

Writes ``boundary_trajectory.csv`` (eps, a, b, robust risk of the evolved set and
of the Bayes set) and ``class_densities.csv`` (x, w0 rho0, w1 rho1).
"""

import argparse
from pathlib import Path

import numpy as np

from advflow.classifier1d import bayes_set, robust_risk
from advflow.density import two_gaussian_model
from advflow.evolution1d import evolve


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--eps-max", type=float, default=0.5)
    ap.add_argument("--step", type=float, default=1e-3)
    ap.add_argument("--out", type=Path, default=Path("results"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    model = two_gaussian_model()
    bayes = bayes_set(model)
    traj = evolve(model, bayes, args.eps_max, args.step)
    a = traj.positions(0, "left")
    b = traj.positions(0, "right")
    every = max(len(traj.snapshots) // 50, 1)
    with open(args.out / "boundary_trajectory.csv", "w") as fh:
        fh.write("eps,a,b,risk_evolved,risk_bayes\n")
        for k in range(0, len(traj.snapshots), every):
            s = traj.snapshots[k]
            fh.write(
                f"{s.eps!r},{a[k]!r},{b[k]!r},{robust_risk(model, s.as_set(), s.eps)!r},"
                f"{robust_risk(model, bayes, s.eps)!r}\n"
            )
    xs = np.linspace(-6, 8, 701)
    np.savetxt(
        args.out / "class_densities.csv",
        np.column_stack([xs, model.joint0(xs), model.joint1(xs)]),
        delimiter=",", header="x,w0rho0,w1rho1", comments="",
    )
    print(f"a: {a[0]:.6f} -> {a[-1]:.6f}, b: {b[0]:.6f} -> {b[-1]:.6f} over {len(a)} steps")


if __name__ == "__main__":
    main()
