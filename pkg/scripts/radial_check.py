"""Front-tracked disc against the radial oracle and the closed-form critical radius."""

import argparse

from advflow.geometry2d import Curve2D, RadialModel, evolve_curve, hausdorff_to_circle, radial_oracle


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--eps-max", type=float, default=0.05)
    ap.add_argument("--step", type=float, default=1e-3)
    ap.add_argument("--vertices", type=int, default=256)
    args = ap.parse_args()

    model = RadialModel()
    traj = evolve_curve(model, Curve2D.circle(0.5, args.vertices), args.eps_max, args.step)
    oracle = radial_oracle(2, 0.5, args.eps_max, 1e-4)
    print("eps       r_oracle      r_closed      hausdorff")
    for s in traj.snapshots[:: max(len(traj.snapshots) // 10, 1)]:
        r = float(oracle(s.eps))
        print(f"{s.eps:<9.4f} {r:.10f}  {model.critical_radius(s.eps):.10f}  {hausdorff_to_circle(s.curve, r):.3e}")


if __name__ == "__main__":
    main()
