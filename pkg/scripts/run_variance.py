"""Simulated, estimated and approximated variances of the HT totals.

    python3 scripts/run_variance.py --reps 1000 --nh 2
"""

import argparse

from stratbal.harness import simulate
from stratbal.synth import GeneratorSpec, generate


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--strata", type=int, default=675)
    parser.add_argument("--nh", type=float, default=2.0)
    parser.add_argument("--rho", type=float, default=0.7)
    parser.add_argument("--reps", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--method", default="proposed")
    args = parser.parse_args()

    frame = generate(GeneratorSpec(H=args.strata, nh=args.nh, rho=args.rho), args.seed)
    report = simulate(frame, args.method, args.reps, args.seed).report
    print(f"{args.method}, N={frame.N}, H={frame.H}, m={args.reps}")
    print(f"{'var':>4} {'v_sim':>14} {'var_hat':>14} {'var_app':>14} {'v_sim/var_app':>14}")
    for row in report.rows():
        print(
            f"{row['variable']:>4} {row['v_sim']:>14.1f} {row['var_hat']:>14.1f} {row['var_app']:>14.1f}"
            f" {row['v_sim'] / row['var_app']:>14.3f}"
        )


if __name__ == "__main__":
    main()
