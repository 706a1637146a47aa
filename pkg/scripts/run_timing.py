"""Mean sampling time per method on the four benchmark populations.

Coarse (5 strata) and fine (one stratum per three units) stratifications,
each with an integer and a non-integer expected stratum sample size.

    python3 scripts/run_timing.py --strata 500 --runs 20
"""

import argparse

from stratbal.harness import bench, bench_configs
from stratbal.synth import GeneratorSpec


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--strata", type=int, default=675)
    parser.add_argument("--q", type=int, default=3)
    parser.add_argument("--runs", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--methods", default="proposed,hasler,chauvet")
    args = parser.parse_args()

    spec = GeneratorSpec(H=args.strata, q=args.q, p=1)
    configs = bench_configs(spec, args.seed)
    rows = bench(configs, args.methods.split(","), args.runs, args.seed)
    print(f"{'config':>8} {'n_h':>6} {'method':>9} {'mean s':>10} {'sd s':>10}")
    for row in rows:
        print(f"{row['config']:>8} {row['nh']:>6g} {row['method']:>9} {row['mean_s']:>10.4f} {row['sd_s']:>10.4f}")


if __name__ == "__main__":
    main()
