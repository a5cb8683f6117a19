"""Run one of the two comparison scenarios and write the RMSE table.

    python scripts/run_scenario.py a --runs 20 --out results/scenario_a.csv
    python scripts/run_scenario.py b --convention table-numeral
"""
import argparse
from pathlib import Path

import numpy as np

from fpf_attitude import bench, sim


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("scenario", choices=["a", "b"])
    parser.add_argument("--runs", type=int, default=20)
    parser.add_argument("--particles", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--convention", choices=sim.NOISE_CONVENTIONS, default="degree-label")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out", type=Path)
    args = parser.parse_args()

    config = bench.ExperimentConfig(
        scenario=sim.ScenarioConfig.preset(args.scenario, args.convention),
        filters=bench.default_filters(args.scenario),
        particles=args.particles,
        runs=args.runs,
        seed=args.seed,
        workers=args.workers,
    )
    result = bench.run_experiment(config)
    print(result.summary())
    for fid, series in result.rmse.items():
        t30 = bench.first_crossing(result.times, np.rad2deg(series), 30.0)
        print(f"{fid:<8} first below 30 deg at t = {t30:.2f} s")
    out = args.out or Path("results") / f"scenario_{args.scenario}_{args.convention}.csv"
    bench.write_csv(out, bench.rmse_csv(result, meta=f"scenario={args.scenario} seed={args.seed}"))
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
