"""Plot an RMSE CSV written by ``fpf-bench simulate`` or ``run_scenario.py``.

    python scripts/plot_rmse.py results/scenario_a.csv --out scenario_a.png

Needs matplotlib, which the package itself does not depend on.
"""
import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("csv")
    parser.add_argument("--out", default="rmse.png")
    parser.add_argument("--log", action="store_true", help="log-scale y axis")
    args = parser.parse_args()

    with open(args.csv) as fh:
        lines = [line for line in fh if not line.startswith("#")]
    data = np.genfromtxt(lines, delimiter=",", names=True)
    fig, ax = plt.subplots(figsize=(6, 4))
    for name in data.dtype.names[1:]:
        ax.plot(data["t"], data[name], label=name.removeprefix("rmse_").replace("_", "-").upper())
    ax.set_xlabel("t [s]")
    ax.set_ylabel("RMSE [deg]")
    if args.log:
        ax.set_yscale("log")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
