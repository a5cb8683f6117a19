"""Compare the three options for the ``ε E_n·h`` term in the kernel gain.

Runs scenario (a) with FPF-K only for each ``kernel_h_term`` setting and
prints the final-time RMSE, plus the gain magnitude on a concentrated ensemble
relative to the linear Kalman gain ``σ² [Rᵀ r]×``.
"""
import argparse

import numpy as np

from fpf_attitude import bench, kernel, sim, so3
from fpf_attitude.checks import unit_sensors


def gain_ratio(h_term, sigma_deg=5.0, n=200, seed=0):
    rng = np.random.default_rng(seed)
    sensors = unit_sensors()
    sigma = np.deg2rad(sigma_deg)
    q = so3.sample_concentrated_gaussian(so3.IDENTITY, sigma**2 * np.eye(3), n, rng)
    h = sensors.h(q)
    gain = kernel.KernelGain(h_term=h_term)(q, h, h.mean(0), sensors.lie_derivative(q))
    target = sigma**2 * sensors.lie_derivative(so3.IDENTITY)
    return np.linalg.norm(gain.mean(0)) / np.linalg.norm(target)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--runs", type=int, default=10)
    args = parser.parse_args()
    for h_term in sorted(kernel.H_TERMS):
        config = bench.ExperimentConfig(
            scenario=sim.ScenarioConfig.preset("a"), filters=("fpf-k",), runs=args.runs, kernel_h_term=h_term
        )
        final = bench.run_experiment(config).final_rmse_deg()["fpf-k"]
        print(f"h_term={h_term:<6} |gain| / |Kalman gain| = {gain_ratio(h_term):7.2f}   final RMSE {final:7.2f} deg")


if __name__ == "__main__":
    main()
