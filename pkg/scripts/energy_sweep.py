"""Accuracy versus occlusion energy, best lambda per energy and mode.

    python scripts/energy_sweep.py --energies 0,0.1,0.25,0.5,0.75,1
"""
import argparse

import numpy as np

from sdbe import io
from sdbe.analysis import EvalSettings, evaluate_sweep
from sdbe.synth import benchmark_spec


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--energies", default="0,0.1,0.25,0.5,0.75,1.0")
    ap.add_argument("--grid", default="1e-4,1e-3,0.005,0.05")
    ap.add_argument("--overlap", type=float, default=0.0)
    ap.add_argument("--out", default="-")
    a = ap.parse_args()

    energies = [float(x) for x in a.energies.split(",")]
    grid = [float(x) for x in a.grid.split(",")]
    spec = benchmark_spec(seed=a.seed, overlap=a.overlap)
    rep = evaluate_sweep(spec, energies, grid, EvalSettings(modes=("l2",))).best()
    rows = [[r.occlusion_energy, r.mode, r.lam, r.accuracy, r.mean_estimation_error,
             r.mean_original_error] for r in rep]
    io.write_csv(a.out, ["occlusion_energy", "mode", "lambda", "accuracy",
                         "mean_estimation_error", "mean_original_error"], rows)
    acc = np.array([r[3] for r in rows])
    print(f"# accuracy range {acc.min():.3f}..{acc.max():.3f}")


if __name__ == "__main__":
    main()
