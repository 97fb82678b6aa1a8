"""Accuracy and estimation error across a lambda grid on the benchmark world.

    python scripts/lambda_sweep.py --modes l2,l1 --out lambda.csv
"""
import argparse

import numpy as np

from sdbe import io
from sdbe.analysis import EvalSettings, evaluate
from sdbe.synth import benchmark_spec, generate


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--modes", default="l2")
    ap.add_argument("--lo", type=float, default=1e-6)
    ap.add_argument("--hi", type=float, default=10.0)
    ap.add_argument("--points", type=int, default=20)
    ap.add_argument("--classifier", default="nn", choices=("nn", "softmax"))
    ap.add_argument("--out", default="-")
    a = ap.parse_args()

    grid = np.logspace(np.log10(a.lo), np.log10(a.hi), a.points)
    settings = EvalSettings(modes=tuple(a.modes.split(",")), classifier=a.classifier)
    rep = evaluate(generate(benchmark_spec(seed=a.seed)), grid, settings)
    io.write_csv(a.out, ["mode", "lambda", "accuracy", "mean_estimation_error"],
                 [[r.mode, r.lam, r.accuracy, r.mean_estimation_error] for r in rep])


if __name__ == "__main__":
    main()
