"""Command-line front end.

Every subcommand reads and writes the binary containers from ``sdbe.io``
(``.csv`` inputs are accepted for features). Failures print one line,
``error: <Category>: <message>``, on stderr and exit with status 2.
"""
from __future__ import annotations

import argparse
import dataclasses
import os
import sys

import numpy as np

from . import io
from .analysis import DEFAULT_LAMBDA_GRID, EvalSettings, cross_corr_report, evaluate_sweep
from .classifiers import NnClassifier, TrainConfig, softmax_train
from .core import DEFAULT_TAU, LabeledFeatureSet, occlusion_error_stats
from .dictionary import ClassDictionary, OcclusionErrorDictionary, build_cd, build_oed
from .errors import ConfigError, SdbeError, WrongMode
from .estimator import L1, L2, CompiledLinear, compile_linear, estimate_batch, fit
from .solver_l1 import L1Settings
from .solver_l2 import DEFAULT_LAMBDA
from .synth import WorldSpec, benchmark_spec, generate

WORLD_SETS = ("train", "extra_free", "extra_occluded", "queries_clean", "queries_occluded")


def _onoff(s: str) -> bool:
    if s == "on":
        return True
    if s == "off":
        return False
    raise argparse.ArgumentTypeError("expected on or off")


def _grid(s: str) -> tuple:
    try:
        return tuple(float(x) for x in s.split(",") if x.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _seed(s: str) -> int:
    v = int(s, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _norm_flags(p, default: bool = True) -> None:
    for what in ("columns", "query", "output"):
        p.add_argument(f"--normalize-{what}", type=_onoff, default=default,
                       metavar="{on,off}")


# --- synth -----------------------------------------------------------------------

def _spec_from_args(a) -> WorldSpec:
    over = {"seed": a.seed, "overlap": a.overlap}
    for f in ("occlusion_energy", "noise_sigma", "leakage", "m"):
        if getattr(a, f) is not None:
            over[f] = getattr(a, f)
    if a.nonneg:
        over["nonneg_features"] = True
    return benchmark_spec(**over)


def cmd_synth(a) -> None:
    world = generate(_spec_from_args(a))
    os.makedirs(a.out, exist_ok=True)
    for name in WORLD_SETS:
        io.write_features(os.path.join(a.out, f"{name}.sdbe"), getattr(world, name))
    gt = world.ground_truth
    rows = []
    for j in range(gt.v0.shape[1]):
        st = occlusion_error_stats(gt.v0[:, j], world.queries_occluded.matrix[:, j], a.tau)
        rows.append([j, int(gt.class_ids[j]), int(gt.pattern_ids[j]),
                     float(np.linalg.norm(gt.v0[:, j])), float(np.linalg.norm(gt.eps[:, j])),
                     float(np.linalg.norm(gt.noise[:, j])), st.rel_l2, st.rel_l0])
    io.write_csv(os.path.join(a.out, "ground_truth.csv"),
                 ["query", "class", "pattern", "v0_norm", "eps_norm", "noise_norm",
                  "rel_l2", "rel_l0"], rows)


# --- dictionaries and models -----------------------------------------------------------

def cmd_build_cd(a) -> None:
    cd = build_cd(io.read_features(a.train), normalize=a.normalize)
    io.write_matrix(a.out, cd.matrix, cd.class_labels)


def cmd_build_oed(a) -> None:
    oed = build_oed(io.read_features(a.occluded), io.read_features(a.free),
                    normalize=a.normalize)
    io.write_matrix(a.out, oed.matrix, oed.pattern_labels)


def _load_cd(path) -> ClassDictionary:
    m, lab = io.read_matrix(path)
    return ClassDictionary(m, lab)


def _load_oed(path, m: int) -> OcclusionErrorDictionary:
    if path is None:
        return OcclusionErrorDictionary.empty(m)
    b, lab = io.read_matrix(path)
    return OcclusionErrorDictionary(b, lab)


def cmd_fit(a) -> None:
    cd = _load_cd(a.cd)
    oed = _load_oed(a.oed, cd.m)
    settings = L1Settings(a.lam, a.max_iters) if a.mode == L1 else None
    model = fit(cd, oed, a.mode, a.lam, normalize_columns=a.normalize_columns,
                normalize_query=a.normalize_query, normalize_output=a.normalize_output,
                l1_settings=settings)
    io.write_model(a.out, model)


def cmd_compile(a) -> None:
    model = io.read_model(a.model)
    if isinstance(model, CompiledLinear):
        raise WrongMode("model is already compiled")
    io.write_model(a.out, compile_linear(model))


def _apply(model, v: np.ndarray):
    """(v0_hat, per-query diagnostic rows)."""
    if isinstance(model, CompiledLinear):
        out = model.apply_batch(v)
        rows = [[j, "nan", "nan", "nan", "nan", "nan"] for j in range(v.shape[1])]
        return out, rows
    est = estimate_batch(model, v)
    rows = []
    for j in range(v.shape[1]):
        it = int(est.iterations[j]) if est.iterations is not None else 0
        kkt = float(est.kkt_residual[j]) if est.kkt_residual is not None else 0.0
        rows.append([j, int(np.count_nonzero(est.alpha[:, j])),
                     int(np.count_nonzero(est.beta[:, j])),
                     float(np.linalg.norm(est.residual[:, j])), it, kkt])
    return est.v0_hat, rows


def cmd_estimate(a) -> None:
    model = io.read_model(a.model)
    q = io.read_features(a.queries)
    v0_hat, rows = _apply(model, q.matrix)
    io.write_matrix(a.out, v0_hat, q.labels)
    if a.report:
        io.write_csv(a.report, ["query", "alpha_nnz", "beta_nnz", "residual_norm",
                                "iterations", "kkt_residual"], rows)


def cmd_train_softmax(a) -> None:
    cd = _load_cd(a.cd)
    x = cd.matrix
    if a.normalize_columns:
        x = x / np.linalg.norm(x, axis=0)
    cfg = TrainConfig(learning_rate=a.learning_rate, epochs=a.epochs, seed=a.seed)
    io.write_softmax_csv(a.out, softmax_train(LabeledFeatureSet(x, cd.class_labels), cfg))


def _load_classifier(path, normalize_columns: bool):
    if str(path).endswith(".csv"):
        return io.read_softmax_csv(path)
    m, lab = io.read_matrix(path)
    if normalize_columns:
        m = m / np.linalg.norm(m, axis=0)
    return NnClassifier(LabeledFeatureSet(m, lab))


def cmd_classify(a) -> None:
    clf = _load_classifier(a.classifier, a.normalize_columns)
    q = io.read_features(a.queries)
    if a.model:
        v, _ = _apply(io.read_model(a.model), q.matrix)
    else:
        v = q.matrix / np.linalg.norm(q.matrix, axis=0) if a.normalize_query else q.matrix
    pred = clf.predict(v)
    rows = [[j, int(pred[j]), int(q.labels[j])] for j in range(q.n)]
    io.write_csv(a.out, ["query", "predicted", "true"], rows)


# --- analysis ---------------------------------------------------------------------------

def cmd_corr(a) -> None:
    cd = _load_cd(a.cd)
    rep = cross_corr_report(cd, _load_oed(a.oed, cd.m), bins=a.bins)
    rows = [[rep.bin_edges[i], rep.bin_edges[i + 1], int(rep.counts[i])]
            for i in range(rep.counts.size)]
    io.write_csv(a.out, ["bin_lo", "bin_hi", "count"], rows)
    if a.summary:
        io.write_csv(a.summary, ["mean_abs_rho", "pairs", "skipped_a", "skipped_b"],
                     [[rep.mean_abs_rho, rep.pair_count, rep.skipped_a, rep.skipped_b]])


def config_schema() -> dict:
    """Keys accepted in a run configuration file, with their parsers and defaults."""
    base = benchmark_spec()
    schema = {}
    for f in dataclasses.fields(WorldSpec):
        default = getattr(base, f.name)
        if isinstance(default, bool):
            parse = io._bool
        elif isinstance(default, int):
            parse = lambda s: int(s, 0)   # noqa: E731
        else:
            parse = float
        schema[f.name] = io.ConfigKey(parse, default)
    schema.update({
        "modes": io.ConfigKey(io._strs, (L2,)),
        "lambda_grid": io.ConfigKey(io._floats, DEFAULT_LAMBDA_GRID),
        "energies": io.ConfigKey(io._floats, ()),
        "classifier": io.ConfigKey(str, "nn"),
        "normalize_columns": io.ConfigKey(io._bool, True),
        "normalize_query": io.ConfigKey(io._bool, True),
        "normalize_output": io.ConfigKey(io._bool, True),
        "baseline": io.ConfigKey(io._bool, True),
        "best_only": io.ConfigKey(io._bool, False),
        "out": io.ConfigKey(str, "-"),
    })
    return schema


@dataclasses.dataclass(frozen=True)
class RunConfig:
    spec: WorldSpec
    energies: tuple
    lambda_grid: tuple
    settings: EvalSettings
    best_only: bool
    out: str


def load_run_config(text: str) -> RunConfig:
    vals = io.parse_config(text, config_schema())
    spec = WorldSpec(**{f.name: vals[f.name] for f in dataclasses.fields(WorldSpec)})
    for mode in vals["modes"]:
        if mode not in (L1, L2):
            raise ConfigError(f"unknown mode {mode!r}")
    if vals["classifier"] not in ("nn", "softmax"):
        raise ConfigError(f"unknown classifier {vals['classifier']!r}")
    settings = EvalSettings(modes=vals["modes"], classifier=vals["classifier"],
                            normalize_columns=vals["normalize_columns"],
                            normalize_query=vals["normalize_query"],
                            normalize_output=vals["normalize_output"],
                            baseline=vals["baseline"])
    energies = vals["energies"] or (spec.occlusion_energy,)
    return RunConfig(spec, energies, vals["lambda_grid"], settings, vals["best_only"],
                     vals["out"])


def cmd_eval(a) -> None:
    text = ""
    if a.config:
        with open(a.config) as fh:
            text = fh.read()
    cfg = load_run_config(text)
    spec = cfg.spec
    if a.seed is not None:
        spec = dataclasses.replace(spec, seed=a.seed)
    if a.overlap is not None:
        spec = dataclasses.replace(spec, overlap=a.overlap)
    grid = a.lambda_grid if a.lambda_grid is not None else cfg.lambda_grid
    settings = cfg.settings
    if a.mode:
        settings = dataclasses.replace(settings, modes=(a.mode,))
    rep = evaluate_sweep(spec, cfg.energies, grid, settings)
    if cfg.best_only:
        rep = rep.best()
    rows = [[r.occlusion_energy, r.mode, r.lam, r.accuracy, r.mean_estimation_error,
             r.mean_original_error, r.query_count, r.correct, r.ties] for r in rep]
    io.write_csv(a.out or cfg.out, ["occlusion_energy", "mode", "lambda", "accuracy",
                                    "mean_estimation_error", "mean_original_error",
                                    "query_count", "correct", "ties"], rows)


# --- parser ------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sdbe", description="Occluded-feature estimation toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a seeded synthetic world")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=_seed, default=42)
    p.add_argument("--overlap", type=float, default=0.0)
    p.add_argument("--occlusion-energy", type=float)
    p.add_argument("--noise-sigma", type=float)
    p.add_argument("--leakage", type=float)
    p.add_argument("--m", type=int)
    p.add_argument("--nonneg", action="store_true")
    p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("build-cd", help="class dictionary from training features")
    p.add_argument("--train", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--normalize", type=_onoff, default=False, metavar="{on,off}")
    p.set_defaults(func=cmd_build_cd)

    p = sub.add_parser("build-oed", help="occlusion error dictionary from extra pairs")
    p.add_argument("--occluded", required=True)
    p.add_argument("--free", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--normalize", type=_onoff, default=False, metavar="{on,off}")
    p.set_defaults(func=cmd_build_oed)

    p = sub.add_parser("fit", help="train an estimator")
    p.add_argument("--cd", required=True)
    p.add_argument("--oed")
    p.add_argument("--mode", choices=(L1, L2), default=L2)
    p.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA)
    p.add_argument("--max-iters", type=int, default=10000)
    p.add_argument("--out", required=True)
    _norm_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("compile", help="collapse an l2 model into W = A P_alpha")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("estimate", help="estimate clean features")
    p.add_argument("--model", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report", help="per-query diagnostics CSV")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("train-softmax", help="fit a softmax classifier on a class dictionary")
    p.add_argument("--cd", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--learning-rate", type=float, default=0.5)
    p.add_argument("--normalize-columns", type=_onoff, default=True, metavar="{on,off}")
    p.set_defaults(func=cmd_train_softmax)

    p = sub.add_parser("classify", help="classify (optionally estimated) queries")
    p.add_argument("--classifier", required=True,
                   help="softmax weight CSV, or a prototype container for nearest neighbour")
    p.add_argument("--queries", required=True)
    p.add_argument("--model", help="apply this estimator first")
    p.add_argument("--out", default="-")
    p.add_argument("--normalize-columns", type=_onoff, default=True, metavar="{on,off}")
    p.add_argument("--normalize-query", type=_onoff, default=True, metavar="{on,off}")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("eval", help="accuracy / estimation-error sweep on synthetic worlds")
    p.add_argument("--config")
    p.add_argument("--mode", choices=(L1, L2))
    p.add_argument("--lambda-grid", type=_grid)
    p.add_argument("--seed", type=_seed)
    p.add_argument("--overlap", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("corr", help="Pearson cross-correlation histogram between A and B")
    p.add_argument("--cd", required=True)
    p.add_argument("--oed", required=True)
    p.add_argument("--bins", type=int, default=40)
    p.add_argument("--out", default="-")
    p.add_argument("--summary")
    p.set_defaults(func=cmd_corr)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except SdbeError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
