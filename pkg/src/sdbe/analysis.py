"""Correlation diagnostics and the accuracy / estimation-error harness."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .classifiers import NnClassifier, SoftmaxClassifier, TrainConfig, softmax_train
from .core import LabeledFeatureSet, as_feature, check_same_dim, normalize_columns
from .dictionary import ClassDictionary, OcclusionErrorDictionary, build_cd, build_oed
from .errors import ConstantVector, DimensionMismatch
from .estimator import L1, L2, estimate_batch, fit
from .solver_l1 import L1Settings
from .synth import SynthWorld, WorldSpec, generate

DEFAULT_LAMBDA_GRID = tuple(float(x) for x in np.logspace(-6, 1, 20))
CENTERED_EPS = 1e-300


def pearson(x, y) -> float:
    """Pearson correlation of two vectors (centered cosine)."""
    x = as_feature(x, "x")
    y = as_feature(y, "y")
    check_same_dim(x, y)
    xc, yc = x - x.mean(), y - y.mean()
    nx, ny = np.linalg.norm(xc), np.linalg.norm(yc)
    if nx <= CENTERED_EPS or ny <= CENTERED_EPS:
        raise ConstantVector("Pearson correlation undefined for a constant vector")
    return float(np.clip((xc @ yc) / (nx * ny), -1.0, 1.0))


@dataclass(frozen=True)
class CorrReport:
    mean_abs_rho: float
    bin_edges: np.ndarray
    counts: np.ndarray
    pair_count: int
    skipped_a: int = 0
    skipped_b: int = 0


def _centered_unit(x: np.ndarray):
    xc = x - x.mean(axis=0)
    nrm = np.linalg.norm(xc, axis=0)
    ok = nrm > CENTERED_EPS
    return xc[:, ok] / nrm[ok], int(np.count_nonzero(~ok))


def cross_corr_report(a: ClassDictionary, b: OcclusionErrorDictionary,
                      bins: int = 40) -> CorrReport:
    """Pearson correlation between every (A column, B column) pair.

    Constant columns have no correlation; they are skipped and counted.
    """
    if a.m != b.m:
        raise DimensionMismatch(f"CD dimension {a.m} != OED dimension {b.m}")
    if b.n < 1:
        raise ValueError("occlusion error dictionary is empty")
    if bins < 1:
        raise ValueError("bins must be >= 1")
    ua, sa = _centered_unit(a.matrix)
    ub, sb = _centered_unit(b.matrix)
    rho = np.clip(ua.T @ ub, -1.0, 1.0).ravel()
    counts, edges = np.histogram(rho, bins=bins, range=(-1.0, 1.0))
    mean_abs = float(np.mean(np.abs(rho))) if rho.size else 0.0
    return CorrReport(mean_abs, edges, counts, int(rho.size), sa, sb)


@dataclass(frozen=True)
class EvalRow:
    occlusion_energy: float
    mode: str               # "none" is the no-SDBE baseline
    lam: float
    accuracy: float
    mean_estimation_error: float
    mean_original_error: float
    query_count: int
    correct: int
    ties: int = 0


@dataclass
class EvalReport:
    rows: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def select(self, mode: str | None = None, lam: float | None = None,
               occlusion_energy: float | None = None) -> list:
        out = self.rows
        if mode is not None:
            out = [r for r in out if r.mode == mode]
        if lam is not None:
            out = [r for r in out if r.lam == lam]
        if occlusion_energy is not None:
            out = [r for r in out if r.occlusion_energy == occlusion_energy]
        return out

    def best(self) -> "EvalReport":
        """Per (energy, mode), the row with the highest accuracy (first on ties)."""
        seen = {}
        for r in self.rows:
            key = (r.occlusion_energy, r.mode)
            if key not in seen or r.accuracy > seen[key].accuracy:
                seen[key] = r
        return EvalReport([r for r in self.rows if seen[(r.occlusion_energy, r.mode)] is r])


def _nn_ties(clf: NnClassifier, v: np.ndarray) -> int:
    p = clf.prototypes.matrix
    d2 = np.sum(p * p, axis=0)[:, None] - 2.0 * (p.T @ v)
    best = d2.min(axis=0)
    ties = 0
    for j in range(v.shape[1]):
        labs = np.unique(clf.prototypes.labels[d2[:, j] == best[j]])
        ties += int(labs.size > 1)
    return ties


def _softmax_ties(clf: SoftmaxClassifier, v: np.ndarray) -> int:
    p = clf.predict_proba(v)
    return int(np.count_nonzero(np.sum(p == p.max(axis=0), axis=0) > 1))


@dataclass(frozen=True)
class EvalSettings:
    modes: tuple = (L2,)
    classifier: str = "nn"
    normalize_columns: bool = True
    normalize_query: bool = True
    normalize_output: bool = True
    baseline: bool = True
    train_config: TrainConfig = TrainConfig()
    l1_max_iters: int = 10000
    l1_kkt_tol: float = 1e-6


def _classifier(settings: EvalSettings, a: np.ndarray, labels: np.ndarray):
    protos = LabeledFeatureSet(a, labels)
    if settings.classifier == "nn":
        return NnClassifier(protos), _nn_ties
    if settings.classifier == "softmax":
        return softmax_train(protos, settings.train_config), _softmax_ties
    raise ValueError(f"unknown classifier {settings.classifier!r}")


def evaluate(world: SynthWorld, lambda_grid, settings: EvalSettings = EvalSettings()) -> EvalReport:
    """Accuracy and estimation error for each mode and lambda on one world.

    Estimation errors are measured in the raw feature frame: when the query
    was normalized, the class part A alpha is scaled back by ||v|| before
    comparing with the true clean feature. Rows come out as: baseline, then
    modes in order, each sweeping ``lambda_grid`` in order. An empty grid
    yields an empty report.
    """
    grid = [float(x) for x in lambda_grid]
    report = EvalReport()
    if not grid:
        return report
    cd = build_cd(world.train)
    oed = build_oed(world.extra_occluded, world.extra_free)
    a = normalize_columns(cd.matrix) if settings.normalize_columns else cd.matrix
    clf, ties_of = _classifier(settings, a, cd.class_labels)

    v = world.queries_occluded.matrix
    y = world.queries_occluded.labels
    v0 = world.ground_truth.v0
    q = v.shape[1]
    energy = float(world.spec.occlusion_energy)
    orig_err = float(np.mean(np.linalg.norm(v - v0, axis=0)))

    if settings.baseline:
        vb = normalize_columns(v) if settings.normalize_query else v
        pred = clf.predict(vb)
        correct = int(np.count_nonzero(pred == y))
        report.rows.append(EvalRow(energy, "none", float("nan"), correct / q, orig_err,
                                   orig_err, q, correct, ties_of(clf, vb)))
    for mode in settings.modes:
        for lam in grid:
            l1s = L1Settings(lam, settings.l1_max_iters, settings.l1_kkt_tol) if mode == L1 else None
            model = fit(cd, oed, mode, lam,
                        normalize_columns=settings.normalize_columns,
                        normalize_query=settings.normalize_query,
                        normalize_output=settings.normalize_output,
                        l1_settings=l1s)
            est = estimate_batch(model, v)
            pred = clf.predict(est.v0_hat)
            correct = int(np.count_nonzero(pred == y))
            err = float(np.mean(np.linalg.norm(est.class_part * est.query_scale - v0, axis=0)))
            report.rows.append(EvalRow(energy, mode, lam, correct / q, err, orig_err, q,
                                       correct, ties_of(clf, est.v0_hat)))
    return report


def evaluate_sweep(spec: WorldSpec, energies, lambda_grid,
                   settings: EvalSettings = EvalSettings()) -> EvalReport:
    """One world per occlusion energy (same seed), rows concatenated in order."""
    out = EvalReport()
    for e in energies:
        out.rows.extend(evaluate(generate(replace(spec, occlusion_energy=float(e))),
                                 lambda_grid, settings).rows)
    return out
