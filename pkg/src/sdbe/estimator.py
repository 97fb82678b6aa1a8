"""Fit / estimate pipeline and the compiled single-matrix form of the l2 path.

Training builds D = [A B] (optionally unit columns) and, for the l2 mode,
precomputes the ridge projector. Testing optionally normalizes the query,
solves for omega = [alpha; beta], reads the clean-feature estimate as
A alpha and optionally normalizes it.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ZERO_NORM, _frozen, as_feature, as_matrix, normalize_columns
from .dictionary import ClassDictionary, ConcatDictionary, OcclusionErrorDictionary, concat
from .errors import DimensionMismatch, WrongMode, ZeroVector
from .solver_l1 import L1Settings, solve_l1_batch
from .solver_l2 import DEFAULT_LAMBDA, RidgeOperator, fit_ridge

L1, L2 = "l1", "l2"


@dataclass(frozen=True)
class SdbeModel:
    dictionary: ConcatDictionary
    mode: str
    lam: float
    ridge: RidgeOperator | None = None
    normalize_columns: bool = True
    normalize_query: bool = True
    normalize_output: bool = True
    l1_settings: L1Settings | None = None

    @property
    def m(self) -> int:
        return self.dictionary.m

    @property
    def class_matrix(self) -> np.ndarray:
        return self.dictionary.class_part


@dataclass
class EstimateResult:
    v0_hat: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    residual: np.ndarray
    class_part: np.ndarray       # A alpha before output normalization
    query_scale: float           # ||v|| if the query was normalized, else 1
    diagnostics: dict = field(default_factory=dict)


@dataclass
class BatchEstimate:
    """Column-stacked estimates for q queries."""

    v0_hat: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    residual: np.ndarray
    class_part: np.ndarray
    query_scale: np.ndarray
    iterations: np.ndarray | None = None
    kkt_residual: np.ndarray | None = None
    converged: np.ndarray | None = None

    def __len__(self) -> int:
        return self.v0_hat.shape[1]

    def result(self, j: int) -> EstimateResult:
        diag = {}
        if self.iterations is not None:
            diag = {"iterations": int(self.iterations[j]),
                    "kkt_residual": float(self.kkt_residual[j]),
                    "converged": bool(self.converged[j])}
        return EstimateResult(self.v0_hat[:, j].copy(), self.alpha[:, j].copy(),
                              self.beta[:, j].copy(), self.residual[:, j].copy(),
                              self.class_part[:, j].copy(), float(self.query_scale[j]),
                              diag)


def fit(cd: ClassDictionary, oed: OcclusionErrorDictionary | None = None,
        mode: str = L2, lam: float = DEFAULT_LAMBDA, *,
        normalize_columns: bool = True, normalize_query: bool = True,
        normalize_output: bool = True, l1_settings: L1Settings | None = None,
        ridge_form: str = "auto") -> SdbeModel:
    """Training process: build D, normalize its columns, precompute P for l2."""
    if mode not in (L1, L2):
        raise ValueError(f"mode must be 'l1' or 'l2', got {mode!r}")
    if oed is None:
        oed = OcclusionErrorDictionary.empty(cd.m)
    d = concat(cd, oed)
    if normalize_columns:
        d = d.with_matrix(_normalize_cols(d.matrix))
    ridge = None
    if mode == L2:
        ridge = fit_ridge(d, lam, form=ridge_form)
        settings = None
    else:
        settings = l1_settings or L1Settings(lam)
        if settings.lam != lam:
            raise ValueError("l1_settings.lam disagrees with lam")
    return SdbeModel(d, mode, float(lam), ridge, normalize_columns,
                     normalize_query, normalize_output, settings)


def _normalize_cols(x: np.ndarray) -> np.ndarray:
    return normalize_columns(x)


def _prepare(v: np.ndarray, normalize: bool):
    if not normalize:
        return v, np.ones(v.shape[1])
    nrm = np.linalg.norm(v, axis=0)
    bad = np.flatnonzero(nrm <= ZERO_NORM)
    if bad.size:
        raise ZeroVector(f"cannot normalize zero query at column(s) {bad.tolist()}")
    return v / nrm, nrm


def _finish(x: np.ndarray, normalize: bool) -> np.ndarray:
    if not normalize:
        return x.copy()
    nrm = np.linalg.norm(x, axis=0)
    # an all-zero estimate has no direction; it is passed through unchanged
    return np.where(nrm > ZERO_NORM, x / np.where(nrm > ZERO_NORM, nrm, 1.0), x)


def estimate_batch(model: SdbeModel, v) -> BatchEstimate:
    """Testing process for every column of ``v`` (m x q)."""
    v = as_matrix(v, "queries")
    if v.shape[0] != model.m:
        raise DimensionMismatch(f"queries have dimension {v.shape[0]}, model has {model.m}")
    vu, scale = _prepare(v, model.normalize_query)
    d = model.dictionary
    extra = {}
    if model.mode == L2:
        omega = model.ridge.p_matrix @ vu
    else:
        sol = solve_l1_batch(d.matrix, vu, model.l1_settings)
        omega = sol.omega
        extra = dict(iterations=sol.iterations, kkt_residual=sol.kkt_residual,
                     converged=sol.converged)
    alpha, beta = omega[:d.split_index], omega[d.split_index:]
    class_part = d.class_part @ alpha
    residual = vu - class_part - d.error_part @ beta
    return BatchEstimate(_finish(class_part, model.normalize_output), alpha, beta,
                         residual, class_part, scale, **extra)


def estimate(model: SdbeModel, v) -> EstimateResult:
    """Estimate the clean feature for a single query."""
    v = as_feature(v)
    if v.size != model.m:
        raise DimensionMismatch(f"query has dimension {v.size}, model has {model.m}")
    return estimate_batch(model, v[:, None]).result(0)


@dataclass(frozen=True)
class CompiledLinear:
    """W = A P_alpha: the whole l2 estimator as one m x m matrix."""

    w_matrix: np.ndarray
    lam: float
    normalize_query: bool = True
    normalize_output: bool = True

    @property
    def m(self) -> int:
        return self.w_matrix.shape[0]

    def apply(self, v) -> np.ndarray:
        v = as_matrix(v, "queries") if np.ndim(v) == 2 else as_feature(v)[:, None]
        if v.shape[0] != self.m:
            raise DimensionMismatch(f"query dimension {v.shape[0]} != {self.m}")
        vu, _ = _prepare(v, self.normalize_query)
        out = _finish(self.w_matrix @ vu, self.normalize_output)
        return out if np.ndim(v) == 2 and out.shape[1] != 1 else out[:, 0]

    def apply_batch(self, v) -> np.ndarray:
        v = as_matrix(v, "queries")
        if v.shape[0] != self.m:
            raise DimensionMismatch(f"query dimension {v.shape[0]} != {self.m}")
        vu, _ = _prepare(v, self.normalize_query)
        return _finish(self.w_matrix @ vu, self.normalize_output)


def compile_linear(model: SdbeModel) -> CompiledLinear:
    if model.mode != L2 or model.ridge is None:
        raise WrongMode("only l2 models have a linear closed form")
    w = model.class_matrix @ model.ridge.p_alpha
    return CompiledLinear(_frozen(w), model.lam, model.normalize_query,
                          model.normalize_output)
