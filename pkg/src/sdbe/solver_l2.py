"""Squared-l2 regularized decomposition with a precomputed projector.

P = (D^T D + lam I)^{-1} D^T is formed once per dictionary; each query then
costs one matrix-vector product. The primal form is computed from a QR
factorization of [D; sqrt(lam) I]. When D has more columns than rows the
identical dual form D^T (D D^T + lam I)^{-1} is used instead, with an m x m
Cholesky factor.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .core import _frozen, as_feature, as_matrix
from .dictionary import ConcatDictionary
from .errors import DimensionMismatch, NumericalFailure

DEFAULT_LAMBDA = 0.005


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not np.isfinite(lam) or lam <= 0:
        raise ValueError(f"lambda must be a positive finite number, got {lam}")
    return lam


def _cho(gram: np.ndarray, lam: float):
    sys = gram + lam * np.eye(gram.shape[0])
    try:
        return linalg.cho_factor(sys, lower=True, check_finite=True)
    except (linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"Cholesky factorization failed: {exc}") from exc


def primal_projector(d: np.ndarray, lam: float) -> np.ndarray:
    """(D^T D + lam I)^{-1} D^T without forming D^T D.

    With [D; sqrt(lam) I] = QR the projector is R^{-1} Q_top^T, where Q_top
    holds the first m rows of Q. This keeps the condition number at
    sqrt(cond(D^T D + lam I)) instead of squaring it.
    """
    d = as_matrix(d, "D")
    lam = _check_lambda(lam)
    m, n = d.shape
    stacked = np.vstack([d, np.sqrt(lam) * np.eye(n)])
    try:
        q, r = linalg.qr(stacked, mode="economic", check_finite=False)
        p = linalg.solve_triangular(r, q[:m].T, check_finite=False)
    except (linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"QR solve failed: {exc}") from exc
    return p


def dual_projector(d: np.ndarray, lam: float) -> np.ndarray:
    """D^T (D D^T + lam I)^{-1} via an m x m Cholesky factor."""
    d = as_matrix(d, "D")
    lam = _check_lambda(lam)
    # (DD^T + lam I) is symmetric, so D^T K^{-1} = (K^{-1} D)^T
    return linalg.cho_solve(_cho(d @ d.T, lam), d).T


@dataclass(frozen=True)
class RidgeOperator:
    p_matrix: np.ndarray
    lam: float
    split_index: int
    form: str

    @property
    def m(self) -> int:
        return self.p_matrix.shape[1]

    @property
    def p_alpha(self) -> np.ndarray:
        return self.p_matrix[:self.split_index]

    @property
    def p_beta(self) -> np.ndarray:
        return self.p_matrix[self.split_index:]


def fit_ridge(d: ConcatDictionary, lam: float = DEFAULT_LAMBDA,
              form: str = "auto") -> RidgeOperator:
    """Precompute the ridge projector for dictionary ``d``.

    ``form`` is ``"primal"``, ``"dual"`` or ``"auto"`` (dual when n > m).
    """
    lam = _check_lambda(lam)
    mat = d.matrix
    if form == "auto":
        form = "dual" if mat.shape[1] > mat.shape[0] else "primal"
    if form == "primal":
        p = primal_projector(mat, lam)
    elif form == "dual":
        p = dual_projector(mat, lam)
    else:
        raise ValueError(f"unknown form {form!r}")
    if not np.all(np.isfinite(p)):
        raise NumericalFailure("projector has non-finite entries")
    return RidgeOperator(_frozen(p), lam, d.split_index, form)


def solve_l2(op: RidgeOperator, v) -> np.ndarray:
    """Ridge coefficients omega = P v."""
    v = as_feature(v)
    if v.size != op.m:
        raise DimensionMismatch(f"query has dimension {v.size}, expected {op.m}")
    return op.p_matrix @ v


def ridge_objective(d: np.ndarray, v: np.ndarray, omega: np.ndarray, lam: float) -> float:
    r = v - d @ omega
    return float(r @ r + lam * omega @ omega)
