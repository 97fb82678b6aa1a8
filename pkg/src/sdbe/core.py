"""Value types, normalization and occlusion-error bookkeeping.

A feature vector is a plain 1-D float64 ndarray; a set of features is an
m x n matrix with one feature per column, paired with integer labels.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyInput, NonFiniteInput, ZeroVector

ZERO_NORM = 1e-300
DEFAULT_TAU = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def as_feature(v, name: str = "v") -> np.ndarray:
    """Coerce to a finite 1-D float64 array."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-D, got shape {v.shape}")
    if v.size < 1:
        raise EmptyInput(f"{name} is empty")
    if not np.all(np.isfinite(v)):
        raise NonFiniteInput(f"{name} has NaN/Inf entries")
    return v


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput(f"{name} has NaN/Inf entries")
    return x


def check_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatch(f"dimension {a.shape[0]} != {b.shape[0]}")


def normalize_l2(v) -> np.ndarray:
    """Scale ``v`` to unit Euclidean norm, preserving direction."""
    v = as_feature(v)
    nrm = np.linalg.norm(v)
    if nrm <= ZERO_NORM:
        raise ZeroVector("cannot normalize a zero vector")
    return v / nrm


def normalize_columns(x) -> np.ndarray:
    """Unit-normalize every column of ``x``; any zero column is an error."""
    x = as_matrix(x)
    nrm = np.linalg.norm(x, axis=0)
    bad = np.flatnonzero(nrm <= ZERO_NORM)
    if bad.size:
        raise ZeroVector(f"zero column(s) at {bad.tolist()} cannot be normalized")
    return x / nrm


@dataclass(frozen=True)
class OcclusionErrorVector:
    values: np.ndarray
    pattern_id: int


def oev(occluded, free, pattern_id: int) -> OcclusionErrorVector:
    """Occlusion error vector ``occluded - free`` of one extra image pair."""
    occluded = as_feature(occluded, "occluded")
    free = as_feature(free, "free")
    check_same_dim(occluded, free)
    return OcclusionErrorVector(_frozen(occluded - free), int(pattern_id))


@dataclass(frozen=True)
class ErrorStats:
    rel_l2: float
    rel_l0: float
    tau: float


def occlusion_error_stats(v0, v, tau: float = DEFAULT_TAU) -> ErrorStats:
    """Relative l2 energy and fraction of entries moved by more than ``tau``.

    Both quantities are taken relative to the clean feature: ``rel_l2`` is
    ||v - v0|| / ||v0|| and ``rel_l0`` is the share of the m entries whose
    absolute error exceeds ``tau``.
    """
    v0 = as_feature(v0, "v0")
    v = as_feature(v, "v")
    check_same_dim(v0, v)
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    n0 = np.linalg.norm(v0)
    if n0 <= ZERO_NORM:
        raise ZeroVector("clean feature has zero norm")
    err = v - v0
    return ErrorStats(
        rel_l2=float(np.linalg.norm(err) / n0),
        rel_l0=float(np.count_nonzero(np.abs(err) > tau) / v0.size),
        tau=float(tau),
    )


@dataclass(frozen=True)
class LabeledFeatureSet:
    """Features stored column-wise with one integer label per column."""

    matrix: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        x = as_matrix(self.matrix)
        labels = np.asarray(self.labels)
        if labels.ndim != 1 or labels.size != x.shape[1]:
            raise DimensionMismatch(
                f"{labels.size} labels for {x.shape[1]} columns")
        if labels.size and not np.issubdtype(labels.dtype, np.integer):
            if not np.all(labels == np.round(labels)):
                raise ValueError("labels must be integers")
        labels = labels.astype(np.int64)
        if x.shape[0] < 1:
            raise EmptyInput("feature dimension must be >= 1")
        object.__setattr__(self, "matrix", _frozen(x.copy()))
        object.__setattr__(self, "labels", _frozen(labels.copy()))

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.matrix.shape[1]

    def column(self, j: int) -> np.ndarray:
        return self.matrix[:, j]
