"""Class dictionary A, occlusion error dictionary B and D = [A B]."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import LabeledFeatureSet, _frozen, normalize_columns
from .errors import DimensionMismatch, EmptyInput, LabelMismatch


def _group_by_label(matrix: np.ndarray, labels: np.ndarray):
    # stable sort keeps input order inside a group
    order = np.argsort(labels, kind="stable")
    return matrix[:, order], labels[order]


@dataclass(frozen=True)
class ClassDictionary:
    matrix: np.ndarray
    class_labels: np.ndarray

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.matrix.shape[1]

    @property
    def class_count(self) -> int:
        return int(np.unique(self.class_labels).size)


@dataclass(frozen=True)
class OcclusionErrorDictionary:
    matrix: np.ndarray
    pattern_labels: np.ndarray

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.matrix.shape[1]

    @property
    def pattern_count(self) -> int:
        return int(np.unique(self.pattern_labels).size)

    @classmethod
    def empty(cls, m: int) -> "OcclusionErrorDictionary":
        return cls(_frozen(np.zeros((m, 0))), _frozen(np.zeros(0, dtype=np.int64)))


@dataclass(frozen=True)
class ConcatDictionary:
    """D = [A B]; columns ``[:split_index]`` belong to A, the rest to B."""

    matrix: np.ndarray
    split_index: int
    class_labels: np.ndarray
    pattern_labels: np.ndarray

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.matrix.shape[1]

    @property
    def class_part(self) -> np.ndarray:
        return self.matrix[:, :self.split_index]

    @property
    def error_part(self) -> np.ndarray:
        return self.matrix[:, self.split_index:]

    def split(self, omega: np.ndarray):
        """Split stacked coefficients into (alpha, beta)."""
        return omega[:self.split_index], omega[self.split_index:]

    def with_matrix(self, matrix: np.ndarray) -> "ConcatDictionary":
        return ConcatDictionary(_frozen(np.array(matrix, dtype=np.float64)),
                                self.split_index, self.class_labels,
                                self.pattern_labels)


def build_cd(training: LabeledFeatureSet, normalize: bool = False) -> ClassDictionary:
    """Stack training features into A, grouped by class label."""
    if training.n < 1:
        raise EmptyInput("class dictionary needs at least one column")
    x, labels = _group_by_label(training.matrix, training.labels)
    if normalize:
        x = normalize_columns(x)
    return ClassDictionary(_frozen(np.array(x)), _frozen(np.array(labels)))


def build_oed(occluded: LabeledFeatureSet, free: LabeledFeatureSet,
              normalize: bool = False) -> OcclusionErrorDictionary:
    """Columns are occluded_j - free_j for each extra pair, grouped by pattern.

    Pairs are matched by position and must carry the same pattern label.
    """
    if occluded.m != free.m:
        raise DimensionMismatch(f"dimension {occluded.m} != {free.m}")
    if occluded.n != free.n:
        raise DimensionMismatch(f"{occluded.n} occluded vs {free.n} free columns")
    if not np.array_equal(occluded.labels, free.labels):
        raise LabelMismatch("occluded/free pattern labels differ")
    if occluded.n == 0:
        return OcclusionErrorDictionary.empty(occluded.m)
    x, labels = _group_by_label(occluded.matrix - free.matrix, occluded.labels)
    if normalize:
        x = normalize_columns(x)
    return OcclusionErrorDictionary(_frozen(np.array(x)), _frozen(np.array(labels)))


def concat(cd: ClassDictionary, oed: OcclusionErrorDictionary) -> ConcatDictionary:
    if oed.n and oed.m != cd.m:
        raise DimensionMismatch(f"CD dimension {cd.m} != OED dimension {oed.m}")
    b = oed.matrix if oed.n else np.zeros((cd.m, 0))
    return ConcatDictionary(
        matrix=_frozen(np.hstack([cd.matrix, b])),
        split_index=cd.n,
        class_labels=cd.class_labels,
        pattern_labels=oed.pattern_labels,
    )
