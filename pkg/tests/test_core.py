import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sdbe.core import (LabeledFeatureSet, normalize_columns, normalize_l2,
                       occlusion_error_stats, oev)
from sdbe.errors import (DimensionMismatch, EmptyInput, NonFiniteInput, ZeroVector)

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def test_normalize_l2_frozen_value():
    np.testing.assert_allclose(normalize_l2([3.0, 4.0]), [0.6, 0.8], rtol=0, atol=1e-16)


def test_normalize_zero_vector_raises():
    with pytest.raises(ZeroVector):
        normalize_l2(np.zeros(5))


def test_normalize_columns_reports_zero_column():
    x = np.array([[1.0, 0.0, 2.0], [0.0, 0.0, 0.0]])
    with pytest.raises(ZeroVector, match=r"\[1\]"):
        normalize_columns(x)


@given(arrays(np.float64, st.integers(1, 40), elements=finite))
def test_normalize_l2_unit_and_direction(v):
    if np.linalg.norm(v) < 1e-6:
        return
    u = normalize_l2(v)
    assert abs(np.linalg.norm(u) - 1.0) <= 1e-12
    # same direction: v is a positive multiple of u
    np.testing.assert_allclose(u * np.linalg.norm(v), v, rtol=1e-10, atol=1e-9)


def test_oev_is_difference_and_frozen():
    e = oev([1.0, 2.0, 3.0], [1.0, 0.5, 3.0], pattern_id=7)
    np.testing.assert_array_equal(e.values, [0.0, 1.5, 0.0])
    assert e.pattern_id == 7
    with pytest.raises(ValueError):
        e.values[0] = 1.0


def test_oev_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        oev(np.ones(3), np.ones(4), 0)


def test_error_stats_frozen():
    st_ = occlusion_error_stats([3.0, 4.0, 0.0, 0.0], [3.0, 4.0, 1.0, 2.0])
    assert st_.rel_l2 == pytest.approx(np.sqrt(5) / 5, abs=1e-15)
    assert st_.rel_l0 == 0.5


def test_error_stats_tau_threshold():
    v0 = np.array([1.0, 1.0, 1.0, 1.0])
    v = v0 + np.array([1e-13, 1e-3, 0.0, -1.0])
    assert occlusion_error_stats(v0, v, tau=1e-12).rel_l0 == 0.5
    assert occlusion_error_stats(v0, v, tau=0.0).rel_l0 == 0.75
    with pytest.raises(ZeroVector):
        occlusion_error_stats(np.zeros(4), v)


def test_non_finite_and_empty_rejected():
    with pytest.raises(NonFiniteInput):
        normalize_l2([1.0, np.nan])
    with pytest.raises(EmptyInput):
        normalize_l2([])


def test_labeled_set_validates_and_copies():
    x = np.arange(6, dtype=float).reshape(2, 3)
    fs = LabeledFeatureSet(x, [0, 1, 1])
    x[0, 0] = 99.0
    assert fs.matrix[0, 0] == 0.0
    assert fs.labels.dtype == np.int64 and (fs.m, fs.n) == (2, 3)
    with pytest.raises(DimensionMismatch):
        LabeledFeatureSet(x, [0, 1])
    with pytest.raises(ValueError):
        LabeledFeatureSet(x, [0.5, 1, 1])
