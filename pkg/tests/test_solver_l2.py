import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import gauss_solve, ridge_oracle
from sdbe.dictionary import ConcatDictionary
from sdbe.errors import DimensionMismatch
from sdbe.solver_l2 import (dual_projector, fit_ridge, primal_projector, ridge_objective,
                            solve_l2)


def _cdict(d, split=None):
    n = d.shape[1]
    split = n if split is None else split
    return ConcatDictionary(d, split, np.zeros(split, dtype=np.int64),
                            np.zeros(n - split, dtype=np.int64))


def test_gauss_oracle_sanity():
    a = np.array([[2.0, 1.0], [1.0, 3.0]])
    np.testing.assert_allclose(gauss_solve(a, [3.0, 5.0])[:, 0], [0.8, 1.4], atol=1e-15)


def test_one_dim_closed_form():
    # D = [d], omega = d.v / (d.d + lam)
    d = np.array([[1.0], [2.0]])
    op = fit_ridge(_cdict(d), lam=0.5)
    np.testing.assert_allclose(solve_l2(op, [3.0, 1.0]), [5.0 / 5.5], rtol=1e-15)


@given(st.integers(1, 12), st.integers(1, 12), st.sampled_from([1e-6, 0.005, 0.1, 1.0]),
       st.integers(0, 2 ** 32 - 1))
def test_matches_oracle(m, n, lam, seed):
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(m, n))
    v = rng.normal(size=m)
    w = solve_l2(fit_ridge(_cdict(d), lam), v)
    ref = ridge_oracle(d, v, lam)
    # conditioning of D^T D + lam I bounds the attainable agreement
    cond = np.linalg.cond(d.T @ d + lam * np.eye(n))
    assert np.linalg.norm(w - ref) <= 1e-13 * cond * max(np.linalg.norm(ref), 1e-300) + 1e-300


@given(st.integers(1, 8), st.integers(1, 20), st.floats(1e-4, 10.0),
       st.integers(0, 2 ** 32 - 1))
def test_primal_dual_agree(m, n, lam, seed):
    d = np.random.default_rng(seed).normal(size=(m, n))
    p1, p2 = primal_projector(d, lam), dual_projector(d, lam)
    assert np.linalg.norm(p1 - p2) <= 1e-9 * np.linalg.norm(p1)


def test_auto_form_selection(rng):
    assert fit_ridge(_cdict(rng.normal(size=(5, 3)))).form == "primal"
    assert fit_ridge(_cdict(rng.normal(size=(3, 5)))).form == "dual"


def test_gradient_vanishes_at_solution(rng):
    d, v, lam = rng.normal(size=(10, 6)), rng.normal(size=10), 0.3
    w = solve_l2(fit_ridge(_cdict(d), lam), v)
    grad = -2 * d.T @ (v - d @ w) + 2 * lam * w
    assert np.abs(grad).max() < 1e-12
    f = ridge_objective(d, v, w, lam)
    for _ in range(20):
        assert ridge_objective(d, v, w + 1e-3 * rng.normal(size=6), lam) >= f


def test_bad_lambda_and_dims(rng):
    d = _cdict(rng.normal(size=(4, 3)))
    for lam in (0.0, -1.0, np.nan, np.inf):
        with pytest.raises(ValueError):
            fit_ridge(d, lam)
    with pytest.raises(ValueError):
        fit_ridge(d, 0.1, form="qr")
    with pytest.raises(DimensionMismatch):
        solve_l2(fit_ridge(d), np.ones(5))


def test_split_rows(rng):
    op = fit_ridge(_cdict(rng.normal(size=(6, 5)), split=3), 0.1)
    assert op.p_alpha.shape == (3, 6) and op.p_beta.shape == (2, 6)
