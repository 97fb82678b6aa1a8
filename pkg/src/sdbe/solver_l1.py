"""l1-regularized decomposition: min ||v - D w||^2 + lam ||w||_1.

Solved by accelerated proximal gradient (FISTA) with function-value restart:
whenever the accelerated step would raise the objective the momentum is
reset and a plain proximal step from the last iterate is taken instead, so
the objective sequence is monotone. Convergence is certified by the
subgradient optimality (KKT) residual, not by the iterate change.

Several right-hand sides can be solved together; each column keeps its own
momentum and stops independently.
"""
from __future__ import annotations

import warnings

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .core import as_feature, as_matrix
from .dictionary import ConcatDictionary
from .errors import DimensionMismatch

POWER_ITERS = 50
POWER_TOL = 1e-10
POLISH_EVERY = 50


@dataclass(frozen=True)
class L1Settings:
    lam: float
    max_iters: int = 10000
    kkt_tol: float = 1e-6
    obj_tol: float = 1e-10

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise ValueError("lam must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not (self.kkt_tol > 0 and self.obj_tol > 0):
            raise ValueError("tolerances must be positive")


@dataclass
class L1Solution:
    omega: np.ndarray
    iterations: int
    kkt_residual: float
    converged: bool
    objective: float
    history: list = field(default_factory=list, repr=False)


def _dmatrix(d) -> np.ndarray:
    if isinstance(d, ConcatDictionary):
        return d.matrix
    return as_matrix(d, "D")


def soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def lipschitz(d: np.ndarray) -> float:
    """2 * sigma_max(D)^2, by power iteration on the smaller Gram matrix."""
    if not d.size:
        return 0.0
    g = d.T @ d if d.shape[1] <= d.shape[0] else d @ d.T
    x = np.random.Generator(np.random.Philox(key=0)).standard_normal(g.shape[0])
    x /= np.linalg.norm(x)
    est = 0.0
    converged = False
    for _ in range(POWER_ITERS):
        y = g @ x
        new = float(x @ y)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        x = y / ny
        if abs(new - est) <= POWER_TOL * max(new, 1e-300):
            est, converged = new, True
            break
        est = new
    if not converged:
        est = float(np.linalg.norm(d, 2) ** 2)
    # Rayleigh quotients approach sigma^2 from below
    return 2.0 * est * (1.0 + 1e-6)


def _objective(r: np.ndarray, w: np.ndarray, lam: float) -> np.ndarray:
    return np.sum(r * r, axis=0) + lam * np.sum(np.abs(w), axis=0)


def _polish(gram, c, w, lam, max_rounds=10):
    """Refine ``w`` on its own support, or return None if nothing moved.

    On a fixed sign pattern s the objective is the smooth quadratic
    w_S^T G_SS w_S - 2 c_S^T w_S + lam s^T w_S (c = D^T v). Each round moves
    toward its minimizer and stops at the first coordinate that would change
    sign, dropping it. The caller keeps the result only if the objective
    went down. Coordinates outside the support are left to the proximal
    iterations.
    """
    w = w.copy()
    moved = False
    for _ in range(max_rounds):
        s = np.flatnonzero(w)
        if not s.size:
            break
        sg = np.sign(w[s])
        h = gram[np.ix_(s, s)]
        rhs = c[s] - 0.5 * lam * sg
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", linalg.LinAlgWarning)
                target = linalg.solve(h, rhs, assume_a="pos", check_finite=False)
        except (linalg.LinAlgError, linalg.LinAlgWarning, ValueError):
            # singular on this support: leave it to the proximal steps
            break
        if not np.all(np.isfinite(target)):
            break
        step = target - w[s]
        flips = np.flatnonzero(np.sign(target) != sg)
        if not flips.size:
            if np.array_equal(target, w[s]):
                break
            w[s] = target
            return w
        ratios = -w[s][flips] / step[flips]
        k = np.argmin(ratios)
        w[s] = w[s] + ratios[k] * step
        w[s[flips[k]]] = 0.0
        moved = True
    return w if moved else None


def _kkt(grad: np.ndarray, w: np.ndarray, lam: float) -> np.ndarray:
    active = w != 0
    viol = np.where(active, np.abs(grad + lam * np.sign(w)),
                    np.maximum(np.abs(grad) - lam, 0.0))
    if viol.shape[0] == 0:
        return np.zeros(viol.shape[1:])
    return viol.max(axis=0)


def kkt_residual(d, v, omega, lam: float) -> float:
    """Largest violation of the lasso stationarity conditions at ``omega``.

    With g = 2 D^T (D omega - v): an active coordinate needs
    g_j + lam sign(omega_j) = 0, an inactive one |g_j| <= lam.
    """
    d = _dmatrix(d)
    v = as_feature(v)
    omega = np.asarray(omega, dtype=np.float64)
    if v.size != d.shape[0] or omega.size != d.shape[1]:
        raise DimensionMismatch("D, v and omega sizes are inconsistent")
    grad = 2.0 * d.T @ (d @ omega - v)
    return float(_kkt(grad[:, None], omega[:, None], lam)[0])


@dataclass
class L1BatchSolution:
    omega: np.ndarray          # n x q
    iterations: np.ndarray
    kkt_residual: np.ndarray
    converged: np.ndarray
    objective: np.ndarray

    def column(self, j: int) -> L1Solution:
        return L1Solution(self.omega[:, j].copy(), int(self.iterations[j]),
                          float(self.kkt_residual[j]), bool(self.converged[j]),
                          float(self.objective[j]))


def solve_l1_batch(d, v: np.ndarray, settings: L1Settings,
                   history: list | None = None) -> L1BatchSolution:
    """Solve one lasso problem per column of ``v`` (m x q) from zero.

    Iterates in coefficient space on the Gram matrix G = D^T D, so one
    n x n product per iteration yields the gradient, the objective and the
    KKT residual.
    """
    d = _dmatrix(d)
    v = as_matrix(v, "V")
    if v.shape[0] != d.shape[0]:
        raise DimensionMismatch(f"queries have dimension {v.shape[0]}, D has {d.shape[0]}")
    lam = settings.lam
    n, q = d.shape[1], v.shape[1]

    w = np.zeros((n, q))
    iters = np.zeros(q, dtype=np.int64)
    cc = d.T @ v
    vn = np.sum(v * v, axis=0)
    kkt = _kkt(-2.0 * cc, w, lam)
    conv = kkt <= settings.kkt_tol
    big_l = lipschitz(d)
    if big_l == 0.0 or np.all(conv):
        return L1BatchSolution(w, iters, kkt, conv, vn.copy())

    gram = d.T @ d
    idx = np.flatnonzero(~conv)
    c, vq = cc[:, idx], vn[idx]
    x = np.zeros((n, idx.size))
    gx = np.zeros_like(x)
    y, gy = x.copy(), gx.copy()
    t = np.ones(idx.size)
    f = vq.copy()
    step, thr = 1.0 / big_l, lam / big_l
    if history is not None:
        history.append(float(f[0]))

    def objective(z, gz, cols):
        return (vq[cols] - 2.0 * np.sum(z * c[:, cols], axis=0)
                + np.sum(z * gz, axis=0) + lam * np.sum(np.abs(z), axis=0))

    for k in range(1, settings.max_iters + 1):
        every = np.arange(idx.size)
        z = soft_threshold(y - step * 2.0 * (gy - c), thr)
        gz = gram @ z
        fz = objective(z, gz, every)

        up = fz > f
        if np.any(up):
            # momentum overshoot: restart and take a monotone plain step
            z[:, up] = soft_threshold(x[:, up] - step * 2.0 * (gx[:, up] - c[:, up]), thr)
            gz[:, up] = gram @ z[:, up]
            fz[up] = objective(z[:, up], gz[:, up], up)
            t[up] = 1.0

        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        mom = (t - 1.0) / t_new
        y = z + mom * (z - x)
        gy = gz + mom * (gz - gx)
        rel = np.abs(f - fz) / np.maximum(np.abs(f), 1.0)
        x, gx, f, t = z, gz, fz, t_new

        due = rel <= settings.obj_tol
        if k % POLISH_EVERY == 0:
            due[:] = True
        if np.any(due):
            res = _kkt(2.0 * (gx - c), x, lam)
            for j in np.flatnonzero(due & (res > settings.kkt_tol)):
                cand = _polish(gram, c[:, j], x[:, j], lam)
                if cand is None:
                    continue
                gc = gram @ cand
                fc = objective(cand[:, None], gc[:, None], [j])[0]
                if fc <= f[j]:
                    x[:, j], gx[:, j], f[j] = cand, gc, fc
                    y[:, j], gy[:, j], t[j] = cand, gc, 1.0
        if history is not None:
            history.append(float(f[0]))

        res = _kkt(2.0 * (gx - c), x, lam)
        done = res <= settings.kkt_tol
        if k == settings.max_iters:
            done[:] = True
        if np.any(done):
            # a certified iterate sits on the right support; one exact solve
            # there removes the remaining O(kkt_tol) coefficient error
            for j in np.flatnonzero(done & (res <= settings.kkt_tol)):
                cand = _polish(gram, c[:, j], x[:, j], lam, max_rounds=1)
                if cand is None or np.any(np.sign(cand) != np.sign(x[:, j])):
                    continue
                gc = gram @ cand
                fc = objective(cand[:, None], gc[:, None], [j])[0]
                rc = _kkt(2.0 * (gc - c[:, j])[:, None], cand[:, None], lam)[0]
                if rc < res[j] and fc <= f[j] + 1e-13 * max(abs(f[j]), 1.0):
                    x[:, j], res[j] = cand, rc
            gi = idx[done]
            w[:, gi] = x[:, done]
            iters[gi] = k
            kkt[gi] = res[done]
            conv[gi] = res[done] <= settings.kkt_tol
            keep = ~done
            idx, c, vq, x, gx, y, gy, t, f = (idx[keep], c[:, keep], vq[keep], x[:, keep],
                                              gx[:, keep], y[:, keep], gy[:, keep],
                                              t[keep], f[keep])
            if not idx.size:
                break
    r = v - d @ w
    obj = np.sum(r * r, axis=0) + lam * np.sum(np.abs(w), axis=0)
    return L1BatchSolution(w, iters, kkt, conv, obj)


def solve_l1(d, v, settings: L1Settings, record_history: bool = False) -> L1Solution:
    """Certified lasso solution for a single query.

    A run that hits ``max_iters`` returns its last iterate with
    ``converged=False`` instead of raising.
    """
    v = as_feature(v)
    hist = [] if record_history else None
    sol = solve_l1_batch(d, v[:, None], settings, history=hist).column(0)
    if hist is not None:
        sol.history = hist
    return sol
