"""Independent reference implementations used only by the tests."""
import mpmath
import numpy as np


def gauss_solve(a, b):
    """Dense Gaussian elimination with partial pivoting, written out by hand."""
    a = np.array(a, dtype=np.float64)
    b = np.array(b, dtype=np.float64)
    if b.ndim == 1:
        b = b[:, None]
    n = a.shape[0]
    aug = np.hstack([a, b])
    for k in range(n):
        piv = k + int(np.argmax(np.abs(aug[k:, k])))
        if piv != k:
            aug[[k, piv]] = aug[[piv, k]]
        for i in range(k + 1, n):
            f = aug[i, k] / aug[k, k]
            aug[i, k:] -= f * aug[k, k:]
    x = np.zeros((n, b.shape[1]))
    for i in range(n - 1, -1, -1):
        x[i] = (aug[i, n:] - aug[i, i + 1:n] @ x[i + 1:]) / aug[i, i]
    return x


def ridge_oracle(d, v, lam):
    """omega from the normal equations (D^T D + lam I) omega = D^T v."""
    n = d.shape[1]
    return gauss_solve(d.T @ d + lam * np.eye(n), d.T @ v)[:, 0]


def brute_nn(protos, labels, v):
    best, lab = None, None
    for j in range(protos.shape[1]):
        dist = sum((protos[i, j] - v[i]) ** 2 for i in range(v.size))
        if best is None or dist < best:
            best, lab = dist, labels[j]
    return int(lab)


def mp_softmax(z, dps=50):
    with mpmath.workdps(dps):
        e = [mpmath.exp(mpmath.mpf(float(x))) for x in z]
        s = mpmath.fsum(e)
        return np.array([float(x / s) for x in e])



def mp_gauss_solve(a, b):
    """Gaussian elimination with partial pivoting at the current mpmath precision."""
    n = len(a)
    aug = [[mpmath.mpf(x) for x in row] + [mpmath.mpf(y)] for row, y in zip(a, b)]
    for k in range(n):
        piv = max(range(k, n), key=lambda i: abs(aug[i][k]))
        aug[k], aug[piv] = aug[piv], aug[k]
        pk = aug[k]
        for i in range(k + 1, n):
            row = aug[i]
            f = row[k] / pk[k]
            if f:
                for c in range(k, n + 1):
                    row[c] -= f * pk[c]
    x = [mpmath.mpf(0)] * n
    for i in range(n - 1, -1, -1):
        x[i] = (aug[i][n] - mpmath.fsum(aug[i][c] * x[c] for c in range(i + 1, n))) / aug[i][i]
    return x


def mp_ridge_oracle(d, v, lam, dps=40):
    """Normal equations formed and eliminated in ``dps``-digit arithmetic.

    Plain float64 normal equations lose about log10(cond) digits, which at
    lam = 1e-6 is more than the 1e-10 agreement being checked.
    """
    with mpmath.workdps(dps):
        m, n = d.shape
        dm = [[mpmath.mpf(float(d[i, j])) for j in range(n)] for i in range(m)]
        vm = [mpmath.mpf(float(x)) for x in v]
        g = [[mpmath.fsum(dm[r][i] * dm[r][j] for r in range(m)) for j in range(n)]
             for i in range(n)]
        for i in range(n):
            g[i][i] += mpmath.mpf(float(lam))
        rhs = [mpmath.fsum(dm[r][i] * vm[r] for r in range(m)) for i in range(n)]
        return np.array([float(t) for t in mp_gauss_solve(g, rhs)])
