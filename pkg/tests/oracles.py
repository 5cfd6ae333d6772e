"""Independent reference computations used by the tests.

Nothing here imports the stencil or estimator code under test.
"""

from __future__ import annotations

import itertools

import numpy as np
import sympy as sp

# frozen output of ``maxreg_oracle(1.0, 1.0, 200)`` (multistart power method, p = 2)
MAXREG_A1_J1_K200 = 1.6757185620701103


def maxreg_matrices(a: float, T: float, K: int):
    """Linear maps ``f -> (sqrt(dt) u_k)_{k<K}`` and ``f -> (sqrt(dt) slope_k)`` for scalar ``a``.

    Built from the closed-form solution ``u_k = dt sum_{j<k} b^(k-j) f_j`` with ``b = 1/(1 + dt a)``.
    """
    dt = T / K
    b = 1.0 / (1.0 + dt * a)
    k = np.arange(K + 1)[:, None]
    j = np.arange(K)[None, :]
    U = np.where(j < k, dt * b ** (k - j).clip(min=0), 0.0)  # (K+1, K): u_0..u_K
    S = (U[1:] - U[:-1]) / dt
    return np.sqrt(dt) * U[:-1], np.sqrt(dt) * S, dt


def maxreg_oracle(a: float, T: float, K: int, starts: int = 12, iters: int = 3000, seed: int = 1) -> float:
    """``max_f (|L1 f| + |L2 f| + |L1 f|) / (sqrt(dt) |f|)`` by a multistart power method.

    The stationarity condition of the sum-of-norms quotient is the fixed point of
    ``f <- sum_i L_i^T L_i f / |L_i f|`` after normalisation.
    """
    L1, L2, dt = maxreg_matrices(a, T, K)
    G1, G2 = L1.T @ L1, L2.T @ L2
    rng = np.random.default_rng(seed)
    phi = lambda f: (2 * np.linalg.norm(L1 @ f) + np.linalg.norm(L2 @ f)) / (np.sqrt(dt) * np.linalg.norm(f))
    best = 0.0
    for s in range(starts):
        f = np.ones(K) if s == 0 else rng.standard_normal(K)
        f /= np.linalg.norm(f)
        for _ in range(iters):
            g = 2 * G1 @ f / np.linalg.norm(L1 @ f) + G2 @ f / np.linalg.norm(L2 @ f)
            g /= np.linalg.norm(g)
            if np.linalg.norm(g - f) < 1e-14:
                break
            f = g
        best = max(best, phi(f))
    return best


# ---------------------------------------------------------------------------
# symbolic operators

X3 = sp.symbols("x y z")


def carreau_symbolic(u, v, mu_inf, eta, alpha, X=X3):
    """Component expressions of the Carreau operator with coefficients frozen at ``u``."""
    d = len(u)
    X = X[:d]

    def D(w):
        return [[(sp.diff(w[i], X[j]) + sp.diff(w[j], X[i])) / 2 for j in range(d)] for i in range(d)]

    Du, Dv = D(u), D(v)
    s = sum(Du[i][j] ** 2 for i in range(d) for j in range(d))
    S = sp.Symbol("S", nonnegative=True)
    mu_S = mu_inf + eta * (1 + S) ** alpha
    mu, mup = mu_S.subs(S, s), sp.diff(mu_S, S).subs(S, s)
    div = sum(sp.diff(v[i], X[i]) for i in range(d))
    out = []
    for i in range(d):
        e = mu * sum(sp.diff(v[i], X[k], 2) for k in range(d)) + mu * sp.diff(div, X[i])
        e += sum(4 * mup * Du[i][k] * Du[j][l] * sp.diff(Dv[j][l], X[k])
                 for k, j, l in itertools.product(range(d), repeat=3))
        out.append(-e)
    return out


def convective_symbolic(v, rho, X=X3):
    d = len(v)
    return [-rho * sum(v[j] * sp.diff(v[i], X[j]) for j in range(d)) for i in range(d)]


def lambdify_components(exprs, d: int):
    X = X3[:d]
    fns = []
    for e in exprs:
        f = sp.lambdify(X, e, "numpy")
        fns.append(lambda *c, f=f: np.broadcast_to(f(*c), c[0].shape))
    return fns


# ---------------------------------------------------------------------------
# plain double sum for the fractional seminorm

def gagliardo_bruteforce(g: np.ndarray, h, periodic, p: float, exponent: float) -> float:
    """Python loops over ordered pairs with uniform weights ``prod(h)``."""
    shape = g.shape
    w = float(np.prod(h))
    idx = list(itertools.product(*[range(n) for n in shape]))
    total = 0.0
    for a in idx:
        for b in idx:
            if a == b:
                continue
            r2 = 0.0
            for ax, n in enumerate(shape):
                d = abs(a[ax] - b[ax])
                if periodic[ax]:
                    d = min(d, n - d)
                r2 += (d * h[ax]) ** 2
            total += abs(g[a] - g[b]) ** p * r2 ** (-exponent / 2) * w * w
    return total
