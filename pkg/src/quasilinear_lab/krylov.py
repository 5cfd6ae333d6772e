"""Right-preconditioned restarted GMRES on flat vectors.

Right preconditioning keeps the monitored residual equal to the true
residual ``b - A x``, which is what the callers' tolerance contracts refer to.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import SolverStallError


@dataclass
class KrylovInfo:
    iterations: int
    residual: float


def gmres(apply: Callable[[np.ndarray], np.ndarray], b: np.ndarray,
          precondition: Callable[[np.ndarray], np.ndarray] | None = None,
          tol: float = 1e-10, restart: int = 40, max_iter: int = 400,
          x0: np.ndarray | None = None) -> tuple[np.ndarray, KrylovInfo]:
    """Solve ``apply(x) = b`` to relative residual ``tol``.

    Raises :class:`SolverStallError` carrying the final relative residual when
    ``max_iter`` inner iterations do not suffice.
    """
    M = precondition if precondition is not None else (lambda v: v)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros_like(b), KrylovInfo(0, 0.0)
    x = np.zeros_like(b) if x0 is None else x0.copy()
    r = b - apply(x) if x0 is not None else b.copy()
    beta = float(np.linalg.norm(r))
    total = 0
    while True:
        if beta <= tol * bnorm:
            return x, KrylovInfo(total, beta / bnorm)
        if total >= max_iter:
            raise SolverStallError("GMRES did not converge", beta / bnorm)
        m = min(restart, max_iter - total)
        V = np.zeros((m + 1, b.size))
        Z = np.zeros((m, b.size))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        V[0] = r / beta
        k_used = 0
        for k in range(m):
            Z[k] = M(V[k])
            w = apply(Z[k])
            for j in range(k + 1):  # modified Gram-Schmidt
                H[j, k] = np.dot(w, V[j])
                w = w - H[j, k] * V[j]
            H[k + 1, k] = np.linalg.norm(w)
            if H[k + 1, k] > 0.0:
                V[k + 1] = w / H[k + 1, k]
            for j in range(k):  # apply stored Givens rotations
                tmp = cs[j] * H[j, k] + sn[j] * H[j + 1, k]
                H[j + 1, k] = -sn[j] * H[j, k] + cs[j] * H[j + 1, k]
                H[j, k] = tmp
            denom = np.hypot(H[k, k], H[k + 1, k])
            cs[k], sn[k] = (1.0, 0.0) if denom == 0.0 else (H[k, k] / denom, H[k + 1, k] / denom)
            H[k, k] = cs[k] * H[k, k] + sn[k] * H[k + 1, k]
            H[k + 1, k] = 0.0
            g[k + 1] = -sn[k] * g[k]
            g[k] = cs[k] * g[k]
            k_used = k + 1
            total += 1
            if abs(g[k + 1]) <= 0.5 * tol * bnorm or H[k, k] == 0.0:
                break
        y = np.linalg.solve(np.triu(H[:k_used, :k_used]), g[:k_used]) if k_used else np.zeros(0)
        x = x + y @ Z[:k_used]
        r = b - apply(x)
        beta = float(np.linalg.norm(r))
