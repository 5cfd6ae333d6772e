"""Fast diagonalisation of the constant-coefficient grid Laplacians.

Periodic axes use the FFT.  Along a wall axis the real trigonometric
transform is chosen from the mirror parities of the unknown: cell-centred
samples with (even, even) ghosts diagonalise under DCT-II, (odd, odd) under
DST-II, (odd, even) under DST-IV and (even, odd) under DCT-IV; the wall-normal
component, pinned to zero on both wall faces, is diagonalised by DST-I on the
interior faces.
"""

from __future__ import annotations

import numpy as np
import scipy.fft as sfft

from .grid import VELOCITY, Field, GridSpec
from .stencils import tangential_parity

_CELL_TRANSFORMS = {
    (1.0, 1.0): ("dct", 2, lambda m, n: np.pi * m / (2 * n)),
    (-1.0, -1.0): ("dst", 2, lambda m, n: np.pi * (m + 1) / (2 * n)),
    (-1.0, 1.0): ("dst", 4, lambda m, n: np.pi * (2 * m + 1) / (4 * n)),
    (1.0, -1.0): ("dct", 4, lambda m, n: np.pi * (2 * m + 1) / (4 * n)),
}


def _plan(grid: GridSpec, i: int | None, parity: dict[int, tuple[float, float]] | None = None):
    """Per-axis (kind, type, eigenvalues) for component ``i`` (``None``: Neumann scalar)."""
    plan = []
    for a in range(grid.dim):
        n, h = grid.n_cells[a], grid.h[a]
        if grid.is_periodic(a):
            theta = np.pi * np.arange(n) / n
            plan.append(("fft", 0, -(4.0 / h**2) * np.sin(theta) ** 2))
        elif a == i:
            theta = np.pi * np.arange(1, n) / (2 * n)
            plan.append(("dst", 1, -(4.0 / h**2) * np.sin(theta) ** 2))
        else:
            if i is None:
                par = (parity or {}).get(a, (1.0, 1.0))
            else:
                lo, hi = grid.bc[a]
                par = (tangential_parity(lo), tangential_parity(hi))
            kind, typ, ang = _CELL_TRANSFORMS[par]
            plan.append((kind, typ, -(4.0 / h**2) * np.sin(ang(np.arange(n), n)) ** 2))
    return plan


def _eigen_sum(plan) -> np.ndarray:
    d = len(plan)
    total = 0.0
    for a, (_, _, lam) in enumerate(plan):
        shape = [1] * d
        shape[a] = lam.size
        total = total + lam.reshape(shape)
    return total


def _forward(x: np.ndarray, plan) -> np.ndarray:
    for a, (kind, typ, _) in enumerate(plan):
        if kind == "dct":
            x = sfft.dct(x, type=typ, axis=a, norm="ortho")
        elif kind == "dst":
            x = sfft.dst(x, type=typ, axis=a, norm="ortho")
    per = [a for a, (kind, _, _) in enumerate(plan) if kind == "fft"]
    return sfft.fftn(x, axes=per) if per else x


def _inverse(x: np.ndarray, plan) -> np.ndarray:
    per = [a for a, (kind, _, _) in enumerate(plan) if kind == "fft"]
    if per:
        x = sfft.ifftn(x, axes=per).real
    for a, (kind, typ, _) in enumerate(plan):
        if kind == "dct":
            x = sfft.idct(x, type=typ, axis=a, norm="ortho")
        elif kind == "dst":
            x = sfft.idst(x, type=typ, axis=a, norm="ortho")
    return x


def _interior(grid: GridSpec, i: int | None):
    return tuple(slice(1, -1) if (a == i and not grid.is_periodic(a)) else slice(None)
                 for a in range(grid.dim))


def poisson_neumann(grid: GridSpec, rhs: np.ndarray) -> np.ndarray:
    """Zero-mean solution of ``div grad q = rhs`` with zero normal flux on walls."""
    plan = _plan(grid, None)
    lam = _eigen_sum(plan)
    rhat = _forward(rhs, plan)
    lam = np.where(lam == 0.0, np.inf, lam)
    return _inverse(rhat / lam, plan)


def shifted_laplacian_solve(rhs: Field, coef: float) -> Field:
    """Solve ``(I - coef * Lap_h) w = rhs`` component-wise.

    Wall-normal samples on wall faces are copied from ``rhs``.
    """
    grid = rhs.grid
    out = []
    for c, r in enumerate(rhs.values):
        i = c if rhs.role == VELOCITY else None
        plan = _plan(grid, i)
        lam = _eigen_sum(plan)
        sl = _interior(grid, i)
        w = r.copy()
        w[sl] = _inverse(_forward(r[sl], plan) / (1.0 - coef * lam), plan)
        out.append(w)
    return rhs.with_values(out)
