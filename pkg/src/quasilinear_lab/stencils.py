"""Finite-difference building blocks on the staggered grid.

Operators that need neighbours across walls work on *padded* arrays: every
component is extended by ``g`` ghost layers per side (periodic wrap, or
mirror images whose parity encodes the wall condition) and all stencils are
applied with ``np.roll``.  Rolling contaminates a few outermost layers; the
padding depth ``GHOST`` is larger than the deepest stencil composition used,
and results are cropped back to the physical layout.

Padded index ``k`` along an axis corresponds to cell (or face) ``k - g``.
"""

from __future__ import annotations

import numpy as np

from .grid import NO_SLIP, PURE_SLIP, VELOCITY, Field, GridSpec

GHOST = 4

# mirror parity of the wall-tangential / wall-normal velocity across a wall
_TANGENTIAL_PARITY = {NO_SLIP: -1.0, PURE_SLIP: 1.0}
_NORMAL_PARITY = {NO_SLIP: 1.0, PURE_SLIP: -1.0}


def tangential_parity(tag: str) -> float:
    return _TANGENTIAL_PARITY[tag]


def normal_parity(tag: str) -> float:
    return _NORMAL_PARITY[tag]


def _pad_axis(a: np.ndarray, axis: int, g: int, mode: str, sign_lo: float = 1.0,
              sign_hi: float = 1.0, extra_hi: int = 0) -> np.ndarray:
    width = [(0, 0)] * a.ndim
    width[axis] = (g, g + extra_hi)
    out = np.pad(a, width, mode=mode)
    if sign_lo != 1.0:
        idx = [slice(None)] * a.ndim
        idx[axis] = slice(0, g)
        out[tuple(idx)] *= sign_lo
    if sign_hi != 1.0:
        idx = [slice(None)] * a.ndim
        idx[axis] = slice(out.shape[axis] - g - extra_hi, None)
        out[tuple(idx)] *= sign_hi
    return out


def pad_component(grid: GridSpec, values: np.ndarray, i: int | None, g: int = GHOST) -> np.ndarray:
    """Ghost-extend velocity component ``i`` (``None``: cell-centred scalar, even mirror).

    Along a face axis the padded length is ``n + 2g + 1`` (faces ``-g .. n+g``),
    along a centre axis it is ``n + 2g``.
    """
    out = values
    for a in range(grid.dim):
        lo, hi = grid.bc[a]
        if grid.is_periodic(a):
            out = _pad_axis(out, a, g, "wrap", extra_hi=1 if a == i else 0)
        elif a == i:
            # normal component: mirror about the wall faces (which are stored)
            out = _pad_axis(out, a, g, "reflect", normal_parity(lo), normal_parity(hi))
        elif i is None:
            out = _pad_axis(out, a, g, "symmetric")
        else:
            out = _pad_axis(out, a, g, "symmetric", tangential_parity(lo), tangential_parity(hi))
    return out


def pad_velocity(v: Field, g: int = GHOST) -> list[np.ndarray]:
    return [pad_component(v.grid, c, i, g) for i, c in enumerate(v.values)]


def crop(grid: GridSpec, arr: np.ndarray, i: int | None, g: int = GHOST) -> np.ndarray:
    """Cut the physical samples of component ``i`` out of a padded array."""
    shape = grid.component_shape(i) if i is not None else grid.cell_shape
    return arr[tuple(slice(g, g + m) for m in shape)]


def face_to_cell(P: np.ndarray, axis: int) -> np.ndarray:
    """Average a padded face array to cell centres along ``axis`` (drops one sample)."""
    lo = [slice(None)] * P.ndim
    hi = [slice(None)] * P.ndim
    lo[axis] = slice(0, -1)
    hi[axis] = slice(1, None)
    return 0.5 * (P[tuple(lo)] + P[tuple(hi)])


def dforward_face(P: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Compact difference of a padded face array onto cell centres."""
    return np.diff(P, axis=axis) / h


def cell_to_face(C: np.ndarray, axis: int) -> np.ndarray:
    """Face ``k`` receives the mean of cells ``k-1`` and ``k``."""
    return 0.5 * (np.roll(C, 1, axis) + C)


def dbackward(C: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (C - np.roll(C, 1, axis)) / h


def dcentral(A: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (np.roll(A, -1, axis) - np.roll(A, 1, axis)) / (2.0 * h)


def dsecond(A: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (np.roll(A, -1, axis) - 2.0 * A + np.roll(A, 1, axis)) / (h * h)


def laplacian_padded(A: np.ndarray, h: tuple[float, ...]) -> np.ndarray:
    return sum(dsecond(A, a, h[a]) for a in range(A.ndim))


# ---------------------------------------------------------------------------
# unpadded compact operators (projection, divergence, Laplacian)

def divergence(v: Field) -> np.ndarray:
    """Cell-centred divergence from face differences."""
    grid = v.grid
    out = np.zeros(grid.cell_shape)
    for i, c in enumerate(v.values):
        h = grid.h[i]
        if grid.is_periodic(i):
            out += (np.roll(c, -1, i) - c) / h
        else:
            out += np.diff(c, axis=i) / h
    return out


def gradient(grid: GridSpec, q: np.ndarray) -> Field:
    """Face gradient of a cell-centred scalar; zero normal flux on walls."""
    comps = []
    for i in range(grid.dim):
        h = grid.h[i]
        if grid.is_periodic(i):
            comps.append((q - np.roll(q, 1, i)) / h)
        else:
            inner = np.diff(q, axis=i) / h
            width = [(0, 0)] * grid.dim
            width[i] = (1, 1)
            comps.append(np.pad(inner, width))
    return Field(grid, VELOCITY, tuple(comps))


def zero_wall_normals(v: Field) -> Field:
    vals = [c.copy() for c in v.values]
    for a in v.grid.wall_axes:
        idx = [slice(None)] * v.grid.dim
        idx[a] = [0, -1]
        vals[a][tuple(idx)] = 0.0
    return v.with_values(vals)


def vector_laplacian(v: Field) -> Field:
    """Component-wise 5/7-point Laplacian honouring the wall ghost rules."""
    grid = v.grid
    out = []
    for i, c in enumerate(v.values):
        P = pad_component(grid, c, i, 1)
        out.append(crop(grid, laplacian_padded(P, grid.h), i, 1))
    return zero_wall_normals(v.with_values(out))
