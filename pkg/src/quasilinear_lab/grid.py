"""Structured grids and staggered (MAC) fields.

Velocity component ``i`` lives on the faces normal to axis ``i``; pressure and
scalar fields live at cell centres.  Along a periodic axis with ``n`` cells a
face-located component stores ``n`` samples (face ``n`` is face ``0``); along a
wall-bounded axis the normal component stores ``n + 1`` samples, including the
two wall faces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import GridError, InvalidFieldError

PERIODIC = "periodic"
NO_SLIP = "no_slip"
PURE_SLIP = "pure_slip"
BC_TAGS = (PERIODIC, NO_SLIP, PURE_SLIP)

VELOCITY = "velocity"
PRESSURE = "pressure"
SCALAR = "scalar"
ROLES = (VELOCITY, PRESSURE, SCALAR)


def default_p(dim: int) -> float:
    """Lebesgue exponent used when none is given (satisfies p > d + 2)."""
    return 5.0 if dim == 2 else 6.0


@dataclass(frozen=True)
class GridSpec:
    """Uniform box ``prod [0, L_a]`` split into ``n_a`` cells per axis.

    ``bc[a]`` holds the ``(low, high)`` boundary tags of axis ``a``.
    """

    dim: int
    n_cells: tuple[int, ...]
    lengths: tuple[float, ...]
    bc: tuple[tuple[str, str], ...]
    p: float = field(default=float("nan"))

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise GridError(f"dim must be 2 or 3, got {self.dim}")
        object.__setattr__(self, "n_cells", tuple(int(n) for n in self.n_cells))
        object.__setattr__(self, "lengths", tuple(float(x) for x in self.lengths))
        object.__setattr__(self, "bc", tuple(tuple(b) for b in self.bc))
        if math.isnan(self.p):
            object.__setattr__(self, "p", default_p(self.dim))
        if len(self.n_cells) != self.dim or len(self.lengths) != self.dim or len(self.bc) != self.dim:
            raise GridError("n_cells, lengths and bc need one entry per axis")
        if any(n < 4 for n in self.n_cells):
            raise GridError(f"need at least 4 cells per axis, got {self.n_cells}")
        if any(not (x > 0 and math.isfinite(x)) for x in self.lengths):
            raise GridError(f"lengths must be positive, got {self.lengths}")
        for lo, hi in self.bc:
            if lo not in BC_TAGS or hi not in BC_TAGS:
                raise GridError(f"unknown boundary tag in {(lo, hi)}")
            if (lo == PERIODIC) != (hi == PERIODIC):
                raise GridError("an axis is either periodic at both ends or bounded at both ends")
        if self.p <= self.dim + 2:
            raise GridError(f"p must exceed d + 2 = {self.dim + 2}, got {self.p}")

    @classmethod
    def periodic_box(cls, dim: int, n: int | Sequence[int], length: float | Sequence[float] = 2 * math.pi,
                     p: float | None = None) -> "GridSpec":
        ns = (n,) * dim if np.isscalar(n) else tuple(n)
        ls = (length,) * dim if np.isscalar(length) else tuple(length)
        return cls(dim, ns, ls, ((PERIODIC, PERIODIC),) * dim, default_p(dim) if p is None else p)

    @classmethod
    def channel(cls, dim: int, n: int | Sequence[int], length: float | Sequence[float] = 2 * math.pi,
                p: float | None = None) -> "GridSpec":
        """Periodic in x (and z); no-slip wall at y = 0, pure-slip wall at y = L."""
        ns = (n,) * dim if np.isscalar(n) else tuple(n)
        ls = (length,) * dim if np.isscalar(length) else tuple(length)
        bc = [(PERIODIC, PERIODIC)] * dim
        bc[1] = (NO_SLIP, PURE_SLIP)
        return cls(dim, ns, ls, tuple(bc), default_p(dim) if p is None else p)

    def with_resolution(self, n_cells: Sequence[int]) -> "GridSpec":
        return GridSpec(self.dim, tuple(n_cells), self.lengths, self.bc, self.p)

    def refined(self, factor: int = 2) -> "GridSpec":
        return self.with_resolution([n * factor for n in self.n_cells])

    @property
    def h(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.lengths, self.n_cells))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    def is_periodic(self, axis: int) -> bool:
        return self.bc[axis][0] == PERIODIC

    @property
    def fully_periodic(self) -> bool:
        return all(self.is_periodic(a) for a in range(self.dim))

    @property
    def wall_axes(self) -> tuple[int, ...]:
        return tuple(a for a in range(self.dim) if not self.is_periodic(a))

    @property
    def cell_shape(self) -> tuple[int, ...]:
        return self.n_cells

    def component_shape(self, i: int) -> tuple[int, ...]:
        return tuple(n + 1 if (a == i and not self.is_periodic(a)) else n
                     for a, n in enumerate(self.n_cells))

    def axis_coords(self, axis: int, staggered: bool) -> np.ndarray:
        """Face coordinates (``staggered``) or cell-centre coordinates along ``axis``."""
        n, h = self.n_cells[axis], self.h[axis]
        if staggered:
            m = n if self.is_periodic(axis) else n + 1
            return np.arange(m) * h
        return (np.arange(n) + 0.5) * h

    def component_coords(self, i: int | None) -> list[np.ndarray]:
        """1-D coordinate arrays for component ``i`` (``None`` = cell centres)."""
        return [self.axis_coords(a, a == i) for a in range(self.dim)]

    def mesh(self, i: int | None) -> list[np.ndarray]:
        return np.meshgrid(*self.component_coords(i), indexing="ij")

    def axis_weights(self, axis: int, staggered: bool) -> np.ndarray:
        h = self.h[axis]
        if staggered and not self.is_periodic(axis):
            w = np.full(self.n_cells[axis] + 1, h)
            w[0] = w[-1] = 0.5 * h
            return w
        return np.full(self.n_cells[axis], h)

    def weights(self, i: int | None) -> np.ndarray:
        """Quadrature weights (cell volumes; half weights on wall faces)."""
        ws = [self.axis_weights(a, a == i) for a in range(self.dim)]
        out = ws[0]
        for w in ws[1:]:
            out = np.multiply.outer(out, w)
        return out


def _shapes(grid: GridSpec, role: str) -> list[tuple[int, ...]]:
    if role == VELOCITY:
        return [grid.component_shape(i) for i in range(grid.dim)]
    return [grid.cell_shape]


@dataclass(frozen=True, eq=False)
class Field:
    """Samples of a velocity, pressure or scalar field on a :class:`GridSpec`."""

    grid: GridSpec
    role: str
    values: tuple[np.ndarray, ...]

    def __post_init__(self):
        if self.role not in ROLES:
            raise InvalidFieldError(f"unknown role {self.role!r}")
        vals = tuple(np.asarray(v, dtype=float) for v in self.values)
        shapes = _shapes(self.grid, self.role)
        if len(vals) != len(shapes) or any(v.shape != s for v, s in zip(vals, shapes)):
            raise InvalidFieldError(
                f"{self.role} field on {self.grid.n_cells} needs shapes {shapes}, "
                f"got {[v.shape for v in vals]}")
        object.__setattr__(self, "values", vals)

    # construction -----------------------------------------------------
    @classmethod
    def zeros(cls, grid: GridSpec, role: str = VELOCITY) -> "Field":
        return cls(grid, role, tuple(np.zeros(s) for s in _shapes(grid, role)))

    @classmethod
    def from_functions(cls, grid: GridSpec, funcs: Sequence[Callable[..., np.ndarray]],
                       role: str = VELOCITY) -> "Field":
        """Sample ``funcs[i](x, y[, z])`` at the locations of component ``i``."""
        if role == VELOCITY:
            vals = []
            for i, f in enumerate(funcs):
                X = grid.mesh(i)
                vals.append(np.broadcast_to(f(*X), X[0].shape).astype(float))
            return cls(grid, role, tuple(vals))
        X = grid.mesh(None)
        return cls(grid, role, (np.broadcast_to(funcs[0](*X), X[0].shape).astype(float),))

    @classmethod
    def from_vector(cls, grid: GridSpec, vec: np.ndarray, role: str = VELOCITY) -> "Field":
        out, start = [], 0
        for s in _shapes(grid, role):
            size = int(np.prod(s))
            out.append(vec[start:start + size].reshape(s))
            start += size
        if start != vec.size:
            raise InvalidFieldError("vector length does not match grid")
        return cls(grid, role, tuple(out))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([v.ravel() for v in self.values])

    def with_values(self, values: Sequence[np.ndarray]) -> "Field":
        return Field(self.grid, self.role, tuple(values))

    def copy(self) -> "Field":
        return self.with_values([v.copy() for v in self.values])

    @property
    def ncomp(self) -> int:
        return len(self.values)

    def is_finite(self) -> bool:
        return all(np.isfinite(v).all() for v in self.values)

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(v))) for v in self.values)

    def _check(self, other: "Field"):
        if other.grid != self.grid or other.role != self.role:
            raise GridError("fields live on different grids or have different roles")

    # arithmetic -------------------------------------------------------
    def __add__(self, other: "Field") -> "Field":
        self._check(other)
        return self.with_values([a + b for a, b in zip(self.values, other.values)])

    def __sub__(self, other: "Field") -> "Field":
        self._check(other)
        return self.with_values([a - b for a, b in zip(self.values, other.values)])

    def __mul__(self, c: float) -> "Field":
        return self.with_values([c * a for a in self.values])

    __rmul__ = __mul__

    def __truediv__(self, c: float) -> "Field":
        return self.with_values([a / c for a in self.values])

    def __neg__(self) -> "Field":
        return self.with_values([-a for a in self.values])

    def __repr__(self) -> str:
        return f"Field(role={self.role!r}, n_cells={self.grid.n_cells}, max|.|={self.max_abs():.3e})"


# ---------------------------------------------------------------------------
# standard fields

def taylor_green(grid: GridSpec, t: float = 0.0, mu: float = 0.0, amplitude: float = 1.0) -> Field:
    """Decaying Taylor-Green vortex ``e^{-2 mu t} (cos x sin y, -sin x cos y[, 0])``."""
    a = amplitude * math.exp(-2.0 * mu * t)
    funcs = [lambda *X: a * np.cos(X[0]) * np.sin(X[1]),
             lambda *X: -a * np.sin(X[0]) * np.cos(X[1])]
    if grid.dim == 3:
        funcs.append(lambda *X: np.zeros_like(X[0]))
    return Field.from_functions(grid, funcs)


def random_smooth(grid: GridSpec, rng: np.random.Generator, kmax: int = 3, decay: float = 2.0,
                  role: str = VELOCITY) -> Field:
    """Random trigonometric field with spectrum decaying like ``(1+|k|^2)^(-decay/2)``.

    Coefficients are drawn independently of the resolution, so the same
    generator state yields the same continuum field on every grid.
    """
    ks = np.arange(-kmax, kmax + 1)
    ncomp = grid.dim if role == VELOCITY else 1
    shape = (ncomp,) + (ks.size,) * grid.dim
    kk = np.meshgrid(*([ks] * grid.dim), indexing="ij")
    k2 = sum(k.astype(float) ** 2 for k in kk)
    amp = (1.0 + k2) ** (-decay / 2.0)
    coef = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * amp
    vals = []
    for c in range(ncomp):
        coords = grid.component_coords(c if role == VELOCITY else None)
        phases = [np.exp(1j * np.outer(ks, 2 * math.pi * x / L))
                  for x, L in zip(coords, grid.lengths)]
        if grid.dim == 2:
            v = np.einsum("ab,ai,bj->ij", coef[c], phases[0], phases[1], optimize=True)
        else:
            v = np.einsum("abc,ai,bj,ck->ijk", coef[c], phases[0], phases[1], phases[2], optimize=True)
        vals.append(v.real / ks.size ** (grid.dim / 2))
    return Field(grid, role, tuple(vals))


def restrict(fine: Field, coarse: GridSpec) -> Field:
    """Transfer a field from a grid refined by 2 to ``coarse``.

    Face samples are injected along their normal axis and averaged pairwise
    along the other axes (second-order for staggered layouts).
    """
    if fine.grid.n_cells != tuple(2 * n for n in coarse.n_cells):
        raise GridError("restrict expects a grid refined by exactly 2")
    out = []
    for c, v in enumerate(fine.values):
        i = c if fine.role == VELOCITY else None
        for a in range(coarse.dim):
            if a == i:
                v = np.take(v, np.arange(0, v.shape[a], 2), axis=a)
            else:
                v = 0.5 * (np.take(v, np.arange(0, v.shape[a], 2), axis=a)
                           + np.take(v, np.arange(1, v.shape[a], 2), axis=a))
        out.append(v)
    return Field(coarse, fine.role, tuple(out))
