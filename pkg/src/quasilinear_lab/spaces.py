"""Discrete realisations of X0, X1, X_p, E0 and E1 and the inequalities linking them.

* ``x0_norm``: cell-volume weighted L^p norm over all components.
* ``x1_norm``: discrete H^2_p norm, p-th root of the summed p-th powers of the
  L^p norms of the field, all first differences and all second differences.
* ``xp_norm``: W^{2-2/p,p} surrogate ``|u|_0 + |Du|_p + [Du]_{s,p}`` with a
  Gagliardo double sum of order ``s = 1 - 2/p`` over every first difference.
* ``e0_norm`` / ``e1_norm``: time L^p norms (left-endpoint rule) of a
  :class:`Trajectory`; E1 is the sum of the E0 part, the derivative part and
  the L^p(X1) part.

Intersection norms are sums of their parts throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .errors import DivisionGuardError, InvalidFieldError, TrajectoryError
from .gagliardo import gagliardo_sum, kernel_mass
from .grid import VELOCITY, Field, GridSpec
from .stencils import divergence

COMPLETED = "completed"
BLOWUP = "blowup"


@dataclass
class Trajectory:
    """States ``states[k]`` at times ``t0 + k*dt`` plus the run status."""

    t0: float
    dt: float
    states: list[Any]
    status: str = COMPLETED
    blowup_time: float | None = None
    blowup_reason: str | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.states:
            raise TrajectoryError("a trajectory needs at least one state")
        if not self.dt > 0:
            raise TrajectoryError(f"dt must be positive, got {self.dt}")

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.states))

    @property
    def final_time(self) -> float:
        return self.t0 + self.dt * (len(self.states) - 1)

    @property
    def blew_up(self) -> bool:
        return self.status == BLOWUP

    def __len__(self) -> int:
        return len(self.states)

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        if len(self) != len(other) or not math.isclose(self.dt, other.dt, rel_tol=1e-12):
            raise TrajectoryError("trajectories must share their time grid")
        return Trajectory(self.t0, self.dt, [a - b for a, b in zip(self.states, other.states)])

    def map(self, fn: Callable[[Any], Any]) -> "Trajectory":
        return Trajectory(self.t0, self.dt, [fn(s) for s in self.states], self.status,
                          self.blowup_time, self.blowup_reason, dict(self.meta))


@dataclass(frozen=True)
class NormReport:
    x0: float
    x1: float
    xp: float
    interpolation_ratio: float


# ---------------------------------------------------------------------------
# helpers

def _require_finite(u: Field):
    if not u.is_finite():
        raise InvalidFieldError("field contains non-finite samples")


def _lp_sum(a: np.ndarray, w: np.ndarray, p: float) -> float:
    return float(np.sum(w * np.abs(a) ** p))


def _component_index(u: Field, c: int) -> int | None:
    return c if u.role == VELOCITY else None


def first_difference(grid: GridSpec, a: np.ndarray, axis: int) -> np.ndarray:
    """Central first difference; second-order one-sided at walls."""
    h = grid.h[axis]
    if grid.is_periodic(axis):
        return (np.roll(a, -1, axis) - np.roll(a, 1, axis)) / (2.0 * h)
    return np.gradient(a, h, axis=axis, edge_order=2)


def second_difference(grid: GridSpec, a: np.ndarray, axis: int) -> np.ndarray:
    """Compact second difference; second-order one-sided at walls."""
    h = grid.h[axis]
    if grid.is_periodic(axis):
        return (np.roll(a, -1, axis) - 2.0 * a + np.roll(a, 1, axis)) / (h * h)
    a = np.moveaxis(a, axis, 0)
    out = np.empty_like(a)
    out[1:-1] = a[2:] - 2.0 * a[1:-1] + a[:-2]
    out[0] = 2.0 * a[0] - 5.0 * a[1] + 4.0 * a[2] - a[3]
    out[-1] = 2.0 * a[-1] - 5.0 * a[-2] + 4.0 * a[-3] - a[-4]
    return np.moveaxis(out / (h * h), 0, axis)


def _first_differences(u: Field):
    """Yield ``(component, weights, d_a u_c)`` for every component and axis."""
    grid = u.grid
    for c, a_c in enumerate(u.values):
        w = grid.weights(_component_index(u, c))
        for axis in range(grid.dim):
            yield c, w, first_difference(grid, a_c, axis)


# ---------------------------------------------------------------------------
# spatial norms

def x0_norm(u: Field) -> float:
    """Discrete L^p norm of all components."""
    _require_finite(u)
    p = u.grid.p
    total = sum(_lp_sum(a, u.grid.weights(_component_index(u, c)), p) for c, a in enumerate(u.values))
    return total ** (1.0 / p)


def x1_norm(u: Field) -> float:
    """Discrete H^2_p norm (field, first and second differences)."""
    _require_finite(u)
    grid, p = u.grid, u.grid.p
    total = 0.0
    for c, a in enumerate(u.values):
        w = grid.weights(_component_index(u, c))
        total += _lp_sum(a, w, p)
        for j in range(grid.dim):
            dj = first_difference(grid, a, j)
            total += _lp_sum(dj, w, p)
            for k in range(grid.dim):
                djk = second_difference(grid, a, j) if j == k else first_difference(grid, dj, k)
                total += _lp_sum(djk, w, p)
    return total ** (1.0 / p)


def smoothness_order(p: float) -> float:
    return 1.0 - 2.0 / p


def gagliardo_seminorm(grid: GridSpec, g: np.ndarray, w: np.ndarray, p: float | None = None,
                       s: float | None = None) -> float:
    """``(sum_{x!=y} |g(x)-g(y)|^p / |x-y|^(d+sp) w_x w_y)^(1/p)`` on the sample grid of ``g``."""
    p = grid.p if p is None else p
    s = smoothness_order(p) if s is None else s
    periodic = tuple(grid.is_periodic(a) for a in range(grid.dim))
    total = gagliardo_sum(g, w, grid.h, periodic, p, grid.dim + s * p)
    return total ** (1.0 / p)


def xp_parts(u: Field) -> tuple[float, float, float]:
    """``(x0, L^p of first differences, Gagliardo part)`` of the X_p surrogate."""
    _require_finite(u)
    grid, p = u.grid, u.grid.p
    s = smoothness_order(p)
    periodic = tuple(grid.is_periodic(a) for a in range(grid.dim))
    lp_first = 0.0
    frac = 0.0
    for _, w, g in _first_differences(u):
        lp_first += _lp_sum(g, w, p)
        frac += gagliardo_sum(g, w, grid.h, periodic, p, grid.dim + s * p)
    return x0_norm(u), lp_first ** (1.0 / p), frac ** (1.0 / p)


def xp_norm(u: Field) -> float:
    """Sobolev-Slobodeckij surrogate for the trace space W^{2-2/p,p}."""
    return float(sum(xp_parts(u)))


def xp_upper_bound(u: Field) -> float:
    """Cheap bound ``>= xp_norm(u)`` replacing each pair difference by ``2 max|g|``."""
    grid, p = u.grid, u.grid.p
    s = smoothness_order(p)
    periodic = tuple(grid.is_periodic(a) for a in range(grid.dim))
    lp_first = 0.0
    frac = 0.0
    for _, w, g in _first_differences(u):
        lp_first += _lp_sum(g, w, p)
        mass = kernel_mass(g.shape, grid.h, periodic, grid.dim + s * p)
        frac += (2.0 * float(np.max(np.abs(g)))) ** p * mass
    return x0_norm(u) + lp_first ** (1.0 / p) + frac ** (1.0 / p)


def interpolation_check(u: Field) -> float:
    """``xp / (x0^(1/p) * x1^(1-1/p))``; bounded ensembles give an empirical C_p."""
    p = u.grid.p
    a0, a1 = x0_norm(u), x1_norm(u)
    den = a0 ** (1.0 / p) * a1 ** (1.0 - 1.0 / p)
    if den == 0.0:
        raise DivisionGuardError("interpolation ratio of the zero field")
    return xp_norm(u) / den


def norm_report(u: Field) -> NormReport:
    return NormReport(x0_norm(u), x1_norm(u), xp_norm(u),
                      0.0 if x0_norm(u) == 0.0 else interpolation_check(u))


def divergence_norm(u: Field) -> float:
    """Discrete L^2 norm of the staggered divergence."""
    div = divergence(u)
    return math.sqrt(float(np.sum(div**2)) * u.grid.cell_volume)


# ---------------------------------------------------------------------------
# time norms

def _state_p(traj: Trajectory, p: float | None) -> float:
    if p is not None:
        return p
    s = traj.states[0]
    if isinstance(s, Field):
        return s.grid.p
    raise TrajectoryError("exponent p required for non-field trajectories")


def lp_time(values: Sequence[float], dt: float, p: float) -> float:
    """``(sum_k dt * values[k]^p)^(1/p)``."""
    v = np.asarray(values, dtype=float)
    return float(np.sum(dt * v**p) ** (1.0 / p))


def _check_length(traj: Trajectory):
    if len(traj) < 2:
        raise TrajectoryError("time norms need at least two states")


def e0_norm(traj: Trajectory, norm: Callable[[Any], float] = x0_norm, p: float | None = None) -> float:
    """L^p(I; X0) with the left-endpoint rule over ``states[:-1]``."""
    _check_length(traj)
    p = _state_p(traj, p)
    return lp_time([norm(s) for s in traj.states[:-1]], traj.dt, p)


def derivative_norm(traj: Trajectory, norm: Callable[[Any], float] = x0_norm, p: float | None = None) -> float:
    """L^p(I; X0) of the difference quotient.

    The slope of interval ``[t_k, t_k+1]`` is the forward difference at ``t_k``
    (and the backward difference at ``t_k+1``); it is weighted by ``dt``.
    """
    _check_length(traj)
    p = _state_p(traj, p)
    dt = traj.dt
    return lp_time([norm((b - a) / dt) for a, b in zip(traj.states[:-1], traj.states[1:])], dt, p)


def e1_parts(traj: Trajectory, x0: Callable[[Any], float] = x0_norm,
             x1: Callable[[Any], float] = x1_norm, p: float | None = None) -> tuple[float, float, float]:
    return (e0_norm(traj, x0, p), derivative_norm(traj, x0, p), e0_norm(traj, x1, p))


def e1_norm(traj: Trajectory, x0: Callable[[Any], float] = x0_norm,
            x1: Callable[[Any], float] = x1_norm, p: float | None = None) -> float:
    """W^{1,p}(I; X0) cap L^p(I; X1), realised as the sum of the three parts."""
    return float(sum(e1_parts(traj, x0, x1, p)))


def embedding_ratio(traj: Trajectory, xp: Callable[[Any], float] = xp_norm) -> float:
    """``sup_k |u_k|_Xp / (|u_0|_Xp + |u|_E1)``."""
    top = max(xp(s) for s in traj.states)
    den = xp(traj.states[0]) + e1_norm(traj)
    if den == 0.0:
        raise DivisionGuardError("embedding ratio of the zero trajectory")
    return top / den
