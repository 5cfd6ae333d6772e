"""Frozen-coefficient implicit Euler for ``u' + A(t,u)u = f(t,u)``.

One step solves ``(I + dt A(t, w)) u+ = u + dt f(t, w)`` where the frozen
state ``w`` is ``u`` on the first Picard pass and the previous iterate on the
following ones.  States may be numpy arrays or :class:`~quasilinear_lab.grid.Field`
objects; the engine only needs ``+``, scalar ``*`` and the problem callbacks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .errors import ConfigError, StepBreakdown
from .grid import Field
from .spaces import BLOWUP, COMPLETED, Trajectory


@dataclass(frozen=True)
class StepConfig:
    dt: float
    picard_iters: int = 1
    blowup_threshold: float = 1e6
    linear_tol: float = 1e-10

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.picard_iters < 1:
            raise ConfigError("picard_iters must be at least 1")
        if not self.blowup_threshold > 0 or not self.linear_tol > 0:
            raise ConfigError("blowup_threshold and linear_tol must be positive")


@dataclass
class QuasilinearProblem:
    """Callbacks describing ``A`` and ``f``.

    ``solve_shifted(t, u, rhs, tau, tol)`` must return ``w`` with
    ``|(I + tau A(t,u)) w - rhs| <= tol |rhs|`` or raise
    :class:`~quasilinear_lab.errors.SolverStallError`; it raises
    :class:`~quasilinear_lab.errors.StepBreakdown` when ``I + tau A(t,u)`` has
    lost invertibility.  ``norm_bound``, when given, is a cheap upper bound of
    ``state_norm`` used to skip exact evaluations far below the threshold.
    """

    apply_A: Callable[[float, Any, Any], Any]
    solve_shifted: Callable[..., Any]
    eval_f: Callable[[float, Any], Any]
    state_norm: Callable[[Any], float]
    norm_bound: Callable[[Any], float] | None = None
    name: str = ""


def _finite(u) -> bool:
    if isinstance(u, Field):
        return u.is_finite()
    return bool(np.all(np.isfinite(u)))


def step(prob: QuasilinearProblem, t: float, u, cfg: StepConfig):
    frozen = u
    for _ in range(cfg.picard_iters):
        rhs = u + cfg.dt * prob.eval_f(t, frozen)
        frozen = prob.solve_shifted(t, frozen, rhs, cfg.dt, cfg.linear_tol)
    return frozen


def exceeds_threshold(prob: QuasilinearProblem, u, threshold: float) -> bool:
    if prob.norm_bound is not None and prob.norm_bound(u) <= threshold:
        return False
    return prob.state_norm(u) > threshold


def n_steps(t0: float, T: float, dt: float) -> int:
    if not T > t0:
        raise ConfigError(f"final time {T} must exceed initial time {t0}")
    return int(math.ceil((T - t0) / dt - 1e-9))


def integrate(prob: QuasilinearProblem, u0, t0: float, T: float, cfg: StepConfig,
              observer: Callable[[int, float, Any], None] | None = None) -> Trajectory:
    """March from ``t0`` to ``T`` (rounded up to whole steps), stopping at blow-up.

    Blow-up is declared at the first step whose state norm exceeds the
    threshold (that state is kept), whose state is not finite, or whose
    shifted operator broke down (neither is kept).
    """
    states = [u0]
    u = u0
    dt = cfg.dt
    for k in range(1, n_steps(t0, T, dt) + 1):
        t_new = t0 + k * dt
        try:
            u = step(prob, t0 + (k - 1) * dt, u, cfg)
        except StepBreakdown:
            return Trajectory(t0, dt, states, BLOWUP, t_new, "breakdown")
        if not _finite(u):
            return Trajectory(t0, dt, states, BLOWUP, t_new, "nonfinite")
        states.append(u)
        if observer is not None:
            observer(k, t_new, u)
        if exceeds_threshold(prob, u, cfg.blowup_threshold):
            return Trajectory(t0, dt, states, BLOWUP, t_new, "threshold")
    return Trajectory(t0, dt, states, COMPLETED)


def estimate_existence_time(prob: QuasilinearProblem, u0, cfg: StepConfig, T_max: float,
                            t0: float = 0.0) -> float:
    """Blow-up time estimate, or ``math.inf`` meaning "at least ``T_max``"."""
    traj = integrate(prob, u0, t0, T_max, cfg)
    return traj.blowup_time if traj.blew_up else math.inf


# ---------------------------------------------------------------------------
# finite-dimensional problems

def _as_matrix(a, m: int) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim == 0:
        return a * np.eye(m)
    return a


def matrix_problem(A: Callable[[float, np.ndarray], Any],
                   f: Callable[[float, np.ndarray], Any] | None = None,
                   state_norm: Callable[[np.ndarray], float] | None = None,
                   name: str = "") -> QuasilinearProblem:
    """Quasilinear system on R^m with ``A(t,u)`` an ``m x m`` matrix (or a scalar).

    The shifted solve breaks down once ``I + tau A(t,u)`` has a real eigenvalue
    ``<= 0``: the frozen operator then no longer generates a resolvent at this
    step size.
    """

    def apply_A(t, u, v):
        u = np.atleast_1d(u)
        return _as_matrix(A(t, u), u.size) @ np.atleast_1d(v)

    def solve_shifted(t, u, rhs, tau, tol=1e-10):
        u = np.atleast_1d(u)
        B = np.eye(u.size) + tau * _as_matrix(A(t, u), u.size)
        if u.size == 1:
            if B[0, 0] <= 0.0:
                raise StepBreakdown(f"shifted coefficient {B[0, 0]:.3e} <= 0")
        else:
            ev = np.linalg.eigvals(B)
            if np.any((np.abs(ev.imag) <= 1e-14 * np.abs(ev.real).max()) & (ev.real <= 0.0)):
                raise StepBreakdown("shifted operator has a non-positive real eigenvalue")
        return np.linalg.solve(B, np.atleast_1d(rhs))

    def eval_f(t, u):
        u = np.atleast_1d(u)
        return np.zeros_like(u, dtype=float) if f is None else np.atleast_1d(np.asarray(f(t, u), dtype=float))

    norm = state_norm if state_norm is not None else (lambda u: float(np.max(np.abs(u))))
    return QuasilinearProblem(apply_A, solve_shifted, eval_f, norm, name=name)


def riccati_problem() -> QuasilinearProblem:
    """``u' = u^2`` written as ``A(u) = -u``, ``f = 0``; blows up at ``1/u0``."""
    return matrix_problem(lambda t, u: -u[0], name="riccati")
