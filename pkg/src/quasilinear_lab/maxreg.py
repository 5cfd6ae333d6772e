"""Empirical maximal L^p-regularity constants of finite-dimensional operators.

For ``u' + A u = f`` with ``u(t0) = 0`` discretised by implicit Euler with
piecewise-constant forcing, the constant on ``J`` is approximated from below
by

    max_f  |u_f|_E1 / |f|_E0

over a deterministic set of probe forcings followed by hill-climbing.  X0 and
X1 are weighted l^p norms on R^m; E0 and E1 use the same time quadrature as
:mod:`quasilinear_lab.spaces`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, EstimatorError
from .spaces import Trajectory

DEFAULT_STEPS = 200
NOISE_TOL = 0.02
_DENSE_LIMIT = 4000


@dataclass(frozen=True)
class LinearOperatorSpec:
    matrix: np.ndarray
    x0_weight: np.ndarray | None = None
    x1_weight: np.ndarray | None = None

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if A.shape[0] != A.shape[1] or not np.all(np.isfinite(A)):
            raise ConfigError("operator matrix must be square and finite")
        m = A.shape[0]
        w0 = np.ones(m) if self.x0_weight is None else np.broadcast_to(np.asarray(self.x0_weight, float), (m,))
        w1 = np.ones(m) if self.x1_weight is None else np.broadcast_to(np.asarray(self.x1_weight, float), (m,))
        if np.any(w0 <= 0) or np.any(w1 <= 0):
            raise ConfigError("norm weights must be positive")
        object.__setattr__(self, "matrix", A)
        object.__setattr__(self, "x0_weight", np.array(w0))
        object.__setattr__(self, "x1_weight", np.array(w1))

    @classmethod
    def scalar(cls, a: float, w0: float = 1.0, w1: float = 1.0) -> "LinearOperatorSpec":
        return cls(np.array([[float(a)]]), [w0], [w1])

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def xp_weight(self, p: float) -> np.ndarray:
        """Weights of the trace-space norm, geometric between X0 and X1."""
        return self.x0_weight ** (1.0 / p) * self.x1_weight ** (1.0 - 1.0 / p)

    def x0_norm(self, v, p: float) -> float:
        return _wnorm(np.atleast_1d(v), self.x0_weight, p)

    def x1_norm(self, v, p: float) -> float:
        return _wnorm(np.atleast_1d(v), self.x1_weight, p)

    def xp_norm(self, v, p: float) -> float:
        return _wnorm(np.atleast_1d(v), self.xp_weight(p), p)


def _wnorm(v: np.ndarray, w: np.ndarray, p: float):
    """Weighted l^p norm along the last axis."""
    return np.sum(w * np.abs(v) ** p, axis=-1) ** (1.0 / p)


@dataclass(frozen=True)
class MaxRegEstimate:
    interval: tuple[float, float]
    p: float
    value: float
    probes: int
    refinement_gain: float
    best_forcing: np.ndarray | None = field(default=None, repr=False, compare=False)


@dataclass
class OperatorFamily:
    """``eval(t, u_param) -> LinearOperatorSpec`` on a declared parameter box."""

    eval: Callable[[float, np.ndarray], LinearOperatorSpec]
    lipschitz_L: float | None = None
    box: Sequence[tuple[float, float]] | None = None

    def __call__(self, t: float, u) -> LinearOperatorSpec:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if self.box is not None:
            lo = np.array([b[0] for b in self.box])
            hi = np.array([b[1] for b in self.box])
            if np.any(u < lo - 1e-12) or np.any(u > hi + 1e-12):
                raise ConfigError(f"parameter {u} outside the declared box {self.box}")
        return self.eval(t, u)


# ---------------------------------------------------------------------------
# forward solves

def _time_grid(J: Sequence[float], dt: float | None, n_steps: int = DEFAULT_STEPS) -> tuple[float, float, int]:
    t0, t1 = float(J[0]), float(J[1])
    if not t1 > t0:
        raise ConfigError(f"empty interval {J}")
    if dt is None:
        return t0, (t1 - t0) / n_steps, n_steps
    K = int(round((t1 - t0) / dt))
    if K < 1 or abs(K * dt - (t1 - t0)) > 1e-9 * (t1 - t0):
        raise ConfigError(f"dt = {dt} does not divide the interval {J}")
    return t0, float(dt), K


def _step_inverse(op: LinearOperatorSpec, dt: float) -> np.ndarray:
    B = np.eye(op.dimension) + dt * op.matrix
    if np.linalg.cond(B) > 1e12:
        raise EstimatorError("I + dt A is numerically singular")
    return np.linalg.inv(B)


def _march(Binv: np.ndarray, F: np.ndarray, dt: float) -> np.ndarray:
    """States ``u_0 = 0, ..., u_K`` for a batch of forcings ``F`` of shape (..., K, m)."""
    K = F.shape[-2]
    U = np.zeros(F.shape[:-2] + (K + 1, F.shape[-1]))
    for k in range(K):
        U[..., k + 1, :] = (U[..., k, :] + dt * F[..., k, :]) @ Binv.T
    return U


def solve_linear_ivp(op: LinearOperatorSpec, f, J: Sequence[float], dt: float | None = None) -> Trajectory:
    """Implicit Euler for ``u' + A u = f``, ``u(t0) = 0``; ``f`` has shape (K,) or (K, m)."""
    f = np.asarray(f, dtype=float)
    F = f.reshape(-1, op.dimension)
    t0, dt, K = _time_grid(J, dt if dt is not None else (J[1] - J[0]) / F.shape[0])
    if F.shape[0] != K:
        raise ConfigError(f"forcing has {F.shape[0]} samples, the time grid {K}")
    U = _march(_step_inverse(op, dt), F, dt)
    return Trajectory(t0, dt, list(U))


class _RatioEvaluator:
    """Batched ``|u_f|_E1 / |f|_E0`` for one operator and time grid."""

    def __init__(self, op: LinearOperatorSpec, dt: float, K: int, p: float):
        self.op, self.dt, self.K, self.p = op, dt, K, p
        m = op.dimension
        Binv = _step_inverse(op, dt)
        self.Binv = Binv
        self.dense = None
        if K * m <= _DENSE_LIMIT:
            # response of u_1..u_K to unit forcings, columns indexed by (k, i)
            basis = np.eye(K * m).reshape(K * m, K, m)
            self.dense = _march(Binv, basis, dt)[:, 1:, :].reshape(K * m, K * m)

    def states(self, F: np.ndarray) -> np.ndarray:
        if self.dense is None:
            return _march(self.Binv, F, self.dt)
        n = F.shape[0]
        U = (F.reshape(n, -1) @ self.dense).reshape(n, self.K, -1)
        return np.concatenate([np.zeros((n, 1, U.shape[-1])), U], axis=1)

    def e0(self, F: np.ndarray) -> np.ndarray:
        return (self.dt * np.sum(_wnorm(F, self.op.x0_weight, self.p) ** self.p, axis=-1)) ** (1.0 / self.p)

    def e1(self, U: np.ndarray) -> np.ndarray:
        p, dt, op = self.p, self.dt, self.op
        lp = lambda a, w: (dt * np.sum(_wnorm(a, w, p) ** p, axis=-1)) ** (1.0 / p)
        slopes = np.diff(U, axis=1) / dt
        return lp(U[:, :-1], op.x0_weight) + lp(slopes, op.x0_weight) + lp(U[:, :-1], op.x1_weight)

    def ratios(self, F: np.ndarray) -> np.ndarray:
        den = self.e0(F)
        out = np.full(F.shape[0], -np.inf)
        ok = den > 0
        if np.any(ok):
            out[ok] = self.e1(self.states(F[ok])) / den[ok]
        return out


def probe_ratio(op: LinearOperatorSpec, f, J: Sequence[float], p: float) -> float:
    """``|u_f|_E1 / |f|_E0`` for a single forcing."""
    F = np.asarray(f, dtype=float).reshape(-1, op.dimension)
    t0, dt, K = _time_grid(J, (J[1] - J[0]) / F.shape[0])
    r = _RatioEvaluator(op, dt, K, p).ratios(F[None])[0]
    if not np.isfinite(r):
        raise EstimatorError("zero forcing")
    return float(r)


# ---------------------------------------------------------------------------
# probes

def _signal(rng: np.random.Generator, tau: np.ndarray) -> np.ndarray:
    kind = rng.integers(5)
    if kind == 0:
        return np.cos(math.pi * rng.uniform(0, 6) * tau + rng.uniform(0, 2 * math.pi))
    if kind == 1:
        beta = rng.uniform(0, 10)
        return np.exp(-beta * tau) if rng.random() < 0.5 else np.exp(beta * (tau - 1.0))
    if kind == 2:
        c = rng.uniform(0.05, 0.95)
        return (tau < c).astype(float) if rng.random() < 0.5 else (tau > c).astype(float)
    if kind == 3:
        return np.polynomial.legendre.legval(2 * tau - 1, rng.standard_normal(4))
    noise = rng.standard_normal(tau.size)
    width = max(1, int(rng.uniform(0.01, 0.2) * tau.size))
    return np.convolve(noise, np.ones(width) / width, mode="same")


def random_probe(seed: int, j: int, K: int, m: int) -> np.ndarray:
    """Probe ``j`` of the random family; depends on ``(seed, j)`` only."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, j]))
    tau = (np.arange(K) + 0.5) / K
    if m == 1 or rng.random() < 0.5:
        return np.outer(_signal(rng, tau), rng.standard_normal(m))
    return np.stack([_signal(rng, tau) for _ in range(m)], axis=1) * rng.standard_normal(m)


def deterministic_probes(K: int, m: int) -> np.ndarray:
    """Coordinate constants and coordinate impulses at the start, middle and end."""
    out = []
    for i in range(m):
        const = np.zeros((K, m))
        const[:, i] = 1.0
        out.append(const)
        for k in sorted({0, K // 2, K - 1}):
            imp = np.zeros((K, m))
            imp[k, i] = 1.0
            out.append(imp)
    return np.array(out)


def _hill_climb(ev: _RatioEvaluator, f: np.ndarray, value: float, rng: np.random.Generator,
                iterations: int, batch: int) -> tuple[np.ndarray, float]:
    """(1 + batch) ascent with smooth perturbations and adaptive step size."""
    K, m = f.shape
    tau = (np.arange(K) + 0.5) / K
    modes = np.cos(math.pi * np.outer(np.arange(8), tau))  # (8, K)
    decay = 1.0 / (1.0 + np.arange(8))
    sigma = 0.3
    for _ in range(iterations):
        scale = sigma * np.sqrt(np.mean(f**2))
        coef = rng.standard_normal((batch, 8, m)) * decay[None, :, None]
        jumps = np.einsum("bjm,jk->bkm", coef, modes)
        if rng.random() < 0.3:
            jumps = jumps + 0.3 * rng.standard_normal((batch, K, m))
        cand = f[None] + scale * jumps
        r = ev.ratios(cand)
        b = int(np.argmax(r))
        if r[b] > value:
            f, value = cand[b], float(r[b])
            sigma = min(1.0, sigma * 1.5)
        else:
            sigma = max(1e-3, sigma * 0.6)
    return f, value


def estimate_cM(op: LinearOperatorSpec, J: Sequence[float], p: float, n_probes: int, seed: int = 0,
                dt: float | None = None, refine_iters: int = 40, refine_batch: int = 16,
                batch_size: int = 2048) -> MaxRegEstimate:
    """Lower estimate of the discrete maximal-regularity constant of ``op`` on ``J``.

    The first ``n_probes`` random probes are used (nested across ``n_probes``),
    together with the coordinate constants and impulses.  Every probe that sets
    a new running maximum is refined by hill-climbing with a generator seeded
    by its index, so the estimate is non-decreasing in ``n_probes``.
    """
    if n_probes < 1:
        raise EstimatorError("n_probes must be at least 1")
    t0, dt, K = _time_grid(J, dt)
    m = op.dimension
    ev = _RatioEvaluator(op, dt, K, p)

    records: list[tuple[int, np.ndarray, float]] = []
    best = -np.inf

    def scan(F: np.ndarray, ids: Sequence[int]):
        nonlocal best
        r = ev.ratios(F)
        for idx, ratio, f in zip(ids, r, F):
            if ratio > best:
                best = float(ratio)
                records.append((idx, f, best))

    det = deterministic_probes(K, m)
    scan(det, [-(i + 1) for i in range(len(det))])
    for start in range(0, n_probes, batch_size):
        ids = range(start, min(n_probes, start + batch_size))
        scan(np.array([random_probe(seed, j, K, m) for j in ids]), list(ids))
    if not np.isfinite(best):
        raise EstimatorError("all probes were zero")
    initial = best
    best_f = records[-1][1]
    for idx, f, val in records:
        rng = np.random.default_rng(np.random.SeedSequence([seed, idx % (1 << 32), 1]))
        f_ref, v_ref = _hill_climb(ev, f, val, rng, refine_iters, refine_batch)
        if v_ref > best:
            best, best_f = v_ref, f_ref
    return MaxRegEstimate((t0, t0 + dt * K), float(p), float(best), n_probes + len(det),
                          float(best / initial), best_f)


# ---------------------------------------------------------------------------
# scans

@dataclass
class ScanRow:
    t: float
    u_param: tuple[float, ...]
    cM: float
    probes: int
    seed: int
    spread: float = 0.0


@dataclass
class ScanTable:
    rows: list[ScanRow]
    passed: bool
    kappa: float = float("nan")
    grid_max: float = float("nan")
    noise: float = 0.0
    notes: list[str] = field(default_factory=list)

    @property
    def values(self) -> np.ndarray:
        return np.array([r.cM for r in self.rows])

    def write_csv(self, path) -> None:
        n_param = max((len(r.u_param) for r in self.rows), default=0)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t"] + [f"u_param{i}" for i in range(n_param)] + ["cM", "probes", "seed"])
            for r in self.rows:
                w.writerow([repr(r.t)] + [repr(x) for x in r.u_param] + [repr(r.cM), r.probes, r.seed])


def cM_monotonicity_scan(op: LinearOperatorSpec, T_grid: Sequence[float], p: float, n_probes: int = 2000,
                         seed: int = 0, t0: float = 0.0, n_steps: int = DEFAULT_STEPS,
                         tol: float = NOISE_TOL) -> ScanTable:
    """Estimates on ``[t0, t0 + T]`` with one step size ``min(T_grid) / n_steps``."""
    T_grid = [float(T) for T in T_grid]
    if any(b <= a for a, b in zip(T_grid, T_grid[1:])):
        raise ConfigError("T_grid must be increasing")
    dt = T_grid[0] / n_steps
    rows = []
    for T in T_grid:
        K = int(round(T / dt))
        est = estimate_cM(op, (t0, t0 + K * dt), p, n_probes, seed, dt=dt)
        rows.append(ScanRow(T, (), est.value, est.probes, seed))
    vals = [r.cM for r in rows]
    passed = all(b >= a * (1.0 - tol) for a, b in zip(vals, vals[1:]))
    return ScanTable(rows, passed, noise=tol)


def cM_continuity_scan(family: OperatorFamily, param_grid: Sequence, J: Sequence[float], p: float,
                       seeds: Sequence[int] = (0, 1, 2, 3, 4), n_probes: int = 500,
                       dt: float | None = None) -> ScanTable:
    """``c_M(t, u)`` over a parameter grid.

    ``param_grid`` holds ``(t, u)`` pairs.  Each point is estimated with every
    seed; the reported value is the maximum and the seed spread measures the
    estimator noise.  ``kappa`` is the smallest modulus with
    ``|c(q1) - c(q2)| <= kappa |q1 - q2| + 2 noise`` on adjacent points.
    """
    rows, pts = [], []
    noise = 0.0
    for t, u in param_grid:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        op = family(float(t), u)
        vals = [estimate_cM(op, J, p, n_probes, s, dt=dt).value for s in seeds]
        top = max(vals)
        spread = (top - min(vals)) / top if top > 0 else 0.0
        noise = max(noise, spread)
        rows.append(ScanRow(float(t), tuple(float(x) for x in u), top, n_probes, int(seeds[0]), spread))
        pts.append(np.concatenate([[float(t)], u]))
    kappa = 0.0
    for a, b, qa, qb in zip(rows, rows[1:], pts, pts[1:]):
        dist = float(np.linalg.norm(qb - qa))
        excess = abs(b.cM - a.cM) - 2.0 * noise * max(a.cM, b.cM)
        if dist > 0:
            kappa = max(kappa, max(0.0, excess) / dist)
        elif excess > 0:
            kappa = math.inf
    grid_max = max(r.cM for r in rows)
    passed = math.isfinite(kappa) and math.isfinite(grid_max)
    return ScanTable(rows, passed, kappa=kappa, grid_max=grid_max, noise=noise)
