"""Experiment runners: solver verification, viscosity and data limits, abstract
dependence studies and blow-up times.

Every runner returns a report carrying the table rows, per-property verdicts
and per-row flags; :func:`write_report` turns it into CSV plus JSON.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, ClassVar, Sequence

import numpy as np

from .carreau import (FluidProblemSpec, ViscosityLaw, apply_An, convective_f, helmholtz_project,
                      make_problem, operator_distance, project, random_velocity)
from .errors import AssumptionViolation, ConfigError
from .evolution import QuasilinearProblem, StepConfig, estimate_existence_time, integrate, matrix_problem
from .grid import Field, GridSpec, restrict, taylor_green
from .serialize import git_blob_sha1
from .spaces import Trajectory, divergence_norm, e0_norm, e1_norm, x0_norm, xp_norm

# ---------------------------------------------------------------------------
# report plumbing


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return x


@dataclass
class StudyReport:
    """Base for study outputs; subclasses define ``COLUMNS`` and ``table_rows``."""

    COLUMNS: ClassVar[tuple[str, ...]] = ()
    NAME: ClassVar[str] = "study"

    verdicts: dict[str, bool | None] = field(default_factory=dict)
    meta: dict[str, Any] = field(default_factory=dict)

    def table_rows(self) -> list[list]:
        raise NotImplementedError

    def row_flags(self) -> list[dict]:
        return []

    @property
    def passed(self) -> bool:
        return all(v for v in self.verdicts.values() if v is not None)

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for row in self.table_rows():
            w.writerow([_fmt(x) for x in row])
        return buf.getvalue()

    def summary_lines(self) -> list[str]:
        return [f"{name}: {'n/a' if ok is None else ('PASS' if ok else 'FAIL')}"
                for name, ok in self.verdicts.items()]


def write_report(report: StudyReport, out, config_echo: dict | None = None) -> tuple[Path, Path]:
    """Write ``<out>.csv`` and ``<out>.json``; returns both paths."""
    base = Path(out)
    if base.suffix in (".csv", ".json"):
        base = base.with_suffix("")
    base.parent.mkdir(parents=True, exist_ok=True)
    text = report.csv_text()
    csv_path, json_path = base.with_suffix(".csv"), base.with_suffix(".json")
    csv_path.write_text(text)
    doc = {
        "study": report.NAME,
        "config": config_echo or {},
        "content_sha1": git_blob_sha1(text.encode()),
        "columns": list(report.COLUMNS),
        "rows": [dict(zip(report.COLUMNS, r)) for r in report.table_rows()],
        "row_flags": report.row_flags(),
        "verdicts": report.verdicts,
        "passed": report.passed,
        "meta": report.meta,
    }
    json_path.write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")
    return csv_path, json_path


def fit_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    if x.size < 2:
        return math.nan
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def max_divergence(traj: Trajectory) -> float:
    return max(divergence_norm(s) for s in traj.states)


# ---------------------------------------------------------------------------
# manufactured-solution verification

@dataclass
class MMSConfig:
    mu_inf: float = 1.0
    rho: float = 1.0
    p: float = 5.0
    n_levels: Sequence[int] = (16, 32, 64)
    dt_space: float = 5e-5
    t_space: float = 0.05
    n_time: int = 64
    dt_levels: Sequence[float] = (0.04, 0.02, 0.01)
    t_time: float = 1.0
    projection_tol: float = 1e-10
    linear_tol: float = 1e-10
    space_order_min: float = 1.8
    time_order_min: float = 0.9


@dataclass
class MMSRow:
    study: str
    n_cells: int
    dt: float
    t_final: float
    error: float
    ratio: float
    order: float


@dataclass
class MMSTable(StudyReport):
    COLUMNS: ClassVar[tuple[str, ...]] = ("study", "n_cells", "dt", "t_final", "error", "ratio", "order")
    NAME: ClassVar[str] = "mms"

    rows: list[MMSRow] = field(default_factory=list)
    spatial_order: float = math.nan
    temporal_order: float = math.nan
    initial_error: float = math.nan
    max_divergence: float = 0.0

    def table_rows(self):
        return [[r.study, r.n_cells, r.dt, r.t_final, r.error, r.ratio, r.order] for r in self.rows]


def taylor_green_error(grid: GridSpec, mu: float, dt: float, T: float, rho: float = 1.0,
                       projection_tol: float = 1e-10, linear_tol: float = 1e-10) -> tuple[float, float]:
    """X0 error against the decaying Taylor-Green solution and the largest divergence."""
    u0 = taylor_green(grid)
    spec = FluidProblemSpec(grid, ViscosityLaw(mu, 0.0, rho=rho), u0, projection_tol, linear_tol)
    traj = integrate(make_problem(spec), u0, 0.0, T, StepConfig(dt, linear_tol=linear_tol))
    if traj.blew_up:
        raise ConfigError("Taylor-Green run blew up")
    err = x0_norm(traj.states[-1] - taylor_green(grid, traj.final_time, mu))
    return err, max_divergence(traj)


def _orders(kind: str, levels, dts, Ts, errors, factor_of) -> list[MMSRow]:
    rows = []
    for k, (n, dt, T, e) in enumerate(zip(levels, dts, Ts, errors)):
        ratio = errors[k - 1] / e if k else math.nan
        order = math.log(ratio) / math.log(factor_of(k)) if k else math.nan
        rows.append(MMSRow(kind, n, dt, T, e, ratio, order))
    return rows


def run_mms_verification(cfg: MMSConfig = MMSConfig()) -> MMSTable:
    """Observed spatial and temporal orders on the 2-D periodic Taylor-Green vortex."""
    mu, divs = cfg.mu_inf, []
    space_err = []
    for n in cfg.n_levels:
        grid = GridSpec.periodic_box(2, n, p=cfg.p)
        e, d = taylor_green_error(grid, mu, cfg.dt_space, cfg.t_space, cfg.rho, cfg.projection_tol, cfg.linear_tol)
        space_err.append(e)
        divs.append(d)
    grid_t = GridSpec.periodic_box(2, cfg.n_time, p=cfg.p)
    time_err = []
    for dt in cfg.dt_levels:
        e, d = taylor_green_error(grid_t, mu, dt, cfg.t_time, cfg.rho, cfg.projection_tol, cfg.linear_tol)
        time_err.append(e)
        divs.append(d)
    lv = list(cfg.n_levels)
    rows = _orders("space", lv, [cfg.dt_space] * len(lv), [cfg.t_space] * len(lv), space_err,
                   lambda k: lv[k] / lv[k - 1])
    dl = list(cfg.dt_levels)
    rows += _orders("time", [cfg.n_time] * len(dl), dl, [cfg.t_time] * len(dl), time_err,
                    lambda k: dl[k - 1] / dl[k])
    s_orders = [r.order for r in rows if r.study == "space" and not math.isnan(r.order)]
    t_orders = [r.order for r in rows if r.study == "time" and not math.isnan(r.order)]
    s_ratios = [r.ratio for r in rows if r.study == "space" and not math.isnan(r.ratio)]
    t_ratios = [r.ratio for r in rows if r.study == "time" and not math.isnan(r.ratio)]
    g0 = GridSpec.periodic_box(2, lv[0], p=cfg.p)
    initial = x0_norm(taylor_green(g0) - taylor_green(g0, 0.0, mu))
    table = MMSTable(rows=rows, spatial_order=min(s_orders), temporal_order=min(t_orders),
                     initial_error=initial, max_divergence=max(divs))
    table.verdicts = {
        "spatial_order": table.spatial_order >= cfg.space_order_min,
        "temporal_order": table.temporal_order >= cfg.time_order_min,
        "space_ratio_window": all(3.2 <= r <= 4.8 for r in s_ratios),
        "time_ratio_window": all(1.7 <= r <= 2.3 for r in t_ratios),
        "initial_error_zero": initial == 0.0,
        "divergence": table.max_divergence <= 1e-9,
    }
    table.meta = {"spatial_order": table.spatial_order, "temporal_order": table.temporal_order,
                  "max_divergence": table.max_divergence}
    return table


# ---------------------------------------------------------------------------
# viscosity-limit and data-dependence studies

VISCOSITY = "viscosity"
DATA = "data"


@dataclass
class LimitStudyConfig:
    """Sequence of Carreau problems ``(eta_n, v0^n)`` against the ``eta = 0`` reference.

    ``deltas[n]`` scales the fixed divergence-free perturbation added to the
    datum of run ``n``.  The ``data`` study keeps ``eta`` fixed, so the
    sequence is only required to be non-increasing there.
    """

    grid: GridSpec
    law: ViscosityLaw
    eta_sequence: Sequence[float]
    dt: float = 2.5e-3
    T_K: float = 0.5
    deltas: Sequence[float] | None = None
    datum: Callable[[GridSpec], Field] = taylor_green
    perturbation: Callable[[GridSpec], Field] | None = None
    study: str = VISCOSITY
    reference_eta: float = 0.0
    projection_tol: float = 1e-10
    linear_tol: float = 1e-10
    estimate_floor: bool = True
    floor_factor: float = 3.0
    n_ensemble: int = 4
    seed: int = 0
    report_path: str | None = None

    def __post_init__(self):
        etas = [float(e) for e in self.eta_sequence]
        if not etas:
            raise ConfigError("eta_sequence is empty")
        if any(e < 0 for e in etas):
            raise ConfigError("eta values must be non-negative")
        if self.study == VISCOSITY and any(b >= a for a, b in zip(etas, etas[1:])):
            raise ConfigError("eta_sequence must be strictly decreasing")
        if self.study == DATA and any(b > a for a, b in zip(etas, etas[1:])):
            raise ConfigError("eta_sequence must be non-increasing")
        if self.study not in (VISCOSITY, DATA):
            raise ConfigError(f"unknown study kind {self.study!r}")
        if not self.T_K > 0:
            raise ConfigError("T_K must be positive")
        if self.deltas is not None and len(self.deltas) != len(etas):
            raise ConfigError("deltas and eta_sequence must have equal length")
        self.eta_sequence = etas


@dataclass
class ConvergenceRow:
    n: int
    eta_n: float
    data_gap: float
    e1_gap: float
    sup_gap: float
    pressure_gap: float
    op_gap: float
    f_gap: float
    at_floor: bool = False
    blowup: bool = False
    blowup_time: float | None = None


@dataclass
class ConvergenceTable(StudyReport):
    COLUMNS: ClassVar[tuple[str, ...]] = ("n", "eta_n", "data_gap", "e1_gap", "sup_gap", "pressure_gap",
                                          "op_gap", "f_gap")
    NAME: ClassVar[str] = "limit"

    rows: list[ConvergenceRow] = field(default_factory=list)
    slope: float = math.nan
    floor: float = 0.0
    pressure_c: float = math.nan
    max_divergence: float = 0.0

    def table_rows(self):
        return [[r.n, r.eta_n, r.data_gap, r.e1_gap, r.sup_gap, r.pressure_gap, r.op_gap, r.f_gap]
                for r in self.rows]

    def row_flags(self):
        return [{"n": r.n, "at_floor": r.at_floor, "blowup": r.blowup, "blowup_time": r.blowup_time}
                for r in self.rows]

    @property
    def e1_gaps(self) -> np.ndarray:
        return np.array([r.e1_gap for r in self.rows])


def pressure_gradients(law: ViscosityLaw, traj: Trajectory, tol: float = 1e-10) -> Trajectory:
    """``grad pi = (I - P)(F(v) - A(v) v)`` along a trajectory."""
    return traj.map(lambda v: helmholtz_project(convective_f(law, v) - apply_An(law, v, v), tol)[1])


def _run_fluid(grid, law, v0, cfg: LimitStudyConfig, dt=None) -> Trajectory:
    spec = FluidProblemSpec(grid, law, v0, cfg.projection_tol, cfg.linear_tol)
    return integrate(make_problem(spec), v0, 0.0, cfg.T_K, StepConfig(dt or cfg.dt, linear_tol=cfg.linear_tol))


def discretisation_floor(cfg: LimitStudyConfig, ref: Trajectory, law_ref: ViscosityLaw) -> float:
    """E1 distance between the reference and its (2N, dt/2) rerun restricted back."""
    fine_grid = cfg.grid.refined(2)
    fine0 = project(cfg.datum(fine_grid), cfg.projection_tol)
    fine = _run_fluid(fine_grid, law_ref, fine0, cfg, cfg.dt / 2.0)
    if fine.blew_up or len(fine) != 2 * (len(ref) - 1) + 1:
        raise ConfigError("refined reference run did not complete")
    coarse = Trajectory(ref.t0, ref.dt, [restrict(s, cfg.grid) for s in fine.states[::2]])
    return e1_norm(coarse - ref)


def _truncate(a: Trajectory, n: int) -> Trajectory:
    return Trajectory(a.t0, a.dt, a.states[:n])


def run_limit_study(cfg: LimitStudyConfig) -> ConvergenceTable:
    grid = cfg.grid
    law_ref = cfg.law.with_eta(cfg.reference_eta)
    v0_inf = project(cfg.datum(grid), cfg.projection_tol)
    ref = _run_fluid(grid, law_ref, v0_inf, cfg)
    if ref.blew_up:
        raise ConfigError(f"reference run blew up at t = {ref.blowup_time} inside K")
    floor = discretisation_floor(cfg, ref, law_ref) if cfg.estimate_floor else 0.0
    gp_ref = pressure_gradients(law_ref, ref, cfg.projection_tol)
    rng = np.random.default_rng(cfg.seed)
    pick = np.unique(np.linspace(0, len(ref) - 1, cfg.n_ensemble).round().astype(int))
    ensemble = [(ref.states[k], random_velocity(grid, rng)) for k in pick]
    w = None
    if cfg.deltas is not None and any(d != 0 for d in cfg.deltas):
        w = cfg.perturbation(grid) if cfg.perturbation is not None else \
            random_velocity(grid, np.random.default_rng([cfg.seed, 1]))
    divs = [max_divergence(ref)]

    rows = []
    for n, eta in enumerate(cfg.eta_sequence):
        delta = 0.0 if cfg.deltas is None else float(cfg.deltas[n])
        v0 = v0_inf if delta == 0.0 else project(v0_inf + delta * w, cfg.projection_tol)
        law_n = cfg.law.with_eta(eta)
        tr = _run_fluid(grid, law_n, v0, cfg)
        divs.append(max_divergence(tr))
        m = len(tr)
        a, b = _truncate(tr, m), _truncate(ref, m)
        if m >= 2:
            e1_gap = e1_norm(a - b)
            sup_gap = max(xp_norm(x - y) for x, y in zip(a.states, b.states))
            gp = pressure_gradients(law_n, a, cfg.projection_tol)
            pressure_gap = e0_norm(gp - _truncate(gp_ref, m))
        else:
            e1_gap = sup_gap = pressure_gap = math.nan
        op_gap = operator_distance(law_n, law_ref, ensemble)
        f_gap = max(x0_norm(convective_f(law_n, u) - convective_f(law_ref, u)) for u, _ in ensemble)
        rows.append(ConvergenceRow(n, eta, xp_norm(v0 - v0_inf), e1_gap, sup_gap, pressure_gap, op_gap, f_gap,
                                   blowup=tr.blew_up, blowup_time=tr.blowup_time))
    for r in rows:
        r.at_floor = bool(cfg.estimate_floor and r.e1_gap < cfg.floor_factor * floor)

    table = ConvergenceTable(rows=rows, floor=floor, max_divergence=max(divs))
    _limit_verdicts(table, cfg)
    return table


def _limit_verdicts(table: ConvergenceTable, cfg: LimitStudyConfig) -> None:
    rows = [r for r in table.rows if not r.blowup]
    drivers = np.array([r.eta_n + r.data_gap for r in rows])
    gaps = np.array([r.e1_gap for r in rows])
    v: dict[str, bool | None] = {
        "gaps_nonnegative": bool(np.all(np.isfinite(gaps)) and np.all(gaps >= 0)),
        "divergence": table.max_divergence <= 1e-9,
    }
    if np.all(drivers == 0):
        v["zero_drivers_zero_gaps"] = bool(np.all(gaps == 0))
        table.verdicts, table.slope = v, math.nan
        return
    pressure_den = np.array([r.e1_gap + r.op_gap + r.f_gap for r in rows])
    pos = pressure_den > 0
    table.pressure_c = float(np.max([r.pressure_gap for r, ok in zip(rows, pos) if ok] / pressure_den[pos]))
    v["pressure_domination"] = math.isfinite(table.pressure_c)

    fit = [r for r in rows if not r.at_floor and r.e1_gap > 0 and r.eta_n + r.data_gap > 0]
    if len(fit) < 3:
        fit = [r for r in rows if r.e1_gap > 0 and r.eta_n + r.data_gap > 0]
    table.slope = fit_slope([r.eta_n + r.data_gap for r in fit], [r.e1_gap for r in fit])
    if cfg.study == VISCOSITY:
        above = []
        for r in rows:
            if r.at_floor:
                break
            above.append(r.e1_gap)
        v["e1_gap_decreasing"] = all(b < a for a, b in zip(above, above[1:]))
        v["final_gap"] = bool(gaps[-1] <= 1e-3 * gaps[0] or rows[-1].at_floor)
        v["slope_window"] = 0.8 <= table.slope <= 1.2
    else:
        ratios = np.array([r.e1_gap / r.data_gap for r in rows if r.data_gap > 0])
        table.meta["ratio_variation"] = float(ratios.max() / ratios.min()) if ratios.size else math.nan
        v["ratio_variation"] = bool(ratios.size and ratios.max() / ratios.min() < 2.0)
        v["e1_gap_nonincreasing"] = all(b <= a + table.floor for a, b in zip(gaps, gaps[1:]))
    table.verdicts = v
    table.meta.update({"slope": table.slope, "floor": table.floor, "pressure_c": table.pressure_c,
                       "max_divergence": table.max_divergence, "study": cfg.study})


# ---------------------------------------------------------------------------
# abstract dependence study on R^m

def _wnorm(v, w, p) -> float:
    return float(np.sum(w * np.abs(np.atleast_1d(v)) ** p) ** (1.0 / p))


def operator_norm(M: np.ndarray, w0: np.ndarray, w1: np.ndarray, p: float, rng=None, starts: int = 8) -> float:
    """``sup |M v|_X0 / |v|_X1`` for weighted l^p norms.

    Exact (SVD) for ``p = 2`` or ``m = 1``; otherwise the best of a p-norm
    power iteration from several starts (a lower bound).
    """
    M = np.atleast_2d(np.asarray(M, float))
    B = (w0 ** (1.0 / p))[:, None] * M / (w1 ** (1.0 / p))[None, :]
    if B.shape == (1, 1):
        return float(abs(B[0, 0]))
    if p == 2.0:
        return float(np.linalg.norm(B, 2))
    q = p / (p - 1.0)
    dual = lambda x, r: np.sign(x) * np.abs(x) ** (r - 1) / max(np.sum(np.abs(x) ** r) ** ((r - 1) / r), 1e-300)
    rng = rng or np.random.default_rng(0)
    best = 0.0
    for s in range(starts):
        x = np.eye(B.shape[1])[s] if s < B.shape[1] else rng.standard_normal(B.shape[1])
        x /= np.sum(np.abs(x) ** p) ** (1 / p)
        for _ in range(100):
            y = B @ x
            z = B.T @ dual(y, p)
            x_new = dual(z, q)
            nrm = np.sum(np.abs(x_new) ** p) ** (1 / p)
            if nrm == 0:
                break
            x_new /= nrm
            if np.allclose(x_new, x, atol=1e-14):
                x = x_new
                break
            x = x_new
        best = max(best, float(np.sum(np.abs(B @ x) ** p) ** (1 / p)))
    return best


@dataclass
class MatrixFamily:
    """``u' + A(t,u) u = f(t,u)`` on R^m with perturbations ``A + eta E``, ``f + eps g``, ``u0 + delta w``."""

    A: Callable[[float, np.ndarray], Any]
    u0: np.ndarray
    f: Callable[[float, np.ndarray], Any] | None = None
    x0_weight: np.ndarray | None = None
    x1_weight: np.ndarray | None = None
    E: np.ndarray | None = None
    g: Callable[[float, np.ndarray], Any] | None = None
    w: np.ndarray | None = None
    lipschitz_L: float | None = None
    lipschitz_Psi: float | None = None
    radius: float = 1.0

    def __post_init__(self):
        self.u0 = np.atleast_1d(np.asarray(self.u0, float))
        m = self.u0.size
        self.x0_weight = np.ones(m) if self.x0_weight is None else np.asarray(self.x0_weight, float)
        self.x1_weight = np.ones(m) if self.x1_weight is None else np.asarray(self.x1_weight, float)
        self.E = np.eye(m) if self.E is None else np.atleast_2d(np.asarray(self.E, float))
        self.w = np.ones(m) if self.w is None else np.asarray(self.w, float)

    @property
    def m(self) -> int:
        return self.u0.size

    def matrix(self, t, u, eta: float = 0.0) -> np.ndarray:
        a = np.asarray(self.A(t, np.atleast_1d(u)), float)
        a = a * np.eye(self.m) if a.ndim == 0 else np.atleast_2d(a)
        return a + eta * self.E

    def forcing(self, t, u, eps: float = 0.0) -> np.ndarray:
        base = np.zeros(self.m) if self.f is None else np.atleast_1d(np.asarray(self.f(t, u), float))
        if eps == 0.0:
            return base
        g = np.ones(self.m) if self.g is None else np.atleast_1d(np.asarray(self.g(t, u), float))
        return base + eps * g

    def problem(self, eta: float = 0.0, eps: float = 0.0) -> QuasilinearProblem:
        return matrix_problem(lambda t, u: self.matrix(t, u, eta), lambda t, u: self.forcing(t, u, eps))

    def norms(self, p: float):
        x0 = lambda v: _wnorm(v, self.x0_weight, p)
        x1 = lambda v: _wnorm(v, self.x1_weight, p)
        xp = lambda v: _wnorm(v, self.x0_weight ** (1 / p) * self.x1_weight ** (1 - 1 / p), p)
        return x0, x1, xp


@dataclass
class DependenceConfig:
    family: MatrixFamily
    deltas: Sequence[float] = ()
    etas: Sequence[float] = ()
    eps: Sequence[float] = ()
    T: float = 1.0
    dt: float = 1e-3
    p: float = 2.0
    n_samples: int = 200
    seed: int = 0


@dataclass
class DependenceRow:
    n: int
    delta: float
    eta: float
    eps: float
    data_gap: float
    op_gap: float
    f_gap: float
    e1_gap: float


@dataclass
class DependenceTable(StudyReport):
    COLUMNS: ClassVar[tuple[str, ...]] = ("n", "delta", "eta", "eps", "data_gap", "op_gap", "f_gap", "e1_gap")
    NAME: ClassVar[str] = "depend"

    rows: list[DependenceRow] = field(default_factory=list)
    c: float = math.nan
    slope: float = math.nan

    def table_rows(self):
        return [[r.n, r.delta, r.eta, r.eps, r.data_gap, r.op_gap, r.f_gap, r.e1_gap] for r in self.rows]

    @property
    def drivers(self) -> np.ndarray:
        return np.array([r.data_gap + r.op_gap + r.f_gap for r in self.rows])


def _samples(fam: MatrixFamily, cfg: DependenceConfig, rng) -> list[tuple[float, np.ndarray]]:
    out = []
    for _ in range(cfg.n_samples):
        d = rng.standard_normal(fam.m)
        d *= fam.radius * rng.random() ** (1.0 / fam.m) / np.linalg.norm(d)
        out.append((rng.uniform(0.0, cfg.T), fam.u0 + d))
    return out


def check_family_lipschitz(fam: MatrixFamily, cfg: DependenceConfig, margin: float = 0.10) -> dict[str, float]:
    """Sample the Lipschitz quotients of ``A`` (in L(X1,X0)) and ``f``; raise if a declared bound fails."""
    rng = np.random.default_rng([cfg.seed, 7])
    x0, _, xp = fam.norms(cfg.p)
    pts = _samples(fam, cfg, rng)
    L = Psi = 0.0
    for (t, u1), (_, u2) in zip(pts[::2], pts[1::2]):
        du = xp(u1 - u2)
        if du == 0:
            continue
        L = max(L, operator_norm(fam.matrix(t, u1) - fam.matrix(t, u2), fam.x0_weight, fam.x1_weight, cfg.p) / du)
        Psi = max(Psi, x0(fam.forcing(t, u1) - fam.forcing(t, u2)) / du)
    if fam.lipschitz_L is not None and L > (1 + margin) * fam.lipschitz_L:
        raise AssumptionViolation(f"sampled Lipschitz constant of A is {L:.4g} > declared {fam.lipschitz_L:.4g}")
    if fam.lipschitz_Psi is not None and Psi > (1 + margin) * fam.lipschitz_Psi:
        raise AssumptionViolation(f"sampled Lipschitz constant of f is {Psi:.4g} > declared {fam.lipschitz_Psi:.4g}")
    return {"L": L, "Psi": Psi}


def run_dependence_study(cfg: DependenceConfig) -> DependenceTable:
    fam = cfg.family
    n_rows = max(len(cfg.deltas), len(cfg.etas), len(cfg.eps))
    if n_rows == 0:
        raise ConfigError("no perturbation rows given")
    pad = lambda seq: [float(x) for x in seq] + [0.0] * (n_rows - len(seq))
    deltas, etas, eps = pad(cfg.deltas), pad(cfg.etas), pad(cfg.eps)
    sampled = check_family_lipschitz(fam, cfg)
    x0, x1, xp = fam.norms(cfg.p)
    step = StepConfig(cfg.dt)
    ref = integrate(fam.problem(), fam.u0, 0.0, cfg.T, step)
    if ref.blew_up:
        raise ConfigError("reference trajectory blew up inside K")
    pts = _samples(fam, cfg, np.random.default_rng([cfg.seed, 11]))
    rows = []
    for n, (d, e, s) in enumerate(zip(deltas, etas, eps)):
        u0 = fam.u0 + d * fam.w
        tr = integrate(fam.problem(e, s), u0, 0.0, cfg.T, step)
        m = min(len(tr), len(ref))
        gap = e1_norm(_truncate(tr, m) - _truncate(ref, m), x0, x1, cfg.p) if m >= 2 else math.nan
        op_gap = max(operator_norm(fam.matrix(t, u, e) - fam.matrix(t, u), fam.x0_weight, fam.x1_weight, cfg.p)
                     for t, u in pts)
        f_gap = max(x0(fam.forcing(t, u, s) - fam.forcing(t, u)) for t, u in pts)
        rows.append(DependenceRow(n, d, e, s, xp(u0 - fam.u0), op_gap, f_gap, gap))
    table = DependenceTable(rows=rows)
    drv = table.drivers
    gaps = np.array([r.e1_gap for r in rows])
    v: dict[str, bool | None] = {"gaps_finite": bool(np.all(np.isfinite(gaps)))}
    zero = drv == 0
    if np.any(zero):
        v["zero_drivers_zero_gaps"] = bool(np.all(gaps[zero] == 0))
    pos = ~zero & (gaps > 0)
    if np.any(pos):
        ratio = gaps[pos] / drv[pos]
        table.c = float(ratio.max())
        v["domination_stable"] = bool(ratio.max() / ratio.min() < 2.0)
        order = np.argsort(-drv[pos])
        g_sorted = gaps[pos][order]
        v["vanishing"] = bool(np.all(np.diff(g_sorted) <= 0) and
                              g_sorted[-1] <= 2.0 * table.c * drv[pos][order][-1])
        if pos.sum() >= 3:
            table.slope = fit_slope(drv[pos], gaps[pos])
            v["slope_window"] = 0.8 <= table.slope <= 1.2
    table.verdicts = v
    table.meta = {"c": table.c, "slope": table.slope, "sampled_L": sampled["L"], "sampled_Psi": sampled["Psi"]}
    return table


# ---------------------------------------------------------------------------
# blow-up times

@dataclass
class BlowupConfig:
    problem: QuasilinearProblem
    u0_sequence: Sequence[tuple[int, Any]]
    u0_inf: Any
    T_max: float = 2.0
    dt: float = 1e-4
    blowup_threshold: float = 1e6
    tail_size: int | None = None
    closed_form: Callable[[Any], float] | None = None
    closed_form_tol: float = 5e-3


@dataclass
class BlowupRow:
    n: int
    u0: float
    T_n: float
    T_closed: float
    abs_error: float


@dataclass
class BlowupTable(StudyReport):
    COLUMNS: ClassVar[tuple[str, ...]] = ("n", "u0", "T_n", "T_closed", "abs_error")
    NAME: ClassVar[str] = "blowup"

    rows: list[BlowupRow] = field(default_factory=list)
    T_inf: float = math.nan
    limsup: float = math.nan
    inconclusive: bool = False

    def table_rows(self):
        return [[r.n, r.u0, r.T_n, r.T_closed, r.abs_error] for r in self.rows]

    def row_flags(self):
        return [{"n": r.n, "blowup_detected": math.isfinite(r.T_n)} for r in self.rows]


def _scalar_label(u) -> float:
    a = np.atleast_1d(np.asarray(u, float))
    return float(a[0]) if a.size == 1 else float(np.max(np.abs(a)))


def run_blowup_study(cfg: BlowupConfig) -> BlowupTable:
    """Existence-time estimates ``T_n`` and the check ``T_inf <= limsup T_n + 2 dt``.

    The limsup is approximated by the largest ``T_n`` over the trailing
    ``tail_size`` entries of the sequence.
    """
    step = StepConfig(cfg.dt, blowup_threshold=cfg.blowup_threshold)
    rows = []
    for n, u0 in cfg.u0_sequence:
        T = estimate_existence_time(cfg.problem, u0, step, cfg.T_max)
        Tc = cfg.closed_form(u0) if cfg.closed_form is not None else math.nan
        err = abs(T - Tc) if math.isfinite(T) and math.isfinite(Tc) else math.nan
        rows.append(BlowupRow(int(n), _scalar_label(u0), T, Tc, err))
    T_inf = estimate_existence_time(cfg.problem, cfg.u0_inf, step, cfg.T_max)
    tail = rows[-(cfg.tail_size or max(1, len(rows) // 2)):]
    limsup = max(r.T_n for r in tail)
    table = BlowupTable(rows=rows, T_inf=T_inf, limsup=limsup)
    if not any(math.isfinite(r.T_n) for r in rows) and not math.isfinite(T_inf):
        table.inconclusive = True
        table.verdicts = {"limsup_inequality": None, "closed_form": None}
    else:
        table.verdicts = {"limsup_inequality": bool(T_inf <= limsup + 2 * cfg.dt)}
        if cfg.closed_form is not None:
            errs = [r.abs_error for r in rows]
            table.verdicts["closed_form"] = all(math.isfinite(e) and e <= cfg.closed_form_tol for e in errs)
    table.meta = {"T_inf": T_inf, "limsup": limsup, "inconclusive": table.inconclusive,
                  "tail": [r.n for r in tail]}
    return table


def riccati_blowup_config(n_values: Sequence[int] = tuple(range(1, 9)),
                          tail: Sequence[int] = (16, 64, 256, 1024, 4096, 16384),
                          dt: float = 1e-4, T_max: float = 2.0) -> BlowupConfig:
    """``u' = u^2`` with ``u0^n = 1 + 1/n``; the tail entries sharpen the limsup."""
    from .evolution import riccati_problem

    seq = [(n, np.array([1.0 + 1.0 / n])) for n in list(n_values) + list(tail)]
    return BlowupConfig(riccati_problem(), seq, np.array([1.0]), T_max, dt,
                        tail_size=len(tail) if tail else None,
                        closed_form=lambda u0: 1.0 / float(np.atleast_1d(u0)[0]))


# ---------------------------------------------------------------------------
# maximal-regularity constants

@dataclass
class MaxRegStudyConfig:
    a: float = 1.0
    interval: tuple[float, float] = (0.0, 1.0)
    p: float = 2.0
    n_probes: int = 10_000
    T_grid: Sequence[float] = (0.5, 1.0, 2.0)
    u_samples: int = 21
    seeds: Sequence[int] = (0, 1, 2, 3, 4)
    scan_probes: int = 500
    seed: int = 0


@dataclass
class MaxRegReport(StudyReport):
    COLUMNS: ClassVar[tuple[str, ...]] = ("t", "u_param0", "cM", "probes", "seed")
    NAME: ClassVar[str] = "maxreg"

    estimate: Any = None
    monotonicity: Any = None
    continuity: Any = None

    def table_rows(self):
        return [[r.t, r.u_param[0], r.cM, r.probes, r.seed] for r in self.continuity.rows]

    def row_flags(self):
        return [{"u_param0": r.u_param[0], "seed_spread": r.spread} for r in self.continuity.rows]


def run_maxreg_study(cfg: MaxRegStudyConfig) -> MaxRegReport:
    """Scalar constant on ``J``, its monotonicity in ``T`` and continuity for ``A(u) = 1 + u^2``."""
    from .maxreg import (LinearOperatorSpec, OperatorFamily, cM_continuity_scan, cM_monotonicity_scan,
                         estimate_cM)

    op = LinearOperatorSpec.scalar(cfg.a)
    est = estimate_cM(op, cfg.interval, cfg.p, cfg.n_probes, cfg.seed)
    mono = cM_monotonicity_scan(op, cfg.T_grid, cfg.p, seed=cfg.seed)
    fam = OperatorFamily(lambda t, u: LinearOperatorSpec.scalar(1.0 + u[0] ** 2), box=[(0.0, 1.0)])
    grid = [(cfg.interval[0], u) for u in np.linspace(0.0, 1.0, cfg.u_samples)]
    cont = cM_continuity_scan(fam, grid, cfg.interval, cfg.p, seeds=cfg.seeds, n_probes=cfg.scan_probes)
    rep = MaxRegReport(estimate=est, monotonicity=mono, continuity=cont)
    rep.verdicts = {
        "monotone_in_T": mono.passed,
        "kappa_finite": math.isfinite(cont.kappa),
        "grid_max_finite": math.isfinite(cont.grid_max),
    }
    rep.meta = {"cM": est.value, "probes": est.probes, "refinement_gain": est.refinement_gain,
                "monotonicity": [[r.t, r.cM] for r in mono.rows], "kappa": cont.kappa,
                "grid_max": cont.grid_max, "noise": cont.noise}
    return rep
