"""Carreau-type fluid: viscosity law, quasilinear operator, projection, packaging.

The operator applied to ``v`` with coefficients frozen at ``u`` is, per component,

    -( mu Lap v_i + mu d_i(div v) + sum_{k,j,l} 4 mu' D_ik(u) D_jl(u) d_k D_jl(v) )

with ``mu``, ``mu'`` evaluated at ``s = |D(u)|^2``.  Everything is evaluated on
ghost-padded arrays (see :mod:`quasilinear_lab.stencils`): the Laplacian and the
divergence gradient live on the faces, the ``mu'`` term is formed at cell
centres and averaged to the faces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DomainError, EstimatorError, GridError, ProjectionError
from .evolution import QuasilinearProblem
from .grid import VELOCITY, Field, GridSpec
from .krylov import gmres
from .spaces import divergence_norm, x0_norm, x1_norm, xp_norm, xp_upper_bound
from .stencils import (GHOST, cell_to_face, crop, dbackward, dcentral, dforward_face, divergence,
                       face_to_cell, gradient, laplacian_padded, pad_component, pad_velocity,
                       vector_laplacian, zero_wall_normals)
from .transforms import poisson_neumann, shifted_laplacian_solve


# ---------------------------------------------------------------------------
# viscosity law

@dataclass(frozen=True)
class ViscosityLaw:
    """``mu(s) = mu_inf + eta (1 + s)^alpha``; ``alpha=None`` means ``(d - 2) / 2``."""

    mu_inf: float
    eta: float = 0.0
    alpha: float | None = None
    rho: float = 1.0

    def __post_init__(self):
        if not self.mu_inf > 0:
            raise ConfigError(f"mu_inf must be positive, got {self.mu_inf}")
        if not self.eta >= 0:
            raise ConfigError(f"eta must be non-negative, got {self.eta}")
        if not self.rho > 0:
            raise ConfigError(f"rho must be positive, got {self.rho}")

    def exponent(self, dim: int | None = None) -> float:
        if self.alpha is not None:
            return float(self.alpha)
        if dim is None:
            raise ConfigError("alpha defaults to (d - 2)/2; the dimension is required")
        return (dim - 2) / 2.0

    def resolved(self, dim: int) -> "ViscosityLaw":
        return replace(self, alpha=self.exponent(dim))

    def with_eta(self, eta: float) -> "ViscosityLaw":
        return replace(self, eta=eta)

    @property
    def newtonian(self) -> bool:
        return self.eta == 0.0


def _mu_parts(law: ViscosityLaw, s, dim: int | None):
    """Shear-dependent parts ``eta (1+s)^alpha`` and its derivative."""
    alpha = law.exponent(dim)
    if law.eta == 0.0:
        z = np.zeros_like(np.asarray(s, dtype=float))
        return z, z
    base = 1.0 + np.asarray(s, dtype=float)
    return law.eta * base**alpha, law.eta * alpha * base ** (alpha - 1.0)


def viscosity(law: ViscosityLaw, s, dim: int | None = None):
    """Return ``(mu(s), mu'(s))``; ``s`` may be a scalar or an array."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0):
        raise DomainError("viscosity is defined for s >= 0 only")
    shear, dshear = _mu_parts(law, s_arr, dim)
    mu, mup = law.mu_inf + shear, dshear
    if np.ndim(s) == 0:
        return float(mu), float(mup)
    return mu, mup


def check_ellipticity(law: ViscosityLaw, dim: int, s_max: float = 1e4, n: int = 10_000) -> float:
    """Minimum of ``min(mu, mu + 2 s mu')`` over ``[0] + logspace(-6, log10 s_max)``.

    Raises :class:`DomainError` if it is not positive.
    """
    s = np.concatenate([[0.0], np.logspace(-6, math.log10(s_max), n - 1)])
    mu, mup = viscosity(law, s, dim)
    worst = float(min(np.min(mu), np.min(mu + 2.0 * s * mup)))
    if not worst > 0:
        raise DomainError(f"ellipticity lost: min(mu, mu + 2 s mu') = {worst:.3e}")
    return worst


# ---------------------------------------------------------------------------
# deformation tensor

@dataclass(frozen=True, eq=False)
class TensorField:
    """Symmetric ``d x d`` tensor samples at cell centres, shape ``(d, d, *cells)``."""

    grid: GridSpec
    components: np.ndarray

    @property
    def squared_norm(self) -> np.ndarray:
        return np.sum(self.components**2, axis=(0, 1))

    def __getitem__(self, ij) -> np.ndarray:
        return self.components[ij]


def _padded_deformation(grid: GridSpec, P: Sequence[np.ndarray]) -> np.ndarray:
    d, h = grid.dim, grid.h
    vc = [face_to_cell(P[i], i) for i in range(d)]
    D = np.empty((d, d) + vc[0].shape)
    for i in range(d):
        D[i, i] = dforward_face(P[i], i, h[i])
        for j in range(i):
            D[i, j] = D[j, i] = 0.5 * (dcentral(vc[i], j, h[j]) + dcentral(vc[j], i, h[i]))
    return D


def _crop_cells(grid: GridSpec, A: np.ndarray, g: int = GHOST) -> np.ndarray:
    lead = A.ndim - grid.dim
    return A[(slice(None),) * lead + tuple(slice(g, g + n) for n in grid.n_cells)]


def deformation_tensor(v: Field) -> TensorField:
    """``D(v) = (grad v + grad v^T)/2`` at cell centres."""
    if v.role != VELOCITY:
        raise GridError("deformation tensor needs a velocity field")
    D = _padded_deformation(v.grid, pad_velocity(v))
    return TensorField(v.grid, _crop_cells(v.grid, D))


# ---------------------------------------------------------------------------
# operator

@dataclass
class OperatorCoefficients:
    """Padded cell fields ``mu``, ``mu'`` and ``D(u)`` frozen for repeated applications."""

    grid: GridSpec
    mu: np.ndarray
    mu_prime: np.ndarray
    Du: np.ndarray
    mu_faces: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if not self.mu_faces:
            self.mu_faces = [crop(self.grid, cell_to_face(self.mu, i), i) for i in range(self.grid.dim)]

    @property
    def has_shear_term(self) -> bool:
        return bool(np.any(self.mu_prime != 0.0))

    @property
    def mu_range(self) -> tuple[float, float]:
        core = _crop_cells(self.grid, self.mu)
        return float(core.min()), float(core.max())


def operator_coefficients(law: ViscosityLaw, u: Field) -> OperatorCoefficients:
    grid = u.grid
    Du = _padded_deformation(grid, pad_velocity(u))
    s = np.sum(Du**2, axis=(0, 1))
    shear, dshear = _mu_parts(law, s, grid.dim)
    return OperatorCoefficients(grid, law.mu_inf + shear, dshear, Du)


def difference_coefficients(law_a: ViscosityLaw, law_b: ViscosityLaw, u: Field) -> OperatorCoefficients:
    """Coefficients of ``A_a(u) - A_b(u)``, formed from coefficient differences."""
    grid = u.grid
    Du = _padded_deformation(grid, pad_velocity(u))
    s = np.sum(Du**2, axis=(0, 1))
    sa, dsa = _mu_parts(law_a, s, grid.dim)
    sb, dsb = _mu_parts(law_b, s, grid.dim)
    return OperatorCoefficients(grid, (law_a.mu_inf - law_b.mu_inf) + (sa - sb), dsa - dsb, Du)


def apply_coefficients(coef: OperatorCoefficients, v: Field) -> Field:
    grid = coef.grid
    if v.grid != grid or v.role != VELOCITY:
        raise GridError("operator and field live on different grids")
    d, h = grid.dim, grid.h
    P = pad_velocity(v)
    div = sum(dforward_face(P[i], i, h[i]) for i in range(d))
    shear_cells = None
    if coef.has_shear_term:
        Dv = _padded_deformation(grid, P)
        # H_k = sum_{j,l} D_jl(u) d_k D_jl(v)
        H = []
        for k in range(d):
            acc = 0.0
            for j in range(d):
                for l in range(j, d):
                    w = 1.0 if j == l else 2.0
                    acc = acc + w * coef.Du[j, l] * dcentral(Dv[j, l], k, h[k])
            H.append(acc)
        shear_cells = [4.0 * coef.mu_prime * sum(coef.Du[i, k] * H[k] for k in range(d))
                       for i in range(d)]
    out = []
    for i in range(d):
        visc = crop(grid, laplacian_padded(P[i], h), i) + crop(grid, dbackward(div, i, h[i]), i)
        comp = coef.mu_faces[i] * visc
        if shear_cells is not None:
            comp = comp + crop(grid, cell_to_face(shear_cells[i], i), i)
        out.append(-comp)
    return zero_wall_normals(v.with_values(out))


def apply_An(law: ViscosityLaw, u: Field, v: Field) -> Field:
    """Quasilinear Carreau operator with coefficients frozen at ``u``, applied to ``v``."""
    if u.grid != v.grid:
        raise GridError("u and v live on different grids")
    return apply_coefficients(operator_coefficients(law, u), v)


def apply_An_difference(law_a: ViscosityLaw, law_b: ViscosityLaw, u: Field, v: Field) -> Field:
    """``(A_a(u) - A_b(u)) v`` without cancellation between the two operators."""
    if u.grid != v.grid:
        raise GridError("u and v live on different grids")
    return apply_coefficients(difference_coefficients(law_a, law_b, u), v)


def convective_f(law: ViscosityLaw, v: Field) -> Field:
    """``-rho (v . grad) v`` in advective form on the faces."""
    grid = v.grid
    d, h = grid.dim, grid.h
    P = pad_velocity(v)
    vc = [face_to_cell(P[j], j) for j in range(d)]
    out = []
    for i in range(d):
        adv = 0.0
        for j in range(d):
            vj = P[i] if j == i else cell_to_face(vc[j], i)
            adv = adv + crop(grid, vj, i) * crop(grid, dcentral(P[i], j, h[j]), i)
        out.append(-law.rho * adv)
    return zero_wall_normals(v.with_values(out))


# ---------------------------------------------------------------------------
# projection and boundary conditions

def _l2(v: Field) -> float:
    g = v.grid
    return math.sqrt(sum(float(np.sum(g.weights(i) * c**2)) for i, c in enumerate(v.values)))


def helmholtz_project(w: Field, tol: float = 1e-10) -> tuple[Field, Field]:
    """Split ``w`` into a discretely divergence-free part and a gradient.

    Returns ``(v, grad_p)`` with ``w = v + grad_p`` away from wall-normal faces
    (where ``v`` is set to zero).
    """
    if w.role != VELOCITY:
        raise GridError("projection needs a velocity field")
    w0 = zero_wall_normals(w)
    q = poisson_neumann(w.grid, divergence(w0))
    v = w0 - gradient(w.grid, q)
    residual = divergence_norm(v)
    if residual > tol * max(1.0, _l2(w)):
        raise ProjectionError("projection did not reach its tolerance", residual)
    return v, w - v


def project(w: Field, tol: float = 1e-10) -> Field:
    return helmholtz_project(w, tol)[0]


def apply_boundary(v: Field) -> Field:
    """Impose the wall conditions on the stored samples.

    Wall-normal faces are zeroed (no penetration on both wall types).  The
    tangential conditions, ``v = 0`` on no-slip walls and vanishing normal
    derivative on pure-slip walls, are carried by the odd and even mirror
    ghosts of :func:`ghost_extend`.  Identity on fully periodic grids.
    """
    if v.grid.fully_periodic:
        return v
    return zero_wall_normals(v)


def ghost_extend(v: Field, g: int = 1) -> list[np.ndarray]:
    """Components with ``g`` ghost layers honouring the wall conditions."""
    return [pad_component(v.grid, c, i, g) for i, c in enumerate(v.values)]


# ---------------------------------------------------------------------------
# problem packaging

@dataclass
class FluidProblemSpec:
    grid: GridSpec
    law: ViscosityLaw
    initial: Field
    projection_tol: float = 1e-10
    linear_tol: float = 1e-10
    max_linear_iters: int = 200

    def __post_init__(self):
        if self.initial.grid != self.grid or self.initial.role != VELOCITY:
            raise ConfigError("initial datum must be a velocity field on the spec grid")
        if not self.projection_tol > 0:
            raise ConfigError("projection_tol must be positive")
        check_ellipticity(self.law, self.grid.dim)

    def projected_initial(self) -> Field:
        return project(apply_boundary(self.initial), self.projection_tol)


def make_problem(spec: FluidProblemSpec) -> QuasilinearProblem:
    """``A(u) = P A_n(u) / rho`` and ``f(u) = P F(u) / rho`` with an X_p state norm."""
    grid, law, tol = spec.grid, spec.law, spec.projection_tol
    rho = law.rho

    def P(w: Field) -> Field:
        return project(w, tol)

    def apply_A(t, u, v):
        return P(apply_An(law, u, v)) / rho

    def eval_f(t, u):
        return P(convective_f(law, u)) / rho

    def solve_shifted(t, u, rhs, tau, lin_tol=None):
        lin_tol = spec.linear_tol if lin_tol is None else lin_tol
        coef = operator_coefficients(law, u)
        lo, hi = coef.mu_range
        c = tau * 0.5 * (lo + hi) / rho
        scale = tau / rho

        def op(x):
            xf = Field.from_vector(grid, x)
            return (xf + scale * P(apply_coefficients(coef, xf))).to_vector()

        def precondition(r):
            return P(shifted_laplacian_solve(Field.from_vector(grid, r), c)).to_vector()

        x, _ = gmres(op, rhs.to_vector(), precondition, tol=lin_tol, max_iter=spec.max_linear_iters)
        return P(Field.from_vector(grid, x))

    return QuasilinearProblem(apply_A, solve_shifted, eval_f, xp_norm, xp_upper_bound,
                              name=f"carreau(mu_inf={law.mu_inf}, eta={law.eta})")


def heat_problem(grid: GridSpec, mu: float) -> QuasilinearProblem:
    """``u' - mu Lap_h u = 0`` for velocity fields, solved exactly by fast transforms."""
    if not mu > 0:
        raise ConfigError("mu must be positive")

    def apply_A(t, u, v):
        return -mu * vector_laplacian(v)

    def solve_shifted(t, u, rhs, tau, tol=None):
        return shifted_laplacian_solve(zero_wall_normals(rhs), tau * mu)

    def eval_f(t, u):
        return Field.zeros(grid)

    return QuasilinearProblem(apply_A, solve_shifted, eval_f, xp_norm, xp_upper_bound, name="heat")


# ---------------------------------------------------------------------------
# empirical constants

@dataclass(frozen=True)
class LipschitzReport:
    operator_L: float
    forcing_Psi: float
    n_pairs: int
    n_skipped: int


def random_velocity(grid: GridSpec, rng: np.random.Generator, amplitude: float = 1.0,
                    kmax: int = 2, tol: float = 1e-10) -> Field:
    """Divergence-free random smooth field scaled to ``max|v| = amplitude``."""
    from .grid import random_smooth

    v = project(apply_boundary(random_smooth(grid, rng, kmax=kmax)), tol)
    m = v.max_abs()
    return v * (amplitude / m) if m > 0 else v


def lipschitz_report(law: ViscosityLaw, ensemble: Iterable[tuple[Field, Field, Field]],
                     R: float | None = None) -> LipschitzReport:
    """Empirical ``L_R`` of ``u -> A(u)`` in L(X1, X0) and ``Psi_R`` of ``F`` (X_p -> X0)."""
    L = Psi = 0.0
    used = skipped = 0
    for u1, u2, v in ensemble:
        if R is not None and max(xp_norm(u1), xp_norm(u2)) > R:
            raise ConfigError(f"ensemble member exceeds the radius R = {R}")
        du = u1 - u2
        if du.max_abs() == 0.0:
            skipped += 1
            continue
        dxp = xp_norm(du)
        nv = x1_norm(v)
        if nv > 0.0:
            L = max(L, x0_norm(apply_An(law, u1, v) - apply_An(law, u2, v)) / (dxp * nv))
        Psi = max(Psi, x0_norm(convective_f(law, u1) - convective_f(law, u2)) / dxp)
        used += 1
    if used == 0:
        raise EstimatorError("every ensemble pair was coincident")
    return LipschitzReport(L, Psi, used, skipped)


def operator_distance(law_n: ViscosityLaw, law_inf: ViscosityLaw,
                      ensemble: Iterable[tuple[Field, Field]]) -> float:
    """``max |(A_n(u) - A_inf(u)) v|_X0 / |v|_X1`` over the ensemble."""
    best = None
    for u, v in ensemble:
        nv = x1_norm(v)
        if nv == 0.0:
            raise EstimatorError("ensemble direction v must be nonzero")
        r = x0_norm(apply_An_difference(law_n, law_inf, u, v)) / nv
        best = r if best is None else max(best, r)
    if best is None:
        raise EstimatorError("empty ensemble")
    return best
