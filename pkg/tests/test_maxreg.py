"""Maximal-regularity estimator and its scans."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from quasilinear_lab.errors import ConfigError, EstimatorError
from quasilinear_lab.maxreg import (LinearOperatorSpec, OperatorFamily, cM_continuity_scan,
                                    cM_monotonicity_scan, deterministic_probes, estimate_cM, probe_ratio,
                                    random_probe, solve_linear_ivp)
from quasilinear_lab.spaces import derivative_norm, e0_norm

J1 = (0.0, 1.0)


class TestOperatorSpec:
    def test_defaults_and_weights(self):
        op = LinearOperatorSpec(np.eye(3))
        assert op.dimension == 3 and np.array_equal(op.x0_weight, np.ones(3))
        op = LinearOperatorSpec.scalar(2.0, w0=4.0, w1=9.0)
        assert op.xp_weight(2.0)[0] == pytest.approx(6.0)
        assert op.x0_norm([2.0], 2.0) == pytest.approx(4.0)

    @pytest.mark.parametrize("kwargs", [dict(matrix=np.ones((2, 3))), dict(matrix=[[np.nan]]),
                                        dict(matrix=np.eye(2), x0_weight=[1.0, 0.0])])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            LinearOperatorSpec(**kwargs)


class TestLinearIVP:
    def test_zero_forcing(self):
        traj = solve_linear_ivp(LinearOperatorSpec(np.diag([1.0, 3.0])), np.zeros((50, 2)), J1)
        assert all(not s.any() for s in traj.states)

    def test_pure_integration(self):
        traj = solve_linear_ivp(LinearOperatorSpec.scalar(0.0), np.ones(1000), J1)
        assert np.allclose([s[0] for s in traj.states], traj.times, atol=1e-12)

    def test_relaxation(self):
        traj = solve_linear_ivp(LinearOperatorSpec.scalar(1.0), np.ones(1000), J1)
        err = max(abs(s[0] - (1 - math.exp(-t))) for s, t in zip(traj.states, traj.times))
        assert err <= 1e-3

    def test_singular_step(self):
        with pytest.raises(EstimatorError):
            solve_linear_ivp(LinearOperatorSpec.scalar(-10.0), np.ones(10), J1)

    def test_ratio_matches_trajectory_norms(self):
        op = LinearOperatorSpec(np.array([[2.0, 1.0], [0.0, 0.5]]), x1_weight=[3.0, 2.0])
        f = np.random.default_rng(0).standard_normal((40, 2))
        traj = solve_linear_ivp(op, f, J1)
        p = 3.0
        e1 = (e0_norm(traj, lambda v: op.x0_norm(v, p), p) + derivative_norm(traj, lambda v: op.x0_norm(v, p), p)
              + e0_norm(traj, lambda v: op.x1_norm(v, p), p))
        e0f = (np.sum((1 / 40) * op.x0_norm(f, p) ** p)) ** (1 / p)
        assert probe_ratio(op, f, J1, p) == pytest.approx(e1 / e0f, rel=1e-12)


class TestEstimate:
    def test_oracle_scalar_one(self):
        est = estimate_cM(LinearOperatorSpec.scalar(1.0), J1, 2.0, 10_000, seed=0)
        assert est.value == pytest.approx(oracles.MAXREG_A1_J1_K200, rel=0.05)
        assert est.value <= oracles.MAXREG_A1_J1_K200 * (1 + 1e-9)
        assert est.refinement_gain >= 1.0 and est.interval == (0.0, 1.0)

    def test_frozen_oracle_value(self):
        assert oracles.maxreg_oracle(1.0, 1.0, 200) == pytest.approx(oracles.MAXREG_A1_J1_K200, rel=1e-12)

    def test_nested_probe_sets_are_monotone(self):
        op = LinearOperatorSpec(np.array([[1.0, 0.5], [0.0, 2.0]]))
        vals = [estimate_cM(op, J1, 2.0, n, seed=3, refine_iters=5).value for n in (1, 10, 100, 400)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_probes_are_nested(self):
        assert np.array_equal(random_probe(5, 17, 30, 2), random_probe(5, 17, 30, 2))
        assert not np.array_equal(random_probe(5, 17, 30, 2), random_probe(6, 17, 30, 2))

    @settings(max_examples=10, deadline=None)
    @given(c=st.floats(1e-3, 1e3), seed=st.integers(0, 1000))
    def test_forcing_scale_invariance(self, c, seed):
        op = LinearOperatorSpec.scalar(1.5)
        f = random_probe(seed, 0, 50, 1)
        assert probe_ratio(op, c * f, J1, 2.0) == pytest.approx(probe_ratio(op, f, J1, 2.0), rel=1e-12)

    def test_zero_operator_at_least_one(self):
        assert estimate_cM(LinearOperatorSpec.scalar(0.0), J1, 2.0, 100).value >= 1.0

    def test_errors(self):
        with pytest.raises(EstimatorError):
            estimate_cM(LinearOperatorSpec.scalar(1.0), J1, 2.0, 0)
        with pytest.raises(EstimatorError):
            probe_ratio(LinearOperatorSpec.scalar(1.0), np.zeros(20), J1, 2.0)

    def test_deterministic_probes_cover_coordinates(self):
        P = deterministic_probes(10, 2)
        assert np.any(np.all(P[:, :, 1] == 0, axis=1) & np.any(P[:, :, 0] != 0, axis=1))
        assert np.any(np.all(P[:, :, 0] == 0, axis=1) & np.any(P[:, :, 1] != 0, axis=1))

    def test_damping_order_against_oracle(self):
        vals, refs = [], []
        for lam in (1.0, 2.0, 4.0):
            refs.append(oracles.maxreg_oracle(lam, 1.0, 200, starts=4))
            vals.append(estimate_cM(LinearOperatorSpec.scalar(lam), J1, 2.0, 2000).value)
        assert refs[0] >= refs[1] >= refs[2]
        assert vals[0] >= vals[1] >= vals[2]
        for v, r in zip(vals, refs):
            assert v == pytest.approx(r, rel=0.05)


class TestScans:
    def test_monotone_in_T(self, tmp_path):
        table = cM_monotonicity_scan(LinearOperatorSpec.scalar(1.0), (0.5, 1.0, 2.0), 2.0, n_probes=300)
        assert table.passed
        table.write_csv(tmp_path / "m.csv")
        assert (tmp_path / "m.csv").read_text().splitlines()[0] == "t,cM,probes,seed"

    def test_repeated_T_rejected_and_single_entry(self):
        with pytest.raises(ConfigError):
            cM_monotonicity_scan(LinearOperatorSpec.scalar(1.0), (1.0, 1.0), 2.0)
        assert len(cM_monotonicity_scan(LinearOperatorSpec.scalar(1.0), (1.0,), 2.0, n_probes=20).rows) == 1

    def test_same_seed_same_value(self):
        op = LinearOperatorSpec.scalar(1.0)
        a = estimate_cM(op, J1, 2.0, 50, seed=2).value
        assert estimate_cM(op, J1, 2.0, 50, seed=2).value == a

    def test_constant_family(self):
        fam = OperatorFamily(lambda t, u: LinearOperatorSpec.scalar(1.0), box=[(0.0, 1.0)])
        table = cM_continuity_scan(fam, [(0.0, 0.0), (0.0, 0.5), (0.0, 1.0)], J1, 2.0, seeds=(0, 1), n_probes=50)
        assert np.ptp(table.values) == 0.0 and table.kappa == 0.0

    def test_coincident_points_identical(self):
        fam = OperatorFamily(lambda t, u: LinearOperatorSpec.scalar(1 + u[0] ** 2), box=[(0.0, 1.0)])
        table = cM_continuity_scan(fam, [(0.0, 0.3), (0.0, 0.3)], J1, 2.0, seeds=(0,), n_probes=50)
        assert table.rows[0].cM == table.rows[1].cM and math.isfinite(table.kappa)

    def test_quadratic_family(self, tmp_path):
        fam = OperatorFamily(lambda t, u: LinearOperatorSpec.scalar(1 + u[0] ** 2), lipschitz_L=2.0,
                             box=[(0.0, 1.0)])
        grid = [(0.0, u) for u in np.linspace(0, 1, 6)]
        table = cM_continuity_scan(fam, grid, J1, 2.0, seeds=(0, 1), n_probes=100)
        assert table.passed and math.isfinite(table.kappa) and math.isfinite(table.grid_max)
        table.write_csv(tmp_path / "c.csv")
        lines = (tmp_path / "c.csv").read_text().splitlines()
        assert lines[0] == "t,u_param0,cM,probes,seed" and len(lines) == 7

    def test_box_enforced(self):
        fam = OperatorFamily(lambda t, u: LinearOperatorSpec.scalar(1.0), box=[(0.0, 1.0)])
        with pytest.raises(ConfigError):
            fam(0.0, 2.0)
