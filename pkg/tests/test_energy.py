"""Discrete energies, compatible energy, decay residual, maximum principle."""

from __future__ import annotations

import math

import numpy as np
import pytest

from fracphase.energy import (
    compatible_energy,
    decay_residual,
    decay_slack,
    discrete_energy,
    max_principle_check,
    variational_slope,
    write_energy_csv,
)
from fracphase.grid import Field, Grid2D
from fracphase.stepper import RunConfig, Scheme, TimeMesh, Trajectory, run
from fracphase.weights import vartheta_weights


def grid16():
    return Grid2D(0.0, 1.0, 16)


def naive_energy(values, h, eps):
    M = values.shape[0]
    grad = 0.0
    bulk = 0.0
    for j in range(M):
        for k in range(M):
            dxv = (values[(j + 1) % M, k] - values[j, k]) / h
            dyv = (values[j, (k + 1) % M] - values[j, k]) / h
            grad += h * h * (dxv**2 + dyv**2)
            bulk += h * h * (values[j, k] ** 2 - 1.0) ** 2
    return 0.5 * eps**2 * grad + 0.25 * bulk


class TestDiscreteEnergy:
    def test_well_minima_have_zero_energy(self):
        g = grid16()
        for val in (1.0, -1.0):
            assert discrete_energy(Field(g, np.full((16, 16), val)), 0.01) == 0.0

    def test_zero_field_on_unit_square(self):
        g = grid16()
        assert discrete_energy(Field(g, np.zeros((16, 16))), 0.01) == pytest.approx(0.25)

    def test_matches_naive_double_loop(self):
        g = grid16()
        rng = np.random.default_rng(0)
        for _ in range(5):
            vals = rng.uniform(-1.5, 1.5, (16, 16))
            got = discrete_energy(Field(g, vals), 0.07)
            expect = naive_energy(vals, g.h, 0.07)
            assert got == pytest.approx(expect, rel=1e-13)


class TestVariationalSlope:
    def test_well_minimum_is_critical(self):
        g = grid16()
        u = Field(g, np.ones((16, 16)))
        assert np.abs(variational_slope(u, u, 0.01).values).max() < 1e-15

    def test_matches_componentwise_formula(self):
        g = grid16()
        rng = np.random.default_rng(1)
        a = rng.uniform(-1, 1, (16, 16))
        b = rng.uniform(-1, 1, (16, 16))
        eps = 0.05
        got = variational_slope(Field(g, a), Field(g, b), eps).values
        mid = 0.5 * (a + b)
        h2 = g.h**2
        for j, k in ((0, 0), (3, 7), (15, 15), (8, 0)):
            lap = (
                mid[(j + 1) % 16, k]
                + mid[j - 1, k]
                + mid[j, (k + 1) % 16]
                + mid[j, k - 1]
                - 4 * mid[j, k]
            ) / h2
            f = (
                a[j, k] ** 3 / 3
                + 0.5 * b[j, k] ** 2 * a[j, k]
                + b[j, k] ** 3 / 6
                - 0.5 * (a[j, k] + b[j, k])
            )
            assert got[j, k] == pytest.approx(eps**2 * lap - f, rel=1e-12, abs=1e-14)

    def test_steady_state_of_classical_flow_has_zero_slope(self):
        # relax with alpha = 1 until the step increments die out, then the
        # slope at the settled state must vanish to solver tolerance
        g = grid16()
        config = RunConfig(
            1.0, 0.1, g, TimeMesh.uniform(40.0, 400), Scheme.SFTR_HALF, fp_tol=1e-12
        )
        rng = np.random.default_rng(5)
        traj = run(config, Field(g, 0.5 * rng.random((16, 16)) - 0.25))
        last, prev = traj.field(400), traj.field(399)
        assert np.abs(last.values - prev.values).max() < 1e-9
        v = variational_slope(last, prev, 0.1)
        assert np.abs(v.values).max() < 1e-6


def stationary_trajectory(n_steps=4, val=1.0):
    g = grid16()
    config = RunConfig(
        0.5, 0.01, g, TimeMesh.uniform(1.0, n_steps), Scheme.SFTR_HALF
    )
    traj = Trajectory.start(config, Field(g, np.full((16, 16), val)))
    for n in range(1, n_steps + 1):
        traj.stack[n] = traj.stack[0]
        traj.n_done = n
    return traj


class TestCompatibleEnergy:
    def test_initial_value_equals_plain_energy(self):
        traj = stationary_trajectory()
        vth = vartheta_weights(0.5, 4)
        e0 = discrete_energy(traj.field(0), traj.config.eps)
        assert compatible_energy(traj, 0, vth, traj.config.eps) == e0

    def test_zero_slopes_collapse_to_plain_energy(self):
        traj = stationary_trajectory(val=1.0)
        vth = vartheta_weights(0.5, 4)
        for n in range(5):
            assert compatible_energy(traj, n, vth, traj.config.eps) == pytest.approx(
                0.0, abs=1e-12
            )

    def test_alpha_one_reduces_to_uniform_weights(self):
        g = grid16()
        config = RunConfig(1.0, 0.05, g, TimeMesh.uniform(0.5, 10), Scheme.SFTR_HALF)
        rng = np.random.default_rng(3)
        traj = run(config, Field(g, 0.5 * rng.random((16, 16)) - 0.25))
        vth = vartheta_weights(1.0, 10)
        assert np.array_equal(vth.values, np.ones(11))
        tau = config.mesh.tau
        for n in (1, 5, 10):
            slopes = [
                np.sum(
                    variational_slope(traj.field(s), traj.field(s - 1), config.eps).values
                    ** 2
                )
                * g.h**2
                for s in range(1, n + 1)
            ]
            direct = discrete_energy(traj.field(n), config.eps) + 0.5 * tau * sum(slopes)
            got = compatible_energy(traj, n, vth, config.eps)
            assert got == pytest.approx(direct, rel=1e-13)

    def test_monitor_log_matches_recomputation(self):
        g = grid16()
        config = RunConfig(0.6, 0.05, g, TimeMesh.uniform(1.0, 8), Scheme.SFTR_HALF)
        rng = np.random.default_rng(4)
        traj = run(config, Field(g, 0.5 * rng.random((16, 16)) - 0.25))
        vth = vartheta_weights(0.6, 8)
        for rec in traj.monitor.records[1:]:
            fresh = compatible_energy(traj, rec.n, vth, config.eps)
            assert rec.compat_energy == pytest.approx(fresh, rel=1e-12)
            fresh_res = decay_residual(traj, rec.n, vth, config.eps)
            assert rec.decay_residual == pytest.approx(fresh_res, rel=1e-9, abs=1e-14)


class TestDecayResidual:
    def test_stationary_well_minimum_residual_zero(self):
        traj = stationary_trajectory(val=1.0)
        vth = vartheta_weights(0.5, 4)
        for n in range(1, 5):
            assert decay_residual(traj, n, vth, traj.config.eps) == pytest.approx(
                0.0, abs=1e-13
            )

    @pytest.mark.parametrize("alpha", (0.3, 0.6, 0.9))
    def test_coarsening_run_decays(self, alpha):
        g = Grid2D(0.0, 1.0, 32)
        config = RunConfig(alpha, 0.05, g, TimeMesh.uniform(2.0, 40), Scheme.SFTR_HALF)
        rng = np.random.default_rng(6)
        traj = run(config, Field(g, 0.5 * rng.random((32, 32)) - 0.25))
        slack = decay_slack(config.fp_tol, config.mesh.tau, alpha)
        assert traj.monitor.decay_violations(slack) == []
        compat = traj.monitor.column("compat_energy")
        assert np.all(np.diff(compat) <= slack)
        energies = traj.monitor.column("energy")
        assert np.all(compat >= energies - 1e-12)
        assert np.all(energies >= 0.0)

    def test_alpha_one_matches_classical_dissipation(self):
        g = grid16()
        config = RunConfig(1.0, 0.05, g, TimeMesh.uniform(0.5, 20), Scheme.SFTR_HALF)
        rng = np.random.default_rng(7)
        traj = run(config, Field(g, 0.5 * rng.random((16, 16)) - 0.25))
        tau = config.mesh.tau
        slack = decay_slack(config.fp_tol, tau, 1.0)
        for n in range(1, 21):
            e_n = discrete_energy(traj.field(n), config.eps)
            e_nm1 = discrete_energy(traj.field(n - 1), config.eps)
            v = variational_slope(traj.field(n), traj.field(n - 1), config.eps)
            vsq = g.h**2 * float(np.sum(v.values**2))
            assert (e_n - e_nm1) / tau + vsq <= slack

    def test_alpha_near_one_energy_close_to_limit(self):
        # per-step compatible energies at alpha = 0.999 within 1% of alpha = 1
        g = grid16()
        rng_seed = 9

        def compat_curve(alpha):
            config = RunConfig(alpha, 0.05, g, TimeMesh.uniform(0.5, 10), Scheme.SFTR_HALF)
            rng = np.random.default_rng(rng_seed)
            traj = run(config, Field(g, 0.5 * rng.random((16, 16)) - 0.25))
            return traj.monitor.column("compat_energy")

        near, limit = compat_curve(0.999), compat_curve(1.0)
        assert np.all(np.abs(near - limit) <= 0.01 * np.abs(limit))


class TestMaxPrincipleCheck:
    def test_clamped_trajectory_passes(self):
        traj = stationary_trajectory(val=0.8)
        report = max_principle_check(traj)
        assert report.applicable and report.ok
        assert report.first_violation == -1

    def test_injected_violation_flagged(self):
        traj = stationary_trajectory(val=0.8)
        traj.stack[3][5, 5] = 1.0 + 1e-6
        report = max_principle_check(traj)
        assert report.applicable and not report.ok
        assert report.first_violation == 3
        assert report.worst_linf == pytest.approx(1.0 + 1e-6)

    def test_inapplicable_when_initial_data_large(self):
        traj = stationary_trajectory(val=1.5)
        report = max_principle_check(traj)
        assert not report.applicable


class TestEnergyCsv:
    def test_written_columns_and_header(self, tmp_path):
        g = grid16()
        config = RunConfig(0.5, 0.05, g, TimeMesh.uniform(0.5, 5), Scheme.SFTR_HALF)
        rng = np.random.default_rng(2)
        traj = run(config, Field(g, 0.5 * rng.random((16, 16)) - 0.25))
        path = tmp_path / "energy.csv"
        write_energy_csv(path, traj.monitor, {"alpha": 0.5})
        lines = path.read_text().splitlines()
        assert lines[0] == "# alpha = 0.5"
        assert lines[1] == "n,t,linf,E_h,E_c,decay_residual,fp_iters"
        assert len(lines) == 2 + 6  # initial record + 5 steps
        first = lines[2].split(",")
        assert first[0] == "0" and first[5] == "nan"
