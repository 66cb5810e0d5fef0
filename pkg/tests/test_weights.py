"""Weight families: recurrences vs series oracles, sign structure, quadrature."""

from __future__ import annotations

import math

import numpy as np
import pytest

from fracphase.weights import (
    WeightKind,
    WeightSequence,
    caputo_quadrature_error,
    convolve_prefix,
    fbdf2_weights,
    l21sigma_coefficients,
    l21sigma_offset,
    rl_quadrature_error,
    sftr_weights,
    theta_weights,
    validate,
    vartheta_weights,
)

from series_oracle import (
    fbdf2_series,
    sftr_series,
    theta_series,
    vartheta_series,
)

ALPHAS = (0.1, 0.3, 0.5, 0.7, 0.9)


class TestStartingValues:
    def test_sftr_alpha_one_degenerates(self):
        w = sftr_weights(1.0, 4).values
        assert w == pytest.approx([1.0, -1.0, 0.0, 0.0, 0.0], abs=0.0)

    def test_sftr_alpha_half_closed_forms(self):
        w = sftr_weights(0.5, 1).values
        r = 2 * 0.5 / 1.5
        assert w[0] == pytest.approx(r**0.5, rel=1e-15)
        assert w[1] == pytest.approx(-0.5 * r**1.5, rel=1e-15)
        assert w[0] == pytest.approx(0.816497, abs=5e-7)
        assert w[1] == pytest.approx(-0.272166, abs=5e-7)

    def test_theta_alpha_one(self):
        th = theta_weights(1.0, 4).values
        assert th == pytest.approx([1.0, 0.0, 0.0, 0.0, 0.0], abs=0.0)

    def test_theta_alpha_half_closed_forms(self):
        th = theta_weights(0.5, 2).values
        th0 = 1.5**0.5
        assert th[0] == pytest.approx(th0, rel=1e-15)
        assert th[1] == pytest.approx((-0.5 * 2.0 / 1.5) * th0, rel=1e-15)
        # theta_2 = -(2 a^3 (1-a) / (1+a)^2) theta_0
        assert th[2] == pytest.approx(-(2 * 0.5**3 * 0.5 / 1.5**2) * th0, rel=1e-14)
        assert th[2] == pytest.approx(-0.068041, abs=5e-7)

    def test_vartheta_alpha_one_all_ones(self):
        vth = vartheta_weights(1.0, 6).values
        assert np.array_equal(vth, np.ones(7))

    def test_vartheta_alpha_half_prefix(self):
        vth = vartheta_weights(0.5, 1).values
        assert vth[1] == pytest.approx(0.408248, abs=5e-7)

    def test_fbdf2_alpha_one_polynomial(self):
        w = fbdf2_weights(1.0, 5).values
        assert w == pytest.approx([1.5, -2.0, 0.5, 0.0, 0.0, 0.0], abs=0.0)

    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_fbdf2_leading_value(self, alpha):
        w = fbdf2_weights(alpha, 0).values
        assert w[0] == pytest.approx(1.5**alpha, rel=1e-15)

    @pytest.mark.parametrize("bad", [-0.1, 0.0, 1.0001, 2.0])
    def test_rejects_order_outside_unit_interval(self, bad):
        for fn in (sftr_weights, theta_weights, vartheta_weights, fbdf2_weights):
            with pytest.raises(ValueError):
                fn(bad, 4)

    def test_rejects_negative_count(self):
        with pytest.raises(ValueError):
            sftr_weights(0.5, -1)


class TestSeriesOracles:
    """Recurrences must reproduce the generating-function coefficients."""

    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_sftr_matches_long_division(self, alpha):
        n = 500
        assert np.abs(sftr_weights(alpha, n).values - sftr_series(alpha, n)).max() < 1e-12

    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_theta_matches_binomial_product(self, alpha):
        n = 500
        assert np.abs(theta_weights(alpha, n).values - theta_series(alpha, n)).max() < 1e-12

    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_vartheta_matches_binomial_product(self, alpha):
        n = 500
        assert (
            np.abs(vartheta_weights(alpha, n).values - vartheta_series(alpha, n)).max()
            < 1e-12
        )

    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_fbdf2_matches_factorized_product(self, alpha):
        n = 200
        assert np.abs(fbdf2_weights(alpha, n).values - fbdf2_series(alpha, n)).max() < 1e-12


class TestConvolvePrefix:
    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_omega_theta_collapses_to_one_minus_xi(self, alpha):
        n = 400
        c = convolve_prefix(sftr_weights(alpha, n), theta_weights(alpha, n), n)
        target = np.zeros(n + 1)
        target[0], target[1] = 1.0, -1.0
        assert np.abs(c - target).max() < 1e-12

    def test_zero_factor_gives_zero(self):
        a = sftr_weights(0.5, 10)
        c = convolve_prefix(a, np.zeros(11), 10)
        assert np.array_equal(c, np.zeros(11))

    def test_theta_times_ones_gives_vartheta(self):
        n = 100
        c = convolve_prefix(theta_weights(0.4, n), np.ones(n + 1), n)
        assert np.abs(c - vartheta_weights(0.4, n).values).max() < 1e-13

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            convolve_prefix(sftr_weights(0.5, 3), theta_weights(0.5, 10), 10)

    def test_alpha_mismatch_rejected(self):
        with pytest.raises(ValueError):
            convolve_prefix(sftr_weights(0.5, 10), theta_weights(0.6, 10), 10)


class TestSignStructure:
    ALPHA_GRID = np.round(np.arange(0.05, 0.951, 0.05), 2)

    @pytest.mark.parametrize("alpha", ALPHA_GRID)
    def test_omega_and_theta_invariants(self, alpha):
        n = 10_000
        for fn in (sftr_weights, theta_weights):
            report = validate(fn(alpha, n))
            assert report.ok, report.violations[:3]

    @pytest.mark.parametrize("alpha", ALPHA_GRID)
    def test_vartheta_decreasing_positive(self, alpha):
        report = validate(vartheta_weights(alpha, 10_000))
        assert report.ok, report.violations[:3]

    @pytest.mark.parametrize("alpha", (0.2, 0.5, 0.8))
    def test_vartheta_tail_decay_rate(self, alpha):
        # vartheta_n = O(n^(alpha-1)): loose two-point ratio check
        vth = vartheta_weights(alpha, 4000).values
        for n in (100, 500, 2000):
            ratio = vth[2 * n] / vth[n]
            assert 0.3 < ratio < 1.0

    def test_validator_flags_broken_sequences(self):
        bad = WeightSequence(0.5, WeightKind.SFTR_OMEGA, np.array([1.0, 0.5, -0.1]))
        assert not validate(bad).ok
        bad = WeightSequence(0.5, WeightKind.VARTHETA, np.array([1.0, 1.1, 0.9]))
        assert not validate(bad).ok


class TestQuadratureError:
    def test_alpha_one_is_exact_midpoint_difference(self):
        # weights (1, -1) make the rule the exact midpoint derivative of t^2
        assert caputo_quadrature_error(1.0, 0.05, 1.0) < 1e-12

    def test_worst_node_error_decays_at_order_two_minus_alpha(self):
        # the maximum sits at the first node; frozen behavior of the rule
        for alpha in (0.3, 0.5, 0.7):
            errs = [caputo_quadrature_error(alpha, 1.0 / N, 1.0) for N in (40, 80, 160)]
            rates = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
            for r in rates:
                assert abs(r - (2.0 - alpha)) < 0.15

    def test_fixed_time_error_is_second_order(self):
        # at the last collocation point the error is O(tau^2) for every alpha
        for alpha in (0.3, 0.5, 0.9):
            errs = []
            for N in (40, 80, 160):
                tau = 1.0 / N
                w = sftr_weights(alpha, N).values
                t = tau * np.arange(N + 1)
                phi = t**2
                approx = tau ** (-alpha) * np.dot(w, phi[::-1] - phi[0])
                exact = 2.0 * (1.0 - tau / 2) ** (2 - alpha) / math.gamma(3 - alpha)
                errs.append(abs(approx - exact))
            rates = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
            assert min(rates) > 1.9

    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_vartheta_integral_rule_is_second_order(self, alpha):
        errs = [rl_quadrature_error(alpha, 1.0 / N, 1.0) for N in (40, 80, 160)]
        rates = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
        assert min(rates) > 1.9

    def test_rejects_non_multiple_horizon(self):
        with pytest.raises(ValueError):
            caputo_quadrature_error(0.5, 0.3, 1.0)


class TestL21SigmaCoefficients:
    def test_offset(self):
        assert l21sigma_offset(0.5) == 0.75
        assert l21sigma_offset(1.0) == 0.5

    @staticmethod
    def _max_error(alpha, nodes, phi, dphi_caputo):
        sigma = l21sigma_offset(alpha)
        vals = phi(nodes)
        worst = 0.0
        for n in range(1, len(nodes)):
            coeffs = l21sigma_coefficients(nodes, n, alpha)
            diffs = np.diff(vals[: n + 1])
            approx = float(np.dot(coeffs, diffs[::-1]))
            tc = nodes[n - 1] + sigma * (nodes[n] - nodes[n - 1])
            worst = max(worst, abs(approx - dphi_caputo(tc)))
        return worst

    @pytest.mark.parametrize("alpha", (0.2, 0.5, 0.8))
    @pytest.mark.parametrize("gamma", (1.0, 2.0, 3.0))
    def test_exact_on_linear_functions(self, alpha, gamma):
        nodes = (np.arange(33) / 32.0) ** gamma
        err = self._max_error(
            alpha,
            nodes,
            lambda t: 2.0 * t - 0.0,
            lambda T: 2.0 * T ** (1 - alpha) / math.gamma(2 - alpha),
        )
        assert err < 1e-12

    @pytest.mark.parametrize("alpha", (0.2, 0.5, 0.8))
    @pytest.mark.parametrize("gamma", (1.0, 2.5))
    def test_exact_on_quadratics(self, alpha, gamma):
        # quadratic interpolation is exact on t^2 and the sigma offset kills
        # the final-interval defect, so the rule reproduces t^2 to roundoff
        nodes = (np.arange(33) / 32.0) ** gamma
        err = self._max_error(
            alpha,
            nodes,
            lambda t: t**2,
            lambda T: 2.0 * T ** (2 - alpha) / math.gamma(3 - alpha),
        )
        assert err < 1e-12

    @pytest.mark.parametrize("alpha", (0.2, 0.5, 0.8))
    def test_order_at_least_two_on_cubics(self, alpha):
        errs = []
        for N in (20, 40, 80):
            nodes = np.arange(N + 1) / N
            errs.append(
                self._max_error(
                    alpha,
                    nodes,
                    lambda t: t**3,
                    lambda T: 6.0 * T ** (3 - alpha) / math.gamma(4 - alpha),
                )
            )
        rates = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
        assert min(rates) > 1.9

    def test_alpha_one_collapses_to_backward_difference(self):
        nodes = np.arange(11) / 10.0
        coeffs = l21sigma_coefficients(nodes, 7, 1.0)
        expect = np.zeros(7)
        expect[0] = 10.0
        assert coeffs == pytest.approx(expect, abs=1e-12)

    def test_step_index_bounds(self):
        nodes = np.arange(5) / 4.0
        with pytest.raises(ValueError):
            l21sigma_coefficients(nodes, 0, 0.5)
        with pytest.raises(ValueError):
            l21sigma_coefficients(nodes, 5, 0.5)


class TestImmutability:
    def test_values_are_read_only(self):
        w = sftr_weights(0.5, 10)
        with pytest.raises(ValueError):
            w.values[0] = 99.0
