import math

import mpmath as mp
import numpy as np
import pytest
from scipy import integrate, stats

from infodelay.errors import NonPositiveRate, NotOuter
from infodelay.metrics import (
    TABLE_KAPPAS,
    TABLE_MS,
    CostParameters,
    arma_cost,
    best_delay_intensity,
    cost_constants,
    group_delay_constant,
    inventory_decomposition,
    inventory_variance,
    normal_loss,
    optimal_cost,
    policy_metrics,
    radial_derivative,
    relative_cost_table,
    supplier_msfe,
)
from infodelay.policy_factory import (
    SQRT5,
    arma_approx,
    average_filter,
    epsilon_policy,
    limit_policy,
    ma1_optimal,
    solve_gamma,
)
from infodelay.transfer_core import BlaschkeFactor, RationalTransfer, blaschke_to_rational

from conftest import random_blaschke_zeros, random_outer


def variance_from_impulse(h: np.ndarray) -> float:
    """Energy of (z psi - 1)/(1 - z) from partial sums of the coefficients."""
    partial = np.cumsum(h)
    return 1.0 + float(np.sum((1.0 - partial) ** 2))


class TestCostConstants:
    @pytest.mark.parametrize("x", [-2.0, -0.5, 0.0, 0.7, 3.0])
    def test_normal_loss(self, x):
        mp.mp.dps = 30
        oracle = mp.quad(lambda t: (t - x) * mp.npdf(t), [x, mp.inf])
        assert float(normal_loss(x)) == pytest.approx(float(oracle), rel=1e-12)

    @pytest.mark.parametrize("h,b", [(1.0, 1.0), (1.0, 9.0), (3.0, 0.5)])
    def test_newsvendor_constant(self, h, b):
        cp = CostParameters(h, b, h, b)
        z = cp.zeta_r
        below, _ = integrate.quad(lambda t: h * (z - t) * stats.norm.pdf(t), -np.inf, z, epsabs=1e-13)
        above, _ = integrate.quad(lambda t: b * (t - z) * stats.norm.pdf(t), z, np.inf, epsabs=1e-13)
        oracle = below + above
        assert cp.K_r == pytest.approx(oracle, rel=1e-9)
        assert cp.K_s == cp.K_r

    def test_symmetric_value_and_ratio(self):
        cp = CostParameters(1, 1, 2, 2)
        assert cp.K_r == pytest.approx(2 / math.sqrt(2 * math.pi))
        K_r, K_s, kappa = cost_constants(cp)
        assert kappa == pytest.approx(0.5) and K_s == pytest.approx(2 * K_r)

    def test_rates_validated(self):
        with pytest.raises(NonPositiveRate):
            CostParameters(0.0, 1.0, 1.0, 1.0)


class TestInventoryVariance:
    @pytest.mark.parametrize("k", [0, 1, 2, 5])
    def test_pure_delay(self, k):
        tf = RationalTransfer().delayed(k)
        assert inventory_variance(tf) == pytest.approx(1 + k, abs=1e-9)
        assert supplier_msfe(tf) == pytest.approx(1.0, abs=1e-9)

    def test_average(self):
        assert inventory_variance(average_filter()) == pytest.approx(1.25, abs=1e-9)

    def test_random_rationals_against_partial_sums(self, rng):
        for _ in range(10):
            tf = random_outer(rng)
            oracle = variance_from_impulse(tf.impulse_response(20000))
            assert inventory_variance(tf) == pytest.approx(oracle, rel=1e-9)

    def test_epsilon_member_against_partial_sums(self):
        tf = epsilon_policy(0.5, 3)
        oracle = variance_from_impulse(tf.impulse_response(20000))
        assert inventory_variance(tf) == pytest.approx(oracle, rel=1e-8)

    @pytest.mark.parametrize("kappa", [0.01, 0.5, 2.0])
    def test_limit_policy_closed_form(self, kappa):
        g = solve_gamma(kappa).gamma
        assert inventory_variance(limit_policy(kappa)) == pytest.approx(1.25 + g / 2, abs=1e-9)

    def test_high_order_approximant(self):
        # the gap to the limit closes like 1/m
        g = solve_gamma(0.001).gamma
        gaps = [abs(inventory_variance(arma_approx(0.001, m)) - (1.25 + g / 2)) for m in (100, 1000)]
        assert gaps[0] > gaps[1] > 0
        assert 5 < gaps[0] / gaps[1] < 20


class TestSupplierMsfe:
    def test_outer_matches_quadrature(self, rng):
        for _ in range(10):
            tf = random_outer(rng)
            assert supplier_msfe(tf) == pytest.approx(supplier_msfe(tf, method="outer"), rel=1e-9)

    def test_zero_inside_disk(self):
        # mean log |z - a|^2 vanishes for |a| < 1, leaving 1/(1 - a)^2
        a = 0.4
        tf = RationalTransfer.from_roots(zeros=[a])
        assert supplier_msfe(tf) == pytest.approx(1 / (1 - a) ** 2, rel=1e-10)
        with pytest.raises(NotOuter):
            supplier_msfe(tf, method="outer")

    def test_blaschke_invisible(self, rng):
        q = random_outer(rng)
        b = blaschke_to_rational(BlaschkeFactor((0.5, -0.2)))
        assert supplier_msfe(q * b) == pytest.approx(supplier_msfe(q, method="outer"), rel=1e-9)

    def test_singular_factor_invisible(self):
        assert supplier_msfe(limit_policy(0.1)) == pytest.approx(0.25, rel=1e-9)

    def test_epsilon_member(self):
        g = solve_gamma(0.1).gamma
        k = 5
        expected = 0.25 * math.exp(-2 * g / (1 + 1 / k))
        assert supplier_msfe(epsilon_policy(0.1, k)) == pytest.approx(expected, rel=1e-9)
        assert supplier_msfe(epsilon_policy(0.1, k), method="outer") == pytest.approx(expected, rel=1e-12)

    def test_high_order_circle_zeros(self):
        g = solve_gamma(0.01).gamma
        tf = arma_approx(0.01, 200)
        assert supplier_msfe(tf) == pytest.approx(supplier_msfe(tf, method="outer"), rel=1e-8)
        limit = 0.25 * math.exp(-2 * g)
        gaps = [supplier_msfe(arma_approx(0.01, m), method="outer") / limit - 1 for m in (200, 2000)]
        assert gaps[0] > gaps[1] > 0
        assert 5 < gaps[0] / gaps[1] < 20


class TestOptimalCost:
    def test_regime_boundary(self):
        for form in ("reduced", "direct"):
            assert optimal_cost(SQRT5, form=form) == pytest.approx(3.0, abs=1e-10)
            assert optimal_cost(SQRT5 * (1 - 1e-13), form=form) == pytest.approx(3.0, abs=1e-10)

    @pytest.mark.parametrize("kappa", [1e-6, 0.01, 0.3, 1.0, 2.0, 3.0, 10.0])
    def test_forms_agree(self, kappa):
        assert optimal_cost(kappa, "reduced") == pytest.approx(optimal_cost(kappa, "direct"), rel=1e-12)

    def test_ma1_attains_optimum(self):
        for kappa in (SQRT5, 3.0, 8.0):
            pm = policy_metrics(ma1_optimal(kappa), kappa, msfe_method="outer")
            assert pm.relative_cost == pytest.approx(1.0, abs=1e-9)

    def test_lower_bound(self, rng):
        for kappa in (0.01, 0.5, 1.5):
            for _ in range(5):
                assert policy_metrics(random_outer(rng), kappa).relative_cost >= 1 - 1e-12
            for k in (1, 10, 100):
                assert policy_metrics(epsilon_policy(kappa, k), kappa).relative_cost >= 1 - 1e-12

    def test_epsilon_sequence_approaches_optimum(self):
        rel = [policy_metrics(epsilon_policy(0.1, k), 0.1).relative_cost for k in (1, 10, 100, 1000)]
        assert np.all(np.diff(rel) < 0)
        assert rel[-1] - 1 < 1e-3


class TestTable:
    def test_shape_monotone_and_bounded(self):
        t = relative_cost_table(TABLE_KAPPAS[:3], TABLE_MS)
        assert t.shape == (3, len(TABLE_MS))
        assert np.all(t >= 1 - 1e-12)
        assert np.all(np.diff(t, axis=1) <= 1e-12)

    def test_zero_order_closed_form(self):
        kappa = 0.1
        t = relative_cost_table([kappa], [0])
        assert t[0, 0] == pytest.approx((kappa * math.sqrt(1.25) + 0.5) / optimal_cost(kappa), rel=1e-10)

    def test_tuned_beats_kappa_rule(self):
        tuned = relative_cost_table([0.01], [1, 5], gamma_rule="tuned")
        fixed = relative_cost_table([0.01], [1, 5], gamma_rule="kappa")
        assert np.all(tuned <= fixed + 1e-12)

    def test_delay_cap_binds_at_low_order(self):
        assert best_delay_intensity(0.01, 1) == 20.0
        free = best_delay_intensity(0.01, 1, gamma_max=200.0)
        assert free > 30
        c = optimal_cost(0.01)
        assert arma_cost(0.01, 1, 20.0) / c == pytest.approx(2.255, abs=5e-4)
        assert arma_cost(0.01, 1, free) / c < 2.11
        assert relative_cost_table([0.01], [1])[0, 0] == pytest.approx(2.255, abs=5e-4)

    def test_best_delay_intensity_is_a_minimum(self):
        g = best_delay_intensity(0.1, 2)
        c = arma_cost(0.1, 2, g)
        assert c <= arma_cost(0.1, 2, g * 1.01) and c <= arma_cost(0.1, 2, g * 0.99)


def _mp_delay_constant(q_coeffs):
    """Direct high-precision quadrature of the log-spectrum weighted constant.

    Coefficients are decimal strings so that ``Q(1) = 1`` holds exactly.
    """
    mp.mp.dps = 40
    q_coeffs = [mp.mpf(c) for c in q_coeffs]

    def f(lam):
        z = mp.exp(1j * lam)
        val = sum(c * z**j for j, c in enumerate(q_coeffs))
        return mp.cos(lam) / (2 * mp.sin(lam / 2) ** 2) * mp.log(abs(val))
    return float(mp.quad(f, [mp.mpf("1e-15"), mp.mpf("0.01"), mp.pi / 2, mp.pi]) / mp.pi)


class TestDelayConstant:
    def test_average_filter(self):
        res = group_delay_constant(average_filter())
        assert res.c == pytest.approx(_mp_delay_constant(["0.5", "0.5"]), abs=1e-10)
        assert res.c == pytest.approx(math.log(2) - 0.5, abs=1e-10)
        assert abs(res.residual) < 1e-10

    def test_ma1(self):
        res = group_delay_constant(RationalTransfer.from_coefficients([0.7, 0.3]))
        assert res.c == pytest.approx(_mp_delay_constant(["0.7", "0.3"]), abs=1e-10)
        assert res.c == pytest.approx(-0.3 - math.log(0.7), abs=1e-10)

    def test_identity_on_random_outers(self, rng):
        for _ in range(20):
            res = group_delay_constant(random_outer(rng))
            assert abs(res.residual) < 1e-7

    def test_exponential_bound_form(self):
        tf = arma_approx(0.5, 3)
        res = group_delay_constant(tf)
        assert res.sigma_S_sq == pytest.approx(math.exp(-2 * (res.c + res.group_delay)), rel=1e-8)

    def test_requires_outer(self):
        with pytest.raises(NotOuter):
            group_delay_constant(RationalTransfer.from_roots(zeros=[0.3]))


class TestInventoryDecomposition:
    def test_radial_term(self):
        # b_0 = 1/2, b_1 = 1/4
        assert radial_derivative(average_filter()) == pytest.approx(0.5, abs=1e-14)

    def test_additive_law_random_pairs(self, rng):
        for _ in range(10):
            q = random_outer(rng)
            zeros = random_blaschke_zeros(rng)
            gd_b = sum((1 - abs(a) ** 2) / abs(1 - a) ** 2 for a in zeros)
            b = blaschke_to_rational(BlaschkeFactor(tuple(zeros)))
            assert abs(inventory_variance(q * b) - inventory_variance(q) - gd_b) < 1e-7

    def test_five_term_closure(self, rng):
        for _ in range(8):
            q = random_outer(rng)
            dec = inventory_decomposition(q, BlaschkeFactor(tuple(random_blaschke_zeros(rng))),
                                          ([-0.8, 0.8], [1.0, 1.0]))
            assert dec.gd_singular == pytest.approx(0.4)
            assert abs(dec.closure_residual) < 1e-7

    def test_outer_only(self):
        dec = inventory_decomposition(average_filter())
        assert dec.sigma_I_sq_total == pytest.approx(1.25, abs=1e-10)
        assert abs(dec.closure_residual) < 1e-12
