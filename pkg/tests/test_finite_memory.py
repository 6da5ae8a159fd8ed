import mpmath as mp
import numpy as np
import pytest
from scipy.linalg import solve_toeplitz

from infodelay.errors import SingularToeplitz
from infodelay.finite_memory import (
    finite_memory_cost,
    finite_past_msfe,
    levinson_durbin,
    msfe_curve,
    optimal_complexity_scan,
    toeplitz_determinant_ratio,
)
from infodelay.metrics import supplier_msfe
from infodelay.policy_factory import arma_approx, average_filter, epsilon_policy
from infodelay.transfer_core import AutocovarianceSequence, RationalTransfer, autocovariances

from conftest import random_outer


def mp_autocovariances(tf: RationalTransfer, n_lags: int, n_terms: int, dps: int = 60):
    """Autocovariances from the MA expansion carried out in mpmath.

    Factors are multiplied out in mpmath; expanding in doubles would move a
    repeated circle zero visibly off the circle.
    """
    mp.mp.dps = dps

    def expand(factors):
        out = [mp.mpf(1)]
        for p, k in factors:
            c = [mp.mpf(float(x)) for x in p.coeffs]
            for _ in range(k):
                out = [mp.fsum(out[i] * c[j - i] for i in range(len(out)) if 0 <= j - i < len(c))
                       for j in range(len(out) + len(c) - 1)]
        return out

    num = expand(tf.numerator_factors)
    den = expand(tf.denominator_factors)
    h = []
    for k in range(n_terms):
        acc = num[k] if k < len(num) else mp.mpf(0)
        for j in range(1, min(k, len(den) - 1) + 1):
            acc -= den[j] * h[k - j]
        h.append(acc / den[0])
    return [mp.fsum(h[i] * h[i + k] for i in range(n_terms - k)) for k in range(n_lags + 1)]


def mp_normal_equations(b, n):
    """Dense solve of the order-(n+1) prediction equations in mpmath."""
    T = mp.matrix([[b[abs(i - j)] for j in range(n + 1)] for i in range(n + 1)])
    r = mp.matrix([b[k + 1] for k in range(n + 1)])
    c = mp.lu_solve(T, r)
    msfe = b[0] - sum(r[i] * c[i] for i in range(n + 1))
    return [float(x) for x in c], float(msfe)


class TestHandValues:
    def test_average_filter_memory_zero(self):
        # b0 = 1/2, b1 = 1/4: forecast b1/b0 * O_t, error 1/2 - 1/8
        sol = finite_past_msfe(average_filter(), 0)
        assert sol.msfe == pytest.approx(0.375, abs=1e-15)
        np.testing.assert_allclose(sol.coefficients, [0.5], atol=1e-15)

    def test_white_noise_and_pure_delay(self):
        for tf in (RationalTransfer(), RationalTransfer().delayed(3)):
            np.testing.assert_allclose(msfe_curve(tf, 5), 1.0, atol=1e-15)

    def test_intercept(self):
        sol = finite_past_msfe(average_filter(), 2, mean_demand=10.0)
        assert sol.intercept == pytest.approx(10.0 * (1.0 - sol.coefficients.sum()))


class TestAgainstHighPrecision:
    @pytest.mark.parametrize("kappa,m", [(1.0, 1), (0.01, 3)])
    def test_normal_equations(self, kappa, m):
        tf = arma_approx(kappa, m)
        b = mp_autocovariances(tf, 52, 400)
        for n in (0, 1, 5, 20, 50):
            coef, msfe = mp_normal_equations(b, n)
            sol = finite_past_msfe(tf, n)
            assert sol.msfe == pytest.approx(msfe, abs=1e-8)
            np.testing.assert_allclose(sol.coefficients, coef, rtol=1e-8, atol=1e-10)

    def test_determinant_ratio(self):
        tf = arma_approx(0.5, 2)
        b = mp_autocovariances(tf, 12, 300)
        for n in range(1, 11):
            num = mp.det(mp.matrix([[b[abs(i - j)] for j in range(n + 1)] for i in range(n + 1)]))
            den = mp.det(mp.matrix([[b[abs(i - j)] for j in range(n)] for i in range(n)]))
            assert toeplitz_determinant_ratio(tf, n) == pytest.approx(float(num / den), abs=1e-10)

    def test_many_circle_zeros(self):
        # ten-fold AR part and an eleven-fold zero at -1: hopeless in doubles
        tf = arma_approx(0.01, 10)
        b = mp_autocovariances(tf, 61, 500, dps=80)
        mp.mp.dps = 80
        err, a = b[0], []
        expected = []
        for j in range(61):
            k = (b[j + 1] - mp.fsum(a[i] * b[j - i] for i in range(len(a)))) / err
            a = [a[i] - k * a[len(a) - 1 - i] for i in range(len(a))] + [k]
            err *= 1 - k * k
            expected.append(float(err))
        np.testing.assert_allclose(msfe_curve(tf, 60), expected, rtol=1e-12)


class TestStructure:
    def test_monotone_and_above_kolmogorov(self, rng):
        for tf in [arma_approx(0.01, 5), average_filter(), random_outer(rng), random_outer(rng)]:
            curve = msfe_curve(tf, 80)
            assert np.all(np.diff(curve) <= 1e-15)
            assert curve[-1] >= supplier_msfe(tf) * (1 - 1e-12)

    def test_levinson_path_agrees_with_exact_recursion(self, rng):
        tf = random_outer(rng)
        exact = msfe_curve(tf, 30)
        double = msfe_curve(tf, 30, method="levinson")
        np.testing.assert_allclose(exact, double, rtol=1e-10)
        acv = autocovariances(tf, 31)
        np.testing.assert_allclose(msfe_curve(acv, 30), double, rtol=1e-14)

    def test_exponential_source(self):
        tf = epsilon_policy(0.5, 4)
        curve = msfe_curve(tf, 40)
        assert np.all(np.diff(curve) <= 1e-14)
        assert curve[-1] > supplier_msfe(tf)
        # independent double-precision Toeplitz solve; condition number ~5e7
        b = autocovariances(tf, 41).b
        c = solve_toeplitz(b[:41], b[1:42])
        assert curve[40] == pytest.approx(b[0] - b[1:42] @ c, rel=1e-8)

    def test_ratio_indexing(self):
        tf = arma_approx(1.0, 1)
        assert toeplitz_determinant_ratio(tf, 1) == pytest.approx(finite_past_msfe(tf, 0).msfe, rel=1e-15)
        assert toeplitz_determinant_ratio(tf, 7) == pytest.approx(finite_past_msfe(tf, 6).msfe, rel=1e-15)
        with pytest.raises(ValueError):
            toeplitz_determinant_ratio(tf, 0)

    def test_singular_sequence(self):
        with pytest.raises(SingularToeplitz):
            levinson_durbin([1.0, 1.0, 1.0], 1)
        with pytest.raises(SingularToeplitz):
            msfe_curve(AutocovarianceSequence([1.0, 1.0, 1.0]), 1)

    def test_too_few_lags(self):
        with pytest.raises(ValueError):
            levinson_durbin([1.0, 0.5], 3)


class TestCosts:
    def test_memory_costs_exceed_full_history(self):
        for n in (0, 5, 50):
            pm = finite_memory_cost(0.1, 5, n)
            full = supplier_msfe(arma_approx(0.1, 5), method="outer")
            assert pm.sigma_S_sq >= full * (1 - 1e-12)
        costs = [finite_memory_cost(0.1, 5, n).relative_cost for n in (0, 5, 50)]
        assert costs[0] > costs[1] > costs[2] >= 1

    def test_small_scan(self):
        scan = optimal_complexity_scan(0.01, 10, 20)
        assert len(scan.cost_curve) == 21
        assert scan.cost_curve[scan.m_star] == min(scan.cost_curve)
        assert 0 < scan.m_star < 20
        with pytest.raises(ValueError):
            optimal_complexity_scan(0.01, 10, 0)
