"""Best linear prediction of orders from a finite window of past orders.

A supplier with memory ``n`` forecasts ``O_{t+1}`` from ``O_t, ..., O_{t-n}``
(``n + 1`` orders). The forecast error variance ``sigma^2_{S,n}`` is the
Levinson prediction-error pivot after ``n + 1`` steps, which also equals the
ratio ``det T_{n+2} / det T_{n+1}`` of autocovariance Toeplitz determinants.

Two engines produce the same recursion:

* explicit autocovariances: classical Levinson-Durbin in double precision;
* rational filters: a Schur-type recursion on the exact spectral data run in
  ball arithmetic (python-flint) at adaptively chosen precision. Policies with
  a zero of order ``2q`` on the circle need predictor coefficients of size
  roughly ``binom(n + q, q)``, so double precision is hopeless once ``q`` is
  moderate; the exact-data recursion keeps full accuracy at any memory.

The flint precision is process-global, so run concurrent scans in separate
processes rather than threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np
from flint import arb, arb_mat, arb_poly, ctx

from .errors import SingularToeplitz
from .metrics import PolicyMetrics, inventory_variance, optimal_cost
from .policy_factory import arma_approx
from .transfer_core import (
    ROOT_BAND,
    AutocovarianceSequence,
    ExponentialTransfer,
    RationalTransfer,
    autocovariances,
)

__all__ = [
    "AutocovarianceSequence",
    "PredictorSolution",
    "ComplexityScan",
    "levinson_durbin",
    "finite_past_msfe",
    "msfe_curve",
    "toeplitz_determinant_ratio",
    "finite_memory_cost",
    "optimal_complexity_scan",
]

Source = Union[RationalTransfer, ExponentialTransfer, AutocovarianceSequence]


@dataclass(frozen=True)
class PredictorSolution:
    """Optimal ``n``-memory forecast ``c + sum_k c_k O_{t-k}``, ``k = 0..n``."""

    n: int
    coefficients: np.ndarray
    intercept: float
    msfe: float


class ComplexityScan(NamedTuple):
    m_star: int
    cost_curve: list


# -- double-precision Levinson ----------------------------------------------

def levinson_durbin(b: Sequence[float], order: int):
    """Levinson-Durbin recursion on autocovariances ``b``.

    Args:
        b: autocovariances ``b_0 .. b_{order+1}`` at least.
        order: memory ``n``; the predictor uses ``n + 1`` lags.

    Returns:
        ``(coefficients, pivots)`` where ``coefficients[k]`` multiplies
        ``O_{t-k}`` and ``pivots[j]`` is the error variance with memory ``j``.

    Raises:
        SingularToeplitz: when a pivot becomes nonpositive.
    """
    b = np.asarray(b, dtype=float)
    n = int(order)
    if b.size < n + 2:
        raise ValueError(f"need {n + 2} autocovariances, got {b.size}")
    if not b[0] > 0:
        raise SingularToeplitz("b_0 must be positive")
    a = np.zeros(0)
    err = b[0]
    pivots = np.empty(n + 1)
    for j in range(n + 1):
        k = (b[j + 1] - a @ b[j:0:-1]) / err
        a = np.concatenate([a - k * a[::-1], [k]])
        err *= 1.0 - k * k
        if not err > 0:
            raise SingularToeplitz(f"nonpositive prediction-error pivot at step {j}")
        pivots[j] = err
    return a, pivots


# -- exact-data Schur recursion ---------------------------------------------

def _expand(factors) -> arb_poly:
    out = arb_poly([1])
    for p, k in factors:
        f = arb_poly([arb(float(x)) for x in p.coeffs])
        for _ in range(k):
            out = out * f
    return out


def _mid(poly: arb_poly) -> arb_poly:
    # drop ball radii; accuracy is checked by rerunning at higher precision
    return arb_poly([c.mid() for c in poly.coeffs()])


def _schur_run(tf: RationalTransfer, n: int, prec: int, want_coefficients: bool):
    """One pass of the recursion at ``prec`` bits.

    The spectrum ``N N*/(D D*)`` is written as ``2 Re(U/D)`` on the circle by
    solving a small linear system for ``U``; the Schur recursion on
    ``(2U - b_0 D)/z`` and ``2U + b_0 D`` then yields the reflection
    coefficients, i.e. the Levinson pivots, in ``O(n deg)`` operations.
    """
    saved = ctx.prec
    ctx.prec = prec
    try:
        nc = _expand(tf.numerator_factors).coeffs()
        dc = _expand(tf.denominator_factors).coeffs()
        d = max(len(nc), len(dc)) - 1
        nc += [arb(0)] * (d + 1 - len(nc))
        dc += [arb(0)] * (d + 1 - len(dc))
        r = [sum((nc[i] * nc[i + k] for i in range(d + 1 - k)), arb(0)) for k in range(d + 1)]

        def dd(i):
            return dc[i] if 0 <= i <= d else arb(0)

        mat = arb_mat([[dd(j - k) + dd(j + k) for j in range(d + 1)] for k in range(d + 1)])
        sol = mat.solve(arb_mat([[x] for x in r]), nonstop=True)
        u = [sol[i, 0].mid() for i in range(d + 1)]
        if not all(x.is_finite() for x in u):
            return None
        b0 = (2 * u[0] / dc[0]).mid()
        up, dp = arb_poly(u), arb_poly(dc)
        p = _mid((2 * up - b0 * dp).right_shift(1))
        q = _mid(2 * up + b0 * dp)
        err = b0
        pivots = np.empty(n + 1)
        a_poly = arb_poly([1])
        shift = arb_poly([0, 1])
        for j in range(n + 1):
            alpha = (p[0] / q[0]).mid() if p.degree() >= 0 else arb(0)
            err = (err * (1 - alpha * alpha)).mid()
            pivots[j] = float(err)
            if want_coefficients:
                ac = a_poly.coeffs()
                ac += [arb(0)] * (j + 1 - len(ac))
                a_poly = _mid(a_poly - alpha * shift * arb_poly(ac[::-1]))
            p, q = (p - q * alpha).right_shift(1), q - p * alpha
            if j % 16 == 15:
                p, q = _mid(p), _mid(q)
        coef = None
        if want_coefficients:
            ac = a_poly.coeffs()
            ac += [arb(0)] * (n + 2 - len(ac))
            coef = np.array([-float(x) for x in ac[1: n + 2]]) + 0.0
        return float(b0), pivots, coef
    finally:
        ctx.prec = saved


def _log2_binom(n: int, q: int) -> float:
    return (math.lgamma(n + q + 1) - math.lgamma(q + 1) - math.lgamma(n + 1)) / math.log(2.0)


def _starting_precision(tf: RationalTransfer, n: int) -> int:
    q = 0
    for p, k in tf.numerator_factors:
        r = p.roots()
        q += k * int(np.sum(np.abs(np.abs(r) - 1.0) <= ROOT_BAND))
    deg = max(tf.num_degree, tf.den_degree)
    # losses of the initial linear solve and of the recursion add up
    return int(128 + 2.0 * _log2_binom(n, q) + 20 * deg)


def _exact_recursion(tf: RationalTransfer, n: int, want_coefficients: bool, rtol: float = 1e-13,
                     max_prec: int = 1 << 17):
    prec = _starting_precision(tf, n)
    prev = _schur_run(tf, n, prec, want_coefficients)
    while prec <= max_prec:
        prec = prec * 3 // 2
        cur = _schur_run(tf, n, prec, want_coefficients)
        if prev is not None and cur is not None and _agree(prev, cur, rtol):
            return cur
        prev = cur
    raise SingularToeplitz("prediction recursion did not stabilize with increasing precision")


def _agree(a, b, rtol) -> bool:
    if not np.allclose(a[1], b[1], rtol=rtol, atol=0):
        return False
    if a[2] is not None:
        scale = max(1.0, float(np.max(np.abs(b[2]))))
        if np.max(np.abs(a[2] - b[2])) > rtol * scale:
            return False
    return True


# -- public operations -------------------------------------------------------

def _acvs_for(source: Source, n_lags: int) -> AutocovarianceSequence:
    if isinstance(source, AutocovarianceSequence):
        if source.max_lag < n_lags:
            raise ValueError(f"need autocovariances up to lag {n_lags}")
        return source
    return autocovariances(source, n_lags)


def _check_pivots(pivots: np.ndarray):
    if np.any(~(pivots > 0)):
        raise SingularToeplitz("nonpositive prediction-error pivot")


def finite_past_msfe(source: Source, n: int, mean_demand: float = 0.0, method: str = "auto") -> PredictorSolution:
    """Optimal forecast from the last ``n + 1`` orders and its error variance.

    Args:
        source: rational or exponential filter, or explicit autocovariances.
        n: memory (number of past orders minus one).
        mean_demand: mean order level; sets the intercept ``d (1 - sum c_k)``.
        method: ``"auto"`` uses the exact-data recursion for rational filters
            and double-precision Levinson otherwise; ``"levinson"`` forces the
            double-precision path.

    Raises:
        SingularToeplitz: degenerate spectrum.
    """
    n = int(n)
    if n < 0:
        raise ValueError("n must be nonnegative")
    if method not in ("auto", "levinson"):
        raise ValueError(f"unknown method {method!r}")
    if isinstance(source, RationalTransfer) and method == "auto":
        _, pivots, coef = _exact_recursion(source, n, want_coefficients=True)
        _check_pivots(pivots)
        msfe = pivots[n]
    else:
        coef, pivots = levinson_durbin(_acvs_for(source, n + 1).b, n)
        msfe = pivots[n]
    intercept = float(mean_demand) * (1.0 - float(np.sum(coef)))
    return PredictorSolution(n, coef, intercept, float(msfe))


def msfe_curve(source: Source, n_max: int, method: str = "auto") -> np.ndarray:
    """Forecast error variances for memories ``0..n_max``."""
    n_max = int(n_max)
    if isinstance(source, RationalTransfer) and method == "auto":
        _, pivots, _ = _exact_recursion(source, n_max, want_coefficients=False)
    else:
        _, pivots = levinson_durbin(_acvs_for(source, n_max + 1).b, n_max)
    _check_pivots(pivots)
    return pivots


def toeplitz_determinant_ratio(source: Source, n: int) -> float:
    """``D_{n-1}/D_{n-2}`` with ``D_k = det T_{k+2}`` and ``D_{-1} = b_0``.

    Computed as the Levinson pivot with ``n`` lags, so it equals
    ``finite_past_msfe(source, n - 1).msfe``.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be at least 1")
    return float(msfe_curve(source, n - 1)[n - 1])


def finite_memory_cost(kappa: float, m: int, n: int, gamma: float | None = None) -> PolicyMetrics:
    """Costs of the ARMA(m) approximant when the supplier has memory ``n``.

    The relative cost is measured against the infinite-memory optimum.
    """
    tf = arma_approx(kappa, m, gamma=gamma)
    ss2 = float(msfe_curve(tf, n)[n])
    si2 = inventory_variance(tf)
    total = kappa * math.sqrt(si2) + math.sqrt(ss2)
    return PolicyMetrics(float(kappa), si2, ss2, tf.group_delay(), total, total / optimal_cost(kappa))


def optimal_complexity_scan(kappa: float, n: int, m_max: int) -> ComplexityScan:
    """Relative finite-memory cost over ``m = 0..m_max`` and its minimizer."""
    m_max = int(m_max)
    if m_max < 1:
        raise ValueError("m_max must be at least 1")
    curve = [finite_memory_cost(kappa, m, n).relative_cost for m in range(m_max + 1)]
    return ComplexityScan(int(np.argmin(curve)), curve)
