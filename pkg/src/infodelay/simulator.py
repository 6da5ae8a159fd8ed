"""Seeded Monte Carlo simulation of the retailer/supplier chain.

Demand ``D_t = d + sigma eps_t`` feeds a retailer who orders
``O_t = d + sigma (psi * eps)_t``. Retailer inventory follows
``I_t = I_{t-1} + O_{t-1} - D_t`` and the supplier runs a base-stock policy
``S_t = m_t + zeta_s sigma_S`` around a one-step forecast ``m_t`` of
``O_{t+1}``. The per-period costs estimate the closed-form quantities of
:mod:`infodelay.metrics` and :mod:`infodelay.finite_memory` independently.

Normal variates are ``ndtri`` of uniform 64-bit PCG64 draws, so a seed fixes
every number bit for bit. All filtering runs in extended precision: inverting
a policy with a repeated zero at ``z = -1`` amplifies rounding errors
polynomially in the run length, and double precision would leave recovered
innovations off by about ``1e-7`` after a million periods.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.signal import oaconvolve
from scipy.special import ndtri

from .errors import (
    InnovationRecoveryFailed,
    InvalidConfig,
    NegativeOrdersWarning,
    NonInvertiblePolicyWithFullHistory,
    TailNotConverged,
)
from .finite_memory import finite_past_msfe
from .metrics import CostParameters, inventory_variance, supplier_msfe
from .transfer_core import CASCADE_GAIN_LIMIT, RationalTransfer, autocovariances

__all__ = [
    "FullHistory",
    "FiniteMemory",
    "SimulationConfig",
    "SimulationResult",
    "CostIdentityReport",
    "standard_normals",
    "apply_filter",
    "invert_filter",
    "simulate",
    "validate_cost_identity",
]

_LD = np.longdouble
N_ACOV_LAGS = 6
#: Largest accepted gap between recovered and generated shocks.
RECOVERY_TOL = 1e-8


@dataclass(frozen=True)
class FullHistory:
    """Supplier forecasts from the entire order history."""


@dataclass(frozen=True)
class FiniteMemory:
    """Supplier forecasts from the last ``n + 1`` orders."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise InvalidConfig(f"memory must be a nonnegative integer, got {self.n}")


Forecaster = Union[FullHistory, FiniteMemory]


@dataclass(frozen=True)
class SimulationConfig:
    """Run parameters. ``burn_in=None`` picks ``max(1000, 50 * decay length)``."""

    policy: RationalTransfer
    mean_demand: float = 10.0
    shock_std: float = 1.0
    periods: int = 1_000_000
    burn_in: Optional[int] = None
    seed: int = 0
    forecaster: Forecaster = field(default_factory=FullHistory)
    cost_params: CostParameters = field(default_factory=CostParameters)
    n_batches: int = 100

    def __post_init__(self):
        if not isinstance(self.policy, RationalTransfer):
            raise InvalidConfig("the simulator needs a rational policy")
        if not (self.shock_std > 0 and math.isfinite(self.shock_std)):
            raise InvalidConfig("shock_std must be positive")
        if not math.isfinite(self.mean_demand):
            raise InvalidConfig("mean_demand must be finite")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidConfig("seed must be a 64-bit unsigned integer")
        if self.n_batches < 30:
            raise InvalidConfig("use at least 30 batches")
        if self.periods < self.n_batches or self.periods % self.n_batches:
            raise InvalidConfig("periods must be a positive multiple of n_batches")
        decay = self.policy.decay_length()
        burn = self.burn_in
        if burn is None:
            burn = max(1000, int(math.ceil(50 * decay)))
            object.__setattr__(self, "burn_in", burn)
        if burn < 10 * decay:
            raise InvalidConfig(f"burn_in {burn} is below 10x the AR decay length {decay:.3g}")
        if isinstance(self.forecaster, FiniteMemory) and burn < self.forecaster.n + 1:
            raise InvalidConfig("burn_in must cover the forecast window")
        if isinstance(self.forecaster, FullHistory) and not self.policy.is_invertible:
            raise NonInvertiblePolicyWithFullHistory(
                "shocks cannot be recovered from orders of a non-invertible policy")


@dataclass(frozen=True)
class SimulationResult:
    """Empirical moments and costs next to their closed-form values.

    Variances and MSFEs are in order units, i.e. they include ``sigma^2``.
    Standard errors come from batch means.
    """

    sigma_I_sq_emp: float
    se_sigma_I_sq: float
    msfe_emp: float
    se_msfe: float
    cost_retailer_emp: float
    se_cost_retailer: float
    cost_supplier_emp: float
    se_cost_supplier: float
    acov_emp: list
    se_acov: list
    sigma_I_sq_analytic: float
    msfe_analytic: float
    cost_retailer_analytic: float
    cost_supplier_analytic: float
    acov_analytic: list
    innovation_recovery_error: Optional[float]
    negative_orders: int
    periods: int
    burn_in: int
    seed: int
    n_batches: int

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def z_scores(self) -> dict:
        """Deviation from the analytic value in units of the standard error."""
        pairs = {
            "sigma_I_sq": (self.sigma_I_sq_emp, self.sigma_I_sq_analytic, self.se_sigma_I_sq),
            "msfe": (self.msfe_emp, self.msfe_analytic, self.se_msfe),
            "cost_retailer": (self.cost_retailer_emp, self.cost_retailer_analytic, self.se_cost_retailer),
            "cost_supplier": (self.cost_supplier_emp, self.cost_supplier_analytic, self.se_cost_supplier),
        }
        return {k: (e - a) / s for k, (e, a, s) in pairs.items()}


# -- random numbers ----------------------------------------------------------

def standard_normals(seed: int, size: int) -> np.ndarray:
    """Standard normals by inverse CDF of PCG64 64-bit draws.

    The top 53 bits of each draw give the midpoint uniform
    ``(k + 1/2) 2^-53``, which never hits 0 or 1.
    """
    raw = np.random.PCG64(int(seed)).random_raw(int(size))
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return ndtri(u)


# -- extended-precision filtering --------------------------------------------

def _fir(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    y = c[0] * x
    for j in range(1, c.size):
        y[j:] += c[j] * x[:-j]
    return y


def _iir(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Solve ``c(z) y = x`` with zero initial state."""
    x = x / c[0]
    c = c / c[0]
    if c.size == 1:
        return x
    if c.size == 2 and abs(abs(c[1]) - 1) == 0:
        # pole at z = -s: a running (alternating) sum
        if c[1] > 0:
            sign = np.where(np.arange(x.size) % 2 == 0, _LD(1), _LD(-1))
            return sign * np.cumsum(sign * x)
        return np.cumsum(x)
    a = [-v for v in c[1:]]
    q = len(a)
    hist = [_LD(0)] * q
    xs = list(x)
    out = [None] * len(xs)
    if q == 1:
        s, r = _LD(0), a[0]
        for i, v in enumerate(xs):
            s = v + r * s
            out[i] = s
    else:
        for i, v in enumerate(xs):
            s = v
            for j in range(q):
                s += a[j] * hist[j]
            hist = [s] + hist[:-1]
            out[i] = s
    return np.array(out, dtype=_LD)


def _ld(p) -> np.ndarray:
    return np.asarray(p.coeffs, dtype=_LD)


def _converged_impulse(tf: RationalTransfer, tail_tol: float = 1e-15) -> np.ndarray:
    n = 1024
    while True:
        h = tf.impulse_response(n)
        if np.max(np.abs(h[n // 2:])) < tail_tol:
            return h
        n *= 2
        if n > 2**22:
            raise TailNotConverged("impulse response too long for direct convolution")


def apply_filter(tf: RationalTransfer, x: np.ndarray) -> np.ndarray:
    """``psi(z) x`` with zero pre-sample values.

    The factor cascade runs in extended precision. Policies whose cascade
    would amplify rounding beyond ``CASCADE_GAIN_LIMIT`` (high orders) are
    applied as a convolution with their converged impulse response instead.
    """
    if tf.cascade_gain(min(np.size(x), 2**16)) > CASCADE_GAIN_LIMIT:
        h = _converged_impulse(tf)
        y = oaconvolve(np.asarray(x, dtype=float), h)[: np.size(x)]
        return y.astype(_LD)
    y = np.asarray(x, dtype=_LD).copy()
    for p, k in tf.numerator_factors:
        for _ in range(k):
            y = _fir(y, _ld(p))
    for q, k in tf.denominator_factors:
        for _ in range(k):
            y = _iir(y, _ld(q))
    return y


def invert_filter(tf: RationalTransfer, x: np.ndarray) -> np.ndarray:
    """``x / psi(z)`` with zero pre-sample values, in extended precision.

    A ``k``-fold zero on the circle makes this ill-conditioned: rounding
    grows like ``t**(k - 1)``. The result may then be inaccurate or
    non-finite; callers check it.
    """
    y = np.asarray(x, dtype=_LD).copy()
    with np.errstate(over="ignore", invalid="ignore"):
        for q, k in tf.denominator_factors:
            for _ in range(k):
                y = _fir(y, _ld(q))
        for p, k in tf.numerator_factors:
            for _ in range(k):
                y = _iir(y, _ld(p))
    return y


# -- statistics ---------------------------------------------------------------

def _batch_mean(values: np.ndarray, n_batches: int) -> tuple:
    b = values.reshape(n_batches, -1).mean(axis=1)
    return float(values.mean()), float(b.std(ddof=1) / math.sqrt(n_batches))


def _batch_acov(x: np.ndarray, n_lags: int, n_batches: int) -> tuple:
    xc = x - x.mean()
    est, se = [], []
    for k in range(n_lags):
        prod = xc[: xc.size - k] * xc[k:] if k else xc * xc
        usable = prod.size - prod.size % n_batches
        e, s = _batch_mean(prod[:usable], n_batches)
        est.append(e)
        se.append(s)
    return est, se


def _newsvendor_cost(level: np.ndarray, h: float, b: float) -> np.ndarray:
    return h * np.maximum(level, 0.0) + b * np.maximum(-level, 0.0)


# -- simulation ---------------------------------------------------------------

def simulate(config: SimulationConfig) -> SimulationResult:
    """Run the chain and compare empirical moments with their closed forms.

    Raises:
        NonInvertiblePolicyWithFullHistory: at config construction.
        InnovationRecoveryFailed: when the inverse filter misses the
            generated shocks by more than ``RECOVERY_TOL``.
    Warns:
        NegativeOrdersWarning: when some recorded order is negative.
    """
    cfg = config
    tf, d, sig, cp = cfg.policy, float(cfg.mean_demand), float(cfg.shock_std), cfg.cost_params
    burn, T = int(cfg.burn_in), int(cfg.periods)
    total = burn + T + 1
    window = slice(burn, burn + T)

    eps = standard_normals(cfg.seed, total).astype(_LD)
    x = apply_filter(tf, eps)
    orders = d + sig * x

    # analytic targets, scaled to order units
    si2 = inventory_variance(tf)
    if isinstance(cfg.forecaster, FullHistory):
        ss2 = supplier_msfe(tf, method="outer")
    else:
        predictor = finite_past_msfe(tf, cfg.forecaster.n, mean_demand=d)
        ss2 = predictor.msfe
    sigma_I, sigma_S = math.sqrt(si2) * sig, math.sqrt(ss2) * sig

    # retailer: I_t - I_{t-1} = O_{t-1} - D_t, offset so that E I = zeta_r sigma_I
    step = np.empty(total, dtype=_LD)
    step[0] = -eps[0]
    step[1:] = x[:-1] - eps[1:]
    inventory = (cp.zeta_r * sigma_I + sig * np.cumsum(step))[window].astype(float)

    # supplier: forecast[t] predicts O_{t+1} from information at t
    recovery = None
    if isinstance(cfg.forecaster, FullHistory):
        eps_hat = invert_filter(tf, (orders - d) / sig)
        with np.errstate(invalid="ignore"):
            recovery = float(np.max(np.abs(eps_hat[window] - eps[window])))
        if not recovery <= RECOVERY_TOL:
            raise InnovationRecoveryFailed(
                f"recovered shocks off by {recovery:.3g} (limit {RECOVERY_TOL:g}); "
                "repeated circle zeros make inversion ill-conditioned, use FiniteMemory")
        psi0 = _LD(tf.impulse_response(1)[0])
        forecast = d + sig * (apply_filter(tf, eps_hat) - psi0 * eps_hat)[1:]
    else:
        c = np.asarray(predictor.coefficients, dtype=_LD)
        # intercept + sum_k c_k O_{t-k}
        forecast = _LD(predictor.intercept) + np.convolve(orders, c)[: total - 1]
    err = (orders[1:] - forecast)[burn - 1: burn - 1 + T].astype(float)
    base_stock_gap = cp.zeta_s * sigma_S - err

    rec_orders = orders[window].astype(float)
    n_negative = int(np.count_nonzero(rec_orders < 0))
    if n_negative:
        warnings.warn(f"{n_negative} negative orders in the recorded window", NegativeOrdersWarning, stacklevel=2)

    B = cfg.n_batches
    inv_dev = inventory - inventory.mean()
    s_i, se_i = _batch_mean(inv_dev * inv_dev, B)
    s_m, se_m = _batch_mean(err * err, B)
    c_r, se_r = _batch_mean(_newsvendor_cost(inventory, cp.h_r, cp.b_r), B)
    c_s, se_s = _batch_mean(_newsvendor_cost(base_stock_gap, cp.h_s, cp.b_s), B)
    acov, se_acov = _batch_acov(rec_orders, N_ACOV_LAGS, B)
    acov_an = (autocovariances(tf, N_ACOV_LAGS - 1).b * sig * sig).tolist()

    return SimulationResult(
        sigma_I_sq_emp=s_i, se_sigma_I_sq=se_i,
        msfe_emp=s_m, se_msfe=se_m,
        cost_retailer_emp=c_r, se_cost_retailer=se_r,
        cost_supplier_emp=c_s, se_cost_supplier=se_s,
        acov_emp=acov, se_acov=se_acov,
        sigma_I_sq_analytic=si2 * sig * sig,
        msfe_analytic=ss2 * sig * sig,
        cost_retailer_analytic=cp.K_r * sigma_I,
        cost_supplier_analytic=cp.K_s * sigma_S,
        acov_analytic=acov_an,
        innovation_recovery_error=recovery,
        negative_orders=n_negative,
        periods=T, burn_in=burn, seed=int(cfg.seed), n_batches=B,
    )


@dataclass(frozen=True)
class CostIdentityReport:
    retailer_emp: float
    retailer_se: float
    retailer_analytic: float
    supplier_emp: float
    supplier_se: float
    supplier_analytic: float

    @property
    def retailer_rel_dev(self) -> float:
        return self.retailer_emp / self.retailer_analytic - 1.0

    @property
    def supplier_rel_dev(self) -> float:
        return self.supplier_emp / self.supplier_analytic - 1.0

    def within(self, n_se: float = 3.0) -> bool:
        return (abs(self.retailer_emp - self.retailer_analytic) <= n_se * self.retailer_se
                and abs(self.supplier_emp - self.supplier_analytic) <= n_se * self.supplier_se)


def validate_cost_identity(config: SimulationConfig) -> CostIdentityReport:
    """Compare empirical costs with ``K_r sigma_I`` and ``K_s sigma_S``.

    Requires at least a million periods so the comparison is meaningful.
    """
    if config.periods < 1_000_000:
        raise InvalidConfig("the cost identity check needs periods >= 1e6")
    r = simulate(config)
    return CostIdentityReport(r.cost_retailer_emp, r.se_cost_retailer, r.cost_retailer_analytic,
                              r.cost_supplier_emp, r.se_cost_supplier, r.cost_supplier_analytic)
