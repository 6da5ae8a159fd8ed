"""Replenishment policies built from the cost ratio ``kappa = K_r / K_s``.

The delay intensity ``gamma`` solving ``kappa^2 = (5 + 2 gamma) exp(-2 gamma)``
selects the delayed policies below ``kappa = sqrt(5)``; at or above that
value the MA(1) filter is optimal.

Families
--------
``ma1_optimal``            psi0 + (1 - psi0) z
``epsilon_policy``         (1+z)/2 * exp(gamma (z-1)/(1+z+1/k))
``limit_policy``           (1+z)/2 * exp(gamma (z-1)/(1+z))
``arma_approx``            ((1+z)/2)^(m+1) / ((1+gamma/m)/2 + (1-gamma/m)/2 z)^m
``outer_approx_of_inner``  (1 - R(z)/m)^(-m) for a rational exponent R
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.optimize import bisect

from .errors import (
    KappaOutOfRegime,
    KappaTooSmall,
    NonPositiveKappa,
    NotNegativeRealPart,
    RegimeWarning,
)
from .transfer_core import ROOT_BAND, ExponentialTransfer, Polynomial, RationalTransfer

__all__ = [
    "SQRT5",
    "GammaSolution",
    "MA1Optimal",
    "EpsilonSequence",
    "LimitPolicy",
    "ArmaApprox",
    "OuterApproxOfInner",
    "PolicySpec",
    "build_policy",
    "solve_gamma",
    "ma1_optimal",
    "arma_approx",
    "epsilon_policy",
    "limit_policy",
    "outer_approx_of_inner",
    "average_filter",
]

SQRT5 = math.sqrt(5.0)
_HALF_SUM = Polynomial([0.5, 0.5])


@dataclass(frozen=True)
class GammaSolution:
    kappa: float
    gamma: float
    residual: float


def _gamma_equation(g: float, log_k2: float) -> float:
    # log form of (5 + 2g) exp(-2g) = kappa^2, safe for tiny kappa
    return math.log(5.0 + 2.0 * g) - 2.0 * g - log_k2


def solve_gamma(kappa: float) -> GammaSolution:
    """Delay intensity for cost ratio ``kappa``.

    Bisection to width 1e-14 on the log form of the defining equation, then
    two Newton steps. Returns ``gamma = 0`` for ``kappa >= sqrt(5)``.

    Raises:
        NonPositiveKappa: if ``kappa <= 0``.
    """
    kappa = float(kappa)
    if not kappa > 0 or not math.isfinite(kappa):
        raise NonPositiveKappa(f"kappa must be positive, got {kappa}")
    if kappa >= SQRT5:
        return GammaSolution(kappa, 0.0, kappa**2 - 5.0)
    log_k2 = 2.0 * math.log(kappa)
    hi = 1.0
    while _gamma_equation(hi, log_k2) > 0:
        hi *= 2.0
    g = bisect(_gamma_equation, 0.0, hi, args=(log_k2,), xtol=1e-14, rtol=4 * np.finfo(float).eps)
    for _ in range(2):
        slope = 2.0 / (5.0 + 2.0 * g) - 2.0
        g = max(0.0, g - _gamma_equation(g, log_k2) / slope)
    return GammaSolution(kappa, g, kappa**2 - (5.0 + 2.0 * g) * math.exp(-2.0 * g))


def average_filter() -> RationalTransfer:
    """Two-period moving average ``(1 + z)/2``."""
    return RationalTransfer([(_HALF_SUM, 1)])


def ma1_optimal(kappa: float) -> RationalTransfer:
    """MA(1) policy ``psi0 + (1 - psi0) z`` with ``psi0 = 1 - 1/sqrt(kappa^2 - 1)``.

    Optimal for ``kappa >= sqrt(5)``; built with a warning for
    ``1 < kappa < sqrt(5)``.
    """
    kappa = float(kappa)
    if kappa <= 0:
        raise NonPositiveKappa(f"kappa must be positive, got {kappa}")
    if kappa <= 1.0:
        raise KappaTooSmall("the MA(1) optimum needs kappa > 1")
    if kappa < SQRT5:
        warnings.warn("kappa < sqrt(5): the MA(1) filter is not optimal here", RegimeWarning, stacklevel=2)
    psi0 = 1.0 - 1.0 / math.sqrt(kappa * kappa - 1.0)
    return RationalTransfer([(Polynomial([psi0, 1.0 - psi0]), 1)])


def _as_gamma(kappa: float, gamma: float | None) -> float:
    if gamma is not None:
        if gamma < 0:
            raise ValueError("gamma must be nonnegative")
        return float(gamma)
    return solve_gamma(kappa).gamma


def arma_approx(kappa: float, m: int, gamma: float | None = None) -> RationalTransfer:
    """Invertible ARMA(m, m+1) approximant of the delayed limit policy.

    ``psi(z) = ((1+z)/2)^(m+1) / (a + b z)^m`` with ``a = (1 + gamma/m)/2`` and
    ``b = 1 - a``, so the AR factor equals one at ``z = 1``. ``m = 0`` gives
    ``(1+z)/2``. When ``gamma/m`` is so small that the AR root falls inside the
    circle classification band, the factors cancel to ``(1+z)/2``.

    Args:
        kappa: cost ratio, used to solve for ``gamma`` unless given.
        m: AR order.
        gamma: optional delay intensity override.
    """
    m = int(m)
    if m < 0:
        raise ValueError("m must be nonnegative")
    g = _as_gamma(kappa, gamma)
    if m == 0 or g / m < ROOT_BAND:
        return average_filter()
    a = 0.5 * (1.0 + g / m)
    return RationalTransfer([(_HALF_SUM, m + 1)], [(Polynomial([a, 1.0 - a]), m)])


def _delayed_exponent(gamma: float, shift: float):
    return (Polynomial([-gamma, gamma]), Polynomial([1.0 + shift, 1.0]))


def epsilon_policy(kappa: float, k: int, gamma: float | None = None) -> Union[ExponentialTransfer, RationalTransfer]:
    """Member ``k`` of the nearly optimal sequence, analytic on the closed disk.

    Returns ``(1+z)/2`` as a rational filter when ``gamma = 0``.
    """
    k = int(k)
    if k < 1:
        raise ValueError("k must be at least 1")
    if kappa >= SQRT5 and gamma is None:
        warnings.warn("kappa >= sqrt(5): the delayed family collapses to (1+z)/2", RegimeWarning, stacklevel=2)
    g = _as_gamma(kappa, gamma)
    if g == 0.0:
        return average_filter()
    return ExponentialTransfer(average_filter(), _delayed_exponent(g, 1.0 / k))


def limit_policy(kappa: float, gamma: float | None = None) -> ExponentialTransfer:
    """Limit ``(1+z)/2 * exp(gamma (z-1)/(1+z))``, singular at ``z = -1``."""
    if gamma is None and kappa >= SQRT5:
        raise KappaOutOfRegime("the delayed limit exists only for kappa < sqrt(5)")
    g = _as_gamma(kappa, gamma)
    if g == 0.0:
        raise KappaOutOfRegime("gamma = 0 gives no singular factor")
    return ExponentialTransfer(average_filter(), _delayed_exponent(g, 0.0))


def _max_real_part(rn: Polynomial, rd: Polynomial, n_angles: int = 1024) -> float:
    theta = 2.0 * np.pi * (np.arange(n_angles) + 0.5) / n_angles
    best = -np.inf
    for r in (0.0, 0.25, 0.5, 0.75, 0.9, 0.99, 1.0):
        z = r * np.exp(1j * theta) if r else np.zeros(1, dtype=complex)
        den = rd(z)
        ok = np.abs(den) > 1e-6
        if np.any(ok):
            best = max(best, float(np.max((rn(z[ok]) / den[ok]).real)))
    return best


def outer_approx_of_inner(exponent, m: int, tol: float = 1e-9) -> RationalTransfer:
    """Rational outer filter ``(1 - R(z)/m)^(-m)`` approximating ``exp(R(z))``.

    Args:
        exponent: pair ``(Rn, Rd)`` of polynomials or coefficient lists with
            ``Rn(1) = 0`` and ``Re R <= 0`` on the closed disk.
        m: approximation order, at least 1.
        tol: allowed positive excursion of ``Re R`` on the sampling grid.

    Raises:
        NotNegativeRealPart: if ``Re R`` exceeds ``tol`` at a sampled point.
    """
    m = int(m)
    if m < 1:
        raise ValueError("m must be at least 1")
    rn_c = np.atleast_1d(np.asarray(exponent[0].coeffs if isinstance(exponent[0], Polynomial) else exponent[0], float))
    if not np.any(rn_c):
        return RationalTransfer()
    rn = Polynomial(rn_c)
    rd = exponent[1] if isinstance(exponent[1], Polynomial) else Polynomial(exponent[1])
    if _max_real_part(rn, rd) > tol:
        raise NotNegativeRealPart("exponent has positive real part on the disk")
    shifted = np.polynomial.polynomial.polysub(rd.coeffs, rn.coeffs / m)
    return RationalTransfer([(rd, m)], [(Polynomial(shifted), m)])


@dataclass(frozen=True)
class MA1Optimal:
    pass


@dataclass(frozen=True)
class EpsilonSequence:
    k: int


@dataclass(frozen=True)
class LimitPolicy:
    pass


@dataclass(frozen=True)
class ArmaApprox:
    m: int


@dataclass(frozen=True)
class OuterApproxOfInner:
    m: int


Family = Union[MA1Optimal, EpsilonSequence, LimitPolicy, ArmaApprox, OuterApproxOfInner]


@dataclass(frozen=True)
class PolicySpec:
    """Named policy family at a given cost ratio."""

    kappa: float
    family: Family

    def __post_init__(self):
        if not self.kappa > 0:
            raise NonPositiveKappa(f"kappa must be positive, got {self.kappa}")


def build_policy(spec: PolicySpec):
    """Construct the filter described by ``spec``.

    ``OuterApproxOfInner`` builds the rational approximation of the singular
    factor ``exp(gamma (z-1)/(1+z))`` alone, without the ``(1+z)/2`` prefactor.
    """
    fam = spec.family
    if isinstance(fam, MA1Optimal):
        return ma1_optimal(spec.kappa)
    if spec.kappa >= SQRT5:
        warnings.warn("kappa >= sqrt(5): delayed families reduce to (1+z)/2", RegimeWarning, stacklevel=2)
    if isinstance(fam, EpsilonSequence):
        return epsilon_policy(spec.kappa, fam.k)
    if isinstance(fam, LimitPolicy):
        return limit_policy(spec.kappa)
    if isinstance(fam, ArmaApprox):
        return arma_approx(spec.kappa, fam.m)
    if isinstance(fam, OuterApproxOfInner):
        g = solve_gamma(spec.kappa).gamma
        return outer_approx_of_inner(([-g, g], [1.0, 1.0]), fam.m)
    raise TypeError(f"unknown policy family {fam!r}")
