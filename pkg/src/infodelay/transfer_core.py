"""Causal transfer functions on the unit disk.

A replenishment policy is a filter ``psi(z) = sum_n psi_n z^n`` mapping demand
shocks to orders. Two representations are supported:

* :class:`RationalTransfer` -- ARMA filters stored as products of factor
  polynomials raised to integer multiplicities. Keeping the factored form
  avoids expanding something like ``(a + b z)^1000``, whose coefficients are
  useless in double precision.
* :class:`ExponentialTransfer` -- a rational prefactor times ``exp(R(z))`` for
  a rational exponent ``R`` with ``R(1) = 0``.

Frequencies follow the convention ``z = exp(-i*lambda)`` throughout.

Example
-------
>>> from infodelay.transfer_core import Polynomial, RationalTransfer, group_delay
>>> avg = RationalTransfer.from_coefficients([0.5, 0.5])
>>> group_delay(avg)
0.5
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.signal import lfilter
from scipy.special import gammaln

from .errors import (
    BoundaryPole,
    InvalidPolynomial,
    NotAdmissible,
    PoleOnEvaluationPoint,
    TailNotConverged,
    UnpairedComplexZero,
    UnstableDenominator,
    ZeroOnOrOutsideCircle,
)

__all__ = [
    "ROOT_BAND",
    "Polynomial",
    "RationalTransfer",
    "ExponentialTransfer",
    "SpectralGrid",
    "BlaschkeFactor",
    "AutocovarianceSequence",
    "evaluate",
    "impulse_response",
    "group_delay",
    "autocovariances",
    "blaschke_to_rational",
    "spectral_grid",
]

#: Roots with ``| |r| - 1 | < ROOT_BAND`` are classified as lying on the circle.
ROOT_BAND = 1e-9
#: Tolerance for the bounded-inventory condition ``psi(1) = 1``.
UNIT_TOL = 1e-12
#: Largest tolerated rounding gain of the cascaded AR recursion.
CASCADE_GAIN_LIMIT = 1e3
#: Gain up to which the recursion is still used when the circle FFT fails.
CASCADE_GAIN_FALLBACK = 1e8


@dataclass(frozen=True, eq=False)
class Polynomial:
    """Real polynomial with ``coeffs[j]`` multiplying ``z**j``.

    Trailing zeros are stripped so the degree is well defined.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=float)).copy()
        if c.ndim != 1 or c.size == 0:
            raise InvalidPolynomial("coefficient list must be a nonempty 1-d sequence")
        if not np.all(np.isfinite(c)):
            raise InvalidPolynomial("coefficients must be finite")
        nz = np.flatnonzero(c)
        if nz.size == 0:
            raise InvalidPolynomial("zero polynomial has no degree")
        c = c[: nz[-1] + 1]
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, z):
        return npoly.polyval(z, self.coeffs)

    def slope_at_one(self) -> float:
        """Value of the derivative at ``z = 1``."""
        return float(np.dot(np.arange(self.coeffs.size), self.coeffs))

    def roots(self) -> np.ndarray:
        """Roots by companion-matrix eigenvalues (exact for degree one)."""
        if self.degree == 0:
            return np.zeros(0, dtype=complex)
        if self.degree == 1:
            return np.array([-self.coeffs[0] / self.coeffs[1]], dtype=complex)
        return npoly.polyroots(self.coeffs).astype(complex)

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            return Polynomial(npoly.polymul(self.coeffs, other.coeffs))
        return Polynomial(self.coeffs * float(other))

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, Polynomial) and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    def __repr__(self):
        return f"Polynomial({self.coeffs.tolist()})"


Factor = tuple  # (Polynomial, multiplicity)


def _as_factors(spec) -> tuple:
    out = []
    for item in spec:
        if isinstance(item, Polynomial):
            poly, mult = item, 1
        else:
            poly, mult = item
            poly = poly if isinstance(poly, Polynomial) else Polynomial(poly)
        mult = int(mult)
        if mult < 0:
            raise InvalidPolynomial("factor multiplicities must be nonnegative")
        if mult and not (poly.degree == 0 and poly.coeffs[0] == 1.0):
            out.append((poly, mult))
    return tuple(out)


def _expand_power(poly: Polynomial, mult: int) -> np.ndarray:
    """Coefficients of ``poly**mult``; linear factors use log-space binomials."""
    if mult == 0:
        return np.ones(1)
    c = poly.coeffs
    if c.size == 2 and c[0] != 0.0:
        j = np.arange(mult + 1)
        logmag = (
            gammaln(mult + 1) - gammaln(j + 1) - gammaln(mult - j + 1)
            + (mult - j) * math.log(abs(c[0])) + j * math.log(abs(c[1]))
        )
        sign = np.where(c[0] < 0, (-1.0) ** (mult - j), 1.0) * np.where(c[1] < 0, (-1.0) ** j, 1.0)
        return sign * np.exp(logmag)
    out = np.ones(1)
    for _ in range(mult):
        out = npoly.polymul(out, c)
    return out


def _log_product(factors, z):
    """Sum of ``mult * log(poly(z))`` with ``-inf`` real part at exact zeros."""
    acc = np.zeros(np.shape(z), dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        for poly, mult in factors:
            acc = acc + mult * np.log(poly(z).astype(complex))
    return acc


def _circle_coefficients(evaluate, n_terms: int, tol: float, n_start: int = 2**14,
                         n_cap: int = 2**20) -> np.ndarray:
    """Taylor coefficients from FFT of samples on the unit circle.

    The grid doubles until the first ``n_terms`` coefficients change by less
    than ``tol``.
    """
    n = max(int(n_start), 1 << max(1, (2 * n_terms - 1).bit_length()))
    prev = None
    while n <= n_cap:
        zs = np.exp(2j * np.pi * np.arange(n) / n)
        cur = (np.fft.fft(evaluate(zs)).real / n)[:n_terms]
        if prev is not None and np.max(np.abs(cur - prev)) < tol:
            return cur
        prev = cur
        n *= 2
    raise TailNotConverged(f"coefficients not converged on a {n_cap}-point grid")


class RationalTransfer:
    """ARMA filter ``psi(z) = prod p_i(z)^k_i / prod q_j(z)^l_j``.

    Parameters
    ----------
    numerator, denominator : iterable
        Factors given as ``(Polynomial, multiplicity)`` pairs, bare
        :class:`Polynomial` objects (multiplicity one) or coefficient lists
        paired with multiplicities.
    check : bool
        Enforce a stable denominator and ``psi(1) = 1``.

    Notes
    -----
    The denominator must have no roots in the closed unit disk. The
    ``is_invertible`` flag is computed from the numerator roots: none in the
    open disk and, on the circle, only at ``z = -1``.
    """

    def __init__(self, numerator: Iterable = (), denominator: Iterable = (), *, check: bool = True):
        self.numerator_factors = _as_factors(numerator)
        self.denominator_factors = _as_factors(denominator)
        self._num_roots = [(p.roots(), k) for p, k in self.numerator_factors]
        self._den_roots = [(q.roots(), k) for q, k in self.denominator_factors]
        if check:
            for r, _ in self._den_roots:
                if r.size and np.min(np.abs(r)) <= 1.0 + ROOT_BAND:
                    raise UnstableDenominator(f"denominator root of modulus {np.min(np.abs(r)):.6g}")
            at_one = self.value_at_one()
            if abs(at_one - 1.0) > UNIT_TOL:
                raise NotAdmissible(f"psi(1) = {at_one!r}, expected 1")

    @classmethod
    def from_coefficients(cls, numerator: Sequence[float], denominator: Sequence[float] = (1.0,), **kw):
        """Build from expanded numerator and denominator coefficient lists."""
        return cls([(Polynomial(numerator), 1)], [(Polynomial(denominator), 1)], **kw)

    @classmethod
    def from_roots(cls, zeros: Sequence[complex] = (), poles: Sequence[complex] = (), delay: int = 0):
        """Normalized filter with the given zeros, poles and pure delay.

        Each real root ``r`` contributes ``(z - r)/(1 - r)``; complex roots
        must come in conjugate pairs and contribute the matching quadratic,
        so the result satisfies ``psi(1) = 1`` by construction.
        """
        num = [(Polynomial([0.0, 1.0]), delay)] if delay else []
        num += [(f, 1) for f in _normalized_root_factors(zeros)]
        den = [(f, 1) for f in _normalized_root_factors(poles)]
        return cls(num, den)

    # -- structure -------------------------------------------------------
    @property
    def numerator(self) -> Polynomial:
        return Polynomial(self._expanded(self.numerator_factors) * self._renorm())

    @property
    def denominator(self) -> Polynomial:
        return Polynomial(self._expanded(self.denominator_factors))

    @staticmethod
    def _expanded(factors) -> np.ndarray:
        out = np.ones(1)
        for p, k in factors:
            out = npoly.polymul(out, _expand_power(p, k))
        return out

    def _renorm(self) -> float:
        # rescale the expanded numerator so the coefficient ratio sums to one
        n1 = self._expanded(self.numerator_factors).sum()
        d1 = self._expanded(self.denominator_factors).sum()
        ratio = d1 / n1 if n1 != 0 else 1.0
        return ratio if abs(ratio - 1.0) < 1e-9 else 1.0

    @property
    def num_degree(self) -> int:
        return sum(p.degree * k for p, k in self.numerator_factors)

    @property
    def den_degree(self) -> int:
        return sum(q.degree * k for q, k in self.denominator_factors)

    def numerator_roots(self) -> np.ndarray:
        return _flatten_roots(self._num_roots)

    def denominator_roots(self) -> np.ndarray:
        return _flatten_roots(self._den_roots)

    @property
    def is_invertible(self) -> bool:
        for r, _ in self._num_roots:
            mod = np.abs(r)
            if np.any(mod < 1.0 - ROOT_BAND):
                return False
            on = np.abs(mod - 1.0) <= ROOT_BAND
            if np.any(np.abs(r[on] + 1.0) > 1e-6):
                return False
        return True

    def ar_spectral_radius(self) -> float:
        """Largest modulus of the inverse denominator roots (0 for pure MA)."""
        r = self.denominator_roots()
        return float(np.max(1.0 / np.abs(r))) if r.size else 0.0

    # -- numerics --------------------------------------------------------
    def value_at_one(self) -> float:
        val = 1.0
        for p, k in self.numerator_factors:
            val *= float(p(1.0)) ** k
        for q, k in self.denominator_factors:
            val /= float(q(1.0)) ** k
        return val

    def evaluate(self, z):
        z_arr = np.asarray(z, dtype=complex)
        for q, _ in self.denominator_factors:
            if np.any(q(z_arr) == 0):
                raise PoleOnEvaluationPoint("evaluation point is a denominator root")
        log_val = _log_product(self.numerator_factors, z_arr) - _log_product(self.denominator_factors, z_arr)
        with np.errstate(invalid="ignore"):
            out = np.where(np.isneginf(log_val.real), 0.0 + 0.0j, np.exp(log_val))
        return complex(out) if np.ndim(z) == 0 else out

    __call__ = evaluate

    def log_abs(self, z):
        """``log|psi(z)|`` computed factor by factor (no overflow)."""
        z_arr = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore"):
            acc = np.zeros(z_arr.shape)
            for p, k in self.numerator_factors:
                acc += k * np.log(np.abs(p(z_arr)))
            for q, k in self.denominator_factors:
                acc -= k * np.log(np.abs(q(z_arr)))
        return acc

    def impulse_response(self, n_terms: int) -> np.ndarray:
        """First ``n_terms`` coefficients.

        The AR recursion is cascaded factor by factor. When its homogeneous
        response would amplify rounding past ``CASCADE_GAIN_LIMIT`` (high
        repeated poles nearly cancelled by zeros), the coefficients come from
        an FFT of the factored values on the unit circle instead. If that
        does not converge (a pole right next to the circle) the recursion is
        kept while its gain is below ``CASCADE_GAIN_FALLBACK``.
        """
        n_terms = int(n_terms)
        x = np.zeros(n_terms)
        x[0] = 1.0
        for p, k in self.numerator_factors:
            for _ in range(k):
                x = lfilter(p.coeffs, [1.0], x)
        if not self.denominator_factors:
            return x
        gain = self.cascade_gain(n_terms, x)
        if not gain <= CASCADE_GAIN_LIMIT:
            try:
                return _circle_coefficients(self.evaluate, n_terms, tol=1e-14, n_start=1024)
            except TailNotConverged:
                # a pole hugging the circle; the recursion is the better bet
                # as long as its rounding gain stays moderate
                if not gain <= CASCADE_GAIN_FALLBACK:
                    raise
        for q, k in self.denominator_factors:
            for _ in range(k):
                x = lfilter([1.0], q.coeffs, x)
        return x

    def cascade_gain(self, n_terms: int, head: np.ndarray | None = None) -> float:
        """Peak of the AR homogeneous response over ``n_terms`` lags times the
        peak of ``head`` (default: the MA part's impulse response).

        This bounds how much the cascaded recursion amplifies rounding; it is
        ``inf`` when the response overflows.
        """
        n_terms = int(n_terms)
        if head is None:
            head = np.zeros(n_terms)
            head[0] = 1.0
            for p, k in self.numerator_factors:
                for _ in range(k):
                    head = lfilter(p.coeffs, [1.0], head)
        g = np.zeros(n_terms)
        g[0] = 1.0
        with np.errstate(over="ignore", invalid="ignore"):
            for q, k in self.denominator_factors:
                for _ in range(k):
                    g = lfilter([1.0], q.coeffs, g)
            gain = float(np.max(np.abs(g)) * np.max(np.abs(head)))
        return gain if math.isfinite(gain) else math.inf

    def group_delay(self) -> float:
        gd = 0.0
        for p, k in self.numerator_factors:
            gd += k * p.slope_at_one() / float(p(1.0))
        for q, k in self.denominator_factors:
            gd -= k * q.slope_at_one() / float(q(1.0))
        return gd

    def decay_length(self) -> float:
        """``1/|log rho|`` for AR spectral radius ``rho`` (0 without AR part)."""
        rho = self.ar_spectral_radius()
        return 0.0 if rho == 0.0 else 1.0 / abs(math.log(rho))

    # -- algebra ---------------------------------------------------------
    def __mul__(self, other):
        if isinstance(other, RationalTransfer):
            return RationalTransfer(
                self.numerator_factors + other.numerator_factors,
                self.denominator_factors + other.denominator_factors,
            )
        if isinstance(other, ExponentialTransfer):
            return other * self
        return NotImplemented

    def delayed(self, k: int) -> "RationalTransfer":
        """The filter ``z**k * psi(z)``."""
        return self * RationalTransfer([(Polynomial([0.0, 1.0]), k)])

    def __repr__(self):
        def fmt(fs):
            return " * ".join(f"({p.coeffs.tolist()})^{k}" for p, k in fs) or "1"
        return f"RationalTransfer({fmt(self.numerator_factors)} / {fmt(self.denominator_factors)})"


def _flatten_roots(groups) -> np.ndarray:
    parts = [np.repeat(r, k) for r, k in groups if r.size]
    return np.concatenate(parts) if parts else np.zeros(0, dtype=complex)


def _conjugate_pairs(values: Sequence[complex], tol: float = 1e-12):
    """Split roots into real values and representatives of conjugate pairs."""
    reals, pending = [], []
    for v in values:
        v = complex(v)
        if abs(v.imag) <= tol:
            reals.append(v.real)
        else:
            pending.append(v)
    uppers = [v for v in pending if v.imag > 0]
    lowers = [v for v in pending if v.imag < 0]
    if len(uppers) != len(lowers):
        raise UnpairedComplexZero("complex roots must be given in conjugate pairs")
    for u in uppers:
        j = min(range(len(lowers)), key=lambda i: abs(lowers[i] - u.conjugate()), default=None)
        if j is None or abs(lowers[j] - u.conjugate()) > 1e-9:
            raise UnpairedComplexZero(f"missing conjugate of {u}")
        lowers.pop(j)
    return reals, uppers


def _normalized_root_factors(roots: Sequence[complex]) -> list:
    reals, uppers = _conjugate_pairs(roots)
    out = []
    for r in reals:
        out.append(Polynomial([-r / (1.0 - r), 1.0 / (1.0 - r)]))
    for u in uppers:
        c = [abs(u) ** 2, -2.0 * u.real, 1.0]
        s = sum(c)
        out.append(Polynomial([x / s for x in c]))
    return out


class ExponentialTransfer:
    """Filter ``psi(z) = P(z) * exp(Rn(z)/Rd(z))`` with ``Rn(1) = 0``.

    Parameters
    ----------
    outer_prefactor : RationalTransfer
        Rational part ``P`` with ``P(1) = 1``.
    exponent : tuple of Polynomial
        ``(Rn, Rd)``; ``Rd`` must have no roots in the open disk. Roots on the
        circle are allowed and recorded in :attr:`boundary_poles`.
    """

    def __init__(self, outer_prefactor: RationalTransfer, exponent):
        rn, rd = exponent
        self.outer_prefactor = outer_prefactor
        self.exponent_numerator = rn if isinstance(rn, Polynomial) else Polynomial(rn)
        self.exponent_denominator = rd if isinstance(rd, Polynomial) else Polynomial(rd)
        d1 = float(self.exponent_denominator(1.0))
        if d1 == 0.0:
            raise NotAdmissible("exponent has a pole at z = 1")
        if abs(float(self.exponent_numerator(1.0)) / d1) > UNIT_TOL:
            raise NotAdmissible("exponent must vanish at z = 1")
        roots = self.exponent_denominator.roots()
        if roots.size and np.min(np.abs(roots)) < 1.0 - ROOT_BAND:
            raise UnstableDenominator("exponent has a pole inside the unit disk")
        self.boundary_poles = roots[np.abs(np.abs(roots) - 1.0) <= ROOT_BAND]

    @property
    def exponent(self):
        return (self.exponent_numerator, self.exponent_denominator)

    @property
    def has_boundary_pole(self) -> bool:
        return self.boundary_poles.size > 0

    def exponent_value(self, z):
        return self.exponent_numerator(z) / self.exponent_denominator(z)

    def evaluate(self, z):
        z_arr = np.asarray(z, dtype=complex)
        if np.any(self.exponent_denominator(z_arr) == 0):
            raise PoleOnEvaluationPoint("evaluation point is a pole of the exponent")
        out = self.outer_prefactor.evaluate(z_arr) * np.exp(self.exponent_value(z_arr))
        return complex(out) if np.ndim(z) == 0 else out

    __call__ = evaluate

    def exponent_slope_at_one(self) -> float:
        rn, rd = self.exponent
        n1, d1 = float(rn(1.0)), float(rd(1.0))
        return (rn.slope_at_one() * d1 - n1 * rd.slope_at_one()) / d1**2

    def group_delay(self) -> float:
        return self.outer_prefactor.group_delay() + self.exponent_slope_at_one()

    def impulse_response(self, n_terms: int, tol: float = 1e-10, n_start: int = 2**14,
                         n_cap: int = 2**20) -> np.ndarray:
        """Taylor coefficients from FFT of samples on the unit circle.

        The grid doubles until the first ``n_terms`` coefficients change by
        less than ``tol``.
        """
        if self.has_boundary_pole:
            raise BoundaryPole("exponent has a pole on the unit circle")
        return _circle_coefficients(self.evaluate, int(n_terms), tol, n_start, n_cap)

    def __mul__(self, other):
        if isinstance(other, RationalTransfer):
            return ExponentialTransfer(self.outer_prefactor * other, self.exponent)
        if isinstance(other, ExponentialTransfer):
            rn1, rd1 = self.exponent
            rn2, rd2 = other.exponent
            prefactor = self.outer_prefactor * other.outer_prefactor
            total = npoly.polyadd((rn1 * rd2).coeffs, (rn2 * rd1).coeffs)
            if not np.any(total):
                return prefactor
            return ExponentialTransfer(prefactor, (Polynomial(total), rd1 * rd2))
        return NotImplemented

    __rmul__ = __mul__

    def delayed(self, k: int) -> "ExponentialTransfer":
        return ExponentialTransfer(self.outer_prefactor.delayed(k), self.exponent)

    def __repr__(self):
        return (f"ExponentialTransfer({self.outer_prefactor!r} * exp({self.exponent_numerator.coeffs.tolist()}"
                f" / {self.exponent_denominator.coeffs.tolist()}))")


Transfer = Union[RationalTransfer, ExponentialTransfer]


@dataclass(frozen=True)
class SpectralGrid:
    """Boundary values ``psi(exp(-i*lambda))`` on a uniform grid in ``[-pi, pi)``."""

    n_points: int
    lambdas: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class BlaschkeFactor:
    """Finite Blaschke product with zeros strictly inside the unit disk."""

    zeros: tuple = field(default_factory=tuple)

    def __post_init__(self):
        zs = tuple(complex(a) for a in self.zeros)
        for a in zs:
            if abs(a) >= 1.0:
                raise ZeroOnOrOutsideCircle(f"zero {a} not strictly inside the unit disk")
        _conjugate_pairs(zs)
        object.__setattr__(self, "zeros", zs)


@dataclass(frozen=True)
class AutocovarianceSequence:
    """Autocovariances ``b[k]`` of an order process driven by unit-variance shocks."""

    b: np.ndarray
    shock_variance: float = 1.0

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float).copy()
        if b.ndim != 1 or b.size == 0 or not b[0] > 0:
            raise ValueError("autocovariances need b[0] > 0")
        b.setflags(write=False)
        object.__setattr__(self, "b", b)

    @property
    def max_lag(self) -> int:
        return self.b.size - 1

    def toeplitz(self, size: int) -> np.ndarray:
        from scipy.linalg import toeplitz

        return toeplitz(self.b[:size])


def evaluate(tf: Transfer, z):
    """Value of the filter at ``z`` (scalar or array)."""
    return tf.evaluate(z)


def impulse_response(tf: Transfer, n_terms: int) -> np.ndarray:
    """First ``n_terms`` MA coefficients ``psi_0 .. psi_{n_terms-1}``."""
    if int(n_terms) < 1:
        raise ValueError("n_terms must be at least 1")
    return tf.impulse_response(int(n_terms))


def group_delay(tf: Transfer) -> float:
    """Derivative of the filter at ``z = 1``, i.e. the center of mass of its coefficients."""
    return float(tf.group_delay())


def autocovariances(tf: Transfer, max_lag: int, n_terms: int | None = None,
                    tail_tol: float = 1e-12, max_terms: int = 2**22) -> AutocovarianceSequence:
    """Autocovariances ``b_k = sum_j psi_j psi_{j+k}`` for ``k = 0..max_lag``.

    The impulse response is lengthened by doubling until the energy of its
    second half is below ``tail_tol``.
    """
    max_lag = int(max_lag)
    n = int(n_terms) if n_terms else max(256, 4 * (max_lag + 1))
    if isinstance(tf, RationalTransfer):
        n = max(n, int(40 * tf.decay_length()))
    while True:
        h = impulse_response(tf, n)
        if np.sum(h[n // 2:] ** 2) < tail_tol:
            break
        n *= 2
        if n > max_terms:
            raise TailNotConverged(f"impulse-response tail above {tail_tol} after {max_terms} terms")
    if (max_lag + 1) * n <= 5e7:
        b = np.array([h[: n - k] @ h[k:] if k < n else 0.0 for k in range(max_lag + 1)])
    else:
        spec = np.fft.rfft(h, 2 * n)
        b = np.fft.irfft(spec * np.conj(spec), 2 * n)[: max_lag + 1]
    return AutocovarianceSequence(b)


def blaschke_to_rational(b: BlaschkeFactor) -> RationalTransfer:
    """All-pass rational filter with the given zeros, normalized to 1 at ``z = 1``.

    A real zero ``a`` gives ``(z - a)/(1 - a z)``; a conjugate pair gives the
    matching real quadratic ratio.
    """
    reals, uppers = _conjugate_pairs(b.zeros)
    num, den = [], []
    for a in reals:
        num.append((Polynomial([-a, 1.0]), 1))
        den.append((Polynomial([1.0, -a]), 1))
    for u in uppers:
        m2, s = abs(u) ** 2, 2.0 * u.real
        num.append((Polynomial([m2, -s, 1.0]), 1))
        den.append((Polynomial([1.0, -s, m2]), 1))
    return RationalTransfer(_merge(num), _merge(den))


def _merge(factors):
    counts: dict = {}
    for p, k in factors:
        counts[p] = counts.get(p, 0) + k
    return list(counts.items())


def spectral_grid(tf: Transfer, n_points: int = 2**14) -> SpectralGrid:
    """Sample boundary values on ``lambda_j = -pi + 2 pi j / n_points``.

    At a boundary pole of the exponent the value is set to its limit along the
    circle, which is zero when the prefactor vanishes there.
    """
    n = int(n_points)
    if n < 2 or n & (n - 1):
        raise ValueError("n_points must be a power of two")
    lam = -np.pi + 2.0 * np.pi * np.arange(n) / n
    z = np.exp(-1j * lam)
    if isinstance(tf, ExponentialTransfer) and tf.has_boundary_pole:
        bad = tf.exponent_denominator(z) == 0
        vals = np.zeros(n, dtype=complex)
        vals[~bad] = tf.evaluate(z[~bad])
        if np.any(bad) and np.any(np.abs(tf.outer_prefactor.evaluate(z[bad])) > 0):
            raise PoleOnEvaluationPoint("boundary pole where the prefactor does not vanish")
    else:
        vals = tf.evaluate(z)
    return SpectralGrid(n, lam, vals)
