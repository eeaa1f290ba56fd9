"""Gauge functions z(u) > 0 and the change of variable they induce.

Psi(u) is the integral of 1 / sqrt(z) from a fixed base point; it is strictly
increasing, so it has an inverse (written I here) with

    I'(v)  = sqrt(z(I(v))),        I''(v) = z'(I(v)) / 2.

Psi straightens the quadratic-gradient compatibility structure of the
Hamiltonians treated in this package; everything downstream (transformed
Hamiltonians, the v-form of the pricing equation, the regularity constants)
consumes it through this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import ConfigurationError, DomainError, RangeError

_QUAD_OPTS = dict(epsabs=1e-13, epsrel=1e-13, limit=200)
_TABLE_SIZE = 512


@dataclass(frozen=True)
class GaugeFunction:
    """A positive gauge z with derivative and bounds on a working interval."""

    name: str
    z: Callable[[float], float]
    z_prime: Callable[[float], float]
    lambda0: float
    Lambda0: float
    domain: tuple[float, float]
    # base point override for Psi; None means lower-edge default
    base_point: float | None = None

    def __post_init__(self):
        if not 0.0 < self.lambda0 <= self.Lambda0:
            raise ConfigurationError(
                f"gauge {self.name}: need 0 < lambda0 <= Lambda0, "
                f"got ({self.lambda0!r}, {self.Lambda0!r})"
            )


@dataclass
class Transformation:
    """Psi, its inverse and the derivative identities, for one gauge.

    Psi is evaluated by adaptive quadrature accumulated along a monotone
    512-entry table; the inverse brackets on the table and polishes with a
    safeguarded root find plus Newton steps (Psi' = 1/sqrt(z) is known
    exactly).  Immutable after construction.
    """

    gauge: GaugeFunction
    margin: float
    base_point: float = field(init=False)
    _u_table: np.ndarray = field(init=False, repr=False)
    _psi_table: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        a, b = self.gauge.domain
        if self.margin < 0.0:
            raise ConfigurationError(f"margin must be nonnegative, got {self.margin!r}")
        lo, hi = a - self.margin, b + self.margin
        base = self.gauge.base_point if self.gauge.base_point is not None else lo
        if not lo <= base <= hi:
            raise ConfigurationError(
                f"base point {base!r} outside transformation domain ({lo!r}, {hi!r})"
            )
        self.base_point = base
        us = np.linspace(lo, hi, _TABLE_SIZE)
        zs = np.array([self.gauge.z(u) for u in us])
        if np.any(zs <= 0.0):
            bad = us[int(np.argmin(zs))]
            raise ConfigurationError(
                f"gauge {self.gauge.name} is not positive near u = {bad!r}; "
                "gauges must stay bounded away from zero on the domain"
            )
        integrand = lambda t: 1.0 / math.sqrt(self.gauge.z(t))
        # accumulate panel integrals, then shift so Psi(base_point) = 0
        psis = np.empty_like(us)
        psis[0] = 0.0
        for i in range(1, len(us)):
            psis[i] = psis[i - 1] + quad(integrand, us[i - 1], us[i], **_QUAD_OPTS)[0]
        k = min(max(int(np.searchsorted(us, base)) - 1, 0), len(us) - 1)
        offset = psis[k] + quad(integrand, us[k], base, **_QUAD_OPTS)[0]
        self._u_table = us
        self._psi_table = psis - offset

    @property
    def u_range(self) -> tuple[float, float]:
        return float(self._u_table[0]), float(self._u_table[-1])

    @property
    def v_range(self) -> tuple[float, float]:
        return float(self._psi_table[0]), float(self._psi_table[-1])

    def psi(self, u: float) -> float:
        """Psi(u): quadrature of 1/sqrt(z) from the base point to u."""
        lo, hi = self.u_range
        if not lo <= u <= hi:
            raise DomainError(
                f"u = {u!r} outside transformation domain [{lo!r}, {hi!r}]"
            )
        k = min(int(np.searchsorted(self._u_table, u)), len(self._u_table) - 1)
        k = max(k - 1, 0)
        integrand = lambda t: 1.0 / math.sqrt(self.gauge.z(t))
        tail = quad(integrand, self._u_table[k], u, **_QUAD_OPTS)[0]
        return float(self._psi_table[k] + tail)

    def psi_inverse(self, v: float) -> float:
        """I(v): table bracketing, brentq, then Newton polish."""
        vlo, vhi = self.v_range
        if not vlo - 1e-12 <= v <= vhi + 1e-12:
            raise RangeError(f"v = {v!r} outside Psi range [{vlo!r}, {vhi!r}]")
        v = min(max(v, vlo), vhi)
        k = int(np.searchsorted(self._psi_table, v))
        k = min(max(k, 1), len(self._psi_table) - 1)
        a, b = self._u_table[k - 1], self._u_table[k]
        fa = self._psi_table[k - 1] - v
        fb = self._psi_table[k] - v
        if fa == 0.0:
            u = float(a)
        elif fb == 0.0:
            u = float(b)
        else:
            u = brentq(lambda t: self.psi(t) - v, a, b, xtol=1e-14, rtol=8.9e-16)
        # two Newton steps with the analytic derivative Psi' = 1/sqrt(z)
        lo, hi = self.u_range
        for _ in range(2):
            u = u - (self.psi(u) - v) * math.sqrt(self.gauge.z(u))
            u = min(max(u, lo), hi)
        return float(u)

    def inverse_derivatives(self, v: float) -> tuple[float, float]:
        """(I'(v), I''(v)) = (sqrt(z(I(v))), z'(I(v)) / 2)."""
        u = self.psi_inverse(v)
        return math.sqrt(self.gauge.z(u)), 0.5 * self.gauge.z_prime(u)

    def inverse_interpolant(self) -> Callable[[np.ndarray], np.ndarray]:
        """Vectorized cubic-spline approximation of I, for grid sweeps.

        Built on the monotone table; interpolation error is far below the
        solver tolerances it serves.  The pointwise psi_inverse remains the
        reference implementation.
        """
        if not hasattr(self, "_inv_spline"):
            integrand = lambda t: 1.0 / math.sqrt(self.gauge.z(t))
            fine_u = np.linspace(*self.u_range, 4097)
            fine_v = np.empty_like(fine_u)
            fine_v[0] = float(self._psi_table[0])
            for i in range(1, len(fine_u)):
                fine_v[i] = fine_v[i - 1] + quad(
                    integrand, fine_u[i - 1], fine_u[i], **_QUAD_OPTS
                )[0]
            self._inv_spline = CubicSpline(fine_v, fine_u)
        spline = self._inv_spline
        vlo, vhi = self.v_range

        def inv(v: np.ndarray) -> np.ndarray:
            v = np.asarray(v, dtype=float)
            if np.any(v < vlo - 1e-9) or np.any(v > vhi + 1e-9):
                raise RangeError("interpolated inverse queried outside Psi range")
            return spline(np.clip(v, vlo, vhi))

        return inv



# ---------------------------------------------------------------------------
# gauge catalog


def unit_gauge(domain: tuple[float, float] = (0.0, 1.0)) -> GaugeFunction:
    return GaugeFunction("unit", lambda u: 1.0, lambda u: 0.0, 1.0, 1.0, domain)


def shift_sq_gauge(domain: tuple[float, float]) -> GaugeFunction:
    """z(u) = (u+1)^2, the Example-1 gauge; domain must stay right of -1."""
    a, b = domain
    if a <= -1.0:
        raise ConfigurationError(f"shift-sq gauge needs domain right of -1, got {domain!r}")
    return GaugeFunction(
        "shift-sq",
        lambda u: (u + 1.0) ** 2,
        lambda u: 2.0 * (u + 1.0),
        (a + 1.0) ** 2,
        (b + 1.0) ** 2,
        domain,
    )


def affine_sq_gauge(lam1: float, lam2: float, domain: tuple[float, float]) -> GaugeFunction:
    """z(u) = (lam1*u - lam2)^2 with lam1*a > lam2 > 0 on the domain."""
    a, b = domain
    if not (lam2 > 0.0 and lam1 * a > lam2):
        raise ConfigurationError(
            f"affine-sq gauge needs lam1*a > lam2 > 0; got lam1={lam1!r}, "
            f"lam2={lam2!r}, domain={domain!r}"
        )
    return GaugeFunction(
        f"affine-sq:{lam1:g},{lam2:g}",
        lambda u: (lam1 * u - lam2) ** 2,
        lambda u: 2.0 * lam1 * (lam1 * u - lam2),
        (lam1 * a - lam2) ** 2,
        (lam1 * b - lam2) ** 2,
        domain,
    )


def exp_gauge(domain: tuple[float, float]) -> GaugeFunction:
    """z(u) = exp(-2u); 1/sqrt(z) integrates to exp, so Psi(u) = e^u - e^base."""
    a, b = domain
    return GaugeFunction(
        "exp",
        lambda u: math.exp(-2.0 * u),
        lambda u: -2.0 * math.exp(-2.0 * u),
        math.exp(-2.0 * b),
        math.exp(-2.0 * a),
        domain,
    )


def mbs_exp_gauge(m0: float, M0: float) -> GaugeFunction:
    """The affine-sq gauge z(u) = (2u/m0 - 1)^2 normalized so Psi(m0) = 0.

    With that base point the inverse is I(v) = m0 (exp(2v/m0) + 1) / 2 on
    [0, (m0/2) log(2 M0/m0 - 1)], the closed form the regularity constants
    are built on.
    """
    if not 0.0 < m0 <= M0:
        raise ConfigurationError(f"need 0 < m0 <= M0, got ({m0!r}, {M0!r})")
    lam1 = 2.0 / m0
    return GaugeFunction(
        f"mbs-exp:{m0:g},{M0:g}",
        lambda u: (lam1 * u - 1.0) ** 2,
        lambda u: 2.0 * lam1 * (lam1 * u - 1.0),
        1.0,
        (lam1 * M0 - 1.0) ** 2,
        (m0, M0),
        base_point=m0,
    )


def arctan_gauge(beta: float, domain: tuple[float, float]) -> GaugeFunction:
    """z(u) = (u^2+1)^2 (beta - arctan(u)^2 / 2)^2, requiring 8 beta > pi^2."""
    if 8.0 * beta <= math.pi**2:
        raise ConfigurationError(
            f"arctan gauge needs 8*beta > pi^2, got beta = {beta!r}"
        )

    def z(u: float) -> float:
        return (u * u + 1.0) ** 2 * (beta - 0.5 * math.atan(u) ** 2) ** 2

    def zp(u: float) -> float:
        A = u * u + 1.0
        B = beta - 0.5 * math.atan(u) ** 2
        return 2.0 * A * B * (2.0 * u * B - math.atan(u))

    a, b = domain
    grid = np.linspace(a, b, 2049)
    vals = np.array([z(u) for u in grid])
    return GaugeFunction(
        f"arctan:{beta:g}", z, zp, float(vals.min()), float(vals.max()), domain
    )


def gauge_from_identifier(ident: str, domain: tuple[float, float] | None = None) -> GaugeFunction:
    """Catalog lookup: "unit", "shift-sq", "affine-sq:l1,l2", "exp",
    "mbs-exp:m0,M0", "arctan:beta".  Gauges other than mbs-exp need a domain.
    """
    head, _, arg = ident.partition(":")
    if head == "mbs-exp":
        m0, M0 = (float(s) for s in arg.split(","))
        return mbs_exp_gauge(m0, M0)
    if domain is None:
        raise ConfigurationError(f"gauge {ident!r} needs an explicit domain")
    if head == "unit":
        return unit_gauge(domain)
    if head == "shift-sq":
        return shift_sq_gauge(domain)
    if head == "affine-sq":
        lam1, lam2 = (float(s) for s in arg.split(","))
        return affine_sq_gauge(lam1, lam2, domain)
    if head == "exp":
        return exp_gauge(domain)
    if head == "arctan":
        return arctan_gauge(float(arg), domain)
    raise ConfigurationError(f"unknown gauge identifier {ident!r}")
