"""Osgood-type functions and the numerics built on them.

A function Gamma on [0, l] is of Osgood type when it is increasing,
Gamma(0) = 0 and the integral of 1/Gamma over (0, l] diverges.  This module
keeps a small catalog of such functions (and of near misses like sqrt), a
brute-force evaluation of the supremum formula behind the "xlog" entry,
divergence scoring of the defining integral, and an explicit Euler flow of
f' = Gamma(f) whose f = 0 fixed point is the discrete shadow of the
uniqueness lemma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, QuadratureError

INV_E = 1.0 / math.e

OSGOOD_CLAIMED = "osgood-claimed"
NON_OSGOOD_CLAIMED = "non-osgood-claimed"


@dataclass(frozen=True)
class OsgoodFunction:
    """A candidate Gamma on [0, l] with a claim about its Osgood status."""

    name: str
    l: float
    fn: Callable[[float], float]
    tag: str = OSGOOD_CLAIMED
    # interior points where fn is not smooth, passed to the quadrature
    kinks: tuple[float, ...] = field(default=())

    def __call__(self, h: float) -> float:
        return gamma_eval(self, h)


def gamma_eval(gamma: OsgoodFunction, h: float) -> float:
    """Evaluate Gamma(h) for h in [0, l]; raises DomainError otherwise."""
    if not (0.0 <= h <= gamma.l * (1.0 + 1e-12)):
        raise DomainError(
            f"{gamma.name}: argument {h!r} outside [0, {gamma.l!r}]"
        )
    if h == 0.0:
        return 0.0
    return float(gamma.fn(min(h, gamma.l)))


def _xlog(h: float) -> float:
    # h*log(1/h) on (0, 1/e), continued by its maximum 1/e afterwards;
    # written as -h*log(h) so subnormal h cannot overflow the reciprocal
    if h <= 0.0:
        return 0.0
    if h < INV_E:
        return -h * math.log(h)
    return INV_E


def xlog() -> OsgoodFunction:
    """The xlog example: h log(1/h) capped at 1/e, domain [0, 1/e + 1/2]."""
    return OsgoodFunction("xlog", INV_E + 0.5, _xlog, OSGOOD_CLAIMED, (INV_E,))


def linear(rate: float, l: float = 1.0) -> OsgoodFunction:
    if rate < 0.0:
        raise DomainError(f"linear rate must be nonnegative, got {rate!r}")
    return OsgoodFunction(f"linear:{rate:g}", l, lambda h: rate * h)


def power(exponent: float, l: float = 1.0, coefficient: float = 1.0) -> OsgoodFunction:
    if not 0.0 < exponent <= 1.0:
        raise DomainError(f"power exponent must lie in (0, 1], got {exponent!r}")
    tag = OSGOOD_CLAIMED if exponent == 1.0 else NON_OSGOOD_CLAIMED
    return OsgoodFunction(
        f"power:{exponent:g}", l, lambda h: coefficient * h**exponent, tag
    )


def from_identifier(ident: str, l: float | None = None) -> OsgoodFunction:
    """Catalog lookup: "linear:L", "power:gamma" or "xlog"."""
    head, _, arg = ident.partition(":")
    if head == "xlog":
        return xlog()
    if head == "linear":
        return linear(float(arg), l if l is not None else 1.0)
    if head == "power":
        return power(float(arg), l if l is not None else 1.0)
    raise DomainError(f"unknown Osgood catalog identifier {ident!r}")


def scaled(gamma: OsgoodFunction, factor: float) -> OsgoodFunction:
    """Gamma0(theta) = Gamma(factor * theta), defined on [0, l / factor].

    The rescaling preserves the Osgood property; it is what lets a Gamma
    stated for one interval serve a gauge-stretched one.
    """
    if factor <= 0.0:
        raise DomainError(f"scale factor must be positive, got {factor!r}")
    return OsgoodFunction(
        f"{gamma.name}~scaled:{factor:g}",
        gamma.l / factor,
        lambda h: gamma.fn(factor * h),
        gamma.tag,
        tuple(k / factor for k in gamma.kinks),
    )


def sup_formula(h: float, interval: tuple[float, float], n_grid: int = 1000) -> float:
    """Brute-force sup of x log(x) - (x+h) log(x+h) over x in the interval.

    x log x is extended by 0 at x <= 0.  The grid maximum is refined by a
    local ternary search between the neighbours of the best grid point.
    """
    if h < 0.0:
        raise DomainError(f"shift h must be nonnegative, got {h!r}")
    if n_grid < 100:
        raise DomainError(f"n_grid must be at least 100, got {n_grid}")
    if h == 0.0:
        return 0.0

    def xlogx(x: float) -> float:
        return x * math.log(x) if x > 0.0 else 0.0

    def obj(x: float) -> float:
        return xlogx(x) - xlogx(x + h)

    lo, hi = interval
    xs = np.linspace(lo, hi, n_grid)
    vals = np.array([obj(x) for x in xs])
    k = int(np.argmax(vals))
    a = xs[max(k - 1, 0)]
    b = xs[min(k + 1, n_grid - 1)]
    # ternary search on the bracket; 80 iterations shrink it below 1e-15
    for _ in range(80):
        m1 = a + (b - a) / 3.0
        m2 = b - (b - a) / 3.0
        if obj(m1) < obj(m2):
            a = m1
        else:
            b = m2
    return max(float(vals[k]), obj(0.5 * (a + b)))


def divergence_score(
    gamma: OsgoodFunction, eps_sequence: Sequence[float]
) -> list[float]:
    """Integral of 1/Gamma over [eps, l] for each eps, by adaptive quadrature.

    For an Osgood function the scores grow without bound as eps shrinks; for
    a convergent integral they flatten.  Raw scores only; classification is a
    caller-side heuristic (see classify_divergence).
    """
    scores = []
    for eps in eps_sequence:
        if not 0.0 < eps < gamma.l:
            raise DomainError(
                f"eps {eps!r} outside (0, {gamma.l!r}) for {gamma.name}"
            )
        if gamma.fn(eps) <= 0.0:
            raise QuadratureError(
                f"{gamma.name}(r) = 0 at r = {eps!r} > 0; 1/Gamma is singular there"
            )

        # integrate in s = log r: the substitution flattens the boundary
        # layer at the small endpoint that defeats adaptive panels directly
        def integrand(s: float) -> float:
            r = math.exp(s)
            g = gamma.fn(r)
            if g <= 0.0:
                raise QuadratureError(
                    f"{gamma.name}(r) = 0 at r = {r!r} inside ({eps!r}, {gamma.l!r})"
                )
            return r / g

        pts = [math.log(k) for k in gamma.kinks if eps < k < gamma.l]
        val, _ = quad(
            integrand,
            math.log(eps),
            math.log(gamma.l),
            points=pts or None,
            limit=200,
            epsabs=1e-11,
            epsrel=1e-11,
        )
        scores.append(float(val))
    return scores


def classify_divergence(scores: Sequence[float]) -> str:
    """Heuristic label from a score sequence at decreasing eps.

    "osgood-consistent" iff the last two increments both exceed 10% of the
    increment before them.  This is a desk heuristic for flagging flattening
    sequences, never a proof of (non-)divergence.
    """
    if len(scores) < 4:
        raise DomainError("need at least 4 scores to classify")
    d = np.diff(np.asarray(scores, dtype=float))
    if d[-1] > 0.1 * d[-3] and d[-2] > 0.1 * d[-3]:
        return "osgood-consistent"
    return "integral-converging"


@dataclass(frozen=True)
class FlowTrajectory:
    """Explicit Euler trajectory of f' = Gamma(f), possibly clamped at l."""

    times: np.ndarray
    values: np.ndarray
    step: float
    saturated: bool = False

    def __len__(self) -> int:
        return len(self.times)


def ode_flow(
    gamma: OsgoodFunction, f0: float, t_flow: float, dt: float
) -> FlowTrajectory:
    """Flow the extremal ODE f' = Gamma(f) from f0 with explicit Euler.

    The recursion f_{i+1} = f_i + dt * Gamma(f_i) keeps f = 0 an exact fixed
    point, which is the property under test.  Values are clamped at the
    domain endpoint l, with a saturation flag recorded.
    """
    if not 0.0 <= f0 < gamma.l:
        raise DomainError(f"f0 {f0!r} outside [0, {gamma.l!r})")
    if not 0.0 < dt <= t_flow:
        raise DomainError(f"need 0 < dt <= t_flow, got dt={dt!r}, t_flow={t_flow!r}")
    n = int(round(t_flow / dt))
    times = np.arange(n + 1) * dt
    values = np.empty(n + 1)
    values[0] = f0
    saturated = False
    f = f0
    for i in range(n):
        f = f + dt * gamma.fn(f)
        if f > gamma.l:
            f = gamma.l
            saturated = True
        values[i + 1] = f
    return FlowTrajectory(times, values, dt, saturated)
