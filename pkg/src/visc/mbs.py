"""The degenerate quasilinear pricing model and its analytic structure.

The unknown U(x, t) solves

    dU/dt - (1/2) tr(sigma sigma^T D^2 U) - <mu, DU>
          + rho |sigma^T DU|^2 / (U + h + xi(t)) + r(t)(U + h) - tau h = 0

with nonnegative cash-flow h, positive bank account xi, risk aversion
rho > 0 and coupon rate tau > 0.  This module computes the explicit
time barriers sandwiching every admissible solution, validates the standing
assumptions by sampling, builds the shifted problem in u = U + h + xi (whose
Hamiltonian feeds the structural checkers), and evaluates the Lipschitz
growth constant of the straightened unknown.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad

from . import forms
from .errors import (
    ConfigurationError,
    DomainError,
    ModelError,
    PreconditionError,
)
from .hamiltonian import CheckReport, HamiltonianSpec, ModulusFamily
from .osgood import OsgoodFunction
from .transform import GaugeFunction, affine_sq_gauge

_QUAD_OPTS = dict(epsabs=1e-12, epsrel=1e-12, limit=200)


# ---------------------------------------------------------------------------
# model


@dataclass
class MbsModel:
    """All coefficients of the pricing equation as named analytic forms."""

    dim_state: int
    dim_noise: int
    sigma: forms.MatrixForm
    mu: forms.VectorForm
    r: forms.TimeForm
    xi: forms.TimeForm
    h: forms.FieldForm
    rho: float
    tau: float
    T: float
    U0: forms.FieldForm
    bounds_override: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.dim_noise > self.dim_state:
            raise ConfigurationError("need d <= N")
        if self.T <= 0.0:
            raise ConfigurationError("maturity T must be positive")
        if self.sigma.dim != (self.dim_state, self.dim_noise):
            raise ConfigurationError(
                f"sigma must be {self.dim_state}x{self.dim_noise}, got {self.sigma.dim}"
            )

    # -- declared bounds -----------------------------------------------------

    def scan_box(self) -> tuple[np.ndarray, np.ndarray]:
        rad = max(self.h.profile.support_radius, self.U0.profile.support_radius, 4.0)
        centers = [
            p.center
            for p in (self.h.profile, self.U0.profile)
            if p.center is not None
        ]
        c = np.mean(centers, axis=0) if centers else np.zeros(self.dim_state)
        return c - rad, c + rad

    def _scan_points(self, per_dim: int | None = None) -> np.ndarray:
        n = self.dim_state
        per_dim = per_dim or {1: 4001, 2: 161, 3: 41}.get(n, 41)
        lo, hi = self.scan_box()
        axes = [np.linspace(lo[i], hi[i], per_dim) for i in range(n)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, n)

    def _lip_hess_trace_scan(self) -> float:
        """Spatial Lipschitz constant of tr(sigma sigma^T D^2 h), by a dense
        quotient scan of the analytic Hessian, inflated 1.3x."""
        if self.h.is_zero() or self.h.profile.name == "constant":
            return 0.0
        W = self.sigma.diffusion()
        n = self.dim_state
        per_dim = {1: 4001, 2: 161, 3: 41}.get(n, 41)
        lo, hi = self.scan_box()
        axes = [np.linspace(lo[i], hi[i], per_dim) for i in range(n)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        tf = self.h.time_factor_range(self.T)[1]
        tr = tf * np.einsum("ij,...ij->...", W, self.h.profile.hess(mesh))
        worst = 0.0
        for ax in range(n):
            d = float(axes[ax][1] - axes[ax][0])
            q = np.abs(np.diff(tr, axis=ax)) / d
            worst = max(worst, float(q.max()))
        return 1.3 * worst

    def bounds(self) -> dict:
        """Analytic (or scan-derived) constants the candidate moduli rely on."""
        if "bounds" in self._cache:
            return self._cache["bounds"]
        hb = self.h.bounds(self.T)
        ub = self.U0.bounds(self.T)
        r_max = self.r.max_on(self.T)
        xi_max = self.xi.max_on(self.T)
        b = {
            "mu_sup": self.mu.sup_norm,
            "mu_lip": self.mu.lip,
            "h_sup": hb["sup"],
            "h_inf": hb["inf"],
            "grad_h_sup": hb["grad_sup"],
            "lip_grad_h": hb["lip_grad"],
            "lip_dt_h": hb["lip_dt"],
            "dt_h_sup": hb["dt_sup"],
            "dt_h_modulus_rate": hb["dt_modulus_rate"],
            "lip_hess_trace_h": self._lip_hess_trace_scan(),
            "u0_sup": ub["sup"],
            "u0_inf": ub["inf"],
            "u0_lip": ub["lip"],
            "sigma_op": self.sigma.op_norm(),
            "sigma_tr": float(np.trace(self.sigma.diffusion())),
            "r_max": r_max,
            "r_min": self.r.min_on(self.T),
            "xi_max": xi_max,
            "xi_min": self.xi.min_on(self.T),
            "xi_prime_sup": self.xi.deriv_sup(self.T),
        }
        # sup and spatial Lipschitz constant of the source g, bounded by parts
        b["g_sup"] = (
            b["dt_h_sup"]
            + 0.5 * b["sigma_tr"] * b["lip_grad_h"]
            + b["mu_sup"] * b["grad_h_sup"]
            + self.tau * max(abs(b["h_sup"]), abs(b["h_inf"]))
            + b["xi_prime_sup"]
            + r_max * xi_max
        )
        b["g_lip"] = (
            b["lip_dt_h"]
            + 0.5 * b["lip_hess_trace_h"]
            + b["mu_lip"] * b["grad_h_sup"]
            + b["mu_sup"] * b["lip_grad_h"]
            + self.tau * b["grad_h_sup"]
        )
        b.update(self.bounds_override)
        self._cache["bounds"] = b
        return b

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "N": self.dim_state,
            "d": self.dim_noise,
            "sigma": self.sigma.to_dict(),
            "mu": self.mu.to_dict(),
            "r": self.r.to_dict(),
            "xi": self.xi.to_dict(),
            "h": self.h.to_dict(),
            "rho": self.rho,
            "tau": self.tau,
            "T": self.T,
            "U0": self.U0.to_dict(),
            "bounds": dict(self.bounds_override),
        }


def model_from_dict(cfg: dict) -> MbsModel:
    for key in ("N", "d", "sigma", "mu", "r", "xi", "h", "rho", "tau", "T", "U0"):
        if key not in cfg:
            raise ConfigurationError(f"model config missing required field {key!r}")
    n = int(cfg["N"])
    d = int(cfg["d"])
    return MbsModel(
        dim_state=n,
        dim_noise=d,
        sigma=forms.matrix_form(cfg["sigma"], n, d),
        mu=forms.vector_form(cfg["mu"], n),
        r=forms.time_form(cfg["r"]),
        xi=forms.time_form(cfg["xi"]),
        h=forms.field_form(cfg["h"], n),
        rho=float(cfg["rho"]),
        tau=float(cfg["tau"]),
        T=float(cfg["T"]),
        U0=forms.field_form(cfg["U0"], n),
        bounds_override=dict(cfg.get("bounds", {})),
    )


def load_model(path) -> MbsModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))


def default_model() -> MbsModel:
    """Desk-scale 1D pool: Gaussian-bump cash-flow, mild sinusoidal drift."""
    return model_from_dict(
        {
            "N": 1,
            "d": 1,
            "sigma": {"form": "constant", "params": {"matrix": [[0.4]]}},
            "mu": {
                "form": "sinusoid",
                "params": {"amplitude": [0.05], "wavevector": [[1.0]]},
            },
            "r": {"form": "constant", "params": {"value": 0.03}},
            "xi": {"form": "constant", "params": {"value": 1.0}},
            "h": {
                "form": "gaussian-bump",
                "params": {"amplitude": 0.5, "center": [0.0], "width": 1.0},
            },
            "rho": 0.5,
            "tau": 0.06,
            "T": 1.0,
            "U0": {
                "form": "gaussian-bump",
                "params": {"amplitude": 0.25, "center": [0.0], "width": 1.5},
            },
        }
    )


def heat_model() -> MbsModel:
    """rho = 0 linear fixture: pure heat flow of a cosine initial datum.

    With sigma^2 = 2 and everything else off, U(x, t) = exp(-t) cos(x).
    U0 takes negative values, so assumption (P3) is deliberately violated;
    validate_model reports it and the linear solver does not care.
    """
    return model_from_dict(
        {
            "N": 1,
            "d": 1,
            "sigma": {"form": "constant", "params": {"matrix": [[math.sqrt(2.0)]]}},
            "mu": {"form": "zero", "params": {}},
            "r": {"form": "constant", "params": {"value": 0.0}},
            "xi": {"form": "constant", "params": {"value": 1.0}},
            "h": {"form": "zero", "params": {}},
            "rho": 0.0,
            "tau": 1.0,
            "T": 1.0,
            "U0": {"form": "cosine", "params": {"amplitude": 1.0, "wavevector": [1.0]}},
        }
    )


# ---------------------------------------------------------------------------
# barriers


@dataclass(frozen=True)
class BarrierPair:
    """The explicit sub/supersolution pair and its constants."""

    k_lower: Callable[[float], float]
    k_upper: Callable[[float], float]
    K0: float
    c0: float
    m0: float
    M0: float


def _inf_source(m: MbsModel, s: float) -> float:
    """inf over x of (tau - r(s)) h(x, s)."""
    c = m.tau - float(m.r(s))
    return c * m.h.inf_at(s) if c >= 0.0 else c * m.h.sup_at(s)


def _sup_source(m: MbsModel, s: float) -> float:
    c = m.tau - float(m.r(s))
    return c * m.h.sup_at(s) if c >= 0.0 else c * m.h.inf_at(s)


def lower_barrier(m: MbsModel, t: float) -> float:
    """k_lower(t) = e^{-int r} (inf U0 + int_0^t e^{int r} inf_x[(tau-r)h])."""
    if not 0.0 <= t < m.T:
        raise DomainError(f"t = {t!r} outside [0, {m.T!r})")
    return _lower_barrier_closed(m, t)


def _lower_barrier_closed(m: MbsModel, t: float) -> float:
    # also used at t = T when taking suprema over the closed interval
    R = m.r.antiderivative
    u0_inf = m.U0.inf_at(0.0)
    if m.h.is_zero():
        return math.exp(-float(R(t))) * u0_inf
    integral = quad(
        lambda s: math.exp(float(R(s))) * _inf_source(m, s), 0.0, t, **_QUAD_OPTS
    )[0]
    return math.exp(-float(R(t))) * (u0_inf + integral)


def _refine_max(fn: Callable[[float], float], lo: float, hi: float, n: int = 1001):
    """Grid maximum refined by ternary search between the best point's
    neighbours; returns (argmax, max)."""
    ts = np.linspace(lo, hi, n)
    vals = np.array([fn(t) for t in ts])
    k = int(np.argmax(vals))
    a, b = ts[max(k - 1, 0)], ts[min(k + 1, n - 1)]
    for _ in range(80):
        m1 = a + (b - a) / 3.0
        m2 = b - (b - a) / 3.0
        if fn(m1) < fn(m2):
            a = m1
        else:
            b = m2
    mid = 0.5 * (a + b)
    if fn(mid) > vals[k]:
        return mid, fn(mid)
    return float(ts[k]), float(vals[k])


def barrier_pair(m: MbsModel) -> BarrierPair:
    if "barriers" in m._cache:
        return m._cache["barriers"]
    b = m.bounds()
    _, sup_klow = _refine_max(lambda t: _lower_barrier_closed(m, t), 0.0, m.T)
    c0 = max(b["u0_sup"], sup_klow)

    def k0_integrand(t: float) -> float:
        r = float(m.r(t))
        num = _sup_source(m, t) - c0 * r
        return max(num, 0.0) / (1.0 + t * r)

    _, K0 = _refine_max(k0_integrand, 0.0, m.T)
    K0 = max(K0, 0.0)

    def k_lower(t: float) -> float:
        return lower_barrier(m, t)

    def k_upper(t: float) -> float:
        if not 0.0 <= t < m.T:
            raise DomainError(f"t = {t!r} outside [0, {m.T!r})")
        return K0 * t + c0

    _, neg_m0 = _refine_max(
        lambda t: -(_lower_barrier_closed(m, t) + m.h.inf_at(t) + float(m.xi(t))),
        0.0,
        m.T,
    )
    m0 = -neg_m0
    _, sup_hxi = _refine_max(lambda t: m.h.sup_at(t) + float(m.xi(t)), 0.0, m.T)
    M0 = K0 * m.T + c0 + sup_hxi
    pair = BarrierPair(k_lower, k_upper, K0, c0, m0, M0)
    m._cache["barriers"] = pair
    return pair


def upper_barrier(m: MbsModel, t: float) -> float:
    return barrier_pair(m).k_upper(t)


# ---------------------------------------------------------------------------
# assumption validation


def validate_model(m: MbsModel, n_samples: int, seed: int) -> CheckReport:
    """Sampled verification of the standing assumptions plus positivity.

    Failures are report entries, not exceptions.  max_violation is the worst
    constraint excess across all named checks (<= 0 means everything held).
    """
    rng = np.random.default_rng(seed)
    b = m.bounds()
    lo, hi = m.scan_box()
    n = m.dim_state
    tol = 1e-9
    failures: dict[str, float] = {}

    def record(name: str, excess: float):
        if excess > tol:
            failures[name] = max(failures.get(name, 0.0), excess)

    xs = rng.uniform(lo, hi, (n_samples, n))
    ys = xs + rng.normal(0.0, 0.5, (n_samples, n))
    ts = rng.uniform(0.0, m.T * (1.0 - 1e-12), n_samples)
    ss = rng.uniform(0.0, m.T * (1.0 - 1e-12), n_samples)

    worst = -math.inf
    worst_sample: dict = {}
    dt_rate = 0.0
    pair = barrier_pair(m)
    for i in range(n_samples):
        x, y, t, s = xs[i], ys[i], float(ts[i]), float(ss[i])
        dxy = float(np.linalg.norm(x - y))
        mu_x = m.mu.value(x, t)
        mu_y = m.mu.value(y, t)
        record("P1:mu-bounded", float(np.linalg.norm(mu_x)) - b["mu_sup"])
        if dxy > 1e-9:
            record(
                "P1:mu-lipschitz",
                float(np.linalg.norm(mu_x - mu_y)) / dxy - b["mu_lip"],
            )
        hx = float(m.h.value(x, t))
        record("P2:h-nonnegative", -hx)
        record("P2:h-bounded", hx - b["h_sup"])
        record(
            "P2:grad-h-bounded",
            float(np.linalg.norm(m.h.grad(x, t))) - b["grad_h_sup"],
        )
        if dxy > 1e-9:
            record(
                "P2:grad-h-lipschitz",
                float(np.linalg.norm(m.h.grad(x, t) - m.h.grad(y, t))) / dxy
                - b["lip_grad_h"],
            )
            record(
                "P2:dt-h-lipschitz",
                abs(float(m.h.dt(x, t)) - float(m.h.dt(y, t))) / dxy - b["lip_dt_h"],
            )
        u0x = float(m.U0.value(x, 0.0))
        record("P3:U0-nonnegative", -u0x)
        record("P3:U0-bounded", u0x - b["u0_sup"])
        if dxy > 1e-9:
            record(
                "P3:U0-lipschitz",
                abs(u0x - float(m.U0.value(y, 0.0))) / dxy - b["u0_lip"],
            )
        if abs(t - s) > 1e-9:
            dt_rate = max(dt_rate, abs(hx - float(m.h.value(x, s))) / abs(t - s))
        xi_t = float(m.xi(t))
        record("P2:xi-positive", max(-xi_t, 1e-6) if xi_t <= 0.0 else -1.0)
        v_xi = xi_t + hx + pair.k_lower(t)
        record("XI:positivity", max(-v_xi, 1e-6) if v_xi <= 0.0 else -1.0)
        local = max(failures.values()) if failures else -v_xi
        if local > worst:
            worst = local
            worst_sample = {"x": x.tolist(), "t": t}

    record("P2:rho-positive", 1.0 if m.rho <= 0.0 else -1.0)
    record("P2:tau-positive", 1.0 if m.tau <= 0.0 else -1.0)
    record("dt-h:linear-envelope", dt_rate - b["dt_h_modulus_rate"] - tol)

    max_violation = max(failures.values()) if failures else 0.0
    return CheckReport(
        check="validate-model",
        samples_tested=n_samples,
        max_violation=max_violation,
        worst_sample=worst_sample if failures else {},
        seed=seed,
        passed=not failures,
        details={"failures": sorted(failures), "dt_h_fitted_rate": dt_rate},
    )


def barrier_residuals(m: MbsModel, n_samples: int, seed: int) -> CheckReport:
    """Residuals of the pricing operator at the spatially constant barriers.

    At U = k_lower the operator reduces to k' + r(k + h) - tau h, and with
    the closed-form derivative k_lower' = -r k_lower + inf_x[(tau - r) h]
    the residual is inf_x[(tau - r) h] - (tau - r) h(x, t) <= 0; likewise the
    upper barrier residual is K0 (1 + t r) + c0 r - (tau - r) h >= 0.
    """
    rng = np.random.default_rng(seed)
    pair = barrier_pair(m)
    lo, hi = m.scan_box()
    worst_sub = -math.inf
    worst_super = math.inf
    worst_sample: dict = {}
    for _ in range(n_samples):
        x = rng.uniform(lo, hi, m.dim_state)
        t = float(rng.uniform(0.0, m.T * (1.0 - 1e-12)))
        r = float(m.r(t))
        hx = float(m.h.value(x, t))
        res_sub = _inf_source(m, t) - (m.tau - r) * hx
        res_super = pair.K0 * (1.0 + t * r) + pair.c0 * r - (m.tau - r) * hx
        if res_sub > worst_sub:
            worst_sub = res_sub
            worst_sample = {"x": x.tolist(), "t": t, "side": "sub"}
        if res_super < worst_super:
            worst_super = res_super
    violation = max(worst_sub, -worst_super)
    return CheckReport(
        check="barrier-residuals",
        samples_tested=n_samples,
        max_violation=violation,
        worst_sample=worst_sample,
        seed=seed,
        passed=violation <= 1e-8,
        details={"max_residual_sub": worst_sub, "min_residual_super": worst_super},
    )


# ---------------------------------------------------------------------------
# the shifted problem in u = U + h + xi


def source_g(m: MbsModel, x: np.ndarray, t: float) -> np.ndarray:
    """g = -dh/dt + (1/2) tr(sigma sigma^T D^2 h) + <mu, Dh> - tau h - (xi' + r xi)."""
    W = m.sigma.diffusion(t)
    x = np.asarray(x, dtype=float)
    hess_term = 0.5 * np.einsum("ij,...ij->...", W, m.h.hess(x, t))
    drift_term = np.sum(m.mu.value(x, t) * m.h.grad(x, t), axis=-1)
    return (
        -m.h.dt(x, t)
        + hess_term
        + drift_term
        - m.tau * m.h.value(x, t)
        - (float(m.xi.derivative(t)) + float(m.r(t)) * float(m.xi(t)))
    )


def dm2_hamiltonian(
    m: MbsModel, u_domain: tuple[float, float] | None = None, eps0: float | None = None
) -> HamiltonianSpec:
    """The Hamiltonian of the shifted equation, in comparison orientation:

        F(x,t,u,p,X) = -(1/2) tr(sigma sigma^T X) - <mu, p>
                       + rho |sigma^T p - sigma^T Dh|^2 / u + r(t) u + g(x,t).
    """
    if u_domain is None:
        pair = barrier_pair(m)
        if pair.m0 <= 0.0:
            raise ModelError(
                "positivity condition fails: inf(k_lower + h + xi) = "
                f"{pair.m0!r} <= 0, so u > 0 is not guaranteed"
            )
        u_domain = (pair.m0, pair.M0)
    if eps0 is None:
        eps0 = 0.5 * u_domain[0]
    if u_domain[0] - eps0 <= 0.0 and m.rho > 0.0:
        raise ModelError("evaluation interval must stay positive when rho > 0")

    def fn(x, t, u, p, X):
        x = np.asarray(x, dtype=float)
        p = np.asarray(p, dtype=float)
        sig = m.sigma.value(t)
        W = sig @ sig.T
        val = -0.5 * float(np.trace(W @ X)) - float(m.mu.value(x, t) @ p)
        if m.rho > 0.0:
            sp = sig.T @ p - sig.T @ m.h.grad(x, t)
            val += m.rho * float(sp @ sp) / u
        return val + float(m.r(t)) * u + float(source_g(m, x, t))

    return HamiltonianSpec(
        name="mbs-dm2",
        dim_state=m.dim_state,
        u_domain=u_domain,
        eps0=eps0,
        fn=fn,
        t_max=m.T,
    )


def transformed_problem(m: MbsModel) -> tuple[HamiltonianSpec, Callable]:
    """The u = U + h + xi problem: its Hamiltonian and initial datum."""
    H = dm2_hamiltonian(m)

    def u0(x):
        return m.U0.value(x, 0.0) + m.h.value(x, 0.0) + float(m.xi(0.0))

    return H, u0


# ---------------------------------------------------------------------------
# candidate moduli for the structural checks


def cp6_candidates(m: MbsModel) -> tuple[ModulusFamily, ModulusFamily]:
    """Linear moduli that dominate the doubled-variable inequality.

    nu2 collects the x-Lipschitz pieces (drift, source, quadratic term),
    nu2R the trace of the diffusion against the 2*eps3 matrix slack.
    """
    b = m.bounds()
    pair = barrier_pair(m)
    m0 = pair.m0
    quad_rate = (
        0.0
        if m.rho == 0.0
        else 2.0
        * m.rho
        * b["sigma_op"] ** 2
        * b["lip_grad_h"]
        * max(1.0, b["grad_h_sup"])
        / m0
    )
    nu2 = ModulusFamily("linear", b["mu_lip"] + quad_rate + b["g_lip"])
    nu2R = ModulusFamily("linear", 0.5 * b["sigma_tr"])
    return nu2, nu2R


def cp7_candidates(
    m: MbsModel, R: float, lam1: float | None = None, lam2: float | None = None
) -> tuple[OsgoodFunction, ModulusFamily, GaugeFunction]:
    """Gauge z = (lam1 u - lam2)^2 plus moduli for the Osgood check.

    Gamma is linear at rate rho ((C2 M0)^2 / (4 lam2) + C2), with C2 the
    explicit constant collected from the term-by-term expansion of the
    shifted Hamiltonian:

        C2 = max( 2 |sigma^T| |Dh| / m0^2,
                  2 |sigma^T|^2 |Dh|^2 lam1 M0 / (lam0 m0^2)
                    + (r_max lam2 + |g| lam1) / (rho lam0) ).

    The nu_hat rate bounds every term produced by off-canonical scaling
    factors; all constants are upper bounds, so a sampled violation above
    float noise falsifies the derivation rather than the sampler.
    """
    if m.rho <= 0.0:
        raise PreconditionError("the Osgood candidates require rho > 0")
    pair = barrier_pair(m)
    m0, M0 = pair.m0, pair.M0
    if m0 <= 0.0:
        raise ModelError("need inf(k_lower + h + xi) > 0")
    if lam1 is None:
        lam1 = 2.0 / m0
    if lam2 is None:
        lam2 = 1.0
    if not lam1 * m0 > lam2 > 0.0:
        raise PreconditionError(f"need lam1*m0 > lam2 > 0, got {lam1!r}, {lam2!r}")
    b = m.bounds()
    lam0 = (lam1 * m0 - lam2) ** 2
    sig = b["sigma_op"]
    dh = b["grad_h_sup"]
    c2 = max(
        2.0 * sig * dh / m0**2,
        2.0 * sig**2 * dh**2 * lam1 * M0 / (lam0 * m0**2)
        + (b["r_max"] * lam2 + b["g_sup"] * lam1) / (m.rho * lam0),
    )
    rate = m.rho * ((c2 * M0) ** 2 / (4.0 * lam2) + c2)
    gamma = OsgoodFunction(
        f"mbs-linear:{rate:g}", max(M0 - m0, 1e-12), lambda s: rate * s
    )
    nu_rate = (
        (lam1 / (4.0 * lam0) + m.rho / (2.0 * math.sqrt(lam0) * m0)) * sig**2 * R
        + m.rho * sig**2 * dh**2 / (2.0 * lam0**1.5 * m0)
        + (b["r_max"] * M0 + b["g_sup"]) / (2.0 * lam0**1.5)
    )
    gauge = affine_sq_gauge(lam1, lam2, (m0, M0))
    return gamma, ModulusFamily("linear", nu_rate), gauge


# ---------------------------------------------------------------------------
# regularity constants


@dataclass(frozen=True)
class RegularityData:
    """Coefficient functions and the growth constant of the straightened
    unknown v, plus the factor mapping v-increments back to u-increments."""

    model: MbsModel
    gauge_kind: str
    lambda1: Callable[[float], float]
    lambda2: Callable[[float], float]
    w: Callable
    f: Callable
    M: float
    C: float
    v_range: tuple[float, float]
    min_lambda1_prime: float
    u_scale_factor: float
    lip_v0: float
    constants: dict = field(default_factory=dict)


def constant_from_bounds(
    lip_mu: float,
    sup_lambda2_prime: float,
    sup_w: float,
    min_lambda1_prime: float,
    sup_lambda2: float,
    sup_sigma: float,
    lip_w: float,
    lip_f: float,
    M: float,
) -> float:
    """The four-term growth constant

        C = 2 Lip(mu) + |l2'|^2 |w|^2 / (4 min l1')
            + 2 |l2| |sigma^T| Lip(w) + Lip(f) (1/(2M) + 1).

    The middle term is absent when |l2'| |w| = 0 (its origin is a square
    completion against min l1' > 0, vacuous when the numerator vanishes).
    """
    if M <= 0.0:
        raise PreconditionError("M must be positive")
    num = (sup_lambda2_prime * sup_w) ** 2
    if num == 0.0:
        mid = 0.0
    else:
        if min_lambda1_prime <= 0.0:
            raise PreconditionError(
                "min lambda1' must be positive when the drift-coupling term is present"
            )
        mid = num / (4.0 * min_lambda1_prime)
    return (
        2.0 * lip_mu
        + mid
        + 2.0 * sup_lambda2 * sup_sigma * lip_w
        + lip_f * (0.5 / M + 1.0)
    )


def _mbs_exp_calculus(m0: float):
    """Closed forms for I(v) = m0 (e^{2v/m0} + 1)/2 and its derivatives."""

    def E(v):
        return np.exp(2.0 * np.asarray(v, dtype=float) / m0)

    I = lambda v: 0.5 * m0 * (E(v) + 1.0)
    Ip = lambda v: E(v)
    Ipp = lambda v: (2.0 / m0) * E(v)
    return I, Ip, Ipp


def regularity_constant(m: MbsModel, M: float | None = None) -> RegularityData:
    """Coefficients of the straightened equation and the constant C.

    For rho > 0 the straightening uses I(v) = m0 (e^{2v/m0} + 1)/2 on
    [0, (m0/2) log(2 M0/m0 - 1)], for which lambda1'(v) =
    (4 rho/m0^2) e^{2v/m0} / (e^{2v/m0} + 1)^2 > 0 with its minimum at the
    right endpoint.  For rho = 0 the equation is linear and the identity
    straightening is used (requires h = 0 unless the value floor stays
    positive).
    """
    b = m.bounds()
    pair = barrier_pair(m)
    m0, M0 = pair.m0, pair.M0
    sig = b["sigma_op"]

    if m.rho > 0.0:
        if m0 <= 0.0:
            raise ModelError("need inf(k_lower + h + xi) > 0 when rho > 0")
        I, Ip, Ipp = _mbs_exp_calculus(m0)
        v_max = 0.5 * m0 * math.log(max(2.0 * M0 / m0 - 1.0, 1.0))
        grid = np.linspace(0.0, max(v_max, 1e-12), 10_001)
        Iv, Ipv, Ippv = I(grid), Ip(grid), Ipp(grid)
        lambda1 = lambda v: m.rho * Ip(v) / I(v) - 1.0 / m0
        lambda2 = lambda v: -2.0 * m.rho / I(v)
        lam1p_min = float(
            (4.0 * m.rho / m0**2) * (Ip(v_max) / (Ip(v_max) + 1.0) ** 2)
        )
        sup_lambda2 = float(np.max(2.0 * m.rho / Iv))
        sup_lambda2_prime = float(np.max(2.0 * m.rho * Ipv / Iv**2)) * 1.05
        # v-derivative envelopes for the three pieces of f, on the grid
        d_inv_IIp = np.abs(-(Ipv**2 + Iv * Ippv) / (Iv * Ipv) ** 2)
        d_inv_Ip = np.abs(-Ippv / Ipv**2)
        d_I_over_Ip = np.abs(1.0 - Iv * Ippv / Ipv**2)
        # the saturation term of f carries the risk-aversion weight: it is
        # the residue of rho |I' s^T Dv - s^T Dh|^2 / (I I') at Dv = 0
        w_sq_sup = m.rho * (sig * b["grad_h_sup"]) ** 2
        lip_f_v = 1.05 * float(
            np.max(
                w_sq_sup * d_inv_IIp
                + b["g_sup"] * d_inv_Ip
                + b["r_max"] * d_I_over_Ip
            )
        )
        lip_f_x = (
            2.0 * m.rho * sig**2 * b["grad_h_sup"] * b["lip_grad_h"]
            / float(np.min(Iv * Ipv))
            + b["g_lip"] / float(np.min(Ipv))
        )
        lip_f = max(lip_f_x, lip_f_v)
        u_scale = 2.0 * M0 / m0 - 1.0
        lip_v0 = (b["u0_lip"] + b["grad_h_sup"]) / 1.0  # min I' = 1 at v = 0
        gauge_kind = "mbs-exp"
        v_range = (0.0, v_max)

        def w_fn(x, t):
            return m.h.grad(np.asarray(x, dtype=float), t) @ m.sigma.value(t)

        def f_fn(x, t, v):
            wv = m.sigma.value(t).T @ m.h.grad(np.asarray(x, dtype=float), t)
            return (
                m.rho * float(wv @ wv) / (float(I(v)) * float(Ip(v)))
                + float(source_g(m, x, t)) / float(Ip(v))
                + float(m.r(t)) * float(I(v)) / float(Ip(v))
            )

    else:
        if not m.h.is_zero() and m0 <= 1e-12:
            raise PreconditionError(
                "identity straightening with a nonzero cash-flow needs a "
                "positive value floor"
            )
        lambda1 = lambda v: 0.0
        lambda2 = lambda v: 0.0
        lam1p_min = 0.0
        sup_lambda2 = 0.0
        sup_lambda2_prime = 0.0
        lip_f = b["g_lip"] + b["r_max"]
        u_scale = 1.0
        lip_v0 = b["u0_lip"] + b["grad_h_sup"]
        gauge_kind = "identity"
        v_range = (m0, M0)

        def w_fn(x, t):
            return m.h.grad(np.asarray(x, dtype=float), t) @ m.sigma.value(t)

        def f_fn(x, t, v):
            return float(source_g(m, x, t)) + float(m.r(t)) * v

    if M is None:
        M = max(lip_v0, 1e-6)
    if M <= 0.5 * lip_v0:
        raise PreconditionError(
            f"M = {M!r} must exceed Lip(v0)/2 = {0.5 * lip_v0!r}"
        )
    sup_w = sig * b["grad_h_sup"]
    lip_w = sig * b["lip_grad_h"]
    C = constant_from_bounds(
        b["mu_lip"], sup_lambda2_prime, sup_w, lam1p_min,
        sup_lambda2, sig, lip_w, lip_f, M,
    )
    return RegularityData(
        model=m,
        gauge_kind=gauge_kind,
        lambda1=lambda1,
        lambda2=lambda2,
        w=w_fn,
        f=f_fn,
        M=M,
        C=C,
        v_range=v_range,
        min_lambda1_prime=lam1p_min,
        u_scale_factor=u_scale,
        lip_v0=lip_v0,
        constants={
            "sup_lambda2": sup_lambda2,
            "sup_lambda2_prime": sup_lambda2_prime,
            "sup_w": sup_w,
            "lip_w": lip_w,
            "lip_f": lip_f,
            "m0": pair.m0,
            "M0": pair.M0,
        },
    )


def lipschitz_bound(rd: RegularityData, t: float) -> tuple[float, float]:
    """(v-scale, u-scale) Lipschitz bounds at time t.

    The v-scale bound is 2 M e^{Ct}; the u-scale bound multiplies it by the
    supremum of I' over the working interval (2 M0/m0 - 1 for the
    exponential straightening, 1 for the identity).
    """
    if not 0.0 <= t < rd.model.T:
        raise DomainError(f"t = {t!r} outside [0, {rd.model.T!r})")
    v_bound = 2.0 * rd.M * math.exp(rd.C * t)
    return v_bound, rd.u_scale_factor * v_bound
