"""Evaluatable Hamiltonians, gauge transforms and sampled hypothesis checks.

A HamiltonianSpec wraps a function F(x, t, u, p, X) together with its state
dimension and the open u-interval (a, b) it is defined around (with margin
eps0).  The checkers draw randomized samples and report the worst violation
of a structural inequality:

  * degenerate ellipticity        F(..., X + Y) <= F(..., X) for Y >= 0
  * gradient modulus              |F(..., p, X) - F(..., q, X)| <= nu(|p - q|)
  * doubled-matrix structure      F(x,..,X+Z) - F(y,..,-Y+Z) >= -nu2(..) - nu2R(2 eps3)
  * Osgood compatibility          gauge-scaled difference >= -Gamma(u-v) - nu_hat(..)

All reports are deterministic for a fixed seed.  A pass means "no sampled
counterexample above float noise", never a proof.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigurationError, DomainError, PreconditionError, SamplingError
from .osgood import INV_E, OsgoodFunction
from .transform import GaugeFunction, Transformation

PASS_TOL = 1e-9


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class HamiltonianSpec:
    """F(x, t, u, p, X) with declared u-domain (a, b) and margin eps0 > 0."""

    name: str
    dim_state: int
    u_domain: tuple[float, float]
    eps0: float
    fn: Callable[[np.ndarray, float, float, np.ndarray, np.ndarray], float]
    t_max: float = 1.0
    transformation: Transformation | None = field(
        default=None, compare=False, repr=False
    )

    @property
    def eval_interval(self) -> tuple[float, float]:
        a, b = self.u_domain
        return a - self.eps0, b + self.eps0


@dataclass(frozen=True)
class ModulusFamily:
    """Parametric modulus candidate: L * s (linear) or L * s**gamma (power)."""

    shape: str
    coefficient: float
    exponent: float = 1.0

    def __post_init__(self):
        if self.shape not in ("linear", "power"):
            raise ConfigurationError(f"unknown modulus shape {self.shape!r}")
        if self.coefficient < 0.0:
            raise ConfigurationError("modulus coefficient must be nonnegative")
        if self.shape == "power" and not 0.0 < self.exponent <= 1.0:
            raise ConfigurationError("power modulus exponent must lie in (0, 1]")

    def __call__(self, s: float) -> float:
        if s <= 0.0:
            return 0.0
        if self.shape == "linear":
            return self.coefficient * s
        return self.coefficient * s**self.exponent

    def to_json_dict(self) -> dict:
        d = {"shape": self.shape, "coefficient": self.coefficient}
        if self.shape == "power":
            d["exponent"] = self.exponent
        return d


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one sampled check; reproducible bit for bit per seed."""

    check: str
    samples_tested: int
    max_violation: float
    worst_sample: dict
    seed: int
    fitted_modulus: ModulusFamily | None = None
    passed: bool = True
    details: dict = field(default_factory=dict, compare=False, repr=False)

    def to_json_dict(self) -> dict:
        return {
            "check": self.check,
            "samples": self.samples_tested,
            "max_violation": self.max_violation,
            "worst_sample": self.worst_sample,
            "fitted_modulus": (
                self.fitted_modulus.to_json_dict() if self.fitted_modulus else None
            ),
            "seed": self.seed,
            "pass": self.passed,
        }


# ---------------------------------------------------------------------------
# evaluation and transformation


def eval_hamiltonian(
    H: HamiltonianSpec,
    x: np.ndarray,
    t: float,
    u: float,
    p: np.ndarray,
    X: np.ndarray,
) -> float:
    """Evaluate F(x, t, u, p, X), enforcing the declared domains."""
    lo, hi = H.eval_interval
    if not lo < u < hi:
        raise DomainError(f"{H.name}: u = {u!r} outside ({lo!r}, {hi!r})")
    if not 0.0 <= t < H.t_max:
        raise DomainError(f"{H.name}: t = {t!r} outside [0, {H.t_max!r})")
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.shape != (H.dim_state, H.dim_state) or not np.allclose(X, X.T, atol=1e-12):
        raise DomainError(f"{H.name}: X must be a symmetric {H.dim_state}x{H.dim_state} matrix")
    return float(H.fn(x, t, u, p, X))


def transform_hamiltonian(H: HamiltonianSpec, gauge: GaugeFunction) -> HamiltonianSpec:
    """Gauge-transform F into the Hamiltonian of the straightened unknown.

    With I the inverse of Psi (built from the gauge), the new Hamiltonian is

        Ft(x, t, v, p, X) = F(x, t, I(v), I'(v) p, I'(v) X + I''(v) p (x) p) / I'(v)

    and its evaluation interval is the Psi-image of (a - eps0/2, b + eps0/2).
    """
    a, b = H.u_domain
    ga, gb = gauge.domain
    if ga > a + 1e-12 or gb < b - 1e-12:
        raise ConfigurationError(
            f"gauge {gauge.name} domain {gauge.domain!r} does not cover the "
            f"Hamiltonian u-domain {H.u_domain!r}"
        )
    gauge_on_H = dataclasses.replace(gauge, domain=(a, b))
    T = Transformation(gauge_on_H, margin=H.eps0 / 2.0)
    v_lo, v_hi = T.v_range
    m = 0.02 * (v_hi - v_lo)

    def fn(x, t, v, p, X):
        u = T.psi_inverse(v)
        ip = math.sqrt(gauge.z(u))
        ipp = 0.5 * gauge.z_prime(u)
        p = np.asarray(p, dtype=float)
        return H.fn(x, t, u, ip * p, ip * np.asarray(X, dtype=float) + ipp * np.outer(p, p)) / ip

    return HamiltonianSpec(
        name=f"{H.name}~{gauge.name}",
        dim_state=H.dim_state,
        u_domain=(v_lo + m, v_hi - m),
        eps0=m,
        fn=fn,
        t_max=H.t_max,
        transformation=T,
    )


# ---------------------------------------------------------------------------
# fixtures


def _phi_example1(u: float) -> float:
    return (u * u + u) * math.log(u) if u > 0.0 else 0.0


def example1(dim_state: int = 1) -> HamiltonianSpec:
    """-tr(X) + |p|^2/(u+1) + (u^2+u) log u, on u in [-1/2, 1/e].

    Quadratic gradient growth and a non-Lipschitz zero-order part; the
    fixture that motivates the xlog Osgood function.
    """

    def fn(x, t, u, p, X):
        p = np.asarray(p, dtype=float)
        return -float(np.trace(X)) + float(p @ p) / (u + 1.0) + _phi_example1(u)

    return HamiltonianSpec("example1", dim_state, (-0.5, INV_E), 0.25, fn)


def example2_power(gamma: float = 0.5, dim_state: int = 1) -> HamiltonianSpec:
    """-tr(X) + |p|^gamma: degenerate elliptic, Hoelder but not Lipschitz in p."""
    if not 0.0 < gamma < 1.0:
        raise ConfigurationError(f"example2-power needs gamma in (0,1), got {gamma!r}")

    def fn(x, t, u, p, X):
        p = np.asarray(p, dtype=float)
        return -float(np.trace(X)) + float(np.linalg.norm(p)) ** gamma

    return HamiltonianSpec(f"example2-power:{gamma:g}", dim_state, (-1.0, 1.0), 0.5, fn)


def _g_log(p: float) -> float:
    return math.log(1.0 + p) if p > 0.0 else -math.log(1.0 - p)


def example2_log() -> HamiltonianSpec:
    """-X - g(p) with g(p) = sign(p) log(1 + |p|), one space dimension.

    Lipschitz in p but with p g'(p) - g(p) unbounded both ways; pairs with
    the arctan gauge.
    """

    def fn(x, t, u, p, X):
        return -float(X[0, 0]) - _g_log(float(np.asarray(p, dtype=float)[0]))

    return HamiltonianSpec("example2-log", 1, (-1.0, 1.0), 0.5, fn)


def fixture(ident: str) -> HamiltonianSpec:
    """Fixture registry: example1, example2-power[:gamma], example2-log, mbs-dm2."""
    head, _, arg = ident.partition(":")
    if head == "example1":
        return example1()
    if head == "example2-power":
        return example2_power(float(arg)) if arg else example2_power()
    if head == "example2-log":
        return example2_log()
    if head == "mbs-dm2":
        from .mbs import default_model, transformed_problem

        return transformed_problem(default_model())[0]
    raise DomainError(f"unknown Hamiltonian fixture {ident!r}")


# ---------------------------------------------------------------------------
# sampling helpers


def _sym(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + A.T)

def _clip_vec(v: np.ndarray, radius: float) -> np.ndarray:
    n = np.linalg.norm(v)
    return v if n <= radius else v * (radius / n)


def _clip_sym(X: np.ndarray, radius: float) -> np.ndarray:
    n = np.linalg.norm(X, 2)
    return X if n <= radius else X * (radius / n)


def _draw_state(rng: np.random.Generator, H: HamiltonianSpec, x_box: float = 2.0):
    lo, hi = H.eval_interval
    pad = 1e-9 * (hi - lo)
    x = rng.uniform(-x_box, x_box, H.dim_state)
    t = rng.uniform(0.0, H.t_max * (1.0 - 1e-9))
    u = rng.uniform(lo + pad, hi - pad)
    return x, t, u


def _sample_dict(**kw) -> dict:
    out = {}
    for k, v in kw.items():
        if isinstance(v, np.ndarray):
            out[k] = v.tolist()
        elif isinstance(v, (np.floating, np.integer)):
            out[k] = float(v)
        else:
            out[k] = v
    return out


# ---------------------------------------------------------------------------
# checks


def check_degenerate_ellipticity(
    H: HamiltonianSpec, n_samples: int, seed: int
) -> CheckReport:
    """Sampled check of F(..., X + A^T A) <= F(..., X)."""
    if n_samples < 1:
        raise PreconditionError("n_samples must be at least 1")
    rng = np.random.default_rng(seed)
    worst = -math.inf
    worst_sample: dict = {}
    for _ in range(n_samples):
        x, t, u = _draw_state(rng, H)
        p = rng.normal(0.0, 1.0, H.dim_state)
        X = _sym(rng.normal(0.0, 1.0, (H.dim_state, H.dim_state)))
        A = rng.normal(0.0, 1.0, (H.dim_state, H.dim_state))
        Y = A.T @ A
        v = H.fn(x, t, u, p, X + Y) - H.fn(x, t, u, p, X)
        if v > worst:
            worst = v
            worst_sample = _sample_dict(x=x, t=t, u=u, p=p, X=X, Y=Y)
    return CheckReport(
        check="degenerate-ellipticity",
        samples_tested=n_samples,
        max_violation=worst,
        worst_sample=worst_sample,
        seed=seed,
        passed=worst <= PASS_TOL,
    )


def check_gradient_modulus(
    H: HamiltonianSpec, R: float, n_samples: int, seed: int, n_bins: int = 24
) -> CheckReport:
    """Bin |F(.., p, X) - F(.., q, X)| by |p - q| and fit a dominating modulus.

    The fitted family is linear unless the log-log envelope slope is clearly
    sublinear, in which case a power family is reported.  max_violation is
    the worst excess of a sampled difference over the fitted modulus, so a
    finite fit always passes; the informative outputs are the coefficient,
    the exponent and the envelope-decay flag in details.
    """
    if R <= 0.0:
        raise PreconditionError("R must be positive")
    rng = np.random.default_rng(seed)
    dists = np.empty(n_samples)
    diffs = np.empty(n_samples)
    samples = []
    for i in range(n_samples):
        x, t, u = _draw_state(rng, H)
        X = _clip_sym(_sym(rng.normal(0.0, R, (H.dim_state, H.dim_state))), R)
        p = _clip_vec(rng.normal(0.0, R / 2.0, H.dim_state), R)
        q = _clip_vec(rng.normal(0.0, R / 2.0, H.dim_state), R)
        diffs[i] = abs(H.fn(x, t, u, p, X) - H.fn(x, t, u, q, X))
        dists[i] = np.linalg.norm(p - q)
        samples.append((x, t, u, p, q, X))

    mask = dists > 0.0
    if not np.any(mask) or diffs.max() == 0.0:
        fitted = ModulusFamily("linear", 0.0)
    else:
        edges = np.linspace(0.0, dists.max(), n_bins + 1)
        idx = np.clip(np.digitize(dists, edges) - 1, 0, n_bins - 1)
        env = np.full(n_bins, np.nan)
        for b in range(n_bins):
            sel = idx == b
            if np.any(sel):
                env[b] = diffs[sel].max()
        centers = 0.5 * (edges[:-1] + edges[1:])
        ok = ~np.isnan(env) & (env > 0.0)
        # linear vs power is decided by scale stability of the sup ratio:
        # for a Lipschitz F the ratio diff/dist is bounded at every scale,
        # for a Hoelder one it blows up as dist -> 0
        ratios = diffs[mask] / dists[mask]
        d = dists[mask]
        med = float(np.median(d))
        small_sel = d <= 0.5 * med
        mid_sel = (d > 0.5 * med) & (d <= med)
        L_small = float(ratios[small_sel].max()) if np.any(small_sel) else 0.0
        L_large = float(ratios[mid_sel].max()) if np.any(mid_sel) else 0.0
        if L_small <= 2.0 * L_large or not np.any(small_sel):
            fitted = ModulusFamily("linear", float(ratios.max()))
        else:
            # exponent from the smallest-quarter bins, where the shape lives
            quarter = ok & (np.arange(n_bins) <= n_bins // 4)
            fit_on = quarter if quarter.sum() >= 3 else ok
            slope, _ = np.polyfit(np.log(centers[fit_on]), np.log(env[fit_on]), 1)
            expo = float(min(max(slope, 1e-3), 1.0))
            coef = float((diffs[mask] / dists[mask] ** expo).max())
            fitted = ModulusFamily("power", coef, expo)

    excess = diffs - np.array([fitted(d) for d in dists])
    k = int(np.argmax(excess))
    x, t, u, p, q, X = samples[k]
    env_list = None
    decays = True
    if diffs.max() > 0.0 and np.any(mask):
        first = np.flatnonzero(ok)[0] if ok.any() else None
        if first is not None:
            decays = bool(env[first] <= 2.0 * fitted(edges[first + 1]) + 1e-12)
        env_list = [None if np.isnan(e) else float(e) for e in env]
    return CheckReport(
        check="gradient-modulus",
        samples_tested=n_samples,
        max_violation=float(excess[k]),
        worst_sample=_sample_dict(x=x, t=t, u=u, p=p, q=q, X=X),
        seed=seed,
        fitted_modulus=fitted,
        passed=float(excess[k]) <= PASS_TOL and decays,
        details={"envelope": env_list, "envelope_decays": decays},
    )


def _cp5_envelope(eps2: float, eps3: float, n: int) -> np.ndarray:
    J = np.block([[np.eye(n), -np.eye(n)], [-np.eye(n), np.eye(n)]])
    return eps2 * J + eps3 * np.eye(2 * n)


def _cp5_ok(X, Y, eps1, eps2, eps3) -> bool:
    n = X.shape[0]
    M = np.block([[X, np.zeros((n, n))], [np.zeros((n, n)), Y]])
    lo = np.linalg.eigvalsh(M + eps1 * np.eye(2 * n)).min()
    hi = np.linalg.eigvalsh(_cp5_envelope(eps2, eps3, n) - M).min()
    return lo >= -1e-12 and hi >= -1e-12


def check_structure_cp6(
    H: HamiltonianSpec,
    R: float,
    candidate: tuple[ModulusFamily, ModulusFamily],
    n_samples: int,
    seed: int,
) -> CheckReport:
    """Sampled check of the doubled-variable matrix inequality.

    Draws (X, Y) pairs inside the coupled matrix constraint by rejection
    (each accepted pair is re-verified through smallest-eigenvalue
    computations), always including the deterministic corner cases X = Y = 0
    and X = -Y.  The reported violation is the most positive value of

        -[F(x,t,u,p,X+Z) - F(y,t,u,p,-Y+Z) + nu2(|x-y|(|p|+1) + eps2 |x-y|^2)
          + nu2R(2 eps3)].
    """
    nu2, nu2R = candidate
    rng = np.random.default_rng(seed)
    n = H.dim_state
    worst = -math.inf
    worst_sample: dict = {}
    attempts = 0
    accepts = 0
    for i in range(n_samples):
        if i == 0:
            # deterministic corner: coincident points, zero blocks and zero
            # slacks reduce the inequality to exactly 0
            eps1 = eps2 = eps3 = 0.0
        else:
            eps2 = rng.uniform(0.0, R / 8.0)
            eps3 = rng.uniform(1e-6, R / 8.0)
            eps1 = rng.uniform(eps3, R / 2.0)
        if R < max(eps1, 2.0 * eps2 + eps3) + 2.0 * eps3:
            raise PreconditionError(
                "sampled (eps1, eps2, eps3) violate R >= max(eps1, 2*eps2+eps3) + 2*eps3"
            )
        if i == 0:
            X = np.zeros((n, n))
            Y = np.zeros((n, n))
        elif i == 1:
            B = _clip_sym(_sym(rng.normal(0.0, eps3, (n, n))), eps3 * 0.999)
            X, Y = B, -B
            if not _cp5_ok(X, Y, eps1, eps2, eps3):
                X = np.zeros((n, n))
                Y = np.zeros((n, n))
        else:
            X = Y = None
            for _ in range(200):
                attempts += 1
                if rng.uniform() < 0.5:
                    B = _sym(rng.normal(0.0, 0.5 * eps2 + 0.25 * eps3, (n, n)))
                    Xc = B + _sym(rng.normal(0.0, 0.25 * eps3, (n, n)))
                    Yc = -B + _sym(rng.normal(0.0, 0.25 * eps3, (n, n)))
                else:
                    Xc = _sym(rng.normal(0.0, 0.4 * eps3, (n, n)))
                    Yc = _sym(rng.normal(0.0, 0.4 * eps3, (n, n)))
                if _cp5_ok(Xc, Yc, eps1, eps2, eps3):
                    X, Y = Xc, Yc
                    accepts += 1
                    break
            if X is None:
                if attempts >= 1000 and accepts / attempts < 1e-3:
                    raise SamplingError(
                        "rejection rate above 99.9% when sampling the matrix "
                        "constraint; retry with a smaller block scale"
                    )
                X = np.zeros((n, n))
                Y = np.zeros((n, n))

        x, t, u = _draw_state(rng, H)
        u = min(max(u, H.u_domain[0]), H.u_domain[1])
        y = x if i == 0 else x + rng.normal(0.0, 0.3, n)
        p = _clip_vec(rng.normal(0.0, R / 2.0, n), R)
        Z = _clip_sym(_sym(rng.normal(0.0, R / 4.0, (n, n))), R)
        lhs = H.fn(x, t, u, p, X + Z) - H.fn(y, t, u, p, -Y + Z)
        dxy = float(np.linalg.norm(x - y))
        allow = nu2(dxy * (float(np.linalg.norm(p)) + 1.0) + eps2 * dxy**2) + nu2R(
            2.0 * eps3
        )
        v = -(lhs + allow)
        if v > worst:
            worst = v
            worst_sample = _sample_dict(
                x=x, y=y, t=t, u=u, p=p, X=X, Y=Y, Z=Z, eps1=eps1, eps2=eps2, eps3=eps3
            )
    return CheckReport(
        check="structure-cp6",
        samples_tested=n_samples,
        max_violation=worst,
        worst_sample=worst_sample,
        seed=seed,
        passed=worst <= PASS_TOL,
        details={"attempts": attempts, "accepts": accepts},
    )


def check_osgood_structure_cp7(
    H: HamiltonianSpec,
    gauge: GaugeFunction,
    gamma: OsgoodFunction,
    candidate: ModulusFamily,
    R: float,
    n_samples: int,
    seed: int,
) -> CheckReport:
    """Sampled check of the gauge-compatibility inequality.

    Samples a <= v <= u <= b, scaling factors lambda, lambda_hat inside
    [min sqrt(z), max sqrt(z)], curvatures 2*kappa <= z'(u), 2*kappa_hat >=
    z'(v), and evaluates

        F(x,t,u,l q, l X + k q(x)q)/l - F(x,t,v,lh q, lh X + kh q(x)q)/lh
          + Gamma(u - v) + nu_hat((|l^2-z(u)| + |lh^2-z(v)|)(1 + |q| + |X|)).

    The most negative value of that expression is reported as the violation.
    The canonical choice lambda = sqrt(z(u)), kappa = z'(u)/2 at u = v gives
    exactly zero.
    """
    a, b = H.u_domain
    ga, gb = gauge.domain
    if ga > a + 1e-12 or gb < b - 1e-12:
        raise ConfigurationError(
            f"gauge {gauge.name} domain {gauge.domain!r} does not cover [{a!r}, {b!r}]"
        )
    if gamma.l < (b - a) * (1.0 - 1e-12):
        raise PreconditionError(
            f"Gamma domain [0, {gamma.l!r}] too short for u-v range up to {b - a!r}"
        )
    rng = np.random.default_rng(seed)
    n = H.dim_state
    s_lo = math.sqrt(gauge.lambda0)
    s_hi = math.sqrt(gauge.Lambda0)
    worst = -math.inf
    worst_sample: dict = {}
    for i in range(n_samples):
        x = rng.uniform(-2.0, 2.0, n)
        t = rng.uniform(0.0, H.t_max * (1.0 - 1e-9))
        if i == 0:
            u = v = 0.5 * (a + b)
            lam = lam_hat = math.sqrt(gauge.z(u))
            kap = kap_hat = 0.5 * gauge.z_prime(u)
            q = np.full(n, R / (2.0 * math.sqrt(n)))
            X = np.zeros((n, n))
        else:
            u, v = np.sort(rng.uniform(a, b, 2))[::-1]
            q = _clip_vec(rng.normal(0.0, R / 2.0, n), R)
            X = _clip_sym(_sym(rng.normal(0.0, R / 2.0, (n, n))), R)
            lam = math.sqrt(gauge.z(u)) if rng.uniform() < 0.5 else rng.uniform(s_lo, s_hi)
            lam_hat = math.sqrt(gauge.z(v)) if rng.uniform() < 0.5 else rng.uniform(s_lo, s_hi)
            kap = 0.5 * gauge.z_prime(u) - (0.0 if rng.uniform() < 0.5 else abs(rng.normal(0.0, 0.3)))
            kap_hat = 0.5 * gauge.z_prime(v) + (0.0 if rng.uniform() < 0.5 else abs(rng.normal(0.0, 0.3)))
        qq = np.outer(q, q)
        lhs = H.fn(x, t, u, lam * q, lam * X + kap * qq) / lam - H.fn(
            x, t, v, lam_hat * q, lam_hat * X + kap_hat * qq
        ) / lam_hat
        dev = abs(lam**2 - gauge.z(u)) + abs(lam_hat**2 - gauge.z(v))
        scale = 1.0 + float(np.linalg.norm(q)) + float(np.linalg.norm(X, 2))
        expr = lhs + gamma(u - v) + candidate(dev * scale)
        viol = -expr
        if viol > worst:
            worst = viol
            worst_sample = _sample_dict(
                x=x, t=t, u=u, v=v, q=q, X=X,
                lam=lam, lam_hat=lam_hat, kappa=kap, kappa_hat=kap_hat,
            )
    return CheckReport(
        check="osgood-structure-cp7",
        samples_tested=n_samples,
        max_violation=worst,
        worst_sample=worst_sample,
        seed=seed,
        passed=worst <= PASS_TOL,
    )


def example1_cp7_candidates(R: float) -> tuple[OsgoodFunction, ModulusFamily]:
    """Moduli under which the Example-1 fixture satisfies the Osgood check.

    Gamma is the xlog function (its inequality is exactly the one the
    fixture reduces to at the canonical gauge).  The linear nu_hat rate
    dominates the off-canonical terms: 4R from the |p|^2 coefficient spread
    and 2.1 from the zero-order part, both computed from z = (u+1)^2 bounds
    on [-1/2, 1/e].
    """
    from .osgood import xlog

    return xlog(), ModulusFamily("linear", 4.0 * R + 2.1)
