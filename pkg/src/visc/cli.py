"""Command-line front end.

Subcommands dispatch runs and checks and write CSV/JSON artifacts into an
output directory, together with a manifest listing every file written and a
hash of the resolved configuration.  Exit codes: 0 all checks pass, 1
configuration error, 2 scientific check failure.
"""

from __future__ import annotations

import hashlib
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import jsonio, mbs, osgood, solver
from .errors import ViscError
from .hamiltonian import (
    check_degenerate_ellipticity,
    check_gradient_modulus,
    check_osgood_structure_cp7,
    check_structure_cp6,
)
from .transform import Transformation, gauge_from_identifier

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CHECK = 2


def _workers() -> int:
    cap = os.environ.get("VISC_THREADS")
    try:
        cap = max(1, int(cap)) if cap else 1
    except ValueError:
        cap = 1
    return min(cap, os.cpu_count() or 1)


class Artifacts:
    """Collects output files for the manifest."""

    def __init__(self, out_dir: str, config: dict):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.config = config
        self.files: list[str] = []

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.dir / name

    def write_json(self, name: str, obj) -> None:
        self.path(name).write_text(jsonio.dumps(obj))

    def finalize(self) -> None:
        text = jsonio.dumps(self.config)
        manifest = {
            "config": self.config,
            "config_sha256": hashlib.sha256(text.encode()).hexdigest(),
            "files": sorted(self.files),
            "workers": _workers(),
        }
        (self.dir / "manifest.json").write_text(jsonio.dumps(manifest))


def _load_grid(path: str) -> solver.GridSpec:
    import json

    with open(path) as fh:
        cfg = json.load(fh)
    for key in ("box", "nodes"):
        if key not in cfg:
            raise ViscError(f"grid config missing required field {key!r}")
    return solver.GridSpec(
        box=tuple(tuple(float(v) for v in b) for b in cfg["box"]),
        nodes=tuple(int(n) for n in cfg["nodes"]),
        cfl_safety=float(cfg.get("cfl_safety", 0.9)),
        padding=int(cfg.get("padding", 2)),
    )


def _load_scheme(path: str | None, problem) -> solver.SchemeConfig | None:
    if path is None:
        return None
    import json

    with open(path) as fh:
        cfg = json.load(fh)
    theta = cfg.get("theta", "auto")
    if theta == "auto":
        theta = solver.estimate_theta(problem)
    else:
        theta = tuple(float(v) for v in theta)
    dt = cfg.get("dt", "auto")
    if dt == "auto":
        dt = solver.stable_dt(problem, theta)
    return solver.SchemeConfig(
        theta=tuple(theta), dt=float(dt), record_every=int(cfg.get("record_every", 100))
    )


def _guard(fn):
    """Map package errors to exit code 1 with the offending field named."""
    import functools

    @functools.wraps(fn)
    def wrapped(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ViscError as exc:
            click.echo(f"configuration error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        except (KeyError, ValueError) as exc:
            click.echo(f"configuration error: invalid field {exc}", err=True)
            sys.exit(EXIT_CONFIG)

    return wrapped


@click.group()
def main():
    """Numerical engine and hypothesis checkers for the degenerate
    quasilinear pricing equation."""


@main.command("solve")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--grid", "grid_path", required=True, type=click.Path(exists=True))
@click.option("--scheme", "scheme_path", default=None, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--t-end", type=float, default=None)
@click.option("--seed", type=int, default=0)
@_guard
def cmd_solve(model_path, grid_path, scheme_path, out_dir, t_end, seed):
    """March the pricing equation and write field snapshots and the
    barrier-sandwich report."""
    model = mbs.load_model(model_path)
    grid = _load_grid(grid_path)
    problem = solver.PricingProblem(model, grid)
    cfg = _load_scheme(scheme_path, problem)
    config = {
        "command": "solve", "model": model.to_dict(), "grid": grid_path,
        "t_end": t_end, "seed": seed,
    }
    art = Artifacts(out_dir, config)
    result = solver.solve(model, grid, cfg=cfg, t_end=t_end, seed=seed)
    pts = grid.points().reshape(-1, grid.dim)
    rows = []
    for f in result.fields:
        for xk, uk in zip(pts, f.values.ravel()):
            rows.append([f.t, *xk, uk])
    jsonio.write_csv(
        art.path("fields.csv"),
        ["t"] + [f"x{i+1}" for i in range(grid.dim)] + ["U"],
        rows,
    )
    sandwich = [
        {k: f.meta[k] for k in ("k_lower", "k_upper", "sandwich_tol",
                                "sandwich_excess", "sandwich_ok")}
        | {"t": f.t}
        for f in result.fields
    ]
    ok = all(s["sandwich_ok"] for s in sandwich)
    art.write_json("sandwich.json", {"fields": sandwich, "flags": result.flags,
                                     "pass": ok, "seed": seed})
    art.finalize()
    sys.exit(EXIT_OK if ok else EXIT_CHECK)


@main.command("check-conditions")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--samples", type=int, default=10_000)
@click.option("--seed", type=int, default=7)
@click.option("--radius", "R", type=float, default=2.0)
@click.option("--out", "out_dir", default=None, type=click.Path())
@_guard
def cmd_check_conditions(model_path, samples, seed, R, out_dir):
    """Run every sampled structural check against one model."""
    from .errors import ModelError

    model = mbs.load_model(model_path)
    reports = [
        mbs.validate_model(model, samples, seed),
        mbs.barrier_residuals(model, samples, seed),
    ]
    try:
        H = mbs.dm2_hamiltonian(model)
    except ModelError as exc:
        # positivity failed; validate-model has already recorded why
        click.echo(f"structural checks skipped: {exc}", err=True)
        H = None
    if H is not None:
        reports.append(check_degenerate_ellipticity(H, samples, seed))
        reports.append(check_gradient_modulus(H, R, samples, seed))
        nu2, nu2R = mbs.cp6_candidates(model)
        reports.append(check_structure_cp6(H, R, (nu2, nu2R), samples, seed))
        if model.rho > 0.0:
            gamma, nu_hat, gauge = mbs.cp7_candidates(model, R)
            reports.append(
                check_osgood_structure_cp7(H, gauge, gamma, nu_hat, R, samples, seed)
            )
    payload = [r.to_json_dict() for r in reports]
    ok = all(r.passed for r in reports)
    if out_dir is not None:
        config = {"command": "check-conditions", "model": model.to_dict(),
                  "samples": samples, "seed": seed, "radius": R}
        art = Artifacts(out_dir, config)
        art.write_json("reports.json", payload)
        art.finalize()
    else:
        click.echo(jsonio.dumps(payload), nl=False)
    for r in reports:
        click.echo(f"[{'PASS' if r.passed else 'FAIL'}] {r.check}: "
                   f"max_violation={jsonio.fmt(r.max_violation)}", err=True)
    sys.exit(EXIT_OK if ok else EXIT_CHECK)


@main.command("barriers")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--points", type=int, default=1000)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", type=int, default=0)
@_guard
def cmd_barriers(model_path, points, out_dir, seed):
    """Tabulate the lower/upper barriers on a time grid."""
    model = mbs.load_model(model_path)
    pair = mbs.barrier_pair(model)
    config = {"command": "barriers", "model": model.to_dict(), "points": points,
              "seed": seed}
    art = Artifacts(out_dir, config)
    ts = np.linspace(0.0, model.T * (1.0 - 1e-9), points)
    rows = [[t, pair.k_lower(t), pair.k_upper(t)] for t in ts]
    jsonio.write_csv(art.path("barriers.csv"), ["t", "k_lower", "k_upper"], rows)
    art.write_json(
        "constants.json",
        {"K0": pair.K0, "c0": pair.c0, "m0": pair.m0, "M0": pair.M0, "seed": seed},
    )
    art.finalize()
    sys.exit(EXIT_OK)


@main.command("osgood-demo")
@click.option("--gamma", "gamma_id", default="xlog")
@click.option("--f0", type=float, default=1e-3)
@click.option("--dt", type=float, default=1e-4)
@click.option("--T", "t_flow", type=float, default=1.0)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", type=int, default=0)
@_guard
def cmd_osgood_demo(gamma_id, f0, dt, t_flow, out_dir, seed):
    """Euler flow of f' = Gamma(f) plus divergence scores of 1/Gamma."""
    gamma = osgood.from_identifier(gamma_id)
    config = {"command": "osgood-demo", "gamma": gamma_id, "f0": f0, "dt": dt,
              "T": t_flow, "seed": seed}
    art = Artifacts(out_dir, config)
    traj = osgood.ode_flow(gamma, f0, t_flow, dt)
    jsonio.write_csv(art.path("flow.csv"), ["t", "f"], zip(traj.times, traj.values))
    eps = [10.0 ** (-k) for k in range(2, 13)]
    eps = [e for e in eps if e < gamma.l]
    scores = osgood.divergence_score(gamma, eps)
    jsonio.write_csv(art.path("scores.csv"), ["eps", "score"], zip(eps, scores))
    art.write_json(
        "report.json",
        {
            "gamma": gamma.name,
            "tag": gamma.tag,
            "saturated": traj.saturated,
            "divergence_class": osgood.classify_divergence(scores),
            "seed": seed,
        },
    )
    art.finalize()
    sys.exit(EXIT_OK)


@main.command("convergence")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--grids", "grid_paths", required=True,
              help="comma-separated grid JSON paths, each refining the previous 2x")
@click.option("--t-end", type=float, required=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", type=int, default=0)
@_guard
def cmd_convergence(model_path, grid_paths, t_end, out_dir, seed):
    """Refinement study: successive differences and empirical orders."""
    model = mbs.load_model(model_path)
    grids = [_load_grid(p) for p in grid_paths.split(",")]
    config = {"command": "convergence", "model": model.to_dict(),
              "grids": grid_paths, "t_end": t_end, "seed": seed}
    art = Artifacts(out_dir, config)
    rows = solver.refinement_study(model, grids, t_end, seed=seed)
    jsonio.write_csv(
        art.path("refinement.csv"),
        ["grid", "dx", "diff", "order"],
        [
            [r["grid"], r["dx"],
             "" if r["diff_to_next"] is None else r["diff_to_next"],
             "" if r["order"] is None else r["order"]]
            for r in rows
        ],
    )
    art.finalize()
    sys.exit(EXIT_OK)


@main.command("oracle-compare")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--point", "point_str", required=True)
@click.option("--t", "t_probe", type=float, required=True)
@click.option("--paths", type=int, default=200_000)
@click.option("--steps", type=int, default=200)
@click.option("--grid", "grid_path", default=None, type=click.Path(exists=True))
@click.option("--out", "out_dir", default=None, type=click.Path())
@click.option("--seed", type=int, default=0)
@_guard
def cmd_oracle_compare(model_path, point_str, t_probe, paths, steps, grid_path,
                       out_dir, seed):
    """Solve the linear (rho = 0) model and compare the grid value at a probe
    point against the probabilistic oracle; passes within 3 standard errors."""
    model = mbs.load_model(model_path)
    x = np.array([float(s) for s in point_str.split(",")])
    if grid_path is not None:
        grid = _load_grid(grid_path)
    else:
        box = tuple((float(xi) - 2.0 * np.pi, float(xi) + 2.0 * np.pi) for xi in x)
        grid = solver.GridSpec(box=box, nodes=(401,) * model.dim_state)
    result = solver.solve(model, grid, t_end=t_probe, seed=seed)
    field = result.final()
    axes = grid.axes()
    idx = tuple(int(np.argmin(np.abs(ax - xi))) for ax, xi in zip(axes, x))
    node = [float(ax[i]) for ax, i in zip(axes, idx)]
    solver_val = float(field.values[idx])
    est, stderr = solver.mc_oracle(model, np.array(node), t_probe, paths, steps, seed)
    gap = abs(solver_val - est)
    ok = gap <= 3.0 * stderr
    payload = {
        "point": node, "t": t_probe, "solver": solver_val, "mc_estimate": est,
        "mc_stderr": stderr, "gap": gap, "pass": ok, "seed": seed,
    }
    if out_dir is not None:
        config = {"command": "oracle-compare", "model": model.to_dict(),
                  "point": point_str, "t": t_probe, "paths": paths,
                  "steps": steps, "seed": seed}
        art = Artifacts(out_dir, config)
        art.write_json("oracle.json", payload)
        art.finalize()
    click.echo(jsonio.dumps(payload), nl=False)
    sys.exit(EXIT_OK if ok else EXIT_CHECK)


@main.command("transform-roundtrip")
@click.option("--gauge", "gauge_id", required=True)
@click.option("--domain", "domain_str", default=None,
              help="a,b working interval (not needed for mbs-exp)")
@click.option("--margin", type=float, default=0.0)
@click.option("--samples", type=int, default=200)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", type=int, default=0)
@_guard
def cmd_transform_roundtrip(gauge_id, domain_str, margin, samples, out_dir, seed):
    """Check Psi / inverse round trips and the derivative identity."""
    domain = None
    if domain_str is not None:
        a, b = (float(s) for s in domain_str.split(","))
        domain = (a, b)
    gauge = gauge_from_identifier(gauge_id, domain)
    transf = Transformation(gauge, margin)
    rng = np.random.default_rng(seed)
    lo, hi = transf.u_range
    us = rng.uniform(lo, hi, samples)
    rows = []
    worst_rt = 0.0
    worst_deriv = 0.0
    for u in us:
        v = transf.psi(float(u))
        back = transf.psi_inverse(v)
        ip, _ = transf.inverse_derivatives(v)
        rt = abs(back - u)
        dv = abs(ip**2 - gauge.z(float(u)))
        worst_rt = max(worst_rt, rt)
        worst_deriv = max(worst_deriv, dv)
        rows.append([u, v, rt, dv])
    config = {"command": "transform-roundtrip", "gauge": gauge_id,
              "domain": domain_str, "margin": margin, "samples": samples,
              "seed": seed}
    art = Artifacts(out_dir, config)
    jsonio.write_csv(
        art.path("roundtrip.csv"), ["u", "psi", "roundtrip_error", "deriv_error"], rows
    )
    ok = worst_rt <= 1e-8 and worst_deriv <= 1e-8 * (1.0 + gauge.Lambda0)
    art.write_json(
        "report.json",
        {"max_roundtrip_error": worst_rt, "max_derivative_error": worst_deriv,
         "pass": ok, "seed": seed},
    )
    art.finalize()
    sys.exit(EXIT_OK if ok else EXIT_CHECK)


if __name__ == "__main__":
    main()
