"""Refinement studies for the closed-form fixtures.

Heat flow (diffusion only) and pure transport, each on three nested grids,
with empirical orders from successive differences.

    python scripts/convergence_study.py [--out results/convergence]
"""

import argparse
import math
from pathlib import Path

from visc import jsonio, mbs, solver

TRANSPORT = {
    "N": 1, "d": 1,
    "sigma": {"form": "constant", "params": {"matrix": [[0.0]]}},
    "mu": {"form": "constant", "params": {"vector": [0.8]}},
    "r": {"form": "constant", "params": {"value": 0.0}},
    "xi": {"form": "constant", "params": {"value": 1.0}},
    "h": {"form": "zero", "params": {}},
    "rho": 0.0, "tau": 1.0, "T": 1.0,
    "U0": {"form": "gaussian-bump",
            "params": {"amplitude": 1.0, "center": [0.0], "width": 0.6}},
}


def run(name, model, base, t_end, out):
    grids = [base, base.refined(), base.refined().refined()]
    rows = solver.refinement_study(model, grids, t_end=t_end)
    jsonio.write_csv(
        out / f"refinement_{name}.csv",
        ["grid", "dx", "diff", "order"],
        [[r["grid"], r["dx"],
          "" if r["diff_to_next"] is None else r["diff_to_next"],
          "" if r["order"] is None else r["order"]] for r in rows],
    )
    orders = [r["order"] for r in rows if r["order"] is not None]
    print(f"{name}: diffs "
          f"{[r['diff_to_next'] for r in rows if r['diff_to_next'] is not None]}, "
          f"orders {orders}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results/convergence")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    heat_base = solver.GridSpec(box=((-2 * math.pi, 2 * math.pi),), nodes=(101,))
    run("heat", mbs.heat_model(), heat_base, 0.5, out)

    transport_base = solver.GridSpec(box=((-4.0, 4.0),), nodes=(129,))
    run("transport", mbs.model_from_dict(TRANSPORT), transport_base, 0.5, out)
    print(f"artifacts in {out}/")


if __name__ == "__main__":
    main()
