"""Flows and divergence scores for the Osgood catalog.

For each catalog entry: the Euler flow of f' = Gamma(f) from a small start
(non-uniqueness shows up as escape from zero for the non-Osgood entries) and
the quadrature scores of the defining integral.

    python scripts/osgood_gallery.py [--out results/osgood]
"""

import argparse
from pathlib import Path

from visc import jsonio, osgood

ENTRIES = ["xlog", "linear:1.0", "power:0.5"]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results/osgood")
    ap.add_argument("--f0", type=float, default=1e-6)
    ap.add_argument("--dt", type=float, default=1e-4)
    ap.add_argument("--T", type=float, default=1.0)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    eps = [10.0**-k for k in range(2, 13)]
    for ident in ENTRIES:
        gamma = osgood.from_identifier(ident)
        tag = ident.replace(":", "_")
        traj = osgood.ode_flow(gamma, args.f0, args.T, args.dt)
        jsonio.write_csv(out / f"flow_{tag}.csv", ["t", "f"],
                         zip(traj.times, traj.values))
        usable = [e for e in eps if e < gamma.l]
        scores = osgood.divergence_score(gamma, usable)
        jsonio.write_csv(out / f"scores_{tag}.csv", ["eps", "score"],
                         zip(usable, scores))
        label = osgood.classify_divergence(scores)
        print(f"{ident:12s} claimed={gamma.tag:22s} heuristic={label:20s} "
              f"f(T)={traj.values[-1]:.3e}")
    print(f"artifacts in {out}/")


if __name__ == "__main__":
    main()
