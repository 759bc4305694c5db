#!/usr/bin/env python3
"""Where does cooperation stop paying?  msd_bar against eta, with sims.

Sweeps the penalty strength on very smooth targets, locates the minimizer,
then spot-checks theory with Monte-Carlo runs at {0, eta*, max}.
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

import mtdiff as mt
from mtdiff.svg import Series, line_chart


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mu", type=float, default=5e-3)
    ap.add_argument("--eta-max", type=float, default=350.0)
    ap.add_argument("--runs", type=int, default=100)
    ap.add_argument("--jobs", type=int, default=4)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--out", type=Path, default=Path("out/tradeoff"))
    args = ap.parse_args()

    g = mt.random_geometric_graph(15, 0.35, weight=0.1, seed=9, max_degree=5)
    targets = mt.make_smooth_target(g, np.linspace(8, 12, 5), 5)
    ens = mt.uniform_profile(targets, sigma_u_sq=1.0, sigma_v_sq=1.0)

    grid = np.concatenate([[0.0], np.geomspace(0.25, args.eta_max, 40)])
    sweep = mt.optimize_eta(ens, g, args.mu, grid)
    print(f"eta* = {sweep.eta_star:g}")

    spots = sorted({0.0, sweep.eta_star, float(grid[-1])})
    sims = []
    for eta in spots:
        cfg = mt.SimConfig.for_problem(
            ens, g, mu=args.mu, eta=eta, n_runs=args.runs, seed=args.seed
        )
        res = mt.monte_carlo(ens, g, cfg, jobs=args.jobs)
        sims.append(res.steady_msd_vs_target)
        th = float(np.interp(eta, sweep.etas, sweep.msd_bar_curve))
        print(
            f"eta={eta:g}: sim {10 * np.log10(res.steady_msd_vs_target):.2f} dB, "
            f"theory {10 * np.log10(th):.2f} dB"
        )

    args.out.mkdir(parents=True, exist_ok=True)
    doc = line_chart(
        [
            Series("msd_bar (theory)", sweep.etas, sweep.msd_bar_curve),
            Series("simulation", spots, sims, markers=True),
        ],
        title=f"regularization trade-off, mu={args.mu:g}",
        x_label="eta",
        y_label="MSD vs targets",
        y_db=True,
    )
    (args.out / "eta_tradeoff.svg").write_text(doc)
    print(f"wrote {args.out / 'eta_tradeoff.svg'}")


if __name__ == "__main__":
    main()
