#!/usr/bin/env python3
"""Log-log scaling of the steady-state bias in eta and mu.

Evaluates the closed-form bias over small-eta grids for several step sizes,
fits the slopes, and writes an SVG of the curves.  Expected: quartic growth
in eta, quadratic in mu.
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

import mtdiff as mt
from mtdiff.svg import Series, line_chart


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mus", type=float, nargs="+", default=[1e-3, 1e-4, 1e-5])
    ap.add_argument("--out", type=Path, default=Path("out/bias"))
    args = ap.parse_args()

    g = mt.random_geometric_graph(15, 0.35, weight=0.1, seed=9, max_degree=5)
    targets = mt.make_smooth_target(g, np.linspace(8, 12, 5), 5)
    ens = mt.varying_profile(targets, seed=7)
    etas = np.geomspace(1e-3, 1e-2, 9)

    series = []
    for mu in args.mus:
        b = np.array([mt.long_term_bias(ens, g, mu, e).bias_sq_norm for e in etas])
        slope = np.polyfit(np.log10(etas), np.log10(b), 1)[0]
        print(f"mu={mu:g}: ||bias||^2 ~ eta^{slope:.3f}")
        series.append(Series(f"mu={mu:g}", etas, b, markers=True))

    eta_ref = float(etas[-1])
    b_mu = np.array(
        [mt.long_term_bias(ens, g, mu, eta_ref).bias_sq_norm for mu in args.mus]
    )
    slope_mu = np.polyfit(np.log10(args.mus), np.log10(b_mu), 1)[0]
    print(f"eta={eta_ref:g}: ||bias||^2 ~ mu^{slope_mu:.3f}")

    args.out.mkdir(parents=True, exist_ok=True)
    doc = line_chart(
        series,
        title="steady-state bias scaling",
        x_label="eta",
        y_label="||bias||^2",
        x_log=True,
        y_db=True,
    )
    (args.out / "bias_scaling.svg").write_text(doc)
    print(f"wrote {args.out / 'bias_scaling.svg'}")


if __name__ == "__main__":
    main()
