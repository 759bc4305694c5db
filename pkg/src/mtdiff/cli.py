"""Command-line experiment harness.

Five subcommands map onto the library's main entry points:

* ``theory``          closed-form predictions over an eta grid
* ``simulate``        Monte-Carlo learning curves with a theory overlay
* ``bias-scan``       steady-state bias surface over (mu, eta) with slope fits
* ``sweep-eta``       msd_bar curve over eta and its grid minimizer
* ``filter-response`` low-pass gain of the regularization filter

All take ``--config`` (flat-key file, see config.py) plus optional ``--out``,
``--seed`` and ``--jobs`` overrides.  Outputs are CSV (always linear scale)
and native SVG (decibels applied at render time); every file starts with
``#``-prefixed metadata lines carrying the config digest, the effective seed
and the module versions.  Exit codes: 0 ok, 2 config error, 3 stability
violation, 4 numerical divergence.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import MODULE_VERSIONS, __version__
from .config import ExperimentConfig, build_ensemble, build_graph, load_config
from .engine import SimConfig, monte_carlo
from .errors import (
    ConfigError,
    DimensionMismatch,
    GraphError,
    NonUniformProfile,
    NumericalDivergence,
    SingularSystem,
    UnstableConfiguration,
)
from .graphs import Graph, gft
from .regularized import long_term_bias, solve_regularized
from .svg import Series, line_chart
from .tasks import TaskEnsemble
from .theory import optimize_eta, theory_report


def _metadata(cfg: ExperimentConfig, command: str) -> list[str]:
    modules = ", ".join(f"{k}={v}" for k, v in sorted(MODULE_VERSIONS.items()))
    return [
        f"tool = mtdiff {__version__}",
        f"command = {command}",
        f"config-sha256 = {cfg.sha256}",
        f"seed = {cfg.algo.seed}",
        f"modules = {modules}",
    ]


def _cell(v: object) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(
    path: Path, metadata: Sequence[str], header: Sequence[str], rows: Sequence[Sequence]
) -> None:
    with open(path, "w", newline="") as fh:
        for line in metadata:
            fh.write(f"# {line}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def _write_svg(path: Path, document: str) -> None:
    path.write_text(document)


def _db(x: float) -> str:
    return f"{10.0 * math.log10(x):.2f} dB" if x > 0.0 else "-inf dB"


def _slug(x: float) -> str:
    return f"{x:g}".replace(".", "p").replace("-", "m").replace("+", "")


def _single(values: tuple[float, ...], key: str) -> float:
    if len(values) != 1:
        raise ConfigError(f"this command expects a single {key}, got {len(values)}")
    return values[0]


def _out_dir(cfg: ExperimentConfig) -> Path:
    d = Path(cfg.output.dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


# ---------------------------------------------------------------- commands


def cmd_theory(cfg: ExperimentConfig, g: Graph, ens: TaskEnsemble) -> None:
    mu = _single(cfg.algo.mu, "algo.mu")
    reports = [theory_report(ens, g, mu, eta) for eta in cfg.algo.eta]

    out = _out_dir(cfg)
    meta = _metadata(cfg, "theory")
    rows = [
        [r.eta, r.mu, r.msd_total, r.msd_noncoop, r.msd_bar, r.mismatch_sq, r.bias_cross_term]
        for r in reports
    ]
    if "csv" in cfg.output.formats:
        _write_csv(
            out / "theory.csv",
            meta,
            ["eta", "mu", "msd_total", "msd_noncoop", "msd_bar", "mismatch_sq", "bias_cross"],
            rows,
        )
        for r in reports:
            freq_rows = [
                [m + 1, float(g.eigenvalues[m]), float(r.msd_per_frequency[m])]
                for m in range(g.n_agents)
            ]
            _write_csv(
                out / f"theory_freq_eta{_slug(r.eta)}.csv",
                meta,
                ["m", "lambda_m", "msd_term"],
                freq_rows,
            )
    if "svg" in cfg.output.formats and len(reports) > 1:
        etas = [r.eta for r in reports]
        doc = line_chart(
            [
                Series("msd vs regularized point", etas, [r.msd_total for r in reports], markers=True),
                Series("msd vs targets", etas, [r.msd_bar for r in reports], markers=True),
                Series("non-cooperative", etas, [r.msd_noncoop for r in reports], dash="6 4"),
            ],
            title="steady-state predictions",
            x_label="eta",
            y_label="MSD",
            y_db=cfg.output.db,
            metadata=meta,
        )
        _write_svg(out / "theory.svg", doc)
    for r in reports:
        print(
            f"eta={r.eta:g}  msd={r.msd_total:.6e} ({_db(r.msd_total)})  "
            f"msd_bar={r.msd_bar:.6e} ({_db(r.msd_bar)})"
        )


def cmd_simulate(cfg: ExperimentConfig, g: Graph, ens: TaskEnsemble) -> None:
    mu = _single(cfg.algo.mu, "algo.mu")
    eta = _single(cfg.algo.eta, "algo.eta")
    sim = SimConfig.for_problem(
        ens,
        g,
        mu=mu,
        eta=eta,
        n_iters=cfg.algo.n_iters,
        n_runs=cfg.algo.n_runs,
        seed=cfg.algo.seed,
        steady_window_frac=cfg.algo.steady_window_frac,
        track_long_term=cfg.algo.track_long_term,
    )
    report = theory_report(ens, g, mu, eta)
    res = monte_carlo(ens, g, sim, jobs=cfg.algo.jobs)

    out = _out_dir(cfg)
    meta = _metadata(cfg, "simulate")
    t = res.curve_vs_reg.size
    if "csv" in cfg.output.formats:
        header = ["iter", "msd_vs_reg", "msd_vs_target"]
        columns = [res.curve_vs_reg, res.curve_vs_target]
        if res.long_term_gap is not None:
            header.append("long_term_gap")
            columns.append(res.long_term_gap)
        rows = [[i, *(float(c[i]) for c in columns)] for i in range(t)]
        _write_csv(out / "curves.csv", meta, header, rows)
    if "svg" in cfg.output.formats:
        iters = np.arange(t)
        series = [
            Series("simulation (vs regularized point)", iters, res.curve_vs_reg),
            Series("simulation (vs targets)", iters, res.curve_vs_target),
            Series("theory steady state", [0, t - 1], [report.msd_total] * 2, dash="6 4"),
            Series("theory steady state (targets)", [0, t - 1], [report.msd_bar] * 2, dash="2 3"),
        ]
        doc = line_chart(
            series,
            title=f"learning curves (mu={mu:g}, eta={eta:g}, {res.runs_completed} runs)",
            x_label="iteration",
            y_label="MSD",
            y_db=cfg.output.db,
            metadata=meta,
        )
        _write_svg(out / "learning_curve.svg", doc)
    print(
        f"steady msd (vs reg): sim={_db(res.steady_msd_vs_reg)}  "
        f"theory={_db(report.msd_total)}"
    )
    print(
        f"steady msd (vs targets): sim={_db(res.steady_msd_vs_target)}  "
        f"theory={_db(report.msd_bar)}"
    )


def _loglog_slope(x: np.ndarray, y: np.ndarray) -> float:
    """Least-squares slope of log10 y against log10 x."""
    lx, ly = np.log10(x), np.log10(y)
    return float(np.polyfit(lx, ly, 1)[0])


def cmd_bias_scan(cfg: ExperimentConfig, g: Graph, ens: TaskEnsemble) -> None:
    mus = cfg.algo.mu
    etas = cfg.algo.eta
    surface = np.empty((len(etas), len(mus)))
    for j, mu in enumerate(mus):
        for i, eta in enumerate(etas):
            surface[i, j] = long_term_bias(ens, g, mu, eta).bias_sq_norm

    out = _out_dir(cfg)
    meta = _metadata(cfg, "bias-scan")
    if "csv" in cfg.output.formats:
        header = ["eta"]
        for mu in mus:
            header += [f"bias_sq[mu={mu:g}]", f"bias_db[mu={mu:g}]"]
        rows = []
        for i, eta in enumerate(etas):
            row: list[object] = [eta]
            for j in range(len(mus)):
                b = float(surface[i, j])
                row.append(b)
                row.append(10.0 * math.log10(b) if b > 0.0 else None)
            rows.append(row)
        _write_csv(out / "bias_scan.csv", meta, header, rows)

    positive = np.array([e > 0.0 for e in etas])
    slope_rows = []
    for j, mu in enumerate(mus):
        if positive.sum() >= 2:
            slope = _loglog_slope(
                np.asarray(etas)[positive], surface[positive, j]
            )
            slope_rows.append([mu, slope, int(positive.sum())])
            print(f"mu={mu:g}: slope of log||bias||^2 vs log eta = {slope:.3f}")
        else:
            slope_rows.append([mu, None, int(positive.sum())])
    if "csv" in cfg.output.formats:
        _write_csv(
            out / "bias_slopes.csv", meta, ["mu", "slope_vs_eta", "n_points"], slope_rows
        )
    if len(mus) >= 2 and positive.any():
        eta_ref = float(np.asarray(etas)[positive].max())
        i_ref = etas.index(eta_ref)
        slope_mu = _loglog_slope(np.asarray(mus), surface[i_ref, :])
        print(f"eta={eta_ref:g}: slope of log||bias||^2 vs log mu = {slope_mu:.3f}")

    if "svg" in cfg.output.formats and positive.sum() >= 2:
        series = [
            Series(f"mu={mu:g}", np.asarray(etas)[positive], surface[positive, j], markers=True)
            for j, mu in enumerate(mus)
        ]
        doc = line_chart(
            series,
            title="steady-state bias vs regularization",
            x_label="eta",
            y_label="||bias||^2",
            x_log=True,
            y_db=True,
            metadata=meta,
        )
        _write_svg(out / "bias_scan.svg", doc)


def cmd_sweep_eta(cfg: ExperimentConfig, g: Graph, ens: TaskEnsemble) -> None:
    mu = _single(cfg.algo.mu, "algo.mu")
    grid = np.asarray(cfg.algo.eta, dtype=float)
    if grid.size == 0 or grid[0] != 0.0 or np.any(np.diff(grid) <= 0.0):
        raise ConfigError("sweep-eta needs an ascending algo.eta grid starting at 0")
    sweep = optimize_eta(ens, g, mu, grid)
    reports = [theory_report(ens, g, mu, float(eta)) for eta in grid]

    out = _out_dir(cfg)
    meta = _metadata(cfg, "sweep-eta") + [f"eta-star = {sweep.eta_star:g}"]
    if "csv" in cfg.output.formats:
        rows = [
            [r.eta, r.msd_bar, r.msd_total, r.mismatch_sq, r.bias_cross_term]
            for r in reports
        ]
        _write_csv(
            out / "sweep.csv",
            meta,
            ["eta", "msd_bar", "msd_total", "mismatch_sq", "bias_cross"],
            rows,
        )

    spot: list[tuple[float, float]] = []
    if cfg.sweep.spot_check:
        check_etas = sorted({0.0, sweep.eta_star, float(grid[-1])})
        for eta in check_etas:
            sim = SimConfig.for_problem(
                ens,
                g,
                mu=mu,
                eta=eta,
                n_iters=cfg.algo.n_iters,
                n_runs=cfg.algo.n_runs,
                seed=cfg.algo.seed,
                steady_window_frac=cfg.algo.steady_window_frac,
            )
            res = monte_carlo(ens, g, sim, jobs=cfg.algo.jobs)
            spot.append((eta, res.steady_msd_vs_target))
        if "csv" in cfg.output.formats:
            spot_rows = [
                [eta, sim_val, float(np.interp(eta, grid, sweep.msd_bar_curve))]
                for eta, sim_val in spot
            ]
            _write_csv(
                out / "sweep_spot_check.csv",
                meta,
                ["eta", "msd_sim_vs_target", "msd_bar_theory"],
                spot_rows,
            )

    if "svg" in cfg.output.formats:
        series = [Series("msd_bar (theory)", grid, sweep.msd_bar_curve)]
        series.append(
            Series("optimum", [sweep.eta_star], [float(sweep.msd_bar_curve.min())], markers=True)
        )
        if spot:
            series.append(
                Series("simulation spot check", [e for e, _ in spot], [v for _, v in spot], markers=True)
            )
        doc = line_chart(
            series,
            title=f"regularization sweep (mu={mu:g})",
            x_label="eta",
            y_label="MSD vs targets",
            y_db=cfg.output.db,
            metadata=meta,
        )
        _write_svg(out / "sweep.svg", doc)

    base = float(sweep.msd_bar_curve[0])
    best = float(sweep.msd_bar_curve.min())
    print(
        f"eta* = {sweep.eta_star:g}  msd_bar(eta*) = {_db(best)}  "
        f"msd_bar(0) = {_db(base)}"
    )
    for eta, sim_val in spot:
        print(f"spot check eta={eta:g}: sim msd (vs targets) = {_db(sim_val)}")


def cmd_filter_response(cfg: ExperimentConfig, g: Graph, ens: TaskEnsemble) -> None:
    if not ens.is_uniform:
        raise NonUniformProfile(
            "filter-response requires the uniform covariance profile"
        )
    r_u = ens.regressor_cov[0]
    lam_u_max = float(np.linalg.eigvalsh(r_u)[-1])
    lam_grid = np.linspace(0.0, cfg.filter.lambda_max, cfg.filter.lambda_points)

    out = _out_dir(cfg)
    meta = _metadata(cfg, "filter-response")
    rows = []
    for eta in cfg.algo.eta:
        for lam in lam_grid:
            rows.append([eta, float(lam), 1.0 / (1.0 + eta * float(lam) / lam_u_max)])
    if "csv" in cfg.output.formats:
        _write_csv(out / "filter.csv", meta, ["eta", "lambda", "ratio"], rows)

    base_blocks = gft(ens.targets, g).blocks
    base_norms = np.linalg.norm(base_blocks, axis=1)
    target_rows = []
    for eta in cfg.algo.eta:
        reg = solve_regularized(ens, g, eta)
        norms = np.linalg.norm(reg.spectral_blocks, axis=1)
        for m in range(g.n_agents):
            lam = float(g.eigenvalues[m])
            ratio = float(norms[m] / base_norms[m]) if base_norms[m] > 0.0 else None
            target_rows.append(
                [eta, m + 1, lam, ratio, 1.0 / (1.0 + eta * lam / lam_u_max)]
            )
    if "csv" in cfg.output.formats:
        _write_csv(
            out / "filter_targets.csv",
            meta,
            ["eta", "m", "lambda_m", "ratio", "bound"],
            target_rows,
        )

    if "svg" in cfg.output.formats:
        series = [
            Series(
                f"eta={eta:g}",
                lam_grid,
                [1.0 / (1.0 + eta * float(lam) / lam_u_max) for lam in lam_grid],
            )
            for eta in cfg.algo.eta
        ]
        doc = line_chart(
            series,
            title="regularization filter gain",
            x_label="graph frequency lambda",
            y_label="gain",
            metadata=meta,
        )
        _write_svg(out / "filter.svg", doc)
    for eta in cfg.algo.eta:
        worst = 1.0 / (1.0 + eta * float(lam_grid[-1]) / lam_u_max)
        print(f"eta={eta:g}: gain at lambda={lam_grid[-1]:g} is {worst:.4f}")


# ---------------------------------------------------------------- driver

_COMMANDS = {
    "theory": (cmd_theory, "closed-form steady-state predictions over an eta grid"),
    "simulate": (cmd_simulate, "Monte-Carlo learning curves with theory overlay"),
    "bias-scan": (cmd_bias_scan, "steady-state bias over (mu, eta) with slope fits"),
    "sweep-eta": (cmd_sweep_eta, "msd_bar over an eta grid; report the minimizer"),
    "filter-response": (cmd_filter_response, "low-pass gain of the penalty filter"),
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mtdiff",
        description="multitask diffusion experiments: theory, simulation, sweeps",
    )
    parser.add_argument(
        "--version", action="version", version=f"mtdiff {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (func, help_text) in _COMMANDS.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", required=True, help="flat-key config file")
        sp.add_argument("--out", default=None, help="output directory (overrides config)")
        sp.add_argument("--seed", type=int, default=None, help="override algo.seed")
        sp.add_argument("--jobs", type=int, default=None, help="override algo.jobs")
        sp.set_defaults(func=func)
    return parser


def _apply_overrides(cfg: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    algo = cfg.algo
    if args.seed is not None:
        if not (0 <= args.seed <= 0xFFFFFFFFFFFFFFFF):
            raise ConfigError("--seed must fit in an unsigned 64-bit integer")
        algo = replace(algo, seed=args.seed)
    if args.jobs is not None:
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        algo = replace(algo, jobs=args.jobs)
    output = cfg.output if args.out is None else replace(cfg.output, dir=args.out)
    return replace(cfg, algo=algo, output=output)


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        g = build_graph(cfg)
        ens = build_ensemble(cfg, g)
        args.func(cfg, g, ens)
    except (ConfigError, GraphError, DimensionMismatch, NonUniformProfile) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except UnstableConfiguration as exc:
        print(f"stability violation: {exc}", file=sys.stderr)
        return 3
    except (NumericalDivergence, SingularSystem) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    return 0
