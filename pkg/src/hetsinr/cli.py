"""Command-line front end.

Subcommands: ``assoc``, ``outage``, ``rate``, ``simulate``, ``compare``.
The network is always described by a config file; flags control only
sweep grids, tolerances, and simulation size.  All CSV output uses a
header row, comma separators, LF line endings, UTF-8, and 9 significant
digits, so identical inputs produce byte-identical files.

Exit codes: 0 success, 1 a failed ``compare`` verdict, 2 any error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np
from scipy import stats

from . import analysis, montecarlo
from .errors import HetSinrError
from .model import db_to_linear, linear_to_db, load_config
from .specfun import QuadratureSettings

_SEED_ENV = "HETSINR_SEED"


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    return f"{float(x):.9g}"


def _write_rows(path: str | None, header, rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(c) for c in row) for row in rows)
    text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _settings(args) -> QuadratureSettings:
    return QuadratureSettings(rel_tol=args.quad_rel_tol,
                              abs_tol=args.quad_abs_tol)


def _tau_grid_db(args) -> np.ndarray:
    if args.tau_steps < 1:
        raise HetSinrError("--tau-steps must be >= 1")
    return np.linspace(args.tau_min_db, args.tau_max_db, args.tau_steps)


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(_SEED_ENV)
    return int(env) if env else 0


def cmd_assoc(args) -> int:
    config = load_config(args.config)
    settings = _settings(args)
    header = ["tier", "association_probability", "mean_users_per_bs"]
    rows = []
    for k in range(1, config.num_tiers + 1):
        a_k = analysis.association_probability(config, k, settings)
        n_k = analysis.cell_load(config, k, settings)
        rows.append([str(k), a_k, n_k])
    _write_rows(args.out, header, rows)
    return 0


def cmd_outage(args) -> int:
    config = load_config(args.config)
    settings = _settings(args)
    grid_db = _tau_grid_db(args)
    header = (["tau_db", "tau_linear"]
              + [f"outage_tier_{k}" for k in range(1, config.num_tiers + 1)]
              + ["outage_network"])
    rows = []
    for tau_db in grid_db:
        tau = db_to_linear(float(tau_db))
        try:
            m = analysis.outage_metrics(config, tau, settings)
        except HetSinrError as exc:
            raise HetSinrError(
                f"outage evaluation failed at threshold {tau_db:g} dB: {exc}"
            ) from exc
        rows.append([tau_db, tau, *m.per_tier, m.network])
    _write_rows(args.out, header, rows)
    return 0


def cmd_rate(args) -> int:
    config = load_config(args.config)
    settings = _settings(args)
    header = ["metric", "tier", "value"]
    rows = []
    rates = []
    for k in range(1, config.num_tiers + 1):
        r_k = analysis.ergodic_rate_tier(config, k, settings)
        rates.append(r_k)
        rows.append(["ergodic_rate_nats", str(k), r_k])
    net = 0.0
    for k, r_k in enumerate(rates, start=1):
        net += analysis.association_probability(config, k, settings) * r_k
    rows.append(["ergodic_rate_nats", "network", net])
    if config.user_density > 0.0:
        for k in range(1, config.num_tiers + 1):
            rows.append(["user_throughput_nats", str(k),
                         rates[k - 1] / analysis.cell_load(config, k, settings)])
        q = analysis.min_avg_user_throughput(config, settings)
        rows.append(["min_user_throughput_nats", str(q.tier), q.value])
    else:
        print("note: user density is zero; per-user throughput omitted",
              file=sys.stderr)
    _write_rows(args.out, header, rows)
    return 0


def _campaign(args, config) -> montecarlo.CampaignResult:
    settings = montecarlo.SimSettings(
        config=config,
        window_radius=args.window_radius,
        replications=args.replications,
        fading_draws=args.fading_draws,
        master_seed=_seed(args),
        measure_load=not args.no_load,
    )
    return montecarlo.run_campaign(settings, workers=args.workers)


def cmd_simulate(args) -> int:
    if args.replications < 1:
        raise HetSinrError("--replications must be >= 1")
    config = load_config(args.config)
    result = _campaign(args, config)
    if args.out is None:
        result.samples.write_csv(sys.stdout)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            result.samples.write_csv(fh)

    header = ["metric", "tier", "tau_db", "value", "stderr"]
    rows = []
    n_rep = result.association_counts.sum()
    for k, frac in enumerate(result.association_fractions, start=1):
        se = math.sqrt(frac * (1.0 - frac) / n_rep)
        rows.append(["association_fraction", str(k), None, frac, se])
    if result.load_bs_counts.sum() > 0:
        for k, load in enumerate(result.mean_load, start=1):
            rows.append(["mean_load", str(k), None, load, None])
    grid_db = _tau_grid_db(args)
    taus = db_to_linear(grid_db)
    emp, se = montecarlo.empirical_cdf(result.samples, taus)
    for tau_db, p, e in zip(grid_db, emp, se):
        rows.append(["empirical_outage", "network", tau_db, p, e])
    mean_rate, rate_se = montecarlo.empirical_rate(result.samples)
    rows.append(["empirical_rate_nats", "network", None, mean_rate, rate_se])
    _write_rows(args.summary_out, header, rows)
    return 0


def cmd_compare(args) -> int:
    if args.replications < 1:
        raise HetSinrError("--replications must be >= 1")
    config = load_config(args.config)
    sim_config = config if args.sim_config is None else load_config(args.sim_config)
    settings = _settings(args)

    sim_settings = montecarlo.SimSettings(
        config=sim_config,
        window_radius=args.window_radius,
        replications=args.replications,
        fading_draws=args.fading_draws,
        master_seed=_seed(args),
        measure_load=False,
    )
    result = montecarlo.run_campaign(sim_settings, workers=args.workers)

    grid_db = _tau_grid_db(args)
    taus = db_to_linear(grid_db)
    emp, _ = montecarlo.empirical_cdf(result.samples, taus)
    ana = np.array([analysis.outage_network(config, float(t), settings)
                    for t in taus])
    dev = np.abs(emp - ana)
    worst = int(np.argmax(dev))
    max_dev = float(dev[worst])

    mc_rate, _ = montecarlo.empirical_rate(result.samples)
    ana_rate = analysis.ergodic_rate_network(config, settings)
    rate_err = abs(mc_rate - ana_rate) / abs(ana_rate)

    expected = np.array([
        analysis.association_probability(config, k, settings)
        for k in range(1, config.num_tiers + 1)
    ]) * result.association_counts.sum()
    chi2 = float(((result.association_counts - expected) ** 2 / expected).sum())
    dof = config.num_tiers - 1
    pvalue = float(stats.chi2.sf(chi2, dof)) if dof > 0 else 1.0

    checks = [
        ("max_outage_abs_dev", max_dev, args.outage_tol, max_dev <= args.outage_tol),
        ("rate_rel_err", rate_err, args.rate_tol, rate_err <= args.rate_tol),
        ("association_chi2_pvalue", pvalue, args.assoc_pvalue_min,
         pvalue >= args.assoc_pvalue_min),
    ]
    header = ["check", "value", "tolerance", "status"]
    rows = [[name, val, tol, "PASS" if ok else "FAIL"]
            for name, val, tol, ok in checks]
    _write_rows(args.out, header, rows)
    ok_all = all(ok for _, _, _, ok in checks)
    print(f"max |analytic - empirical| outage = {max_dev:.9g} "
          f"at {grid_db[worst]:g} dB (tolerance {args.outage_tol:g})")
    print(f"rate relative error = {rate_err:.9g} (tolerance {args.rate_tol:g})")
    print(f"association chi2 = {chi2:.9g}, p-value = {pvalue:.9g} "
          f"(minimum {args.assoc_pvalue_min:g})")
    print("PASS" if ok_all else "FAIL")
    return 0 if ok_all else 1


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="network config file (YAML)")
    p.add_argument("--out", default=None, help="output CSV path (default stdout)")
    p.add_argument("--quad-rel-tol", type=float, default=1e-9,
                   help="relative quadrature tolerance")
    p.add_argument("--quad-abs-tol", type=float, default=1e-12,
                   help="absolute quadrature tolerance")


def _add_tau_grid(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tau-min-db", type=float, default=-10.0)
    p.add_argument("--tau-max-db", type=float, default=20.0)
    p.add_argument("--tau-steps", type=int, default=31)


def _add_sim(p: argparse.ArgumentParser) -> None:
    p.add_argument("--replications", type=int, default=10_000)
    p.add_argument("--fading-draws", type=int, default=1)
    p.add_argument("--seed", type=int, default=None,
                   help=f"master seed (default ${_SEED_ENV} or 0)")
    p.add_argument("--workers", type=int, default=1,
                   help="worker processes; results are identical for any count")
    p.add_argument("--window-radius", type=float, default=None,
                   help="simulation disc radius in meters (default: auto)")
    p.add_argument("--no-load", action="store_true",
                   help="skip the user point process for load measurement")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hetsinr",
        description="Downlink SINR metrics for multi-tier networks with "
                    "biased association, with a Monte Carlo validator.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("assoc", help="association probabilities and cell loads")
    _add_common(p)
    p.set_defaults(func=cmd_assoc)

    p = sub.add_parser("outage", help="per-tier and network outage on a dB grid")
    _add_common(p)
    _add_tau_grid(p)
    p.set_defaults(func=cmd_outage)

    p = sub.add_parser("rate", help="ergodic rates and per-user throughput")
    _add_common(p)
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("simulate", help="Monte Carlo campaign; emits sample CSV")
    _add_common(p)
    _add_tau_grid(p)
    _add_sim(p)
    p.add_argument("--summary-out", default=None,
                   help="summary CSV path (default stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare",
                       help="validate analytics against the simulator")
    _add_common(p)
    _add_tau_grid(p)
    _add_sim(p)
    p.set_defaults(replications=100_000)
    p.add_argument("--sim-config", default=None,
                   help="simulate this config instead (negative-control hook)")
    p.add_argument("--outage-tol", type=float, default=0.015,
                   help="max absolute outage deviation")
    p.add_argument("--rate-tol", type=float, default=0.02,
                   help="max relative rate error")
    p.add_argument("--assoc-pvalue-min", type=float, default=1e-3,
                   help="minimum association chi-square p-value")
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except HetSinrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AssertionError as exc:
        print(f"internal consistency failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
