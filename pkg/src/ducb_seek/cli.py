"""ducb-seek command line: run experiments, check assumptions, plot traces.

Exit codes: 0 success, 2 configuration error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import os
import re
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

from .config import load_config
from .environment import Grid, build_convection_diffusion, validate_dynamics_bounds
from .config import dynamics_params
from .errors import ConfigError
from .evaluation import (build_scenario, fit_growth_exponent, loss_bound, monte_carlo,
                         read_trace_csv, write_aggregate_csv, write_trace_csv)
from .planning import PLANNERS
from .svg import regret_svg

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3
TRACE_RE = re.compile(r"trace_(?P<planner>.+)_(?P<trial>\d+)\.csv$")

log = logging.getLogger("ducb_seek")


def _setup_logging():
    level = os.environ.get("DUCB_SEEK_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    changes = {}
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.seed is not None:
        changes["base_seed"] = args.seed
    if args.planner is not None:
        changes["planner"] = [args.planner]
    if changes:
        cfg = cfg.replace(**changes)
    scenario = build_scenario(cfg)

    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        print(f"error: cannot write to {out}: {exc.strerror}", file=sys.stderr)
        return EXIT_IO

    per_step, cumulative, aborted = {}, {}, []
    gamma = loss_bound(scenario)
    for planner in cfg.planners:
        result = monte_carlo(scenario, cfg.trials, cfg.base_seed, planner=planner,
                             jobs=args.jobs)
        try:
            for t, trace in enumerate(result.traces):
                write_trace_csv(out / f"trace_{planner}_{t:03d}.csv", trace, t)
            write_aggregate_csv(out / f"aggregate_{planner}.csv", result)
        except OSError as exc:
            print(f"error: writing results failed: {exc}", file=sys.stderr)
            return EXIT_IO
        aborted += [(planner, tr.seed, tr.failure) for tr in result.aborted]
        per_step[planner] = result.mean_regret
        cumulative[planner] = result.mean_cum
        line = f"{planner}: trials={len(result.completed)}/{len(result.traces)}"
        if result.completed and scenario.horizon:
            line += (f" final_cum_regret={result.mean_cum[-1]:.4g}"
                     f" coverage={result.coverage_frequency:.3f}"
                     f" max_regret={max(float(tr.regret.max()) for tr in result.completed):.4g}"
                     f" gamma_bar={gamma.gamma_bar:.4g}")
            if scenario.horizon >= 100:
                line += f" growth_exponent={fit_growth_exponent(result.mean_cum):.3f}"
        print(line)
    try:
        (out / "regret.svg").write_text(regret_svg(per_step, cumulative))
    except OSError as exc:
        print(f"error: writing plot failed: {exc}", file=sys.stderr)
        return EXIT_IO
    if aborted:
        print(f"warning: {len(aborted)} trial(s) aborted:", file=sys.stderr)
        for planner, seed, why in aborted:
            print(f"  {planner} seed={seed}: {why}", file=sys.stderr)
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    grid = Grid(cfg.grid.size)
    model = build_convection_diffusion(dynamics_params(cfg.dynamics), grid)
    horizon = cfg.dynamics.bounds_horizon or max(cfg.horizon, 1)
    bounds = validate_dynamics_bounds(model, horizon)
    print(f"grid: {grid.side}x{grid.side} ({grid.n_cells} cells), agents: {cfg.n_agents}")
    print(f"CFL number: {dynamics_params(cfg.dynamics).cfl_number():.4g} (< 1): PASS")
    print(f"dynamics bounds over horizon {horizon}: alpha_min={bounds.alpha_min:.6g} "
          f"alpha_max={bounds.alpha_max:.6g}: {'PASS' if bounds.ok else 'FAIL'}")
    for issue in bounds.violations:
        print(f"  - {issue}")
    variances = [a.noise_variance for a in cfg.agents]
    v_ok = all(0 < v < float("inf") for v in variances)
    print(f"noise bounds: variance in [{min(variances):.6g}, {max(variances):.6g}]: "
          f"{'PASS' if v_ok else 'FAIL'}")
    if not v_ok:
        print("  - every noise variance must be strictly positive and finite")
    print(f"communication graph: connected ({len(cfg.edge_list())} edges): PASS")
    return EXIT_OK


def cmd_plot(args) -> int:
    src = Path(args.traces)
    if not src.is_dir():
        print(f"error: {src} is not a directory", file=sys.stderr)
        return EXIT_IO
    grouped = defaultdict(list)
    try:
        for path in sorted(src.iterdir()):
            m = TRACE_RE.match(path.name)
            if m:
                grouped[m["planner"]].append(read_trace_csv(path))
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: reading traces failed: {exc}", file=sys.stderr)
        return EXIT_IO
    if not grouped:
        print(f"error: no trace_<planner>_<trial>.csv files in {src}", file=sys.stderr)
        return EXIT_IO
    per_step, cumulative = {}, {}
    for planner, runs in grouped.items():
        K = min(len(r) for r in runs)
        R = np.array([[row["regret"] for row in r[:K]] for r in runs])
        per_step[planner] = R.mean(axis=0)
        cumulative[planner] = np.cumsum(R, axis=1).mean(axis=0)
    try:
        Path(args.out).write_text(regret_svg(per_step, cumulative))
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc.strerror}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ducb-seek", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run Monte-Carlo trials and write traces")
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True)
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", type=int, help="base seed; trial t uses seed+t")
    run.add_argument("--planner", choices=PLANNERS)
    run.add_argument("--jobs", type=int, default=1)
    run.set_defaults(func=cmd_run)

    val = sub.add_parser("validate", help="report dynamics/noise assumption checks")
    val.add_argument("--config", required=True)
    val.set_defaults(func=cmd_validate)

    plot = sub.add_parser("plot", help="plot mean regret from a directory of trace CSVs")
    plot.add_argument("--traces", required=True)
    plot.add_argument("--out", required=True)
    plot.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
