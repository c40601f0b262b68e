"""Coverage frequency and cumulative regret as the confidence-width scale varies.

    python3 scripts/beta_scale_sweep.py --config src/ducb_seek/configs/coverage.json

Larger scales buy coverage with extra exploration; the sweep makes the trade
visible for a given scenario.
"""
import argparse

import numpy as np

from ducb_seek.config import load_config
from ducb_seek.ducb import beta
from ducb_seek.evaluation import build_scenario, monte_carlo


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", required=True)
    p.add_argument("--scales", type=float, nargs="+",
                   default=[1e-4, 1e-3, 1e-2, 1e-1, 1.0])
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--horizon", type=int)
    args = p.parse_args()

    base = load_config(args.config)
    if args.horizon is not None:
        base = base.replace(horizon=args.horizon)
    print(f"{'scale':>8} {'beta_1':>10} {'coverage':>9} {'cum regret':>11}")
    for s in args.scales:
        cfg = base.replace(ducb={"beta_scale": s})
        scenario = build_scenario(cfg)
        res = monte_carlo(scenario, args.trials, cfg.base_seed, planner="ducb")
        cum = res.mean_cum[-1] if res.mean_cum.size else np.nan
        print(f"{s:>8.0e} {beta(1, scenario.schedule):>10.4g} {res.coverage_frequency:>9.3f} "
              f"{cum:>11.4g}")


if __name__ == "__main__":
    main()
