"""Monte-Carlo comparison of the three planners on a scenario config.

    python3 scripts/compare_planners.py --config src/ducb_seek/configs/desk.json --out runs/desk

Writes per-trial traces, per-planner aggregates and regret.svg, then prints a
summary table. This is a thin wrapper over ``ducb-seek run`` that also reports
first/last-decile regret so the decay is visible without opening the plot.
"""
import argparse
import time

from ducb_seek.cli import main as cli_main
from ducb_seek.config import load_config
from ducb_seek.evaluation import fit_growth_exponent, read_aggregate_csv


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--trials", type=int)
    p.add_argument("--jobs", type=int, default=1)
    args = p.parse_args()

    argv = ["run", "--config", args.config, "--out", args.out, "--jobs", str(args.jobs)]
    if args.trials:
        argv += ["--trials", str(args.trials)]
    t0 = time.perf_counter()
    code = cli_main(argv)
    if code:
        raise SystemExit(code)
    print(f"\nfinished in {time.perf_counter() - t0:.1f}s\n")
    print(f"{'planner':<12} {'cum regret':>11} {'first 10%':>10} {'last 10%':>10} {'exponent':>9}")
    for planner in load_config(args.config).planners:
        agg = read_aggregate_csv(f"{args.out}/aggregate_{planner}.csv")
        r, cum = agg["mean_regret"], agg["mean_cum_regret"]
        tenth = max(len(r) // 10, 1)
        exp = f"{fit_growth_exponent(cum):.3f}" if len(cum) >= 100 else "n/a"
        print(f"{planner:<12} {cum[-1]:>11.4g} {r[:tenth].mean():>10.4g} "
              f"{r[-tenth:].mean():>10.4g} {exp:>9}")


if __name__ == "__main__":
    main()
