"""Measured cost units against 1/eps for single-level and multilevel mesh pricing."""

import argparse

from mlbermudan import harness
from mlbermudan.config import ExperimentConfig, load_config

SINGLE_GRID = (0.48, 0.24, 0.12, 0.06)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config")
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--out-prefix", default="data/complexity")
    args = ap.parse_args()
    base = load_config(args.config) if args.config else ExperimentConfig(cv="off")
    base = base.replace(seed=args.seed)
    grids = {"single": SINGLE_GRID, "ml": harness.default_grid(base.replace(mode="ml"), paper_scale=True)}
    for mode, grid in grids.items():
        cfg = base.replace(mode=mode)
        rows, slope = harness.run_complexity_study(cfg, grid)
        path = f"{args.out_prefix}_{mode}.csv"
        harness.write_csv(path, rows, harness.COMPLEXITY_COLUMNS, {"mode": mode, "slope": slope})
        harness.plot_files(f"{args.out_prefix}_{mode}", complexity_rows=rows)
        print(f"{mode}: fitted slope {slope:.3f}, theoretical {rows[0]['theoretical_exponent']} -> {path}")


if __name__ == "__main__":
    main()
