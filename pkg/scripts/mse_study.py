"""sqrt(MSE)/eps for single-level and multilevel mesh pricing against the stored reference."""

import argparse

from mlbermudan import harness
from mlbermudan.config import ExperimentConfig, load_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config")
    ap.add_argument("--reference", default="data/reference.json")
    ap.add_argument("--repetitions", type=int, default=20)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out-prefix", default="data/mse")
    ap.add_argument("--paper-scale", action="store_true")
    args = ap.parse_args()
    base = load_config(args.config) if args.config else ExperimentConfig(cv="inner")
    base = base.replace(repetitions=args.repetitions, seed=args.seed, workers=args.workers)
    ref = harness.load_reference(args.reference)
    for mode in ("single", "ml"):
        cfg = base.replace(mode=mode)
        grid = harness.default_grid(cfg, paper_scale=args.paper_scale)
        rows = harness.run_mse_study(
            cfg, ref, grid,
            progress=lambda r: print(f"{mode} eps={r['epsilon']:.4g} sqrt(MSE)/eps={r['sqrt_mse_over_epsilon']:.3f}"),
        )
        path = f"{args.out_prefix}_{mode}.csv"
        harness.write_csv(path, rows, harness.MSE_COLUMNS, {"mode": mode, "cv": cfg.cv, "reference": ref.value})
        harness.plot_files(f"{args.out_prefix}_{mode}", mse_rows=rows)
        print(f"-> {path}")


if __name__ == "__main__":
    main()
