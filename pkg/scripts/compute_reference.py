"""High-budget reference price for the GBM max-call benchmark, stored as JSON for the MSE studies."""

import argparse
import time

from mlbermudan.config import ExperimentConfig, load_config
from mlbermudan.harness import compute_reference, save_reference


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config")
    ap.add_argument("--k", type=int, default=2000)
    ap.add_argument("--n", type=int, default=20000)
    ap.add_argument("--repetitions", type=int, default=40)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out", default="data/reference.json")
    args = ap.parse_args()
    cfg = load_config(args.config) if args.config else ExperimentConfig(cv="inner")
    cfg = cfg.replace(seed=args.seed)
    t0 = time.perf_counter()
    ref = compute_reference(cfg, args.k, args.n, args.repetitions, label=f"mesh cv={cfg.cv} seed={cfg.seed}")
    save_reference(ref, args.out)
    lo, hi = ref.ci
    print(f"reference {ref.value:.6f} +- {ref.std_error:.6f} (95% CI {lo:.6f}..{hi:.6f}) "
          f"in {time.perf_counter() - t0:.0f}s -> {args.out}")


if __name__ == "__main__":
    main()
