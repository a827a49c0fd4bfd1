"""Command line entry point: ``mlbermudan <subcommand> [options]``."""

from __future__ import annotations

import argparse
import sys

from . import harness
from .config import MODES, ExperimentConfig, load_config
from .control import CV_MODES
from .estimators import METHODS
from .multilevel import level_diagnostics, run_multilevel
from .oracle import oracle_suite
from .pricing import run_single_level
from .rng import Stream
from .schedule import LevelSchedule, complexity_case, predicted_complexity


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="plain-text key = value config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--cv", choices=CV_MODES)
    p.add_argument("--k0", type=int)
    p.add_argument("--theta", type=float)
    p.add_argument("--workers", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mlbermudan", description="Single and multilevel Bermudan pricing experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("price-single", help="one single-level price")
    _common(p)
    p.add_argument("--epsilon", type=float, help="take (k, n) from the method schedule")
    p.add_argument("--k", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--repetitions", type=int, help="independent runs, one CSV row each (default 1)")

    p = sub.add_parser("price-ml", help="one multilevel price with per-level statistics")
    _common(p)
    p.add_argument("--epsilon", type=float, required=True)

    p = sub.add_parser("schedule", help="print the (L, k_l, n_l) table for an accuracy")
    _common(p)
    p.add_argument("--epsilon", type=float, required=True)

    for name, text in (("mse-study", "sqrt(MSE)/eps over an eps grid"), ("complexity-study", "cost units against 1/eps")):
        p = sub.add_parser(name, help=text)
        _common(p)
        p.add_argument("--epsilon", type=float, nargs="+", help="eps grid (default: the method's grid)")
        p.add_argument("--repetitions", type=int)
        p.add_argument("--paper-scale", action="store_true", help="100 repetitions and the long eps grid")
        if name == "mse-study":
            p.add_argument("--reference", help="reference JSON (default: config or data/reference.json)")
            p.add_argument("--plot-prefix", help="also write plot-ready two-column files")

    p = sub.add_parser("oracle-check", help="dynamic-programming oracle invariants on the shipped chains")
    p.add_argument("--out")
    return ap


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else ExperimentConfig()
    changes = {}
    for key in ("seed", "method", "mode", "cv", "k0", "theta", "workers", "repetitions"):
        v = getattr(args, key, None)
        if v is not None:
            changes[key] = v
    if getattr(args, "paper_scale", False) and "repetitions" not in changes:
        changes["repetitions"] = harness.PAPER_REPETITIONS
    return cfg.replace(**changes) if changes else cfg


def _emit(text: str, out) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_price_single(args) -> int:
    cfg = _config(args)
    if args.epsilon is not None:
        k, n = cfg.schedule(args.epsilon, "single")
    elif args.k and args.n:
        k, n = args.k, args.n
    else:
        raise ValueError("price-single needs --epsilon or both --k and --n")
    reps = args.repetitions or 1
    if reps < 1:
        raise ValueError("repetitions must be >= 1")
    model, trainer, (_, outer) = cfg.model(), cfg.trainer(), cfg.controls()
    rows = []
    for rep in range(reps):
        est = run_single_level(model, trainer, k, n, Stream(cfg.seed, (rep,)), outer, cfg.profile())
        rows.append({"repetition": rep, "k": k, "n": n, "value": est.value, "std_error": est.std_error,
                     "cost_units": est.cost.total, "wall_seconds": est.cost.wall_seconds})
    _emit(harness.format_csv(rows, list(rows[0]), {"method": cfg.method, "cv": cfg.cv, "seed": cfg.seed}), args.out)
    return 0


def cmd_price_ml(args) -> int:
    cfg = _config(args)
    sched = cfg.schedule(args.epsilon, "ml")
    _, outer = cfg.controls()
    est = run_multilevel(cfg.model(), cfg.trainer(), sched.k, sched.n, Stream(cfg.seed), outer, cfg.profile())
    rows = level_diagnostics(est)
    text = harness.format_csv(rows, list(rows[0]), {"method": cfg.method, "cv": cfg.cv, "epsilon": args.epsilon})
    summary = {"L": sched.L, "value": est.value, "std_error": est.std_error, "cost_units": est.cost.total,
               "wall_seconds": est.cost.wall_seconds}
    text += "\n" + harness.format_csv([summary], list(summary))
    _emit(text, args.out)
    return 0


def cmd_schedule(args) -> int:
    cfg = _config(args)
    mode = args.mode or cfg.mode
    profile = cfg.profile()
    case = complexity_case(profile)
    sched = cfg.schedule(args.epsilon, mode)
    if isinstance(sched, LevelSchedule):
        rows = [{"level": l, "k": k, "n": n, "n_real": nr, "cost_units": k ** (1 + profile.kappa1) + n * k**profile.kappa2}
                for l, k, n, nr in sched.rows()]
        meta = {"epsilon": args.epsilon, "L": sched.L, "theta": sched.theta,
                "predicted_cost": predicted_complexity(sched, profile), "case": case.label.replace(" ", "")}
    else:
        k, n = sched
        rows = [{"level": 0, "k": k, "n": n, "n_real": float(n),
                 "cost_units": predicted_complexity(sched, profile)}]
        meta = {"epsilon": args.epsilon, "L": 0, "predicted_cost": rows[0]["cost_units"],
                "exponent": case.single_exponent}
    meta = {"method": cfg.method, "mode": mode, **meta}
    _emit(harness.format_csv(rows, list(rows[0]), meta), args.out)
    return 0


def cmd_mse_study(args) -> int:
    cfg = _config(args)
    path = args.reference or cfg.reference or "data/reference.json"
    ref = harness.load_reference(path)
    grid = tuple(args.epsilon) if args.epsilon else cfg.epsilons or harness.default_grid(cfg, None, args.paper_scale)
    rows = harness.run_mse_study(cfg, ref, grid, progress=lambda r: print(
        f"eps={r['epsilon']:.4g} sqrt(MSE)/eps={r['sqrt_mse_over_epsilon']:.3f}", file=sys.stderr))
    meta = {"method": cfg.method, "mode": cfg.mode, "cv": cfg.cv, "R": cfg.repetitions, "seed": cfg.seed,
            "reference": ref.value, "reference_se": ref.std_error}
    _emit(harness.format_csv(rows, harness.MSE_COLUMNS, meta), args.out)
    if args.plot_prefix:
        harness.plot_files(args.plot_prefix, mse_rows=rows)
    return 0


def cmd_complexity_study(args) -> int:
    cfg = _config(args)
    grid = tuple(args.epsilon) if args.epsilon else cfg.epsilons or harness.default_grid(cfg, None, args.paper_scale)
    rows, slope = harness.run_complexity_study(cfg, grid)
    gain = complexity_case(cfg.profile()).gain if cfg.mode == "ml" else 0.0
    meta = {"method": cfg.method, "mode": cfg.mode, "slope": slope, "gain_exponent": gain}
    _emit(harness.format_csv(rows, harness.COMPLEXITY_COLUMNS, meta), args.out)
    print(f"fitted slope {slope:.3f}", file=sys.stderr)
    return 0


def cmd_oracle_check(args) -> int:
    results = oracle_suite()
    lines = [f"{'PASS' if ok else 'FAIL'} {name}" + (f" ({detail})" if detail and not ok else "")
             for name, ok, detail in results]
    failed = sum(not ok for _, ok, _ in results)
    lines.append(f"{len(results) - failed}/{len(results)} checks passed")
    _emit("\n".join(lines) + "\n", args.out)
    return 1 if failed else 0


COMMANDS = {
    "price-single": cmd_price_single,
    "price-ml": cmd_price_ml,
    "schedule": cmd_schedule,
    "mse-study": cmd_mse_study,
    "complexity-study": cmd_complexity_study,
    "oracle-check": cmd_oracle_check,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (FileNotFoundError, ValueError) as exc:
        print(f"mlbermudan {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
