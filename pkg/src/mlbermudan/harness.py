"""Repetition studies: sqrt(MSE)/eps tables, cost-vs-eps slopes, reference values, CSV output."""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .multilevel import run_multilevel
from .pricing import run_single_level
from .rng import AUX, REFERENCE, TEST, Stream
from .schedule import (
    LevelSchedule,
    epsilon_for_levels,
    fit_cost_slope,
    predicted_complexity,
    theoretical_exponent,
)

SCHEMA = "mlbermudan-csv/1"


_SINGLE_GRIDS = {
    "mesh": ((0.96, 0.48, 0.24, 0.12), (0.96, 0.48, 0.24, 0.12, 0.06, 0.03)),
    "local": ((0.9, 0.75, 0.6, 0.5), (0.9, 0.75, 0.6, 0.5, 0.4, 0.3)),
    "theorem": ((0.5, 0.25, 0.125, 0.0625), (0.5, 0.25, 0.125, 0.0625, 0.03125)),
}
_ML_LEVELS = {"mesh": (range(4, 8), range(1, 8)), "local": (range(1, 5), range(1, 8)), "theorem": (range(1, 5), range(1, 8))}
PAPER_REPETITIONS = 100


def default_grid(cfg: ExperimentConfig, mode: str | None = None, paper_scale: bool = False) -> tuple:
    """Desk-scale eps grid for the method, or the longer grid behind ``paper_scale``.

    Multilevel grids are chosen so that L(eps) runs through consecutive integers.
    """
    mode = mode or cfg.mode
    if mode == "single":
        return _SINGLE_GRIDS[cfg.preset][int(paper_scale)]
    levels = _ML_LEVELS[cfg.preset][int(paper_scale)]
    return tuple(epsilon_for_levels(cfg.preset, levels, cfg.k0, cfg.theta, cfg.profile()))


@dataclass
class Reference:
    value: float
    std_error: float
    k: int
    n: int
    repetitions: int
    label: str = ""

    @property
    def ci(self) -> tuple[float, float]:
        return self.value - 1.96 * self.std_error, self.value + 1.96 * self.std_error


def save_reference(ref: Reference, path) -> None:
    Path(path).write_text(json.dumps(asdict(ref), indent=2) + "\n")


def load_reference(path) -> Reference:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"reference file not found: {path}")
    return Reference(**json.loads(path.read_text()))


@dataclass
class Record:
    """One repetition of one experiment (an ExperimentRecord)."""

    epsilon: float
    repetition: int
    value: float
    std_error: float
    cost_units: float
    wall_seconds: float
    L: int = 0
    level_stats: list | None = None


def run_once(cfg: ExperimentConfig, epsilon: float, stream: Stream, mode: str | None = None) -> Record:
    """Schedule for ``epsilon``, then one full training + testing run."""
    mode = mode or cfg.mode
    model, trainer, (_, outer) = cfg.model(), cfg.trainer(), cfg.controls()
    sched = cfg.schedule(epsilon, mode)
    t0 = time.perf_counter()
    if isinstance(sched, LevelSchedule):
        est = run_multilevel(model, trainer, sched.k, sched.n, stream, outer, cfg.profile())
        wall = time.perf_counter() - t0
        return Record(epsilon, -1, est.value, est.std_error, est.cost.total, wall, sched.L, est.levels)
    k, n = sched
    est = run_single_level(model, trainer, k, n, stream, outer, cfg.profile())
    return Record(epsilon, -1, est.value, est.std_error, est.cost.total, time.perf_counter() - t0)


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(fn, items))  # keeps repetition order


def repeat(cfg: ExperimentConfig, epsilon: float, index: int, repetitions: int, mode=None) -> list[Record]:
    """``repetitions`` independent runs at one grid point, each on its own stream."""
    base = Stream(cfg.seed, (TEST, index))

    def one(rep):
        rec = run_once(cfg, epsilon, base.child(rep), mode)
        rec.repetition = rep
        return rec

    return _map(one, range(repetitions), cfg.workers)


MSE_COLUMNS = (
    "epsilon", "L", "sqrt_mse_over_epsilon", "mean", "bias_est", "var_est", "cost_units", "wall_seconds",
)


def summarise(records: list[Record], reference: float) -> dict:
    v = np.array([r.value for r in records])
    eps = records[0].epsilon
    mse = float(np.mean((v - reference) ** 2))
    return {
        "epsilon": eps,
        "L": records[0].L,
        "sqrt_mse_over_epsilon": math.sqrt(mse) / eps,
        "mean": float(v.mean()),
        "bias_est": float(v.mean()) - reference,
        "var_est": float(v.var(ddof=1)) if len(v) > 1 else 0.0,
        "cost_units": float(np.mean([r.cost_units for r in records])),
        "wall_seconds": float(sum(r.wall_seconds for r in records)),
    }


def run_mse_study(cfg: ExperimentConfig, reference, epsilons=None, mode=None, progress=None) -> list[dict]:
    """Per eps: R repetitions, MSE against ``reference`` (a number or a Reference)."""
    if reference is None:
        raise ValueError("an MSE study needs a reference value")
    ref = reference.value if isinstance(reference, Reference) else float(reference)
    rows = []
    for i, eps in enumerate(epsilons or cfg.epsilons):
        row = summarise(repeat(cfg, eps, i, cfg.repetitions, mode), ref)
        rows.append(row)
        if progress:
            progress(row)
    return rows


COMPLEXITY_COLUMNS = ("epsilon", "L", "measured_cost", "predicted_cost", "theoretical_exponent", "wall_seconds")


def run_complexity_study(cfg: ExperimentConfig, epsilons=None, mode=None) -> tuple[list[dict], float]:
    """One run per eps; measured cost units from the run's tally, and the fitted slope against 1/eps."""
    mode = mode or cfg.mode
    eps_grid = list(epsilons or cfg.epsilons)
    if len(eps_grid) < 3:
        raise ValueError("a complexity study needs at least 3 epsilon values")
    expo = theoretical_exponent(cfg.profile(), mode)
    rows = []
    for i, eps in enumerate(eps_grid):
        rec = run_once(cfg, eps, Stream(cfg.seed, (AUX, i)), mode)
        rows.append({
            "epsilon": eps,
            "L": rec.L,
            "measured_cost": rec.cost_units,
            "predicted_cost": predicted_complexity(cfg.schedule(eps, mode), cfg.profile()),
            "theoretical_exponent": expo,
            "wall_seconds": rec.wall_seconds,
        })
    slope = fit_cost_slope([r["epsilon"] for r in rows], [r["measured_cost"] for r in rows])
    return rows, slope


def compute_reference(cfg: ExperimentConfig, k: int, n: int, repetitions: int, label: str = "") -> Reference:
    """High-budget single-level estimate: mean over independent repetitions and its standard error."""
    model, trainer, (_, outer) = cfg.model(), cfg.trainer(), cfg.controls()
    base = Stream(cfg.seed, (REFERENCE,))
    vals = _map(
        lambda rep: run_single_level(model, trainer, k, n, base.child(rep), outer, cfg.profile()).value,
        range(repetitions), cfg.workers,
    )
    v = np.array(vals)
    return Reference(float(v.mean()), float(v.std(ddof=1) / math.sqrt(len(v))), k, n, repetitions, label)


# output -----------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def format_csv(rows: list[dict], columns, meta: dict | None = None) -> str:
    head = f"# {SCHEMA}"
    if meta:
        head += " " + " ".join(f"{k}={_fmt(v)}" for k, v in meta.items())
    lines = [head, ",".join(columns)]
    lines += [",".join(_fmt(r[c]) for c in columns) for r in rows]
    return "\n".join(lines) + "\n"


def write_csv(path, rows, columns, meta=None) -> None:
    Path(path).write_text(format_csv(rows, columns, meta))


def read_csv(path) -> tuple[list[dict], str]:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith(f"# {SCHEMA}"):
        raise ValueError(f"{path}: missing '# {SCHEMA}' header")
    cols = lines[1].split(",")
    rows = []
    for line in lines[2:]:
        vals = line.split(",")
        rows.append({c: _parse(v) for c, v in zip(cols, vals)})
    return rows, lines[0]


def _parse(text: str):
    try:
        return int(text)
    except ValueError:
        try:
            return float(text)
        except ValueError:
            return text


def write_xy(path, x, y, names=("x", "y")) -> None:
    """Plot-ready two-column file, e.g. log(1/eps) against log(cost)."""
    rows = [dict(zip(names, (float(a), float(b)))) for a, b in zip(x, y)]
    write_csv(path, rows, names)


def plot_files(prefix, mse_rows=None, complexity_rows=None) -> list[Path]:
    out = []
    if mse_rows:
        p = Path(f"{prefix}_rmse.csv")
        write_xy(p, [r["epsilon"] for r in mse_rows], [r["sqrt_mse_over_epsilon"] for r in mse_rows],
                 ("epsilon", "sqrt_mse_over_epsilon"))
        out.append(p)
    if complexity_rows:
        p = Path(f"{prefix}_cost.csv")
        write_xy(p, [math.log(1 / r["epsilon"]) for r in complexity_rows],
                 [math.log(r["measured_cost"]) for r in complexity_rows], ("log_inv_epsilon", "log_cost"))
        out.append(p)
    return out
