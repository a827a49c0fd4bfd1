"""Experiment configuration and its plain-text ``key = value`` file format.

Lines starting with ``#`` are comments.  Sequences (``x0``, ``epsilons``) are
comma separated; a single ``x0`` value is broadcast to all assets.  Defaults are
the five-asset max-call benchmark.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .control import CV_MODES, make_controls
from .estimators import METHODS, LOCAL_PROFILE, MESH_PROFILE, global_profile, make_trainer
from .model import GBMModel, ModelParams, TimeGrid
from .payoff import make_payoff
from .schedule import PRESETS, preset_schedule

MODES = ("single", "ml")


@dataclass
class ExperimentConfig:
    # market and contract
    d: int = 5
    r: float = 0.05
    delta: float = 0.1
    sigma: float = 0.2
    x0: tuple = (100.0,)
    T: float = 3.0
    J: int = 3
    kappa: float = 100.0
    payoff: str = "max-call"
    # method and protocol
    method: str = "mesh"
    mode: str = "single"
    epsilons: tuple = ()
    repetitions: int = 20
    cv: str = "outer"
    seed: int = 2024
    workers: int = 1
    # schedule and estimator constants; None means the method preset
    k0: int | None = None
    theta: float | None = None
    bandwidth_scale: float = 100.0
    degree: int = 2
    rho: float = 0.5
    reference: str | None = None
    out: str | None = None

    def __post_init__(self):
        self.x0 = tuple(float(v) for v in (self.x0 if hasattr(self.x0, "__len__") else (self.x0,)))
        self.epsilons = tuple(float(e) for e in self.epsilons)
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.cv not in CV_MODES:
            raise ValueError(f"cv must be one of {CV_MODES}, got {self.cv!r}")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if any(e <= 0 for e in self.epsilons):
            raise ValueError("epsilons must be positive")
        if any(b >= a for a, b in zip(self.epsilons, self.epsilons[1:])):
            raise ValueError("epsilon grid must be decreasing")
        self.params()  # validates the market block

    def params(self) -> ModelParams:
        x0 = self.x0 * self.d if len(self.x0) == 1 else self.x0
        return ModelParams(self.d, self.r, self.delta, self.sigma, x0)

    def grid(self) -> TimeGrid:
        return TimeGrid.uniform(self.T, self.J)

    def model(self) -> GBMModel:
        return GBMModel(self.params(), self.grid())

    def payoff_fn(self):
        return make_payoff(self.payoff, self.kappa, self.r, self.grid())

    def controls(self):
        """(inner, outer) control variates for the ``cv`` mode."""
        return make_controls(self.cv, self.params(), self.grid(), self.kappa)

    def trainer(self):
        inner, _ = self.controls()
        return make_trainer(
            self.method, self.model(), self.payoff_fn(),
            bandwidth_scale=self.bandwidth_scale, degree=self.degree, control=inner,
        )

    def profile(self):
        return {"mesh": MESH_PROFILE, "local": LOCAL_PROFILE}.get(self.method) or global_profile(self.rho)

    def schedule(self, epsilon: float, mode: str | None = None):
        return preset_schedule(self.preset, mode or self.mode, epsilon, self.k0, self.theta, self.profile())

    @property
    def preset(self) -> str:
        return self.method if self.method in PRESETS else "theorem"

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


_SEQUENCES = {"x0", "epsilons"}


def _convert(name: str, text: str, kind):
    kind = str(kind)
    if name in _SEQUENCES:
        return tuple(float(v) for v in text.replace(" ", "").split(",") if v)
    if text.lower() in ("none", ""):
        return None
    if kind.startswith("int"):
        return int(text)
    if kind.startswith("float"):
        return float(text)
    return text


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    kinds = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in kinds:
            raise ValueError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _convert(key, value, kinds[key])
        except ValueError as exc:
            raise ValueError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    return parse_config(path.read_text(), str(path))


def dump_config(cfg: ExperimentConfig) -> str:
    lines = []
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ", ".join(repr(x) for x in v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"

