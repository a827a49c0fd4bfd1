"""Cost tally in the units of the cost assumption: k^(1+kappa1) per training, k^kappa2 per test path."""

from __future__ import annotations

from dataclasses import dataclass, field

from .estimators.base import EstimatorProfile


@dataclass
class CostTally:
    profile: EstimatorProfile
    train_units: float = 0.0
    eval_units: float = 0.0
    train_ops: int = 0
    eval_ops: int = 0
    wall_seconds: float = 0.0
    calls: list = field(default_factory=list)

    def add_training(self, est) -> None:
        self.train_units += est.k ** (1 + self.profile.kappa1)
        self.train_ops += est.train_ops
        self.calls.append(("train", est.k, 1))

    def add_evaluation(self, est, n: int, ops: int) -> None:
        self.eval_units += n * est.k**self.profile.kappa2
        self.eval_ops += ops
        self.calls.append(("eval", est.k, n))

    @property
    def total(self) -> float:
        return self.train_units + self.eval_units

    def merge(self, other: "CostTally") -> "CostTally":
        self.train_units += other.train_units
        self.eval_units += other.eval_units
        self.train_ops += other.train_ops
        self.eval_ops += other.eval_ops
        self.wall_seconds += other.wall_seconds
        self.calls.extend(other.calls)
        return self

    def recomputed_units(self) -> float:
        """Units rebuilt from the per-call log; equals ``total`` by construction."""
        p = self.profile
        return sum(
            k ** (1 + p.kappa1) if kind == "train" else n * k**p.kappa2 for kind, k, n in self.calls
        )
