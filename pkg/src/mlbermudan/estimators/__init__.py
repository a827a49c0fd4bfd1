from .base import (
    LOCAL_PROFILE,
    MESH_PROFILE,
    EstimatorProfile,
    FunctionEstimator,
    TrainedEstimator,
    continuation_target,
    global_profile,
)
from .local import LocalEstimator, default_bandwidth, train_local
from .mesh import MeshEstimator, train_mesh
from .regression import FunctionBasis, GlobalEstimator, PolynomialBasis, train_global

METHODS = ("mesh", "local", "global")


def make_trainer(method: str, model, payoff, *, bandwidth_scale=100.0, degree=2, control=None):
    """Return ``train(paths) -> TrainedEstimator`` for the named method."""
    if method == "mesh":
        return lambda paths: train_mesh(paths, payoff, model, control=control)
    if method == "local":
        return lambda paths: train_local(paths, payoff, scale=bandwidth_scale)
    if method == "global":
        basis = PolynomialBasis(model.d, degree, payoff=payoff, scale=float(model.x0.mean()))
        return lambda paths: train_global(paths, payoff, basis)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


__all__ = [
    "EstimatorProfile",
    "FunctionBasis",
    "FunctionEstimator",
    "GlobalEstimator",
    "LOCAL_PROFILE",
    "LocalEstimator",
    "MESH_PROFILE",
    "METHODS",
    "MeshEstimator",
    "PolynomialBasis",
    "TrainedEstimator",
    "continuation_target",
    "default_bandwidth",
    "global_profile",
    "make_trainer",
    "train_global",
    "train_local",
    "train_mesh",
]
