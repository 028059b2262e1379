"""Kernel inverse optimization: learn a quadratic decision objective from
signal-decision data and imitate it on new signals."""

from ._core import (
    InfeasibleError,
    Model,
    SolverFailureError,
    TrainResult,
    generate,
    gram,
    kernel_eval,
    solve_qp,
    suboptimality_loss,
    train,
)

__all__ = [
    "InfeasibleError",
    "Model",
    "SolverFailureError",
    "TrainResult",
    "generate",
    "gram",
    "kernel_eval",
    "solve_qp",
    "suboptimality_loss",
    "train",
]
