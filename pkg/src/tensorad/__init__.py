"""
최소 텐서 엔진 패키지 (역방향 자동 미분 + Adam)
"""

from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import check_gradients, numerical_gradient, relative_error
from .optim import AdamState, adam_step
from .sparse import EdgeWeightedOperator, sparse_apply
from .tensor import (
    Tape,
    Tensor,
    activation,
    add,
    add_bias,
    backward,
    current_tape,
    ewise,
    matmul,
    mse_loss,
    mul,
    no_grad,
    reciprocal,
    reshape,
    scale,
    shift,
    sub,
    sum_all,
)

__all__ = [
    "Tensor", "Tape", "backward", "current_tape", "no_grad",
    "matmul", "ewise", "add", "sub", "mul", "scale", "shift", "add_bias",
    "reciprocal", "activation", "reshape", "sum_all", "mse_loss",
    "sparse_apply", "EdgeWeightedOperator",
    "AdamState", "adam_step",
    "check_gradients", "numerical_gradient", "relative_error",
    "save_checkpoint", "load_checkpoint",
]
