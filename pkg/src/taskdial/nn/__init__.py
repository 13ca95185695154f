"""Minimal reverse-mode autodiff engine and optimizer for the dialogue model."""

from .gradcheck import GradCheckReport, finite_difference_check
from .optim import AdamState, Gradients, adam_step, clip_global_norm
from .params import ParameterSet, lstm_group, mlp_group, uniform_init
from .serialize import read_container, write_container
from .tape import (
    FLOAT,
    GATE_NAMES,
    Node,
    Tape,
    activation,
    add,
    add_bias,
    affine,
    column,
    concat_cols,
    concat_rows,
    cross_entropy,
    dropout_apply,
    exp,
    gather_cols,
    log_softmax,
    lstm_cell_step,
    lstm_stack_gates,
    lstm_step_stacked,
    matmul,
    mul,
    nll_cols,
    pick,
    scale,
    sigmoid,
    slice_cols,
    slice_rows,
    softmax_with_log,
    sum_all,
    tanh,
)

__all__ = [
    "FLOAT", "GATE_NAMES", "Node", "Tape", "ParameterSet", "AdamState", "Gradients",
    "GradCheckReport", "finite_difference_check", "adam_step", "clip_global_norm",
    "lstm_group", "mlp_group", "uniform_init", "read_container", "write_container",
    "activation", "add", "add_bias", "affine", "column", "concat_cols", "concat_rows",
    "cross_entropy", "dropout_apply", "exp", "gather_cols", "log_softmax",
    "lstm_cell_step", "lstm_stack_gates", "lstm_step_stacked", "matmul", "mul",
    "nll_cols", "pick", "scale", "sigmoid", "slice_cols", "slice_rows",
    "softmax_with_log", "sum_all", "tanh",
]
