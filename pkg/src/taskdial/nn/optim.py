"""Adam with bias correction, plus global-norm gradient clipping."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError
from .params import ParameterSet
from .tape import FLOAT

Gradients = dict[tuple[str, str], np.ndarray]


@dataclass
class AdamState:
    """First/second moment accumulators; ``t`` counts completed updates."""

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict[tuple[str, str], np.ndarray] = field(default_factory=dict)
    v: dict[tuple[str, str], np.ndarray] = field(default_factory=dict)


def clip_global_norm(grads: Gradients, max_norm: float) -> float:
    """Scale all gradients in place so their joint L2 norm is at most ``max_norm``."""
    total = math.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if total > max_norm and total > 0.0:
        factor = max_norm / total
        for g in grads.values():
            g *= factor
    return total


def adam_step(params: ParameterSet, grads: Gradients, state: AdamState) -> None:
    """One bias-corrected Adam update, applied only to trainable groups.

    Frozen groups are skipped entirely (values and moments bit-identical).
    Keys present in ``grads`` must name existing parameters of matching shape.
    """
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    scale1 = 1.0 / (1.0 - b1 ** state.t)
    scale2 = 1.0 / (1.0 - b2 ** state.t)
    for key, grad in grads.items():
        group, name = key
        if group not in params.groups or name not in params.groups[group]:
            raise ContractError(f"gradient for unknown parameter {key}")
        value = params.groups[group][name]
        if grad.shape != value.shape:
            raise ContractError(
                f"gradient shape {grad.shape} does not match parameter {key} {value.shape}")
        if not params.is_trainable(group):
            continue
        if key not in state.m:
            state.m[key] = np.zeros_like(value, dtype=FLOAT)
            state.v[key] = np.zeros_like(value, dtype=FLOAT)
        m, v = state.m[key], state.v[key]
        m *= b1
        m += (1.0 - b1) * grad
        v *= b2
        v += (1.0 - b2) * grad * grad
        value -= state.learning_rate * (m * scale1) / (np.sqrt(v * scale2) + state.eps)
