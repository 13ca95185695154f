"""Central finite-difference verification of analytic gradients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import GradCheckError
from .params import ParameterSet
from .tape import Node, Tape

# Loss builders run a fresh forward pass and hand back the tape plus the loss
# node; the harness owns the two evaluations per perturbed coordinate.
LossBuilder = Callable[[ParameterSet], tuple[Tape, Node]]


@dataclass
class GradCheckReport:
    max_error: dict[tuple[str, str], float]
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(e < self.tolerance for e in self.max_error.values())

    @property
    def worst(self) -> float:
        return max(self.max_error.values()) if self.max_error else 0.0

    def __str__(self) -> str:
        lines = [f"gradcheck tolerance {self.tolerance:g}: "
                 f"{'PASS' if self.passed else 'FAIL'} (worst {self.worst:.3g})"]
        for key, err in sorted(self.max_error.items(), key=lambda kv: -kv[1]):
            lines.append(f"  {'/'.join(key)}: {err:.3g}")
        return "\n".join(lines)


def _loss_value(build_loss: LossBuilder, params: ParameterSet) -> float:
    _, loss = build_loss(params)
    return float(loss.value)


def finite_difference_check(build_loss: LossBuilder, params: ParameterSet,
                            tolerance: float = 1e-4, h: float = 1e-5) -> GradCheckReport:
    """Compare tape gradients against (f(x+h)-f(x-h))/2h per trainable coordinate.

    The loss builder must be deterministic: any internal randomness (dropout
    masks, sampling) has to be re-seeded identically on every call.
    """
    if _loss_value(build_loss, params) != _loss_value(build_loss, params):
        raise GradCheckError("loss builder is not deterministic at fixed parameters")

    tape, loss = build_loss(params)
    analytic = tape.backward(loss)

    report: dict[tuple[str, str], float] = {}
    for key, value in params.items():
        if not params.is_trainable(key[0]):
            continue
        grad = analytic.get(key)
        if grad is None:
            grad = np.zeros_like(value)
        worst = 0.0
        flat = value.reshape(-1)
        gflat = grad.reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + h
            up = _loss_value(build_loss, params)
            flat[idx] = orig - h
            down = _loss_value(build_loss, params)
            flat[idx] = orig
            numeric = (up - down) / (2.0 * h)
            denom = max(abs(gflat[idx]), abs(numeric), 1e-3)
            worst = max(worst, abs(gflat[idx] - numeric) / denom)
        report[key] = worst
    return GradCheckReport(max_error=report, tolerance=tolerance)
