"""Named, groupwise-freezable parameter storage."""

from __future__ import annotations

import numpy as np

from ..errors import ContractError
from .tape import FLOAT, GATE_NAMES, Node, Tape

INIT_SCALE = 0.08  # uniform(-0.08, 0.08) for all weight matrices


class ParameterSet:
    """All trainable weights, partitioned into named groups.

    Freezing is per-group and only affects whether gradients are produced and
    applied; values are untouched. Group order is insertion order and stable,
    which keeps serialization and update sweeps deterministic.
    """

    def __init__(self):
        self.groups: dict[str, dict[str, np.ndarray]] = {}
        self._trainable: dict[str, bool] = {}

    def add_group(self, name: str, params: dict[str, np.ndarray],
                  trainable: bool = True) -> None:
        if name in self.groups:
            raise ContractError(f"duplicate parameter group {name!r}")
        self.groups[name] = {k: np.asarray(v, dtype=FLOAT) for k, v in params.items()}
        self._trainable[name] = trainable

    def is_trainable(self, group: str) -> bool:
        return self._trainable[group]

    def set_trainable(self, group: str, flag: bool) -> None:
        if group not in self.groups:
            raise ContractError(f"unknown parameter group {group!r}")
        self._trainable[group] = flag

    def freeze_all_except(self, *keep: str) -> None:
        for name in self.groups:
            self._trainable[name] = name in keep

    def items(self):
        for group, params in self.groups.items():
            for name, value in params.items():
                yield (group, name), value

    def get(self, key: tuple[str, str]) -> np.ndarray:
        return self.groups[key[0]][key[1]]

    def total_count(self) -> int:
        return sum(v.size for _, v in self.items())

    def copy(self) -> "ParameterSet":
        out = ParameterSet()
        for group, params in self.groups.items():
            out.add_group(group, {k: v.copy() for k, v in params.items()},
                          trainable=self._trainable[group])
        return out

    def leaves(self, tape: Tape, group: str) -> dict[str, Node]:
        """Put one group on a tape; frozen groups enter as constants."""
        trainable = self._trainable[group] and tape.record
        return {
            name: tape.leaf(value, key=(group, name), trainable=trainable)
            for name, value in self.groups[group].items()
        }


def uniform_init(rng: np.random.Generator, *shape: int) -> np.ndarray:
    return rng.uniform(-INIT_SCALE, INIT_SCALE, size=shape).astype(FLOAT)


def lstm_group(rng: np.random.Generator, input_dim: int, hidden: int) -> dict[str, np.ndarray]:
    """Per-gate LSTM weights; forget-gate bias starts at 1.0, others at 0."""
    params: dict[str, np.ndarray] = {}
    for gate in GATE_NAMES:
        params[f"wx_{gate}"] = uniform_init(rng, hidden, input_dim)
        params[f"wh_{gate}"] = uniform_init(rng, hidden, hidden)
        params[f"b_{gate}"] = np.full(hidden, 1.0 if gate == "f" else 0.0, dtype=FLOAT)
    return params


def mlp_group(rng: np.random.Generator, input_dim: int, hidden: int,
              output_dim: int) -> dict[str, np.ndarray]:
    """Single-hidden-layer MLP weights (tanh hidden)."""
    return {
        "w1": uniform_init(rng, hidden, input_dim),
        "b1": np.zeros(hidden, dtype=FLOAT),
        "w2": uniform_init(rng, output_dim, hidden),
        "b2": np.zeros(output_dim, dtype=FLOAT),
    }
