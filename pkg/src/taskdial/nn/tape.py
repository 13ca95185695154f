"""Reverse-mode automatic differentiation on numpy float64 arrays.

A ``Tape`` records primitive operations in execution order; ``backward``
replays them in reverse, accumulating gradients into every node that needs
one. Values are 1-D vectors or 2-D matrices, which is all the dialogue model
requires (no general broadcasting, no batch axes beyond matrix columns).
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from ..errors import ConfigurationError, ContractError, DimensionError

FLOAT = np.float64

GATE_NAMES = ("i", "f", "g", "o")


def _as_array(value) -> np.ndarray:
    arr = np.asarray(value, dtype=FLOAT)
    if arr.ndim > 2:
        raise DimensionError(f"tensors are 1-D or 2-D, got shape {arr.shape}")
    return arr


class Node:
    """One value in the computation graph."""

    __slots__ = ("value", "grad", "needs_grad", "_backward")

    def __init__(self, value: np.ndarray, needs_grad: bool):
        self.value = value
        self.grad: np.ndarray | None = None
        self.needs_grad = needs_grad
        self._backward: Callable[[np.ndarray], None] | None = None

    @property
    def shape(self):
        return self.value.shape

    def _accumulate(self, g: np.ndarray, owned: bool = False) -> None:
        # ``owned`` promises g is freshly allocated and aliases nothing, so it
        # can be adopted as the gradient buffer without a defensive copy
        if not self.needs_grad:
            return
        if self.grad is None:
            self.grad = g if owned else g.copy()
        else:
            self.grad += g


class Tape:
    """Ordered record of operations; ``record=False`` gives a plain forward pass."""

    def __init__(self, record: bool = True):
        self.record = record
        self._nodes: list[Node] = []
        self._leaves: dict[tuple[str, str], Node] = {}

    def _push(self, node: Node) -> Node:
        if self.record:
            self._nodes.append(node)
        return node

    def leaf(self, value, key: tuple[str, str] | None = None, trainable: bool = True) -> Node:
        """Enter an array as a graph input; ``key`` registers it for gradient collection."""
        node = Node(_as_array(value), needs_grad=trainable and self.record)
        if key is not None:
            if key in self._leaves:
                raise ContractError(f"parameter leaf {key} already on tape")
            self._leaves[key] = node
        return self._push(node)

    def const(self, value) -> Node:
        return self.leaf(value, trainable=False)

    def backward(self, loss: Node) -> dict[tuple[str, str], np.ndarray]:
        """Seed d(loss)/d(loss)=1 and sweep the tape in reverse.

        Returns gradients for every registered leaf that is reachable and
        trainable; unreachable or frozen leaves get zeros.
        """
        if not self.record:
            raise ContractError("backward needs a recording tape")
        if loss.value.ndim != 0 and loss.value.size != 1:
            raise ContractError(f"loss must be scalar, got shape {loss.value.shape}")
        loss.grad = np.ones_like(loss.value)
        for node in reversed(self._nodes):
            if node._backward is not None and node.grad is not None and node.needs_grad:
                node._backward(node.grad)
        out: dict[tuple[str, str], np.ndarray] = {}
        for key, node in self._leaves.items():
            if node.grad is None:
                out[key] = np.zeros_like(node.value)
            else:
                out[key] = node.grad
        return out


def _unary(tape: Tape, value: np.ndarray, parent: Node,
           bw: Callable[[np.ndarray], np.ndarray]) -> Node:
    # every _unary backward builds a fresh array, so the parent may adopt it
    node = Node(value, parent.needs_grad)
    if tape.record and node.needs_grad:
        node._backward = lambda g: parent._accumulate(bw(g), owned=True)
    return tape._push(node)


# ---------------------------------------------------------------------------
# primitives


def matmul(tape: Tape, a: Node, b: Node) -> Node:
    """a @ b for a 2-D ``a`` and a 1-D or 2-D ``b``."""
    av, bv = a.value, b.value
    if av.ndim != 2 or av.shape[1] != bv.shape[0]:
        raise DimensionError(
            f"matmul: left operand {av.shape} cannot multiply right operand {bv.shape}")
    node = Node(av @ bv, a.needs_grad or b.needs_grad)
    if tape.record and node.needs_grad:
        def _bw(g):
            if a.needs_grad:
                a._accumulate(np.outer(g, bv) if bv.ndim == 1 else g @ bv.T, owned=True)
            if b.needs_grad:
                b._accumulate(av.T @ g, owned=True)
        node._backward = _bw
    return tape._push(node)


def add(tape: Tape, a: Node, b: Node) -> Node:
    if a.value.shape != b.value.shape:
        raise DimensionError(f"add: shapes {a.value.shape} and {b.value.shape} differ")
    node = Node(a.value + b.value, a.needs_grad or b.needs_grad)
    if tape.record and node.needs_grad:
        def _bw(g):
            a._accumulate(g)
            b._accumulate(g)
        node._backward = _bw
    return tape._push(node)


def add_bias(tape: Tape, x: Node, b: Node) -> Node:
    """Add a vector bias to a vector, or to every column of a matrix."""
    if b.value.ndim != 1 or x.value.shape[0] != b.value.shape[0]:
        raise DimensionError(
            f"add_bias: bias {b.value.shape} does not fit operand {x.value.shape}")
    if x.value.ndim == 1:
        return add(tape, x, b)
    node = Node(x.value + b.value[:, None], x.needs_grad or b.needs_grad)
    if tape.record and node.needs_grad:
        def _bw(g):
            if x.needs_grad:
                x._accumulate(g)
            if b.needs_grad:
                b._accumulate(g.sum(axis=1), owned=True)
        node._backward = _bw
    return tape._push(node)


def mul(tape: Tape, a: Node, b: Node) -> Node:
    """Elementwise product of same-shape operands."""
    if a.value.shape != b.value.shape:
        raise DimensionError(f"mul: shapes {a.value.shape} and {b.value.shape} differ")
    node = Node(a.value * b.value, a.needs_grad or b.needs_grad)
    if tape.record and node.needs_grad:
        def _bw(g):
            if a.needs_grad:
                a._accumulate(g * b.value, owned=True)
            if b.needs_grad:
                b._accumulate(g * a.value, owned=True)
        node._backward = _bw
    return tape._push(node)


def scale(tape: Tape, x: Node, c: float) -> Node:
    return _unary(tape, x.value * c, x, lambda g: g * c)


def sigmoid(tape: Tape, x: Node) -> Node:
    # exp saturates to inf/0 at the float64 tails, which still yields 0/1 here
    with np.errstate(over="ignore"):
        v = 1.0 / (1.0 + np.exp(-x.value))
    return _unary(tape, v, x, lambda g: g * v * (1.0 - v))


def tanh(tape: Tape, x: Node) -> Node:
    v = np.tanh(x.value)
    return _unary(tape, v, x, lambda g: g * (1.0 - v * v))


def exp(tape: Tape, x: Node) -> Node:
    v = np.exp(x.value)
    return _unary(tape, v, x, lambda g: g * v)


def concat_rows(tape: Tape, parts: Sequence[Node]) -> Node:
    """Concatenate along axis 0 (vectors or equal-width matrices)."""
    values = [p.value for p in parts]
    widths = {v.shape[1] for v in values if v.ndim == 2}
    if len({v.ndim for v in values}) != 1 or len(widths) > 1:
        raise DimensionError("concat_rows: mixed ranks or widths")
    out = np.concatenate(values, axis=0)
    node = Node(out, any(p.needs_grad for p in parts))
    if tape.record and node.needs_grad:
        offsets = np.cumsum([0] + [v.shape[0] for v in values])
        def _bw(g):
            for part, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
                if part.needs_grad:
                    part._accumulate(g[lo:hi])
        node._backward = _bw
    return tape._push(node)


def slice_rows(tape: Tape, x: Node, start: int, stop: int) -> Node:
    if not (0 <= start < stop <= x.value.shape[0]):
        raise DimensionError(f"slice_rows: [{start}:{stop}] out of {x.value.shape}")
    def _bw(g):
        full = np.zeros_like(x.value)
        full[start:stop] = g
        return full
    return _unary(tape, x.value[start:stop], x, _bw)


def concat_cols(tape: Tape, parts: Sequence[Node]) -> Node:
    """Stack columns: 1-D parts become single columns, matrices are kept."""
    values = [p.value if p.value.ndim == 2 else p.value[:, None] for p in parts]
    if len({v.shape[0] for v in values}) != 1:
        raise DimensionError("concat_cols: row counts differ")
    node = Node(np.concatenate(values, axis=1), any(p.needs_grad for p in parts))
    if tape.record and node.needs_grad:
        offsets = np.cumsum([0] + [v.shape[1] for v in values])
        def _bw(g):
            for part, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
                if part.needs_grad:
                    piece = g[:, lo:hi]
                    part._accumulate(piece if part.value.ndim == 2 else piece[:, 0])
        node._backward = _bw
    return tape._push(node)


def slice_cols(tape: Tape, x: Node, start: int, stop: int) -> Node:
    if x.value.ndim != 2 or not (0 <= start < stop <= x.value.shape[1]):
        raise DimensionError(f"slice_cols: [{start}:{stop}] out of {x.value.shape}")
    def _bw(g):
        full = np.zeros_like(x.value)
        full[:, start:stop] = g
        return full
    return _unary(tape, x.value[:, start:stop], x, _bw)


def column(tape: Tape, x: Node, j: int) -> Node:
    """Extract column ``j`` of a matrix as a vector."""
    if x.value.ndim != 2 or not (0 <= j < x.value.shape[1]):
        raise DimensionError(f"column: index {j} out of {x.value.shape}")
    def _bw(g):
        full = np.zeros_like(x.value)
        full[:, j] = g
        return full
    return _unary(tape, x.value[:, j].copy(), x, _bw)


def gather_cols(tape: Tape, table: Node, ids: np.ndarray) -> Node:
    """Embedding lookup: pick columns ``ids`` of a (dim, vocab) table."""
    if table.value.ndim != 2:
        raise DimensionError("gather_cols: table must be 2-D")
    ids = np.asarray(ids, dtype=np.int64)
    def _bw(g):
        full = np.zeros_like(table.value)
        np.add.at(full.T, ids, g.T)
        return full
    return _unary(tape, table.value[:, ids].copy(), table, _bw)


def log_softmax(tape: Tape, z: Node) -> Node:
    """Log-softmax along axis 0 (per column for matrices), max-subtracted."""
    if z.value.shape[0] < 1:
        raise DimensionError("log_softmax needs at least one row")
    m = z.value.max(axis=0, keepdims=z.value.ndim == 2)
    shifted = z.value - m
    lse = np.log(np.exp(shifted).sum(axis=0, keepdims=z.value.ndim == 2))
    v = shifted - lse
    p = np.exp(v)
    return _unary(tape, v, z, lambda g: g - p * g.sum(axis=0, keepdims=z.value.ndim == 2))


def sum_all(tape: Tape, x: Node) -> Node:
    v = np.asarray(x.value.sum())
    return _unary(tape, v, x, lambda g: np.full_like(x.value, float(g)))


def pick(tape: Tape, x: Node, index: int) -> Node:
    """Scalar entry of a 1-D vector."""
    if x.value.ndim != 1:
        raise DimensionError("pick expects a vector")
    if not (0 <= index < x.value.shape[0]):
        raise IndexError(f"pick: index {index} out of range {x.value.shape[0]}")
    def _bw(g):
        full = np.zeros_like(x.value)
        full[index] = g
        return full
    return _unary(tape, np.asarray(x.value[index]), x, _bw)


def nll_cols(tape: Tape, logprobs: Node, targets: np.ndarray, weights: np.ndarray) -> Node:
    """Weighted negative log-likelihood over matrix columns: -sum_k w_k lp[t_k, k]."""
    targets = np.asarray(targets, dtype=np.int64)
    weights = np.asarray(weights, dtype=FLOAT)
    n, k = logprobs.value.shape
    if targets.shape != (k,) or weights.shape != (k,):
        raise DimensionError("nll_cols: targets/weights must match column count")
    if targets.min() < 0 or targets.max() >= n:
        raise IndexError("nll_cols: target out of range")
    cols = np.arange(k)
    v = np.asarray(-(weights * logprobs.value[targets, cols]).sum())
    def _bw(g):
        full = np.zeros_like(logprobs.value)
        full[targets, cols] = -weights * float(g)
        return full
    return _unary(tape, v, logprobs, _bw)


# ---------------------------------------------------------------------------
# composite neural operations


def affine(tape: Tape, w: Node, x: Node, b: Node) -> Node:
    """w @ x + b, with the bias broadcast over matrix columns."""
    if w.value.ndim != 2:
        raise DimensionError(f"affine: weight must be 2-D, got {w.value.shape}")
    if w.value.shape[1] != x.value.shape[0]:
        raise DimensionError(
            f"affine: input has {x.value.shape[0]} rows, weight expects {w.value.shape[1]}")
    if b.value.shape[0] != w.value.shape[0]:
        raise DimensionError(
            f"affine: bias has {b.value.shape[0]} rows, weight produces {w.value.shape[0]}")
    return add_bias(tape, matmul(tape, w, x), b)


def activation(tape: Tape, x: Node, kind: str) -> Node:
    if kind == "tanh":
        return tanh(tape, x)
    if kind == "sigmoid":
        return sigmoid(tape, x)
    raise ConfigurationError(f"unknown activation kind {kind!r}")


def softmax_with_log(tape: Tape, logits: Node) -> tuple[Node, Node]:
    """Probabilities and log-probabilities of a logit vector (or per column)."""
    logprobs = log_softmax(tape, logits)
    return exp(tape, logprobs), logprobs


def cross_entropy(tape: Tape, logprobs: Node, target: int) -> Node:
    """-logprobs[target]; differentiable through ``softmax_with_log``."""
    return scale(tape, pick(tape, logprobs, target), -1.0)


def dropout_apply(tape: Tape, x: Node, rate: float, train: bool,
                  rng: np.random.Generator) -> Node:
    """Inverted dropout: eval mode and rate 0 are exact passthroughs."""
    if not (0.0 <= rate < 1.0):
        raise ConfigurationError(f"dropout rate must be in [0, 1), got {rate}")
    if not train or rate == 0.0:
        return x
    mask = (rng.random(x.value.shape) >= rate) / (1.0 - rate)
    return mul(tape, x, tape.const(mask))


def _check_gate_params(group: dict[str, Node]) -> None:
    for gate in GATE_NAMES:
        for prefix in ("wx", "wh", "b"):
            if f"{prefix}_{gate}" not in group:
                raise ConfigurationError(f"lstm parameter group is missing gate {gate!r} "
                                         f"({prefix}_{gate})")


def lstm_stack_gates(tape: Tape, group: dict[str, Node]) -> tuple[Node, Node, Node]:
    """Stack per-gate weights into (wx, wh, b) blocks once per forward pass."""
    _check_gate_params(group)
    wx = concat_rows(tape, [group[f"wx_{g}"] for g in GATE_NAMES])
    wh = concat_rows(tape, [group[f"wh_{g}"] for g in GATE_NAMES])
    b = concat_rows(tape, [group[f"b_{g}"] for g in GATE_NAMES])
    return wx, wh, b


def lstm_step_stacked(tape: Tape, wx: Node, wh: Node, b: Node,
                      x: Node, h_prev: Node, c_prev: Node) -> tuple[Node, Node]:
    """One LSTM cell step given pre-stacked gate blocks (rows: i, f, g, o)."""
    hidden = h_prev.value.shape[0]
    z = add_bias(tape, add(tape, matmul(tape, wx, x), matmul(tape, wh, h_prev)), b)
    i = sigmoid(tape, slice_rows(tape, z, 0, hidden))
    f = sigmoid(tape, slice_rows(tape, z, hidden, 2 * hidden))
    g = tanh(tape, slice_rows(tape, z, 2 * hidden, 3 * hidden))
    o = sigmoid(tape, slice_rows(tape, z, 3 * hidden, 4 * hidden))
    c = add(tape, mul(tape, f, c_prev), mul(tape, i, g))
    h = mul(tape, o, tanh(tape, c))
    return h, c


def lstm_cell_step(tape: Tape, group: dict[str, Node], x: Node,
                   h_prev: Node, c_prev: Node) -> tuple[Node, Node]:
    """Standard four-gate LSTM cell (no peepholes): c = f*c_prev + i*g, h = o*tanh(c)."""
    wx, wh, b = lstm_stack_gates(tape, group)
    return lstm_step_stacked(tape, wx, wh, b, x, h_prev, c_prev)
