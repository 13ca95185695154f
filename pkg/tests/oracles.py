"""Naive, loop-based reference implementations used as independent oracles.

Nothing here touches the tape; every function is written the slow obvious way
so test expectations do not share code paths with the implementation under
test.
"""

import math

import numpy as np


def naive_affine(w, x, b):
    out = np.zeros(w.shape[0])
    for i in range(w.shape[0]):
        acc = 0.0
        for j in range(w.shape[1]):
            acc += w[i, j] * x[j]
        out[i] = acc + b[i]
    return out


def naive_sigmoid(v):
    return np.array([1.0 / (1.0 + math.exp(-x)) for x in np.asarray(v).ravel()]).reshape(np.shape(v))


def naive_tanh(v):
    return np.array([math.tanh(x) for x in np.asarray(v).ravel()]).reshape(np.shape(v))


def naive_softmax(logits):
    m = max(logits)
    exps = [math.exp(x - m) for x in logits]
    total = sum(exps)
    return np.array([e / total for e in exps])


def naive_log_softmax(logits):
    m = max(logits)
    lse = m + math.log(sum(math.exp(x - m) for x in logits))
    return np.array([x - lse for x in logits])


def naive_lstm_step(group, x, h_prev, c_prev):
    """Gate-by-gate cell arithmetic from per-gate weight arrays."""
    def gate(name, squash):
        z = naive_affine(group[f"wx_{name}"], x, group[f"b_{name}"])
        z = z + naive_affine(group[f"wh_{name}"], h_prev, np.zeros_like(group[f"b_{name}"]))
        return squash(z)

    i = gate("i", naive_sigmoid)
    f = gate("f", naive_sigmoid)
    g = gate("g", naive_tanh)
    o = gate("o", naive_sigmoid)
    c = f * c_prev + i * g
    h = o * naive_tanh(c)
    return h, c


def naive_bilstm_encode(params_fwd, params_bwd, embeddings, ids):
    """Unrolled single-sequence bidirectional encoding; returns concat of final states."""
    hidden = params_fwd["b_i"].shape[0]

    def run(group, sequence):
        h = np.zeros(hidden)
        c = np.zeros(hidden)
        for tok in sequence:
            h, c = naive_lstm_step(group, embeddings[:, tok], h, c)
        return h

    return np.concatenate([run(params_fwd, ids), run(params_bwd, list(reversed(ids)))])


def naive_mlp(group, x):
    hidden = naive_tanh(naive_affine(group["w1"], x, group["b1"]))
    return naive_affine(group["w2"], hidden, group["b2"])


def naive_adam_trajectory(g_sequence, lr=1e-3, b1=0.9, b2=0.999, eps=1e-8, theta0=0.0):
    """Scalar Adam recursion computed step by step."""
    theta, m, v = theta0, 0.0, 0.0
    out = []
    for t, g in enumerate(g_sequence, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        mhat = m / (1 - b1 ** t)
        vhat = v / (1 - b2 ** t)
        theta = theta - lr * mhat / (math.sqrt(vhat) + eps)
        out.append(theta)
    return out


def brute_force_kb_filter(rows, constraints, requested_count):
    """Exhaustive scan: list of matching entity ids + availability."""
    ids = []
    available = False
    for row in rows:
        if all(row.values[slot] == value for slot, value in constraints.items()):
            ids.append(row.entity_id)
            if row.tickets_available >= requested_count:
                available = True
    return ids, available
