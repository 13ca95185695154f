"""Adam oracle checks, freezing, clipping, and the finite-difference harness."""

import numpy as np
import pytest

from taskdial import nn
from taskdial.errors import ContractError, GradCheckError
from taskdial.nn import AdamState, ParameterSet, Tape, adam_step, clip_global_norm

from oracles import naive_adam_trajectory


def _scalar_params(value=0.0):
    params = ParameterSet()
    params.add_group("w", {"theta": np.array([value])})
    return params


def test_adam_zero_gradient_is_stationary():
    params = _scalar_params(1.5)
    state = AdamState()
    for _ in range(5):
        adam_step(params, {("w", "theta"): np.zeros(1)}, state)
    assert params.get(("w", "theta"))[0] == 1.5
    assert state.t == 5


def test_adam_first_step_is_signed_learning_rate():
    for g in (0.37, -12.0, 0.05):  # |g| >> eps, where the sign identity holds to 1e-6
        params = _scalar_params(0.0)
        adam_step(params, {("w", "theta"): np.array([g])}, AdamState(learning_rate=1e-3))
        step = params.get(("w", "theta"))[0]
        assert abs(step - (-1e-3 * np.sign(g))) < 1e-6 * abs(step)


def test_adam_matches_hand_recursion():
    params = _scalar_params(0.0)
    state = AdamState(learning_rate=1e-3)
    seen = []
    for _ in range(3):
        adam_step(params, {("w", "theta"): np.array([1.0])}, state)
        seen.append(params.get(("w", "theta"))[0])
    expected = naive_adam_trajectory([1.0, 1.0, 1.0])
    assert np.max(np.abs(np.array(seen) - np.array(expected))) < 1e-12


def test_adam_shape_mismatch():
    params = _scalar_params()
    with pytest.raises(ContractError):
        adam_step(params, {("w", "theta"): np.zeros(3)}, AdamState())


def test_adam_unknown_key():
    params = _scalar_params()
    with pytest.raises(ContractError):
        adam_step(params, {("w", "missing"): np.zeros(1)}, AdamState())


def test_frozen_group_bit_identical():
    params = ParameterSet()
    rng = np.random.default_rng(0)
    params.add_group("a", {"w": rng.normal(size=(3, 3))})
    params.add_group("b", {"w": rng.normal(size=(3, 3))})
    params.set_trainable("a", False)
    before = params.get(("a", "w")).copy()
    state = AdamState()
    for _ in range(4):
        grads = {("a", "w"): rng.normal(size=(3, 3)), ("b", "w"): rng.normal(size=(3, 3))}
        adam_step(params, grads, state)
    assert params.get(("a", "w")).tobytes() == before.tobytes()
    assert not np.array_equal(params.get(("b", "w")), before)


def test_clip_global_norm():
    grads = {("g", "a"): np.array([3.0, 0.0]), ("g", "b"): np.array([0.0, 4.0])}
    norm = clip_global_norm(grads, 1.0)
    assert abs(norm - 5.0) < 1e-12
    clipped = np.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    assert abs(clipped - 1.0) < 1e-12
    # below the threshold nothing changes
    grads2 = {("g", "a"): np.array([0.3])}
    clip_global_norm(grads2, 5.0)
    assert grads2[("g", "a")][0] == 0.3


def test_gradcheck_quadratic_loss():
    rng = np.random.default_rng(5)
    params = ParameterSet()
    params.add_group("w", {"theta": rng.normal(size=6)})

    def build(p):
        tape = Tape()
        x = p.leaves(tape, "w")["theta"]
        return tape, nn.scale(tape, nn.sum_all(tape, nn.mul(tape, x, x)), 0.5)

    report = nn.finite_difference_check(build, params, tolerance=1e-10)
    assert report.passed, str(report)


def test_gradcheck_lstm_cell():
    rng = np.random.default_rng(9)
    params = ParameterSet()
    params.add_group("cell", nn.lstm_group(rng, input_dim=3, hidden=2))
    x = rng.normal(size=3)
    h0 = rng.normal(size=2)
    c0 = rng.normal(size=2)

    def build(p):
        tape = Tape()
        group = p.leaves(tape, "cell")
        h, c = nn.lstm_cell_step(tape, group, tape.const(x), tape.const(h0), tape.const(c0))
        both = nn.concat_rows(tape, [h, c])
        return tape, nn.sum_all(tape, nn.mul(tape, both, both))

    report = nn.finite_difference_check(build, params, tolerance=1e-4)
    assert report.passed, str(report)


def test_gradcheck_rejects_nondeterministic_loss():
    params = _scalar_params(1.0)
    rng = np.random.default_rng(1)

    def build(p):
        tape = Tape()
        x = p.leaves(tape, "w")["theta"]
        return tape, nn.scale(tape, nn.sum_all(tape, x), float(rng.random()))

    with pytest.raises(GradCheckError):
        nn.finite_difference_check(build, params)


def test_parameter_set_copy_and_counts():
    params = ParameterSet()
    params.add_group("a", {"w": np.ones((2, 3)), "b": np.zeros(2)})
    clone = params.copy()
    clone.get(("a", "w"))[0, 0] = 99.0
    assert params.get(("a", "w"))[0, 0] == 1.0
    assert params.total_count() == 8


def test_duplicate_group_rejected():
    params = ParameterSet()
    params.add_group("a", {"w": np.ones(1)})
    with pytest.raises(ContractError):
        params.add_group("a", {"w": np.ones(1)})
