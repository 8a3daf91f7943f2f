import math

import numpy as np
import pytest

from gradattr import engine
from gradattr.engine import Tape, finite_diff
from gradattr.rng import SplitMix64
from gradattr.scores import (ScoreKind, cross_entropy, log_softmax,
                             loss_grad_logits, loss_grad_wrt_y, score_scalar,
                             softmax, softmax_jacobian)


def test_softmax_symmetric_pair():
    assert np.allclose(softmax([0.0, 0.0]), [0.5, 0.5], atol=1e-15)


def test_softmax_closed_form_ln2():
    assert np.allclose(softmax([math.log(2.0), 0.0]), [2 / 3, 1 / 3], atol=1e-15)


def test_softmax_shift_stable_no_overflow():
    y = softmax([1000.0, 0.0])
    assert np.all(np.isfinite(y))
    assert y[0] > 1 - 1e-300 and y[1] >= 0.0
    assert abs(y.sum() - 1.0) < 1e-12


def test_softmax_positive_and_normalized_random():
    rng = SplitMix64(11)
    for _ in range(50):
        n = 2 + rng.randint(9)
        y = softmax(rng.uniform_array((n,), -30, 30))
        assert abs(y.sum() - 1.0) < 1e-12
        assert np.all(y >= 0.0)


def test_log_softmax_never_underflows_to_log_zero():
    ls = log_softmax(np.array([800.0, 0.0]))
    assert np.all(np.isfinite(ls))
    assert abs(ls[1] + 800.0) < 1e-9


def test_jacobian_half_half():
    jac = softmax_jacobian(np.array([0.5, 0.5]))
    assert np.allclose(jac, [[0.25, -0.25], [-0.25, 0.25]], atol=1e-15)


def test_jacobian_thirds():
    jac = softmax_jacobian(np.full(3, 1 / 3))
    expect = np.full((3, 3), -1 / 9) + np.eye(3) / 3
    assert np.allclose(jac, expect, atol=1e-15)


def test_jacobian_rows_sum_to_zero():
    rng = SplitMix64(12)
    for _ in range(100):
        n = 2 + rng.randint(9)
        jac = softmax_jacobian(softmax(rng.uniform_array((n,), -5, 5)))
        assert np.abs(jac.sum(axis=1)).max() < 1e-12


def test_jacobian_matches_finite_differences():
    rng = SplitMix64(13)
    worst = 0.0
    for _ in range(100):
        n = 2 + rng.randint(9)
        z = rng.uniform_array((n,), -5, 5)
        jac = softmax_jacobian(softmax(z))
        for c in range(n):
            fd = finite_diff(lambda v, c=c: float(softmax(v)[c]), z, h=1e-5)
            worst = max(worst, float(np.abs(jac[c] - fd).max()))
    assert worst < 1e-8


def test_score_scalar_values():
    assert score_scalar(ScoreKind.PRE_SOFTMAX, [1.0, 2.0, 3.0], 2) == 3.0
    assert score_scalar(ScoreKind.POST_SOFTMAX, [0.0, 0.0], 0) == 0.5
    assert abs(score_scalar(ScoreKind.LOG_SOFTMAX, [0.0, 0.0], 0) + math.log(2.0)) < 1e-15


def test_score_scalar_rejects_bad_class():
    with pytest.raises(ValueError):
        score_scalar(ScoreKind.PRE_SOFTMAX, [1.0, 2.0], 5)


def test_score_kind_parse():
    assert ScoreKind.parse("pre") is ScoreKind.PRE_SOFTMAX
    assert ScoreKind.parse("log") is ScoreKind.LOG_SOFTMAX
    with pytest.raises(ValueError):
        ScoreKind.parse("raw")


def test_cross_entropy_is_exactly_nll_for_onehot():
    rng = SplitMix64(14)
    for _ in range(20):
        z = rng.uniform_array((4,), -3, 3)
        c = rng.randint(4)
        t = np.zeros(4)
        t[c] = 1.0
        assert cross_entropy(z, t) == -log_softmax(z)[c]


def test_cross_entropy_general_target_minimum_at_target():
    z = np.array([0.2, -1.0, 0.5])
    t = softmax(z)  # predicted distribution equals target
    base = cross_entropy(z, t)
    assert base >= 0.0
    assert cross_entropy(z + np.array([0.5, 0, 0]), t) > base


def test_loss_grad_logits_examples():
    assert np.allclose(loss_grad_logits([0.7, 0.3], [1.0, 0.0]), [-0.3, 0.3], atol=1e-15)
    assert np.allclose(loss_grad_logits([0.25, 0.25, 0.5], [0.0, 0.0, 1.0]),
                       [0.25, 0.25, -0.5], atol=1e-15)
    y = softmax([0.3, -0.2, 1.0])
    assert np.abs(loss_grad_logits(y, y)).max() < 1e-15


def test_loss_grad_wrt_y_examples():
    assert np.allclose(loss_grad_wrt_y([0.5, 0.5], [1.0, 0.0]), [-2.0, 0.0], atol=1e-15)
    assert np.allclose(loss_grad_wrt_y([0.25, 0.75], [0.5, 0.5]), [-2.0, -2 / 3], atol=1e-15)
    assert loss_grad_wrt_y([0.3, 0.7], [0.0, 1.0])[0] == 0.0


def test_loss_grad_wrt_y_rejects_zero_probability_with_mass():
    with pytest.raises(ValueError, match="infinite"):
        loss_grad_wrt_y([0.0, 1.0], [0.5, 0.5])


def test_target_must_sum_to_one():
    with pytest.raises(ValueError, match="sum to 1"):
        loss_grad_logits([0.5, 0.5], [0.9, 0.3])


def test_loss_gradients_match_autodiff():
    rng = SplitMix64(15)
    for _ in range(30):
        n = 2 + rng.randint(5)
        z = rng.uniform_array((n,), -4, 4)
        y = softmax(z)
        t = np.zeros(n)
        t[rng.randint(n)] = 1.0

        tape = Tape()
        zn = tape.leaf(z[None])
        loss = engine.neg(tape, engine.sum_all(
            tape, engine.mul(tape, tape.leaf(t[None]), engine.log_softmax(tape, zn))))
        got = tape.backward(loss)[zn][0]
        assert np.abs(got - loss_grad_logits(y, t)).max() < 1e-10

        tape = Tape()
        yn = tape.leaf(y)
        loss = engine.neg(tape, engine.sum_all(
            tape, engine.mul(tape, tape.leaf(t), engine.elem_log(tape, yn))))
        got = tape.backward(loss)[yn]
        assert np.abs(got - loss_grad_wrt_y(y, t)).max() < 1e-10
