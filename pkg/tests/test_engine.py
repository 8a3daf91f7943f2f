"""Engine tests: every primitive's reverse-mode gradient is vouched for by
central finite differences on seeded random instances."""

import numpy as np
import pytest

import gradattr as ga
from gradattr import engine
from gradattr.engine import Tape, finite_diff
from gradattr.rng import SplitMix64

GRAD_TOL = 1e-6
FD_H = 1e-5


def _fd_check(rng, make_leaves, node_fn, n_instances=100, tol=GRAD_TOL):
    """Compare backward() against finite differences for each leaf."""
    worst = 0.0
    for _ in range(n_instances):
        leaves = make_leaves(rng)
        tape = Tape()
        nodes = [tape.leaf(v) for v in leaves]
        out = node_fn(tape, *nodes)
        probe = rng.uniform_array(out.value.shape, -1.0, 1.0)
        pn = tape.leaf(probe)
        if out.value.shape == ():
            scalar = engine.mul(tape, out, pn)
        else:
            scalar = engine.sum_all(tape, engine.mul(tape, out, pn))
        grads = tape.backward(scalar)
        for k, leaf_value in enumerate(leaves):
            def f(v, k=k):
                t2 = Tape()
                ns = [t2.leaf(v if i == k else lv) for i, lv in enumerate(leaves)]
                o2 = node_fn(t2, *ns)
                return float((o2.value * probe).sum())

            fd = finite_diff(f, leaf_value, h=FD_H)
            worst = max(worst, float(np.abs(grads[nodes[k]] - fd).max()))
    assert worst < tol, f"gradient mismatch vs finite differences: {worst:.3e}"


def test_dense_gradients_match_fd():
    rng = SplitMix64(101)

    def leaves(r):
        return [r.uniform_array((3, 5), -2, 2), r.uniform_array((5, 4), -1, 1),
                r.uniform_array((4,), -1, 1)]

    _fd_check(rng, leaves, engine.dense)


def test_conv2d_gradients_match_fd():
    rng = SplitMix64(102)

    def leaves(r):
        return [r.uniform_array((2, 4, 4, 2), -2, 2), r.uniform_array((3, 2, 3, 3), -1, 1)]

    _fd_check(rng, leaves, engine.conv2d)


def test_relu_gradients_match_fd():
    rng = SplitMix64(103)

    def leaves(r):
        # keep values away from the kink so the FD oracle stays valid
        vals = r.uniform_array((4, 6), -2, 2)
        vals += np.where(vals >= 0, 0.05, -0.05)
        return [vals]

    _fd_check(rng, leaves, engine.relu)


def test_maxpool_gradients_match_fd():
    rng = SplitMix64(104)

    def leaves(r):
        return [r.uniform_array((2, 4, 4, 3), -1, 1)]

    _fd_check(rng, leaves, engine.maxpool2)


def test_flatten_gradients_match_fd():
    rng = SplitMix64(105)

    def leaves(r):
        return [r.uniform_array((2, 3, 3, 2), -1, 1)]

    _fd_check(rng, leaves, engine.flatten)


def test_softmax_family_gradients_match_fd():
    rng = SplitMix64(106)

    def leaves(r):
        return [r.uniform_array((3, 5), -4, 4)]

    _fd_check(rng, leaves, engine.softmax)
    _fd_check(rng, leaves, engine.log_softmax)
    _fd_check(rng, leaves, lambda t, z: engine.softmax_col(t, z, 2))
    _fd_check(rng, leaves, lambda t, z: engine.log_softmax_col(t, z, 2))


def test_reduction_and_elementwise_gradients_match_fd():
    rng = SplitMix64(107)

    def mat(r):
        return [r.uniform_array((3, 4), -2, 2)]

    def positive(r):
        return [r.uniform_array((3, 4), 0.2, 3.0)]

    _fd_check(rng, mat, engine.sum_all, n_instances=25)
    _fd_check(rng, mat, engine.mean_all, n_instances=25)
    _fd_check(rng, positive, engine.elem_log, n_instances=25)
    _fd_check(rng, mat, engine.elem_exp, n_instances=25)
    _fd_check(rng, mat, lambda t, x: engine.scale(t, x, -1.7), n_instances=25)
    _fd_check(rng, mat, lambda t, x: engine.pick(t, x, (1, 2)), n_instances=25)
    _fd_check(rng, mat, lambda t, x: engine.take_col(t, x, 1), n_instances=25)
    _fd_check(rng, mat, lambda t, x: engine.take_per_row(t, x, [2, 0, 3]), n_instances=25)

    def two(r):
        return [r.uniform_array((3, 4), -2, 2), r.uniform_array((3, 4), -2, 2)]

    def rowwise(r):
        return [r.uniform_array((3, 4), -2, 2), r.uniform_array((3,), -2, 2)]

    _fd_check(rng, two, engine.add, n_instances=25)
    _fd_check(rng, two, engine.mul, n_instances=25)
    _fd_check(rng, rowwise, engine.add_rowwise, n_instances=25)


# ---------------------------------------------------------------------------
# fixed conventions and contracts


def test_linear_scaling_tape():
    tape = Tape()
    x = tape.leaf(np.asarray(2.0))
    y = engine.scale(tape, x, 3.0)
    assert float(y.value) == 6.0
    assert float(tape.backward(y)[x]) == 3.0


def test_relu_dead_at_negative_and_zero():
    tape = Tape()
    x = tape.leaf(np.asarray([[-1.0, 0.0, 2.0]]))
    y = engine.sum_all(tape, engine.relu(tape, x))
    g = tape.backward(y)[x]
    assert np.array_equal(g, [[0.0, 0.0, 1.0]])


def test_maxpool_tie_routes_to_lowest_flat_index():
    x = np.zeros((1, 2, 2, 1))
    tape = Tape()
    xn = tape.leaf(x)
    y = engine.sum_all(tape, engine.maxpool2(tape, xn))
    g = tape.backward(y)[xn]
    expect = np.zeros((1, 2, 2, 1))
    expect[0, 0, 0, 0] = 1.0
    assert np.array_equal(g, expect)


def test_backward_is_linear_in_the_seed():
    rng = SplitMix64(42)
    tape = Tape()
    x = tape.leaf(rng.uniform_array((2, 8), -2, 2))
    h = engine.relu(tape, x)
    s1 = engine.sum_all(tape, h)
    s2 = engine.mean_all(tape, engine.mul(tape, h, h))
    total = engine.add(tape, s1, s2)
    g_sum = tape.backward(total)[x]
    g1 = tape.backward(s1)[x]
    g2 = tape.backward(s2)[x]
    assert np.abs(g_sum - (g1 + g2)).max() < 1e-12


def test_replay_reproduces_values_bit_exactly():
    rng = SplitMix64(7)
    tape = Tape()
    x = tape.leaf(rng.uniform_array((2, 4, 4, 2), -1, 1))
    w = tape.leaf(rng.uniform_array((3, 2, 3, 3), -1, 1))
    h = engine.relu(tape, engine.conv2d(tape, x, w))
    p = engine.maxpool2(tape, h)
    out = engine.softmax(tape, engine.flatten(tape, p))
    snapshot = [n.value.copy() for n in tape.nodes]
    tape.replay()
    for before, node in zip(snapshot, tape.nodes):
        assert np.array_equal(before, node.value), node.name


def test_backward_rejects_non_scalar_seed():
    tape = Tape()
    x = tape.leaf(np.ones((2, 2)))
    with pytest.raises(ValueError, match="scalar"):
        tape.backward(x)


def test_leaf_rejects_non_finite():
    with pytest.raises(ValueError, match="finite"):
        Tape().leaf(np.array([1.0, np.inf]))


def test_backward_unreachable_nodes_get_zeros():
    tape = Tape()
    x = tape.leaf(np.asarray(1.5))
    other = tape.leaf(np.ones((3,)))
    y = engine.scale(tape, x, 2.0)
    grads = tape.backward(y)
    assert np.array_equal(grads[other], np.zeros(3))


# ---------------------------------------------------------------------------
# finite_diff oracle contracts


def test_finite_diff_quadratic():
    g = finite_diff(lambda v: float(v ** 2), np.asarray(3.0), h=1e-4)
    assert abs(float(g) - 6.0) < 1e-7


def test_finite_diff_constant_function():
    g = finite_diff(lambda v: 4.2, np.ones((3, 2)), h=1e-4)
    assert np.array_equal(g, np.zeros((3, 2)))


def test_finite_diff_softmax_component_matches_closed_form():
    z = np.array([1.0, 0.0])
    g = finite_diff(lambda v: float(ga.softmax(v)[0]), z, h=1e-5)
    y0 = ga.softmax(z)[0]
    assert abs(g[0] - y0 * (1 - y0)) < 1e-8


def test_finite_diff_rejects_bad_step():
    with pytest.raises(ValueError):
        finite_diff(lambda v: 0.0, np.ones(2), h=0.0)
