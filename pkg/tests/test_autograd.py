import numpy as np
import pytest

from tritri.errors import NumericError, ShapeError, StateError
from tritri.numerics import (
    Tensor, backward, concat, cross_entropy, embedding, layer_norm, matmul,
    mul, no_grad, relu, softmax, tanh, tmean, topo_order, transpose, tsum,
)
from tritri.numerics import tensor as T


def test_tanh_of_zero_is_zero():
    out = tanh(Tensor(np.zeros((3, 2))))
    assert np.array_equal(out.data, np.zeros((3, 2)))


def test_softmax_of_constant_is_uniform():
    out = softmax(Tensor([0.0, 0.0, 0.0]))
    assert np.allclose(out.data, [1 / 3] * 3)


def test_matmul_hand_arithmetic():
    out = matmul(Tensor([[1.0, 2], [3, 4]]), Tensor([[5.0, 6], [7, 8]]))
    assert np.array_equal(out.data, [[19, 22], [43, 50]])


def test_matmul_inner_dim_error_names_shapes():
    with pytest.raises(ShapeError) as e:
        matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((4, 2))))
    assert "(2, 3)" in str(e.value) and "(4, 2)" in str(e.value)


def test_concat_shape_error():
    with pytest.raises(ShapeError):
        concat([Tensor(np.ones((2, 3))), Tensor(np.ones((3, 3)))], axis=-1)


def test_grad_of_sum_is_ones():
    x = Tensor(np.arange(12.0).reshape(3, 4), requires_grad=True)
    backward(tsum(x))
    assert np.array_equal(x.grad, np.ones((3, 4)))


def test_grad_of_tanh_at_zero_is_ones():
    x = Tensor(np.zeros(5), requires_grad=True)
    backward(tsum(tanh(x)))
    assert np.allclose(x.grad, 1.0)


def test_backward_twice_raises_state_error():
    x = Tensor(np.ones(3), requires_grad=True)
    loss = tsum(x)
    backward(loss)
    with pytest.raises(StateError):
        backward(loss)


def test_backward_requires_scalar():
    x = Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(ShapeError):
        backward(mul(x, x))


def test_shared_input_grads_accumulate():
    x = Tensor([2.0], requires_grad=True)
    backward(tsum(mul(x, x)))  # d(x*x)/dx = 2x
    assert np.allclose(x.grad, 4.0)


def test_broadcast_add_unbroadcasts_gradient():
    a = Tensor(np.ones((2, 3)), requires_grad=True)
    b = Tensor(np.ones(3), requires_grad=True)
    backward(tsum(T.add(a, b)))
    assert a.grad.shape == (2, 3)
    assert b.grad.shape == (3,)
    assert np.array_equal(b.grad, [2.0, 2.0, 2.0])


def test_embedding_gradient_scatters():
    table = Tensor(np.zeros((5, 2)), requires_grad=True)
    out = embedding(table, np.array([1, 1, 3]))
    backward(tsum(out))
    expected = np.zeros((5, 2))
    expected[1] = 2.0
    expected[3] = 1.0
    assert np.array_equal(table.grad, expected)


def test_embedding_range_check():
    with pytest.raises(ShapeError):
        embedding(Tensor(np.zeros((4, 2))), np.array([4]))


def test_layer_norm_rows_standardized():
    x = Tensor(np.random.default_rng(0).normal(size=(4, 8)))
    out = layer_norm(x, Tensor(np.ones(8)), Tensor(np.zeros(8)))
    assert np.allclose(out.data.mean(axis=-1), 0.0, atol=1e-12)
    assert np.allclose(out.data.std(axis=-1), 1.0, atol=1e-3)


def test_non_finite_raises_numeric_error():
    big = Tensor(np.full((2, 2), 1e308))
    with pytest.raises(NumericError) as e:
        matmul(big, big)
    assert "matmul" in str(e.value)


def test_no_nan_for_inputs_within_1e3():
    gen = np.random.default_rng(3)
    x = Tensor(gen.uniform(-1e3, 1e3, (4, 6)), requires_grad=True)
    w = Tensor(gen.uniform(-1e3, 1e3, (6, 6)), requires_grad=True)
    for op in (tanh, relu, lambda t: softmax(t, axis=-1), tmean):
        assert np.all(np.isfinite(op(x).data))
    assert np.all(np.isfinite(matmul(x, w).data))
    assert np.all(np.isfinite(
        layer_norm(x, Tensor(np.ones(6)), Tensor(np.zeros(6))).data))


def test_bitwise_reproducibility():
    gen1 = np.random.default_rng(11)
    gen2 = np.random.default_rng(11)

    def run(gen):
        a = Tensor(gen.normal(size=(3, 4)), requires_grad=True)
        b = Tensor(gen.normal(size=(4, 3)), requires_grad=True)
        out = softmax(tanh(matmul(a, b)))
        loss = tmean(out)
        backward(loss)
        return loss.item(), a.grad.copy(), b.grad.copy()

    l1, ga1, gb1 = run(gen1)
    l2, ga2, gb2 = run(gen2)
    assert l1 == l2
    assert np.array_equal(ga1, ga2) and np.array_equal(gb1, gb2)


def test_topo_order_visits_each_node_once():
    x = Tensor(np.ones(3), requires_grad=True)
    y = mul(x, x)
    z = T.add(y, y)
    order = topo_order(tsum(z))
    ids = [id(t) for t in order]
    assert len(ids) == len(set(ids))
    assert ids.index(id(x)) < ids.index(id(y)) < ids.index(id(z))


def test_no_grad_suppresses_graph():
    x = Tensor(np.ones(3), requires_grad=True)
    with no_grad():
        out = tanh(x)
    assert out.node is None and not out.requires_grad


def test_cross_entropy_uniform_logits():
    logits = Tensor(np.zeros((2, 5)))
    loss = cross_entropy(logits, np.array([1, 3]))
    assert abs(loss.item() - np.log(5)) < 1e-12


def test_cross_entropy_masked_positions_ignored():
    logits = Tensor(np.random.default_rng(0).normal(size=(1, 3, 4)),
                    requires_grad=True)
    mask = np.array([[1.0, 1.0, 0.0]])
    loss = cross_entropy(logits, np.array([[0, 1, 2]]), mask)
    backward(loss)
    assert np.array_equal(logits.grad[0, 2], np.zeros(4))


def test_cross_entropy_all_masked_errors():
    with pytest.raises(ShapeError):
        cross_entropy(Tensor(np.zeros((1, 2, 4))), np.zeros((1, 2), dtype=int),
                      np.zeros((1, 2)))


def test_transpose_roundtrip_gradient():
    x = Tensor(np.random.default_rng(1).normal(size=(2, 3, 4)), requires_grad=True)
    out = transpose(transpose(x, (2, 0, 1)), (1, 2, 0))
    assert np.array_equal(out.data, x.data)
    backward(tsum(out))
    assert np.array_equal(x.grad, np.ones((2, 3, 4)))
