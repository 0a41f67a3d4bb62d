import numpy as np
import pytest

from tritri.errors import DeterminismError, InputError
from tritri.numerics import Rng, Tensor, check_gradients, cross_entropy
from tritri.numerics import tensor as T


def test_quadratic_loss_is_exact():
    x = Tensor(np.array([1.0, -2.0, 3.0]), requires_grad=True)
    dev = check_gradients(lambda: T.tsum(T.mul(x, x)), [x], step=1e-4)
    assert dev < 1e-6


def test_step_must_be_positive():
    x = Tensor(np.ones(2), requires_grad=True)
    with pytest.raises(InputError):
        check_gradients(lambda: T.tsum(x), [x], step=0.0)


def test_nondeterministic_loss_detected():
    x = Tensor(np.ones(2), requires_grad=True)
    gen = np.random.default_rng(0)

    def noisy():
        return T.tsum(T.mul(x, Tensor(gen.normal(size=2))))

    with pytest.raises(DeterminismError):
        check_gradients(noisy, [x])


def test_fusion_gate_composite(tiny_model):
    """Finite differences over the three fusion equations at tiny dims."""
    rng = Rng(5)
    h_text = Tensor(rng.normal(size=(1, 3, 16)))
    feats = Tensor(rng.normal(size=(1, 8)), requires_grad=True)
    params = [tiny_model.params[k] for k in
              ("gate.w", "gate.b", "proj.w", "img_adapter.w", "img_adapter.b")]

    def loss_fn():
        state = tiny_model.fuse(h_text, feats)
        return T.tmean(T.mul(state.h_out, state.h_out))

    dev = check_gradients(loss_fn, params + [feats], step=1e-4)
    assert dev < 1e-3


def test_label_smoothed_cross_entropy_gradients():
    rng = Rng(9)
    logits_w = Tensor(rng.normal(size=(4, 6)), requires_grad=True)
    targets = np.array([0, 2, 5, 1])
    mask = np.array([1.0, 1.0, 0.0, 1.0])

    def loss_fn():
        return cross_entropy(logits_w, targets, mask, label_smoothing=0.1)

    dev = check_gradients(loss_fn, [logits_w], step=1e-4)
    assert dev < 1e-3
