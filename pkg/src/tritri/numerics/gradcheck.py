"""Finite-difference verification of reverse-mode gradients.

This is the numerical oracle every learned module is checked against:
central differences with a configurable step (default 1e-4, the usual
truncation/rounding balance at float64).
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from ..errors import DeterminismError, InputError
from .tensor import Tensor, backward


def check_gradients(
    loss_fn: Callable[[], Tensor],
    params: Sequence[Tensor],
    step: float = 1e-4,
) -> float:
    """Max relative deviation between analytic and numeric gradients.

    ``loss_fn`` rebuilds the forward graph from the current parameter
    values and returns a scalar loss tensor. The deviation for each
    parameter element is ``|analytic - numeric| / max(|numeric|, 1e-8)``
    and the maximum over all elements of all ``params`` is returned.

    Raises :class:`DeterminismError` if two evaluations of ``loss_fn``
    disagree, since finite differences are meaningless on a noisy loss.
    """
    if step <= 0:
        raise InputError(f"step must be positive, got {step}")
    first = loss_fn().item()
    second = loss_fn().item()
    if first != second:
        raise DeterminismError(
            f"loss_fn is not deterministic: {first!r} vs {second!r}")

    for p in params:
        p.zero_grad()
    loss = loss_fn()
    backward(loss)
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy()
                for p in params]

    worst = 0.0
    for p, a in zip(params, analytic):
        flat = p.data.reshape(-1)
        a_flat = a.reshape(-1)
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + step
            up = loss_fn().item()
            flat[i] = saved - step
            down = loss_fn().item()
            flat[i] = saved
            numeric = (up - down) / (2.0 * step)
            dev = abs(a_flat[i] - numeric) / max(abs(numeric), 1e-8)
            worst = max(worst, dev)
    return worst
