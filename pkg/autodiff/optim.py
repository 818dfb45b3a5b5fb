"""
Adam with bias correction, and the patience rule shared by every training
loop in the project.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from autodiff.tensor import Tensor
from errors import ConfigError, DataError, ShapeError

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    """
    Per-parameter first and second moments plus the step counter.
    """

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: List[np.ndarray] = field(default_factory=list)
    v: List[np.ndarray] = field(default_factory=list)


def adam_step(
    params: Sequence[Tensor],
    grads: Sequence[np.ndarray],
    state: AdamState,
) -> AdamState:
    """
    Apply one bias-corrected Adam update to params in place.

    Raises:
        ShapeError: If a gradient does not match its parameter.
    """

    if len(params) != len(grads):
        raise ShapeError(f"{len(params)} parameters but {len(grads)} gradients")
    for param, grad in zip(params, grads):
        if grad.shape != param.shape:
            raise ShapeError(f"gradient {grad.shape} vs parameter {param.shape}")

    if not state.m:
        state.m = [np.zeros_like(p.data) for p in params]
        state.v = [np.zeros_like(p.data) for p in params]

    state.step += 1
    bias1 = 1.0 - state.beta1**state.step
    bias2 = 1.0 - state.beta2**state.step
    for i, (param, grad) in enumerate(zip(params, grads)):
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * (grad * grad)
        m_hat = state.m[i] / bias1
        v_hat = state.v[i] / bias2
        param.data = param.data - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return state


class Adam:
    """
    Convenience wrapper holding the parameter list and its AdamState.

    Example:
        optimizer = Adam(model.parameters(), lr=5e-5)
        backward(loss, optimizer.params)
        optimizer.step()
    """

    def __init__(self, params: Sequence[Tensor], lr: float = 1e-3):
        self.params = list(params)
        self.state = AdamState(lr=lr)

    def step(self) -> None:
        grads = [
            p.grad if p.grad is not None else np.zeros_like(p.data)
            for p in self.params
        ]
        adam_step(self.params, grads, self.state)

    def zero_grad(self) -> None:
        for param in self.params:
            param.zero_grad()


@dataclass(frozen=True)
class StopDecision:
    stop: bool
    best_epoch: int
    best_value: float


def early_stopping_check(history: Sequence[float], patience: int) -> StopDecision:
    """
    Decide whether training stops after the latest epoch.

    The best epoch (1-based) is the first one reaching the maximum; only a
    strictly greater value counts as an improvement. Training stops once
    `patience` epochs have passed without one.

    Raises:
        DataError: If history is empty.
        ConfigError: If patience is below 1.
    """

    if not history:
        raise DataError("early stopping needs at least one validation value")
    if patience < 1:
        raise ConfigError("patience must be at least 1")

    best_index = 0
    for i, value in enumerate(history):
        if value > history[best_index]:
            best_index = i

    stop = len(history) - 1 - best_index >= patience
    return StopDecision(
        stop=stop,
        best_epoch=best_index + 1,
        best_value=float(history[best_index]),
    )
