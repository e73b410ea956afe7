import logging
from typing import Dict, Optional, Sequence

import numpy as np

from sscan.autodiff import Parameter
from sscan.constants import ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON
from sscan.errors import NonFiniteGradientError, ShapeError


class AdamState:
    """
    ADAM moment estimates, keyed by parameter name. Moments are created (zero) the first time a
    parameter is stepped.
    """

    def __init__(self, beta1: float = ADAM_BETA1, beta2: float = ADAM_BETA2, epsilon: float = ADAM_EPSILON):
        '''Initialize the state.

        Args:
            beta1 (float): decay of the first moment
            beta2 (float): decay of the second moment
            epsilon (float): denominator offset
        '''
        self._beta1 = beta1
        self._beta2 = beta2
        self._epsilon = epsilon
        self._t = 0
        self._m: Dict[str, np.ndarray] = {}
        self._v: Dict[str, np.ndarray] = {}

    def __repr__(self):
        return (f"{self.__class__.__name__}(t={self.t}, beta1={self.beta1}, beta2={self.beta2}, "
                f"epsilon={self.epsilon}, parameters={len(self._m)})")

    @property
    def t(self) -> int:
        """Get the number of completed steps."""
        return self._t

    @property
    def beta1(self) -> float:
        return self._beta1

    @property
    def beta2(self) -> float:
        return self._beta2

    @property
    def epsilon(self) -> float:
        return self._epsilon

    @property
    def m(self) -> Dict[str, np.ndarray]:
        """Get the first moments."""
        return self._m

    @property
    def v(self) -> Dict[str, np.ndarray]:
        """Get the second moments."""
        return self._v


def adam_step(state: AdamState, params: Sequence[Parameter], grads: Sequence[Optional[np.ndarray]], lr: float):
    """
    One bias-corrected ADAM update of every parameter:

        m ← β1·m + (1 − β1)·g,  v ← β2·v + (1 − β2)·g²
        p ← p − lr · (m / (1 − β1^t)) / (√(v / (1 − β2^t)) + ε)

    A None gradient counts as zero. Nothing is modified unless every gradient is finite.

    Args:
        state (AdamState): the optimizer state, updated in place
        params (Sequence[Parameter]): the parameters, updated in place
        grads (Sequence[Optional[np.ndarray]]): one gradient per parameter
        lr (float): the learning rate

    :raises NonFiniteGradientError: If a gradient holds NaN or Inf; the step is skipped.
    :raises ShapeError: If a gradient does not have its parameter's shape.
    """
    if len(params) != len(grads):
        raise ShapeError(f"adam_step got {len(params)} parameters but {len(grads)} gradients")
    resolved = []
    for param, grad in zip(params, grads):
        grad = np.zeros_like(param.data) if grad is None else np.asarray(grad)
        if grad.shape != param.shape:
            raise ShapeError(f"gradient of '{param.name}' has shape {grad.shape}, parameter has {param.shape}")
        if not np.all(np.isfinite(grad)):
            logging.error(f"ADAM step aborted: non-finite gradient for '{param.name}'")
            raise NonFiniteGradientError(param.name)
        resolved.append(grad)

    state._t += 1
    t = state._t
    b1, b2 = state._beta1, state._beta2
    correction1 = 1.0 - b1 ** t
    correction2 = 1.0 - b2 ** t
    for param, grad in zip(params, resolved):
        m = state._m.get(param.name)
        v = state._v.get(param.name)
        if m is None:
            m = np.zeros_like(param.data)
            v = np.zeros_like(param.data)
        m = b1 * m + (1.0 - b1) * grad
        v = b2 * v + (1.0 - b2) * grad * grad
        state._m[param.name] = m
        state._v[param.name] = v
        param.data = param.data - lr * (m / correction1) / (np.sqrt(v / correction2) + state._epsilon)


def clip_grad_norm(params: Sequence[Parameter], max_norm: float) -> float:
    """
    Rescale the accumulated gradients so that their global L2 norm is at most `max_norm`.

    Args:
        params (Sequence[Parameter]): the parameters whose gradients are clipped
        max_norm (float): the norm limit

    Returns:
        float: the global norm before clipping
    """
    grads = [p.grad for p in params if p.grad is not None]
    total = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))
    if total > max_norm:
        scale = max_norm / total
        for g in grads:
            g *= scale
    return total
