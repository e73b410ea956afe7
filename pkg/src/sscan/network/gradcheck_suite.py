"""
Finite-difference checks of every differentiable operation and of a tiny double-precision
SSCAN. `run_gradcheck_suite` is what `sscan gradcheck` executes.
"""
import logging
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from sscan.autodiff import (Tensor, add, check_gradient, concat_channels, conv2d, group_bands, merge_groups,
                            mse_loss, mul, pool_channel, pool_spatial, relu, sigmoid, tensor_sum)
from sscan.constants import GRADCHECK_STEP, GRADCHECK_TOLERANCE
from sscan.network.config import ModelConfig
from sscan.network.model import SSCANModel
from sscan.network.modules import SSAB, SSAN

# one checked input: (label, scalar function, the leaf it is differentiated against, coordinates to sample)
Case = Tuple[str, Callable[[Tensor], Tensor], Tensor, Optional[int]]

# network blocks contain thousands of ReLU units; a smaller step keeps perturbations from crossing their kinks
NETWORK_STEP = 1e-7
_NETWORK_OPERATIONS = ("sgcam", "ssab", "ssan", "sscan")


class GradcheckResult(BaseModel):
    """
    Outcome of one finite-difference check.

    Attributes:
        operation (str): the operation checked
        target (str): the input or parameter the gradient was taken against
        max_error (float): largest |analytic − numeric| / max(1, |analytic|)
        worst_index (Tuple[int, ...]): coordinate of the largest error
        passed (bool): max_error <= tolerance
    """
    operation: str
    target: str
    max_error: float
    worst_index: Tuple[int, ...]
    passed: bool

    def format_line(self) -> str:
        status = "ok" if self.passed else "FAIL"
        return f"{status:4} {self.operation}[{self.target}] max_error={self.max_error:.3e} at {self.worst_index}"


def tiny_model_config(seed: int = 0) -> ModelConfig:
    """The small double-precision SSCAN used for whole-network gradient checks."""
    return ModelConfig(bands=6, k=4, o=2, n_ssab=2, trunk_channels=8, group_channels=4, reduction=4, seed=seed)


def _leaf(rng: np.random.Generator, *shape: int) -> Tensor:
    return Tensor(rng.standard_normal(shape), requires_grad=True)


def _readout(rng: np.random.Generator, shape: Tuple[int, ...]) -> Callable[[Tensor], Tensor]:
    weights = Tensor(rng.standard_normal(shape))
    return lambda out: tensor_sum(mul(out, weights))


def _unary(op: Callable[[Tensor], Tensor], shape: Tuple[int, ...], out_shape: Tuple[int, ...]):
    def build(rng: np.random.Generator) -> List[Case]:
        x = _leaf(rng, *shape)
        readout = _readout(rng, out_shape)
        return [("x", lambda t: readout(op(t)), x, None)]
    return build


def _conv_cases(rng: np.random.Generator) -> List[Case]:
    x, w, b = _leaf(rng, 2, 3, 8, 8), _leaf(rng, 4, 3, 3, 3), _leaf(rng, 4)
    readout = _readout(rng, (2, 4, 8, 8))
    return [("input", lambda t: readout(conv2d(t, w, b, pad=1)), x, None),
            ("weight", lambda t: readout(conv2d(x, t, b, pad=1)), w, None),
            ("bias", lambda t: readout(conv2d(x, w, t, pad=1)), b, None)]


def _relu_cases(rng: np.random.Generator) -> List[Case]:
    data = rng.standard_normal((2, 3, 4, 4))
    # keep away from the kink
    data = np.where(np.abs(data) < 1e-3, 0.5, data)
    x = Tensor(data, requires_grad=True)
    readout = _readout(rng, (2, 3, 4, 4))
    return [("x", lambda t: readout(relu(t)), x, None)]


def _binary_cases(op: Callable[[Tensor, Tensor], Tensor], b_shape: Tuple[int, ...]):
    def build(rng: np.random.Generator) -> List[Case]:
        a, b = _leaf(rng, 2, 3, 4, 4), _leaf(rng, *b_shape)
        readout = _readout(rng, (2, 3, 4, 4))
        return [("a", lambda t: readout(op(t, b)), a, None), ("b", lambda t: readout(op(a, t)), b, None)]
    return build


def _concat_cases(rng: np.random.Generator) -> List[Case]:
    a, b = _leaf(rng, 2, 2, 4, 4), _leaf(rng, 2, 3, 4, 4)
    readout = _readout(rng, (2, 5, 4, 4))
    return [("a", lambda t: readout(concat_channels(t, b)), a, None),
            ("b", lambda t: readout(concat_channels(a, t)), b, None)]


def _mse_cases(rng: np.random.Generator) -> List[Case]:
    pred, target = _leaf(rng, 3, 2, 4, 4), Tensor(rng.standard_normal((3, 2, 4, 4)))
    return [("pred", lambda t: mse_loss(t, target, 3), pred, None)]


def _grouping_cases(rng: np.random.Generator) -> List[Case]:
    groups = [[0, 1, 2, 3], [2, 3, 4, 5], [3, 4, 5, 6]]
    x = _leaf(rng, 2, 7, 4, 4)
    readout = _readout(rng, (6, 4, 4, 4))
    return [("x", lambda t: readout(group_bands(t, groups)), x, None)]


def _merge_cases(rng: np.random.Generator) -> List[Case]:
    x = _leaf(rng, 6, 2, 4, 4)
    readout = _readout(rng, (2, 6, 4, 4))
    return [("x", lambda t: readout(merge_groups(t, 3)), x, None)]


def _randomize_reconstruction(model: SSCANModel, rng: np.random.Generator):
    # a zero reconstruction layer hides every upstream gradient
    weight = model.reconstruction.weight
    weight.data = 0.1 * rng.standard_normal(weight.shape)


def _sgcam_cases(rng: np.random.Generator) -> List[Case]:
    model = SSCANModel(tiny_model_config())
    g_i, g_next = _leaf(rng, 1, 4, 6, 6), _leaf(rng, 1, 4, 6, 6)
    readout = _readout(rng, (1, 4, 6, 6))
    return [("g_i", lambda t: readout(model.sgcam(t, g_next)), g_i, None),
            ("g_next", lambda t: readout(model.sgcam(g_i, t)), g_next, None)]


def _ssab_cases(rng: np.random.Generator) -> List[Case]:
    block = SSAB("check", 4, 1, 7, True, rng, np.dtype(np.float64))
    f = _leaf(rng, 1, 4, 6, 6)
    readout = _readout(rng, (1, 4, 6, 6))
    cases = [("input", lambda t: readout(block(t)), f, None)]
    for name, parameter in block.named_parameters():
        cases.append((name, lambda t: readout(block(f)), parameter, 6))
    return cases


def _ssan_cases(rng: np.random.Generator) -> List[Case]:
    network = SSAN("check", 2, 4, 1, 7, True, rng, np.dtype(np.float64))
    f = _leaf(rng, 1, 4, 6, 6)
    readout = _readout(rng, (1, 4, 6, 6))
    return [("input", lambda t: readout(network(t)), f, None)]


def _model_cases(rng: np.random.Generator) -> List[Case]:
    model = SSCANModel(tiny_model_config())
    _randomize_reconstruction(model, rng)
    x = Tensor(rng.uniform(size=(1, 6, 6, 6)), requires_grad=True)
    target = Tensor(rng.uniform(size=(1, 6, 6, 6)))
    cases = [("input", lambda t: mse_loss(model(t), target, 1), x, 12)]
    for name, parameter in model.named_parameters():
        cases.append((name, lambda t: mse_loss(model(x), target, 1), parameter, 3))
    return cases


GRADCHECK_OPERATIONS: Dict[str, Callable[[np.random.Generator], List[Case]]] = {
    "conv2d": _conv_cases,
    "relu": _relu_cases,
    "sigmoid": _unary(sigmoid, (2, 3, 4, 4), (2, 3, 4, 4)),
    "pool_spatial_max": _unary(lambda t: pool_spatial(t, "max"), (2, 3, 4, 4), (2, 3, 1, 1)),
    "pool_spatial_avg": _unary(lambda t: pool_spatial(t, "avg"), (2, 3, 4, 4), (2, 3, 1, 1)),
    "pool_channel_max": _unary(lambda t: pool_channel(t, "max"), (2, 3, 4, 4), (2, 1, 4, 4)),
    "pool_channel_avg": _unary(lambda t: pool_channel(t, "avg"), (2, 3, 4, 4), (2, 1, 4, 4)),
    "concat_channels": _concat_cases,
    "add": _binary_cases(add, (2, 3, 1, 1)),
    "mul": _binary_cases(mul, (2, 1, 4, 4)),
    "mse_loss": _mse_cases,
    "group_bands": _grouping_cases,
    "merge_groups": _merge_cases,
    "sgcam": _sgcam_cases,
    "ssab": _ssab_cases,
    "ssan": _ssan_cases,
    "sscan": _model_cases,
}


def run_gradcheck_suite(ops: Optional[Sequence[str]] = None, tolerance: float = GRADCHECK_TOLERANCE,
                        seed: int = 0, step: float = GRADCHECK_STEP) -> List[GradcheckResult]:
    """
    Compare analytic gradients with central finite differences for the selected operations.

    Args:
        ops (Optional[Sequence[str]]): operation names from GRADCHECK_OPERATIONS, all if None
        tolerance (float): largest accepted relative error
        seed (int): seed of the random inputs, weights and sampled coordinates
        step (float): the finite-difference step

    Returns:
        List[GradcheckResult]: one result per checked input or parameter
    """
    selected = list(GRADCHECK_OPERATIONS) if not ops else list(ops)
    unknown = [op for op in selected if op not in GRADCHECK_OPERATIONS]
    if unknown:
        raise ValueError(f"unknown gradcheck operation(s) {unknown}; choose from {list(GRADCHECK_OPERATIONS)}")

    results = []
    for index, op in enumerate(selected):
        rng = np.random.default_rng([seed, index])
        for target, f, x, max_coords in GRADCHECK_OPERATIONS[op](rng):
            case_step = min(step, NETWORK_STEP) if op in _NETWORK_OPERATIONS else step
            max_error, worst_index = check_gradient(f, x, case_step, max_coords=max_coords, seed=seed)
            result = GradcheckResult(operation=op, target=target, max_error=max_error, worst_index=worst_index,
                                     passed=bool(max_error <= tolerance))
            logging.debug(result.format_line())
            results.append(result)
    failed = [r for r in results if not r.passed]
    logging.info(f"gradcheck: {len(results) - len(failed)}/{len(results)} checks within {tolerance:g}")
    return results
